//! Sampled realizations of the labelled M^d-ary tree.
//!
//! Only kept nodes are stored, level by level in breadth-first order, so memory
//! is proportional to the number of kept words. Children of node `k` at level
//! `m` occupy the contiguous range `child_start[k]..child_start[k + 1]` of
//! level `m + 1`, ordered by symbol.

use crate::error::{Error, Result};
use crate::rng;
use crate::spec::{CellIndex, RetentionSpec, Square};

#[derive(Debug, Clone, PartialEq, Default)]
struct Level {
    symbol: Vec<u32>,
    parent: Vec<u32>,
    key: Vec<u64>,
    /// `dim` lattice coordinates per node.
    coords: Vec<u64>,
    /// Offsets into the next level; filled once the next level is built.
    child_start: Vec<u32>,
}

impl Level {
    fn len(&self) -> usize {
        self.symbol.len()
    }
}

/// A realization sampled (or constructed) down to a finite depth.
#[derive(Debug, Clone, PartialEq)]
pub struct RealizationTree {
    spec: RetentionSpec,
    seed: u64,
    levels: Vec<Level>,
}

impl RealizationTree {
    /// Samples a realization to `depth` using the labels keyed by `seed`.
    pub fn sample(spec: &RetentionSpec, depth: u32, seed: u64) -> Self {
        let mut tree = Self::root_only(spec, seed);
        tree.deepen(depth);
        tree
    }

    /// Builds a tree whose kept words are decided by `keep`, which is only
    /// consulted for children of kept nodes. Further deepening samples.
    pub fn from_predicate(
        spec: &RetentionSpec,
        depth: u32,
        seed: u64,
        mut keep: impl FnMut(&CellIndex) -> bool,
    ) -> Self {
        let mut tree = Self::root_only(spec, seed);
        for _ in 0..depth {
            tree.push_level(|t, level, node, symbol, _| keep(&t.word(level, node).child(symbol)));
        }
        tree
    }

    /// Builds a tree from per-node child bitmasks, visited breadth-first.
    pub(crate) fn from_child_masks(
        spec: &RetentionSpec,
        depth: u32,
        seed: u64,
        mut mask_bit: impl FnMut() -> Result<bool>,
    ) -> Result<Self> {
        let mut tree = Self::root_only(spec, seed);
        let mut failure = None;
        for _ in 0..depth {
            tree.push_level(|_, _, _, _, _| match mask_bit() {
                Ok(b) => b,
                Err(e) => {
                    failure.get_or_insert(e);
                    false
                }
            });
            if let Some(e) = failure.take() {
                return Err(e);
            }
        }
        Ok(tree)
    }

    fn root_only(spec: &RetentionSpec, seed: u64) -> Self {
        let root = Level {
            symbol: vec![0],
            parent: vec![0],
            key: vec![rng::root_key(seed)],
            coords: vec![0; spec.dim() as usize],
            child_start: Vec::new(),
        };
        Self { spec: spec.clone(), seed, levels: vec![root] }
    }

    /// Extends the tree to `depth` by sampling; shallower requests are no-ops.
    /// The result equals sampling to `depth` directly.
    pub fn deepen(&mut self, depth: u32) {
        while self.depth() < depth {
            let spec = self.spec.clone();
            self.push_level(move |_, _, _, symbol, key| {
                rng::child_uniform(key, symbol) < spec.prob(symbol)
            });
        }
    }

    fn push_level(&mut self, mut keep: impl FnMut(&Self, u32, usize, u32, u64) -> bool) {
        let m = self.depth();
        let dim = self.spec.dim() as usize;
        let base = self.spec.base() as u64;
        let alphabet = self.spec.alphabet();
        let mut next = Level::default();
        let mut starts = Vec::with_capacity(self.levels[m as usize].len() + 1);
        for node in 0..self.levels[m as usize].len() {
            starts.push(next.len() as u32);
            let key = self.levels[m as usize].key[node];
            for symbol in 0..alphabet {
                if !keep(self, m, node, symbol, key) {
                    continue;
                }
                let parent_coords = &self.levels[m as usize].coords[node * dim..(node + 1) * dim];
                next.symbol.push(symbol);
                next.parent.push(node as u32);
                next.key.push(rng::child_key(key, symbol));
                for (axis, &c) in parent_coords.iter().enumerate() {
                    next.coords.push(c * base + self.spec.digit(symbol, axis as u32) as u64);
                }
            }
        }
        starts.push(next.len() as u32);
        self.levels[m as usize].child_start = starts;
        self.levels.push(next);
    }

    pub fn spec(&self) -> &RetentionSpec {
        &self.spec
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    /// Deepest sampled level.
    pub fn depth(&self) -> u32 {
        self.levels.len() as u32 - 1
    }

    fn check_level(&self, n: u32) -> Result<&Level> {
        self.levels
            .get(n as usize)
            .ok_or(Error::DepthExceeded { requested: n, depth: self.depth() })
    }

    /// Number of kept words of length `n`.
    pub fn count(&self, n: u32) -> Result<usize> {
        Ok(self.check_level(n)?.len())
    }

    /// Kept words of length `n`, in breadth-first (lexicographic) order.
    pub fn survival_set(&self, n: u32) -> Result<Vec<CellIndex>> {
        let level = self.check_level(n)?;
        Ok((0..level.len()).map(|k| self.word(n, k)).collect())
    }

    /// Lattice coordinates of the kept level-`n` cells, `dim` per cell.
    pub fn coords(&self, n: u32) -> Result<&[u64]> {
        Ok(&self.check_level(n)?.coords)
    }

    /// Planar squares of the kept level-`n` cells.
    pub fn squares(&self, n: u32) -> Result<Vec<Square>> {
        if self.spec.dim() != 2 {
            return Err(Error::WrongDimension { expected: 2, got: self.spec.dim() });
        }
        let base = self.spec.base();
        Ok(self
            .coords(n)?
            .chunks_exact(2)
            .map(|c| Square::from_coords(c[0], c[1], n, base))
            .collect())
    }

    /// 1-D lattice positions of kept level-`n` intervals.
    pub fn positions(&self, n: u32) -> Result<&[u64]> {
        if self.spec.dim() != 1 {
            return Err(Error::WrongDimension { expected: 1, got: self.spec.dim() });
        }
        self.coords(n)
    }

    /// Word of node `node` at level `level`.
    pub fn word(&self, level: u32, node: usize) -> CellIndex {
        let mut symbols = vec![0u32; level as usize];
        let mut k = node;
        for m in (1..=level as usize).rev() {
            symbols[m - 1] = self.levels[m].symbol[k];
            k = self.levels[m].parent[k] as usize;
        }
        CellIndex::new(symbols)
    }

    /// Index range (in level `level + 1`) of the children of `node`.
    pub fn children(&self, level: u32, node: usize) -> std::ops::Range<usize> {
        let starts = &self.levels[level as usize].child_start;
        if starts.is_empty() {
            return 0..0;
        }
        starts[node] as usize..starts[node + 1] as usize
    }

    /// Symbol of a node (meaningless for the root).
    pub fn symbol(&self, level: u32, node: usize) -> u32 {
        self.levels[level as usize].symbol[node]
    }

    /// Lattice coordinates of one node.
    pub fn node_coords(&self, level: u32, node: usize) -> &[u64] {
        let d = self.spec.dim() as usize;
        &self.levels[level as usize].coords[node * d..(node + 1) * d]
    }

    /// Whether the node addressed by `word` is kept.
    pub fn is_kept(&self, word: &CellIndex) -> Result<bool> {
        if word.level() > self.depth() {
            return Err(Error::DepthExceeded { requested: word.level(), depth: self.depth() });
        }
        Ok(self.find(word)?.is_some())
    }

    /// Node index of `word` at its level, if kept.
    pub fn find(&self, word: &CellIndex) -> Result<Option<usize>> {
        let mut node = 0usize;
        for (m, &s) in word.symbols().iter().enumerate() {
            if s >= self.spec.alphabet() {
                return Err(Error::SymbolOutOfRange { symbol: s, alphabet: self.spec.alphabet() });
            }
            if m as u32 >= self.depth() {
                return Err(Error::DepthExceeded { requested: word.level(), depth: self.depth() });
            }
            let range = self.children(m as u32, node);
            let next = &self.levels[m + 1].symbol[range.clone()];
            match next.binary_search(&s) {
                Ok(i) => node = range.start + i,
                Err(_) => return Ok(None),
            }
        }
        Ok(Some(node))
    }

    /// Child-kept flags of every kept node above the deepest level, breadth-first.
    pub(crate) fn child_masks(&self) -> impl Iterator<Item = bool> + '_ {
        let alphabet = self.spec.alphabet();
        (0..self.depth()).flat_map(move |m| {
            (0..self.levels[m as usize].len()).flat_map(move |node| {
                let range = self.children(m, node);
                let syms = &self.levels[m as usize + 1].symbol[range];
                let mut it = syms.iter().peekable();
                (0..alphabet).map(move |s| {
                    if it.peek() == Some(&&s) {
                        it.next();
                        true
                    } else {
                        false
                    }
                })
            })
        })
    }

    /// Whether the realization is nonempty at level `n`.
    pub fn survives_to(&self, n: u32) -> Result<bool> {
        Ok(self.count(n)? > 0)
    }

    /// Number of kept level-`n` nodes having at least one kept descendant at
    /// level `deep`: the covering number of `E_deep` by level-`n` cells.
    pub fn ancestor_count(&self, n: u32, deep: u32) -> Result<usize> {
        self.check_level(deep)?;
        if n > deep {
            return Err(Error::DepthExceeded { requested: n, depth: deep });
        }
        let mut alive: Vec<usize> = (0..self.levels[deep as usize].len()).collect();
        for m in (n + 1..=deep).rev() {
            let parents = &self.levels[m as usize].parent;
            let mut up: Vec<usize> = alive.iter().map(|&k| parents[k] as usize).collect();
            up.dedup();
            alive = up;
        }
        Ok(alive.len())
    }
}
