//! Products of one-dimensional realizations.

use crate::error::{Error, Result};
use crate::spec::{CellIndex, RetentionSpec};
use crate::tree::RealizationTree;

/// Tensor-product retention probabilities of one-dimensional factors.
///
/// The entry for per-axis digits `(u_1, ..., u_d)` is `prod_k a^(k)_{u_k}`,
/// stored at symbol `sum_k u_k M^k` (first axis fastest).
pub fn product_spec(factors: &[RetentionSpec]) -> Result<RetentionSpec> {
    let first = factors
        .first()
        .ok_or_else(|| Error::InvalidParameter("no factors".into()))?;
    let base = first.base();
    for f in factors {
        if f.dim() != 1 {
            return Err(Error::WrongDimension { expected: 1, got: f.dim() });
        }
        if f.base() != base {
            return Err(Error::Mismatch(format!("base {} vs {}", f.base(), base)));
        }
    }
    let d = factors.len() as u32;
    let n = (base as usize).pow(d);
    let probs = (0..n as u32)
        .map(|j| {
            factors
                .iter()
                .enumerate()
                .map(|(axis, f)| f.prob((j / base.pow(axis as u32)) % base))
                .product()
        })
        .collect();
    RetentionSpec::new(d, base, probs)
}

/// `E^1 x ... x E^d` built from independent one-dimensional realizations.
///
/// A product cell is kept iff each of its coordinate words is kept in the
/// corresponding factor, so cells sharing a coordinate word are correlated.
#[derive(Debug, Clone)]
pub struct ProductRealization {
    factors: Vec<RealizationTree>,
    spec: RetentionSpec,
}

impl ProductRealization {
    pub fn new(factors: Vec<RealizationTree>) -> Result<Self> {
        let specs: Vec<RetentionSpec> = factors.iter().map(|t| t.spec().clone()).collect();
        let spec = product_spec(&specs)?;
        let depth = factors[0].depth();
        if factors.iter().any(|t| t.depth() != depth) {
            return Err(Error::Mismatch("factor depths differ".into()));
        }
        Ok(Self { factors, spec })
    }

    pub fn factors(&self) -> &[RealizationTree] {
        &self.factors
    }

    /// The product retention spec (same one-cell marginals).
    pub fn spec(&self) -> &RetentionSpec {
        &self.spec
    }

    pub fn depth(&self) -> u32 {
        self.factors[0].depth()
    }

    /// Splits a d-dimensional word into its per-axis one-dimensional words.
    pub fn coordinate_words(&self, word: &CellIndex) -> Result<Vec<CellIndex>> {
        let base = self.spec.base();
        let alphabet = self.spec.alphabet();
        (0..self.factors.len() as u32)
            .map(|axis| {
                word.symbols()
                    .iter()
                    .map(|&s| {
                        if s >= alphabet {
                            Err(Error::SymbolOutOfRange { symbol: s, alphabet })
                        } else {
                            Ok((s / base.pow(axis)) % base)
                        }
                    })
                    .collect::<Result<Vec<u32>>>()
                    .map(CellIndex::new)
            })
            .collect()
    }

    pub fn is_kept(&self, word: &CellIndex) -> Result<bool> {
        let words = self.coordinate_words(word)?;
        for (tree, w) in self.factors.iter().zip(&words) {
            if !tree.is_kept(w)? {
                return Ok(false);
            }
        }
        Ok(true)
    }

    /// Lattice coordinates (one per axis) of all kept level-`n` product cells.
    pub fn cells(&self, n: u32) -> Result<Vec<Vec<u64>>> {
        let mut out: Vec<Vec<u64>> = vec![Vec::new()];
        for tree in &self.factors {
            let pos = tree.positions(n)?;
            out = out
                .into_iter()
                .flat_map(|prefix| {
                    pos.iter().map(move |&c| {
                        let mut v = prefix.clone();
                        v.push(c);
                        v
                    })
                })
                .collect();
        }
        Ok(out)
    }
}
