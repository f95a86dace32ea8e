//! Model parameters and M-adic cell geometry.
//!
//! Subcells of a cube are numbered lexicographically with the first axis
//! varying fastest: in the plane, 0-based symbol `j = M * row + col`, where
//! `col` indexes the x-axis and `row` the y-axis, both counted from the
//! origin. Symbol 0 is therefore the lower-left subcell.

use std::fmt;

use crate::error::{Error, Result};

/// The parameters (d, M, p) of a fractal percolation model.
#[derive(Debug, Clone, PartialEq)]
pub struct RetentionSpec {
    dim: u32,
    base: u32,
    probs: Vec<f64>,
}

impl RetentionSpec {
    /// Validates the parameters. `probs` must hold `base^dim` entries in [0, 1].
    pub fn new(dim: u32, base: u32, probs: Vec<f64>) -> Result<Self> {
        if dim == 0 {
            return Err(Error::InvalidParameter("dimension must be at least 1".into()));
        }
        if base < 2 {
            return Err(Error::InvalidParameter("base M must be at least 2".into()));
        }
        let expected = (base as usize)
            .checked_pow(dim)
            .filter(|&n| n <= u32::MAX as usize)
            .ok_or_else(|| Error::InvalidParameter("M^d too large".into()))?;
        if probs.len() != expected {
            return Err(Error::WrongLength { expected, got: probs.len() });
        }
        if let Some((index, &value)) =
            probs.iter().enumerate().find(|(_, p)| !(0.0..=1.0).contains(*p))
        {
            return Err(Error::ProbabilityOutOfRange { index, value });
        }
        Ok(Self { dim, base, probs })
    }

    /// All `M^d` entries equal to `p`.
    pub fn homogeneous(dim: u32, base: u32, p: f64) -> Result<Self> {
        let n = (base as usize).checked_pow(dim).unwrap_or(usize::MAX);
        if n > u32::MAX as usize {
            return Err(Error::InvalidParameter("M^d too large".into()));
        }
        Self::new(dim, base, vec![p; n])
    }

    /// Generalized random Sierpinski carpet: M = 3, centre cell `q`, the rest `p`.
    pub fn carpet(p: f64, q: f64) -> Result<Self> {
        let mut probs = vec![p; 9];
        probs[4] = q;
        Self::new(2, 3, probs)
    }

    pub fn dim(&self) -> u32 {
        self.dim
    }

    pub fn base(&self) -> u32 {
        self.base
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    /// Number of subcells per cell, `M^d`.
    pub fn alphabet(&self) -> u32 {
        self.probs.len() as u32
    }

    pub fn prob(&self, symbol: u32) -> f64 {
        self.probs[symbol as usize]
    }

    pub fn is_homogeneous(&self) -> bool {
        self.probs.windows(2).all(|w| w[0] == w[1])
    }

    /// Digit of `symbol` along `axis`.
    #[inline]
    pub fn digit(&self, symbol: u32, axis: u32) -> u32 {
        (symbol / self.base.pow(axis)) % self.base
    }

    /// Inverse of [`digit`](Self::digit): the symbol with the given per-axis digits.
    pub fn symbol_of(&self, digits: &[u32]) -> u32 {
        digits.iter().rev().fold(0, |acc, &g| acc * self.base + g)
    }

    /// Product of the probabilities along a word.
    pub fn word_prob(&self, word: &CellIndex) -> f64 {
        word.symbols().iter().map(|&s| self.prob(s)).product()
    }
}

/// A word addressing a level-n M-adic cell; the empty word is the unit cube.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord, Default)]
pub struct CellIndex(Vec<u32>);

impl CellIndex {
    pub fn root() -> Self {
        Self(Vec::new())
    }

    pub fn new(symbols: Vec<u32>) -> Self {
        Self(symbols)
    }

    pub fn symbols(&self) -> &[u32] {
        &self.0
    }

    pub fn level(&self) -> u32 {
        self.0.len() as u32
    }

    pub fn child(&self, symbol: u32) -> Self {
        let mut s = self.0.clone();
        s.push(symbol);
        Self(s)
    }

    pub fn parent(&self) -> Option<Self> {
        if self.0.is_empty() {
            None
        } else {
            Some(Self(self.0[..self.0.len() - 1].to_vec()))
        }
    }

    pub fn prefix(&self, len: usize) -> Self {
        Self(self.0[..len.min(self.0.len())].to_vec())
    }

    /// Integer lattice coordinates (one per axis) of the cell at its own level.
    pub fn coords(&self, spec: &RetentionSpec) -> Result<Vec<u64>> {
        let mut coords = vec![0u64; spec.dim() as usize];
        for &s in &self.0 {
            if s >= spec.alphabet() {
                return Err(Error::SymbolOutOfRange { symbol: s, alphabet: spec.alphabet() });
            }
            for (axis, c) in coords.iter_mut().enumerate() {
                *c = *c * spec.base() as u64 + spec.digit(s, axis as u32) as u64;
            }
        }
        Ok(coords)
    }

    /// Geometry of the addressed cell.
    pub fn cell(&self, spec: &RetentionSpec) -> Result<Cell> {
        let coords = self.coords(spec)?;
        Ok(Cell::from_coords(&coords, self.level(), spec.base()))
    }
}

impl fmt::Display for CellIndex {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.0.is_empty() {
            return write!(f, "()");
        }
        let parts: Vec<String> = self.0.iter().map(|s| s.to_string()).collect();
        write!(f, "({})", parts.join(","))
    }
}

/// An axis-aligned closed cube `lower + [0, side]^d`.
#[derive(Debug, Clone, PartialEq)]
pub struct Cell {
    pub lower: Vec<f64>,
    pub side: f64,
}

impl Cell {
    pub fn from_coords(coords: &[u64], level: u32, base: u32) -> Self {
        let scale = (base as f64).powi(level as i32);
        Self {
            lower: coords.iter().map(|&c| c as f64 / scale).collect(),
            side: 1.0 / scale,
        }
    }

    pub fn center(&self) -> Vec<f64> {
        self.lower.iter().map(|&x| x + 0.5 * self.side).collect()
    }

    pub fn upper(&self) -> Vec<f64> {
        self.lower.iter().map(|&x| x + self.side).collect()
    }

    /// All `2^d` corners.
    pub fn corners(&self) -> Vec<Vec<f64>> {
        let d = self.lower.len();
        (0..1usize << d)
            .map(|mask| {
                (0..d)
                    .map(|k| self.lower[k] + if mask >> k & 1 == 1 { self.side } else { 0.0 })
                    .collect()
            })
            .collect()
    }
}

/// A planar square, the common currency of the projection code.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Square {
    pub x: f64,
    pub y: f64,
    pub side: f64,
}

impl Square {
    pub const UNIT: Square = Square { x: 0.0, y: 0.0, side: 1.0 };

    pub fn from_coords(col: u64, row: u64, level: u32, base: u32) -> Self {
        let scale = (base as f64).powi(level as i32);
        Self { x: col as f64 / scale, y: row as f64 / scale, side: 1.0 / scale }
    }

    pub fn corners(&self) -> [[f64; 2]; 4] {
        let (x, y, h) = (self.x, self.y, self.side);
        [[x, y], [x + h, y], [x, y + h], [x + h, y + h]]
    }
}
