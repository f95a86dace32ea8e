//! Finite unions of closed intervals on a line.

use std::fmt;

/// A closed interval `[lo, hi]`; empty when `lo > hi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub lo: f64,
    pub hi: f64,
}

impl Interval {
    pub const EMPTY: Interval = Interval { lo: 1.0, hi: 0.0 };

    pub fn new(lo: f64, hi: f64) -> Self {
        Self { lo, hi }
    }

    pub fn is_empty(&self) -> bool {
        !(self.lo <= self.hi)
    }

    pub fn len(&self) -> f64 {
        if self.is_empty() {
            0.0
        } else {
            self.hi - self.lo
        }
    }

    pub fn contains(&self, x: f64) -> bool {
        self.lo <= x && x <= self.hi
    }

    pub fn mid(&self) -> f64 {
        0.5 * (self.lo + self.hi)
    }

    /// `[lo - r, hi + r]`.
    pub fn inflate(&self, r: f64) -> Self {
        Self { lo: self.lo - r, hi: self.hi + r }
    }
}

impl fmt::Display for Interval {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {}]", self.lo, self.hi)
    }
}

/// Sorted, pairwise disjoint closed intervals. Touching intervals are merged.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct IntervalUnion {
    parts: Vec<Interval>,
}

impl IntervalUnion {
    pub fn empty() -> Self {
        Self::default()
    }

    /// Merges arbitrary intervals; empty inputs are dropped.
    pub fn from_intervals(items: impl IntoIterator<Item = Interval>) -> Self {
        let mut v: Vec<Interval> = items.into_iter().filter(|i| !i.is_empty()).collect();
        v.sort_by(|a, b| a.lo.total_cmp(&b.lo).then(a.hi.total_cmp(&b.hi)));
        let mut parts: Vec<Interval> = Vec::with_capacity(v.len());
        for i in v {
            match parts.last_mut() {
                Some(last) if i.lo <= last.hi => last.hi = last.hi.max(i.hi),
                _ => parts.push(i),
            }
        }
        Self { parts }
    }

    pub fn components(&self) -> &[Interval] {
        &self.parts
    }

    pub fn is_empty(&self) -> bool {
        self.parts.is_empty()
    }

    /// Lebesgue measure.
    pub fn measure(&self) -> f64 {
        self.parts.iter().map(Interval::len).sum()
    }

    /// Length of the longest component.
    pub fn longest(&self) -> f64 {
        self.parts.iter().map(Interval::len).fold(0.0, f64::max)
    }

    pub fn contains_point(&self, x: f64) -> bool {
        let i = self.parts.partition_point(|c| c.hi < x);
        self.parts.get(i).is_some_and(|c| c.lo <= x)
    }

    /// Whether `j` is covered, with endpoints allowed to overshoot and gaps
    /// between consecutive components to be bridged by at most `tol`.
    pub fn contains_interval(&self, j: Interval, tol: f64) -> bool {
        if j.is_empty() {
            return true;
        }
        let i = self.parts.partition_point(|c| c.hi < j.lo - tol);
        let Some(first) = self.parts.get(i).filter(|c| c.lo <= j.lo + tol) else {
            return false;
        };
        // rounding can leave hairline gaps between pieces that should touch
        let mut reach = first.hi;
        for c in &self.parts[i + 1..] {
            if reach >= j.hi - tol || c.lo > reach + tol {
                break;
            }
            reach = reach.max(c.hi);
        }
        j.hi <= reach + tol
    }

    /// Number of grid boxes `[lo + k s, lo + (k+1) s]`, `s = (hi - lo) / boxes`,
    /// whose interior meets the union. A degenerate component counts the box
    /// containing it.
    pub fn cover_count(&self, lo: f64, hi: f64, boxes: u64) -> u64 {
        let s = (hi - lo) / boxes as f64;
        let mut count = 0u64;
        let mut next_free = 0u64;
        for c in &self.parts {
            let a = (((c.lo - lo) / s).floor().max(0.0) as u64).min(boxes - 1);
            let b = ((((c.hi - lo) / s).ceil() as i64 - 1).max(a as i64) as u64).min(boxes - 1);
            let a = a.max(next_free);
            if a <= b {
                count += b - a + 1;
                next_free = b + 1;
            }
        }
        count
    }

    /// Divides every endpoint by `s`. Used to map lattice units to lengths.
    pub fn divided_by(&self, s: f64) -> Self {
        Self { parts: self.parts.iter().map(|c| Interval::new(c.lo / s, c.hi / s)).collect() }
    }

    /// One `lo,hi` line per component.
    pub fn to_lines(&self) -> String {
        self.parts.iter().map(|c| format!("{},{}\n", c.lo, c.hi)).collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn measure_examples() {
        assert_eq!(IntervalUnion::empty().measure(), 0.0);
        let one = IntervalUnion::from_intervals([Interval::new(0.0, 1.0)]);
        assert_eq!(one.measure(), 1.0);
        let touching =
            IntervalUnion::from_intervals([Interval::new(0.5, 1.0), Interval::new(0.0, 0.5)]);
        assert_eq!(touching.components().len(), 1);
        assert_eq!(touching.measure(), 1.0);
    }

    #[test]
    fn containment() {
        let u = IntervalUnion::from_intervals([
            Interval::new(0.0, 0.3),
            Interval::new(0.5, 1.0),
        ]);
        assert!(u.contains_interval(Interval::new(0.6, 0.9), 0.0));
        assert!(!u.contains_interval(Interval::new(0.2, 0.6), 0.0));
        assert!(u.contains_point(0.3));
        assert!(!u.contains_point(0.4));
        assert!(u.contains_interval(Interval::new(0.5 - 1e-13, 1.0), 1e-12));
        let hairline = IntervalUnion::from_intervals([Interval::new(0.0, 0.25), Interval::new(0.25 + 1e-16, 1.0)]);
        assert!(hairline.contains_interval(Interval::new(0.25 + 1e-16, 0.8), 1e-12));
        assert!(hairline.contains_interval(Interval::new(0.1, 0.8), 1e-12));
        assert!(!hairline.contains_interval(Interval::new(0.1, 0.8), 0.0));
    }

    #[test]
    fn cover_counts() {
        let u = IntervalUnion::from_intervals([Interval::new(0.0, 1.0)]);
        assert_eq!(u.cover_count(0.0, 1.0, 27), 27);
        let v = IntervalUnion::from_intervals([Interval::new(0.0, 0.25), Interval::new(0.5, 0.75)]);
        assert_eq!(v.cover_count(0.0, 1.0, 4), 2);
        assert_eq!(v.cover_count(0.0, 1.0, 8), 4);
    }

    proptest! {
        #[test]
        fn merge_is_permutation_invariant(mut raw in prop::collection::vec((0.0f64..10.0, 0.0f64..1.0), 0..40), seed in any::<u64>()) {
            let items: Vec<Interval> = raw.iter().map(|&(a, l)| Interval::new(a, a + l)).collect();
            let u = IntervalUnion::from_intervals(items.clone());
            // deterministic shuffle
            let n = raw.len();
            for i in 0..n {
                let j = (crate::rng::mix64(seed ^ i as u64) % n as u64) as usize;
                raw.swap(i, j);
            }
            let shuffled: Vec<Interval> = raw.iter().map(|&(a, l)| Interval::new(a, a + l)).collect();
            let v = IntervalUnion::from_intervals(shuffled);
            prop_assert_eq!(&u, &v);
            let parts = u.components();
            for w in parts.windows(2) {
                prop_assert!(w[0].hi < w[1].lo);
            }
            prop_assert!(u.measure() <= items.iter().map(|i| i.len()).sum::<f64>() + 1e-9);
            for i in &items {
                prop_assert!(u.contains_interval(*i, 0.0));
            }
        }
    }
}
