//! Arithmetic differences of one-dimensional percolations: cyclic
//! cross-correlation profiles, the interval and positive-measure criteria,
//! higher-order collapsing and empirical difference sets.

use std::fmt;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::spec::RetentionSpec;
use crate::tree::RealizationTree;

/// Indexing convention recorded in every profile.
pub const GAMMA_CONVENTION: &str =
    "gamma_k = sum_i p_i q_((i-k) mod M), residues in 1..M, k = M is the zero shift";

/// Cyclic cross-correlation coefficients `gamma_1..gamma_M` and their product.
#[derive(Debug, Clone, PartialEq)]
pub struct CorrelationProfile {
    pub gammas: Vec<f64>,
    pub product: f64,
    pub convention: &'static str,
}

impl CorrelationProfile {
    /// `gamma_M`, the unshifted coefficient `sum_i p_i q_i`.
    pub fn zero_shift(&self) -> f64 {
        *self.gammas.last().unwrap()
    }

    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        for (k, g) in self.gammas.iter().enumerate() {
            s += &format!("gamma_{}={}\n", k + 1, g);
        }
        s += &format!("gamma_product={}\n", self.product);
        s += &format!("gamma_convention={}\n", self.convention);
        s
    }
}

/// `gamma_k = sum_{i=1}^{M} p_i q_{i-k mod M}` for `k = 1..M`.
pub fn gamma_profile(p: &[f64], q: &[f64]) -> Result<CorrelationProfile> {
    if p.len() != q.len() {
        return Err(Error::WrongLength { expected: p.len(), got: q.len() });
    }
    let m = p.len();
    if m == 0 {
        return Err(Error::InvalidParameter("empty probability vectors".into()));
    }
    let gammas: Vec<f64> = (1..=m)
        .map(|k| (0..m).map(|i| p[i] * q[(i + m * k - k) % m]).sum())
        .collect();
    let product = gammas.iter().product();
    Ok(CorrelationProfile { gammas, product, convention: GAMMA_CONVENTION })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DifferenceVerdict {
    /// Every gamma exceeds one: the difference contains an interval a.s.
    IntervalAS,
    /// Two cyclically consecutive gammas are below one: no interval a.s.
    NoIntervalAS,
    Inconclusive,
}

impl fmt::Display for DifferenceVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::IntervalAS => "IntervalAS",
            Self::NoIntervalAS => "NoIntervalAS",
            Self::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceDecision {
    pub verdict: DifferenceVerdict,
    pub profile: CorrelationProfile,
    /// 1-based indices of the gammas driving the verdict: all of them for
    /// `IntervalAS`, the consecutive pair for `NoIntervalAS`, the ones not
    /// above one for `Inconclusive`.
    pub witness: Vec<usize>,
    /// Collapse order the profile was computed at.
    pub order: u32,
    /// Set for orders above one: collapsed constructions are correlated.
    pub correlated_caveat: bool,
}

impl DifferenceDecision {
    pub fn to_kv(&self) -> String {
        let w: Vec<String> = self.witness.iter().map(|k| k.to_string()).collect();
        format!(
            "interval_verdict={}\ninterval_witness={}\ncollapse_order={}\ncorrelated_caveat={}\n",
            self.verdict,
            w.join(","),
            self.order,
            self.correlated_caveat
        )
    }
}

fn decide(profile: CorrelationProfile, order: u32) -> DifferenceDecision {
    let g = &profile.gammas;
    let m = g.len();
    let (verdict, witness) = if g.iter().all(|&x| x > 1.0) {
        (DifferenceVerdict::IntervalAS, (1..=m).collect())
    } else if let Some(i) = (0..m).find(|&i| g[i] < 1.0 && g[(i + 1) % m] < 1.0) {
        (DifferenceVerdict::NoIntervalAS, vec![i + 1, (i + 1) % m + 1])
    } else {
        let below = (0..m).filter(|&i| g[i] <= 1.0).map(|i| i + 1).collect();
        (DifferenceVerdict::Inconclusive, below)
    };
    DifferenceDecision { verdict, profile, witness, order, correlated_caveat: order > 1 }
}

/// Interval criterion for `E2 - E1` with `E1 ~ p`, `E2 ~ q`, at order one.
pub fn difference_interval_decision(p: &[f64], q: &[f64]) -> Result<DifferenceDecision> {
    Ok(decide(gamma_profile(p, q)?, 1))
}

/// Applies the interval criterion to collapsed specs of increasing order
/// until a verdict is reached or `max_order` is exhausted.
pub fn difference_interval_decision_collapsed(
    p: &RetentionSpec,
    q: &RetentionSpec,
    max_order: u32,
    cap: usize,
) -> Result<DifferenceDecision> {
    let mut last = None;
    for order in 1..=max_order.max(1) {
        let pc = collapse_spec(p, order, cap)?;
        let qc = collapse_spec(q, order, cap)?;
        let d = decide(gamma_profile(&pc, &qc)?, order);
        if d.verdict != DifferenceVerdict::Inconclusive {
            return Ok(d);
        }
        last = Some(d);
    }
    Ok(last.unwrap())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MeasureVerdict {
    PositiveMeasureAS,
    Inconclusive,
}

impl fmt::Display for MeasureVerdict {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Self::PositiveMeasureAS => "PositiveMeasureAS",
            Self::Inconclusive => "Inconclusive",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct MeasureDecision {
    pub verdict: MeasureVerdict,
    pub gamma_product: f64,
}

/// Positive-measure criterion for the difference of two independent copies
/// of `p`: positive measure a.s. when the gamma product exceeds one.
pub fn difference_measure_decision(p: &[f64]) -> Result<MeasureDecision> {
    let profile = gamma_profile(p, p)?;
    let verdict = if profile.product > 1.0 {
        MeasureVerdict::PositiveMeasureAS
    } else {
        MeasureVerdict::Inconclusive
    };
    Ok(MeasureDecision { verdict, gamma_product: profile.product })
}

/// Default cap on the collapsed alphabet size, `3^8`.
pub const DEFAULT_COLLAPSE_CAP: usize = 6561;

/// Probabilities of the order-`n` collapsed construction: the entry for word
/// `(i_1..i_n)` (lexicographic) is `prod_k p_{i_k}`. Expectation-level only.
pub fn collapse_spec(spec: &RetentionSpec, n: u32, cap: usize) -> Result<Vec<f64>> {
    if n == 0 {
        return Err(Error::InvalidParameter("collapse order must be at least 1".into()));
    }
    let size = (spec.alphabet() as usize)
        .checked_pow(n)
        .filter(|&s| s <= cap)
        .ok_or(Error::CollapseTooLarge {
            size: (spec.alphabet() as f64).powi(n as i32) as usize,
            cap,
        })?;
    let mut out = vec![1.0];
    for _ in 0..n {
        out = out
            .iter()
            .flat_map(|&a| spec.probs().iter().map(move |&b| a * b))
            .collect();
    }
    debug_assert_eq!(out.len(), size);
    Ok(out)
}

/// Level-`n` approximation of `E2 - E1`.
#[derive(Debug, Clone, PartialEq)]
pub struct DifferenceSet {
    pub union: IntervalUnion,
    pub measure: f64,
    pub longest: f64,
}

/// Union over kept pairs `(I in E1_n, J in E2_n)` of `J - I`.
pub fn empirical_difference_set(
    e1: &RealizationTree,
    e2: &RealizationTree,
    n: u32,
) -> Result<DifferenceSet> {
    let a = e1.positions(n)?;
    let b = e2.positions(n)?;
    if e1.spec().base() != e2.spec().base() {
        return Err(Error::Mismatch("bases differ".into()));
    }
    let scale = (e1.spec().base() as f64).powi(n as i32);
    let side = scale as i64;
    // J - I = [b - a - 1, b - a + 1] in lattice units; record the offsets b - a.
    let mut hit = vec![false; 2 * side as usize + 1];
    for &x in a {
        for &y in b {
            hit[(y as i64 - x as i64 + side) as usize] = true;
        }
    }
    let units = IntervalUnion::from_intervals(hit.iter().enumerate().filter(|(_, &h)| h).map(
        |(k, _)| {
            let off = k as i64 - side;
            Interval::new((off - 1) as f64, (off + 1) as f64)
        },
    ));
    let union = units.divided_by(scale);
    Ok(DifferenceSet { measure: union.measure(), longest: union.longest(), union })
}

#[cfg(test)]
mod tests {
    use super::*;

    const PALIS: [f64; 3] = [0.52, 0.5, 0.72];

    #[test]
    fn palis_profile() {
        let g = gamma_profile(&PALIS, &PALIS).unwrap();
        assert!((g.product - 1.0272).abs() < 1e-4);
        assert!((g.zero_shift() - 1.0388).abs() < 1e-12);
        // shifted coefficients by direct evaluation: 0.52*0.72 + 0.5*0.52 + 0.72*0.5
        assert!((g.gammas[0] - 0.9944).abs() < 1e-12);
        assert!((g.gammas[1] - 0.9944).abs() < 1e-12);
    }

    #[test]
    fn all_ones_profile() {
        let g = gamma_profile(&[1.0; 3], &[1.0; 3]).unwrap();
        assert_eq!(g.gammas, vec![3.0; 3]);
        assert_eq!(g.product, 27.0);
        assert!(gamma_profile(&[1.0; 3], &[1.0; 2]).is_err());
    }

    #[test]
    fn interval_decisions() {
        let d = difference_interval_decision(&[0.9; 3], &[0.9; 3]).unwrap();
        assert_eq!(d.verdict, DifferenceVerdict::IntervalAS);
        for g in &d.profile.gammas {
            assert!((g - 2.43).abs() < 1e-12);
        }
        let d = difference_interval_decision(&PALIS, &PALIS).unwrap();
        assert_eq!(d.verdict, DifferenceVerdict::NoIntervalAS);
        assert_eq!(d.witness, vec![1, 2]);
        let d = difference_interval_decision(&[1.0, 0.1, 0.5], &[1.0, 0.5, 0.1]).unwrap();
        let expect = [0.45, 1.01, 1.10];
        for (g, e) in d.profile.gammas.iter().zip(expect) {
            assert!((g - e).abs() < 1e-12, "{g} vs {e}");
        }
        assert_eq!(d.verdict, DifferenceVerdict::Inconclusive);
        assert_eq!(d.witness, vec![1]);
    }

    #[test]
    fn wrap_around_pair_counts_as_consecutive() {
        // gamma_3 and gamma_1 below one, gamma_2 above
        let g = CorrelationProfile { gammas: vec![0.9, 1.5, 0.8], product: 1.08, convention: GAMMA_CONVENTION };
        let d = decide(g, 1);
        assert_eq!(d.verdict, DifferenceVerdict::NoIntervalAS);
        assert_eq!(d.witness, vec![3, 1]);
    }

    #[test]
    fn measure_decisions() {
        let d = difference_measure_decision(&PALIS).unwrap();
        assert_eq!(d.verdict, MeasureVerdict::PositiveMeasureAS);
        let d = difference_measure_decision(&[0.9; 3]).unwrap();
        assert!((d.gamma_product - 2.43f64.powi(3)).abs() < 1e-9);
        assert!((d.gamma_product - 14.35).abs() < 0.01);
        assert_eq!(difference_measure_decision(&[0.1; 3]).unwrap().verdict, MeasureVerdict::Inconclusive);
    }

    #[test]
    fn collapse_examples() {
        let s = RetentionSpec::new(1, 2, vec![0.3, 0.7]).unwrap();
        assert_eq!(collapse_spec(&s, 1, 100).unwrap(), vec![0.3, 0.7]);
        let c = collapse_spec(&s, 2, 100).unwrap();
        let expect = [0.09, 0.21, 0.21, 0.49];
        for (a, b) in c.iter().zip(expect) {
            assert!((a - b).abs() < 1e-15);
        }
        let t = RetentionSpec::homogeneous(1, 3, 0.5).unwrap();
        assert_eq!(collapse_spec(&t, 2, 100).unwrap().len(), 9);
        assert!(matches!(collapse_spec(&t, 9, DEFAULT_COLLAPSE_CAP), Err(Error::CollapseTooLarge { .. })));
        assert!(collapse_spec(&t, 8, DEFAULT_COLLAPSE_CAP).is_ok());
    }

    #[test]
    fn collapsed_decision_carries_caveat() {
        let p = RetentionSpec::new(1, 3, vec![1.0, 0.1, 0.5]).unwrap();
        let q = RetentionSpec::new(1, 3, vec![1.0, 0.5, 0.1]).unwrap();
        let d = difference_interval_decision_collapsed(&p, &q, 3, DEFAULT_COLLAPSE_CAP).unwrap();
        assert_eq!(d.correlated_caveat, d.order > 1);
        let palis = RetentionSpec::new(1, 3, PALIS.to_vec()).unwrap();
        let d = difference_interval_decision_collapsed(&palis, &palis, 3, DEFAULT_COLLAPSE_CAP).unwrap();
        assert_eq!(d.order, 1);
        assert!(!d.correlated_caveat);
    }

    #[test]
    fn difference_set_examples() {
        let full = RetentionSpec::homogeneous(1, 3, 1.0).unwrap();
        let t = RealizationTree::sample(&full, 3, 0);
        let d = empirical_difference_set(&t, &t, 3).unwrap();
        assert_eq!(d.union.components(), &[Interval::new(-1.0, 1.0)]);
        assert_eq!(d.measure, 2.0);

        let empty = RetentionSpec::homogeneous(1, 3, 0.0).unwrap();
        let e = RealizationTree::sample(&empty, 3, 0);
        assert!(empirical_difference_set(&t, &e, 3).unwrap().union.is_empty());
        assert!(empirical_difference_set(&e, &t, 2).unwrap().union.is_empty());

        let half = RetentionSpec::homogeneous(1, 3, 0.5).unwrap();
        let first = RealizationTree::from_predicate(&half, 4, 0, |w| w.symbols().iter().all(|&s| s == 0));
        let d = empirical_difference_set(&first, &first, 4).unwrap();
        let h = 1.0 / 81.0;
        assert_eq!(d.union.components().len(), 1);
        assert!((d.union.components()[0].lo + h).abs() < 1e-15);
        assert!((d.union.components()[0].hi - h).abs() < 1e-15);
        assert!((d.measure - 2.0 * h).abs() < 1e-15);

        let plane = RetentionSpec::homogeneous(2, 3, 0.5).unwrap();
        let p2 = RealizationTree::sample(&plane, 1, 0);
        assert!(matches!(empirical_difference_set(&p2, &t, 1), Err(Error::WrongDimension { .. })));
    }
}
