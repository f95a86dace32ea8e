//! Closed-form analytics of the retained-cell branching process and the
//! stage classification of planar models.

use std::fmt;

use crate::crossing::percolation_crossing;
use crate::error::{Error, Result};
use crate::mc;
use crate::spec::RetentionSpec;
use crate::tree::RealizationTree;

/// Expected number of offspring, `sum_i p_i`.
pub fn mean_offspring(spec: &RetentionSpec) -> f64 {
    spec.probs().iter().sum()
}

/// Exactly one entry equals 1 and all others are 0: the limit set is a point.
pub fn is_singleton(spec: &RetentionSpec) -> bool {
    spec.probs().iter().filter(|&&p| p == 1.0).count() == 1
        && spec.probs().iter().filter(|&&p| p == 0.0).count() == spec.probs().len() - 1
}

/// Offspring generating function `g(s) = prod_i (1 - p_i + p_i s)`.
pub fn offspring_pgf(spec: &RetentionSpec, s: f64) -> f64 {
    spec.probs().iter().map(|&p| 1.0 - p + p * s).product()
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Extinction {
    /// Probability that the limit set is empty.
    pub q: f64,
    /// The degenerate one-cell-per-level case.
    pub singleton: bool,
}

const BISECTION_TOL: f64 = 1e-12;

/// Smallest fixed point of the offspring generating function in [0, 1].
///
/// Found by bisection on `g(s) - s`, which is positive on `[0, q)` and
/// negative on `(q, 1)` when the mean exceeds one.
pub fn extinction_probability(spec: &RetentionSpec) -> Extinction {
    if is_singleton(spec) {
        return Extinction { q: 0.0, singleton: true };
    }
    if mean_offspring(spec) <= 1.0 {
        return Extinction { q: 1.0, singleton: false };
    }
    let h = |s: f64| offspring_pgf(spec, s) - s;
    if h(0.0) <= 0.0 {
        return Extinction { q: 0.0, singleton: false };
    }
    let mut hi = None;
    for k in 1..=60 {
        let s = 1.0 - 0.5f64.powi(k);
        if h(s) < 0.0 {
            hi = Some(s);
            break;
        }
    }
    let Some(mut hi) = hi else {
        // mean barely above one: the root is indistinguishable from 1
        return Extinction { q: 1.0, singleton: false };
    };
    let mut lo = 0.0;
    while hi - lo > BISECTION_TOL {
        let mid = 0.5 * (lo + hi);
        if h(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    Extinction { q: 0.5 * (lo + hi), singleton: false }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Dimension {
    /// `log(sum p) / log M`, or 0 when the set dies out almost surely.
    pub value: f64,
    pub extinct: bool,
}

/// Almost-sure Hausdorff (= box) dimension of the nonempty limit set.
pub fn dimension_formula(spec: &RetentionSpec) -> Dimension {
    let m = mean_offspring(spec);
    if m <= 1.0 {
        Dimension { value: 0.0, extinct: true }
    } else {
        Dimension { value: m.ln() / (spec.base() as f64).ln(), extinct: false }
    }
}

/// Expected number of retained squares in each column `r = 0..M`.
pub fn column_sums(spec: &RetentionSpec) -> Result<Vec<f64>> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    let m = spec.base();
    Ok((0..m).map(|col| (0..m).map(|row| spec.prob(row * m + col)).sum()).collect())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Stage {
    I,
    II,
    III,
    IvOrHigher,
    /// One cell per level with certainty; outside the I..VI taxonomy.
    Singleton,
}

impl fmt::Display for Stage {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let s = match self {
            Stage::I => "I",
            Stage::II => "II",
            Stage::III => "III",
            Stage::IvOrHigher => "IV-or-higher",
            Stage::Singleton => "singleton",
        };
        f.write_str(s)
    }
}

/// Monte Carlo estimate of the crossing probability at a fixed depth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingEstimate {
    pub depth: u32,
    pub trials: usize,
    pub frequency: f64,
    /// 95% normal-approximation half-width.
    pub half_width: f64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CrossingBudget {
    pub depth: u32,
    pub trials: usize,
    pub seed: u64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StageReport {
    pub stage: Stage,
    /// `min m_r > 1`: the x-projection contains an interval a.s. on survival.
    pub interval_flag: bool,
    pub crossing: Option<CrossingEstimate>,
    pub mean_offspring: f64,
    pub sum_m_log_m: f64,
    pub sum_log_m: f64,
    pub min_column_sum: f64,
    pub column_sums: Vec<f64>,
    pub critical_bracket: Option<(f64, f64)>,
}

impl StageReport {
    /// Flat `key=value` lines.
    pub fn to_kv(&self) -> String {
        let mut s = String::new();
        s += &format!("stage={}\n", self.stage);
        s += &format!("interval_flag={}\n", self.interval_flag);
        s += &format!("mean_offspring={}\n", self.mean_offspring);
        s += &format!("sum_m_log_m={}\n", self.sum_m_log_m);
        s += &format!("sum_log_m={}\n", self.sum_log_m);
        s += &format!("min_column_sum={}\n", self.min_column_sum);
        let cols: Vec<String> = self.column_sums.iter().map(|m| m.to_string()).collect();
        s += &format!("column_sums={}\n", cols.join(","));
        if let Some(c) = &self.crossing {
            s += &format!("crossing_depth={}\n", c.depth);
            s += &format!("crossing_trials={}\n", c.trials);
            s += &format!("crossing_frequency={}\n", c.frequency);
            s += &format!("crossing_half_width={}\n", c.half_width);
        }
        if let Some((lo, hi)) = self.critical_bracket {
            s += &format!("critical_bracket={lo},{hi}\n");
        }
        s
    }
}

/// `x log x` with the convention `0 log 0 = 0`.
fn xlogx(x: f64) -> f64 {
    if x == 0.0 {
        0.0
    } else {
        x * x.ln()
    }
}

/// Classifies a planar model into stage I, II, III or IV-or-higher using the
/// column-sum criteria (non-strict inequalities exactly as stated), and
/// optionally estimates the crossing probability.
pub fn classify_dm_stage(
    spec: &RetentionSpec,
    budget: Option<CrossingBudget>,
) -> Result<StageReport> {
    let cols = column_sums(spec)?;
    let mean = mean_offspring(spec);
    let sum_m_log_m: f64 = cols.iter().map(|&m| xlogx(m)).sum();
    let sum_log_m: f64 = cols.iter().map(|&m| m.ln()).sum();
    let min_col = cols.iter().cloned().fold(f64::INFINITY, f64::min);
    let stage = if is_singleton(spec) {
        Stage::Singleton
    } else if mean <= 1.0 {
        Stage::I
    } else if sum_m_log_m <= 0.0 {
        Stage::II
    } else if sum_log_m <= 0.0 {
        Stage::III
    } else {
        Stage::IvOrHigher
    };
    let crossing = budget.map(|b| crossing_probability(spec, b));
    Ok(StageReport {
        stage,
        interval_flag: min_col > 1.0,
        crossing,
        mean_offspring: mean,
        sum_m_log_m,
        sum_log_m,
        min_column_sum: min_col,
        column_sums: cols,
        critical_bracket: None,
    })
}

/// Fraction of realizations whose level-`depth` approximation crosses.
pub fn crossing_probability(spec: &RetentionSpec, budget: CrossingBudget) -> CrossingEstimate {
    let hits = mc::run_trials(budget.trials, budget.seed, |_, seed| {
        let tree = RealizationTree::sample(spec, budget.depth, seed);
        percolation_crossing(&tree, budget.depth).unwrap_or(false)
    })
    .into_iter()
    .filter(|&h| h)
    .count();
    let (f, se) = mc::frequency(hits, budget.trials);
    CrossingEstimate { depth: budget.depth, trials: budget.trials, frequency: f, half_width: 1.96 * se }
}

/// Brackets the homogeneous crossing threshold of base `m` by bisection on the
/// level-`depth` crossing frequency crossing one half. Finite-depth proxy only.
pub fn bracket_critical_probability(
    m: u32,
    budget: CrossingBudget,
    steps: u32,
) -> Result<(f64, f64)> {
    let (mut lo, mut hi) = (1.0 / m as f64, 1.0);
    for _ in 0..steps {
        let mid = 0.5 * (lo + hi);
        let spec = RetentionSpec::homogeneous(2, m, mid)?;
        if crossing_probability(&spec, budget).frequency >= 0.5 {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Ok((lo, hi))
}
