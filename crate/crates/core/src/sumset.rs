//! Weighted sums `sum_i b_i E^i` of independent one-dimensional
//! realizations: product conditions, level-`n` approximations, hyperplane
//! slices of the product and dependency classes among the sliced cells.

use std::collections::HashMap;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::mc;
use crate::rng;
use crate::spec::RetentionSpec;
use crate::tree::RealizationTree;

/// Factors, weights and working depth of a weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SumsetConfig {
    specs: Vec<RetentionSpec>,
    weights: Vec<f64>,
    depth: u32,
}

impl SumsetConfig {
    pub fn new(specs: Vec<RetentionSpec>, weights: Vec<f64>, depth: u32) -> Result<Self> {
        if specs.len() < 2 {
            return Err(Error::InvalidParameter("need at least two factors".into()));
        }
        if weights.len() != specs.len() {
            return Err(Error::WrongLength { expected: specs.len(), got: weights.len() });
        }
        let base = specs[0].base();
        for s in &specs {
            if s.dim() != 1 {
                return Err(Error::WrongDimension { expected: 1, got: s.dim() });
            }
            if s.base() != base {
                return Err(Error::Mismatch(format!("base {} vs {}", s.base(), base)));
            }
        }
        if weights.iter().any(|&b| b == 0.0 || !b.is_finite()) {
            return Err(Error::InvalidParameter("weights must be finite and nonzero".into()));
        }
        Ok(Self { specs, weights, depth })
    }

    /// Homogeneous factors `E^h(1, M, p_i)`.
    pub fn homogeneous(base: u32, probs: &[f64], weights: Vec<f64>, depth: u32) -> Result<Self> {
        let specs = probs
            .iter()
            .map(|&p| RetentionSpec::homogeneous(1, base, p))
            .collect::<Result<Vec<_>>>()?;
        Self::new(specs, weights, depth)
    }

    pub fn specs(&self) -> &[RetentionSpec] {
        &self.specs
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn depth(&self) -> u32 {
        self.depth
    }

    pub fn base(&self) -> u32 {
        self.specs[0].base()
    }

    pub fn dim(&self) -> usize {
        self.specs.len()
    }

    /// Per-factor retention level: the mean of the factor's probabilities
    /// (its common value for homogeneous factors).
    pub fn levels(&self) -> Vec<f64> {
        self.specs
            .iter()
            .map(|s| s.probs().iter().sum::<f64>() / s.alphabet() as f64)
            .collect()
    }

    /// Range `[sum min(0, b_i), sum max(0, b_i)]` of the weighted sum over
    /// the unit cube.
    pub fn range(&self) -> Interval {
        Interval::new(
            self.weights.iter().map(|&b| b.min(0.0)).sum(),
            self.weights.iter().map(|&b| b.max(0.0)).sum(),
        )
    }
}

/// Verdicts on the product of the factors.
#[derive(Debug, Clone, PartialEq)]
pub struct ProductVerdicts {
    /// `p = prod p_i`.
    pub product: f64,
    /// `M^(1-d)`.
    pub threshold: f64,
    /// `p > M^(1-d)`.
    pub cond1: bool,
    /// `(i, j, p_i p_j, p_i p_j < 1/M)` for every pair.
    pub pairs: Vec<(usize, usize, f64, bool)>,
    pub transparent: bool,
    /// `log_M(M^d p) - 1`: level-`n` product cells number `M^(n(1+tau))`.
    pub tau: f64,
    /// Reduced levels meeting both conditions, when `cond1` holds but some
    /// pair is not transparent (three or more factors only).
    pub suggestion: Option<Vec<f64>>,
}

impl ProductVerdicts {
    pub fn to_kv(&self) -> String {
        let mut s = format!(
            "product={}\nthreshold={}\ncond1={}\ntransparent={}\ntau={}\n",
            self.product, self.threshold, self.cond1, self.transparent, self.tau
        );
        for (i, j, v, ok) in &self.pairs {
            s += &format!("pair_{}_{}={} {}\n", i + 1, j + 1, v, if *ok { "transparent" } else { "opaque" });
        }
        if let Some(sug) = &self.suggestion {
            let v: Vec<String> = sug.iter().map(|x| x.to_string()).collect();
            s += &format!("suggested_levels={}\n", v.join(","));
        }
        s
    }
}

/// Evaluates `prod p_i > M^(1-d)` and pairwise transparency `p_i p_j < 1/M`.
///
/// The interval property is monotone in the probabilities, so when only
/// transparency fails the levels may be lowered: capping every level at the
/// largest `c` keeping the top two below `1/M` maximizes the product among
/// transparent reductions.
pub fn condition_check_product(config: &SumsetConfig) -> ProductVerdicts {
    let p = config.levels();
    let m = config.base() as f64;
    let d = p.len();
    let product: f64 = p.iter().product();
    let threshold = m.powi(1 - d as i32);
    let cond1 = product > threshold;
    let mut pairs = Vec::new();
    for i in 0..d {
        for j in i + 1..d {
            let v = p[i] * p[j];
            pairs.push((i, j, v, v < 1.0 / m));
        }
    }
    let transparent = pairs.iter().all(|x| x.3);
    let tau = (m.powi(d as i32) * product).ln() / m.ln() - 1.0;
    let suggestion = (cond1 && !transparent && d >= 3)
        .then(|| {
            let mut sorted = p.clone();
            sorted.sort_by(|a, b| b.total_cmp(a));
            let root = m.powf(-0.5);
            let cap = if sorted[1] >= root { root } else { sorted[0].min(1.0 / (m * sorted[1])) };
            let cap = cap * (1.0 - 1e-9);
            let q: Vec<f64> = p.iter().map(|&x| x.min(cap)).collect();
            (q.iter().product::<f64>() > threshold).then_some(q)
        })
        .flatten();
    ProductVerdicts { product, threshold, cond1, pairs, transparent, tau, suggestion }
}

fn check_trees(trees: &[RealizationTree], n: u32) -> Result<u32> {
    let first = trees.first().ok_or_else(|| Error::InvalidParameter("no factors".into()))?;
    let base = first.spec().base();
    for t in trees {
        if t.spec().dim() != 1 {
            return Err(Error::WrongDimension { expected: 1, got: t.spec().dim() });
        }
        if t.spec().base() != base {
            return Err(Error::Mismatch("factor bases differ".into()));
        }
        if n > t.depth() {
            return Err(Error::DepthExceeded { requested: n, depth: t.depth() });
        }
    }
    Ok(base)
}

/// Merged union of the kept level-`n` intervals of `tree`, scaled by `b`,
/// in lattice units.
fn scaled_units(tree: &RealizationTree, n: u32, b: f64) -> Result<IntervalUnion> {
    Ok(IntervalUnion::from_intervals(tree.positions(n)?.iter().map(|&k| {
        let (lo, hi) = (b * k as f64, b * (k + 1) as f64);
        Interval::new(lo.min(hi), lo.max(hi))
    })))
}

fn minkowski(a: &IntervalUnion, b: &IntervalUnion) -> IntervalUnion {
    IntervalUnion::from_intervals(a.components().iter().flat_map(|x| {
        b.components().iter().map(move |y| Interval::new(x.lo + y.lo, x.hi + y.hi))
    }))
}

/// Level-`n` approximation of a weighted sum.
#[derive(Debug, Clone, PartialEq)]
pub struct SumsetApproximation {
    pub union: IntervalUnion,
    pub measure: f64,
    pub longest: f64,
}

/// `sum_i b_i E^i_n`: the Minkowski sums are formed factor by factor on
/// merged unions in lattice units (exact for integer weights) and divided by
/// `M^n` once at the end.
pub fn sumset_approximation(trees: &[RealizationTree], weights: &[f64], n: u32) -> Result<SumsetApproximation> {
    let base = check_trees(trees, n)?;
    if weights.len() != trees.len() {
        return Err(Error::WrongLength { expected: trees.len(), got: weights.len() });
    }
    let mut acc = scaled_units(&trees[0], n, weights[0])?;
    for (t, &b) in trees.iter().zip(weights).skip(1) {
        if acc.is_empty() {
            break;
        }
        acc = minkowski(&acc, &scaled_units(t, n, b)?);
    }
    let union = acc.divided_by((base as f64).powi(n as i32));
    Ok(SumsetApproximation { measure: union.measure(), longest: union.longest(), union })
}

/// Number of tuples of kept level-`n` positions with each coordinate sum,
/// `out[K] = #{(k_1..k_d) : sum k_i = K}`.
fn sum_histogram(trees: &[RealizationTree], n: u32) -> Result<Vec<u64>> {
    let mut acc = vec![1u64];
    for t in trees {
        let side = (t.spec().base() as usize).pow(n);
        let mut h = vec![0u64; side];
        for &k in t.positions(n)? {
            h[k as usize] += 1;
        }
        let mut next = vec![0u64; acc.len() + side - 1];
        for (i, &a) in acc.iter().enumerate().filter(|x| *x.1 > 0) {
            for (j, &b) in h.iter().enumerate().filter(|x| *x.1 > 0) {
                next[i + j] += a * b;
            }
        }
        acc = next;
    }
    Ok(acc)
}

/// Kept product cells meeting `{sum x_i = a}` where `a = a_units M^-n`: a
/// cell with lower lattice corner `k` meets it iff
/// `sum k_i <= a_units <= sum k_i + d`.
pub fn hyperplane_cell_count_units(trees: &[RealizationTree], n: u32, a_units: f64) -> Result<u64> {
    check_trees(trees, n)?;
    let hist = sum_histogram(trees, n)?;
    let d = trees.len() as f64;
    Ok(hist
        .iter()
        .enumerate()
        .filter(|&(k, _)| k as f64 <= a_units && a_units <= k as f64 + d)
        .map(|(_, &c)| c)
        .sum())
}

/// [`hyperplane_cell_count_units`] for a real offset `a`.
pub fn hyperplane_cell_count(trees: &[RealizationTree], n: u32, a: f64) -> Result<u64> {
    let base = check_trees(trees, n)?;
    hyperplane_cell_count_units(trees, n, a * (base as f64).powi(n as i32))
}

/// The kept product cells (per-axis lattice positions) meeting the
/// hyperplane, by descent over the factors that prunes partial tuples whose
/// reachable coordinate sums miss `[a_units - d, a_units]`.
pub fn hyperplane_cells(trees: &[RealizationTree], n: u32, a_units: f64) -> Result<Vec<Vec<u64>>> {
    check_trees(trees, n)?;
    let d = trees.len();
    let pos: Vec<&[u64]> = trees.iter().map(|t| t.positions(n)).collect::<Result<_>>()?;
    // reachable sums of the remaining factors
    let mut rest_min = vec![0u64; d + 1];
    let mut rest_max = vec![0u64; d + 1];
    for i in (0..d).rev() {
        if pos[i].is_empty() {
            return Ok(Vec::new());
        }
        rest_min[i] = rest_min[i + 1] + pos[i].iter().min().unwrap();
        rest_max[i] = rest_max[i + 1] + pos[i].iter().max().unwrap();
    }
    let lo = a_units - d as f64;
    let hi = a_units;
    let mut out = Vec::new();
    let mut cur = Vec::with_capacity(d);
    fn go(
        i: usize,
        sum: u64,
        pos: &[&[u64]],
        rest_min: &[u64],
        rest_max: &[u64],
        lo: f64,
        hi: f64,
        cur: &mut Vec<u64>,
        out: &mut Vec<Vec<u64>>,
    ) {
        if ((sum + rest_max[i]) as f64) < lo || ((sum + rest_min[i]) as f64) > hi {
            return;
        }
        if i == pos.len() {
            out.push(cur.clone());
            return;
        }
        for &k in pos[i] {
            cur.push(k);
            go(i + 1, sum + k, pos, rest_min, rest_max, lo, hi, cur, out);
            cur.pop();
        }
    }
    go(0, 0, &pos, &rest_min, &rest_max, lo, hi, &mut cur, &mut out);
    Ok(out)
}

/// Greedy colouring (largest degree first) of the conflict graph in which
/// two cells conflict when they share a coordinate on some axis. Within a
/// class all coordinate words differ on every axis, so the retention events
/// of its cells are independent. Returns classes of indices into `cells`.
pub fn dependency_classes(cells: &[Vec<u64>]) -> Vec<Vec<usize>> {
    let n = cells.len();
    let d = cells.first().map_or(0, |c| c.len());
    let mut adj: Vec<Vec<usize>> = vec![Vec::new(); n];
    for axis in 0..d {
        let mut groups: HashMap<u64, Vec<usize>> = HashMap::new();
        for (i, c) in cells.iter().enumerate() {
            groups.entry(c[axis]).or_default().push(i);
        }
        for g in groups.values() {
            for &a in g {
                adj[a].extend(g.iter().copied().filter(|&b| b != a));
            }
        }
    }
    for a in &mut adj {
        a.sort_unstable();
        a.dedup();
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| adj[b].len().cmp(&adj[a].len()).then(a.cmp(&b)));
    let mut colour = vec![usize::MAX; n];
    let mut classes: Vec<Vec<usize>> = Vec::new();
    let mut used = Vec::new();
    for &v in &order {
        used.clear();
        used.extend(adj[v].iter().map(|&u| colour[u]).filter(|&c| c != usize::MAX));
        used.sort_unstable();
        used.dedup();
        let c = (0..).find(|c| used.binary_search(c).is_err()).unwrap();
        colour[v] = c;
        if c == classes.len() {
            classes.push(Vec::new());
        }
        classes[c].push(v);
    }
    for class in &mut classes {
        class.sort_unstable();
    }
    classes
}

/// Samples one realization per factor; factor `i` uses `sub_seed(seed, i)`.
pub fn sample_factors(config: &SumsetConfig, depth: u32, seed: u64) -> Vec<RealizationTree> {
    config
        .specs
        .iter()
        .enumerate()
        .map(|(i, s)| RealizationTree::sample(s, depth, rng::sub_seed(seed, i as u64)))
        .collect()
}

/// Per-depth frequency that `J` lies in the level-`n` approximation,
/// conditioned on every factor surviving to the deepest depth.
#[derive(Debug, Clone, PartialEq)]
pub struct SumTrial {
    pub depths: Vec<u32>,
    pub frequency: Vec<f64>,
    pub standard_error: Vec<f64>,
    pub conditioned_trials: usize,
    pub attempts: usize,
}

impl SumTrial {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,frequency,se\n");
        for i in 0..self.depths.len() {
            s += &format!("{},{},{}\n", self.depths[i], self.frequency[i], self.standard_error[i]);
        }
        s
    }
}

const CONTAINMENT_TOL: f64 = 1e-12;

pub fn sum_interval_trial(
    config: &SumsetConfig,
    j: Interval,
    depths: &[u32],
    trials: usize,
    seed: u64,
) -> Result<SumTrial> {
    let range = config.range();
    if j.is_empty() || j.lo < range.lo || j.hi > range.hi {
        return Err(Error::IntervalOutOfRange { lo: j.lo, hi: j.hi, min: range.lo, max: range.hi });
    }
    if depths.is_empty() {
        return Err(Error::InvalidParameter("no depths".into()));
    }
    let deepest = *depths.iter().max().unwrap();
    let cap = trials.saturating_mul(1000).max(1);
    let mut rows: Vec<Vec<bool>> = Vec::new();
    let mut attempts = 0;
    while rows.len() < trials && attempts < cap {
        let batch = (trials - rows.len()).max(8).min(cap - attempts);
        let start = attempts;
        let got = mc::run_trials(batch, seed, |t, _| -> Result<Option<Vec<bool>>> {
            let s = rng::trial_seed(seed, (start + t) as u64);
            let trees = sample_factors(config, deepest, s);
            if trees.iter().any(|t| t.count(deepest).unwrap_or(0) == 0) {
                return Ok(None);
            }
            depths
                .iter()
                .map(|&n| {
                    Ok(sumset_approximation(&trees, &config.weights, n)?
                        .union
                        .contains_interval(j, CONTAINMENT_TOL))
                })
                .collect::<Result<Vec<bool>>>()
                .map(Some)
        });
        attempts += batch;
        for r in got {
            if let Some(row) = r? {
                if rows.len() < trials {
                    rows.push(row);
                }
            }
        }
    }
    let mut frequency = Vec::new();
    let mut standard_error = Vec::new();
    for k in 0..depths.len() {
        let (f, se) = mc::frequency(rows.iter().filter(|r| r[k]).count(), rows.len());
        frequency.push(f);
        standard_error.push(se);
    }
    Ok(SumTrial { depths: depths.to_vec(), frequency, standard_error, conditioned_trials: rows.len(), attempts })
}

/// One row of a [`SumsetReport`].
#[derive(Debug, Clone, PartialEq)]
pub struct SumsetLevel {
    pub n: u32,
    pub union: IntervalUnion,
    pub measure: f64,
    pub longest: f64,
    /// Kept product cells at level `n`.
    pub cells: u64,
    /// Lattice hyperplane `a = k M^-n` meeting the most cells.
    pub best_k: u64,
    pub hyperplane_cells: u64,
    pub classes: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SumsetReport {
    pub verdicts: ProductVerdicts,
    pub levels: Vec<SumsetLevel>,
}

impl SumsetReport {
    /// Builds the per-depth rows for the given realizations. Hyperplanes are
    /// the unit-weight slices `sum x_i = k M^-n`.
    pub fn build(config: &SumsetConfig, trees: &[RealizationTree], depths: &[u32]) -> Result<Self> {
        let verdicts = condition_check_product(config);
        let mut levels = Vec::new();
        for &n in depths {
            let approx = sumset_approximation(trees, &config.weights, n)?;
            let hist = sum_histogram(trees, n)?;
            let cells: u64 = hist.iter().sum();
            let d = trees.len();
            let kmax = d as u64 * (config.base() as u64).pow(n);
            let mut best = (0u64, 0u64);
            for k in 0..=kmax {
                let c: u64 = (k.saturating_sub(d as u64)..=k)
                    .filter_map(|s| hist.get(s as usize))
                    .sum();
                if c > best.1 {
                    best = (k, c);
                }
            }
            let classes = if best.1 > 0 {
                dependency_classes(&hyperplane_cells(trees, n, best.0 as f64)?).len()
            } else {
                0
            };
            levels.push(SumsetLevel {
                n,
                measure: approx.measure,
                longest: approx.longest,
                union: approx.union,
                cells,
                best_k: best.0,
                hyperplane_cells: best.1,
                classes,
            });
        }
        Ok(Self { verdicts, levels })
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,k,hyperplane_cells,classes,cells,measure,longest\n");
        for l in &self.levels {
            s += &format!(
                "{},{},{},{},{},{},{}\n",
                l.n, l.best_k, l.hyperplane_cells, l.classes, l.cells, l.measure, l.longest
            );
        }
        s
    }
}
