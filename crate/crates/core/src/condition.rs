//! Rigorous projection certificates along the anti-diagonal chart.
//!
//! For a direction `a`, `Pi_a` projects the unit square along `a` onto the
//! anti-diagonal from `(0,1)` (parameter 0) to `(1,0)` (parameter 1). The
//! shadow of word `w` of length `n` applied to a parameter set `I` is
//! `off_w + M^-n I`, where `off_w` is the image of the top-left corner of
//! `Q_w`; its inverse on the shadow is `psi_w(x) = (x - off_w) M^n`.

use std::fmt;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::Interval;
use crate::projection::Direction;
use crate::spec::{CellIndex, RetentionSpec};
use crate::tree::RealizationTree;

/// Slack used only when pruning descents, never in the final tests.
const PRUNE_SLACK: f64 = 1e-12;

fn check_planar(spec: &RetentionSpec) -> Result<()> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    Ok(())
}

/// Chart offset of the level-`n` cell with lattice coordinates `(col, row)`.
fn offset(dir: Direction, col: u64, row: u64, n: u32, base: u32) -> f64 {
    let (s, c) = dir.angle().sin_cos();
    let h = (base as f64).powi(-(n as i32));
    (c + (col as f64 * s - (row + 1) as f64 * c) * h) / (c + s)
}

/// `Pi_a(phi_w(I))`, a closed interval of length `M^-n |I|`.
pub fn shadow(word: &CellIndex, dir: Direction, spec: &RetentionSpec, i: Interval) -> Result<Interval> {
    check_planar(spec)?;
    let xy = word.coords(spec)?;
    let n = word.level();
    let h = (spec.base() as f64).powi(-(n as i32));
    if i.is_empty() {
        return Ok(Interval::EMPTY);
    }
    let off = offset(dir, xy[0], xy[1], n, spec.base());
    Ok(Interval::new(off + h * i.lo, off + h * i.hi))
}

/// A level-`n` word reached by a pruned descent.
#[derive(Debug, Clone, Copy)]
struct Leaf {
    off: f64,
    prob: f64,
}

/// Depth-first descent over words of length `n` with positive probability,
/// pruning a prefix as soon as `keep(full shadow of prefix)` is false.
fn descend(
    spec: &RetentionSpec,
    dir: Direction,
    n: u32,
    keep: &dyn Fn(Interval) -> bool,
    visit: &mut dyn FnMut(&[u32], Leaf),
) {
    let base = spec.base();
    fn go(
        spec: &RetentionSpec,
        dir: Direction,
        n: u32,
        keep: &dyn Fn(Interval) -> bool,
        visit: &mut dyn FnMut(&[u32], Leaf),
        word: &mut Vec<u32>,
        col: u64,
        row: u64,
        prob: f64,
        base: u32,
    ) {
        let level = word.len() as u32;
        let off = offset(dir, col, row, level, base);
        let h = (base as f64).powi(-(level as i32));
        if !keep(Interval::new(off, off + h)) {
            return;
        }
        if level == n {
            visit(word, Leaf { off, prob });
            return;
        }
        for sym in 0..spec.alphabet() {
            let p = spec.prob(sym);
            if p <= 0.0 {
                continue;
            }
            word.push(sym);
            let c = col * base as u64 + spec.digit(sym, 0) as u64;
            let r = row * base as u64 + spec.digit(sym, 1) as u64;
            go(spec, dir, n, keep, visit, word, c, r, prob * p, base);
            word.pop();
        }
    }
    go(spec, dir, n, keep, visit, &mut Vec::with_capacity(n as usize), 0, 0, 1.0, base);
}

/// Words `w` of length `n` with `p_w > 0` and `x` in `shadow(w, I)` (closed).
pub fn enumerate_d_n(
    x: f64,
    i: Interval,
    dir: Direction,
    n: u32,
    spec: &RetentionSpec,
) -> Result<Vec<CellIndex>> {
    check_planar(spec)?;
    let mut out = Vec::new();
    if i.is_empty() {
        return Ok(out);
    }
    let h = (spec.base() as f64).powi(-(n as i32));
    descend(
        spec,
        dir,
        n,
        &|s| s.lo - PRUNE_SLACK <= x && x <= s.hi + PRUNE_SLACK,
        &mut |w, leaf| {
            if leaf.off + h * i.lo <= x && x <= leaf.off + h * i.hi {
                out.push(CellIndex::new(w.to_vec()));
            }
        },
    );
    Ok(out)
}

/// `F^n 1_I (x)`: the total probability of `D_n(x, I)`.
pub fn iterate_indicator(x: f64, i: Interval, dir: Direction, n: u32, spec: &RetentionSpec) -> Result<f64> {
    Ok(enumerate_d_n(x, i, dir, n, spec)?.iter().map(|w| spec.word_prob(w)).sum())
}

/// Nonnegative piecewise-linear function on `[0, 1]` vanishing at both ends.
#[derive(Debug, Clone, PartialEq)]
pub struct GridFunction {
    xs: Vec<f64>,
    ys: Vec<f64>,
}

impl GridFunction {
    pub fn new(xs: Vec<f64>, ys: Vec<f64>) -> Result<Self> {
        let bad = |m: &str| Err(Error::InvalidFunction(m.into()));
        if xs.len() != ys.len() || xs.len() < 2 {
            return bad("need matching breakpoints and values, at least two");
        }
        if xs[0] != 0.0 || *xs.last().unwrap() != 1.0 {
            return bad("breakpoints must start at 0 and end at 1");
        }
        if xs.windows(2).any(|w| !(w[0] < w[1])) {
            return bad("breakpoints must be strictly increasing");
        }
        if ys.iter().any(|&y| !(y >= 0.0) || !y.is_finite()) {
            return bad("values must be finite and nonnegative");
        }
        if ys[0] != 0.0 || *ys.last().unwrap() != 0.0 {
            return bad("values must vanish at both endpoints");
        }
        Ok(Self { xs, ys })
    }

    /// Length of the chord of the unit square in direction `dir` through
    /// chart parameter `x`.
    pub fn chord(dir: Direction) -> Self {
        let (s, c) = dir.angle().sin_cos();
        let top = 1.0 / s.max(c);
        let a = s.min(c) / (c + s);
        let b = s.max(c) / (c + s);
        if b - a > 1e-12 {
            Self { xs: vec![0.0, a, b, 1.0], ys: vec![0.0, top, top, 0.0] }
        } else {
            Self { xs: vec![0.0, 0.5, 1.0], ys: vec![0.0, top, 0.0] }
        }
    }

    /// Tent of height `h` with its apex at `1/2`.
    pub fn tent(h: f64) -> Self {
        Self { xs: vec![0.0, 0.5, 1.0], ys: vec![0.0, h, 0.0] }
    }

    pub fn breakpoints(&self) -> &[f64] {
        &self.xs
    }

    pub fn values(&self) -> &[f64] {
        &self.ys
    }

    /// Value at `x`; zero outside `[0, 1]`.
    pub fn eval(&self, x: f64) -> f64 {
        if !(0.0..=1.0).contains(&x) {
            return 0.0;
        }
        let k = self.xs.partition_point(|&b| b <= x);
        if k == 0 {
            return self.ys[0];
        }
        if k == self.xs.len() {
            return *self.ys.last().unwrap();
        }
        let (x0, x1) = (self.xs[k - 1], self.xs[k]);
        let t = (x - x0) / (x1 - x0);
        self.ys[k - 1] + t * (self.ys[k] - self.ys[k - 1])
    }

    pub fn is_zero(&self) -> bool {
        self.ys.iter().all(|&y| y == 0.0)
    }

    /// `a f + b g` on the union of breakpoints.
    pub fn combine(&self, a: f64, other: &Self, b: f64) -> Self {
        let xs = merge_points(self.xs.iter().chain(&other.xs).copied());
        let ys = xs.iter().map(|&x| (a * self.eval(x) + b * other.eval(x)).max(0.0)).collect();
        Self { xs, ys }
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::from("x,f\n");
        for (x, y) in self.xs.iter().zip(&self.ys) {
            s += &format!("{x},{y}\n");
        }
        s
    }
}

fn merge_points(points: impl Iterator<Item = f64>) -> Vec<f64> {
    let mut xs: Vec<f64> = points.filter(|x| (0.0..=1.0).contains(x)).collect();
    xs.push(0.0);
    xs.push(1.0);
    xs.sort_by(f64::total_cmp);
    xs.dedup();
    xs
}

fn level_one_offsets(dir: Direction, spec: &RetentionSpec) -> Vec<(f64, f64)> {
    (0..spec.alphabet())
        .filter(|&i| spec.prob(i) > 0.0)
        .map(|i| {
            let off = offset(dir, spec.digit(i, 0) as u64, spec.digit(i, 1) as u64, 1, spec.base());
            (off, spec.prob(i))
        })
        .collect()
}

/// `F f(x) = sum_{i : x in Pi(Q_i)} p_i f(psi_i(x))` evaluated at one point.
pub fn apply_f_at(f: &GridFunction, dir: Direction, spec: &RetentionSpec, x: f64) -> Result<f64> {
    check_planar(spec)?;
    let m = spec.base() as f64;
    Ok(level_one_offsets(dir, spec)
        .iter()
        .filter(|&&(off, _)| off <= x && x <= off + 1.0 / m)
        .map(|&(off, p)| p * f.eval((x - off) * m))
        .sum())
}

/// `F f` as an exact piecewise-linear function: its breakpoints are the
/// level-one shadow endpoints and the preimages of the breakpoints of `f`.
pub fn apply_f(f: &GridFunction, dir: Direction, spec: &RetentionSpec) -> Result<GridFunction> {
    check_planar(spec)?;
    let m = spec.base() as f64;
    let offs = level_one_offsets(dir, spec);
    let xs = merge_points(
        offs.iter().flat_map(|&(off, _)| f.xs.iter().map(move |&b| off + b / m)),
    );
    let mut ys: Vec<f64> = xs
        .iter()
        .map(|&x| {
            offs.iter()
                .filter(|&&(off, _)| off <= x && x <= off + 1.0 / m)
                .map(|&(off, p)| p * f.eval((x - off) * m))
                .sum()
        })
        .collect();
    // both ends are zeros of every term; clear rounding noise
    ys[0] = 0.0;
    *ys.last_mut().unwrap() = 0.0;
    Ok(GridFunction { xs, ys })
}

/// The random operator `G f(x)` for the level-one kept cells of `tree`.
pub fn apply_g_at(f: &GridFunction, dir: Direction, tree: &RealizationTree, x: f64) -> Result<f64> {
    check_planar(tree.spec())?;
    if tree.depth() < 1 {
        return Err(Error::DepthExceeded { requested: 1, depth: 0 });
    }
    let m = tree.spec().base() as f64;
    let coords = tree.coords(1)?;
    Ok(coords
        .chunks_exact(2)
        .map(|c| offset(dir, c[0], c[1], 1, tree.spec().base()))
        .filter(|&off| off <= x && x <= off + 1.0 / m)
        .map(|off| f.eval((x - off) * m))
        .sum())
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ConditionB {
    /// `F f >= (1 + epsilon) f` with `epsilon > 0`.
    Certified { epsilon: f64 },
    /// The best ratio, attained at `at`, is not above one.
    NotExpanding { epsilon: f64, at: f64 },
    /// `f` vanishes at the interior point `at`.
    InvalidCandidate { at: f64 },
}

impl ConditionB {
    pub fn holds(&self) -> bool {
        matches!(self, Self::Certified { .. })
    }
}

impl fmt::Display for ConditionB {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Self::Certified { epsilon } => write!(f, "certified epsilon={epsilon}"),
            Self::NotExpanding { epsilon, at } => write!(f, "not-expanding epsilon={epsilon} at={at}"),
            Self::InvalidCandidate { at } => write!(f, "invalid-candidate zero-at={at}"),
        }
    }
}

/// Largest `epsilon` with `F f >= (1 + epsilon) f` on the interior.
///
/// Both functions are linear between consecutive points of the merged
/// breakpoint set, so the ratio is monotone there and its infimum is taken at
/// an interior breakpoint; the first and last segments pass through zero, so
/// the one-sided slope ratios at the ends equal the ratios at the first and
/// last interior breakpoints.
pub fn check_condition_b(dir: Direction, f: &GridFunction, spec: &RetentionSpec) -> Result<ConditionB> {
    if f.is_zero() {
        return Err(Error::InvalidFunction("candidate vanishes identically".into()));
    }
    let ff = apply_f(f, dir, spec)?;
    let xs = merge_points(f.xs.iter().chain(&ff.xs).copied());
    let mut worst = (f64::INFINITY, 0.0);
    for &x in &xs[1..xs.len() - 1] {
        let fx = f.eval(x);
        if fx <= 0.0 {
            return Ok(ConditionB::InvalidCandidate { at: x });
        }
        let ratio = ff.eval(x) / fx - 1.0;
        if ratio < worst.0 {
            worst = (ratio, x);
        }
    }
    Ok(if worst.0 > 0.0 {
        ConditionB::Certified { epsilon: worst.0 }
    } else {
        ConditionB::NotExpanding { epsilon: worst.0, at: worst.1 }
    })
}

/// Nested intervals, a level and the exact margin of Condition A.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ConditionAWitness {
    pub alpha: f64,
    pub i1: Interval,
    pub i2: Interval,
    pub r: u32,
    /// `min_{x in I2} sum_{w in D_r(x, I1)} p_w - 2`.
    pub margin: f64,
    /// A point of `I2` where the minimum is attained.
    pub argmin: f64,
}

impl ConditionAWitness {
    pub fn holds(&self) -> bool {
        self.margin >= 0.0
    }

    pub fn to_record(&self) -> String {
        format!(
            "alpha={} i1={},{} i2={},{} r={} margin={} argmin={}",
            self.alpha, self.i1.lo, self.i1.hi, self.i2.lo, self.i2.hi, self.r, self.margin, self.argmin
        )
    }
}

fn check_nesting(i1: Interval, i2: Interval) -> Result<()> {
    if i2.is_empty() || !(0.0 < i2.lo && i2.hi < 1.0) {
        return Err(Error::Nesting(format!("I2 = [{}, {}] not interior to [0, 1]", i2.lo, i2.hi)));
    }
    if !i1.is_empty() && !(i2.lo < i1.lo && i1.hi < i2.hi) {
        return Err(Error::Nesting(format!(
            "I1 = [{}, {}] not interior to I2 = [{}, {}]",
            i1.lo, i1.hi, i2.lo, i2.hi
        )));
    }
    Ok(())
}

/// Neumaier-compensated running sum.
#[derive(Default, Clone, Copy)]
struct Sum {
    s: f64,
    c: f64,
}

impl Sum {
    fn add(&mut self, x: f64) {
        let t = self.s + x;
        if self.s.abs() >= x.abs() {
            self.c += (self.s - t) + x;
        } else {
            self.c += (x - t) + self.s;
        }
        self.s = t;
    }

    fn value(&self) -> f64 {
        self.s + self.c
    }
}

/// Minimum of `x -> sum of weights of the closed intervals containing x`
/// over `window`, and a point attaining it.
///
/// The function is piecewise constant, and since every interval is closed its
/// value at a breakpoint is at least its value on either adjacent open piece;
/// the minimum over `window` is therefore the minimum over the open pieces
/// meeting it, each evaluated on its midpoint.
fn min_coverage(pieces: &[(f64, f64, f64)], window: Interval) -> (f64, f64) {
    let mut events: Vec<(f64, f64)> = Vec::with_capacity(2 * pieces.len());
    let mut points = vec![window.lo, window.hi];
    for &(lo, hi, w) in pieces {
        events.push((lo, w));
        events.push((hi, -w));
        for e in [lo, hi] {
            if window.lo < e && e < window.hi {
                points.push(e);
            }
        }
    }
    events.sort_by(|a, b| a.0.total_cmp(&b.0));
    points.sort_by(f64::total_cmp);
    points.dedup();
    let mut best = (f64::INFINITY, window.mid());
    let mut run = Sum::default();
    let mut e = 0;
    for k in 0..points.len().saturating_sub(1) {
        let (a, b) = (points[k], points[k + 1]);
        // intervals with lo <= a and hi > a cover (a, b) since b is the next
        // breakpoint
        while e < events.len() && events[e].0 <= a {
            run.add(events[e].1);
            e += 1;
        }
        let v = run.value();
        if v < best.0 {
            best = (v, 0.5 * (a + b));
        }
    }
    if points.len() == 1 {
        // degenerate window: a single point
        let x = points[0];
        let mut s = Sum::default();
        for &(lo, hi, w) in pieces {
            if lo <= x && x <= hi {
                s.add(w);
            }
        }
        return (s.value(), x);
    }
    // direct re-evaluation at the minimizing piece guards the running sum
    let mut s = Sum::default();
    for &(lo, hi, w) in pieces {
        if lo <= best.1 && best.1 <= hi {
            s.add(w);
        }
    }
    (best.0.min(s.value()), best.1)
}

fn level_pieces(dir: Direction, spec: &RetentionSpec, i1: Interval, window: Interval, r: u32) -> Vec<(f64, f64, f64)> {
    let h = (spec.base() as f64).powi(-(r as i32));
    let mut pieces = Vec::new();
    descend(
        spec,
        dir,
        r,
        &|s| s.hi + PRUNE_SLACK >= window.lo && s.lo - PRUNE_SLACK <= window.hi,
        &mut |_, leaf| {
            let lo = leaf.off + h * i1.lo;
            let hi = leaf.off + h * i1.hi;
            if hi >= window.lo && lo <= window.hi {
                pieces.push((lo, hi, leaf.prob));
            }
        },
    );
    pieces
}

/// Exact margin of Condition A for the given intervals and level.
pub fn check_condition_a(
    dir: Direction,
    i1: Interval,
    i2: Interval,
    r: u32,
    spec: &RetentionSpec,
) -> Result<ConditionAWitness> {
    check_planar(spec)?;
    check_nesting(i1, i2)?;
    if r == 0 {
        return Err(Error::InvalidParameter("level r must be positive".into()));
    }
    let base = ConditionAWitness { alpha: dir.angle(), i1, i2, r, margin: -2.0, argmin: i2.mid() };
    if i1.is_empty() {
        return Ok(base);
    }
    let (min, argmin) = min_coverage(&level_pieces(dir, spec, i1, i2, r), i2);
    Ok(ConditionAWitness { margin: min - 2.0, argmin, ..base })
}

/// Largest value of `F^r 1` over the whole chart; an upper bound for every
/// Condition A sum at level `r`.
fn max_full_coverage(dir: Direction, spec: &RetentionSpec, r: u32) -> f64 {
    let pieces = level_pieces(dir, spec, Interval::new(0.0, 1.0), Interval::new(0.0, 1.0), r);
    let mut events: Vec<(f64, f64)> = pieces.iter().flat_map(|&(lo, hi, w)| [(lo, w), (hi, -w)]).collect();
    // starts before ends at equal positions: closed intervals
    events.sort_by(|a, b| a.0.total_cmp(&b.0).then(b.1.total_cmp(&a.1)));
    let mut run = Sum::default();
    let mut best: f64 = 0.0;
    for (_, w) in events {
        run.add(w);
        best = best.max(run.value());
    }
    best
}

/// Search settings for [`search_condition_a`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SearchGrid {
    pub r_max: u32,
    /// Lattice of radii `k / resolution` around the chart centre.
    pub resolution: u32,
}

impl Default for SearchGrid {
    fn default() -> Self {
        Self { r_max: 6, resolution: 64 }
    }
}

fn centred(radius: f64) -> Interval {
    Interval::new(0.5 - radius, 0.5 + radius)
}

/// Scans levels `r = 1..=r_max` and centred pairs `I2 = [1/2 +- k/R]`,
/// `I1 = [1/2 +- (k-1)/R]` for increasing `k`, returning the first witness
/// with nonnegative margin.
pub fn search_condition_a(dir: Direction, spec: &RetentionSpec, grid: SearchGrid) -> Result<Option<ConditionAWitness>> {
    check_planar(spec)?;
    if grid.r_max == 0 || grid.resolution < 4 {
        return Err(Error::InvalidParameter("need r_max >= 1 and resolution >= 4".into()));
    }
    let total: f64 = spec.probs().iter().sum();
    let step = 1.0 / grid.resolution as f64;
    let ks: Vec<u32> = (1..grid.resolution.div_ceil(2)).filter(|&k| (k as f64 * step) < 0.5).collect();
    for r in 1..=grid.r_max {
        if total.powi(r as i32) < 2.0 || max_full_coverage(dir, spec, r) < 2.0 {
            continue;
        }
        let found = ks
            .par_iter()
            .map(|&k| {
                let i2 = centred(k as f64 * step);
                let i1 = centred((k - 1) as f64 * step);
                check_condition_a(dir, i1, i2, r, spec)
            })
            .find_first(|w| w.as_ref().map_or(true, |w| w.holds()));
        if let Some(w) = found {
            return w.map(Some);
        }
    }
    Ok(None)
}

/// A closed range of directions sharing one certificate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct RobustWitness {
    pub alpha_lo: f64,
    pub alpha_hi: f64,
    /// `B(I1, l)`, valid for every direction in the range.
    pub i1: Interval,
    pub i2: Interval,
    pub r: u32,
    /// Margins re-verified at both ends of the range.
    pub end_margins: [f64; 2],
}

impl RobustWitness {
    pub fn to_record(&self) -> String {
        format!(
            "{},{},{},{},{},{},{},{}",
            self.alpha_lo,
            self.alpha_hi,
            self.i1.lo,
            self.i1.hi,
            self.i2.lo,
            self.i2.hi,
            self.r,
            self.end_margins[0].min(self.end_margins[1])
        )
    }
}

/// Range `[a - l M^-r, a + l M^-r]` on which the enlarged witness
/// `(B(I1, l), I2, r)` holds.
///
/// Every shadow offset moves by at most `|b - a|` when the direction moves
/// from `a` to `b` (its derivative is `(X + Y - 1) / (1 + sin 2b)` for a
/// corner `(X, Y)` of the square), so a level-`r` shadow of `I1` at `a` is
/// contained in the shadow of `B(I1, l)` at `b` whenever `|b - a| <= l M^-r`.
/// Each word counted at `a` is counted at `b`, and the margin cannot drop.
pub fn robustness_radius(witness: &ConditionAWitness, shrink: f64, spec: &RetentionSpec) -> Result<RobustWitness> {
    if !witness.holds() {
        return Err(Error::InvalidParameter(format!("witness margin {} is negative", witness.margin)));
    }
    let gap = (witness.i1.lo - witness.i2.lo).min(witness.i2.hi - witness.i1.hi);
    if !(shrink >= 0.0) || shrink >= gap {
        return Err(Error::ShrinkTooLarge { shrink, gap });
    }
    let rad = shrink * (spec.base() as f64).powi(-(witness.r as i32));
    let eps = 1e-9;
    let lo = (witness.alpha - rad).max(eps);
    let hi = (witness.alpha + rad).min(std::f64::consts::FRAC_PI_2 - eps);
    let i1 = witness.i1.inflate(shrink);
    let mut end_margins = [0.0; 2];
    for (slot, beta) in end_margins.iter_mut().zip([lo, hi]) {
        let w = check_condition_a(Direction::new(beta)?, i1, witness.i2, witness.r, spec)?;
        *slot = w.margin;
    }
    Ok(RobustWitness { alpha_lo: lo, alpha_hi: hi, i1, i2: witness.i2, r: witness.r, end_margins })
}

/// Widens the gap between `I1` and `I2` one lattice step at a time, by
/// shrinking `I1` or growing `I2`, while the margin stays nonnegative.
fn widen_gap(dir: Direction, w: ConditionAWitness, spec: &RetentionSpec, grid: SearchGrid) -> Result<ConditionAWitness> {
    let step = 1.0 / grid.resolution as f64;
    let mut best = w;
    loop {
        let r1 = 0.5 - best.i1.lo;
        let r2 = best.i2.hi - 0.5;
        let mut moved = false;
        if r1 - step > 0.0 {
            let cand = check_condition_a(dir, centred(r1 - step), best.i2, best.r, spec)?;
            if cand.holds() {
                best = cand;
                moved = true;
            }
        }
        if r2 + step < 0.5 {
            let cand = check_condition_a(dir, best.i1, centred(r2 + step), best.r, spec)?;
            if cand.holds() {
                best = cand;
                moved = true;
            }
        }
        if !moved {
            return Ok(best);
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum DirectionCover {
    Covered { range: (f64, f64), pieces: Vec<RobustWitness> },
    Failed { range: (f64, f64), failed_at: f64, pieces: Vec<RobustWitness> },
}

impl DirectionCover {
    pub fn is_covered(&self) -> bool {
        matches!(self, Self::Covered { .. })
    }

    pub fn pieces(&self) -> &[RobustWitness] {
        match self {
            Self::Covered { pieces, .. } | Self::Failed { pieces, .. } => pieces,
        }
    }

    pub fn to_text(&self) -> String {
        let mut s = match self {
            Self::Covered { range, .. } => format!("# covered {} {}\n", range.0, range.1),
            Self::Failed { range, failed_at, .. } => {
                format!("# failed {} {} at {}\n", range.0, range.1, failed_at)
            }
        };
        s += "alpha_lo,alpha_hi,i1_lo,i1_hi,i2_lo,i2_hi,r,margin\n";
        for p in self.pieces() {
            s += &p.to_record();
            s.push('\n');
        }
        s
    }
}

const MAX_COVER_STEPS: usize = 100_000;

/// Greedy sweep of `[lo, hi]`: search a witness at the current angle, widen
/// it, take its robustness range, and continue from the right end.
pub fn certify_all_directions(spec: &RetentionSpec, lo: f64, hi: f64, grid: SearchGrid) -> Result<DirectionCover> {
    Direction::new(lo)?;
    Direction::new(hi)?;
    if !(lo < hi) {
        return Err(Error::InvalidParameter(format!("empty direction range [{lo}, {hi}]")));
    }
    let certify = |alpha: f64| -> Result<Option<RobustWitness>> {
        let dir = Direction::new(alpha)?;
        let Some(w) = search_condition_a(dir, spec, grid)? else { return Ok(None) };
        let w = widen_gap(dir, w, spec, grid)?;
        let gap = (w.i1.lo - w.i2.lo).min(w.i2.hi - w.i1.hi);
        let robust = robustness_radius(&w, 0.999 * gap, spec)?;
        Ok((robust.end_margins.iter().all(|&m| m >= 0.0)).then_some(robust))
    };
    let mut pieces: Vec<RobustWitness> = Vec::new();
    let mut alpha = lo;
    for _ in 0..MAX_COVER_STEPS {
        let Some(piece) = certify(alpha)? else {
            return Ok(DirectionCover::Failed { range: (lo, hi), failed_at: alpha, pieces });
        };
        if let Some(prev) = pieces.last() {
            if piece.alpha_lo > prev.alpha_hi {
                // a jump left a gap: restart from the covered edge
                let edge = prev.alpha_hi;
                let Some(p) = certify(edge)? else {
                    return Ok(DirectionCover::Failed { range: (lo, hi), failed_at: edge, pieces });
                };
                pieces.push(p);
                if p.alpha_hi >= hi {
                    return Ok(DirectionCover::Covered { range: (lo, hi), pieces });
                }
                alpha = p.alpha_hi + (p.alpha_hi - p.alpha_lo) / 2.0;
                if p.alpha_hi <= edge {
                    return Ok(DirectionCover::Failed { range: (lo, hi), failed_at: edge, pieces });
                }
                continue;
            }
        }
        pieces.push(piece);
        if piece.alpha_hi >= hi {
            return Ok(DirectionCover::Covered { range: (lo, hi), pieces });
        }
        if piece.alpha_hi <= alpha {
            return Ok(DirectionCover::Failed { range: (lo, hi), failed_at: alpha, pieces });
        }
        alpha = (piece.alpha_hi + (piece.alpha_hi - piece.alpha_lo) / 2.0).min(hi);
    }
    Ok(DirectionCover::Failed { range: (lo, hi), failed_at: alpha, pieces })
}
