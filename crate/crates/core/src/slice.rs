//! Line slices of planar realizations: how many kept level-`n` squares a
//! line meets, and the maximum over lines whose direction stays at least
//! `eps` away from both axes.
//!
//! Squares are closed, so a line through a shared corner meets every square
//! incident to it.

use std::f64::consts::FRAC_PI_4;

use crate::error::{Error, Result};
use crate::mc::{self, LineFit};
use crate::projection::{box_dimension_estimate, projection_box_counts, Direction, ProjectionKind};
use crate::spec::RetentionSpec;
use crate::tree::RealizationTree;

/// A line in the plane.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Line {
    /// Through two distinct lattice points of level `level`, `p / M^level`
    /// and `q / M^level`. Incidence tests are exact integer arithmetic.
    Through { level: u32, p: [i64; 2], q: [i64; 2] },
    /// Through the lattice point `p / M^level` with the given slope.
    Pivot { level: u32, p: [i64; 2], slope: f64 },
    /// `a x + b y = c M^-level`; exact like `Through`.
    Normal { level: u32, a: i64, b: i64, c: i64 },
    /// The graph `y = y0 + (y1 - y0) x`.
    Graph { y0: f64, y1: f64 },
}

impl Line {
    /// Sign-carrying value at the lattice point `(i, j) / M^n`: zero on the
    /// line, opposite signs on opposite sides.
    fn side(&self, i: i64, j: i64, n: u32, base: u32) -> f64 {
        match *self {
            Line::Through { level, p, q } => {
                let (dx, dy) = ((q[0] - p[0]) as i128, (q[1] - p[1]) as i128);
                let m = base as i128;
                let (i, j, px, py) = if n >= level {
                    let s = m.pow(n - level);
                    (i as i128, j as i128, p[0] as i128 * s, p[1] as i128 * s)
                } else {
                    let s = m.pow(level - n);
                    (i as i128 * s, j as i128 * s, p[0] as i128, p[1] as i128)
                };
                let v = dy * (i - px) - dx * (j - py);
                v.signum() as f64
            }
            Line::Pivot { level, p, slope } => {
                let m = base as i128;
                let (ux, uy) = if n >= level {
                    let s = m.pow(n - level);
                    (i as i128 - p[0] as i128 * s, j as i128 - p[1] as i128 * s)
                } else {
                    let s = m.pow(level - n);
                    (i as i128 * s - p[0] as i128, j as i128 * s - p[1] as i128)
                };
                if ux == 0 {
                    uy.signum() as f64
                } else {
                    uy as f64 - slope * ux as f64
                }
            }
            Line::Normal { level, a, b, c } => {
                let m = base as i128;
                let v = if n >= level {
                    a as i128 * i as i128 + b as i128 * j as i128 - c as i128 * m.pow(n - level)
                } else {
                    (a as i128 * i as i128 + b as i128 * j as i128) * m.pow(level - n) - c as i128
                };
                v.signum() as f64
            }
            Line::Graph { y0, y1 } => {
                let h = (base as f64).powi(-(n as i32));
                let (x, y) = (i as f64 * h, j as f64 * h);
                y - y0 - (y1 - y0) * x
            }
        }
    }

    /// Whether the closed level-`n` square with lower-left lattice corner
    /// `(i, j)` meets the line.
    pub fn meets_cell(&self, i: i64, j: i64, n: u32, base: u32) -> bool {
        let v = [
            self.side(i, j, n, base),
            self.side(i + 1, j, n, base),
            self.side(i, j + 1, n, base),
            self.side(i + 1, j + 1, n, base),
        ];
        let lo = v.iter().copied().fold(f64::INFINITY, f64::min);
        let hi = v.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        lo <= 0.0 && 0.0 <= hi
    }

    /// Slope, or infinity for vertical lines.
    pub fn slope(&self) -> f64 {
        match *self {
            Line::Through { p, q, .. } => (q[1] - p[1]) as f64 / (q[0] - p[0]) as f64,
            Line::Pivot { slope, .. } => slope,
            Line::Normal { a, b, .. } => -(a as f64) / b as f64,
            Line::Graph { y0, y1 } => y1 - y0,
        }
    }

    /// Values at `x = 0` and `x = 1` (non-vertical lines).
    pub fn graph(&self, base: u32) -> (f64, f64) {
        match *self {
            Line::Through { level, p, .. } | Line::Pivot { level, p, .. } => {
                let h = (base as f64).powi(-(level as i32));
                let s = self.slope();
                let y0 = p[1] as f64 * h - s * p[0] as f64 * h;
                (y0, y0 + s)
            }
            Line::Normal { level, a, b, c } => {
                let h = (base as f64).powi(-(level as i32));
                let y0 = c as f64 * h / b as f64;
                (y0, y0 - a as f64 / b as f64)
            }
            Line::Graph { y0, y1 } => (y0, y1),
        }
    }
}

/// Whether a slope is inside the cone of directions at least `eps` from both axes.
pub fn in_cone(slope: f64, eps: f64) -> bool {
    let a = slope.abs();
    a.is_finite() && a >= eps.tan() * (1.0 - 1e-12) && a <= (1.0 / eps.tan()) * (1.0 + 1e-12)
}

fn check_planar(tree: &RealizationTree) -> Result<()> {
    if tree.spec().dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: tree.spec().dim() });
    }
    Ok(())
}

/// Number of kept level-`n` squares meeting `line`, by descent that prunes
/// every subtree whose square misses it.
pub fn count_slice(tree: &RealizationTree, n: u32, line: &Line) -> Result<usize> {
    check_planar(tree)?;
    if n > tree.depth() {
        return Err(Error::DepthExceeded { requested: n, depth: tree.depth() });
    }
    let base = tree.spec().base();
    let mut count = 0;
    let mut stack = vec![(0u32, 0usize)];
    while let Some((level, node)) = stack.pop() {
        let c = tree.node_coords(level, node);
        if !line.meets_cell(c[0] as i64, c[1] as i64, level, base) {
            continue;
        }
        if level == n {
            count += 1;
        } else {
            stack.extend(tree.children(level, node).map(|k| (level + 1, k)));
        }
    }
    Ok(count)
}

/// Best line of slope `+1` or `-1` and its count.
///
/// A closed cell `(X, Y)` meets `y - x = t` iff `t` lies in
/// `[Y - X - 1, Y - X + 1]` (lattice units), so the best `t` is an integer
/// `k` and the count is the number of cells with `Y - X` in `{k-1, k, k+1}`;
/// likewise `x + y = k` meets cells with `X + Y` in `{k-2, k-1, k}`.
pub fn best_diagonal_count(tree: &RealizationTree, n: u32) -> Result<(usize, Line)> {
    check_planar(tree)?;
    let coords = tree.coords(n)?;
    let side = (tree.spec().base() as i64).pow(n);
    let width = (2 * side + 3) as usize;
    let mut diff = vec![0usize; width];
    let mut sum = vec![0usize; width];
    for c in coords.chunks_exact(2) {
        let (x, y) = (c[0] as i64, c[1] as i64);
        diff[(y - x + side + 1) as usize] += 1;
        sum[(x + y) as usize] += 1;
    }
    let mut best = (0, Line::Through { level: n, p: [0, 0], q: [1, 1] });
    for k in -side..=side {
        let idx = (k + side + 1) as usize;
        let c = diff[idx - 1] + diff[idx] + diff[idx + 1];
        if c > best.0 {
            best = (c, Line::Through { level: n, p: [0, k], q: [1, k + 1] });
        }
    }
    for k in 0..=2 * side {
        let c: usize = (0..3).filter_map(|d| (k - d >= 0).then(|| sum[(k - d) as usize])).sum();
        if c > best.0 {
            best = (c, Line::Through { level: n, p: [0, k], q: [1, k - 1] });
        }
    }
    Ok(best)
}

/// Best line of slope `p / q` (`q > 0`) over `cells`: every cell meets the
/// lines `p x - q y = k` for `k` in an integer interval of lattice units, so
/// a sweep over `k` is exact.
fn best_at_slope(cells: &[[i64; 2]], n: u32, p: i64, q: i64) -> (usize, Line) {
    let lo_off = [0, p, -q, p - q].into_iter().min().unwrap();
    let hi_off = [0, p, -q, p - q].into_iter().max().unwrap();
    let mut events: Vec<(i64, i32)> = Vec::with_capacity(2 * cells.len());
    for &[x, y] in cells {
        let v = p * x - q * y;
        events.push((v + lo_off, 0));
        events.push((v + hi_off, 1));
    }
    events.sort_unstable();
    let (mut run, mut best, mut at) = (0usize, 0usize, 0i64);
    for (k, kind) in events {
        if kind == 0 {
            run += 1;
            if run > best {
                best = run;
                at = k;
            }
        } else {
            run -= 1;
        }
    }
    (best, Line::Normal { level: n, a: p, b: -q, c: at })
}

/// Small rational slopes `+-a/b`, `1 <= a, b <= 8` in lowest terms, inside the cone.
fn probe_slopes(eps: f64) -> Vec<(i64, i64)> {
    fn gcd(a: i64, b: i64) -> i64 {
        if b == 0 { a } else { gcd(b, a % b) }
    }
    let mut out = Vec::new();
    for a in 1..=8i64 {
        for b in 1..=8i64 {
            if gcd(a, b) == 1 && in_cone(a as f64 / b as f64, eps) {
                out.push((a, b));
                out.push((-a, b));
            }
        }
    }
    out
}

/// Lines through two corners of the given cells with slope in the cone,
/// plus lines through each corner with the four boundary slopes.
fn corner_candidates(cells: &[[i64; 2]], n: u32, eps: f64) -> Vec<Line> {
    let mut corners: Vec<[i64; 2]> = cells
        .iter()
        .flat_map(|&[i, j]| [[i, j], [i + 1, j], [i, j + 1], [i + 1, j + 1]])
        .collect();
    corners.sort_unstable();
    corners.dedup();
    let (t, ct) = (eps.tan(), 1.0 / eps.tan());
    let mut out = Vec::new();
    for (a, &p) in corners.iter().enumerate() {
        for slope in [t, ct, -t, -ct] {
            out.push(Line::Pivot { level: n, p, slope });
        }
        for &q in &corners[a + 1..] {
            if q[0] != p[0] && in_cone((q[1] - p[1]) as f64 / (q[0] - p[0]) as f64, eps) {
                out.push(Line::Through { level: n, p, q });
            }
        }
    }
    out
}

/// An endpoint of a slope interval: exact rational `num / den` (`den > 0`)
/// when it comes from a corner, or a cone boundary value.
#[derive(Debug, Clone, Copy)]
struct SlopeEnd {
    value: f64,
    ratio: Option<(i64, i64)>,
}

impl SlopeEnd {
    fn rational(num: i64, den: i64) -> Self {
        let (num, den) = if den < 0 { (-num, -den) } else { (num, den) };
        Self { value: num as f64 / den as f64, ratio: Some((num, den)) }
    }

    fn boundary(value: f64) -> Self {
        Self { value, ratio: None }
    }
}

/// Slopes of the non-vertical lines through the lattice point `p` that meet
/// the closed unit cell at `q`: `None` when `p` is a corner of the cell (all
/// slopes), otherwise a possibly unbounded interval.
fn slope_interval(p: [i64; 2], q: [i64; 2]) -> Option<(Option<SlopeEnd>, Option<SlopeEnd>)> {
    let xs = [q[0], q[0] + 1];
    let ys = [q[1], q[1] + 1];
    if xs.contains(&p[0]) && ys.contains(&p[1]) {
        return None;
    }
    let mut ends: Vec<SlopeEnd> = Vec::with_capacity(4);
    for &x in &xs {
        for &y in &ys {
            if x != p[0] {
                ends.push(SlopeEnd::rational(y - p[1], x - p[0]));
            }
        }
    }
    let lo = ends.iter().copied().min_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    let hi = ends.iter().copied().max_by(|a, b| a.value.total_cmp(&b.value)).unwrap();
    if ends.len() == 4 {
        return Some((Some(lo), Some(hi)));
    }
    // the cell's edge lies on the vertical through p: near-vertical lines
    // meet it, and the interval is a ray towards the matching infinity
    let right = xs[1] > p[0] && xs[0] >= p[0];
    let above = q[1] >= p[1];
    if right == above {
        Some((Some(lo), None))
    } else {
        Some((None, Some(hi)))
    }
}

/// Maximum over the cone of the number of `cells` a line meets, with a
/// maximizing line.
///
/// Exact: an optimal line can be translated until it touches a corner of one
/// of the cells it meets and then rotated about that corner, so the maximum
/// is attained by a line through some corner. For each corner the slopes
/// meeting each cell form an interval, and a sweep over the cone's two slope
/// ranges finds the best slope.
pub fn max_over_cells(cells: &[[i64; 2]], n: u32, eps: f64) -> (usize, Option<Line>) {
    let mut corners: Vec<[i64; 2]> = cells
        .iter()
        .flat_map(|&[i, j]| [[i, j], [i + 1, j], [i, j + 1], [i + 1, j + 1]])
        .collect();
    corners.sort_unstable();
    corners.dedup();
    let (t, ct) = (eps.tan(), 1.0 / eps.tan());
    let ranges = [(SlopeEnd::boundary(t), SlopeEnd::boundary(ct)), (SlopeEnd::boundary(-ct), SlopeEnd::boundary(-t))];
    let mut best: (usize, Option<Line>) = (0, None);
    let mut events: Vec<(f64, i32, SlopeEnd)> = Vec::new();
    for &p in &corners {
        let mut always = 0usize;
        let intervals: Vec<_> = cells
            .iter()
            .filter_map(|&q| {
                let iv = slope_interval(p, q);
                if iv.is_none() {
                    always += 1;
                }
                iv
            })
            .collect();
        for &(rlo, rhi) in &ranges {
            events.clear();
            for &(lo, hi) in &intervals {
                let a = match lo {
                    Some(l) if l.value > rlo.value => l,
                    _ => rlo,
                };
                let b = match hi {
                    Some(h) if h.value < rhi.value => h,
                    _ => rhi,
                };
                if a.value <= b.value {
                    events.push((a.value, 0, a));
                    events.push((b.value, 1, b));
                }
            }
            // starts before ends at equal slopes: the intervals are closed
            events.sort_by(|x, y| x.0.total_cmp(&y.0).then(x.1.cmp(&y.1)));
            let mut run = 0usize;
            let mut top = (0usize, rlo);
            for &(_, kind, end) in &events {
                if kind == 0 {
                    run += 1;
                    if run > top.0 {
                        top = (run, end);
                    }
                } else {
                    run -= 1;
                }
            }
            let total = always + top.0;
            if total > best.0 || best.1.is_none() {
                let line = match top.1.ratio {
                    Some((num, den)) => Line::Through { level: n, p, q: [p[0] + den, p[1] + num] },
                    None => Line::Pivot { level: n, p, slope: top.1.value },
                };
                best = (total, Some(line));
            }
        }
    }
    if cells.is_empty() {
        return (0, None);
    }
    best
}

/// The finite candidate family at depth `n` for the kept cells of `tree`.
pub fn candidate_lines(tree: &RealizationTree, n: u32, eps: f64) -> Result<Vec<Line>> {
    check_planar(tree)?;
    let cells = kept_cells(tree, n)?;
    Ok(corner_candidates(&cells, n, eps))
}

fn kept_cells(tree: &RealizationTree, n: u32) -> Result<Vec<[i64; 2]>> {
    Ok(tree.coords(n)?.chunks_exact(2).map(|c| [c[0] as i64, c[1] as i64]).collect())
}

/// A box of lines `y0 in [a0, b0]`, `y1 in [a1, b1]` for `y = y0 + (y1 - y0) x`.
#[derive(Debug, Clone, Copy)]
struct DualBox {
    a0: f64,
    b0: f64,
    a1: f64,
    b1: f64,
}

const MISS_TOL: f64 = 1e-12;
/// Boxes are resolved directly once they meet at most `LEAF_CELLS` squares
/// or are narrower than `LEAF_SIZE` cell sides.
const LEAF_CELLS: usize = 24;
const LEAF_SIZE: f64 = 2e-6;

impl DualBox {
    fn meets_cone(&self, eps: f64) -> bool {
        let (smin, smax) = (self.a1 - self.b0, self.b1 - self.a0);
        let (t, ct) = (eps.tan() * (1.0 - 1e-12), 1.0 / eps.tan() * (1.0 + 1e-12));
        let overlap = |lo: f64, hi: f64| smin <= hi && lo <= smax;
        overlap(t, ct) || overlap(-ct, -t)
    }

    fn split(&self) -> [DualBox; 2] {
        if self.b0 - self.a0 >= self.b1 - self.a1 {
            let m = 0.5 * (self.a0 + self.b0);
            [DualBox { b0: m, ..*self }, DualBox { a0: m, ..*self }]
        } else {
            let m = 0.5 * (self.a1 + self.b1);
            [DualBox { b1: m, ..*self }, DualBox { a1: m, ..*self }]
        }
    }

    /// Largest `|slope|` of a cone line in the box.
    fn max_abs_slope(&self, eps: f64) -> f64 {
        let ct = 1.0 / eps.tan();
        (self.b1 - self.a0).abs().max((self.a1 - self.b0).abs()).min(ct)
    }

    fn size(&self) -> f64 {
        (self.b0 - self.a0).max(self.b1 - self.a1)
    }
}

/// Bound on the number of `cells` (sorted by column, then row) met by one
/// line of slope at most `slope` in absolute value: within a column such a
/// line meets rows in a real interval of length `|slope| + 1`, hence at most
/// `floor(|slope| + 1) + 1` consecutive rows.
fn column_window_bound(cells: &[[i64; 2]], slope: f64) -> usize {
    let window = (slope + 1.0).floor() as i64 + 1;
    let mut total = 0;
    let mut start = 0;
    while start < cells.len() {
        let x = cells[start][0];
        let mut end = start;
        while end < cells.len() && cells[end][0] == x {
            end += 1;
        }
        let mut best = 0;
        let mut lo = start;
        for hi in start..end {
            while cells[hi][1] - cells[lo][1] >= window {
                lo += 1;
            }
            best = best.max(hi + 1 - lo);
        }
        total += best;
        start = end;
    }
    total
}

/// Exact maximum slice count over the cone, with a maximizing line.
///
/// Branch and bound over boxes of `(y(0), y(1))`: a box's bound is the number
/// of kept squares met by some line of the box; small boxes are resolved by
/// [`max_over_cells`] on those squares, which is both attained by a real line
/// and at least the box's own maximum.
pub fn max_slice(tree: &RealizationTree, n: u32, eps: f64) -> Result<(usize, Line)> {
    check_planar(tree)?;
    if !(eps > 0.0 && eps < FRAC_PI_4) {
        return Err(Error::InvalidParameter(format!("cone parameter {eps} outside (0, pi/4)")));
    }
    let base = tree.spec().base();
    let h = (base as f64).powi(-(n as i32));
    let mut cells = kept_cells(tree, n)?;
    cells.sort_unstable();
    let (mut best, mut best_line) = best_diagonal_count(tree, n)?;
    // strong starting bound: the best line of each small rational slope
    for (p, q) in probe_slopes(eps) {
        let (c, line) = best_at_slope(&cells, n, p, q);
        if c > best {
            best = c;
            best_line = line;
        }
    }
    let ct = 1.0 / eps.tan();
    let root = DualBox { a0: -ct, b0: 1.0 + ct, a1: -ct, b1: 1.0 + ct };
    let mut stack = vec![(root, cells)];
    while let Some((bx, s)) = stack.pop() {
        if s.len() <= best || column_window_bound(&s, bx.max_abs_slope(eps)) <= best {
            continue;
        }
        if s.len() <= LEAF_CELLS || bx.size() < LEAF_SIZE * h {
            let (c, line) = max_over_cells(&s, n, eps);
            if c > best {
                best = c;
                best_line = line.unwrap();
            }
            continue;
        }
        // pointwise on [0, 1] a box's lines lie between its lower envelope
        // (a0, a1) and upper envelope (b0, b1); a square above the upper or
        // below the lower one is missed by all of them
        let mut kids: Vec<(DualBox, Vec<[i64; 2]>)> = Vec::with_capacity(2);
        for k in bx.split() {
            if !k.meets_cone(eps) {
                continue;
            }
            let (ua, ub) = (k.b0, k.b1 - k.b0);
            let (da, db) = (k.a0, k.a1 - k.a0);
            let mut sub = Vec::with_capacity(s.len());
            for &[i, j] in &s {
                let (x0, y0) = (i as f64 * h, j as f64 * h);
                let (x1, y1) = (x0 + h, y0 + h);
                let up = (ua + ub * x0).max(ua + ub * x1);
                let dn = (da + db * x0).min(da + db * x1);
                if !(y0 > up + MISS_TOL || y1 < dn - MISS_TOL) {
                    sub.push([i, j]);
                }
            }
            kids.push((k, sub));
        }
        // explore the larger bound first
        kids.sort_by_key(|k| k.1.len());
        stack.extend(kids);
    }
    Ok((best, best_line))
}

/// Per-depth maxima over trials, growth fits and diagonal witnesses.
#[derive(Debug, Clone, PartialEq)]
pub struct SliceReport {
    pub depths: Vec<u32>,
    /// `per_trial[t][k]`: maximum count of surviving trial `t` at `depths[k]`.
    pub per_trial: Vec<Vec<usize>>,
    /// Best diagonal count per surviving trial and depth.
    pub diagonal: Vec<Vec<usize>>,
    /// Maximum over trials per depth.
    pub max_count: Vec<usize>,
    /// Fit of `log max` against `log n`: the growth exponent.
    pub exponent: Option<LineFit>,
    /// Fit of `max` against `n`.
    pub linear: Option<LineFit>,
    /// Fraction of surviving trials whose diagonal count is at least `n`
    /// at every depth.
    pub diagonal_witness_fraction: f64,
    /// `M^-2 < p <= M^-1`.
    pub transparent: bool,
    pub attempts: usize,
}

impl SliceReport {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,max_count,mean_max,diagonal_at_least_n\n");
        for (k, n) in self.depths.iter().enumerate() {
            let mean = self.per_trial.iter().map(|r| r[k] as f64).sum::<f64>() / self.per_trial.len().max(1) as f64;
            let wit = self.diagonal.iter().filter(|r| r[k] >= *n as usize).count();
            s += &format!("{},{},{},{}\n", n, self.max_count[k], mean, wit);
        }
        s
    }
}

/// Transparent regime for a homogeneous planar spec.
pub fn is_transparent(spec: &RetentionSpec) -> bool {
    let m = spec.base() as f64;
    spec.dim() == 2 && spec.is_homogeneous() && {
        let p = spec.prob(0);
        p > m.powi(-2) && p <= 1.0 / m
    }
}

/// Samples realizations until `trials` survive to the deepest depth (or
/// `trials * 1000` attempts), and records maximal slices per depth.
pub fn max_slice_growth(
    spec: &RetentionSpec,
    depths: &[u32],
    eps: f64,
    trials: usize,
    seed: u64,
) -> Result<SliceReport> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    if depths.is_empty() || depths.contains(&0) {
        return Err(Error::InvalidParameter("depths must be positive and nonempty".into()));
    }
    let deepest = *depths.iter().max().unwrap();
    let mut per_trial = Vec::new();
    let mut diagonal = Vec::new();
    let mut attempts = 0usize;
    let cap = trials.saturating_mul(1000).max(1);
    while per_trial.len() < trials && attempts < cap {
        let batch = (trials - per_trial.len()).max(8).min(cap - attempts);
        let start = attempts;
        let rows = mc::run_trials(batch, seed, |t, _| {
            let s = crate::rng::trial_seed(seed, (start + t) as u64);
            let tree = RealizationTree::sample(spec, deepest, s);
            if tree.count(deepest).unwrap_or(0) == 0 {
                return None;
            }
            let mut maxes = Vec::new();
            let mut diags = Vec::new();
            for &n in depths {
                maxes.push(max_slice(&tree, n, eps).map(|r| r.0));
                diags.push(best_diagonal_count(&tree, n).map(|r| r.0));
            }
            Some((maxes, diags))
        });
        attempts += batch;
        for row in rows.into_iter().flatten() {
            if per_trial.len() == trials {
                break;
            }
            per_trial.push(row.0.into_iter().collect::<Result<Vec<_>>>()?);
            diagonal.push(row.1.into_iter().collect::<Result<Vec<_>>>()?);
        }
    }
    let max_count: Vec<usize> = (0..depths.len())
        .map(|k| per_trial.iter().map(|r| r[k]).max().unwrap_or(0))
        .collect();
    let fit_ok = depths.len() >= 2 && max_count.iter().all(|&c| c > 0);
    let exponent = fit_ok
        .then(|| {
            let xs: Vec<f64> = depths.iter().map(|&n| (n as f64).ln()).collect();
            let ys: Vec<f64> = max_count.iter().map(|&c| (c as f64).ln()).collect();
            mc::least_squares(&xs, &ys).ok()
        })
        .flatten();
    let linear = (depths.len() >= 2)
        .then(|| {
            let xs: Vec<f64> = depths.iter().map(|&n| n as f64).collect();
            let ys: Vec<f64> = max_count.iter().map(|&c| c as f64).collect();
            mc::least_squares(&xs, &ys).ok()
        })
        .flatten();
    let witnesses = diagonal
        .iter()
        .filter(|r| r.iter().zip(depths).all(|(&c, &n)| c >= n as usize))
        .count();
    Ok(SliceReport {
        depths: depths.to_vec(),
        max_count,
        exponent,
        linear,
        diagonal_witness_fraction: witnesses as f64 / per_trial.len().max(1) as f64,
        transparent: is_transparent(spec),
        attempts,
        per_trial,
        diagonal,
    })
}

/// Projection box-dimension estimates per direction, against `min{1, dim E}`.
#[derive(Debug, Clone, PartialEq)]
pub struct DimensionTable {
    pub dimension: f64,
    /// `min{1, dimension}`.
    pub target: f64,
    pub levels: Vec<u32>,
    pub rows: Vec<DimensionRow>,
    /// `sum p <= 1`: the set dies out and there is nothing to condition on.
    pub stage_one: bool,
    pub conditioned_trials: usize,
    pub attempts: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DimensionRow {
    pub alpha: f64,
    pub mean_slope: f64,
    pub standard_error: f64,
    /// `mean_slope - target`.
    pub deviation: f64,
}

impl DimensionTable {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("alpha,mean_slope,se,target,deviation\n");
        for r in &self.rows {
            s += &format!("{},{},{},{},{}\n", r.alpha, r.mean_slope, r.standard_error, self.target, r.deviation);
        }
        s
    }
}

/// Mean least-squares box-counting slope of `proj_alpha(E_n)` over levels
/// `depth-4..=depth`, across realizations surviving to `depth`.
pub fn dimension_preservation_check(
    spec: &RetentionSpec,
    alphas: &[f64],
    depth: u32,
    trials: usize,
    seed: u64,
) -> Result<DimensionTable> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    if !spec.is_homogeneous() {
        return Err(Error::InvalidParameter("dimension check needs a homogeneous spec".into()));
    }
    if depth < 4 {
        return Err(Error::TooFewLevels { needed: 4, got: depth as usize });
    }
    let kinds = alphas
        .iter()
        .map(|&a| Direction::new(a).map(ProjectionKind::Orthogonal))
        .collect::<Result<Vec<_>>>()?;
    let dim = crate::branching::dimension_formula(spec);
    let levels: Vec<u32> = (depth - 4..=depth).filter(|&n| n > 0).collect();
    let mut table = DimensionTable {
        dimension: dim.value,
        target: dim.value.min(1.0),
        levels: levels.clone(),
        rows: Vec::new(),
        stage_one: dim.extinct,
        conditioned_trials: 0,
        attempts: 0,
    };
    if dim.extinct {
        return Ok(table);
    }
    let mut slopes: Vec<Vec<f64>> = Vec::new();
    let cap = trials.saturating_mul(1000).max(1);
    while slopes.len() < trials && table.attempts < cap {
        let batch = (trials - slopes.len()).max(8).min(cap - table.attempts);
        let start = table.attempts;
        let rows = mc::run_trials(batch, seed, |t, _| -> Result<Option<Vec<f64>>> {
            let s = crate::rng::trial_seed(seed, (start + t) as u64);
            let tree = RealizationTree::sample(spec, depth, s);
            if tree.count(depth)? == 0 {
                return Ok(None);
            }
            kinds
                .iter()
                .map(|&k| {
                    let counts = projection_box_counts(&tree, k, &levels)?;
                    Ok(box_dimension_estimate(&counts, spec.base())?.slope)
                })
                .collect::<Result<Vec<f64>>>()
                .map(Some)
        });
        table.attempts += batch;
        for r in rows {
            if let Some(row) = r? {
                if slopes.len() < trials {
                    slopes.push(row);
                }
            }
        }
    }
    table.conditioned_trials = slopes.len();
    for (k, &alpha) in alphas.iter().enumerate() {
        let xs: Vec<f64> = slopes.iter().map(|r| r[k]).collect();
        let (mean, se) = mc::mean_and_se(&xs);
        table.rows.push(DimensionRow { alpha, mean_slope: mean, standard_error: se, deviation: mean - table.target });
    }
    Ok(table)
}
