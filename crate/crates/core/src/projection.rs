//! Projections of finite approximations: orthogonal, diagonal, radial and
//! co-radial; interval persistence, box counting and first-hit visibility.

use std::f64::consts::{FRAC_PI_2, PI};

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::interval::{Interval, IntervalUnion};
use crate::mc::{self, LineFit};
use crate::spec::{RetentionSpec, Square};
use crate::tree::RealizationTree;

/// Containment slack for projected unions.
pub const CONTAINMENT_TOL: f64 = 1e-12;

/// A direction strictly inside the first quadrant.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Direction {
    angle: f64,
}

impl Direction {
    pub fn new(angle: f64) -> Result<Self> {
        if angle > 0.0 && angle < FRAC_PI_2 {
            Ok(Self { angle })
        } else {
            Err(Error::DirectionOutOfRange(angle))
        }
    }

    pub fn from_degrees(deg: f64) -> Result<Self> {
        Self::new(deg.to_radians())
    }

    pub fn angle(&self) -> f64 {
        self.angle
    }

    pub fn unit(&self) -> [f64; 2] {
        [self.angle.cos(), self.angle.sin()]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ProjectionKind {
    /// Along the direction onto its orthogonal line: `-x sin a + y cos a`.
    Orthogonal(Direction),
    /// Along the direction onto the anti-diagonal from `(0,1)` (parameter 0)
    /// to `(1,0)` (parameter 1), by normalized arclength.
    Diagonal(Direction),
    /// Angle of the ray from `center`, measured from the ray through the
    /// centre of the unit square, in `(-pi, pi)`.
    Radial { center: [f64; 2] },
    /// Distance from `center`.
    CoRadial { center: [f64; 2] },
}

fn check_center(t: [f64; 2]) -> Result<()> {
    if (0.0..=1.0).contains(&t[0]) && (0.0..=1.0).contains(&t[1]) {
        Err(Error::CenterInsideSquare(t[0], t[1]))
    } else {
        Ok(())
    }
}

impl ProjectionKind {
    pub fn radial(center: [f64; 2]) -> Result<Self> {
        check_center(center)?;
        Ok(Self::Radial { center })
    }

    pub fn co_radial(center: [f64; 2]) -> Result<Self> {
        check_center(center)?;
        Ok(Self::CoRadial { center })
    }

    fn validate(&self) -> Result<()> {
        match *self {
            Self::Radial { center } | Self::CoRadial { center } => check_center(center),
            _ => Ok(()),
        }
    }

    /// Image of a single point.
    pub fn point(&self, x: f64, y: f64) -> f64 {
        match *self {
            Self::Orthogonal(d) => {
                let (s, c) = d.angle.sin_cos();
                -x * s + y * c
            }
            Self::Diagonal(d) => {
                let (s, c) = d.angle.sin_cos();
                (c + x * s - y * c) / (c + s)
            }
            Self::Radial { center } => {
                let reference = (0.5 - center[1]).atan2(0.5 - center[0]);
                let mut a = (y - center[1]).atan2(x - center[0]) - reference;
                if a > PI {
                    a -= 2.0 * PI;
                } else if a <= -PI {
                    a += 2.0 * PI;
                }
                a
            }
            Self::CoRadial { center } => (x - center[0]).hypot(y - center[1]),
        }
    }

    /// Image of a closed square (an interval).
    pub fn square(&self, q: &Square) -> Interval {
        if let Self::CoRadial { center } = *self {
            let nx = center[0].clamp(q.x, q.x + q.side);
            let ny = center[1].clamp(q.y, q.y + q.side);
            let far = q
                .corners()
                .iter()
                .map(|c| self.point(c[0], c[1]))
                .fold(f64::NEG_INFINITY, f64::max);
            return Interval::new(self.point(nx, ny), far);
        }
        let mut lo = f64::INFINITY;
        let mut hi = f64::NEG_INFINITY;
        for c in q.corners() {
            let v = self.point(c[0], c[1]);
            lo = lo.min(v);
            hi = hi.max(v);
        }
        Interval::new(lo, hi)
    }

    /// Image of the unit square.
    pub fn range(&self) -> Interval {
        self.square(&Square::UNIT)
    }
}

/// Exact merged union of the projected squares.
pub fn project_cells(cells: &[Square], kind: ProjectionKind) -> Result<IntervalUnion> {
    kind.validate()?;
    let parts: Vec<Interval> = if cells.len() > 4096 {
        cells.par_iter().map(|q| kind.square(q)).collect()
    } else {
        cells.iter().map(|q| kind.square(q)).collect()
    };
    Ok(IntervalUnion::from_intervals(parts))
}

/// Projection of the level-`n` approximation of a planar realization.
pub fn project_level(tree: &RealizationTree, n: u32, kind: ProjectionKind) -> Result<IntervalUnion> {
    project_cells(&tree.squares(n)?, kind)
}

#[derive(Debug, Clone, PartialEq)]
pub struct Persistence {
    /// Depths `0..=max_depth`.
    pub depths: Vec<u32>,
    /// Fraction of trials whose level-`n` projection covers `J`.
    pub frequency: Vec<f64>,
    pub standard_error: Vec<f64>,
    /// Fraction of trials surviving to `max_depth`.
    pub survival: f64,
    pub trials: usize,
}

impl Persistence {
    pub fn to_csv(&self) -> String {
        let mut s = String::from("n,frequency,se\n");
        for i in 0..self.depths.len() {
            s += &format!("{},{},{}\n", self.depths[i], self.frequency[i], self.standard_error[i]);
        }
        s
    }
}

/// Per-depth frequency that `J` is covered by the projection of `E_n`.
///
/// Projections of nested compacta decrease to the projection of the limit,
/// so the sequence of indicators is non-increasing in every trial.
pub fn interval_persistence(
    spec: &RetentionSpec,
    kind: ProjectionKind,
    j: Interval,
    max_depth: u32,
    trials: usize,
    seed: u64,
) -> Result<Persistence> {
    if spec.dim() != 2 {
        return Err(Error::WrongDimension { expected: 2, got: spec.dim() });
    }
    kind.validate()?;
    let range = kind.range();
    if j.is_empty() || j.lo < range.lo - CONTAINMENT_TOL || j.hi > range.hi + CONTAINMENT_TOL {
        return Err(Error::IntervalOutOfRange { lo: j.lo, hi: j.hi, min: range.lo, max: range.hi });
    }
    let rows = mc::run_trials(trials, seed, |_, s| {
        let tree = RealizationTree::sample(spec, max_depth, s);
        let hits: Vec<bool> = (0..=max_depth)
            .map(|n| {
                project_level(&tree, n, kind)
                    .map(|u| u.contains_interval(j, CONTAINMENT_TOL))
                    .unwrap_or(false)
            })
            .collect();
        (hits, tree.count(max_depth).unwrap_or(0) > 0)
    });
    let mut frequency = Vec::new();
    let mut standard_error = Vec::new();
    for n in 0..=max_depth as usize {
        let (f, se) = mc::frequency(rows.iter().filter(|r| r.0[n]).count(), trials);
        frequency.push(f);
        standard_error.push(se);
    }
    let survival = mc::frequency(rows.iter().filter(|r| r.1).count(), trials).0;
    Ok(Persistence { depths: (0..=max_depth).collect(), frequency, standard_error, survival, trials })
}

/// Number of `M^-n` boxes of the parameter line met by the projection of `E_n`,
/// for each requested level.
pub fn projection_box_counts(
    tree: &RealizationTree,
    kind: ProjectionKind,
    levels: &[u32],
) -> Result<Vec<(u32, u64)>> {
    let range = kind.range();
    let base = tree.spec().base() as f64;
    levels
        .iter()
        .map(|&n| {
            let scale = base.powi(n as i32);
            let boxes = ((range.len() * scale).ceil() as u64).max(1);
            let u = project_level(tree, n, kind)?;
            Ok((n, u.cover_count(range.lo, range.lo + boxes as f64 / scale, boxes)))
        })
        .collect()
}

/// Number of kept cells of `E_n` for each requested level.
pub fn cell_box_counts(tree: &RealizationTree, levels: &[u32]) -> Result<Vec<(u32, u64)>> {
    levels.iter().map(|&n| Ok((n, tree.count(n)? as u64))).collect()
}

/// Least-squares slope of `log count` against `n log M`.
pub fn box_dimension_estimate(counts: &[(u32, u64)], base: u32) -> Result<LineFit> {
    if counts.len() < 4 {
        return Err(Error::TooFewLevels { needed: 4, got: counts.len() });
    }
    if counts.iter().any(|&(_, c)| c == 0) {
        return Err(Error::InvalidParameter("zero box count".into()));
    }
    let lm = (base as f64).ln();
    let xs: Vec<f64> = counts.iter().map(|&(n, _)| n as f64 * lm).collect();
    let ys: Vec<f64> = counts.iter().map(|&(_, c)| (c as f64).ln()).collect();
    mc::least_squares(&xs, &ys)
}

/// `n,count` rows.
pub fn counts_to_csv(counts: &[(u32, u64)]) -> String {
    let mut s = String::from("n,count\n");
    for (n, c) in counts {
        s += &format!("{n},{c}\n");
    }
    s
}

#[derive(Debug, Clone, PartialEq)]
pub struct VisibleSet {
    /// Lattice coordinates `(col, row)` of the distinct first-hit cells, sorted.
    pub cells: Vec<(u64, u64)>,
    pub count: usize,
    /// `count * M^-n`.
    pub proxy: f64,
    pub lines: usize,
}

/// Cells of `E_n` seen first by parallel lines in direction `dir`, coming
/// from the far side (large `<x, e>`), lines spaced `M^-n` apart.
pub fn visible_set_sample(tree: &RealizationTree, dir: Direction, n: u32) -> Result<VisibleSet> {
    let squares = tree.squares(n)?;
    let coords = tree.coords(n)?;
    let h = (tree.spec().base() as f64).powi(-(n as i32));
    let (sa, ca) = dir.angle.sin_cos();
    let lines = ((sa + ca) / h).ceil() as usize;
    let offset = |k: usize| -sa + (k as f64 + 0.5) * h;
    // best[k] = (exit parameter, cell index)
    let mut best: Vec<Option<(f64, usize)>> = vec![None; lines];
    let kind = ProjectionKind::Orthogonal(dir);
    for (idx, q) in squares.iter().enumerate() {
        let span = kind.square(q);
        let k0 = ((span.lo + sa) / h - 0.5).ceil().max(0.0) as usize;
        let k1 = ((span.hi + sa) / h - 0.5).floor();
        if k1 < 0.0 {
            continue;
        }
        for k in k0..=(k1 as usize).min(lines.saturating_sub(1)) {
            let s = offset(k);
            // point = s (-sin, cos) + u (cos, sin)
            let ux = (q.x + q.side + s * sa) / ca;
            let uy = (q.y + q.side - s * ca) / sa;
            let exit = ux.min(uy);
            if best[k].map_or(true, |(b, _)| exit > b) {
                best[k] = Some((exit, idx));
            }
        }
    }
    let mut cells: Vec<(u64, u64)> = best
        .iter()
        .flatten()
        .map(|&(_, i)| (coords[2 * i], coords[2 * i + 1]))
        .collect();
    cells.sort_unstable();
    cells.dedup();
    let count = cells.len();
    Ok(VisibleSet { cells, count, proxy: count as f64 * h, lines })
}
