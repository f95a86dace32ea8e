use std::f64::consts::{FRAC_PI_2, FRAC_PI_4};

use fracperc::condition::*;
use fracperc::projection::Direction;
use fracperc::{CellIndex, Interval, RealizationTree, RetentionSpec};
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Chart coordinate of a point for direction `a`.
fn chart(a: f64, x: f64, y: f64) -> f64 {
    let (s, c) = a.sin_cos();
    (c + x * s - y * c) / (c + s)
}

/// Every word of length `n` as (word, lower-left lattice corner).
fn all_words(m: u32, n: u32) -> Vec<(Vec<u32>, u64, u64)> {
    let mut out = vec![(Vec::new(), 0u64, 0u64)];
    for _ in 0..n {
        out = out
            .into_iter()
            .flat_map(|(w, c, r)| {
                (0..m * m).map(move |s| {
                    let mut w2 = w.clone();
                    w2.push(s);
                    (w2, c * m as u64 + (s % m) as u64, r * m as u64 + (s / m) as u64)
                })
            })
            .collect();
    }
    out
}

/// Shadow of a level-`n` cell's copy of `i`: the chart image of the cell
/// starts at the smallest corner value.
fn oracle_shadow(a: f64, col: u64, row: u64, n: u32, m: u32, i: Interval) -> Interval {
    let h = (m as f64).powi(-(n as i32));
    let (x, y) = (col as f64 * h, row as f64 * h);
    let lo = [(x, y), (x + h, y), (x, y + h), (x + h, y + h)]
        .iter()
        .map(|&(u, v)| chart(a, u, v))
        .fold(f64::INFINITY, f64::min);
    Interval::new(lo + h * i.lo, lo + h * i.hi)
}

#[test]
fn enumerate_d_n_matches_exhaustive_search() {
    let spec = RetentionSpec::new(2, 2, vec![0.7, 0.0, 0.4, 0.9]).unwrap();
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for n in 1..=3 {
        let words = all_words(2, n);
        for _ in 0..100 {
            let a = rng.gen_range(0.01..FRAC_PI_2 - 0.01);
            let i = Interval::new(rng.gen_range(0.0..0.5), rng.gen_range(0.5..1.0));
            let x = rng.gen_range(0.0..1.0);
            let dir = Direction::new(a).unwrap();
            let mut got = enumerate_d_n(x, i, dir, n, &spec).unwrap();
            got.sort();
            let mut want: Vec<CellIndex> = words
                .iter()
                .filter(|(w, c, r)| {
                    let s = oracle_shadow(a, *c, *r, n, 2, i);
                    spec.word_prob(&CellIndex::new(w.clone())) > 0.0 && s.lo <= x && x <= s.hi
                })
                .map(|(w, _, _)| CellIndex::new(w.clone()))
                .collect();
            want.sort();
            assert_eq!(got, want, "n={n} a={a} x={x}");
        }
    }
}

/// Grid evaluation of `sum_{|w| = r} p_w 1[y in shadow(w, I1)] - 2` over
/// `points` points of `I2`, from all words of length `r`.
fn grid_margin(spec: &RetentionSpec, a: f64, i1: Interval, i2: Interval, r: u32, points: usize) -> f64 {
    let m = spec.base();
    let step = i2.len() / (points - 1) as f64;
    let mut diff = vec![0.0f64; points + 1];
    for (w, c, row) in all_words(m, r) {
        let p = spec.word_prob(&CellIndex::new(w));
        if p == 0.0 {
            continue;
        }
        let s = oracle_shadow(a, c, row, r, m, i1);
        let lo = ((s.lo - i2.lo) / step).ceil().max(0.0);
        let hi = ((s.hi - i2.lo) / step).floor().min((points - 1) as f64);
        if lo <= hi {
            diff[lo as usize] += p;
            diff[hi as usize + 1] -= p;
        }
    }
    let mut run = 0.0;
    let mut best = f64::INFINITY;
    for d in &diff[..points] {
        run += d;
        best = best.min(run);
    }
    best - 2.0
}

#[test]
fn condition_a_witnesses_survive_a_fine_grid() {
    let specs = [
        RetentionSpec::homogeneous(2, 3, 0.75).unwrap(),
        RetentionSpec::carpet(0.8, 0.5).unwrap(),
        RetentionSpec::homogeneous(2, 2, 0.8).unwrap(),
    ];
    let mut found = 0;
    for spec in &specs {
        for a in [0.15, 0.4, FRAC_PI_4, 1.0, 1.4] {
            let dir = Direction::new(a).unwrap();
            if let Some(w) = search_condition_a(dir, spec, SearchGrid::default()).unwrap() {
                found += 1;
                assert!(w.holds());
                let g = grid_margin(spec, a, w.i1, w.i2, w.r, 10_000);
                assert!(g >= w.margin - 1e-9, "grid {g} below margin {} at a={a}", w.margin);
            }
        }
    }
    assert!(found >= 10);
}

#[test]
fn robust_witnesses_hold_across_their_range() {
    let spec = RetentionSpec::homogeneous(2, 3, 0.75).unwrap();
    let dir = Direction::new(0.6).unwrap();
    let w = search_condition_a(dir, &spec, SearchGrid::default()).unwrap().unwrap();
    let gap = (w.i1.lo - w.i2.lo).min(w.i2.hi - w.i1.hi);
    let rw = robustness_radius(&w, 0.5 * gap, &spec).unwrap();
    assert!(rw.alpha_lo < 0.6 && 0.6 < rw.alpha_hi);
    for k in 0..=10 {
        let a = rw.alpha_lo + (rw.alpha_hi - rw.alpha_lo) * k as f64 / 10.0;
        let g = grid_margin(&spec, a, rw.i1, rw.i2, rw.r, 10_000);
        assert!(g >= -1e-9, "a={a}: {g}");
        let exact = check_condition_a(Direction::new(a).unwrap(), rw.i1, rw.i2, rw.r, &spec).unwrap();
        assert!(exact.holds());
    }
}

#[test]
fn direction_cover_examples() {
    let range = (0.1, FRAC_PI_2 - 0.1);
    let cover = |spec: RetentionSpec| certify_all_directions(&spec, range.0, range.1, SearchGrid::default()).unwrap();
    let ok = cover(RetentionSpec::homogeneous(2, 3, 0.75).unwrap());
    assert!(ok.is_covered());
    let pieces = ok.pieces();
    assert!(pieces.first().unwrap().alpha_lo <= range.0 && pieces.last().unwrap().alpha_hi >= range.1);
    for w in pieces.windows(2) {
        assert!(w[1].alpha_lo <= w[0].alpha_hi);
    }
    assert!(cover(RetentionSpec::carpet(0.8, 0.5).unwrap()).is_covered());
    let fail = cover(RetentionSpec::homogeneous(2, 3, 0.3).unwrap());
    assert!(!fail.is_covered());
    assert!(!fail.to_text().is_empty());
}

#[test]
fn condition_b_on_the_chord() {
    let dir = Direction::new(FRAC_PI_4).unwrap();
    let f = GridFunction::chord(dir);
    let spec = RetentionSpec::homogeneous(2, 2, 0.6).unwrap();
    match check_condition_b(dir, &f, &spec).unwrap() {
        ConditionB::Certified { epsilon } => assert!(epsilon >= 0.2 - 1e-9, "{epsilon}"),
        other => panic!("{other}"),
    }
    let half = RetentionSpec::homogeneous(2, 2, 0.5).unwrap();
    assert!(!check_condition_b(dir, &f, &half).unwrap().holds());
}

#[test]
fn f_is_the_mean_of_g() {
    let spec = RetentionSpec::carpet(0.6, 0.3).unwrap();
    let dir = Direction::new(0.5).unwrap();
    let f = GridFunction::tent(1.0);
    let trials = 4000;
    for x in [0.1, 0.37, 0.5, 0.81] {
        let vals: Vec<f64> = (0..trials)
            .map(|s| apply_g_at(&f, dir, &RealizationTree::sample(&spec, 1, s), x).unwrap())
            .collect();
        let (mean, se) = fracperc::mc::mean_and_se(&vals);
        let want = apply_f_at(&f, dir, &spec, x).unwrap();
        assert!((mean - want).abs() <= 3.0 * se + 1e-12, "x={x}: {mean} vs {want} (se {se})");
    }
}

fn arb_fn() -> impl Strategy<Value = GridFunction> {
    prop::collection::vec((0.01f64..0.99, 0.0f64..2.0), 1..6).prop_map(|mut v| {
        v.sort_by(|a, b| a.0.total_cmp(&b.0));
        v.dedup_by(|a, b| (a.0 - b.0).abs() < 1e-3);
        let mut xs = vec![0.0];
        let mut ys = vec![0.0];
        for (x, y) in v {
            xs.push(x);
            ys.push(y);
        }
        xs.push(1.0);
        ys.push(0.0);
        GridFunction::new(xs, ys).unwrap()
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn f_is_linear_positive_and_monotone(f in arb_fn(), g in arb_fn(), a in 0.0f64..3.0, b in 0.0f64..3.0, alpha in 0.05f64..1.5) {
        let spec = RetentionSpec::carpet(0.7, 0.2).unwrap();
        let dir = Direction::new(alpha).unwrap();
        let fa = apply_f(&f, dir, &spec).unwrap();
        let ga = apply_f(&g, dir, &spec).unwrap();
        let comb = apply_f(&f.combine(a, &g, b), dir, &spec).unwrap();
        for &x in comb.breakpoints().iter().chain(fa.breakpoints()).chain(ga.breakpoints()) {
            let lhs = comb.eval(x);
            prop_assert!((lhs - (a * fa.eval(x) + b * ga.eval(x))).abs() < 1e-10);
            prop_assert!(fa.eval(x) >= -1e-15);
            // f <= f + g pointwise
            let sum = apply_f(&f.combine(1.0, &g, 1.0), dir, &spec).unwrap();
            prop_assert!(fa.eval(x) <= sum.eval(x) + 1e-12);
        }
    }
}
