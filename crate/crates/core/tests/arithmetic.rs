use fracperc::arithmetic::*;
use fracperc::{Interval, RealizationTree, RetentionSpec};
use proptest::prelude::*;

fn arb_pair() -> impl Strategy<Value = (Vec<f64>, Vec<f64>)> {
    (2usize..=5).prop_flat_map(|m| (prop::collection::vec(0.0f64..=1.0, m), prop::collection::vec(0.0f64..=1.0, m)))
}

/// Per-position retention probability of a 1-D spec at level `n`, by summing
/// over every labelling of the `M + ... + M^n` nodes.
fn exhaustive_marginals(p: &[f64], n: u32) -> Vec<f64> {
    let m = p.len();
    let nodes: usize = (1..=n).map(|k| m.pow(k)).sum();
    let side = m.pow(n);
    let mut out = vec![0.0; side];
    for mask in 0u64..1 << nodes {
        let bit = |k: usize| mask >> k & 1 == 1;
        let mut w = 1.0;
        let mut k = 0;
        for level in 1..=n {
            for pos in 0..m.pow(level) {
                let q = p[pos % m];
                w *= if bit(k) { q } else { 1.0 - q };
                k += 1;
            }
        }
        // node index of position `pos` at `level`
        let index = |level: u32, pos: usize| (1..level).map(|j| m.pow(j)).sum::<usize>() + pos;
        for pos in 0..side {
            if (1..=n).all(|l| bit(index(l, pos / m.pow(n - l)))) {
                out[pos] += w;
            }
        }
    }
    out
}

#[test]
fn gammas_are_expected_pair_counts() {
    for (p, q) in [(vec![0.3, 0.9], vec![0.6, 0.2]), (vec![0.52, 0.5, 0.72], vec![0.1, 0.8, 0.4])] {
        for n in 1..=2u32 {
            let (a, b) = (exhaustive_marginals(&p, n), exhaustive_marginals(&q, n));
            let side = a.len();
            let pn = collapse_spec(&RetentionSpec::new(1, p.len() as u32, p.clone()).unwrap(), n, 1 << 20).unwrap();
            let qn = collapse_spec(&RetentionSpec::new(1, q.len() as u32, q.clone()).unwrap(), n, 1 << 20).unwrap();
            let g = gamma_profile(&pn, &qn).unwrap();
            for k in 1..=side {
                // pairs of a kept p-position i and q-position j = i - k mod M^n
                let e: f64 = (0..side).map(|i| a[i] * b[(i + side * 2 - k) % side]).sum();
                assert!((g.gammas[k - 1] - e).abs() < 1e-10, "M={} n={n} k={k}", p.len());
            }
        }
    }
}

proptest! {
    #[test]
    fn gamma_product_is_symmetric((p, q) in arb_pair()) {
        let a = gamma_profile(&p, &q).unwrap().product;
        let b = gamma_profile(&q, &p).unwrap().product;
        prop_assert!((a - b).abs() <= 1e-12 * a.abs().max(1.0));
    }

    #[test]
    fn homogeneous_gammas(m in 2usize..=6, p in 0.0f64..=1.0) {
        let g = gamma_profile(&vec![p; m], &vec![p; m]).unwrap();
        for &x in &g.gammas {
            prop_assert!((x - m as f64 * p * p).abs() < 1e-12);
        }
        prop_assert!((g.product - (m as f64 * p * p).powi(m as i32)).abs() < 1e-10);
    }

    #[test]
    fn collapse_preserves_total_mass(p in prop::collection::vec(0.0f64..=1.0, 2..=4), n in 1u32..=3) {
        let spec = RetentionSpec::new(1, p.len() as u32, p.clone()).unwrap();
        let c = collapse_spec(&spec, n, DEFAULT_COLLAPSE_CAP).unwrap();
        let s: f64 = p.iter().sum();
        prop_assert!((c.iter().sum::<f64>() - s.powi(n as i32)).abs() < 1e-9);
    }
}

fn surviving_pairs(spec: &RetentionSpec, depth: u32, want: usize) -> Vec<(RealizationTree, RealizationTree)> {
    let mut out = Vec::new();
    let mut seed = 0u64;
    while out.len() < want {
        let a = RealizationTree::sample(spec, depth, 2 * seed);
        let b = RealizationTree::sample(spec, depth, 2 * seed + 1);
        seed += 1;
        if a.count(depth).unwrap() > 0 && b.count(depth).unwrap() > 0 {
            out.push((a, b));
        }
    }
    out
}

#[test]
fn interval_spec_keeps_containing_the_centre_interval() {
    // gamma = 2.43 everywhere. The approximations decrease in n, so the
    // containment frequency can only fall; it should stay high.
    let spec = RetentionSpec::homogeneous(1, 3, 0.9).unwrap();
    assert_eq!(difference_interval_decision(spec.probs(), spec.probs()).unwrap().verdict, DifferenceVerdict::IntervalAS);
    let pairs = surviving_pairs(&spec, 7, 200);
    let j = Interval::new(-0.05, 0.05);
    let freq: Vec<f64> = (3..=7)
        .map(|n| {
            pairs
                .iter()
                .filter(|(a, b)| empirical_difference_set(a, b, n).unwrap().union.contains_interval(j, 1e-12))
                .count() as f64
                / pairs.len() as f64
        })
        .collect();
    for w in freq.windows(2) {
        assert!(w[1] <= w[0]);
    }
    assert!(freq[4] > 0.8, "{freq:?}");
}

#[test]
fn palis_difference_measures_shrink() {
    let spec = RetentionSpec::new(1, 3, vec![0.52, 0.5, 0.72]).unwrap();
    for (a, b) in surviving_pairs(&spec, 7, 50) {
        let m: Vec<f64> = (3..=7).map(|n| empirical_difference_set(&a, &b, n).unwrap().measure).collect();
        for w in m.windows(2) {
            assert!(w[1] <= w[0] + 1e-12);
        }
    }
}
