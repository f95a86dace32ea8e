use fracperc::branching::{extinction_probability, offspring_pgf};
use fracperc::codec::{deserialize_tree, serialize_tree};
use fracperc::{CellIndex, RealizationTree, RetentionSpec};
use proptest::prelude::*;
use statrs::distribution::{ChiSquared, ContinuousCDF};

/// Law of the number of kept children of the root: Poisson-binomial over
/// the retention vector.
fn offspring_law(p: &[f64]) -> Vec<f64> {
    let mut law = vec![1.0];
    for &x in p {
        let mut next = vec![0.0; law.len() + 1];
        for (k, &w) in law.iter().enumerate() {
            next[k] += w * (1.0 - x);
            next[k + 1] += w * x;
        }
        law = next;
    }
    law
}

#[test]
fn kept_level_one_cells_reproduce_the_offspring_law() {
    let spec = RetentionSpec::new(2, 2, vec![0.2, 0.5, 0.7, 0.9]).unwrap();
    let law = offspring_law(spec.probs());
    let mut hist = [0u64; 5];
    let mut seed = 0;
    let cell = CellIndex::new(vec![3]);
    let mut kept = 0;
    while kept < 5000 {
        let t = RealizationTree::sample(&spec, 2, seed);
        seed += 1;
        if let Some(node) = t.find(&cell).unwrap() {
            hist[t.children(1, node).len()] += 1;
            kept += 1;
        }
    }
    let stat: f64 = (0..5)
        .map(|k| {
            let e = kept as f64 * law[k];
            (hist[k] as f64 - e).powi(2) / e
        })
        .sum();
    let pval = 1.0 - ChiSquared::new(4.0).unwrap().cdf(stat);
    assert!(pval > 0.01, "chi2 {stat}, p-value {pval}");
}

#[test]
fn counts_in_distinct_cells_are_uncorrelated() {
    let spec = RetentionSpec::homogeneous(2, 3, 0.5).unwrap();
    let trials = 5000;
    let rows: Vec<(f64, f64)> = (0..trials)
        .map(|seed| {
            let t = RealizationTree::sample(&spec, 2, seed);
            let count = |sym: u32| {
                t.find(&CellIndex::new(vec![sym]))
                    .unwrap()
                    .map_or(0, |node| t.children(1, node).len()) as f64
            };
            (count(0), count(4))
        })
        .collect();
    let n = trials as f64;
    let (mx, my) = (rows.iter().map(|r| r.0).sum::<f64>() / n, rows.iter().map(|r| r.1).sum::<f64>() / n);
    let cov = rows.iter().map(|r| (r.0 - mx) * (r.1 - my)).sum::<f64>() / n;
    let vx = rows.iter().map(|r| (r.0 - mx).powi(2)).sum::<f64>() / n;
    let vy = rows.iter().map(|r| (r.1 - my).powi(2)).sum::<f64>() / n;
    let corr = cov / (vx * vy).sqrt();
    assert!(corr.abs() < 3.0 / n.sqrt(), "correlation {corr}");
}

#[test]
fn exhaustive_labellings_match_monte_carlo() {
    // d = 2, M = 2, depth 2: all 2^20 labellings of the 4 + 16 nodes
    let spec = RetentionSpec::new(2, 2, vec![0.3, 0.6, 0.8, 0.5]).unwrap();
    let mut exact = [[0.0f64; 4]; 4];
    for mask in 0u32..1 << 20 {
        let bit = |k: u32| mask >> k & 1 == 1;
        let mut w = 1.0;
        for k in 0..20 {
            let p = spec.prob(k % 4);
            w *= if bit(k) { p } else { 1.0 - p };
        }
        for a in 0..4 {
            for b in 0..4 {
                if bit(a) && bit(4 + 4 * a + b) {
                    exact[a as usize][b as usize] += w;
                }
            }
        }
    }
    let trials = 20000;
    let trees: Vec<RealizationTree> = (0..trials).map(|s| RealizationTree::sample(&spec, 2, s)).collect();
    for a in 0..4u32 {
        for b in 0..4u32 {
            let w = CellIndex::new(vec![a, b]);
            let f = trees.iter().filter(|t| t.is_kept(&w).unwrap()).count() as f64 / trials as f64;
            let p = exact[a as usize][b as usize];
            assert!((p - spec.word_prob(&w)).abs() < 1e-12);
            assert!((f - p).abs() <= 3.0 * (p * (1.0 - p) / trials as f64).sqrt() + 1e-12, "{w}: {f} vs {p}");
        }
    }
}

#[test]
fn retention_frequency_matches_word_probability() {
    let spec = RetentionSpec::new(1, 3, vec![0.52, 0.5, 0.72]).unwrap();
    let word = CellIndex::new(vec![2, 0]);
    let trials = 20000;
    let hits = (0..trials)
        .filter(|&s| RealizationTree::sample(&spec, 2, s).is_kept(&word).unwrap())
        .count();
    let p = spec.word_prob(&word);
    let f = hits as f64 / trials as f64;
    assert!((f - p).abs() < 4.0 * (p * (1.0 - p) / trials as f64).sqrt());
}

#[test]
fn extinction_monte_carlo_matches_fixed_point() {
    let spec = RetentionSpec::homogeneous(2, 2, 0.3).unwrap();
    // independent oracle: iterate s <- (0.7 + 0.3 s)^4 from 0
    let mut s = 0.0f64;
    for _ in 0..100000 {
        s = (0.7 + 0.3 * s).powi(4);
    }
    let q = extinction_probability(&spec).q;
    assert!((q - s).abs() < 1e-8);
    assert!((q - 0.5983346611763).abs() < 1e-8);
    assert!((offspring_pgf(&spec, q) - q).abs() < 1e-10);
    let trials = 10000;
    let dead = fracperc::mc::run_trials(trials, 11, |_, seed| {
        RealizationTree::sample(&spec, 30, seed).count(30).unwrap() == 0
    });
    let f = dead.iter().filter(|&&d| d).count() as f64 / trials as f64;
    assert!((f - q).abs() < 0.02, "{f} vs {q}");
}

#[test]
fn same_seed_same_bytes() {
    let spec = RetentionSpec::carpet(0.7, 0.2).unwrap();
    let a = serialize_tree(&RealizationTree::sample(&spec, 4, 99));
    let b = serialize_tree(&RealizationTree::sample(&spec, 4, 99));
    let c = serialize_tree(&RealizationTree::sample(&spec, 4, 100));
    assert_eq!(a, b);
    assert_ne!(a, c);
}

fn arb_spec() -> impl Strategy<Value = RetentionSpec> {
    (1u32..=2, 2u32..=3).prop_flat_map(|(d, m)| {
        prop::collection::vec(0.0f64..=1.0, (m as usize).pow(d))
            .prop_map(move |p| RetentionSpec::new(d, m, p).unwrap())
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn raising_probabilities_only_adds_cells(spec in arb_spec(), bump in 0.0f64..0.5, seed in any::<u64>()) {
        let hi = RetentionSpec::new(
            spec.dim(),
            spec.base(),
            spec.probs().iter().map(|p| (p + bump).min(1.0)).collect(),
        ).unwrap();
        let lo = RealizationTree::sample(&spec, 4, seed);
        let up = RealizationTree::sample(&hi, 4, seed);
        for n in 0..=4 {
            for w in lo.survival_set(n).unwrap() {
                prop_assert!(up.is_kept(&w).unwrap());
            }
        }
    }

    #[test]
    fn kept_cells_have_kept_parents(spec in arb_spec(), seed in any::<u64>()) {
        let t = RealizationTree::sample(&spec, 4, seed);
        for n in 1..=4 {
            prop_assert!(t.count(n).unwrap() <= t.count(n - 1).unwrap() * spec.alphabet() as usize);
            for w in t.survival_set(n).unwrap() {
                prop_assert!(t.is_kept(&w.parent().unwrap()).unwrap());
                prop_assert!(spec.word_prob(&w) > 0.0);
            }
        }
    }

    #[test]
    fn deepening_agrees_with_sampling_deeper(spec in arb_spec(), seed in any::<u64>()) {
        let mut t = RealizationTree::sample(&spec, 2, seed);
        t.deepen(4);
        prop_assert_eq!(t, RealizationTree::sample(&spec, 4, seed));
    }

    #[test]
    fn codec_round_trip(spec in arb_spec(), depth in 0u32..=4, seed in any::<u64>()) {
        let t = RealizationTree::sample(&spec, depth, seed);
        let bytes = serialize_tree(&t);
        let back = deserialize_tree(&bytes, &spec).unwrap();
        prop_assert_eq!(&back, &t);
        for cut in [0, 3, 19, bytes.len().saturating_sub(1)] {
            if cut < bytes.len() && (cut < 20 || depth > 0) {
                prop_assert!(deserialize_tree(&bytes[..cut], &spec).is_err());
            }
        }
    }
}
