//! Brute-force oracles for the rank statistics: pairwise AUC counting,
//! explicit subset enumeration for the exact Mann-Whitney distribution, and
//! the exact-vs-approximate agreement bound.

use histomil::stats::{
    boxplot_summary, mann_whitney, mann_whitney_approx, mann_whitney_exact, midranks, roc_auc,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Fraction of (positive, negative) pairs won by the positive, ties half.
fn auc_pairwise(scores: &[f64], labels: &[bool]) -> f64 {
    let mut wins = 0.0;
    let mut pairs = 0.0;
    for (i, &li) in labels.iter().enumerate() {
        if !li {
            continue;
        }
        for (j, &lj) in labels.iter().enumerate() {
            if lj {
                continue;
            }
            pairs += 1.0;
            if scores[i] > scores[j] {
                wins += 1.0;
            } else if scores[i] == scores[j] {
                wins += 0.5;
            }
        }
    }
    wins / pairs
}

#[test]
fn auc_equals_pairwise_counting_up_to_n50() {
    let mut rng = ChaCha8Rng::seed_from_u64(42);
    for case in 0..200 {
        let n = rng.random_range(2..=50);
        let n_pos = rng.random_range(1..n);
        let labels: Vec<bool> = (0..n).map(|i| i < n_pos).collect();
        // coarse grid of scores to provoke plenty of ties
        let scores: Vec<f64> = (0..n)
            .map(|_| (rng.random_range(0..8) as f64) / 7.0)
            .collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        let brute = auc_pairwise(&scores, &labels);
        assert_eq!(auc, brute, "case {case}: {auc} vs {brute}");
    }
}

#[test]
fn auc_invariant_under_increasing_transforms() {
    let mut rng = ChaCha8Rng::seed_from_u64(43);
    for _ in 0..50 {
        let n = rng.random_range(4..30);
        let labels: Vec<bool> = (0..n).map(|i| i % 2 == 0).collect();
        let scores: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
        let auc = roc_auc(&scores, &labels).unwrap();
        let warped: Vec<f64> = scores.iter().map(|&s| (2.0 * s).exp() + 0.1 * s).collect();
        assert_eq!(roc_auc(&warped, &labels).unwrap(), auc);
    }
}

/// Enumerate every subset of size n explicitly and accumulate the rank-sum
/// tail probabilities; the production path uses a counting recurrence.
fn mwu_exact_by_subsets(xs: &[f64], ys: &[f64]) -> f64 {
    let pooled: Vec<f64> = xs.iter().chain(ys.iter()).copied().collect();
    let ranks = midranks(&pooled);
    let total_len = pooled.len();
    let n = xs.len();
    let observed: f64 = ranks[..n].iter().sum();

    let mut le = 0u64;
    let mut ge = 0u64;
    let mut total = 0u64;
    // iterate all bitmasks with n bits set (fine for the small test sizes)
    for mask in 0u32..(1 << total_len) {
        if mask.count_ones() as usize != n {
            continue;
        }
        let sum: f64 = (0..total_len)
            .filter(|&i| mask & (1 << i) != 0)
            .map(|i| ranks[i])
            .sum();
        total += 1;
        if sum <= observed + 1e-9 {
            le += 1;
        }
        if sum >= observed - 1e-9 {
            ge += 1;
        }
    }
    (2.0 * (le.min(ge) as f64) / total as f64).min(1.0)
}

#[test]
fn exact_p_matches_explicit_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(44);
    for _ in 0..60 {
        let n = rng.random_range(2..6);
        let m = rng.random_range(2..6);
        // small value grid so ties occur
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..6) as f64).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(0..6) as f64).collect();
        let got = mann_whitney_exact(&xs, &ys).unwrap().p;
        let brute = mwu_exact_by_subsets(&xs, &ys);
        assert!(
            (got - brute).abs() < 1e-12,
            "{xs:?} vs {ys:?}: {got} vs {brute}"
        );
    }
}

#[test]
fn pinned_exact_example_and_auto_dispatch() {
    let r = mann_whitney(&[1.0, 2.0, 3.0], &[10.0, 11.0, 12.0]).unwrap();
    assert_eq!(r.u, 0.0);
    assert!((r.p - 0.1).abs() < 1e-12);
}

#[test]
fn exact_and_approximate_agree_at_15x15() {
    let mut rng = ChaCha8Rng::seed_from_u64(45);
    for _ in 0..25 {
        // tie-free: distinct uniform draws
        let mut pool: Vec<f64> = Vec::new();
        while pool.len() < 30 {
            let v = rng.random_range(-10.0..10.0);
            if !pool.contains(&v) {
                pool.push(v);
            }
        }
        let shift = rng.random_range(-2.0..2.0);
        let xs: Vec<f64> = pool[..15].to_vec();
        let ys: Vec<f64> = pool[15..].iter().map(|v| v + shift).collect();
        let exact = mann_whitney_exact(&xs, &ys).unwrap().p;
        let approx = mann_whitney_approx(&xs, &ys).unwrap().p;
        assert!(
            (exact - approx).abs() < 0.01,
            "exact {exact} vs approx {approx} (shift {shift})"
        );
    }
}

#[test]
fn large_shifted_gaussians_are_highly_significant() {
    let mut rng = ChaCha8Rng::seed_from_u64(46);
    let normal = rand_distr::StandardNormal;
    let xs: Vec<f64> = (0..100).map(|_| rng.sample::<f64, _>(normal)).collect();
    let ys: Vec<f64> = (0..100)
        .map(|_| rng.sample::<f64, _>(normal) + 1.0)
        .collect();
    let r = mann_whitney(&xs, &ys).unwrap();
    assert!(r.p < 0.0001, "p = {}", r.p);
    assert_eq!(r.stars.as_str(), "****");
}

#[test]
fn swapping_samples_preserves_p() {
    let mut rng = ChaCha8Rng::seed_from_u64(47);
    for _ in 0..30 {
        let n = rng.random_range(2..8);
        let m = rng.random_range(2..8);
        let xs: Vec<f64> = (0..n).map(|_| rng.random_range(0..5) as f64).collect();
        let ys: Vec<f64> = (0..m).map(|_| rng.random_range(0..5) as f64).collect();
        let a = mann_whitney(&xs, &ys).unwrap().p;
        let b = mann_whitney(&ys, &xs).unwrap().p;
        assert_eq!(a, b);
    }
}

#[test]
fn boxplot_whiskers_respect_the_fence_property() {
    let mut rng = ChaCha8Rng::seed_from_u64(48);
    for _ in 0..40 {
        let n = rng.random_range(1..40);
        let values: Vec<f64> = (0..n).map(|_| rng.random_range(-5.0..5.0)).collect();
        let s = boxplot_summary(&values).unwrap();
        let iqr = s.q3 - s.q1;
        assert!(s.whisker_low >= s.q1 - 1.5 * iqr - 1e-12);
        assert!(s.whisker_high <= s.q3 + 1.5 * iqr + 1e-12);
        assert!(s.q1 <= s.median && s.median <= s.q3);
        for o in &s.outliers {
            assert!(*o < s.q1 - 1.5 * iqr || *o > s.q3 + 1.5 * iqr);
        }
    }
}
