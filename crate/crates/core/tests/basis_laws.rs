mod common;

use common::*;
use proptest::prelude::*;
use rand_distr::{Distribution, StandardNormal};
use sparse_sensing::basis::{fit_pod, fit_pod_detailed, hard_threshold_rank, RankSpec};
use sparse_sensing::factor::singular_values;
use sparse_sensing::{Matrix, Snapshots};

fn projection_residual(x: &Matrix, q: &Matrix) -> f64 {
    let coeffs = q.transpose().matmul(x);
    frob(&x.sub(&naive_matmul(q, &coeffs)))
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(16))]

    #[test]
    fn pod_beats_random_projectors(seed in any::<u64>(), n in 5usize..20, m in 3usize..15, r in 1usize..4) {
        let x = gaussian(n, m, seed);
        let r = r.min(n.min(m) - 1).max(1);
        let basis = fit_pod(&Snapshots::new(x.clone()).unwrap(), RankSpec::Fixed(r), false).unwrap();
        let best = projection_residual(&x, &basis.modes);
        for k in 0..100 {
            let q = orthonormal(n, r, seed.wrapping_add(k + 1));
            prop_assert!(best <= projection_residual(&x, &q) + 1e-9);
        }
    }

    #[test]
    fn exact_rank_data_is_spanned(seed in any::<u64>(), n in 6usize..30, m in 6usize..30, r in 1usize..5) {
        let sigmas: Vec<f64> = (0..r).map(|i| 10.0 / (i + 1) as f64).collect();
        let x = with_spectrum(n, m, &sigmas, seed);
        let basis = fit_pod(&Snapshots::new(x.clone()).unwrap(), RankSpec::Fixed(r), false).unwrap();
        prop_assert!(projection_residual(&x, &basis.modes) <= 1e-10 * frob(&x));
        prop_assert!(basis.modes.orthonormality_defect() < 1e-12);
    }
}

#[test]
fn energy_rule_uses_cumulative_singular_values() {
    let x = with_spectrum(20, 12, &[6.0, 3.0, 1.0], 4);
    let fit = fit_pod_detailed(&Snapshots::new(x).unwrap(), RankSpec::Energy(0.85), false).unwrap();
    // 6/10 < 0.85 <= 9/10
    assert_eq!(fit.basis.r(), 2);
}

#[test]
fn centered_pod_stores_the_mean() {
    let mut x = with_spectrum(15, 10, &[2.0, 1.0], 8);
    for j in 0..10 {
        for i in 0..15 {
            x[(i, j)] += i as f64;
        }
    }
    let basis = fit_pod(&Snapshots::new(x.clone()).unwrap(), RankSpec::Fixed(2), true).unwrap();
    let mean = basis.mean.as_ref().unwrap();
    for i in 0..15 {
        let direct: f64 = (0..10).map(|j| x[(i, j)]).sum::<f64>() / 10.0;
        assert!((mean[i] - direct).abs() < 1e-12);
    }
}

#[test]
fn hard_threshold_recovers_planted_rank() {
    let (n, m, r, noise) = (200, 200, 10, 0.01);
    let edge = noise * ((n as f64).sqrt() + (m as f64).sqrt());
    let mut hits = 0;
    for seed in 0..20u64 {
        let sigmas: Vec<f64> = (0..r).map(|i| 100.0 * edge * (1.0 + (r - i) as f64 / r as f64)).collect();
        let mut x = with_spectrum(n, m, &sigmas, seed);
        let mut g = rng(seed + 500);
        for v in x.as_mut_slice() {
            let z: f64 = StandardNormal.sample(&mut g);
            *v += noise * z;
        }
        let s = singular_values(&x).unwrap();
        if hard_threshold_rank(&s, n, m).unwrap().rank == r {
            hits += 1;
        }
    }
    assert!(hits >= 19, "{hits}/20");
}
