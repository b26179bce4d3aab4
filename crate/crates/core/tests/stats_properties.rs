// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use nalgebra::dmatrix;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwsd::simulate::Checkpoint;
use rwsd::stats::{
    empirical_covariance, energy_permutation_quantile, gaussian_fit_test, ks_band,
    mahalanobis_radii, sample_gaussian, slope_fit, sphere_test, two_sample_distance,
};
use rwsd::{RMat, RngStream};

fn random_rows(seed: u64, m: usize, d: usize) -> RMat {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    RMat::from_fn(m, d, |_, _| rng.gen_range(-3.0..3.0))
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> RMat {
    let l = RMat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &l * l.transpose() + RMat::identity(d, d) * 0.2
}

fn random_orthogonal(rng: &mut ChaCha8Rng, d: usize) -> RMat {
    RMat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0)).qr().q()
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn mahalanobis_is_invariant_under_linear_maps(seed in any::<u64>(), d in 1_usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let cov = random_spd(&mut rng, d);
        let t = RMat::identity(d, d) + RMat::from_fn(d, d, |_, _| rng.gen_range(-0.5..0.5));
        prop_assume!(t.determinant().abs() > 0.1);
        let rows = random_rows(seed, 50, d);
        let mapped = &rows * t.transpose();
        let before = mahalanobis_radii(&rows, &cov);
        let after = mahalanobis_radii(&mapped, &(&t * &cov * t.transpose()));
        for (x, y) in before.iter().zip(&after) {
            prop_assert!((x - y).abs() <= 1e-10 * x.max(1.0), "{} vs {}", x, y);
        }
    }

    #[test]
    fn energy_distance_is_exactly_symmetric(seed in any::<u64>(), na in 1_usize..40, nb in 1_usize..40, d in 1_usize..=3) {
        let a = random_rows(seed, na, d);
        let b = random_rows(seed.wrapping_add(1), nb, d);
        prop_assert_eq!(two_sample_distance(&a, &b).unwrap(), two_sample_distance(&b, &a).unwrap());
        prop_assert_eq!(two_sample_distance(&a, &a).unwrap(), 0.0);
        prop_assert!(two_sample_distance(&a, &b).unwrap() >= 0.0);
    }

    #[test]
    fn sphere_summary_depends_on_norms_only(seed in any::<u64>(), d in 1_usize..=4) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let rows = random_rows(seed, 60, d);
        let q = random_orthogonal(&mut rng, d);
        let rotated = &rows * q.transpose();
        let (s, t) = (sphere_test(&rows, 2.0, 0.05), sphere_test(&rotated, 2.0, 0.05));
        prop_assert!((s.mean_deviation - t.mean_deviation).abs() < 1e-12);
        prop_assert!((s.max_deviation - t.max_deviation).abs() < 1e-12);
        // norms agree to rounding; a row sitting on a band edge could flip
        prop_assert!((s.fraction_within - t.fraction_within).abs() <= 1.0 / 60.0);
    }

    #[test]
    fn fit_test_is_deterministic(seed in any::<u64>()) {
        let rows = random_rows(seed, 200, 2);
        let cov = RMat::identity(2, 2) * 3.0;
        prop_assert_eq!(
            gaussian_fit_test(&rows, &cov, 8, seed).unwrap(),
            gaussian_fit_test(&rows, &cov, 8, seed).unwrap()
        );
    }
}

#[test]
fn covariance_of_standard_normal_rows() {
    let m = 100_000;
    let rows = sample_gaussian(&RMat::identity(3, 3), m, &mut RngStream::new(4, 0));
    let cov = empirical_covariance(&rows);
    let tol = 5.0 / (m as f64).sqrt();
    assert!((cov - RMat::identity(3, 3)).abs().max() < tol);
}

#[test]
fn covariance_examples() {
    assert_eq!(empirical_covariance(&RMat::from_fn(10, 2, |_, j| j as f64 + 1.0)), RMat::zeros(2, 2));
    let m = 8;
    let rows = RMat::from_fn(m, 2, |i, j| {
        let v = [1.0, -2.0][j];
        if i % 2 == 0 { v } else { -v }
    });
    let v = dmatrix![1.0; -2.0];
    let want = &v * v.transpose() * (m as f64 / (m as f64 - 1.0));
    assert!((empirical_covariance(&rows) - want).norm() < 1e-14);
}

#[test]
fn fit_test_accepts_the_law_and_rejects_a_scaled_one() {
    let cov = dmatrix![1.0, 0.5; 0.5, 2.0];
    let m = 10_000;
    let rows = sample_gaussian(&cov, m, &mut RngStream::new(9, 1));
    let fit = gaussian_fit_test(&rows, &cov, 32, 1).unwrap();
    assert!(fit.max_ks < ks_band(0.99, m) * 1.5, "max KS {}", fit.max_ks);
    let wrong = gaussian_fit_test(&rows, &(&cov * 2.0), 32, 1).unwrap();
    assert!(wrong.max_ks > ks_band(0.99, m) * 1.5, "max KS {}", wrong.max_ks);

    // K = 1, d = 1: the single projection is plain KS
    let one = sample_gaussian(&dmatrix![1.0], 500, &mut RngStream::new(9, 2));
    let fit = gaussian_fit_test(&one, &dmatrix![1.0], 1, 0).unwrap();
    let normal = statrs::distribution::Normal::new(0.0, 1.0).unwrap();
    let direct = rwsd::sde::ks_distance(one.as_slice(), |x| statrs::distribution::ContinuousCDF::cdf(&normal, x));
    assert!((fit.max_ks - direct).abs() < 1e-15);
}

#[test]
fn energy_distance_of_point_masses() {
    let a = RMat::zeros(5, 2);
    let b = RMat::from_fn(7, 2, |_, j| if j == 0 { 1.0 } else { 0.0 });
    assert!((two_sample_distance(&a, &b).unwrap() - 2.0).abs() < 1e-15);
}

#[test]
fn same_law_draws_pass_the_permutation_test() {
    let m = 10_000;
    let cov = RMat::identity(2, 2);
    let a = sample_gaussian(&cov, m, &mut RngStream::new(31, 0));
    let b = sample_gaussian(&cov, m, &mut RngStream::new(31, 1));
    let observed = two_sample_distance(&a, &b).unwrap();
    let q99 = energy_permutation_quantile(&a, &b, 100, 0.99, 5).unwrap();
    assert!(observed < q99, "energy {observed}, 99% permutation quantile {q99}");
    // a shifted copy is detected
    let shifted = b.map(|x| x + 0.1);
    assert!(two_sample_distance(&a, &shifted).unwrap() > q99);
}

#[test]
fn permutation_statistic_matches_direct_energy() {
    // with a single "permutation" that keeps the labels, -w^T D w must equal
    // the directly computed energy distance; exercise it through tiny pools
    let a = random_rows(1, 3, 2);
    let b = random_rows(2, 4, 2);
    let pooled_energy: Vec<f64> = {
        let mut all = Vec::new();
        let n = 7;
        let pooled = RMat::from_fn(n, 2, |i, j| if i < 3 { a[(i, j)] } else { b[(i - 3, j)] });
        // every split of the pool into 3 + 4 rows
        for mask in 0u32..(1 << n) {
            if mask.count_ones() != 3 {
                continue;
            }
            let pick = |want: bool| {
                let idx: Vec<usize> = (0..n).filter(|&i| ((mask >> i) & 1 == 1) == want).collect();
                RMat::from_fn(idx.len(), 2, |r, c| pooled[(idx[r], c)])
            };
            all.push(two_sample_distance(&pick(true), &pick(false)).unwrap());
        }
        all
    };
    let max = pooled_energy.iter().copied().fold(0.0, f64::max);
    let min = pooled_energy.iter().copied().fold(f64::INFINITY, f64::min);
    let q = energy_permutation_quantile(&a, &b, 500, 0.5, 3).unwrap();
    assert!(q >= min - 1e-12 && q <= max + 1e-12);
    let q_max = energy_permutation_quantile(&a, &b, 500, 1.0, 3).unwrap();
    assert!(pooled_energy.iter().any(|e| (e - q_max).abs() < 1e-12), "q_max {q_max}");
}

#[test]
fn slope_examples() {
    let cps = |f: fn(f64) -> f64| -> Vec<Checkpoint> {
        (0..12).map(|i| {
            let k = 1_u64 << i;
            Checkpoint { k, position: vec![f(k as f64), 0.0] }
        }).collect()
    };
    assert!((slope_fit(&cps(|k| k)).unwrap() - 1.0).abs() < 1e-12);
    assert!((slope_fit(&cps(f64::sqrt)).unwrap() - 0.5).abs() < 1e-12);
    assert!(slope_fit(&cps(|_| 0.0)).is_err());
    assert!(slope_fit(&cps(|k| k)[..3]).is_err());
}
