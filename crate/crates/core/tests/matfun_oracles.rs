// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Matrix functions against independent oracles: closed-form Gamma values,
//! Gauss-Legendre quadrature of the Gamma integral, scalar recursions and
//! random Lyapunov problems.

use std::f64::consts::PI;

use nalgebra::dmatrix;
use num_complex::Complex64;
use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rwsd::matfun::{
    build_dn, critical_covariance, expm, lyapunov_residual, lyapunov_solve, matrix_gamma,
    matrix_power, phi_product, real_part_checked, spectral_bounds, spectral_split,
    JordanBlock, JordanSpec,
};
use rwsd::{CMat, RMat};

/// Gauss-Legendre nodes and weights on [-1, 1] by Newton iteration on P_n.
fn gauss_legendre(n: usize) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(n);
    for i in 0..n {
        let mut x = (PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 0.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            dp = n as f64 * (x * p1 - p0) / (x * x - 1.0);
            let dx = p1 / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        out.push((x, 2.0 / ((1.0 - x * x) * dp * dp)));
    }
    out
}

/// Panels graded geometrically towards 0 (algebraic endpoint behaviour),
/// then uniform up to `upper`.
fn panels(upper: f64) -> Vec<(f64, f64)> {
    let mut cuts = vec![0.0];
    let mut x = 1e-14;
    while x < 0.5 {
        cuts.push(x);
        x *= 2.0;
    }
    let mut x = 0.5;
    while x < upper {
        cuts.push(x);
        x += 0.125;
    }
    cuts.push(upper);
    cuts.windows(2).map(|w| (w[0], w[1])).collect()
}

/// `int_0^upper f(u) du` for a matrix-valued integrand.
fn integrate_matrix(f: impl Fn(f64) -> RMat, d: usize, upper: f64) -> RMat {
    let rule = gauss_legendre(24);
    let mut acc = RMat::zeros(d, d);
    for (a, b) in panels(upper) {
        let (mid, half) = (0.5 * (a + b), 0.5 * (b - a));
        for &(x, w) in &rule {
            acc += f(mid + half * x) * (w * half);
        }
    }
    acc
}

/// `Gamma(B) = 2 int_0^inf e^{-u^2} u^{2B - I} du` for `B = V diag(b) V^{-1}`.
fn gamma_by_quadrature_diagonalizable(v: &RMat, b: &[f64]) -> RMat {
    let d = b.len();
    let v_inv = v.clone().try_inverse().unwrap();
    let f = |u: f64| {
        let diag = RMat::from_diagonal(&nalgebra::DVector::from_iterator(
            d,
            b.iter().map(|&bi| 2.0 * (-u * u).exp() * u.powf(2.0 * bi - 1.0)),
        ));
        v * diag * &v_inv
    };
    integrate_matrix(f, d, 50f64.sqrt())
}

fn max_entry(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |a, x| a.max(x.abs()))
}

#[test]
fn gamma_of_diagonal_matches_closed_forms() {
    let sqrt_pi = PI.sqrt();
    // Gamma(1/2) = sqrt(pi), Gamma(3/2) = sqrt(pi)/2, integers by factorial
    let cases = [(0.5, sqrt_pi), (1.0, 1.0), (1.5, sqrt_pi / 2.0), (2.0, 1.0), (3.0, 2.0)];
    let b = RMat::from_diagonal(&nalgebra::DVector::from_iterator(5, cases.iter().map(|c| c.0)));
    let g = matrix_gamma(&b).unwrap();
    for (i, &(_, want)) in cases.iter().enumerate() {
        assert!((g[(i, i)] - want).abs() < 1e-8, "Gamma({}) = {}", cases[i].0, g[(i, i)]);
        for j in 0..5 {
            if j != i {
                assert!(g[(i, j)].abs() < 1e-12);
            }
        }
    }
    for &(x, want) in &cases {
        assert!((statrs::function::gamma::gamma(x) - want).abs() < 1e-12);
    }
}

#[test]
fn gamma_of_scaled_identity() {
    let g = matrix_gamma(&(RMat::identity(2, 2) * 1.5)).unwrap();
    assert!((g - RMat::identity(2, 2) * 0.886_226_925_452_758).norm() < 1e-8);
    assert!((matrix_gamma(&RMat::identity(3, 3)).unwrap() - RMat::identity(3, 3)).norm() < 1e-8);
    assert!((matrix_gamma(&(RMat::identity(2, 2) * 2.0)).unwrap() - RMat::identity(2, 2)).norm() < 1e-8);
}

#[test]
fn gamma_of_non_normal_matrix_matches_quadrature() {
    let v = dmatrix![1.0, 0.6; -0.3, 1.0];
    let b = [0.7, 2.3];
    let bm = &v * RMat::from_diagonal(&nalgebra::DVector::from_column_slice(&b)) * v.clone().try_inverse().unwrap();
    let quad = gamma_by_quadrature_diagonalizable(&v, &b);
    let g = matrix_gamma(&bm).unwrap();
    assert!(max_entry(&(g - &quad)) < 1e-8, "quadrature {quad}");
}

#[test]
fn gamma_of_rotation_block_matches_quadrature() {
    // B = a I + b J has u^{2B-I} = u^{2a-1} (cos(2b ln u) I + sin(2b ln u) J)
    let (a, b) = (1.3, 0.4);
    let bm = dmatrix![a, -b; b, a];
    let f = |u: f64| {
        let ln = u.ln();
        let (c, s) = ((2.0 * b * ln).cos(), (2.0 * b * ln).sin());
        dmatrix![c, -s; s, c] * (2.0 * (-u * u).exp() * u.powf(2.0 * a - 1.0))
    };
    let quad = integrate_matrix(f, 2, 50f64.sqrt());
    let g = matrix_gamma(&bm).unwrap();
    assert!(max_entry(&(g - &quad)) < 1e-8, "quadrature {quad}");
}

#[test]
fn phi_scalar_cases() {
    assert_eq!(phi_product(&dmatrix![0.3], 1).unwrap()[(0, 0)], 1.0);
    // telescoping: prod (1 + 1/j) = n
    assert!((phi_product(&dmatrix![1.0], 1000).unwrap()[(0, 0)] - 1000.0).abs() < 1e-9);
    let n = 1_000_000_u64;
    let scaled = phi_product(&dmatrix![0.5], n).unwrap()[(0, 0)] / (n as f64).sqrt();
    let want = 1.0 / (PI.sqrt() / 2.0);
    assert!((scaled - want).abs() < 1e-4, "{scaled} vs {want}");
}

#[test]
fn phi_rate_is_one_over_n() {
    let a = dmatrix![0.3, 0.2; 0.1, 0.6];
    let eye = RMat::identity(2, 2);
    let limit = matrix_gamma(&(&eye + &a)).unwrap().try_inverse().unwrap();
    // recompute Phi incrementally so every power of two is visited once
    let mut phi = eye.clone();
    let mut scaled_errors = Vec::new();
    for j in 1_u64..(1 << 20) {
        phi = (&eye + &a / j as f64) * phi;
        let n = j + 1;
        if n.is_power_of_two() && n >= 1 << 10 {
            let err = (matrix_power(&a, n as f64).unwrap().try_inverse().unwrap() * &phi - &limit).norm();
            scaled_errors.push(err * n as f64);
        }
    }
    assert_eq!(scaled_errors.len(), 11);
    let first = scaled_errors[0];
    assert!(first > 1e-3, "rate constant unexpectedly small: {first}");
    for (k, e) in scaled_errors.iter().enumerate() {
        assert!(*e < 1.5 * first && *e > 0.5 * first, "n = 2^{}: n * err = {e}", k + 10);
    }
}

#[test]
fn phi_matches_recursion() {
    let a = dmatrix![0.2, -0.4, 0.1; 0.3, 0.7, 0.0; 0.0, 0.2, 0.5];
    let eye = RMat::identity(3, 3);
    for n in [1_u64, 5, 64, 1000] {
        let lhs = phi_product(&a, n + 1).unwrap();
        let rhs = (&eye + &a / n as f64) * phi_product(&a, n).unwrap();
        assert!((lhs - &rhs).norm() / rhs.norm() < 1e-12);
    }
}

/// `|n^{-A}| <= C (1 + log^{d-1} n) n^{-lambda_min}` with `C` fitted on
/// `n <= 2^10` and checked up to `2^20`.
fn check_power_bound(a: &RMat) {
    let d = a.nrows();
    let (lambda_min, _) = spectral_bounds(a);
    let ratio = |n: f64| {
        let inv = matrix_power(a, n).unwrap().try_inverse().unwrap();
        inv.norm() / ((1.0 + n.ln().powi(d as i32 - 1)) * n.powf(-lambda_min))
    };
    let fitted = (1..=10).map(|k| ratio(2f64.powi(k))).fold(0.0_f64, f64::max);
    for k in 11..=20 {
        let r = ratio(2f64.powi(k));
        assert!(r <= 1.05 * fitted, "n = 2^{k}: ratio {r} exceeds fitted constant {fitted}");
    }
}

#[test]
fn inverse_power_bound_diagonalizable() {
    check_power_bound(&dmatrix![0.3, 0.2; 0.1, 0.6]);
    check_power_bound(&dmatrix![0.5, -1.0; 1.0, 0.5]);
}

#[test]
fn inverse_power_bound_jordan() {
    check_power_bound(&dmatrix![0.5, 1.0; 0.0, 0.5]);
    check_power_bound(&dmatrix![0.3, 1.0, 0.0; 0.0, 0.3, 1.0; 0.0, 0.0, 0.3]);
}

#[test]
fn expm_and_power_examples() {
    assert_eq!(expm(&RMat::zeros(3, 3)).unwrap(), RMat::identity(3, 3));
    let e = expm(&dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
    assert!((e - dmatrix![std::f64::consts::E, 0.0; 0.0, 1.0 / std::f64::consts::E]).norm() < 1e-14);
    let nil = dmatrix![0.0, 1.0; 0.0, 0.0];
    assert!((expm(&nil).unwrap() - (RMat::identity(2, 2) + &nil)).norm() < 1e-15);
    assert!((matrix_power(&RMat::identity(2, 2), 7.0).unwrap() - RMat::identity(2, 2) * 7.0).norm() < 1e-13);
    let b = dmatrix![0.3, 0.1; 0.2, 0.9];
    assert!((matrix_power(&b, 1.0).unwrap() - RMat::identity(2, 2)).norm() < 1e-15);
    assert!((matrix_power(&dmatrix![0.5], 4.0).unwrap()[(0, 0)] - 2.0).abs() < 1e-15);
}

#[test]
fn lyapunov_scalar_and_decoupled() {
    assert!((lyapunov_solve(&dmatrix![0.25], &dmatrix![1.0]).unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
    assert!((lyapunov_solve(&dmatrix![0.75], &dmatrix![1.0]).unwrap()[(0, 0)] + 2.0).abs() < 1e-14);
    let x = lyapunov_solve(&(RMat::identity(2, 2) * 0.25), &RMat::identity(2, 2)).unwrap();
    assert!((x - RMat::identity(2, 2) * 2.0).norm() < 1e-14);
}

/// Random drift with spectral abscissa below 0.45: real eigenvalues and
/// rotation blocks conjugated by a well-conditioned basis.
fn random_drift(rng: &mut ChaCha8Rng, d: usize) -> RMat {
    let mut core = RMat::zeros(d, d);
    let mut i = 0;
    while i < d {
        let re = rng.gen_range(-0.5..0.44);
        if i + 1 < d && rng.gen_bool(0.4) {
            let im = rng.gen_range(0.05..1.0);
            core[(i, i)] = re;
            core[(i + 1, i + 1)] = re;
            core[(i, i + 1)] = -im;
            core[(i + 1, i)] = im;
            i += 2;
        } else {
            core[(i, i)] = re;
            i += 1;
        }
    }
    let v = RMat::identity(d, d) + RMat::from_fn(d, d, |_, _| rng.gen_range(-0.3..0.3));
    &v * core * v.try_inverse().unwrap()
}

fn random_spd(rng: &mut ChaCha8Rng, d: usize) -> RMat {
    let l = RMat::from_fn(d, d, |_, _| rng.gen_range(-1.0..1.0));
    &l * l.transpose() + RMat::identity(d, d) * 0.1
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(100))]

    #[test]
    fn lyapunov_residual_is_tiny(seed in any::<u64>(), d in 1_usize..=6) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = random_drift(&mut rng, d);
        prop_assume!(spectral_bounds(&a).1 < 0.45);
        let sigma = random_spd(&mut rng, d);
        let x = lyapunov_solve(&a, &sigma).unwrap();
        prop_assert!(lyapunov_residual(&a, &sigma, &x) < 1e-12);
    }

    #[test]
    fn power_group_law(seed in any::<u64>(), d in 1_usize..=4, m in prop::sample::select(vec![2.0, 3.0, 10.0]), n in prop::sample::select(vec![2.0, 3.0, 10.0])) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let b = random_drift(&mut rng, d);
        let lhs = matrix_power(&b, m).unwrap() * matrix_power(&b, n).unwrap();
        let rhs = matrix_power(&b, m * n).unwrap();
        prop_assert!((lhs - &rhs).norm() / rhs.norm().max(1.0) < 1e-10);
    }

    #[test]
    fn spectral_projections_are_consistent(seed in any::<u64>(), d in 1_usize..=5) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let eigs: Vec<f64> = (0..d).map(|_| {
            match rng.gen_range(0..3) {
                0 => rng.gen_range(0.05..0.4),
                1 => 0.5,
                _ => rng.gen_range(0.6..0.95),
            }
        }).collect();
        let v = RMat::identity(d, d) + RMat::from_fn(d, d, |_, _| rng.gen_range(-0.3..0.3));
        let a = &v * RMat::from_diagonal(&nalgebra::DVector::from_vec(eigs)) * v.clone().try_inverse().unwrap();
        let split = spectral_split(&a).unwrap();
        let eye = RMat::identity(d, d);
        prop_assert!((&split.p_s + &split.p_c + &split.p_u - &eye).norm() < 1e-10);
        for p in [&split.p_s, &split.p_c, &split.p_u] {
            prop_assert!((p * p - p).norm() < 1e-10);
            prop_assert!((p * &a - &a * p).norm() < 1e-10);
        }
    }

    #[test]
    fn critical_covariance_is_hermitian_psd(seed in any::<u64>(), sizes in prop::collection::vec(1_usize..=3, 1..=3)) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let d: usize = sizes.iter().sum();
        let q = CMat::from_fn(d, d, |i, j| {
            let base = if i == j { 1.0 } else { 0.0 };
            Complex64::new(base + rng.gen_range(-0.3..0.3), rng.gen_range(-0.3..0.3))
        });
        let blocks = sizes.iter().map(|&size| JordanBlock {
            eigenvalue: Complex64::new(0.5, rng.gen_range(-1.0..1.0)),
            size,
        }).collect();
        let jordan = JordanSpec::new(q, blocks).unwrap();
        let sigma = random_spd(&mut rng, d);
        let v = critical_covariance(&jordan, &sigma).unwrap();
        prop_assert!((&v - v.adjoint()).norm() < 1e-12);
        let herm = (&v + v.adjoint()) * Complex64::new(0.5, 0.0);
        let min_eig = herm.symmetric_eigenvalues().iter().copied().fold(f64::INFINITY, f64::min);
        prop_assert!(min_eig > -1e-10 * v.norm().max(1.0), "min eigenvalue {}", min_eig);
    }
}

#[test]
fn critical_covariance_examples() {
    let one = JordanSpec::new(
        CMat::identity(1, 1),
        vec![JordanBlock { eigenvalue: Complex64::new(0.5, 0.0), size: 1 }],
    )
    .unwrap();
    let v = real_part_checked(&critical_covariance(&one, &dmatrix![1.3]).unwrap()).unwrap();
    assert!((v[(0, 0)] - 1.3).abs() < 1e-15);

    // single 2-block: weights (-1)^(4-i-j) / ((2-i)! (2-j)! (5-i-j))
    let two = JordanSpec::new(
        CMat::identity(2, 2),
        vec![JordanBlock { eigenvalue: Complex64::new(0.5, 0.0), size: 2 }],
    )
    .unwrap();
    let v = real_part_checked(&critical_covariance(&two, &dmatrix![0.0, 0.0; 0.0, 1.0]).unwrap()).unwrap();
    let mut want = RMat::zeros(2, 2);
    for i in 1..=2_i32 {
        for j in 1..=2_i32 {
            let fact = |k: i32| (1..=k).product::<i32>() as f64;
            let sign = if (4 - i - j) % 2 == 0 { 1.0 } else { -1.0 };
            want[((i - 1) as usize, (j - 1) as usize)] = sign / (fact(2 - i) * fact(2 - j) * (5 - i - j) as f64);
        }
    }
    assert!((v - want).norm() < 1e-15);

    let d = real_part_checked(&build_dn(&one, std::f64::consts::E.powi(2)).unwrap()).unwrap();
    assert!((d[(0, 0)] - 2f64.sqrt()).abs() < 1e-14);
}
