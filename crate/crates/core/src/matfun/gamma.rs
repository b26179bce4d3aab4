// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use super::{expm, inverse, spectral::complex_eigenvalues};
use crate::{Error, RMat, Result};

/// `Phi(n) = prod_{j=1}^{n-1} (I + A/j)`, with `Phi(1) = I`.
///
/// The factors commute, so the product is accumulated left to right.
pub fn phi_product(a: &RMat, n: u64) -> Result<RMat> {
    if n == 0 {
        return Err(Error::InvalidArgument("phi_product needs n >= 1".into()));
    }
    check_factors_invertible(a, n)?;
    let d = a.nrows();
    let mut phi = RMat::identity(d, d);
    let mut factor = RMat::identity(d, d);
    let mut tmp = RMat::zeros(d, d);
    for j in 1..n {
        let inv_j = 1.0 / j as f64;
        factor.copy_from(a);
        factor *= inv_j;
        for i in 0..d {
            factor[(i, i)] += 1.0;
        }
        factor.mul_to(&phi, &mut tmp);
        std::mem::swap(&mut phi, &mut tmp);
    }
    Ok(phi)
}

/// `I + A/j` is singular exactly when `A` has the eigenvalue `-j`.
fn check_factors_invertible(a: &RMat, n: u64) -> Result<()> {
    for lambda in complex_eigenvalues(a) {
        if lambda.im.abs() < 1e-9 && lambda.re < 0.0 {
            let j = (-lambda.re).round();
            if j >= 1.0 && j < n as f64 && (lambda.re + j).abs() < 1e-9 {
                return Err(Error::Singular(format!(
                    "factor I + A/{j} of Phi is singular (eigenvalue {})",
                    lambda.re
                )));
            }
        }
    }
    Ok(())
}

/// Pochhammer approximant `(n-1)! (B)_n^{-1} n^B` of `Gamma(B)`, where
/// `(B)_n = B (B + I) ... (B + (n-1) I)`.
///
/// Evaluated as `B^{-1} prod_j (I + B/j)^{-1} n^B`, accumulated over dyadic
/// index blocks `[2^k, 2^{k+1})`: each block product is close to `2^B`, so
/// multiplying by `2^{-B}` blockwise keeps every partial result O(1) and
/// nothing overflows even though `(n-1)!` does.
pub fn pochhammer_ratio(b: &RMat, n: u64) -> Result<RMat> {
    Ok(pochhammer_ratios(b, &[n])?.remove(0))
}

/// Same as [`pochhammer_ratio`] for several increasing `n` in one pass.
fn pochhammer_ratios(b: &RMat, ns: &[u64]) -> Result<Vec<RMat>> {
    let d = b.nrows();
    if ns.iter().any(|&n| n == 0) || ns.windows(2).any(|w| w[0] >= w[1]) {
        return Err(Error::InvalidArgument(
            "pochhammer evaluation points must be positive and increasing".into(),
        ));
    }
    let mut acc = inverse(b, "Gamma argument B")?;
    let mut out = Vec::with_capacity(ns.len());
    let mut start = 1_u64;
    let mut block = RMat::identity(d, d);
    let mut factor = RMat::zeros(d, d);
    let mut tmp = RMat::zeros(d, d);
    for &target in ns {
        while start < target {
            let end = (start * 2).min(target);
            block.fill_with_identity();
            for j in start..end {
                factor.copy_from(b);
                factor /= j as f64;
                for i in 0..d {
                    factor[(i, i)] += 1.0;
                }
                factor.mul_to(&block, &mut tmp);
                std::mem::swap(&mut block, &mut tmp);
            }
            let ratio = expm(&(b * (end as f64 / start as f64).ln()))?;
            let normalized = inverse(&block, "Pochhammer block")? * ratio;
            acc *= normalized;
            start = end;
        }
        out.push(acc.clone());
    }
    Ok(out)
}

/// Matrix Gamma function `Gamma(B) = int_0^inf e^{-t} t^{B-I} dt` for
/// `lambda_min(B) > 0`.
///
/// The Pochhammer approximant has an asymptotic expansion in powers of
/// `1/n`; it is evaluated at `n = 2^16, 2^17, 2^18` and extrapolated with two
/// Richardson levels.
pub fn matrix_gamma(b: &RMat) -> Result<RMat> {
    if !b.is_square() {
        return Err(Error::InvalidArgument("Gamma of a non-square matrix".into()));
    }
    let lambda_min = complex_eigenvalues(b)
        .iter()
        .map(|z| z.re)
        .fold(f64::INFINITY, f64::min);
    if !(lambda_min > 0.0) {
        return Err(Error::Spectrum(format!(
            "matrix Gamma needs lambda_min(B) > 0, got {lambda_min}"
        )));
    }
    let g = pochhammer_ratios(b, &[1 << 16, 1 << 17, 1 << 18])?;
    let r1 = &g[1] * 2.0 - &g[0];
    let r2 = &g[2] * 2.0 - &g[1];
    Ok((r2 * 4.0 - r1) / 3.0)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::matfun::matrix_power;
    use nalgebra::dmatrix;

    #[test]
    fn phi_small_cases() {
        let a = dmatrix![0.3, 0.1; 0.0, 0.6];
        assert_eq!(phi_product(&a, 1).unwrap(), RMat::identity(2, 2));
        assert!((phi_product(&dmatrix![1.0], 50).unwrap()[(0, 0)] - 50.0).abs() < 1e-11);
    }

    #[test]
    fn phi_recursion() {
        let a = dmatrix![0.3, 0.1; -0.2, 0.6];
        for n in [1_u64, 2, 7, 100] {
            let lhs = phi_product(&a, n + 1).unwrap();
            let rhs = (RMat::identity(2, 2) + &a / n as f64) * phi_product(&a, n).unwrap();
            assert!((lhs - &rhs).norm() / rhs.norm() < 1e-12);
        }
    }

    #[test]
    fn phi_scalar_half_converges_to_inverse_gamma() {
        // 1/Gamma(1.5) = 2/sqrt(pi)
        let n = 1_000_000_u64;
        let phi = phi_product(&dmatrix![0.5], n).unwrap()[(0, 0)];
        let want = 2.0 / std::f64::consts::PI.sqrt();
        assert!((phi / (n as f64).sqrt() - want).abs() < 1e-4);
    }

    #[test]
    fn phi_singular_factor() {
        assert!(matches!(
            phi_product(&dmatrix![-3.0], 10),
            Err(Error::Singular(_))
        ));
        assert!(phi_product(&dmatrix![-3.0], 3).is_ok());
    }

    #[test]
    fn gamma_trivial_points() {
        let i = RMat::identity(2, 2);
        assert!((matrix_gamma(&i).unwrap() - &i).norm() < 1e-10);
        assert!((matrix_gamma(&(&i * 2.0)).unwrap() - &i).norm() < 1e-10);
    }

    #[test]
    fn gamma_rejects_bad_spectrum() {
        assert!(matches!(
            matrix_gamma(&dmatrix![-0.5]),
            Err(Error::Spectrum(_))
        ));
    }

    #[test]
    fn pochhammer_matches_phi_route() {
        // (n-1)! (I+A)_n^{-1} n^{I+A} and n^{A} Phi(n)^{-1} differ by the
        // single factor n (A + nI)^{-1}.
        let a = dmatrix![0.3, 0.2; 0.0, 0.7];
        let n = 64_u64;
        let i = RMat::identity(2, 2);
        let poch = pochhammer_ratio(&(&i + &a), n).unwrap();
        let phi_route = matrix_power(&a, n as f64).unwrap()
            * crate::matfun::inverse(&phi_product(&a, n).unwrap(), "phi").unwrap()
            * (&i * n as f64)
            * crate::matfun::inverse(&(&a + &i * n as f64), "shift").unwrap();
        assert!((poch - &phi_route).norm() / phi_route.norm() < 1e-12);
    }
}
