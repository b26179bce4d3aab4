// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Matrix-analytic machinery: exponentials and real powers, the product
//! `Phi(n) = prod_{j<n} (I + A/j)`, the matrix Gamma function, Lyapunov
//! solves, spectral splitting and the critical-regime normalizers.
//!
//! All dimensions in scope are small (d <= 10), so everything works on dense
//! `nalgebra` matrices.

mod critical;
mod expm;
mod gamma;
mod lyapunov;
mod spectral;

pub use critical::{build_dn, central_covariance, critical_covariance, factorial_weight};
pub use expm::{expm, matrix_power};
pub use gamma::{matrix_gamma, phi_product, pochhammer_ratio};
pub use lyapunov::{lyapunov_residual, lyapunov_solve};
pub use spectral::{
    eigen_decomposition, spectral_bounds, spectral_split, spectral_split_with_jordan,
    EigenDecomposition, JordanBlock, JordanSpec, SpectralComponent, SpectralSplit,
    CENTRAL_TOLERANCE, SEPARATION_TOLERANCE,
};

use nalgebra::DMatrix;
use num_complex::Complex64;

use crate::{CMat, Error, RMat, Result};

/// Imaginary parts below this (relative to the matrix scale) are discarded.
pub const IMAG_TOLERANCE: f64 = 1e-10;

pub(crate) fn to_complex(m: &RMat) -> CMat {
    m.map(|x| Complex64::new(x, 0.0))
}

/// Real part of `m`, failing if any imaginary part is not negligible.
pub fn real_part_checked(m: &CMat) -> Result<RMat> {
    let scale = m.iter().map(|z| z.norm()).fold(1.0_f64, f64::max);
    let worst = m.iter().map(|z| z.im.abs()).fold(0.0_f64, f64::max);
    if worst > IMAG_TOLERANCE * scale {
        return Err(Error::ComplexResidue(worst));
    }
    Ok(m.map(|z| z.re))
}

pub fn inverse(m: &RMat, what: &str) -> Result<RMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub(crate) fn complex_inverse(m: &CMat, what: &str) -> Result<CMat> {
    m.clone()
        .try_inverse()
        .ok_or_else(|| Error::Singular(what.to_string()))
}

pub(crate) fn symmetrize(m: &RMat) -> RMat {
    (m + m.transpose()) * 0.5
}

/// Largest absolute entry.
pub fn max_abs(m: &RMat) -> f64 {
    m.iter().fold(0.0_f64, |acc, x| acc.max(x.abs()))
}

pub fn is_symmetric(m: &RMat, tol: f64) -> bool {
    m.is_square()
        && (0..m.nrows()).all(|i| (0..i).all(|j| (m[(i, j)] - m[(j, i)]).abs() < tol))
}

/// Unique symmetric positive semi-definite square root of a symmetric matrix.
/// Negative eigenvalues (round-off) are clamped to zero.
pub fn sym_sqrt(m: &RMat) -> RMat {
    let eig = symmetrize(m).symmetric_eigen();
    let vals = eig.eigenvalues.map(|l| l.max(0.0).sqrt());
    &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose()
}

/// Projection of a symmetric matrix onto the PSD cone (negative eigenvalues
/// zeroed). Returns the projection and whether anything was clamped.
pub fn psd_projection(m: &RMat) -> (RMat, bool) {
    let eig = symmetrize(m).symmetric_eigen();
    let clamped = eig.eigenvalues.iter().any(|&l| l < 0.0);
    let vals = eig.eigenvalues.map(|l| l.max(0.0));
    (
        &eig.eigenvectors * DMatrix::from_diagonal(&vals) * eig.eigenvectors.transpose(),
        clamped,
    )
}

pub fn min_sym_eigenvalue(m: &RMat) -> f64 {
    symmetrize(m)
        .symmetric_eigenvalues()
        .iter()
        .copied()
        .fold(f64::INFINITY, f64::min)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn sym_sqrt_squares_back() {
        let m = dmatrix![2.0, 0.5; 0.5, 1.0];
        let r = sym_sqrt(&m);
        assert!((&r * &r - &m).norm() < 1e-13);
        assert!(is_symmetric(&r, 1e-14));
    }

    #[test]
    fn psd_projection_clamps_negative_part() {
        let m = dmatrix![1.0, 0.0; 0.0, -2.0];
        let (p, clamped) = psd_projection(&m);
        assert!(clamped);
        assert!((p - dmatrix![1.0, 0.0; 0.0, 0.0]).norm() < 1e-14);
    }

    #[test]
    fn real_part_rejects_complex() {
        let m = DMatrix::from_element(1, 1, Complex64::new(1.0, 1e-3));
        assert!(matches!(real_part_checked(&m), Err(Error::ComplexResidue(_))));
        let m = DMatrix::from_element(1, 1, Complex64::new(1.0, 1e-14));
        assert_eq!(real_part_checked(&m).unwrap()[(0, 0)], 1.0);
    }
}
