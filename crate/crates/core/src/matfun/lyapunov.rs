// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use super::{spectral::complex_eigenvalues, symmetrize};
use crate::{Error, RMat, Result};

/// Solves `(I/2 - A) X + X (I/2 - A)^T = Sigma` through the vectorized form
/// `(I (x) B + B (x) I) vec(X) = vec(Sigma)`, `B = I/2 - A`.
///
/// The Kronecker sum is singular exactly when two eigenvalues of `B` add up
/// to zero, i.e. when eigenvalues of `A` pair up around real part 1/2; that
/// case belongs to the critical normalization instead.
pub fn lyapunov_solve(a: &RMat, sigma: &RMat) -> Result<RMat> {
    let d = a.nrows();
    if !a.is_square() || sigma.shape() != (d, d) {
        return Err(Error::InvalidArgument(
            "lyapunov_solve needs square A and Sigma of the same size".into(),
        ));
    }
    let eigs = complex_eigenvalues(a);
    let scale = a.norm().max(1.0);
    for (i, li) in eigs.iter().enumerate() {
        for lj in &eigs[i..] {
            // eigenvalues of the Kronecker sum: (1/2 - li) + (1/2 - lj)
            let s = (1.0 - li - lj).norm();
            if s < 1e-10 * scale {
                return Err(Error::Singular(format!(
                    "Kronecker sum is singular: eigenvalues {li} and {lj} of A sum to 1"
                )));
            }
        }
    }

    let eye = RMat::identity(d, d);
    let b = &eye * 0.5 - a;
    let kron = eye.kronecker(&b) + b.kronecker(&eye);
    let rhs = nalgebra::DVector::from_column_slice(sigma.as_slice());
    let lu = kron.clone().lu();
    let mut x = lu
        .solve(&rhs)
        .ok_or_else(|| Error::Singular("Kronecker sum".into()))?;
    // one step of iterative refinement
    let residual = &rhs - &kron * &x;
    if let Some(dx) = lu.solve(&residual) {
        x += dx;
    }
    Ok(symmetrize(&RMat::from_column_slice(d, d, x.as_slice())))
}

/// Relative residual `|(I/2 - A) X + X (I/2 - A)^T - Sigma| / |Sigma|`.
pub fn lyapunov_residual(a: &RMat, sigma: &RMat, x: &RMat) -> f64 {
    let d = a.nrows();
    let b = RMat::identity(d, d) * 0.5 - a;
    (&b * x + x * b.transpose() - sigma).norm() / sigma.norm()
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    #[test]
    fn scalar_cases() {
        let x = lyapunov_solve(&dmatrix![0.25], &dmatrix![1.0]).unwrap();
        assert!((x[(0, 0)] - 2.0).abs() < 1e-14);
        let x = lyapunov_solve(&dmatrix![0.75], &dmatrix![1.0]).unwrap();
        assert!((x[(0, 0)] + 2.0).abs() < 1e-14);
    }

    #[test]
    fn decoupled() {
        let a = RMat::identity(2, 2) * 0.25;
        let x = lyapunov_solve(&a, &RMat::identity(2, 2)).unwrap();
        assert!((x - RMat::identity(2, 2) * 2.0).norm() < 1e-14);
    }

    #[test]
    fn coupled_residual_and_definiteness() {
        let a = dmatrix![0.1, 0.2; -0.1, 0.3];
        let sigma = dmatrix![1.0, 0.3; 0.3, 2.0];
        let x = lyapunov_solve(&a, &sigma).unwrap();
        assert!(lyapunov_residual(&a, &sigma, &x) < 1e-12);
        assert!(crate::matfun::min_sym_eigenvalue(&x) > 0.0);
    }

    #[test]
    fn critical_spectrum_is_singular() {
        assert!(matches!(
            lyapunov_solve(&dmatrix![0.5], &dmatrix![1.0]),
            Err(Error::Singular(_))
        ));
        // 0.3 + 0.7 = 1 also pairs up
        assert!(lyapunov_solve(&dmatrix![0.3, 0.0; 0.0, 0.7], &RMat::identity(2, 2)).is_err());
    }
}
