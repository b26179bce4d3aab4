// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use crate::{Error, RMat, Result};

/// Matrix exponential (Padé scaling-and-squaring, via `nalgebra`).
pub fn expm(m: &RMat) -> Result<RMat> {
    if !m.is_square() {
        return Err(Error::InvalidArgument("expm of a non-square matrix".into()));
    }
    if m.iter().any(|x| !x.is_finite()) {
        return Err(Error::InvalidArgument("expm of a non-finite matrix".into()));
    }
    let e = m.exp();
    if e.iter().any(|x| !x.is_finite()) {
        return Err(Error::Overflow { step: 0 });
    }
    Ok(e)
}

/// `n^B := exp(log(n) B)` for real `n > 0`.
pub fn matrix_power(b: &RMat, n: f64) -> Result<RMat> {
    if !(n > 0.0) || !n.is_finite() {
        return Err(Error::InvalidArgument(format!(
            "matrix_power needs n > 0, got {n}"
        )));
    }
    if n == 1.0 {
        return Ok(RMat::identity(b.nrows(), b.ncols()));
    }
    expm(&(b * n.ln()))
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::dmatrix;

    fn rel_err(a: &RMat, b: &RMat) -> f64 {
        (a - b).norm() / b.norm()
    }

    #[test]
    fn exp_of_zero_is_identity() {
        assert_eq!(expm(&RMat::zeros(3, 3)).unwrap(), RMat::identity(3, 3));
    }

    #[test]
    fn exp_of_diagonal() {
        let e = expm(&dmatrix![1.0, 0.0; 0.0, -1.0]).unwrap();
        let want = dmatrix![std::f64::consts::E, 0.0; 0.0, 1.0 / std::f64::consts::E];
        assert!(rel_err(&e, &want) < 1e-14);
    }

    #[test]
    fn exp_of_nilpotent() {
        let n2 = dmatrix![0.0, 1.0; 0.0, 0.0];
        let e = expm(&n2).unwrap();
        assert!(rel_err(&e, &(RMat::identity(2, 2) + &n2)) < 1e-15);
    }

    #[test]
    fn exp_of_rotation_generator_large_norm() {
        // exp([[0, -t], [t, 0]]) is the rotation by t.
        let t = 19.0_f64;
        let e = expm(&dmatrix![0.0, -t; t, 0.0]).unwrap();
        let want = dmatrix![t.cos(), -t.sin(); t.sin(), t.cos()];
        assert!(rel_err(&e, &want) < 1e-12);
    }

    #[test]
    fn overflow_is_reported() {
        assert!(matches!(
            expm(&dmatrix![1000.0]),
            Err(Error::Overflow { .. })
        ));
    }

    #[test]
    fn power_basics() {
        let i = RMat::identity(2, 2);
        assert!(rel_err(&matrix_power(&i, 7.0).unwrap(), &(&i * 7.0)) < 1e-14);
        let b = dmatrix![0.3, 1.0; -0.2, 0.9];
        assert_eq!(matrix_power(&b, 1.0).unwrap(), i);
        assert!((matrix_power(&dmatrix![0.5], 4.0).unwrap()[(0, 0)] - 2.0).abs() < 1e-14);
        assert!(matrix_power(&b, 0.0).is_err());
    }

    #[test]
    fn power_group_law() {
        let b = dmatrix![0.3, 1.0, 0.0; -0.2, 0.9, 0.1; 0.0, 0.4, 0.6];
        for &m in &[2.0, 3.0, 10.0] {
            for &n in &[2.0, 3.0, 10.0] {
                let lhs = matrix_power(&b, m).unwrap() * matrix_power(&b, n).unwrap();
                let rhs = matrix_power(&b, m * n).unwrap();
                assert!(rel_err(&lhs, &rhs) < 1e-10, "m={m} n={n}");
            }
        }
    }
}
