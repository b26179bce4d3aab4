// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Normalizers for the critical spectrum `Re(lambda) = 1/2`: the limit
//! covariance `Q V Q^*` and the logarithmic scaling `D_n`.

use num_complex::Complex64;

use super::{spectral::JordanSpec, to_complex};
use crate::{CMat, Error, RMat, Result};

fn factorial(k: usize) -> f64 {
    (1..=k).map(|i| i as f64).product()
}

/// Weight of entry `(i, j)` (1-based) of the `(r, s)` block of `V` for blocks
/// of sizes `m_r`, `m_s`:
/// `(-1)^(m_r+m_s-i-j) / ((m_r-i)! (m_s-j)! (m_r+m_s-i-j+1))`.
pub fn factorial_weight(m_r: usize, m_s: usize, i: usize, j: usize) -> f64 {
    let a = m_r - i;
    let b = m_s - j;
    let sign = if (a + b) % 2 == 0 { 1.0 } else { -1.0 };
    sign / (factorial(a) * factorial(b) * (a + b + 1) as f64)
}

/// Limit covariance `Q V Q^*` of `D_n^{-1} n^{-A} S_n` when every Jordan block
/// of `A` is central.
pub fn critical_covariance(jordan: &JordanSpec, sigma: &RMat) -> Result<CMat> {
    jordan.validate_critical()?;
    let d = jordan.dim();
    central_covariance(jordan, sigma, &RMat::identity(d, d))
}

/// Covariance `Q V Q^*` of the central component, where the weights use
/// `Q^{-1} P_c Sigma P_c^T Q^{-*}` and only blocks with `Re(lambda) = 1/2`
/// contribute. Blocks with different eigenvalues are uncorrelated.
pub fn central_covariance(jordan: &JordanSpec, sigma: &RMat, p_c: &RMat) -> Result<CMat> {
    let d = jordan.dim();
    if sigma.shape() != (d, d) || p_c.shape() != (d, d) {
        return Err(Error::Jordan(format!(
            "Jordan data has dimension {d}, covariance is {}x{}",
            sigma.nrows(),
            sigma.ncols()
        )));
    }
    let q_inv = jordan.q_inverse()?;
    let projected = to_complex(&(p_c * sigma * p_c.transpose()));
    let tilde = &q_inv * projected * q_inv.adjoint();

    let ranges = jordan.block_ranges();
    let mut v = CMat::zeros(d, d);
    for (r, (br, &(start_r, m_r))) in jordan.blocks.iter().zip(&ranges).enumerate() {
        if !JordanSpec::is_central(br) {
            continue;
        }
        for (s, (bs, &(start_s, m_s))) in jordan.blocks.iter().zip(&ranges).enumerate() {
            if !JordanSpec::is_central(bs) {
                continue;
            }
            if r != s && (br.eigenvalue - bs.eigenvalue).norm() > 1e-9 {
                continue;
            }
            let corner = tilde[(start_r + m_r - 1, start_s + m_s - 1)];
            for i in 1..=m_r {
                for j in 1..=m_s {
                    v[(start_r + i - 1, start_s + j - 1)] =
                        corner * factorial_weight(m_r, m_s, i, j);
                }
            }
        }
    }
    let out = &jordan.q * v * jordan.q.adjoint();
    // exact Hermitian symmetry
    Ok((&out + out.adjoint()) * Complex64::new(0.5, 0.0))
}

/// `D_n = Q diag((log n)^(m-1/2), ..., (log n)^(1/2)) Q^{-1}` blockwise over
/// the central blocks; non-central blocks get the identity.
pub fn build_dn(jordan: &JordanSpec, n: f64) -> Result<CMat> {
    if !(n >= 2.0) {
        return Err(Error::InvalidArgument(format!(
            "D_n needs n >= 2 so that log n > 0, got {n}"
        )));
    }
    let log_n = n.ln();
    let d = jordan.dim();
    let mut diag = nalgebra::DVector::from_element(d, Complex64::new(1.0, 0.0));
    for (block, (start, size)) in jordan.blocks.iter().zip(jordan.block_ranges()) {
        if !JordanSpec::is_central(block) {
            continue;
        }
        for k in 0..size {
            let exponent = (size - k) as f64 - 0.5;
            diag[start + k] = Complex64::new(log_n.powf(exponent), 0.0);
        }
    }
    Ok(&jordan.q * CMat::from_diagonal(&diag) * jordan.q_inverse()?)
}
