// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Eigen-structure of the drift matrix: spectral bounds, eigenbases,
//! user-supplied Jordan data and the stable/central/unstable splitting
//! around real part 1/2.

use nalgebra::linalg::{Schur, SVD};
use num_complex::Complex64;

use super::{complex_inverse, real_part_checked, to_complex};
use crate::{CMat, Error, RMat, Result};

/// Eigenvalues whose real part is within this distance of 1/2 are central.
pub const CENTRAL_TOLERANCE: f64 = 1e-9;
/// Non-central eigenvalues must be at least this far from 1/2.
pub const SEPARATION_TOLERANCE: f64 = 1e-6;
/// Largest eigenbasis condition number accepted without Jordan data.
const MAX_CONDITION: f64 = 1e8;

pub(crate) fn complex_eigenvalues(a: &RMat) -> Vec<Complex64> {
    let n = a.nrows();
    if n == 0 {
        return Vec::new();
    }
    match Schur::try_new(a.clone(), f64::EPSILON, 10_000) {
        Some(schur) => schur.complex_eigenvalues().iter().copied().collect(),
        None => vec![Complex64::new(f64::NAN, 0.0); n],
    }
}

/// `(lambda_min, lambda_max)`: the extremal real parts of the spectrum.
pub fn spectral_bounds(a: &RMat) -> (f64, f64) {
    complex_eigenvalues(a)
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), z| {
            (lo.min(z.re), hi.max(z.re))
        })
}

/// Diagonalization `A = V diag(values) V^{-1}` over the complex numbers.
#[derive(Clone, Debug)]
pub struct EigenDecomposition {
    pub values: Vec<Complex64>,
    pub vectors: CMat,
    pub inverse: CMat,
    pub condition: f64,
}

fn condition_number(m: &CMat) -> f64 {
    let sv = SVD::new(m.clone(), false, false).singular_values;
    let max = sv.iter().copied().fold(0.0_f64, f64::max);
    let min = sv.iter().copied().fold(f64::INFINITY, f64::min);
    if min == 0.0 {
        f64::INFINITY
    } else {
        max / min
    }
}

/// Eigendecomposition of a diagonalizable real matrix.
///
/// Nearly equal eigenvalues are clustered and their eigenvectors taken as an
/// orthonormal basis of the numerical null space of `A - lambda I`. A cluster
/// whose null space is too small (a defective eigenvalue) or an eigenbasis
/// with condition number above 1e8 is reported as [`Error::IllConditioned`].
pub fn eigen_decomposition(a: &RMat) -> Result<EigenDecomposition> {
    let d = a.nrows();
    let values = complex_eigenvalues(a);
    if values.iter().any(|z| !z.re.is_finite() || !z.im.is_finite()) {
        return Err(Error::InvalidArgument(
            "eigenvalue iteration did not converge".into(),
        ));
    }
    let scale = a.norm().max(1.0);
    let cluster_tol = 1e-7 * scale;
    let null_tol = 1e-6 * scale;

    let mut assigned = vec![false; d];
    let mut ordered_values = Vec::with_capacity(d);
    let mut columns: Vec<nalgebra::DVector<Complex64>> = Vec::with_capacity(d);
    for i in 0..d {
        if assigned[i] {
            continue;
        }
        let members: Vec<usize> = (i..d)
            .filter(|&j| !assigned[j] && (values[j] - values[i]).norm() < cluster_tol)
            .collect();
        let m = members.len();
        let center = members.iter().map(|&j| values[j]).sum::<Complex64>() / m as f64;
        let mut shifted = to_complex(a);
        for k in 0..d {
            shifted[(k, k)] -= center;
        }
        let svd = SVD::new(shifted, false, true);
        let v_t = svd.v_t.expect("requested V^T");
        // singular values come sorted in descending order
        for (slot, &j) in members.iter().enumerate() {
            let row = d - 1 - slot;
            if svd.singular_values[row] > null_tol {
                return Err(Error::IllConditioned {
                    cond: f64::INFINITY,
                });
            }
            let v = v_t.row(row).adjoint();
            columns.push(v);
            ordered_values.push(values[j]);
            assigned[j] = true;
        }
    }
    let vectors = CMat::from_columns(&columns);
    let condition = condition_number(&vectors);
    if !(condition <= MAX_CONDITION) {
        return Err(Error::IllConditioned { cond: condition });
    }
    let inverse = complex_inverse(&vectors, "eigenbasis")?;
    Ok(EigenDecomposition {
        values: ordered_values,
        vectors,
        inverse,
        condition,
    })
}

/// One Jordan block `lambda I_m + N_m`.
#[derive(Clone, Copy, Debug, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct JordanBlock {
    pub eigenvalue: Complex64,
    pub size: usize,
}

/// Jordan decomposition `A = Q J Q^{-1}` supplied by the user (or derived from
/// a well-conditioned eigenbasis, in which case every block has size 1).
#[derive(Clone, Debug, PartialEq)]
pub struct JordanSpec {
    pub q: CMat,
    pub blocks: Vec<JordanBlock>,
}

impl JordanSpec {
    pub fn new(q: CMat, blocks: Vec<JordanBlock>) -> Result<Self> {
        let d = q.nrows();
        if !q.is_square() {
            return Err(Error::Jordan("Q must be square".into()));
        }
        if blocks.iter().any(|b| b.size == 0) {
            return Err(Error::Jordan("Jordan blocks must have positive size".into()));
        }
        let total: usize = blocks.iter().map(|b| b.size).sum();
        if total != d {
            return Err(Error::Jordan(format!(
                "block sizes sum to {total}, expected {d}"
            )));
        }
        if q.clone().try_inverse().is_none() {
            return Err(Error::Jordan("Q is singular".into()));
        }
        Ok(Self { q, blocks })
    }

    /// Jordan data of a diagonalizable matrix from its eigenbasis.
    pub fn from_eigen(eig: &EigenDecomposition) -> Self {
        Self {
            q: eig.vectors.clone(),
            blocks: eig
                .values
                .iter()
                .map(|&eigenvalue| JordanBlock { eigenvalue, size: 1 })
                .collect(),
        }
    }

    pub fn dim(&self) -> usize {
        self.q.nrows()
    }

    /// `(start, size)` of every block along the diagonal of `J`.
    pub fn block_ranges(&self) -> Vec<(usize, usize)> {
        let mut start = 0;
        self.blocks
            .iter()
            .map(|b| {
                let r = (start, b.size);
                start += b.size;
                r
            })
            .collect()
    }

    pub fn jordan_matrix(&self) -> CMat {
        let d = self.dim();
        let mut j = CMat::zeros(d, d);
        for (block, (start, size)) in self.blocks.iter().zip(self.block_ranges()) {
            for k in 0..size {
                j[(start + k, start + k)] = block.eigenvalue;
                if k + 1 < size {
                    j[(start + k, start + k + 1)] = Complex64::new(1.0, 0.0);
                }
            }
        }
        j
    }

    pub fn q_inverse(&self) -> Result<CMat> {
        complex_inverse(&self.q, "Jordan basis Q")
    }

    /// Relative reconstruction error `|Q J Q^{-1} - A| / |A|`.
    pub fn reconstruction_error(&self, a: &RMat) -> Result<f64> {
        if a.nrows() != self.dim() {
            return Err(Error::Jordan(format!(
                "Jordan data has dimension {}, matrix has {}",
                self.dim(),
                a.nrows()
            )));
        }
        let rebuilt = &self.q * self.jordan_matrix() * self.q_inverse()?;
        let diff = rebuilt - to_complex(a);
        Ok(diff.norm() / a.norm().max(f64::MIN_POSITIVE))
    }

    /// Checks `Q J Q^{-1} = A` to relative accuracy 1e-8.
    pub fn validate_against(&self, a: &RMat) -> Result<()> {
        let err = self.reconstruction_error(a)?;
        if !(err < 1e-8) {
            return Err(Error::Jordan(format!(
                "Q J Q^-1 does not reproduce the drift matrix (relative error {err:.3e})"
            )));
        }
        Ok(())
    }

    /// Checks that every block is central (real part 1/2).
    pub fn validate_critical(&self) -> Result<()> {
        for b in &self.blocks {
            if (b.eigenvalue.re - 0.5).abs() > CENTRAL_TOLERANCE {
                return Err(Error::Jordan(format!(
                    "critical analysis needs Re(lambda) = 1/2, got {}",
                    b.eigenvalue.re
                )));
            }
        }
        Ok(())
    }

    pub fn is_central(block: &JordanBlock) -> bool {
        (block.eigenvalue.re - 0.5).abs() <= CENTRAL_TOLERANCE
    }
}

/// A spectral subspace in real coordinates: an orthonormal basis `E`
/// (`d x k`) and the restriction `E^T A E` of the drift matrix to it.
#[derive(Clone, Debug)]
pub struct SpectralComponent {
    pub basis: RMat,
    pub operator: RMat,
}

impl SpectralComponent {
    pub fn dim(&self) -> usize {
        self.basis.ncols()
    }

    pub fn is_empty(&self) -> bool {
        self.basis.ncols() == 0
    }
}

/// Splitting `R^d = E_s + E_c + E_u` by eigenvalue real part below, at and
/// above 1/2, with the associated (generally oblique) projections.
#[derive(Clone, Debug)]
pub struct SpectralSplit {
    pub p_s: RMat,
    pub p_c: RMat,
    pub p_u: RMat,
    pub stable: SpectralComponent,
    pub central: SpectralComponent,
    pub unstable: SpectralComponent,
    /// Jordan data used for the splitting (eigenbasis when diagonalizable).
    pub jordan: JordanSpec,
}

#[derive(Clone, Copy, PartialEq, Eq, Debug)]
enum Part {
    Stable,
    Central,
    Unstable,
}

fn classify_eigenvalue(z: Complex64) -> Result<Part> {
    let gap = z.re - 0.5;
    if gap.abs() <= CENTRAL_TOLERANCE {
        Ok(Part::Central)
    } else if gap < -SEPARATION_TOLERANCE {
        Ok(Part::Stable)
    } else if gap > SEPARATION_TOLERANCE {
        Ok(Part::Unstable)
    } else {
        Err(Error::Spectrum(format!(
            "eigenvalue real part {} is too close to 1/2 to classify; \
             supply a Jordan decomposition",
            z.re
        )))
    }
}

/// Spectral splitting of a diagonalizable matrix from its eigenbasis.
pub fn spectral_split(a: &RMat) -> Result<SpectralSplit> {
    let eig = eigen_decomposition(a)?;
    split_from_jordan(a, &JordanSpec::from_eigen(&eig))
}

/// Spectral splitting from user Jordan data (required for defective `A`).
pub fn spectral_split_with_jordan(a: &RMat, jordan: &JordanSpec) -> Result<SpectralSplit> {
    jordan.validate_against(a)?;
    split_from_jordan(a, jordan)
}

fn split_from_jordan(a: &RMat, jordan: &JordanSpec) -> Result<SpectralSplit> {
    let d = a.nrows();
    let q_inv = jordan.q_inverse()?;
    let mut labels = Vec::with_capacity(d);
    for block in &jordan.blocks {
        let part = classify_eigenvalue(block.eigenvalue)?;
        labels.extend(std::iter::repeat(part).take(block.size));
    }
    let projection = |part: Part| -> Result<RMat> {
        let mask = nalgebra::DVector::from_iterator(
            d,
            labels
                .iter()
                .map(|&l| Complex64::new(if l == part { 1.0 } else { 0.0 }, 0.0)),
        );
        let p = &jordan.q * CMat::from_diagonal(&mask) * &q_inv;
        real_part_checked(&p)
    };
    let component = |part: Part| -> SpectralComponent {
        let cols: Vec<usize> = (0..d).filter(|&i| labels[i] == part).collect();
        let basis = real_basis(&jordan.q, &cols);
        let operator = basis.transpose() * a * &basis;
        SpectralComponent { basis, operator }
    };
    Ok(SpectralSplit {
        p_s: projection(Part::Stable)?,
        p_c: projection(Part::Central)?,
        p_u: projection(Part::Unstable)?,
        stable: component(Part::Stable),
        central: component(Part::Central),
        unstable: component(Part::Unstable),
        jordan: jordan.clone(),
    })
}

/// Orthonormal real basis of the span of the selected complex columns, which
/// is closed under conjugation when the selection is a union of spectral
/// groups of a real matrix.
fn real_basis(q: &CMat, cols: &[usize]) -> RMat {
    let d = q.nrows();
    let k = cols.len();
    if k == 0 {
        return RMat::zeros(d, 0);
    }
    let mut stacked = RMat::zeros(d, 2 * k);
    for (c, &j) in cols.iter().enumerate() {
        for i in 0..d {
            stacked[(i, c)] = q[(i, j)].re;
            stacked[(i, k + c)] = q[(i, j)].im;
        }
    }
    let svd = SVD::new(stacked, true, false);
    let u = svd.u.expect("requested U");
    u.columns(0, k).into_owned()
}
