// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Walk specifications, the drift field, regime classification and the
//! predicted limit laws.

use serde::{Deserialize, Serialize};

use crate::matfun::{
    central_covariance, critical_covariance, eigen_decomposition, is_symmetric,
    lyapunov_solve, min_sym_eigenvalue, real_part_checked, spectral_bounds, spectral_split,
    spectral_split_with_jordan, JordanSpec, SpectralComponent,
};
use crate::{Error, RMat, RVec, Result};

/// Tolerance used to decide whether a point sits on a regime boundary.
pub const CLASSIFY_TOLERANCE: f64 = 1e-9;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum DriftKind {
    /// `mu(s, n) = n^-beta |s|^(alpha-1) A s` with `A = rho I`.
    Nonlinear,
    /// `mu(s, n) = A s / n`.
    Linear,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseFamily {
    #[default]
    Gaussian,
    /// `C^{1/2} xi` with i.i.d. symmetric signs `xi`: bounded support.
    BoundedRademacherMixture,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum NoiseMode {
    /// Innovation covariance `Sigma - mu mu^T`, so `E[X X^T | F_n] = Sigma`.
    #[default]
    StrictSecondMoment,
    /// Innovation covariance `Sigma`, so `E[X X^T | F_n] = Sigma + mu mu^T`.
    RelaxedSecondMoment,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct NoiseModel {
    pub family: NoiseFamily,
    pub mode: NoiseMode,
}

/// Full parameterization of one walk.
#[derive(Clone, Debug, PartialEq)]
pub struct WalkSpec {
    pub dim: usize,
    pub alpha: f64,
    pub beta: f64,
    /// Drift matrix `A` (`rho I` for the nonlinear kind).
    pub drift: RMat,
    /// Conditional second moment `Sigma`.
    pub sigma: RMat,
    pub noise: NoiseModel,
    pub kind: DriftKind,
    /// Jordan data for drift matrices that are not (well) diagonalizable.
    pub jordan: Option<JordanSpec>,
}

impl WalkSpec {
    /// Validating constructor. A nonlinear spec with `alpha = beta = 1` is
    /// the linear walk with `A = rho I` and is returned as such.
    pub fn new(
        kind: DriftKind,
        alpha: f64,
        beta: f64,
        drift: RMat,
        sigma: RMat,
        noise: NoiseModel,
        jordan: Option<JordanSpec>,
    ) -> Result<Self> {
        let kind = if kind == DriftKind::Nonlinear && alpha == 1.0 && beta == 1.0 {
            DriftKind::Linear
        } else {
            kind
        };
        let spec = Self {
            dim: drift.nrows(),
            alpha,
            beta,
            drift,
            sigma,
            noise,
            kind,
            jordan,
        };
        spec.validate()?;
        Ok(spec)
    }

    /// Nonlinear walk with `A = I`.
    pub fn nonlinear(alpha: f64, beta: f64, sigma: RMat) -> Result<Self> {
        Self::nonlinear_scaled(alpha, beta, 1.0, sigma)
    }

    /// Nonlinear walk with `A = rho I`.
    pub fn nonlinear_scaled(alpha: f64, beta: f64, rho: f64, sigma: RMat) -> Result<Self> {
        let d = sigma.nrows();
        Self::new(
            DriftKind::Nonlinear,
            alpha,
            beta,
            RMat::identity(d, d) * rho,
            sigma,
            NoiseModel::default(),
            None,
        )
    }

    pub fn linear(drift: RMat, sigma: RMat) -> Result<Self> {
        Self::new(
            DriftKind::Linear,
            1.0,
            1.0,
            drift,
            sigma,
            NoiseModel::default(),
            None,
        )
    }

    pub fn with_noise(mut self, noise: NoiseModel) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_jordan(mut self, jordan: JordanSpec) -> Result<Self> {
        jordan.validate_against(&self.drift)?;
        self.jordan = Some(jordan);
        Ok(self)
    }

    /// `rho` of a nonlinear spec (`A = rho I`).
    pub fn rho(&self) -> f64 {
        self.drift[(0, 0)]
    }

    /// Exponent `gamma = (1 - beta) / (1 - alpha)` of the below-line scaling.
    pub fn gamma(&self) -> f64 {
        gamma_exponent(self.alpha, self.beta)
    }

    pub fn validate(&self) -> Result<()> {
        let d = self.dim;
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if d == 0 {
            return bad("dimension must be positive".into());
        }
        if self.drift.shape() != (d, d) || self.sigma.shape() != (d, d) {
            return bad(format!(
                "drift is {}x{} and Sigma is {}x{}; both must be {d}x{d}",
                self.drift.nrows(),
                self.drift.ncols(),
                self.sigma.nrows(),
                self.sigma.ncols()
            ));
        }
        if self.drift.iter().chain(self.sigma.iter()).any(|x| !x.is_finite()) {
            return bad("matrices must be finite".into());
        }
        if !is_symmetric(&self.sigma, 1e-12) {
            return bad("Sigma must be symmetric (|Sigma_ij - Sigma_ji| < 1e-12)".into());
        }
        if !(min_sym_eigenvalue(&self.sigma) > 0.0) {
            return bad("Sigma must be positive definite".into());
        }
        match self.kind {
            DriftKind::Nonlinear => {
                if !(0.0 < self.alpha && self.alpha <= self.beta && self.beta <= 1.0) {
                    return bad(format!(
                        "nonlinear drift needs 0 < alpha <= beta <= 1, got alpha = {}, beta = {}",
                        self.alpha, self.beta
                    ));
                }
                let rho = self.rho();
                let scaled_identity = RMat::identity(d, d) * rho;
                if !(rho > 0.0) || (&self.drift - scaled_identity).amax() > 0.0 {
                    return bad("nonlinear drift matrix must be rho * I with rho > 0".into());
                }
            }
            DriftKind::Linear => {
                if self.alpha != 1.0 || self.beta != 1.0 {
                    return bad(format!(
                        "linear drift needs alpha = beta = 1, got alpha = {}, beta = {}",
                        self.alpha, self.beta
                    ));
                }
                let (lo, hi) = spectral_bounds(&self.drift);
                if !(lo > 0.0 && hi < 1.0) {
                    return bad(format!(
                        "linear drift needs 0 < lambda_min(A) and lambda_max(A) < 1, \
                         got [{lo}, {hi}]"
                    ));
                }
            }
        }
        if let Some(j) = &self.jordan {
            j.validate_against(&self.drift)?;
        }
        Ok(())
    }
}

/// `(1 - beta) / (1 - alpha)`.
pub fn gamma_exponent(alpha: f64, beta: f64) -> f64 {
    (1.0 - beta) / (1.0 - alpha)
}

/// Localization radius `r = gamma^(-1/(1-alpha))`, the positive zero of
/// `v -> v^((alpha-1)/2) - gamma` evaluated at `v = r^2`.
pub fn localization_radius(alpha: f64, beta: f64) -> f64 {
    gamma_exponent(alpha, beta).powf(-1.0 / (1.0 - alpha))
}

/// Asymptotic regime of a walk.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    NonlinearAbove,
    NonlinearOnLine,
    NonlinearBelow,
    LinearSubcritical,
    LinearSupercritical,
    LinearCritical,
    LinearMixed,
}

impl Regime {
    pub fn as_str(&self) -> &'static str {
        match self {
            Regime::NonlinearAbove => "nonlinear-above",
            Regime::NonlinearOnLine => "nonlinear-on-line",
            Regime::NonlinearBelow => "nonlinear-below",
            Regime::LinearSubcritical => "linear-subcritical",
            Regime::LinearSupercritical => "linear-supercritical",
            Regime::LinearCritical => "linear-critical",
            Regime::LinearMixed => "linear-mixed",
        }
    }
}

impl std::fmt::Display for Regime {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.as_str())
    }
}

pub fn classify_regime(spec: &WalkSpec) -> Result<Regime> {
    match spec.kind {
        DriftKind::Nonlinear => classify_nonlinear(spec.alpha, spec.beta),
        DriftKind::Linear => {
            let (lo, hi) = spectral_bounds(&spec.drift);
            Ok(if hi < 0.5 - CLASSIFY_TOLERANCE {
                Regime::LinearSubcritical
            } else if lo > 0.5 + CLASSIFY_TOLERANCE {
                Regime::LinearSupercritical
            } else if (lo - 0.5).abs() <= CLASSIFY_TOLERANCE
                && (hi - 0.5).abs() <= CLASSIFY_TOLERANCE
            {
                Regime::LinearCritical
            } else {
                Regime::LinearMixed
            })
        }
    }
}

/// Position of `(alpha, beta)` relative to the critical line `alpha = 2 beta - 1`.
pub fn classify_nonlinear(alpha: f64, beta: f64) -> Result<Regime> {
    let line = 2.0 * beta - 1.0;
    if (alpha - line).abs() <= CLASSIFY_TOLERANCE {
        if alpha >= 1.0 - CLASSIFY_TOLERANCE {
            return Err(Error::RegimeNotCovered(
                "the critical line at alpha = 1 is outside 0 < alpha < 1".into(),
            ));
        }
        Ok(Regime::NonlinearOnLine)
    } else if alpha < line {
        Ok(Regime::NonlinearAbove)
    } else {
        Ok(Regime::NonlinearBelow)
    }
}

/// `H(s) = |s|^(alpha-1) s`, extended by `H(0) = 0`.
pub fn potential_h(s: &RVec, alpha: f64) -> RVec {
    let norm = s.norm();
    if norm == 0.0 {
        return RVec::zeros(s.len());
    }
    s * norm.powf(alpha - 1.0)
}

/// Conditional drift `mu(s, n) = n^-beta |s|^(alpha-1) A s`, zero at `s = 0`
/// and at `n = 0` (the first step is centred).
pub fn drift_mu(s: &RVec, n: u64, spec: &WalkSpec) -> RVec {
    let mut out = vec![0.0; spec.dim];
    let kernel = DriftField::new(spec);
    kernel.eval(s.as_slice(), n, &mut out);
    RVec::from_vec(out)
}

/// Cached drift evaluation used by the simulators.
#[derive(Clone, Debug)]
pub(crate) struct DriftField {
    dim: usize,
    kind: DriftKind,
    alpha: f64,
    beta: f64,
    /// row-major copy of `A`
    a: Vec<f64>,
    /// `ln rho`; the nonlinear factor is evaluated as a single exponential
    ln_rho: f64,
}

impl DriftField {
    pub(crate) fn new(spec: &WalkSpec) -> Self {
        let d = spec.dim;
        let mut a = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                a.push(spec.drift[(i, j)]);
            }
        }
        Self {
            dim: d,
            kind: spec.kind,
            alpha: spec.alpha,
            beta: spec.beta,
            a,
            ln_rho: spec.drift[(0, 0)].ln(),
        }
    }

    #[inline]
    pub(crate) fn eval(&self, s: &[f64], n: u64, out: &mut [f64]) {
        if n == 0 {
            out.fill(0.0);
            return;
        }
        let d = self.dim;
        match self.kind {
            DriftKind::Linear => {
                let inv_n = 1.0 / n as f64;
                for i in 0..d {
                    let row = &self.a[i * d..(i + 1) * d];
                    out[i] = row.iter().zip(s).map(|(a, x)| a * x).sum::<f64>() * inv_n;
                }
            }
            DriftKind::Nonlinear => {
                let norm_sq = s.iter().map(|x| x * x).sum::<f64>();
                if norm_sq == 0.0 {
                    out.fill(0.0);
                    return;
                }
                let c = self.nonlinear_factor(norm_sq, n);
                for (o, x) in out.iter_mut().zip(s) {
                    *o = c * x;
                }
            }
        }
    }

    /// `rho n^-beta |s|^(alpha - 1)` from `|s|^2`.
    #[inline]
    fn nonlinear_factor(&self, norm_sq: f64, n: u64) -> f64 {
        (self.ln_rho - self.beta * (n as f64).ln() + 0.5 * (self.alpha - 1.0) * norm_sq.ln()).exp()
    }

    #[inline]
    pub(crate) fn eval_scalar(&self, s: f64, n: u64) -> f64 {
        if n == 0 {
            return 0.0;
        }
        match self.kind {
            DriftKind::Linear => (self.a[0] / n as f64) * s,
            DriftKind::Nonlinear => {
                if s == 0.0 {
                    0.0
                } else {
                    self.nonlinear_factor(s * s, n) * s
                }
            }
        }
    }
}

/// Predicted limit distribution of the suitably normalized walk.
#[derive(Clone, Debug, PartialEq)]
pub enum LimitLaw {
    /// Centred Gaussian with the given covariance.
    Gaussian { covariance: RMat },
    /// Stationary law of `dX = (-X/2 + H(X)) dt + Sigma^{1/2} dB`.
    SdeStationary { alpha: f64, sigma: RMat },
    /// Almost-sure localization on the sphere of radius `radius` after
    /// scaling by `n^-gamma`.
    Sphere { radius: f64, gamma: f64 },
    /// Joint Gaussian limit of the stable, central and unstable components.
    /// The components live in complementary invariant subspaces, so the sum
    /// of the three normalized components has covariance
    /// `stable + central + unstable`.
    Joint {
        stable: RMat,
        central: RMat,
        unstable: RMat,
    },
}

impl LimitLaw {
    pub fn kind(&self) -> &'static str {
        match self {
            LimitLaw::Gaussian { .. } => "gaussian",
            LimitLaw::SdeStationary { .. } => "sde-stationary",
            LimitLaw::Sphere { .. } => "sphere",
            LimitLaw::Joint { .. } => "joint-gaussian",
        }
    }

    /// Covariance of the Gaussian (or joint Gaussian) law.
    pub fn gaussian_covariance(&self) -> Option<RMat> {
        match self {
            LimitLaw::Gaussian { covariance } => Some(covariance.clone()),
            LimitLaw::Joint {
                stable,
                central,
                unstable,
            } => Some(stable + central + unstable),
            _ => None,
        }
    }
}

/// Jordan data for the critical/central analysis: user-supplied if present,
/// otherwise from a well-conditioned eigenbasis.
pub fn jordan_for(spec: &WalkSpec) -> Result<JordanSpec> {
    match &spec.jordan {
        Some(j) => Ok(j.clone()),
        None => Ok(JordanSpec::from_eigen(&eigen_decomposition(&spec.drift)?)),
    }
}

pub fn predict_limit_law(spec: &WalkSpec, regime: Regime) -> Result<LimitLaw> {
    let expected = classify_regime(spec)?;
    if expected != regime {
        return Err(Error::InvalidArgument(format!(
            "regime {regime} does not match the spec (classified as {expected})"
        )));
    }
    let needs_unit_rho = |what: &str| -> Result<()> {
        if spec.rho() != 1.0 {
            return Err(Error::UnsupportedRegime(format!(
                "{what} prediction is only available for A = I (rho = {})",
                spec.rho()
            )));
        }
        Ok(())
    };
    match regime {
        Regime::NonlinearAbove => Ok(LimitLaw::Gaussian {
            covariance: spec.sigma.clone(),
        }),
        Regime::NonlinearOnLine => {
            needs_unit_rho("critical-line")?;
            Ok(LimitLaw::SdeStationary {
                alpha: spec.alpha,
                sigma: spec.sigma.clone(),
            })
        }
        Regime::NonlinearBelow => {
            needs_unit_rho("localization")?;
            Ok(LimitLaw::Sphere {
                radius: localization_radius(spec.alpha, spec.beta),
                gamma: spec.gamma(),
            })
        }
        Regime::LinearSubcritical => Ok(LimitLaw::Gaussian {
            covariance: lyapunov_solve(&spec.drift, &spec.sigma)?,
        }),
        Regime::LinearSupercritical => Ok(LimitLaw::Gaussian {
            covariance: -lyapunov_solve(&spec.drift, &spec.sigma)?,
        }),
        Regime::LinearCritical => {
            let jordan = jordan_for(spec)?;
            let cov = critical_covariance(&jordan, &spec.sigma)?;
            Ok(LimitLaw::Gaussian {
                covariance: real_part_checked(&cov)?,
            })
        }
        Regime::LinearMixed => mixed_law(spec).map_err(|e| match e {
            e @ (Error::IllConditioned { .. } | Error::Spectrum(_) | Error::Jordan(_)) => {
                Error::UnsupportedRegime(format!("spectral splitting failed: {e}"))
            }
            e => e,
        }),
    }
}

fn mixed_law(spec: &WalkSpec) -> Result<LimitLaw> {
    let split = match &spec.jordan {
        Some(j) => spectral_split_with_jordan(&spec.drift, j)?,
        None => spectral_split(&spec.drift)?,
    };
    let d = spec.dim;
    let restricted = |component: &SpectralComponent, p: &RMat, flip: bool| -> Result<RMat> {
        if component.is_empty() {
            return Ok(RMat::zeros(d, d));
        }
        let e = &component.basis;
        let rhs = e.transpose() * p * &spec.sigma * p.transpose() * e;
        let x = lyapunov_solve(&component.operator, &rhs)?;
        let x = if flip { -x } else { x };
        Ok(e * x * e.transpose())
    };
    let stable = restricted(&split.stable, &split.p_s, false)?;
    let unstable = restricted(&split.unstable, &split.p_u, true)?;
    let central = if split.central.is_empty() {
        RMat::zeros(d, d)
    } else {
        real_part_checked(&central_covariance(&split.jordan, &spec.sigma, &split.p_c)?)?
    };
    Ok(LimitLaw::Joint {
        stable,
        central,
        unstable,
    })
}
