// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! The diffusion `dX = (-X/2 + H(X)) dt + Sigma^{1/2} dB` that governs the
//! walk on the critical line: Euler-Maruyama integration, stationary
//! sampling and the explicit one-dimensional stationary density.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::quadrature::integrate;
use crate::{matfun, Error, RMat, RVec, Result, RngStream};

pub const DEFAULT_DT: f64 = 0.005;
/// The linearized drift at the modes relaxes at rate (1 - alpha)/2, so a
/// chain started at the origin needs several tens of time units.
pub const DEFAULT_T_BURN: f64 = 40.0;
pub const DEFAULT_T_SAMPLE: f64 = 10.0;
pub const MAX_DT: f64 = 0.01;
pub const MIN_T_BURN: f64 = 10.0;
/// Chains leaving this ball are reported as diverged.
pub const BLOW_UP_RADIUS: f64 = 1e6;

/// Integration parameters for the critical-line diffusion.
///
/// Each chain starts at the origin and is integrated for `t_burn` before its
/// state is used. `t_sample` is the observation window after burn-in used
/// for time averages.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SdeSpec {
    pub alpha: f64,
    pub sigma: RMat,
    pub dt: f64,
    pub t_burn: f64,
    pub t_sample: f64,
}

impl SdeSpec {
    pub fn new(alpha: f64, sigma: RMat) -> Result<Self> {
        let spec = Self {
            alpha,
            sigma,
            dt: DEFAULT_DT,
            t_burn: DEFAULT_T_BURN,
            t_sample: DEFAULT_T_SAMPLE,
        };
        spec.validate()?;
        Ok(spec)
    }

    pub fn dim(&self) -> usize {
        self.sigma.nrows()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha < 1.0) {
            return Err(Error::InvalidSpec(format!(
                "SDE requires 0 < alpha < 1, got {}",
                self.alpha
            )));
        }
        let d = self.sigma.nrows();
        if d == 0 || self.sigma.ncols() != d {
            return Err(Error::InvalidSpec("Sigma must be square and non-empty".into()));
        }
        if !matfun::is_symmetric(&self.sigma, 1e-12) || self.sigma.clone().cholesky().is_none() {
            return Err(Error::InvalidSpec("Sigma must be symmetric positive definite".into()));
        }
        if !(self.dt > 0.0 && self.dt <= MAX_DT) {
            return Err(Error::InvalidSpec(format!(
                "dt must lie in (0, {MAX_DT}], got {}",
                self.dt
            )));
        }
        if !(self.t_burn >= MIN_T_BURN) {
            return Err(Error::InvalidSpec(format!(
                "T_burn must be at least {MIN_T_BURN}, got {}",
                self.t_burn
            )));
        }
        if !(self.t_sample > 0.0) {
            return Err(Error::InvalidSpec("T_sample must be positive".into()));
        }
        Ok(())
    }

    /// Unique SPD square root of Sigma.
    pub fn sigma_half(&self) -> RMat {
        matfun::sym_sqrt(&self.sigma)
    }

    fn steps(&self, t: f64) -> u64 {
        (t / self.dt).round().max(1.0) as u64
    }
}

/// `-x/2 + ||x||^(alpha-1) x`.
pub fn sde_drift(x: &RVec, alpha: f64) -> RVec {
    let norm = x.norm();
    if norm == 0.0 {
        return RVec::zeros(x.len());
    }
    x * (norm.powf(alpha - 1.0) - 0.5)
}

/// One Euler-Maruyama step with noise increment `zeta`.
pub fn em_step_with(x: &RVec, dt: f64, alpha: f64, sigma_half: &RMat, zeta: &RVec) -> RVec {
    x + sde_drift(x, alpha) * dt + sigma_half * zeta * dt.sqrt()
}

/// One Euler-Maruyama step `x + dt (-x/2 + H(x)) + sqrt(dt) Sigma^{1/2} zeta`.
pub fn em_step(x: &RVec, dt: f64, alpha: f64, sigma_half: &RMat, rng: &mut RngStream) -> RVec {
    let mut zeta = RVec::zeros(x.len());
    rng.fill_standard_normal(zeta.as_mut_slice());
    em_step_with(x, dt, alpha, sigma_half, &zeta)
}

/// Allocation-free chain state.
struct Chain {
    x: Vec<f64>,
    zeta: Vec<f64>,
    noise: Vec<f64>,
    half: Vec<f64>,
    alpha: f64,
    dt: f64,
    sqrt_dt: f64,
}

impl Chain {
    fn new(spec: &SdeSpec) -> Self {
        let d = spec.dim();
        let h = spec.sigma_half();
        let mut half = Vec::with_capacity(d * d);
        for i in 0..d {
            for j in 0..d {
                half.push(h[(i, j)]);
            }
        }
        Self {
            x: vec![0.0; d],
            zeta: vec![0.0; d],
            noise: vec![0.0; d],
            half,
            alpha: spec.alpha,
            dt: spec.dt,
            sqrt_dt: spec.dt.sqrt(),
        }
    }

    /// Runs `steps` steps, calling `observe` after each; fails on blow-up.
    fn run(&mut self, steps: u64, t0: f64, rng: &mut RngStream, mut observe: impl FnMut(&[f64])) -> Result<()> {
        let d = self.x.len();
        for k in 0..steps {
            rng.fill_standard_normal(&mut self.zeta);
            for i in 0..d {
                self.noise[i] = self.half[i * d..(i + 1) * d]
                    .iter()
                    .zip(&self.zeta)
                    .map(|(a, b)| a * b)
                    .sum();
            }
            let norm_sq: f64 = self.x.iter().map(|v| v * v).sum();
            let factor = if norm_sq == 0.0 {
                0.0
            } else {
                norm_sq.powf(0.5 * (self.alpha - 1.0)) - 0.5
            };
            let mut new_sq = 0.0;
            for i in 0..d {
                self.x[i] += self.dt * factor * self.x[i] + self.sqrt_dt * self.noise[i];
                new_sq += self.x[i] * self.x[i];
            }
            if !(new_sq <= BLOW_UP_RADIUS * BLOW_UP_RADIUS) {
                return Err(Error::BlowUp {
                    t: t0 + (k + 1) as f64 * self.dt,
                });
            }
            observe(&self.x);
        }
        Ok(())
    }
}

/// Draws `m` samples from `m` independent chains (chain `i` uses stream
/// `(seed, i)`), each started at 0 and read out after `t_burn`.
pub fn sample_stationary(spec: &SdeSpec, m: usize, seed: u64) -> Result<RMat> {
    spec.validate()?;
    let d = spec.dim();
    let steps = spec.steps(spec.t_burn);
    let rows = (0..m as u64)
        .into_par_iter()
        .map(|i| {
            let mut rng = RngStream::new(seed, i);
            let mut chain = Chain::new(spec);
            chain
                .run(steps, 0.0, &mut rng, |_| {})
                .map_err(|e| e.in_replica(i))?;
            Ok(chain.x)
        })
        .collect::<Result<Vec<_>>>()?;
    let mut out = RMat::zeros(m, d);
    for (i, row) in rows.iter().enumerate() {
        for (j, v) in row.iter().enumerate() {
            out[(i, j)] = *v;
        }
    }
    Ok(out)
}

/// Average of `||X_t||^2` over `[t_burn, t_burn + t_sample]` along one chain.
pub fn time_average_second_moment(spec: &SdeSpec, seed: u64, chain: u64) -> Result<f64> {
    spec.validate()?;
    let mut rng = RngStream::new(seed, chain);
    let mut state = Chain::new(spec);
    state.run(spec.steps(spec.t_burn), 0.0, &mut rng, |_| {})?;
    let steps = spec.steps(spec.t_sample);
    let mut acc = 0.0;
    state.run(steps, spec.t_burn, &mut rng, |x| {
        acc += x.iter().map(|v| v * v).sum::<f64>();
    })?;
    Ok(acc / steps as f64)
}

/// Panels used to tabulate the CDF on `[0, cutoff]`.
const CDF_PANELS: usize = 1024;
/// The tails beyond the cutoff carry less than `exp(-CUTOFF_NATS)` relative mass.
const CUTOFF_NATS: f64 = 80.0;

/// Stationary density `p(x) = C exp(-(x^2/2 - 2|x|^(alpha+1)/(alpha+1)) / sigma2)`
/// of the one-dimensional diffusion, with its CDF.
#[derive(Clone, Debug)]
pub struct StationaryDensity1d {
    alpha: f64,
    sigma2: f64,
    ln_c: f64,
    cutoff: f64,
    /// `knots[k] = k * cutoff / CDF_PANELS`, `mass[k] = P(0 <= X <= knots[k])`
    knots: Vec<f64>,
    mass: Vec<f64>,
}

impl StationaryDensity1d {
    fn exponent(alpha: f64, sigma2: f64, x: f64) -> f64 {
        let a = x.abs();
        -(0.5 * a * a - 2.0 * a.powf(alpha + 1.0) / (alpha + 1.0)) / sigma2
    }

    /// Location of the positive mode, `2^(1/(1-alpha))`.
    pub fn mode(&self) -> f64 {
        2f64.powf(1.0 / (1.0 - self.alpha))
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn sigma2(&self) -> f64 {
        self.sigma2
    }

    /// Normalizing constant `C`.
    pub fn normalizing_constant(&self) -> f64 {
        self.ln_c.exp()
    }

    pub fn ln_pdf(&self, x: f64) -> f64 {
        self.ln_c + Self::exponent(self.alpha, self.sigma2, x)
    }

    pub fn pdf(&self, x: f64) -> f64 {
        self.ln_pdf(x).exp()
    }

    /// Half-width beyond which the density is treated as zero.
    pub fn cutoff(&self) -> f64 {
        self.cutoff
    }

    pub fn cdf(&self, x: f64) -> f64 {
        let a = x.abs();
        let half = if a >= self.cutoff {
            0.5
        } else {
            let k = ((a / self.cutoff) * CDF_PANELS as f64).floor() as usize;
            let k = k.min(CDF_PANELS - 1);
            let lo = self.knots[k];
            let part = integrate(&|t| self.pdf(t), lo, a, 1e-14).unwrap_or(0.0);
            (self.mass[k] + part).min(0.5)
        };
        if x >= 0.0 {
            0.5 + half
        } else {
            0.5 - half
        }
    }

    /// `E[X^2]` by quadrature.
    pub fn second_moment(&self) -> Result<f64> {
        let mut total = 0.0;
        for k in 0..CDF_PANELS {
            total += integrate(&|t| t * t * self.pdf(t), self.knots[k], self.knots[k + 1], 1e-14)?;
        }
        Ok(2.0 * total)
    }
}

/// Builds the explicit stationary density, normalized by adaptive quadrature.
pub fn stationary_density_1d(alpha: f64, sigma2: f64) -> Result<StationaryDensity1d> {
    if !(alpha > 0.0 && alpha < 1.0) || !(sigma2 > 0.0 && sigma2.is_finite()) {
        return Err(Error::InvalidArgument(format!(
            "stationary density needs 0 < alpha < 1 and sigma2 > 0, got alpha = {alpha}, sigma2 = {sigma2}"
        )));
    }
    let f = |x: f64| StationaryDensity1d::exponent(alpha, sigma2, x);
    let mode = 2f64.powf(1.0 / (1.0 - alpha));
    let peak = f(mode).max(f(0.0));
    let mut cutoff = 2.0 * mode.max(1.0);
    while f(cutoff) - peak > -CUTOFF_NATS {
        cutoff *= 1.5;
    }
    let knots: Vec<f64> = (0..=CDF_PANELS)
        .map(|k| cutoff * k as f64 / CDF_PANELS as f64)
        .collect();
    let shifted = |x: f64| (f(x) - peak).exp();
    let mut mass = Vec::with_capacity(CDF_PANELS + 1);
    mass.push(0.0);
    let mut acc = 0.0;
    for k in 0..CDF_PANELS {
        acc += integrate(&shifted, knots[k], knots[k + 1], 1e-15)?;
        mass.push(acc);
    }
    // `acc` is half the total mass under the shifted exponent.
    let total = 2.0 * acc;
    if !(total.is_finite() && total > 0.0) {
        return Err(Error::Quadrature("stationary density is not normalizable".into()));
    }
    for m in &mut mass {
        *m /= total;
    }
    Ok(StationaryDensity1d {
        alpha,
        sigma2,
        ln_c: -peak - total.ln(),
        cutoff,
        knots,
        mass,
    })
}

/// Kolmogorov-Smirnov distance between the empirical CDF of `samples` and
/// the density's CDF.
pub fn sde_cdf_distance(samples: &[f64], density: &StationaryDensity1d) -> f64 {
    ks_distance(samples, |x| density.cdf(x))
}

/// Sup-distance between the empirical CDF of `samples` and `cdf`.
pub fn ks_distance(samples: &[f64], cdf: impl Fn(f64) -> f64) -> f64 {
    if samples.is_empty() {
        return 0.0;
    }
    let mut sorted = samples.to_vec();
    sorted.sort_by(f64::total_cmp);
    let m = sorted.len() as f64;
    let mut d: f64 = 0.0;
    for (i, &x) in sorted.iter().enumerate() {
        let f = cdf(x).clamp(0.0, 1.0);
        d = d.max(f - i as f64 / m).max((i + 1) as f64 / m - f);
    }
    d.clamp(0.0, 1.0)
}
