// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Step-by-step simulation of the walk, regime normalizations and Monte
//! Carlo ensembles.
//!
//! Time runs as `(n, S_n)` with `S_0 = 0`; the step from `n` to `n + 1` draws
//! `X_{n+1} = mu(S_n, n) + U_{n+1}` where the innovation `U_{n+1}` is centred
//! with covariance `Sigma - mu mu^T` (strict mode) or `Sigma` (relaxed mode).

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::matfun::{self, build_dn, matrix_power, real_part_checked, spectral_split, spectral_split_with_jordan};
use crate::model::{classify_regime, jordan_for, DriftField, DriftKind, NoiseFamily, NoiseMode, Regime};
use crate::{Error, RMat, RVec, Result, RngStream, WalkSpec};

/// Switches used by tests to isolate parts of the dynamics.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct SimulationHooks {
    /// Multiplies every innovation; `0.0` gives the deterministic recursion.
    pub noise_scale: f64,
    /// When false the drift is dropped and the walk is a plain martingale.
    pub drift_enabled: bool,
}

impl Default for SimulationHooks {
    fn default() -> Self {
        Self {
            noise_scale: 1.0,
            drift_enabled: true,
        }
    }
}

/// Row-major small dense matrix helpers for the hot loop.
fn row_major(m: &RMat) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.nrows() * m.ncols());
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out.push(m[(i, j)]);
        }
    }
    out
}

#[inline]
fn lower_mul(l: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for i in 0..d {
        let mut acc = 0.0;
        for j in 0..=i {
            acc += l[i * d + j] * x[j];
        }
        out[i] = acc;
    }
}

#[inline]
fn full_mul(m: &[f64], x: &[f64], out: &mut [f64]) {
    let d = x.len();
    for i in 0..d {
        out[i] = m[i * d..(i + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum();
    }
}

/// Cached per-spec state for drawing increments.
///
/// The strict innovation is built from `Z = F xi` (`F F^T = Sigma`) as
/// `U = Z - k mu (w . Z)` with `w = Sigma^{-1} mu`, `q = mu . w` and
/// `k = 1 / (1 + sqrt(1 - q))`, whose covariance is exactly
/// `Sigma - mu mu^T` whenever `q <= 1`. Beyond that the covariance is
/// indefinite and is projected onto the PSD cone instead.
#[derive(Clone, Debug)]
pub(crate) struct StepKernel {
    dim: usize,
    drift: DriftField,
    family: NoiseFamily,
    strict: bool,
    sigma: RMat,
    /// `F`, row-major: Cholesky factor (Gaussian) or symmetric root
    factor: Vec<f64>,
    factor_lower: bool,
    /// `Sigma^{-1}`, row-major
    sigma_inv: Vec<f64>,
    hooks: SimulationHooks,
    mu: Vec<f64>,
    xi: Vec<f64>,
    z: Vec<f64>,
    w: Vec<f64>,
}

impl StepKernel {
    pub(crate) fn new(spec: &WalkSpec, hooks: SimulationHooks) -> Self {
        let d = spec.dim;
        let (factor, factor_lower) = match spec.noise.family {
            NoiseFamily::Gaussian => (
                spec.sigma
                    .clone()
                    .cholesky()
                    .expect("validated Sigma is positive definite")
                    .l(),
                true,
            ),
            NoiseFamily::BoundedRademacherMixture => (matfun::sym_sqrt(&spec.sigma), false),
        };
        let sigma_inv = spec
            .sigma
            .clone()
            .try_inverse()
            .expect("validated Sigma is invertible");
        Self {
            dim: d,
            drift: DriftField::new(spec),
            family: spec.noise.family,
            strict: spec.noise.mode == NoiseMode::StrictSecondMoment,
            sigma: spec.sigma.clone(),
            factor: row_major(&factor),
            factor_lower,
            sigma_inv: row_major(&sigma_inv),
            hooks,
            mu: vec![0.0; d],
            xi: vec![0.0; d],
            z: vec![0.0; d],
            w: vec![0.0; d],
        }
    }

    #[inline]
    fn sample_xi(family: NoiseFamily, rng: &mut RngStream) -> f64 {
        match family {
            NoiseFamily::Gaussian => rng.standard_normal(),
            NoiseFamily::BoundedRademacherMixture => rng.rademacher(),
        }
    }

    /// One-dimensional fast path: returns `(X_{n+1}, clamped)`.
    #[inline]
    pub(crate) fn draw_scalar(&self, s: f64, n: u64, rng: &mut RngStream) -> (f64, bool) {
        let mu = if self.hooks.drift_enabled {
            self.drift.eval_scalar(s, n)
        } else {
            0.0
        };
        let xi = Self::sample_xi(self.family, rng);
        let sd = self.factor[0];
        let (u, clamped) = if self.strict && mu != 0.0 {
            let c = sd * sd - mu * mu;
            if c < 0.0 {
                (0.0, true)
            } else {
                (c.sqrt() * xi, false)
            }
        } else {
            (sd * xi, false)
        };
        (mu + self.hooks.noise_scale * u, clamped)
    }

    /// Writes `X_{n+1}` given `S_n = s` into `out`; returns whether the strict
    /// innovation covariance had to be projected onto the PSD cone.
    #[inline]
    pub(crate) fn draw(&mut self, s: &[f64], n: u64, rng: &mut RngStream, out: &mut [f64]) -> bool {
        if self.dim == 1 {
            let (x, clamped) = self.draw_scalar(s[0], n, rng);
            out[0] = x;
            return clamped;
        }
        if self.hooks.drift_enabled {
            self.drift.eval(s, n, &mut self.mu);
        } else {
            self.mu.fill(0.0);
        }
        for v in self.xi.iter_mut() {
            *v = Self::sample_xi(self.family, rng);
        }
        if self.factor_lower {
            lower_mul(&self.factor, &self.xi, &mut self.z);
        } else {
            full_mul(&self.factor, &self.xi, &mut self.z);
        }
        let mut clamped = false;
        if self.strict && self.mu.iter().any(|&m| m != 0.0) {
            full_mul(&self.sigma_inv, &self.mu, &mut self.w);
            let q: f64 = self.mu.iter().zip(&self.w).map(|(a, b)| a * b).sum();
            if q <= 1.0 {
                let k = 1.0 / (1.0 + (1.0 - q).sqrt());
                let wz: f64 = self.w.iter().zip(&self.z).map(|(a, b)| a * b).sum();
                for (z, m) in self.z.iter_mut().zip(&self.mu) {
                    *z -= k * wz * m;
                }
            } else {
                clamped = true;
                self.projected_innovation();
            }
        }
        let scale = self.hooks.noise_scale;
        for ((o, m), z) in out.iter_mut().zip(&self.mu).zip(&self.z) {
            *o = m + scale * z;
        }
        clamped
    }

    /// `z = C_+^{1/2} xi` for the PSD part `C_+` of `Sigma - mu mu^T`.
    #[cold]
    fn projected_innovation(&mut self) {
        let mu = RVec::from_column_slice(&self.mu);
        let c = &self.sigma - &mu * mu.transpose();
        let (projected, _) = matfun::psd_projection(&c);
        let root = row_major(&matfun::sym_sqrt(&projected));
        full_mul(&root, &self.xi, &mut self.z);
    }
}

/// One draw of the increment `X_{n+1}` given `S_n = s`.
#[derive(Clone, Debug, PartialEq)]
pub struct StepDraw {
    pub increment: RVec,
    /// The strict innovation covariance was not PSD and was projected.
    pub clamped: bool,
}

/// Draws `X_{n+1}` given `S_n = s`. For repeated draws use [`Walker`], which
/// caches the factorizations.
pub fn step(s: &RVec, n: u64, spec: &WalkSpec, rng: &mut RngStream) -> StepDraw {
    let mut kernel = StepKernel::new(spec, SimulationHooks::default());
    let mut out = vec![0.0; spec.dim];
    let clamped = kernel.draw(s.as_slice(), n, rng, &mut out);
    StepDraw {
        increment: RVec::from_vec(out),
        clamped,
    }
}

/// Position recorded at time `k`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Checkpoint {
    pub k: u64,
    pub position: Vec<f64>,
}

impl Checkpoint {
    pub fn norm(&self) -> f64 {
        self.position.iter().map(|x| x * x).sum::<f64>().sqrt()
    }
}

/// A simulated path summarized by its terminal value and geometric
/// checkpoints `k = 1, 2, 4, ...` (plus the horizon itself).
#[derive(Clone, Debug)]
pub struct Trajectory {
    pub spec: WalkSpec,
    pub horizon: u64,
    pub terminal: RVec,
    pub checkpoints: Vec<Checkpoint>,
    pub w_hat: Option<RVec>,
    pub clamp_events: u64,
    pub seed: u64,
    pub replica_id: u64,
    /// Stream position after the last step, for continuation.
    pub rng_counter: u128,
}

impl Trajectory {
    /// Re-opens the walk at its terminal state with the same random stream.
    pub fn resume(&self, hooks: SimulationHooks) -> Walker {
        Walker::from_state(
            &self.spec,
            self.horizon,
            self.terminal.as_slice(),
            RngStream::at_counter(self.seed, self.replica_id, self.rng_counter),
            hooks,
        )
    }
}

/// Incremental simulator for a single path.
#[derive(Clone, Debug)]
pub struct Walker {
    spec: WalkSpec,
    kernel: StepKernel,
    n: u64,
    s: Vec<f64>,
    x: Vec<f64>,
    rng: RngStream,
    clamp_events: u64,
    checkpoints: Vec<Checkpoint>,
    next_checkpoint: u64,
}

fn next_power_of_two_after(n: u64) -> u64 {
    if n == 0 {
        1
    } else {
        n.checked_next_power_of_two()
            .map(|p| if p == n { p.saturating_mul(2) } else { p })
            .unwrap_or(u64::MAX)
    }
}

impl Walker {
    pub fn new(spec: &WalkSpec, rng: RngStream, hooks: SimulationHooks) -> Self {
        Self::from_state(spec, 0, &vec![0.0; spec.dim], rng, hooks)
    }

    /// Starts from `S_n = s` at time `n`.
    pub fn from_state(spec: &WalkSpec, n: u64, s: &[f64], rng: RngStream, hooks: SimulationHooks) -> Self {
        Self {
            spec: spec.clone(),
            kernel: StepKernel::new(spec, hooks),
            n,
            s: s.to_vec(),
            x: vec![0.0; spec.dim],
            rng,
            clamp_events: 0,
            checkpoints: Vec::new(),
            next_checkpoint: next_power_of_two_after(n),
        }
    }

    pub fn time(&self) -> u64 {
        self.n
    }

    pub fn position(&self) -> RVec {
        RVec::from_column_slice(&self.s)
    }

    pub fn clamp_events(&self) -> u64 {
        self.clamp_events
    }

    pub fn checkpoints(&self) -> &[Checkpoint] {
        &self.checkpoints
    }

    fn record(&mut self) {
        if self.checkpoints.last().map(|c| c.k) != Some(self.n) {
            self.checkpoints.push(Checkpoint {
                k: self.n,
                position: self.s.clone(),
            });
        }
    }

    /// Advances to time `target`, recording powers of two on the way and the
    /// target itself.
    pub fn advance_to(&mut self, target: u64) -> Result<()> {
        while self.n < target {
            let stop = target.min(self.next_checkpoint);
            if self.s.len() == 1 {
                let mut s = self.s[0];
                let mut clamps = 0;
                for n in self.n..stop {
                    let (x, clamped) = self.kernel.draw_scalar(s, n, &mut self.rng);
                    clamps += clamped as u64;
                    s += x;
                }
                self.s[0] = s;
                self.clamp_events += clamps;
            } else {
                for n in self.n..stop {
                    let clamped = self.kernel.draw(&self.s, n, &mut self.rng, &mut self.x);
                    self.clamp_events += clamped as u64;
                    for (s, x) in self.s.iter_mut().zip(&self.x) {
                        *s += x;
                    }
                }
            }
            self.n = stop;
            if !self.s.iter().all(|v| v.is_finite()) {
                return Err(Error::Overflow { step: self.n });
            }
            if self.n == self.next_checkpoint {
                self.record();
                self.next_checkpoint = next_power_of_two_after(self.n);
            }
        }
        self.record();
        Ok(())
    }

    pub fn into_trajectory(self) -> Trajectory {
        Trajectory {
            horizon: self.n,
            terminal: RVec::from_vec(self.s),
            checkpoints: self.checkpoints,
            w_hat: None,
            clamp_events: self.clamp_events,
            seed: self.rng.seed(),
            replica_id: self.rng.replica_id(),
            rng_counter: self.rng.counter(),
            spec: self.spec,
        }
    }
}

/// Walkers advanced together by [`advance_lockstep`].
pub const LANES: usize = 4;

/// Advances walkers that share the same current time to `target`, stepping
/// them in an interleaved order so their independent dependency chains
/// overlap. Every walker ends in exactly the state `advance_to` would give.
/// On failure returns the index of the offending walker.
pub fn advance_lockstep(walkers: &mut [Walker], target: u64) -> std::result::Result<(), (usize, Error)> {
    let Some(first) = walkers.first() else {
        return Ok(());
    };
    let start = first.n;
    if walkers.iter().any(|w| w.n != start || w.s.len() != first.s.len()) {
        return Err((0, Error::InvalidArgument("lock-step walkers must share time and dimension".into())));
    }
    let scalar = first.s.len() == 1;
    let mut n0 = start;
    let mut next = first.next_checkpoint;
    while n0 < target {
        let stop = target.min(next);
        for chunk in walkers.chunks_mut(LANES) {
            if scalar {
                let mut s = [0.0; LANES];
                let mut clamps = [0_u64; LANES];
                for (v, w) in s.iter_mut().zip(chunk.iter()) {
                    *v = w.s[0];
                }
                for n in n0..stop {
                    for (l, w) in chunk.iter_mut().enumerate() {
                        let (x, clamped) = w.kernel.draw_scalar(s[l], n, &mut w.rng);
                        clamps[l] += clamped as u64;
                        s[l] += x;
                    }
                }
                for (l, w) in chunk.iter_mut().enumerate() {
                    w.s[0] = s[l];
                    w.clamp_events += clamps[l];
                }
            } else {
                for n in n0..stop {
                    for w in chunk.iter_mut() {
                        let clamped = w.kernel.draw(&w.s, n, &mut w.rng, &mut w.x);
                        w.clamp_events += clamped as u64;
                        for (s, x) in w.s.iter_mut().zip(&w.x) {
                            *s += x;
                        }
                    }
                }
            }
        }
        n0 = stop;
        for (i, w) in walkers.iter_mut().enumerate() {
            w.n = stop;
            if !w.s.iter().all(|v| v.is_finite()) {
                return Err((i, Error::Overflow { step: stop }));
            }
            if stop == w.next_checkpoint {
                w.record();
                w.next_checkpoint = next_power_of_two_after(stop);
            }
        }
        if stop == next {
            next = next_power_of_two_after(stop);
        }
    }
    for w in walkers.iter_mut() {
        w.record();
    }
    Ok(())
}

/// Simulates `S_1, ..., S_horizon` from `S_0 = 0`.
pub fn simulate_walk(spec: &WalkSpec, horizon: u64, rng: RngStream) -> Result<Trajectory> {
    simulate_walk_with(spec, horizon, rng, SimulationHooks::default())
}

pub fn simulate_walk_with(
    spec: &WalkSpec,
    horizon: u64,
    rng: RngStream,
    hooks: SimulationHooks,
) -> Result<Trajectory> {
    if horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let mut walker = Walker::new(spec, rng, hooks);
    walker.advance_to(horizon)?;
    Ok(walker.into_trajectory())
}

fn require_supercritical(spec: &WalkSpec) -> Result<()> {
    if spec.kind != DriftKind::Linear || classify_regime(spec)? != Regime::LinearSupercritical {
        return Err(Error::InvalidArgument(
            "W estimation needs a linear supercritical walk (lambda_min(A) > 1/2)".into(),
        ));
    }
    Ok(())
}

/// `W_hat = n^{-A} S_n` at `n = horizon_w`; the trajectory can be resumed.
pub fn estimate_w(spec: &WalkSpec, horizon_w: u64, rng: RngStream) -> Result<(RVec, Trajectory)> {
    require_supercritical(spec)?;
    let mut walker = Walker::new(spec, rng, SimulationHooks::default());
    walker.advance_to(horizon_w)?;
    w_from_walker(spec, walker)
}

/// [`estimate_w`] continuing an existing walker (any starting state).
pub fn estimate_w_from(spec: &WalkSpec, mut walker: Walker, horizon_w: u64) -> Result<(RVec, Trajectory)> {
    walker.advance_to(horizon_w)?;
    w_from_walker(spec, walker)
}

fn w_from_walker(spec: &WalkSpec, walker: Walker) -> Result<(RVec, Trajectory)> {
    let n = walker.time() as f64;
    let inv = matfun::inverse(&matrix_power(&spec.drift, n)?, "n^A")?;
    let mut traj = walker.into_trajectory();
    let w = inv * &traj.terminal;
    traj.w_hat = Some(w.clone());
    Ok((w, traj))
}

/// How terminal values are normalized in an ensemble.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Normalization {
    /// `S_n / sqrt(n)`.
    DiffusiveSqrtN,
    /// `n^-gamma S_n` with `gamma = (1 - beta)/(1 - alpha)`.
    PowerGamma,
    /// `(S_n - n^A W_hat) / sqrt(n)` with `W_hat = N^{-A} S_N` taken later on
    /// the same path, `N = w_horizon_factor * n`.
    SupercriticalResidual,
    /// `D_n^{-1} n^{-A} S_n`.
    CriticalLogNorm,
    /// Sum of the stable, central and unstable normalized components.
    MixedJoint,
}

impl Normalization {
    pub fn as_str(&self) -> &'static str {
        match self {
            Normalization::DiffusiveSqrtN => "diffusive-sqrt-n",
            Normalization::PowerGamma => "power-gamma",
            Normalization::SupercriticalResidual => "supercritical-residual",
            Normalization::CriticalLogNorm => "critical-log-norm",
            Normalization::MixedJoint => "mixed-joint",
        }
    }

    /// The normalization under which a regime's limit theorem is stated.
    pub fn for_regime(regime: Regime) -> Self {
        match regime {
            Regime::NonlinearAbove | Regime::NonlinearOnLine | Regime::LinearSubcritical => {
                Normalization::DiffusiveSqrtN
            }
            Regime::NonlinearBelow => Normalization::PowerGamma,
            Regime::LinearSupercritical => Normalization::SupercriticalResidual,
            Regime::LinearCritical => Normalization::CriticalLogNorm,
            Regime::LinearMixed => Normalization::MixedJoint,
        }
    }
}

/// Default ratio between the W-estimation horizon and the residual horizon.
pub const DEFAULT_W_HORIZON_FACTOR: u64 = 16;

#[derive(Clone, Debug)]
pub struct EnsembleConfig {
    pub horizon: u64,
    pub replicas: usize,
    pub normalization: Normalization,
    pub seed: u64,
    /// Worker threads; `None` uses the available parallelism.
    pub workers: Option<usize>,
    pub w_horizon_factor: u64,
    pub hooks: SimulationHooks,
}

impl EnsembleConfig {
    pub fn new(horizon: u64, replicas: usize, normalization: Normalization, seed: u64) -> Self {
        Self {
            horizon,
            replicas,
            normalization,
            seed,
            workers: None,
            w_horizon_factor: DEFAULT_W_HORIZON_FACTOR,
            hooks: SimulationHooks::default(),
        }
    }

    pub fn workers(mut self, workers: usize) -> Self {
        self.workers = Some(workers);
        self
    }

    pub fn w_horizon_factor(mut self, factor: u64) -> Self {
        self.w_horizon_factor = factor;
        self
    }

    pub fn hooks(mut self, hooks: SimulationHooks) -> Self {
        self.hooks = hooks;
        self
    }
}

#[derive(Clone, Debug)]
pub struct EnsembleMeta {
    pub spec: WalkSpec,
    pub horizon: u64,
    pub replicas: usize,
    pub seed: u64,
    /// Horizon at which `W_hat` was taken, when applicable.
    pub w_horizon: Option<u64>,
}

/// Normalized terminal values of `M` independent replicas (one row each,
/// ordered by replica id).
#[derive(Clone, Debug)]
pub struct TerminalEnsemble {
    pub values: RMat,
    pub normalization: Normalization,
    pub meta: EnsembleMeta,
    /// `W_hat` per replica for the residual normalizations.
    pub w_hat: Option<RMat>,
    pub checkpoints: Vec<Vec<Checkpoint>>,
    pub clamp_events: u64,
}

impl TerminalEnsemble {
    pub fn len(&self) -> usize {
        self.values.nrows()
    }

    pub fn is_empty(&self) -> bool {
        self.values.nrows() == 0
    }

    pub fn dim(&self) -> usize {
        self.values.ncols()
    }
}

/// Deterministic linear maps applied to each replica's raw path.
struct Normalizer {
    horizon: u64,
    w_horizon: Option<u64>,
    /// maps `S_n` to the row (power-gamma, critical, stable + central part)
    at_horizon: RMat,
    /// `n^A P_u` applied to `W_hat`, divided by `sqrt(n)` (residual forms)
    w_to_row: Option<RMat>,
    /// `N^{-A}`
    w_from_state: Option<RMat>,
}

impl Normalizer {
    fn new(spec: &WalkSpec, cfg: &EnsembleConfig) -> Result<Self> {
        let d = spec.dim;
        let n = cfg.horizon as f64;
        let eye = RMat::identity(d, d);
        let needs_linear = |what: &str| -> Result<()> {
            if spec.kind != DriftKind::Linear {
                return Err(Error::InvalidArgument(format!(
                    "{what} normalization needs a linear drift"
                )));
            }
            Ok(())
        };
        let residual_horizon = || -> Result<u64> {
            if cfg.w_horizon_factor < 2 {
                return Err(Error::InvalidArgument(
                    "w_horizon_factor must be at least 2".into(),
                ));
            }
            cfg.horizon
                .checked_mul(cfg.w_horizon_factor)
                .ok_or_else(|| Error::InvalidArgument("W horizon overflows".into()))
        };
        let mut out = Self {
            horizon: cfg.horizon,
            w_horizon: None,
            at_horizon: &eye / n.sqrt(),
            w_to_row: None,
            w_from_state: None,
        };
        match cfg.normalization {
            Normalization::DiffusiveSqrtN => {}
            Normalization::PowerGamma => {
                if spec.kind != DriftKind::Nonlinear {
                    return Err(Error::InvalidArgument(
                        "power-gamma normalization needs a nonlinear drift".into(),
                    ));
                }
                out.at_horizon = &eye * n.powf(-spec.gamma());
            }
            Normalization::CriticalLogNorm => {
                needs_linear("critical")?;
                let jordan = jordan_for(spec)?;
                jordan.validate_critical()?;
                let dn_inv = matfun::complex_inverse(&build_dn(&jordan, n)?, "D_n")?;
                let dn_inv = real_part_checked(&dn_inv)?;
                out.at_horizon = dn_inv * matfun::inverse(&matrix_power(&spec.drift, n)?, "n^A")?;
            }
            Normalization::SupercriticalResidual => {
                require_supercritical(spec)?;
                let big = residual_horizon()?;
                out.w_horizon = Some(big);
                out.w_to_row = Some(matrix_power(&spec.drift, n)? / n.sqrt());
                out.w_from_state = Some(matfun::inverse(&matrix_power(&spec.drift, big as f64)?, "N^A")?);
            }
            Normalization::MixedJoint => {
                needs_linear("mixed")?;
                let split = match &spec.jordan {
                    Some(j) => spectral_split_with_jordan(&spec.drift, j)?,
                    None => spectral_split(&spec.drift)?,
                };
                let mut map = &split.p_s / n.sqrt();
                if !split.central.is_empty() {
                    let dn_inv = matfun::complex_inverse(&build_dn(&split.jordan, n)?, "D_n")?;
                    let dn_inv = real_part_checked(&dn_inv)?;
                    let n_minus_a = matfun::inverse(&matrix_power(&spec.drift, n)?, "n^A")?;
                    map += dn_inv * n_minus_a * &split.p_c;
                }
                if !split.unstable.is_empty() {
                    let big = residual_horizon()?;
                    map += &split.p_u / n.sqrt();
                    out.w_horizon = Some(big);
                    out.w_to_row = Some(matrix_power(&spec.drift, n)? * &split.p_u / n.sqrt());
                    out.w_from_state =
                        Some(matfun::inverse(&matrix_power(&spec.drift, big as f64)?, "N^A")?);
                }
                out.at_horizon = map;
            }
        }
        Ok(out)
    }

    /// Simulates a group of replicas in lock-step and returns, per replica,
    /// `(row, W_hat, checkpoints, clamps)`.
    fn run_group(&self, spec: &WalkSpec, cfg: &EnsembleConfig, replicas: std::ops::Range<u64>) -> Result<Vec<ReplicaOutput>> {
        let ids: Vec<u64> = replicas.collect();
        let mut walkers: Vec<Walker> = ids
            .iter()
            .map(|&r| Walker::new(spec, RngStream::new(cfg.seed, r), cfg.hooks))
            .collect();
        let tag = |(i, e): (usize, Error)| e.in_replica(ids[i]);
        advance_lockstep(&mut walkers, self.horizon).map_err(tag)?;
        let mut rows: Vec<RVec> = walkers.iter().map(|w| &self.at_horizon * w.position()).collect();
        let mut w_hats = vec![None; walkers.len()];
        if let (Some(big), Some(w_to_row), Some(w_from_state)) =
            (self.w_horizon, &self.w_to_row, &self.w_from_state)
        {
            advance_lockstep(&mut walkers, big).map_err(tag)?;
            for ((row, w_hat), walker) in rows.iter_mut().zip(w_hats.iter_mut()).zip(&walkers) {
                let w = w_from_state * walker.position();
                *row -= w_to_row * &w;
                *w_hat = Some(w);
            }
        }
        let mut out = Vec::with_capacity(walkers.len());
        for (i, ((row, w_hat), walker)) in rows.into_iter().zip(w_hats).zip(walkers).enumerate() {
            if row.iter().any(|v| !v.is_finite()) {
                return Err(Error::Overflow { step: walker.time() }.in_replica(ids[i]));
            }
            out.push(ReplicaOutput {
                row,
                w_hat,
                clamps: walker.clamp_events(),
                checkpoints: walker.checkpoints,
            });
        }
        Ok(out)
    }
}

struct ReplicaOutput {
    row: RVec,
    w_hat: Option<RVec>,
    checkpoints: Vec<Checkpoint>,
    clamps: u64,
}

/// Runs `M` independent replicas (replica ids `0..M`) and normalizes their
/// terminal values. The result does not depend on the worker count.
pub fn run_ensemble(spec: &WalkSpec, cfg: &EnsembleConfig) -> Result<TerminalEnsemble> {
    if cfg.replicas < 2 {
        return Err(Error::InvalidArgument("an ensemble needs at least 2 replicas".into()));
    }
    if cfg.horizon == 0 {
        return Err(Error::InvalidArgument("horizon must be at least 1".into()));
    }
    let normalizer = Normalizer::new(spec, cfg)?;
    let groups = (cfg.replicas as u64).div_ceil(LANES as u64);
    let work = || {
        (0..groups)
            .into_par_iter()
            .map(|g| {
                let lo = g * LANES as u64;
                let hi = (lo + LANES as u64).min(cfg.replicas as u64);
                normalizer.run_group(spec, cfg, lo..hi)
            })
            .collect::<Vec<_>>()
    };
    let results = match cfg.workers {
        Some(w) => rayon::ThreadPoolBuilder::new()
            .num_threads(w.max(1))
            .build()
            .map_err(|e| Error::InvalidArgument(format!("thread pool: {e}")))?
            .install(work),
        None => work(),
    };

    let d = spec.dim;
    let m = cfg.replicas;
    let mut values = RMat::zeros(m, d);
    let has_w = normalizer.w_horizon.is_some();
    let mut w_hat = has_w.then(|| RMat::zeros(m, d));
    let mut checkpoints = Vec::with_capacity(m);
    let mut clamp_events = 0;
    for (i, out) in results.into_iter().collect::<Result<Vec<_>>>()?.into_iter().flatten().enumerate() {
        values.set_row(i, &out.row.transpose());
        if let (Some(store), Some(w)) = (w_hat.as_mut(), out.w_hat) {
            store.set_row(i, &w.transpose());
        }
        checkpoints.push(out.checkpoints);
        clamp_events += out.clamps;
    }
    Ok(TerminalEnsemble {
        values,
        normalization: cfg.normalization,
        meta: EnsembleMeta {
            spec: spec.clone(),
            horizon: cfg.horizon,
            replicas: m,
            seed: cfg.seed,
            w_horizon: normalizer.w_horizon,
        },
        w_hat,
        checkpoints,
        clamp_events,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::model::NoiseModel;
    use nalgebra::{dmatrix, dvector};

    #[test]
    fn first_step_is_centred() {
        let spec = WalkSpec::linear(dmatrix![0.75], dmatrix![1.0]).unwrap();
        let mut kernel = StepKernel::new(&spec, SimulationHooks { noise_scale: 0.0, drift_enabled: true });
        let mut rng = RngStream::new(1, 0);
        let mut out = [0.0];
        kernel.draw(&[5.0], 0, &mut rng, &mut out);
        assert_eq!(out[0], 0.0);
        kernel.draw(&[5.0], 1, &mut rng, &mut out);
        assert_eq!(out[0], 3.75);
    }

    #[test]
    fn strict_mode_clamps_large_drift() {
        let spec = WalkSpec::nonlinear(0.5, 0.9, dmatrix![1.0]).unwrap();
        let draw = step(&dvector![1e6], 1, &spec, &mut RngStream::new(3, 0));
        assert!(draw.clamped);
        // with zero innovation the increment is the drift itself
        assert!((draw.increment[0] - 1e3).abs() < 1e-9);
        let relaxed = spec.with_noise(NoiseModel {
            family: NoiseFamily::Gaussian,
            mode: NoiseMode::RelaxedSecondMoment,
        });
        assert!(!step(&dvector![1e6], 1, &relaxed, &mut RngStream::new(3, 0)).clamped);
    }

    #[test]
    fn strict_mode_multi_dim_clamp() {
        let spec = WalkSpec::nonlinear(0.5, 0.9, RMat::identity(2, 2)).unwrap();
        let draw = step(&dvector![1e6, 0.0], 1, &spec, &mut RngStream::new(3, 0));
        assert!(draw.clamped);
        assert!(draw.increment.iter().all(|v| v.is_finite()));
    }

    #[test]
    fn checkpoints_are_geometric() {
        let spec = WalkSpec::nonlinear(0.5, 0.9, dmatrix![1.0]).unwrap();
        let t = simulate_walk(&spec, 100, RngStream::new(1, 0)).unwrap();
        let ks: Vec<u64> = t.checkpoints.iter().map(|c| c.k).collect();
        assert_eq!(ks, vec![1, 2, 4, 8, 16, 32, 64, 100]);
        assert_eq!(t.checkpoints.last().unwrap().position, t.terminal.as_slice());
    }

    #[test]
    fn horizon_one_is_first_increment() {
        let spec = WalkSpec::linear(dmatrix![0.3], dmatrix![2.0]).unwrap();
        let t = simulate_walk(&spec, 1, RngStream::new(9, 4)).unwrap();
        let x1 = step(&dvector![0.0], 0, &spec, &mut RngStream::new(9, 4));
        assert_eq!(t.terminal, x1.increment);
    }

    #[test]
    fn resume_continues_the_same_path() {
        let spec = WalkSpec::linear(dmatrix![0.3, 0.1; 0.0, 0.6], RMat::identity(2, 2)).unwrap();
        let full = simulate_walk(&spec, 500, RngStream::new(5, 2)).unwrap();
        let half = simulate_walk(&spec, 200, RngStream::new(5, 2)).unwrap();
        let mut walker = half.resume(SimulationHooks::default());
        walker.advance_to(500).unwrap();
        assert_eq!(walker.position(), full.terminal);
    }

    #[test]
    fn zero_horizon_rejected() {
        let spec = WalkSpec::linear(dmatrix![0.3], dmatrix![1.0]).unwrap();
        assert!(simulate_walk(&spec, 0, RngStream::new(0, 0)).is_err());
    }

    #[test]
    fn estimate_w_requires_supercritical() {
        let spec = WalkSpec::linear(dmatrix![0.3], dmatrix![1.0]).unwrap();
        assert!(estimate_w(&spec, 100, RngStream::new(0, 0)).is_err());
    }
}
