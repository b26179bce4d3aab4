// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Comparing simulated ensembles with predicted limit laws.
//!
//! Every check produces [`Metric`]s with an explicit tolerance; a
//! [`StatReport`] passes when all of its metrics do.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::distribution::{ChiSquared, ContinuousCDF, Normal};

use crate::model::{LimitLaw, Regime};
use crate::sde::{ks_distance, sample_stationary, sde_cdf_distance, stationary_density_1d, SdeSpec};
use crate::simulate::{Checkpoint, Normalization, TerminalEnsemble};
use crate::{matfun, Error, RMat, RVec, Result, RngStream};

/// Default number of random projections in the Gaussian fit.
pub const DEFAULT_PROJECTIONS: usize = 32;
/// Relative half-width of the localization shell.
pub const DEFAULT_SPHERE_DELTA: f64 = 0.05;
/// Mahalanobis coverage levels.
pub const COVERAGE_LEVELS: [f64; 3] = [0.5, 0.9, 0.99];
/// Extra room on top of oracle quantiles for finite-horizon bias.
pub const ORACLE_MARGIN: f64 = 1.5;
/// Stream id reserved for projection directions.
const PROJECTION_STREAM: u64 = u64::MAX - 1;
/// Stream id reserved for permutations and oracle draws.
const RESAMPLING_STREAM: u64 = u64::MAX - 2;

/// One named check.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Metric {
    pub name: String,
    pub value: f64,
    /// Reference value when the check is two-sided around a prediction.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub target: Option<f64>,
    pub tolerance: f64,
    pub pass: bool,
}

impl Metric {
    /// Passes when `value <= bound`.
    pub fn at_most(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            tolerance: bound,
            pass: value <= bound,
        }
    }

    /// Passes when `value >= bound`.
    pub fn at_least(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: None,
            tolerance: bound,
            pass: value >= bound,
        }
    }

    /// Passes when `|value - target| <= rel * |target|`.
    pub fn relative(name: impl Into<String>, value: f64, target: f64, rel: f64) -> Self {
        Self {
            name: name.into(),
            value,
            target: Some(target),
            tolerance: rel,
            pass: (value - target).abs() <= rel * target.abs(),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SampleSizes {
    pub replicas: usize,
    pub horizon: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StatReport {
    pub regime: Regime,
    pub metrics: Vec<Metric>,
    pub sample_sizes: SampleSizes,
    pub seed: u64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub warnings: Vec<String>,
}

impl StatReport {
    pub fn new(regime: Regime, sample_sizes: SampleSizes, seed: u64) -> Self {
        Self {
            regime,
            metrics: Vec::new(),
            sample_sizes,
            seed,
            warnings: Vec::new(),
        }
    }

    /// AND of all metric verdicts.
    pub fn passed(&self) -> bool {
        self.metrics.iter().all(|m| m.pass)
    }

    pub fn metric(&self, name: &str) -> Option<&Metric> {
        self.metrics.iter().find(|m| m.name == name)
    }
}

/// Unbiased sample covariance of the rows.
pub fn empirical_covariance(values: &RMat) -> RMat {
    let m = values.nrows();
    let d = values.ncols();
    assert!(m >= 2, "covariance needs at least two rows");
    let mean = values.row_mean();
    let mut centred = values.clone();
    for mut row in centred.row_iter_mut() {
        row -= &mean;
    }
    let mut cov = centred.transpose() * &centred / (m - 1) as f64;
    for i in 0..d {
        for j in 0..i {
            let v = 0.5 * (cov[(i, j)] + cov[(j, i)]);
            cov[(i, j)] = v;
            cov[(j, i)] = v;
        }
    }
    cov
}

/// Column means.
pub fn empirical_mean(values: &RMat) -> RVec {
    values.row_mean().transpose()
}

/// Kolmogorov distribution `P(sup |B| <= x)` of the scaled KS statistic.
pub fn kolmogorov_cdf(x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < 1.0 {
        // theta-function form converges fast for small x
        let c = std::f64::consts::PI.powi(2) / (8.0 * x * x);
        let s: f64 = (1..=50)
            .map(|k| (-((2 * k - 1) as f64).powi(2) * c).exp())
            .sum();
        return ((2.0 * std::f64::consts::PI).sqrt() / x * s).min(1.0);
    }
    let s: f64 = (1..=100)
        .map(|k| {
            let sign = if k % 2 == 1 { 1.0 } else { -1.0 };
            sign * (-2.0 * (k * k) as f64 * x * x).exp()
        })
        .sum();
    (1.0 - 2.0 * s).clamp(0.0, 1.0)
}

/// Quantile of the Kolmogorov distribution.
pub fn kolmogorov_quantile(p: f64) -> f64 {
    let (mut lo, mut hi) = (0.0, 10.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if kolmogorov_cdf(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// Asymptotic level-`p` band for the one-sample KS distance at sample size `m`.
pub fn ks_band(p: f64, m: usize) -> f64 {
    kolmogorov_quantile(p) / (m as f64).sqrt()
}

/// `k` seeded unit directions in `R^d`.
pub fn projection_directions(d: usize, k: usize, seed: u64) -> Vec<RVec> {
    let mut rng = RngStream::new(seed, PROJECTION_STREAM);
    (0..k)
        .map(|_| loop {
            let mut v = RVec::zeros(d);
            rng.fill_standard_normal(v.as_mut_slice());
            let n = v.norm();
            if n > 1e-12 {
                break v / n;
            }
        })
        .collect()
}

/// Outcome of [`gaussian_fit_test`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianFit {
    /// KS distance of each projection against its projected normal.
    pub projection_ks: Vec<f64>,
    pub max_ks: f64,
    /// `(level, observed fraction)` of squared Mahalanobis radii below the
    /// chi-square quantile.
    pub coverage: Vec<(f64, f64)>,
    pub max_coverage_deviation: f64,
    /// Squared Mahalanobis radius of every row.
    pub mahalanobis: Vec<f64>,
    pub warnings: Vec<String>,
}

/// Pseudo-inverse of a symmetric PSD matrix on its numerical range, with
/// the rank of that range.
fn pseudo_inverse(cov: &RMat) -> (RMat, usize) {
    let eig = cov.clone().symmetric_eigen();
    let scale = eig.eigenvalues.amax().max(f64::MIN_POSITIVE);
    let d = cov.nrows();
    let mut inv = RMat::zeros(d, d);
    let mut rank = 0;
    for (k, &l) in eig.eigenvalues.iter().enumerate() {
        if l > 1e-10 * scale {
            let v = eig.eigenvectors.column(k);
            inv += v * v.transpose() / l;
            rank += 1;
        }
    }
    (inv, rank.max(1))
}

/// Squared Mahalanobis radii `x^T Sigma^{-1} x` of the rows.
pub fn mahalanobis_radii(values: &RMat, covariance: &RMat) -> Vec<f64> {
    mahalanobis_with(values, covariance).0
}

fn mahalanobis_with(values: &RMat, covariance: &RMat) -> (Vec<f64>, usize, bool) {
    if let Some(chol) = covariance.clone().cholesky() {
        let l = chol.l();
        let radii = values
            .row_iter()
            .map(|row| {
                let y = l
                    .solve_lower_triangular(&row.transpose())
                    .expect("Cholesky factor is invertible");
                y.norm_squared()
            })
            .collect();
        return (radii, covariance.nrows(), false);
    }
    let (inv, rank) = pseudo_inverse(covariance);
    let radii = values
        .row_iter()
        .map(|row| {
            let x = row.transpose();
            (x.transpose() * &inv * &x)[(0, 0)]
        })
        .collect();
    (radii, rank, true)
}

/// Cramer-Wold projection KS test and Mahalanobis coverage against
/// `N(0, covariance)`.
pub fn gaussian_fit_test(values: &RMat, covariance: &RMat, projections: usize, seed: u64) -> Result<GaussianFit> {
    let d = values.ncols();
    if covariance.nrows() != d || covariance.ncols() != d {
        return Err(Error::InvalidArgument(format!(
            "covariance is {}x{} but the ensemble has dimension {d}",
            covariance.nrows(),
            covariance.ncols()
        )));
    }
    if values.nrows() < 2 || projections == 0 {
        return Err(Error::InvalidArgument("need at least 2 rows and 1 projection".into()));
    }
    let mut warnings = Vec::new();
    let dirs = projection_directions(d, projections, seed);
    let projection_ks: Vec<f64> = dirs
        .par_iter()
        .map(|u| {
            let var = (u.transpose() * covariance * u)[(0, 0)];
            let samples: Vec<f64> = (values * u).iter().copied().collect();
            if var <= 0.0 {
                // degenerate projected law: point mass at 0
                return ks_distance(&samples, |x| if x >= 0.0 { 1.0 } else { 0.0 });
            }
            let normal = Normal::new(0.0, var.sqrt()).expect("positive variance");
            ks_distance(&samples, |x| normal.cdf(x))
        })
        .collect();
    let max_ks = projection_ks.iter().copied().fold(0.0, f64::max);

    let (radii, rank, pinv) = mahalanobis_with(values, covariance);
    if pinv {
        warnings.push(format!(
            "covariance is singular; Mahalanobis radii use the pseudo-inverse on a rank-{rank} range"
        ));
    }
    let chi = ChiSquared::new(rank as f64).expect("positive degrees of freedom");
    let m = radii.len() as f64;
    let coverage: Vec<(f64, f64)> = COVERAGE_LEVELS
        .iter()
        .map(|&q| {
            let cut = chi.inverse_cdf(q);
            (q, radii.iter().filter(|&&r| r <= cut).count() as f64 / m)
        })
        .collect();
    let max_coverage_deviation = coverage.iter().map(|(q, f)| (f - q).abs()).fold(0.0, f64::max);
    Ok(GaussianFit {
        projection_ks,
        max_ks,
        coverage,
        max_coverage_deviation,
        mahalanobis: radii,
        warnings,
    })
}

/// Draws `m` rows from `N(0, covariance)`.
pub fn sample_gaussian(covariance: &RMat, m: usize, rng: &mut RngStream) -> RMat {
    let d = covariance.nrows();
    let root = matfun::sym_sqrt(covariance);
    let mut z = RMat::zeros(d, m);
    rng.fill_standard_normal(z.as_mut_slice());
    (root * z).transpose()
}

/// Tolerances for [`gaussian_fit_test`] calibrated on exact samples.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GaussianTolerance {
    pub max_ks: f64,
    pub coverage: f64,
}

/// Runs the Gaussian fit on `oracle_runs` ensembles of size `m` drawn
/// exactly from `N(0, covariance)` and returns the 99% quantiles of the two
/// statistics, inflated by [`ORACLE_MARGIN`].
pub fn calibrate_gaussian_tolerance(
    covariance: &RMat,
    m: usize,
    projections: usize,
    seed: u64,
    oracle_runs: usize,
) -> Result<GaussianTolerance> {
    let runs = (0..oracle_runs as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = RngStream::new(seed ^ 0x6f72_6163_6c65, RESAMPLING_STREAM - 1 - r);
            let sample = sample_gaussian(covariance, m, &mut rng);
            gaussian_fit_test(&sample, covariance, projections, seed).map(|f| (f.max_ks, f.max_coverage_deviation))
        })
        .collect::<Result<Vec<_>>>()?;
    let ks: Vec<f64> = runs.iter().map(|r| r.0).collect();
    let cov: Vec<f64> = runs.iter().map(|r| r.1).collect();
    Ok(GaussianTolerance {
        max_ks: ORACLE_MARGIN * quantile(&ks, 0.99),
        coverage: ORACLE_MARGIN * quantile(&cov, 0.99),
    })
}

/// Empirical quantile (linear interpolation between order statistics).
pub fn quantile(values: &[f64], p: f64) -> f64 {
    assert!(!values.is_empty(), "quantile of an empty sample");
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let pos = p.clamp(0.0, 1.0) * (v.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    v[lo] + (pos - lo as f64) * (v[hi] - v[lo])
}

pub fn median(values: &[f64]) -> f64 {
    quantile(values, 0.5)
}

/// Summary of how tightly rows concentrate on a sphere.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct SphereSummary {
    pub radius: f64,
    pub delta: f64,
    pub mean_deviation: f64,
    pub max_deviation: f64,
    /// Fraction with `| ||row|| - r | < delta r`.
    pub fraction_within: f64,
    /// Fraction with `||row|| < r / 10`.
    pub fraction_near_origin: f64,
}

/// Radial deviations of the rows from the sphere of radius `radius`.
pub fn sphere_test(values: &RMat, radius: f64, delta: f64) -> SphereSummary {
    let m = values.nrows().max(1) as f64;
    let norms: Vec<f64> = values.row_iter().map(|r| r.norm()).collect();
    let devs: Vec<f64> = norms.iter().map(|n| (n - radius).abs()).collect();
    SphereSummary {
        radius,
        delta,
        mean_deviation: devs.iter().sum::<f64>() / m,
        max_deviation: devs.iter().copied().fold(0.0, f64::max),
        fraction_within: devs.iter().filter(|&&e| e < delta * radius).count() as f64 / m,
        fraction_near_origin: norms.iter().filter(|&&n| n < radius / 10.0).count() as f64 / m,
    }
}

fn row_dist(a: &RMat, i: usize, b: &RMat, j: usize) -> f64 {
    let mut s = 0.0;
    for k in 0..a.ncols() {
        let t = a[(i, k)] - b[(j, k)];
        s += t * t;
    }
    s.sqrt()
}

fn mean_pair_distance(a: &RMat, b: &RMat) -> f64 {
    let total: f64 = (0..a.nrows())
        .into_par_iter()
        .map(|i| (0..b.nrows()).map(|j| row_dist(a, i, b, j)).sum::<f64>())
        .collect::<Vec<_>>()
        .iter()
        .sum();
    total / (a.nrows() * b.nrows()) as f64
}

/// Orders two ensembles canonically so that symmetric expressions are
/// evaluated identically for `(a, b)` and `(b, a)`.
fn canonical<'a>(a: &'a RMat, b: &'a RMat) -> (&'a RMat, &'a RMat) {
    let key = |m: &RMat| (m.nrows(), m.iter().map(|v| v.to_bits()).collect::<Vec<_>>());
    if key(a) <= key(b) {
        (a, b)
    } else {
        (b, a)
    }
}

/// Energy distance `2 E|X - Y| - E|X - X'| - E|Y - Y'|` between the empirical
/// measures of the rows (V-statistic form, so it is 0 for identical sets).
pub fn two_sample_distance(a: &RMat, b: &RMat) -> Result<f64> {
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidArgument("ensembles differ in dimension".into()));
    }
    if a.nrows() == 0 || b.nrows() == 0 {
        return Err(Error::InvalidArgument("ensembles must be non-empty".into()));
    }
    let (a, b) = canonical(a, b);
    let e = 2.0 * mean_pair_distance(a, b) - mean_pair_distance(a, a) - mean_pair_distance(b, b);
    Ok(e.max(0.0))
}

/// Level-`p` quantile of the energy distance under random relabelling of the
/// pooled rows.
///
/// With `D` the pooled distance matrix and weights `w = 1_A/n_a - 1_B/n_b`
/// for a labelling, the statistic is `-w^T D w`. All labellings are handled
/// at once as `W^T (D W)`, with `D` generated in row blocks so that nothing
/// quadratic in the pool size is stored.
pub fn energy_permutation_quantile(a: &RMat, b: &RMat, permutations: usize, p: f64, seed: u64) -> Result<f64> {
    use rand::seq::SliceRandom;
    if a.ncols() != b.ncols() {
        return Err(Error::InvalidArgument("ensembles differ in dimension".into()));
    }
    let (na, nb) = (a.nrows(), b.nrows());
    if na == 0 || nb == 0 || permutations == 0 {
        return Err(Error::InvalidArgument(
            "permutation test needs non-empty ensembles and at least one permutation".into(),
        ));
    }
    let n = na + nb;
    let d = a.ncols();
    let mut pooled = RMat::zeros(n, d);
    pooled.rows_mut(0, na).copy_from(a);
    pooled.rows_mut(na, nb).copy_from(b);
    let (wa, wb) = (1.0 / na as f64, -1.0 / nb as f64);
    let mut weights = RMat::zeros(n, permutations);
    for k in 0..permutations {
        let mut rng = RngStream::new(seed, RESAMPLING_STREAM - 1000 - k as u64);
        let mut labels: Vec<bool> = (0..n).map(|i| i < na).collect();
        labels.shuffle(&mut rng);
        for (i, &in_a) in labels.iter().enumerate() {
            weights[(i, k)] = if in_a { wa } else { wb };
        }
    }
    const BLOCK: usize = 256;
    let starts: Vec<usize> = (0..n).step_by(BLOCK).collect();
    let partials = starts
        .par_iter()
        .map(|&start| {
            let rows = BLOCK.min(n - start);
            let dist = RMat::from_fn(rows, n, |i, j| row_dist(&pooled, start + i, &pooled, j));
            let y = dist * &weights;
            let mut partial = vec![0.0; permutations];
            for (k, acc) in partial.iter_mut().enumerate() {
                for i in 0..rows {
                    *acc -= weights[(start + i, k)] * y[(i, k)];
                }
            }
            partial
        })
        .collect::<Vec<_>>();
    // summed in block order so the result does not depend on the thread count
    let mut stats = vec![0.0; permutations];
    for partial in &partials {
        stats.iter_mut().zip(partial).for_each(|(u, v)| *u += v);
    }
    Ok(quantile(&stats, p))
}

/// Least-squares slope of `log ||S_k||` against `log k` over the last half of
/// the checkpoints.
pub fn slope_fit(checkpoints: &[Checkpoint]) -> Result<f64> {
    if checkpoints.len() < 4 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 4 checkpoints, got {}",
            checkpoints.len()
        )));
    }
    let start = checkpoints.len() / 2;
    fit_log_slope(&checkpoints[start..])
}

/// Least-squares slope over the checkpoints with `k >= k_min`.
pub fn slope_fit_from(checkpoints: &[Checkpoint], k_min: u64) -> Result<f64> {
    let used: Vec<Checkpoint> = checkpoints.iter().filter(|c| c.k >= k_min).cloned().collect();
    if used.len() < 2 {
        return Err(Error::InvalidArgument(format!(
            "slope fit needs at least 2 checkpoints with k >= {k_min}"
        )));
    }
    fit_log_slope(&used)
}

fn fit_log_slope(points: &[Checkpoint]) -> Result<f64> {
    let mut xs = Vec::with_capacity(points.len());
    let mut ys = Vec::with_capacity(points.len());
    for c in points {
        let norm = c.norm();
        if !(norm > 0.0) || c.k == 0 {
            return Err(Error::InvalidArgument(format!(
                "degenerate checkpoint at k = {} (zero position)",
                c.k
            )));
        }
        xs.push((c.k as f64).ln());
        ys.push(norm.ln());
    }
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InvalidArgument("checkpoints share one time".into()));
    }
    Ok(sxy / sxx)
}

/// Settings for [`evaluate`].
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct EvalOptions {
    pub projections: usize,
    /// Seed for projections, oracle draws and permutations.
    pub seed: u64,
    /// Exact-law ensembles used to calibrate the Gaussian fit.
    pub oracle_runs: usize,
    /// Relative tolerance for covariance entries (against the largest
    /// diagonal entry).
    pub covariance_rel_tol: f64,
    pub sphere_delta: f64,
    pub sphere_min_fraction: f64,
    /// KS bound against the explicit stationary density (d = 1).
    pub density_ks: f64,
    pub permutations: usize,
    /// SDE integration used as the reference for d >= 2 on the critical line.
    pub sde_dt: f64,
    pub sde_t_burn: f64,
}

impl Default for EvalOptions {
    fn default() -> Self {
        Self {
            projections: DEFAULT_PROJECTIONS,
            seed: 0,
            oracle_runs: 200,
            covariance_rel_tol: 0.08,
            sphere_delta: DEFAULT_SPHERE_DELTA,
            sphere_min_fraction: 0.95,
            density_ks: 0.05,
            permutations: 200,
            sde_dt: crate::sde::DEFAULT_DT,
            sde_t_burn: crate::sde::DEFAULT_T_BURN,
        }
    }
}

/// Compares the ensemble covariance entrywise with `target`.
pub fn covariance_metrics(values: &RMat, target: &RMat, rel: f64) -> Vec<Metric> {
    let cov = empirical_covariance(values);
    let d = target.nrows();
    if d == 1 {
        return vec![Metric::relative("variance", cov[(0, 0)], target[(0, 0)], rel)];
    }
    let scale = (0..d).map(|i| target[(i, i)].abs()).fold(0.0, f64::max);
    let mut worst: f64 = 0.0;
    for i in 0..d {
        for j in 0..d {
            worst = worst.max((cov[(i, j)] - target[(i, j)]).abs() / scale);
        }
    }
    vec![Metric::at_most("covariance_max_rel_error", worst, rel)]
}

/// Runs the checks appropriate for the predicted law on a normalized
/// ensemble.
pub fn evaluate(ensemble: &TerminalEnsemble, regime: Regime, law: &LimitLaw, opts: &EvalOptions) -> Result<StatReport> {
    let values = &ensemble.values;
    let m = values.nrows();
    let mut report = StatReport::new(
        regime,
        SampleSizes {
            replicas: m,
            horizon: ensemble.meta.horizon,
        },
        ensemble.meta.seed,
    );
    match law {
        LimitLaw::Gaussian { .. } | LimitLaw::Joint { .. } => {
            let cov = law.gaussian_covariance().expect("Gaussian law");
            report.metrics.extend(covariance_metrics(values, &cov, opts.covariance_rel_tol));
            let min_eig = matfun::min_sym_eigenvalue(&cov);
            if min_eig > 0.0 && ensemble.normalization != Normalization::SupercriticalResidual {
                let fit = gaussian_fit_test(values, &cov, opts.projections, opts.seed)?;
                let tol = calibrate_gaussian_tolerance(&cov, m, opts.projections, opts.seed, opts.oracle_runs)?;
                report.metrics.push(Metric::at_most("projection_ks_max", fit.max_ks, tol.max_ks));
                report
                    .metrics
                    .push(Metric::at_most("mahalanobis_coverage_max_dev", fit.max_coverage_deviation, tol.coverage));
                report.warnings.extend(fit.warnings);
            }
            if let Some(w) = &ensemble.w_hat {
                let var = empirical_covariance(w).diagonal().min();
                let se = var * (2.0 / (m - 1) as f64).sqrt();
                report.metrics.push(Metric::at_least("w_hat_min_variance_z", var / se, 5.0));
            }
        }
        LimitLaw::Sphere { radius, .. } => {
            let s = sphere_test(values, *radius, opts.sphere_delta);
            report
                .metrics
                .push(Metric::at_least("fraction_within_shell", s.fraction_within, opts.sphere_min_fraction));
            report
                .metrics
                .push(Metric::at_most("fraction_near_origin", s.fraction_near_origin, 0.0));
            report.metrics.push(Metric::at_most(
                "median_radial_deviation",
                median(&values.row_iter().map(|r| (r.norm() - radius).abs()).collect::<Vec<_>>()),
                opts.sphere_delta * radius,
            ));
        }
        LimitLaw::SdeStationary { alpha, sigma } => {
            if sigma.nrows() == 1 {
                let density = stationary_density_1d(*alpha, sigma[(0, 0)])?;
                let samples: Vec<f64> = values.iter().copied().collect();
                report
                    .metrics
                    .push(Metric::at_most("density_ks", sde_cdf_distance(&samples, &density), opts.density_ks));
            } else {
                let mut sde = SdeSpec::new(*alpha, sigma.clone())?;
                sde.dt = opts.sde_dt;
                sde.t_burn = opts.sde_t_burn;
                sde.validate()?;
                let reference = sample_stationary(&sde, m, opts.seed ^ 0x5de)?;
                let e = two_sample_distance(values, &reference)?;
                let q = energy_permutation_quantile(values, &reference, opts.permutations, 0.99, opts.seed)?;
                report.metrics.push(Metric::at_most("energy_distance", e, ORACLE_MARGIN * q));
            }
        }
    }
    Ok(report)
}
