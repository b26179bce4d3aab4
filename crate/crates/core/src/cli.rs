// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Declarative experiments: TOML configs in, reports and CSV data out.
//!
//! A run writes `report.json`, `ensemble.csv`, `predicted_law.json` and
//! `checkpoints.csv` to the output directory. Numbers in CSV files carry 17
//! significant digits. Reruns with the same config and seed reproduce every
//! file byte for byte, whatever the worker count.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use nalgebra::DMatrix;
use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::matfun::{JordanBlock, JordanSpec};
use crate::model::{
    classify_nonlinear, classify_regime, localization_radius, predict_limit_law, DriftKind, LimitLaw, NoiseModel, Regime,
};
use crate::sde::{sample_stationary, stationary_density_1d, SdeSpec};
use crate::simulate::{run_ensemble, simulate_walk, EnsembleConfig, Normalization, TerminalEnsemble, DEFAULT_W_HORIZON_FACTOR};
use crate::stats::{evaluate, median, slope_fit, EvalOptions, StatReport};
use crate::{Error, RMat, Result, RngStream, WalkSpec};

/// Version of the JSON and CSV layouts written by this module.
pub const SCHEMA_VERSION: u32 = 1;

/// Process exit codes.
pub mod exit {
    pub const PASS: i32 = 0;
    pub const METRIC_FAILURE: i32 = 1;
    pub const CONFIG_ERROR: i32 = 2;
    pub const RUNTIME_ERROR: i32 = 3;
}

/// Exit code for an error: problems with the input map to
/// [`exit::CONFIG_ERROR`], everything else to [`exit::RUNTIME_ERROR`].
pub fn exit_code_for(err: &Error) -> i32 {
    match err {
        Error::Config(_)
        | Error::InvalidSpec(_)
        | Error::InvalidArgument(_)
        | Error::Jordan(_)
        | Error::RegimeNotCovered(_)
        | Error::UnsupportedRegime(_) => exit::CONFIG_ERROR,
        _ => exit::RUNTIME_ERROR,
    }
}

fn one() -> f64 {
    1.0
}

/// User-supplied Jordan data; `Q = q_re + i q_im`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct JordanConfig {
    pub q_re: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub q_im: Option<Vec<Vec<f64>>>,
    pub blocks: Vec<JordanBlock>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WalkConfig {
    pub kind: DriftKind,
    #[serde(default = "one")]
    pub alpha: f64,
    #[serde(default = "one")]
    pub beta: f64,
    /// Scale of the nonlinear drift `A = rho I` (default 1).
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rho: Option<f64>,
    /// Drift matrix of the linear kind, row-major.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub drift: Option<Vec<Vec<f64>>>,
    /// Conditional second moment, row-major.
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub noise: NoiseModel,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub jordan: Option<JordanConfig>,
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SdeOverrides {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_burn: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub t_sample: Option<f64>,
}

fn default_outputs() -> PathBuf {
    PathBuf::from("out")
}

/// One experiment: a walk, an ensemble size and where to write results.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub horizon: u64,
    pub replicas: usize,
    pub seed: u64,
    /// Overrides the regime's natural normalization.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub normalization: Option<Normalization>,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub workers: Option<usize>,
    /// Ratio of the W-estimation horizon to the residual horizon.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub w_horizon_factor: Option<u64>,
    pub walk: WalkConfig,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sde: Option<SdeOverrides>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eval: Option<EvalOptions>,
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<RMat> {
    let n = rows.len();
    if n == 0 {
        return Err(Error::Config(format!("{what} must be a non-empty matrix")));
    }
    let m = rows[0].len();
    if rows.iter().any(|r| r.len() != m) {
        return Err(Error::Config(format!("{what} has rows of different lengths")));
    }
    Ok(DMatrix::from_fn(n, m, |i, j| rows[i][j]))
}

fn nested(m: &RMat) -> Vec<Vec<f64>> {
    m.row_iter().map(|r| r.iter().copied().collect()).collect()
}

impl ExperimentConfig {
    /// Parses TOML; syntax and type errors carry line and column.
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text).map_err(|e| match e {
            Error::Config(msg) => Error::Config(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn to_toml(&self) -> Result<String> {
        toml::to_string(self).map_err(|e| Error::Config(e.to_string()))
    }

    /// Validated walk specification.
    pub fn walk_spec(&self) -> Result<WalkSpec> {
        let w = &self.walk;
        let sigma = matrix(&w.sigma, "walk.sigma")?;
        let d = sigma.nrows();
        let drift = match (w.kind, &w.drift, w.rho) {
            (DriftKind::Linear, Some(a), None) => matrix(a, "walk.drift")?,
            (DriftKind::Linear, None, _) => {
                return Err(Error::Config("a linear walk needs walk.drift".into()))
            }
            (DriftKind::Linear, Some(_), Some(_)) => {
                return Err(Error::Config("walk.rho applies to the nonlinear kind only".into()))
            }
            (DriftKind::Nonlinear, None, rho) => RMat::identity(d, d) * rho.unwrap_or(1.0),
            (DriftKind::Nonlinear, Some(_), _) => {
                return Err(Error::Config(
                    "a nonlinear walk takes walk.rho, not walk.drift".into(),
                ))
            }
        };
        let jordan = match &w.jordan {
            None => None,
            Some(j) => {
                let re = matrix(&j.q_re, "walk.jordan.q_re")?;
                let im = match &j.q_im {
                    Some(im) => matrix(im, "walk.jordan.q_im")?,
                    None => RMat::zeros(re.nrows(), re.ncols()),
                };
                if im.shape() != re.shape() {
                    return Err(Error::Config("walk.jordan.q_re and q_im differ in shape".into()));
                }
                let q = DMatrix::from_fn(re.nrows(), re.ncols(), |i, k| Complex64::new(re[(i, k)], im[(i, k)]));
                Some(JordanSpec::new(q, j.blocks.clone())?)
            }
        };
        WalkSpec::new(w.kind, w.alpha, w.beta, drift, sigma, w.noise, jordan)
    }

    /// SDE parameters for the critical-line diffusion of this walk.
    pub fn sde_spec(&self, spec: &WalkSpec) -> Result<SdeSpec> {
        let mut sde = SdeSpec::new(spec.alpha, spec.sigma.clone())?;
        if let Some(o) = &self.sde {
            sde.dt = o.dt.unwrap_or(sde.dt);
            sde.t_burn = o.t_burn.unwrap_or(sde.t_burn);
            sde.t_sample = o.t_sample.unwrap_or(sde.t_sample);
        }
        sde.validate()?;
        Ok(sde)
    }

    pub fn eval_options(&self) -> EvalOptions {
        let mut opts = self.eval.clone().unwrap_or_else(|| EvalOptions {
            seed: self.seed,
            ..EvalOptions::default()
        });
        if let Some(o) = &self.sde {
            opts.sde_dt = o.dt.unwrap_or(opts.sde_dt);
            opts.sde_t_burn = o.t_burn.unwrap_or(opts.sde_t_burn);
        }
        opts
    }

    pub fn ensemble_config(&self, normalization: Normalization) -> EnsembleConfig {
        let mut cfg = EnsembleConfig::new(self.horizon, self.replicas, normalization, self.seed)
            .w_horizon_factor(self.w_horizon_factor.unwrap_or(DEFAULT_W_HORIZON_FACTOR));
        cfg.workers = self.workers;
        cfg
    }
}

/// JSON form of a limit law with row-major nested matrices.
pub fn law_to_json(law: &LimitLaw) -> Value {
    match law {
        LimitLaw::Gaussian { covariance } => json!({
            "kind": law.kind(),
            "covariance": nested(covariance),
        }),
        LimitLaw::SdeStationary { alpha, sigma } => json!({
            "kind": law.kind(),
            "alpha": alpha,
            "sigma": nested(sigma),
        }),
        LimitLaw::Sphere { radius, gamma } => json!({
            "kind": law.kind(),
            "radius": radius,
            "gamma": gamma,
        }),
        LimitLaw::Joint {
            stable,
            central,
            unstable,
        } => json!({
            "kind": law.kind(),
            "stable": nested(stable),
            "central": nested(central),
            "unstable": nested(unstable),
            "covariance": nested(&(stable + central + unstable)),
        }),
    }
}

/// Prediction for a config without simulating.
pub fn predict(config: &ExperimentConfig) -> Result<(Regime, LimitLaw)> {
    let spec = config.walk_spec()?;
    let regime = classify_regime(&spec)?;
    Ok((regime, predict_limit_law(&spec, regime)?))
}

/// Formats a float with 17 significant digits.
pub fn fmt_full(x: f64) -> String {
    format!("{x:.16e}")
}

fn coordinate_header(prefix: &str, d: usize) -> String {
    (0..d).map(|j| format!(",{prefix}{j}")).collect()
}

pub fn ensemble_csv(ensemble: &TerminalEnsemble) -> String {
    let mut out = format!("replica_id{}\n", coordinate_header("x", ensemble.dim()));
    for (i, row) in ensemble.values.row_iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row.iter() {
            let _ = write!(out, ",{}", fmt_full(*v));
        }
        out.push('\n');
    }
    out
}

pub fn checkpoints_csv(ensemble: &TerminalEnsemble) -> String {
    let mut out = format!("replica_id,k{}\n", coordinate_header("s", ensemble.dim()));
    for (i, cps) in ensemble.checkpoints.iter().enumerate() {
        for c in cps {
            let _ = write!(out, "{i},{}", c.k);
            for v in &c.position {
                let _ = write!(out, ",{}", fmt_full(*v));
            }
            out.push('\n');
        }
    }
    out
}

/// Result of [`run_experiment`].
#[derive(Clone, Debug)]
pub struct RunOutcome {
    pub report: StatReport,
    pub law: LimitLaw,
    pub ensemble: TerminalEnsemble,
    pub exit_code: i32,
    pub report_json: Value,
}

fn write_json(path: &Path, value: &Value) -> Result<()> {
    let text = serde_json::to_string_pretty(value).expect("JSON values always serialize");
    fs::write(path, text + "\n")?;
    Ok(())
}

/// Simulates, evaluates and writes all artifacts to `config.outputs`.
///
/// When the ensemble fails, `report.json` records the failing replica and the
/// error is returned.
pub fn run_experiment(config: &ExperimentConfig) -> Result<RunOutcome> {
    let spec = config.walk_spec()?;
    let regime = classify_regime(&spec)?;
    let law = predict_limit_law(&spec, regime)?;
    let normalization = config
        .normalization
        .unwrap_or_else(|| Normalization::for_regime(regime));
    let out_dir = &config.outputs;
    fs::create_dir_all(out_dir)?;
    write_json(
        &out_dir.join("predicted_law.json"),
        &json!({
            "schema_version": SCHEMA_VERSION,
            "regime": regime,
            "law": law_to_json(&law),
        }),
    )?;

    let ensemble = match run_ensemble(&spec, &config.ensemble_config(normalization)) {
        Ok(e) => e,
        Err(err) => {
            let replica = match &err {
                Error::Replica { replica, .. } => Some(*replica),
                _ => None,
            };
            write_json(
                &out_dir.join("report.json"),
                &json!({
                    "schema_version": SCHEMA_VERSION,
                    "status": "runtime-error",
                    "regime": regime,
                    "normalization": normalization,
                    "failed_replica": replica,
                    "error": err.to_string(),
                }),
            )?;
            return Err(err);
        }
    };
    let report = evaluate(&ensemble, regime, &law, &config.eval_options())?;
    let passed = report.passed();
    let report_json = json!({
        "schema_version": SCHEMA_VERSION,
        "status": if passed { "pass" } else { "fail" },
        "regime": regime,
        "normalization": normalization,
        "law": law.kind(),
        "w_horizon": ensemble.meta.w_horizon,
        "clamp_events": ensemble.clamp_events,
        "report": report,
    });
    write_json(&out_dir.join("report.json"), &report_json)?;
    fs::write(out_dir.join("ensemble.csv"), ensemble_csv(&ensemble))?;
    fs::write(out_dir.join("checkpoints.csv"), checkpoints_csv(&ensemble))?;
    Ok(RunOutcome {
        report,
        law,
        ensemble,
        exit_code: if passed { exit::PASS } else { exit::METRIC_FAILURE },
        report_json,
    })
}

/// Stationary samples of the critical-line diffusion for the config's walk
/// (`replicas` independent chains).
pub fn sde_sample(config: &ExperimentConfig) -> Result<RMat> {
    let spec = config.walk_spec()?;
    if spec.kind != DriftKind::Nonlinear {
        return Err(Error::Config("sde-sample needs a nonlinear walk".into()));
    }
    let sde = config.sde_spec(&spec)?;
    sample_stationary(&sde, config.replicas, config.seed)
}

/// Grid over the `(alpha, beta)` plane.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub alpha: [f64; 2],
    pub beta: [f64; 2],
    pub resolution: usize,
    pub sigma: Vec<Vec<f64>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default = "default_outputs")]
    pub outputs: PathBuf,
    /// When set, each valid point also gets a median growth slope from
    /// `quick_replicas` walks of this length.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub quick_horizon: Option<u64>,
    #[serde(default = "default_quick_replicas")]
    pub quick_replicas: usize,
}

fn default_quick_replicas() -> usize {
    8
}

pub const MAX_SWEEP_RESOLUTION: usize = 64;

impl SweepConfig {
    pub fn from_toml_str(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| Error::Config(e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_toml_str(&text)
    }
}

/// One grid point of the phase map.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct PhasePoint {
    pub alpha: f64,
    pub beta: f64,
    /// Regime name, or `invalid` outside `0 < alpha <= beta <= 1`.
    pub regime: String,
    /// Trace of the Gaussian limit covariance (above the line) or the
    /// stationary second moment (on the line, d = 1).
    pub variance_trace: Option<f64>,
    /// Localization radius (below the line).
    pub radius: Option<f64>,
    pub slope: Option<f64>,
}

fn axis(range: [f64; 2], n: usize) -> Vec<f64> {
    if n == 1 {
        return vec![range[0]];
    }
    (0..n)
        .map(|i| range[0] + (range[1] - range[0]) * i as f64 / (n - 1) as f64)
        .collect()
}

/// Classifies every grid point and attaches the predicted summary.
pub fn phase_sweep(config: &SweepConfig) -> Result<Vec<PhasePoint>> {
    if config.resolution == 0 || config.resolution > MAX_SWEEP_RESOLUTION {
        return Err(Error::Config(format!(
            "resolution must be between 1 and {MAX_SWEEP_RESOLUTION}, got {}",
            config.resolution
        )));
    }
    let sigma = matrix(&config.sigma, "sigma")?;
    let mut points = Vec::with_capacity(config.resolution * config.resolution);
    for (ia, &alpha) in axis(config.alpha, config.resolution).iter().enumerate() {
        for (ib, &beta) in axis(config.beta, config.resolution).iter().enumerate() {
            let mut p = PhasePoint {
                alpha,
                beta,
                regime: "invalid".into(),
                variance_trace: None,
                radius: None,
                slope: None,
            };
            let Ok(spec) = WalkSpec::nonlinear(alpha, beta, sigma.clone()) else {
                points.push(p);
                continue;
            };
            let regime = if spec.kind == DriftKind::Linear {
                classify_regime(&spec)
            } else {
                classify_nonlinear(alpha, beta)
            };
            let Ok(regime) = regime else {
                points.push(p);
                continue;
            };
            p.regime = regime.as_str().into();
            match regime {
                Regime::NonlinearAbove => p.variance_trace = Some(sigma.trace()),
                Regime::NonlinearOnLine if sigma.nrows() == 1 => {
                    p.variance_trace = Some(stationary_density_1d(alpha, sigma[(0, 0)])?.second_moment()?)
                }
                Regime::NonlinearBelow => p.radius = Some(localization_radius(alpha, beta)),
                _ => {
                    if let Ok(law) = predict_limit_law(&spec, regime) {
                        p.variance_trace = law.gaussian_covariance().map(|c| c.trace());
                    }
                }
            }
            if let Some(h) = config.quick_horizon {
                let point_seed = config
                    .seed
                    .wrapping_add((ia * MAX_SWEEP_RESOLUTION + ib) as u64);
                let slopes = (0..config.quick_replicas as u64)
                    .filter_map(|r| {
                        let t = simulate_walk(&spec, h, RngStream::new(point_seed, r)).ok()?;
                        slope_fit(&t.checkpoints).ok()
                    })
                    .collect::<Vec<_>>();
                if !slopes.is_empty() {
                    p.slope = Some(median(&slopes));
                }
            }
            points.push(p);
        }
    }
    Ok(points)
}

fn opt(x: Option<f64>) -> String {
    x.map(fmt_full).unwrap_or_default()
}

pub fn phase_map_csv(points: &[PhasePoint]) -> String {
    let mut out = String::from("alpha,beta,regime,variance_trace,radius,slope\n");
    for p in points {
        let _ = writeln!(
            out,
            "{},{},{},{},{},{}",
            fmt_full(p.alpha),
            fmt_full(p.beta),
            p.regime,
            opt(p.variance_trace),
            opt(p.radius),
            opt(p.slope)
        );
    }
    out
}

/// Runs the sweep and writes `phase_map.csv` to `config.outputs`.
pub fn write_phase_map(config: &SweepConfig) -> Result<Vec<PhasePoint>> {
    let points = phase_sweep(config)?;
    fs::create_dir_all(&config.outputs)?;
    fs::write(config.outputs.join("phase_map.csv"), phase_map_csv(&points))?;
    Ok(points)
}

/// CSV rendering of a sample matrix with a `chain_id` column.
pub fn samples_csv(samples: &RMat) -> String {
    let mut out = format!("chain_id{}\n", coordinate_header("x", samples.ncols()));
    for (i, row) in samples.row_iter().enumerate() {
        let _ = write!(out, "{i}");
        for v in row.iter() {
            let _ = write!(out, ",{}", fmt_full(*v));
        }
        out.push('\n');
    }
    out
}

pub fn metrics_csv(report: &StatReport) -> String {
    let mut out = String::from("name,value,target,tolerance,pass\n");
    for m in &report.metrics {
        let _ = writeln!(
            out,
            "{},{},{},{},{}",
            m.name,
            fmt_full(m.value),
            opt(m.target),
            fmt_full(m.tolerance),
            m.pass
        );
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const SUBCRITICAL: &str = r#"
horizon = 1000
replicas = 50
seed = 7

[walk]
kind = "linear"
drift = [[0.25]]
sigma = [[1.0]]
"#;

    #[test]
    fn parses_and_round_trips() {
        let cfg = ExperimentConfig::from_toml_str(SUBCRITICAL).unwrap();
        assert_eq!(cfg.outputs, PathBuf::from("out"));
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
    }

    #[test]
    fn round_trips_every_optional_field() {
        let text = r#"
horizon = 100
replicas = 4
seed = 1
normalization = "critical-log-norm"
outputs = "runs/a"
workers = 3
w_horizon_factor = 32

[walk]
kind = "linear"
drift = [[0.5, 1.0], [0.0, 0.5]]
sigma = [[1.0, 0.0], [0.0, 1.0]]
noise = { family = "bounded-rademacher-mixture", mode = "relaxed-second-moment" }

[walk.jordan]
q_re = [[1.0, 0.0], [0.0, 1.0]]
blocks = [{ eigenvalue = [0.5, 0.0], size = 2 }]

[sde]
dt = 0.002

[eval]
projections = 8
seed = 4
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        assert_eq!(cfg.walk.jordan.as_ref().unwrap().blocks[0].size, 2);
        assert_eq!(cfg.eval.as_ref().unwrap().projections, 8);
        let again = ExperimentConfig::from_toml_str(&cfg.to_toml().unwrap()).unwrap();
        assert_eq!(cfg, again);
        let spec = cfg.walk_spec().unwrap();
        assert_eq!(classify_regime(&spec).unwrap(), Regime::LinearCritical);
    }

    #[test]
    fn unknown_keys_are_rejected() {
        let text = SUBCRITICAL.replace("seed = 7", "seed = 7\nsede = 1");
        let err = ExperimentConfig::from_toml_str(&text).unwrap_err().to_string();
        assert!(err.contains("sede"), "{err}");
        let text = SUBCRITICAL.replace("kind = \"linear\"", "kind = \"linear\"\nbogus = 2");
        assert!(ExperimentConfig::from_toml_str(&text).is_err());
    }

    #[test]
    fn parse_errors_name_the_line() {
        let err = ExperimentConfig::from_toml_str("horizon = \nreplicas = 3").unwrap_err().to_string();
        assert!(err.contains("line 1"), "{err}");
    }

    #[test]
    fn invalid_alpha_names_the_invariant() {
        let text = r#"
horizon = 10
replicas = 4
seed = 1
[walk]
kind = "nonlinear"
alpha = 1.5
beta = 0.9
sigma = [[1.0]]
"#;
        let cfg = ExperimentConfig::from_toml_str(text).unwrap();
        let err = cfg.walk_spec().unwrap_err();
        assert_eq!(exit_code_for(&err), exit::CONFIG_ERROR);
        assert!(err.to_string().contains("alpha <= beta"), "{err}");
    }

    #[test]
    fn drift_and_kind_must_agree() {
        let text = SUBCRITICAL.replace("drift = [[0.25]]", "rho = 0.5");
        let cfg = ExperimentConfig::from_toml_str(&text).unwrap();
        assert!(cfg.walk_spec().is_err());
    }

    #[test]
    fn prediction_without_simulation() {
        let cfg = ExperimentConfig::from_toml_str(SUBCRITICAL).unwrap();
        let (regime, law) = predict(&cfg).unwrap();
        assert_eq!(regime, Regime::LinearSubcritical);
        let json = law_to_json(&law);
        assert!((json["covariance"][0][0].as_f64().unwrap() - 2.0).abs() < 1e-12);
    }

    #[test]
    fn full_precision_formatting() {
        let x = 0.1 + 0.2;
        assert_eq!(fmt_full(x).parse::<f64>().unwrap(), x);
        assert_eq!(fmt_full(1.0), "1.0000000000000000e0");
    }

    #[test]
    fn sweep_labels() {
        let cfg = SweepConfig {
            alpha: [0.25, 0.75],
            beta: [0.5, 1.0],
            resolution: 3,
            sigma: vec![vec![1.0]],
            seed: 0,
            outputs: PathBuf::from("unused"),
            quick_horizon: None,
            quick_replicas: 8,
        };
        let pts = phase_sweep(&cfg).unwrap();
        assert_eq!(pts.len(), 9);
        let on = pts.iter().find(|p| p.alpha == 0.5 && p.beta == 0.75).unwrap();
        assert_eq!(on.regime, "nonlinear-on-line");
        assert!(on.variance_trace.unwrap() > 0.0);
        for p in &pts {
            if p.alpha <= p.beta && p.beta < (p.alpha + 1.0) / 2.0 {
                assert_eq!(p.regime, "nonlinear-below");
                assert!(p.radius.is_some());
            }
            if p.alpha > p.beta {
                assert_eq!(p.regime, "invalid");
            }
        }
        let too_fine = SweepConfig {
            resolution: 65,
            ..cfg
        };
        assert!(phase_sweep(&too_fine).is_err());
    }
}
