// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! C ABI for the rwsd library.
//!
//! Objects are opaque handles created by `*_new`/`*_run` functions and
//! released by the matching `*_free`. Every fallible function returns an
//! [`RwsdStatus`]; on failure a message is available from
//! [`rwsd_last_error_message`] on the same thread. Matrices are passed as
//! row-major `double` arrays of length `dim * dim`. Panics never cross the
//! boundary.

#![allow(clippy::missing_safety_doc)]

use std::cell::RefCell;
use std::ffi::{c_char, CString};
use std::panic::{catch_unwind, AssertUnwindSafe};
use std::ptr;

use rwsd::matfun::{lyapunov_solve, matrix_gamma};
use rwsd::model::{classify_regime, predict_limit_law, LimitLaw, NoiseFamily, NoiseMode, NoiseModel, Regime};
use rwsd::simulate::{run_ensemble, EnsembleConfig, Normalization, TerminalEnsemble};
use rwsd::{Error, RMat, WalkSpec};

/// Result codes.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwsdStatus {
    Ok = 0,
    NullPointer = 1,
    InvalidArgument = 2,
    InvalidSpec = 3,
    RegimeNotCovered = 4,
    UnsupportedRegime = 5,
    /// Singular, ill-conditioned or otherwise unusable linear algebra.
    Numerical = 6,
    /// Overflow or divergence during simulation.
    Simulation = 7,
    BufferTooSmall = 8,
    /// The request does not apply to the predicted law (e.g. asking for a
    /// covariance of a non-Gaussian limit).
    WrongLaw = 9,
    Panic = 10,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwsdRegime {
    NonlinearAbove = 0,
    NonlinearOnLine = 1,
    NonlinearBelow = 2,
    LinearSubcritical = 3,
    LinearSupercritical = 4,
    LinearCritical = 5,
    LinearMixed = 6,
}

impl From<Regime> for RwsdRegime {
    fn from(r: Regime) -> Self {
        match r {
            Regime::NonlinearAbove => RwsdRegime::NonlinearAbove,
            Regime::NonlinearOnLine => RwsdRegime::NonlinearOnLine,
            Regime::NonlinearBelow => RwsdRegime::NonlinearBelow,
            Regime::LinearSubcritical => RwsdRegime::LinearSubcritical,
            Regime::LinearSupercritical => RwsdRegime::LinearSupercritical,
            Regime::LinearCritical => RwsdRegime::LinearCritical,
            Regime::LinearMixed => RwsdRegime::LinearMixed,
        }
    }
}

/// Values accepted by `rwsd_ensemble_run`; `RWSD_NORMALIZATION_AUTO` picks
/// the regime's natural normalization.
#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwsdNormalization {
    Auto = 0,
    DiffusiveSqrtN = 1,
    PowerGamma = 2,
    SupercriticalResidual = 3,
    CriticalLogNorm = 4,
    MixedJoint = 5,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwsdNoiseFamily {
    Gaussian = 0,
    BoundedRademacherMixture = 1,
}

#[repr(C)]
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum RwsdNoiseMode {
    StrictSecondMoment = 0,
    RelaxedSecondMoment = 1,
}

/// Opaque walk specification.
pub struct RwsdSpec {
    inner: WalkSpec,
}

/// Opaque normalized ensemble (`replicas x dim`).
pub struct RwsdEnsemble {
    inner: TerminalEnsemble,
}

thread_local! {
    static LAST_ERROR: RefCell<Option<CString>> = const { RefCell::new(None) };
}

fn set_error(msg: String) {
    let c = CString::new(msg.replace('\0', " ")).expect("interior NULs removed");
    LAST_ERROR.with(|e| *e.borrow_mut() = Some(c));
}

fn status_for(err: &Error) -> RwsdStatus {
    match err {
        Error::InvalidSpec(_) | Error::Jordan(_) => RwsdStatus::InvalidSpec,
        Error::InvalidArgument(_) | Error::Config(_) => RwsdStatus::InvalidArgument,
        Error::RegimeNotCovered(_) => RwsdStatus::RegimeNotCovered,
        Error::UnsupportedRegime(_) => RwsdStatus::UnsupportedRegime,
        Error::Singular(_)
        | Error::Spectrum(_)
        | Error::IllConditioned { .. }
        | Error::ComplexResidue(_)
        | Error::Quadrature(_) => RwsdStatus::Numerical,
        Error::Overflow { .. } | Error::BlowUp { .. } | Error::Io(_) => RwsdStatus::Simulation,
        Error::Replica { source, .. } => status_for(source),
    }
}

struct Failure(RwsdStatus, String);

impl From<Error> for Failure {
    fn from(e: Error) -> Self {
        Failure(status_for(&e), e.to_string())
    }
}

fn fail(status: RwsdStatus, msg: impl Into<String>) -> Failure {
    Failure(status, msg.into())
}

/// Runs `f`, records any error message and converts panics.
fn guard(f: impl FnOnce() -> Result<(), Failure>) -> RwsdStatus {
    match catch_unwind(AssertUnwindSafe(f)) {
        Ok(Ok(())) => RwsdStatus::Ok,
        Ok(Err(Failure(status, msg))) => {
            set_error(msg);
            status
        }
        Err(_) => {
            set_error("internal panic".into());
            RwsdStatus::Panic
        }
    }
}

unsafe fn read_matrix(data: *const f64, dim: usize, what: &str) -> Result<RMat, Failure> {
    if data.is_null() {
        return Err(fail(RwsdStatus::NullPointer, format!("{what} is null")));
    }
    if dim == 0 {
        return Err(fail(RwsdStatus::InvalidArgument, "dim must be positive"));
    }
    let slice = std::slice::from_raw_parts(data, dim * dim);
    Ok(RMat::from_row_slice(dim, dim, slice))
}

unsafe fn write_matrix(m: &RMat, out: *mut f64, len: usize) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(RwsdStatus::NullPointer, "output buffer is null"));
    }
    let need = m.nrows() * m.ncols();
    if len < need {
        return Err(fail(
            RwsdStatus::BufferTooSmall,
            format!("output buffer holds {len} values, {need} needed"),
        ));
    }
    let out = std::slice::from_raw_parts_mut(out, need);
    for i in 0..m.nrows() {
        for j in 0..m.ncols() {
            out[i * m.ncols() + j] = m[(i, j)];
        }
    }
    Ok(())
}

unsafe fn spec_ref<'a>(spec: *const RwsdSpec) -> Result<&'a WalkSpec, Failure> {
    spec.as_ref()
        .map(|s| &s.inner)
        .ok_or_else(|| fail(RwsdStatus::NullPointer, "spec handle is null"))
}

unsafe fn store<T>(out: *mut *mut T, value: T) -> Result<(), Failure> {
    if out.is_null() {
        return Err(fail(RwsdStatus::NullPointer, "output handle pointer is null"));
    }
    *out = Box::into_raw(Box::new(value));
    Ok(())
}

/// Library version as a static NUL-terminated string.
#[no_mangle]
pub extern "C" fn rwsd_version() -> *const c_char {
    concat!(env!("CARGO_PKG_VERSION"), "\0").as_ptr().cast()
}

/// Copies the calling thread's last error message into `buf` (NUL
/// terminated, truncated to `len`). Returns the full message length
/// including the terminator, or 0 when there is no message.
#[no_mangle]
pub unsafe extern "C" fn rwsd_last_error_message(buf: *mut c_char, len: usize) -> usize {
    LAST_ERROR.with(|e| {
        let e = e.borrow();
        let Some(msg) = e.as_ref() else {
            return 0;
        };
        let bytes = msg.as_bytes_with_nul();
        if !buf.is_null() && len > 0 {
            let n = bytes.len().min(len);
            ptr::copy_nonoverlapping(bytes.as_ptr().cast(), buf, n);
            *buf.add(n - 1) = 0;
        }
        bytes.len()
    })
}

/// Nonlinear walk with drift `n^-beta |s|^(alpha-1) rho s`.
#[no_mangle]
pub unsafe extern "C" fn rwsd_spec_new_nonlinear(
    dim: usize,
    alpha: f64,
    beta: f64,
    rho: f64,
    sigma: *const f64,
    out: *mut *mut RwsdSpec,
) -> RwsdStatus {
    guard(|| {
        let sigma = read_matrix(sigma, dim, "sigma")?;
        let inner = WalkSpec::nonlinear_scaled(alpha, beta, rho, sigma)?;
        store(out, RwsdSpec { inner })
    })
}

/// Linear walk with drift `A s / n`.
#[no_mangle]
pub unsafe extern "C" fn rwsd_spec_new_linear(
    dim: usize,
    drift: *const f64,
    sigma: *const f64,
    out: *mut *mut RwsdSpec,
) -> RwsdStatus {
    guard(|| {
        let a = read_matrix(drift, dim, "drift")?;
        let sigma = read_matrix(sigma, dim, "sigma")?;
        let inner = WalkSpec::linear(a, sigma)?;
        store(out, RwsdSpec { inner })
    })
}

/// Selects the innovation law; `family` is an `RwsdNoiseFamily` and `mode`
/// an `RwsdNoiseMode` value.
#[no_mangle]
pub unsafe extern "C" fn rwsd_spec_set_noise(spec: *mut RwsdSpec, family: i32, mode: i32) -> RwsdStatus {
    guard(|| {
        let spec = spec
            .as_mut()
            .ok_or_else(|| fail(RwsdStatus::NullPointer, "spec handle is null"))?;
        let family = match family {
            0 => NoiseFamily::Gaussian,
            1 => NoiseFamily::BoundedRademacherMixture,
            v => return Err(fail(RwsdStatus::InvalidArgument, format!("unknown noise family {v}"))),
        };
        let mode = match mode {
            0 => NoiseMode::StrictSecondMoment,
            1 => NoiseMode::RelaxedSecondMoment,
            v => return Err(fail(RwsdStatus::InvalidArgument, format!("unknown noise mode {v}"))),
        };
        spec.inner.noise = NoiseModel { family, mode };
        Ok(())
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwsd_spec_dim(spec: *const RwsdSpec) -> usize {
    spec.as_ref().map_or(0, |s| s.inner.dim)
}

#[no_mangle]
pub unsafe extern "C" fn rwsd_spec_free(spec: *mut RwsdSpec) {
    if !spec.is_null() {
        drop(Box::from_raw(spec));
    }
}

/// Writes the regime as an `RwsdRegime` value.
#[no_mangle]
pub unsafe extern "C" fn rwsd_classify(spec: *const RwsdSpec, regime: *mut i32) -> RwsdStatus {
    guard(|| {
        let spec = spec_ref(spec)?;
        if regime.is_null() {
            return Err(fail(RwsdStatus::NullPointer, "regime output is null"));
        }
        *regime = RwsdRegime::from(classify_regime(spec)?) as i32;
        Ok(())
    })
}

/// Covariance (`dim * dim`, row-major) of a Gaussian limit law.
#[no_mangle]
pub unsafe extern "C" fn rwsd_predict_covariance(spec: *const RwsdSpec, out: *mut f64, len: usize) -> RwsdStatus {
    guard(|| {
        let spec = spec_ref(spec)?;
        let law = predict_limit_law(spec, classify_regime(spec)?)?;
        let cov = law
            .gaussian_covariance()
            .ok_or_else(|| fail(RwsdStatus::WrongLaw, format!("the limit law is {}, not Gaussian", law.kind())))?;
        write_matrix(&cov, out, len)
    })
}

/// Localization radius of a walk below the critical line.
#[no_mangle]
pub unsafe extern "C" fn rwsd_predict_radius(spec: *const RwsdSpec, radius: *mut f64) -> RwsdStatus {
    guard(|| {
        let spec = spec_ref(spec)?;
        if radius.is_null() {
            return Err(fail(RwsdStatus::NullPointer, "radius output is null"));
        }
        match predict_limit_law(spec, classify_regime(spec)?)? {
            LimitLaw::Sphere { radius: r, .. } => {
                *radius = r;
                Ok(())
            }
            law => Err(fail(RwsdStatus::WrongLaw, format!("the limit law is {}, not a sphere", law.kind()))),
        }
    })
}

/// Solves `(I/2 - A) X + X (I/2 - A)^T = Sigma`.
#[no_mangle]
pub unsafe extern "C" fn rwsd_lyapunov_solve(dim: usize, a: *const f64, sigma: *const f64, out: *mut f64) -> RwsdStatus {
    guard(|| {
        let a = read_matrix(a, dim, "A")?;
        let sigma = read_matrix(sigma, dim, "sigma")?;
        write_matrix(&lyapunov_solve(&a, &sigma)?, out, dim * dim)
    })
}

/// Matrix Gamma function of `B` (eigenvalues with positive real parts).
#[no_mangle]
pub unsafe extern "C" fn rwsd_matrix_gamma(dim: usize, b: *const f64, out: *mut f64) -> RwsdStatus {
    guard(|| {
        let b = read_matrix(b, dim, "B")?;
        write_matrix(&matrix_gamma(&b)?, out, dim * dim)
    })
}

/// Simulates `replicas` walks to `horizon` and normalizes their terminal
/// values. `normalization` is an `RwsdNormalization` value; `workers = 0`
/// uses the available parallelism. Results do not depend on `workers`.
#[no_mangle]
pub unsafe extern "C" fn rwsd_ensemble_run(
    spec: *const RwsdSpec,
    horizon: u64,
    replicas: usize,
    normalization: i32,
    seed: u64,
    workers: usize,
    out: *mut *mut RwsdEnsemble,
) -> RwsdStatus {
    guard(|| {
        let spec = spec_ref(spec)?;
        let normalization = match normalization {
            0 => Normalization::for_regime(classify_regime(spec)?),
            1 => Normalization::DiffusiveSqrtN,
            2 => Normalization::PowerGamma,
            3 => Normalization::SupercriticalResidual,
            4 => Normalization::CriticalLogNorm,
            5 => Normalization::MixedJoint,
            v => return Err(fail(RwsdStatus::InvalidArgument, format!("unknown normalization {v}"))),
        };
        let mut cfg = EnsembleConfig::new(horizon, replicas, normalization, seed);
        if workers > 0 {
            cfg = cfg.workers(workers);
        }
        let inner = run_ensemble(spec, &cfg)?;
        store(out, RwsdEnsemble { inner })
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwsd_ensemble_rows(ensemble: *const RwsdEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.inner.len())
}

#[no_mangle]
pub unsafe extern "C" fn rwsd_ensemble_cols(ensemble: *const RwsdEnsemble) -> usize {
    ensemble.as_ref().map_or(0, |e| e.inner.dim())
}

/// Copies the `rows * cols` normalized values, row-major, into `out`.
#[no_mangle]
pub unsafe extern "C" fn rwsd_ensemble_values(ensemble: *const RwsdEnsemble, out: *mut f64, len: usize) -> RwsdStatus {
    guard(|| {
        let e = ensemble
            .as_ref()
            .ok_or_else(|| fail(RwsdStatus::NullPointer, "ensemble handle is null"))?;
        write_matrix(&e.inner.values, out, len)
    })
}

#[no_mangle]
pub unsafe extern "C" fn rwsd_ensemble_free(ensemble: *mut RwsdEnsemble) {
    if !ensemble.is_null() {
        drop(Box::from_raw(ensemble));
    }
}
