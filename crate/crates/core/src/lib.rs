// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

//! Simulation and verification laboratory for random walks with
//! spatio-temporal drift.
//!
//! A walk `S_n = X_1 + ... + X_n` in `R^d` has conditional step mean
//! `mu(s, n) = n^-beta * |s|^(alpha-1) * A s` and conditional second moment
//! `Sigma`. Depending on `(alpha, beta)` and the spectrum of `A`, the
//! suitably normalized walk converges to a Gaussian law, to the stationary
//! law of a diffusion, or localizes on a sphere. This crate
//!
//! * classifies a walk into its asymptotic regime and computes the predicted
//!   limit object ([`model`], [`matfun`], [`sde`]),
//! * simulates reproducible Monte Carlo ensembles of the walk ([`simulate`]),
//! * compares the ensembles against the predictions ([`stats`]),
//! * and drives whole experiments from a config file ([`cli`]).

pub mod cli;
pub mod error;
pub mod matfun;
pub mod model;
pub mod quadrature;
pub mod rng;
pub mod sde;
pub mod simulate;
pub mod stats;

pub use error::{Error, Result};
pub use model::{
    classify_regime, drift_mu, potential_h, predict_limit_law, DriftKind, LimitLaw, NoiseFamily,
    NoiseMode, NoiseModel, Regime, WalkSpec,
};
pub use rng::RngStream;

/// Dense real matrix used throughout the crate.
pub type RMat = nalgebra::DMatrix<f64>;
/// Dense complex matrix (Jordan bases, critical covariances).
pub type CMat = nalgebra::DMatrix<num_complex::Complex64>;
/// Dense real vector.
pub type RVec = nalgebra::DVector<f64>;
