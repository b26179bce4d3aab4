// Copyright 2026 The rwsd Authors
// SPDX-License-Identifier: Apache-2.0

use thiserror::Error;

pub type Result<T, E = Error> = std::result::Result<T, E>;

#[derive(Debug, Error)]
pub enum Error {
    #[error("invalid walk specification: {0}")]
    InvalidSpec(String),

    #[error("regime not covered: {0}")]
    RegimeNotCovered(String),

    #[error("unsupported regime: {0}")]
    UnsupportedRegime(String),

    #[error("invalid argument: {0}")]
    InvalidArgument(String),

    #[error("singular matrix: {0}")]
    Singular(String),

    #[error("spectrum violation: {0}")]
    Spectrum(String),

    #[error(
        "eigenbasis is ill-conditioned (condition number {cond:.3e}); \
         supply a Jordan decomposition for this drift matrix"
    )]
    IllConditioned { cond: f64 },

    #[error("invalid Jordan data: {0}")]
    Jordan(String),

    #[error("result has non-negligible imaginary part ({0:.3e})")]
    ComplexResidue(f64),

    #[error("numeric overflow at step {step}")]
    Overflow { step: u64 },

    #[error("SDE chain left the ball of radius 1e6 at t = {t:.3}")]
    BlowUp { t: f64 },

    #[error("quadrature did not converge: {0}")]
    Quadrature(String),

    #[error("replica {replica}: {source}")]
    Replica {
        replica: u64,
        #[source]
        source: Box<Error>,
    },

    #[error("config error: {0}")]
    Config(String),

    #[error(transparent)]
    Io(#[from] std::io::Error),
}

impl Error {
    pub(crate) fn in_replica(self, replica: u64) -> Self {
        Error::Replica {
            replica,
            source: Box::new(self),
        }
    }
}
