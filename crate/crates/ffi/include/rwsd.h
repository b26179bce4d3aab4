/* Copyright 2026 The rwsd Authors
 * SPDX-License-Identifier: Apache-2.0
 *
 * Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#ifndef RWSD_H
#define RWSD_H



#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum {
  RWSD_NOISE_FAMILY_GAUSSIAN = 0,
  RWSD_NOISE_FAMILY_BOUNDED_RADEMACHER_MIXTURE = 1,
} RwsdNoiseFamily;

typedef enum {
  RWSD_NOISE_MODE_STRICT_SECOND_MOMENT = 0,
  RWSD_NOISE_MODE_RELAXED_SECOND_MOMENT = 1,
} RwsdNoiseMode;

/**
 * Values accepted by `rwsd_ensemble_run`; `RWSD_NORMALIZATION_AUTO` picks
 * the regime's natural normalization.
 */
typedef enum {
  RWSD_NORMALIZATION_AUTO = 0,
  RWSD_NORMALIZATION_DIFFUSIVE_SQRT_N = 1,
  RWSD_NORMALIZATION_POWER_GAMMA = 2,
  RWSD_NORMALIZATION_SUPERCRITICAL_RESIDUAL = 3,
  RWSD_NORMALIZATION_CRITICAL_LOG_NORM = 4,
  RWSD_NORMALIZATION_MIXED_JOINT = 5,
} RwsdNormalization;

typedef enum {
  RWSD_REGIME_NONLINEAR_ABOVE = 0,
  RWSD_REGIME_NONLINEAR_ON_LINE = 1,
  RWSD_REGIME_NONLINEAR_BELOW = 2,
  RWSD_REGIME_LINEAR_SUBCRITICAL = 3,
  RWSD_REGIME_LINEAR_SUPERCRITICAL = 4,
  RWSD_REGIME_LINEAR_CRITICAL = 5,
  RWSD_REGIME_LINEAR_MIXED = 6,
} RwsdRegime;

/**
 * Result codes.
 */
typedef enum {
  RWSD_STATUS_OK = 0,
  RWSD_STATUS_NULL_POINTER = 1,
  RWSD_STATUS_INVALID_ARGUMENT = 2,
  RWSD_STATUS_INVALID_SPEC = 3,
  RWSD_STATUS_REGIME_NOT_COVERED = 4,
  RWSD_STATUS_UNSUPPORTED_REGIME = 5,
  /**
   * Singular, ill-conditioned or otherwise unusable linear algebra.
   */
  RWSD_STATUS_NUMERICAL = 6,
  /**
   * Overflow or divergence during simulation.
   */
  RWSD_STATUS_SIMULATION = 7,
  RWSD_STATUS_BUFFER_TOO_SMALL = 8,
  /**
   * The request does not apply to the predicted law (e.g. asking for a
   * covariance of a non-Gaussian limit).
   */
  RWSD_STATUS_WRONG_LAW = 9,
  RWSD_STATUS_PANIC = 10,
} RwsdStatus;

/**
 * Opaque normalized ensemble (`replicas x dim`).
 */
typedef struct RwsdEnsemble RwsdEnsemble;

/**
 * Opaque walk specification.
 */
typedef struct RwsdSpec RwsdSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *rwsd_version(void);

/**
 * Copies the calling thread's last error message into `buf` (NUL
 * terminated, truncated to `len`). Returns the full message length
 * including the terminator, or 0 when there is no message.
 */
size_t rwsd_last_error_message(char *buf, size_t len);

/**
 * Nonlinear walk with drift `n^-beta |s|^(alpha-1) rho s`.
 */
RwsdStatus rwsd_spec_new_nonlinear(size_t dim,
                                   double alpha,
                                   double beta,
                                   double rho,
                                   const double *sigma,
                                   RwsdSpec **out);

/**
 * Linear walk with drift `A s / n`.
 */
RwsdStatus rwsd_spec_new_linear(size_t dim,
                                const double *drift,
                                const double *sigma,
                                RwsdSpec **out);

/**
 * Selects the innovation law; `family` is an `RwsdNoiseFamily` and `mode`
 * an `RwsdNoiseMode` value.
 */
RwsdStatus rwsd_spec_set_noise(RwsdSpec *spec, int32_t family, int32_t mode);

size_t rwsd_spec_dim(const RwsdSpec *spec);

void rwsd_spec_free(RwsdSpec *spec);

/**
 * Writes the regime as an `RwsdRegime` value.
 */
RwsdStatus rwsd_classify(const RwsdSpec *spec, int32_t *regime);

/**
 * Covariance (`dim * dim`, row-major) of a Gaussian limit law.
 */
RwsdStatus rwsd_predict_covariance(const RwsdSpec *spec, double *out, size_t len);

/**
 * Localization radius of a walk below the critical line.
 */
RwsdStatus rwsd_predict_radius(const RwsdSpec *spec, double *radius);

/**
 * Solves `(I/2 - A) X + X (I/2 - A)^T = Sigma`.
 */
RwsdStatus rwsd_lyapunov_solve(size_t dim, const double *a, const double *sigma, double *out);

/**
 * Matrix Gamma function of `B` (eigenvalues with positive real parts).
 */
RwsdStatus rwsd_matrix_gamma(size_t dim, const double *b, double *out);

/**
 * Simulates `replicas` walks to `horizon` and normalizes their terminal
 * values. `normalization` is an `RwsdNormalization` value; `workers = 0`
 * uses the available parallelism. Results do not depend on `workers`.
 */
RwsdStatus rwsd_ensemble_run(const RwsdSpec *spec,
                             uint64_t horizon,
                             size_t replicas,
                             int32_t normalization,
                             uint64_t seed,
                             size_t workers,
                             RwsdEnsemble **out);

size_t rwsd_ensemble_rows(const RwsdEnsemble *ensemble);

size_t rwsd_ensemble_cols(const RwsdEnsemble *ensemble);

/**
 * Copies the `rows * cols` normalized values, row-major, into `out`.
 */
RwsdStatus rwsd_ensemble_values(const RwsdEnsemble *ensemble, double *out, size_t len);

void rwsd_ensemble_free(RwsdEnsemble *ensemble);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RWSD_H */
