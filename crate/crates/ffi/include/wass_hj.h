#ifndef WASS_HJ_H
#define WASS_HJ_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum WhjStatus {
  WHJ_STATUS_OK = 0,
  WHJ_STATUS_NULL_POINTER = 1,
  WHJ_STATUS_INVALID_ARGUMENT = 2,
  WHJ_STATUS_INVALID_INPUT = 3,
  WHJ_STATUS_DIMENSION_MISMATCH = 4,
  WHJ_STATUS_NON_CONVERGENCE = 5,
  WHJ_STATUS_SOLVER_FAILURE = 6,
  WHJ_STATUS_UNSUPPORTED = 7,
  WHJ_STATUS_PARSE = 8,
  WHJ_STATUS_IO = 9,
  WHJ_STATUS_PANIC = 10,
} WhjStatus;

// Density sampled on a regular grid.
typedef struct WhjGrid WhjGrid;

// Discrete probability measure.
typedef struct WhjMeasure WhjMeasure;

// Message for the last failed call on this thread, or null.
//
// The pointer stays valid until the next call into this library from the
// same thread.
const char *whj_last_error(void);

// Library version as a static NUL-terminated string.
const char *whj_version(void);

// Builds a measure from `n` points of dimension `dim` (row-major) and
// their weights, which must sum to one.
//
// # Safety
// `points` must hold `n * dim` values, `weights` `n` values, and `out`
// must be writable.
enum WhjStatus whj_measure_new(size_t dim,
                               const double *points,
                               const double *weights,
                               size_t n,
                               struct WhjMeasure **out);

// Parses a measure in the plain-text `dim=<d> atoms=<n>` format.
//
// # Safety
// `text` must be a NUL-terminated string and `out` writable.
enum WhjStatus whj_measure_parse(const char *text, struct WhjMeasure **out);

// # Safety
// `mu` must come from this library and not be used afterwards; null is ignored.
void whj_measure_free(struct WhjMeasure *mu);

// Number of atoms, or 0 for a null handle.
//
// # Safety
// `mu` must be null or a live handle.
size_t whj_measure_len(const struct WhjMeasure *mu);

// Ambient dimension, or 0 for a null handle.
//
// # Safety
// `mu` must be null or a live handle.
size_t whj_measure_dim(const struct WhjMeasure *mu);

// # Safety
// `mu` must be a live handle and `out` writable.
enum WhjStatus whj_measure_second_moment(const struct WhjMeasure *mu, double *out);

// Quadratic Wasserstein distance. `reg <= 0` selects the exact solver,
// a positive `reg` entropic regularisation of that strength.
//
// # Safety
// `mu` and `nu` must be live handles and `out` writable.
enum WhjStatus whj_w2(const struct WhjMeasure *mu,
                      const struct WhjMeasure *nu,
                      double reg,
                      double *out);

// Isotropic Gaussian `N(mean, σ²I)` on `n` nodes per axis covering ±6σ.
//
// # Safety
// `mean` must hold `dim` values and `out` be writable.
enum WhjStatus whj_grid_gaussian(const double *mean,
                                 size_t dim,
                                 double sigma,
                                 size_t n,
                                 struct WhjGrid **out);

// # Safety
// `g` must come from this library and not be used afterwards; null is ignored.
void whj_grid_free(struct WhjGrid *g);

// `∫ ρ log ρ`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum WhjStatus whj_grid_entropy(const struct WhjGrid *g, double *out);

// `∫ |∇ρ|²/ρ`.
//
// # Safety
// `g` must be a live handle and `out` writable.
enum WhjStatus whj_grid_fisher(const struct WhjGrid *g, double *out);

// Vanishing-viscosity experiment on `H = |p|`, `g = |x|` at half the
// horizon: fitted exponent and the constant `C` with `err ≤ C√ε`.
//
// `out_slope` receives NaN when the errors sit below the discretisation
// floor and no exponent can be fitted.
//
// # Safety
// `eps` must hold `n_eps` values; the outputs must be writable.
enum WhjStatus whj_vv_rate_abs(size_t grid_n,
                               const double *eps,
                               size_t n_eps,
                               double *out_slope,
                               double *out_constant);

#endif  /* WASS_HJ_H */
