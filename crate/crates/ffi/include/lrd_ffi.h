#ifndef LRD_FFI_H
#define LRD_FFI_H

#pragma once

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Which error variance [`lrd_predictor_error_variance`] returns.
typedef enum LrdErrorMode {
  LRD_ERROR_MODE_INFINITE_PAST = 0,
  LRD_ERROR_MODE_FINITE_PAST = 1,
} LrdErrorMode;

typedef enum LrdStatus {
  LRD_STATUS_OK = 0,
  LRD_STATUS_NULL_POINTER = 1,
  LRD_STATUS_INVALID_ARGUMENT = 2,
  LRD_STATUS_INVALID_MODEL = 3,
  LRD_STATUS_QUADRATURE = 4,
  LRD_STATUS_INVERSION_UNSTABLE = 5,
  LRD_STATUS_GRID_COVERAGE = 6,
  LRD_STATUS_SERIES_NOT_CONVERGED = 7,
  LRD_STATUS_UNSUPPORTED_DEPTH = 8,
  LRD_STATUS_INSTABILITY = 9,
  LRD_STATUS_FACTORIZATION = 10,
  LRD_STATUS_IO = 11,
  LRD_STATUS_PARSE = 12,
  LRD_STATUS_PANIC = 13,
} LrdStatus;

// A model together with its AR(∞) coefficient.
typedef struct LrdModelHandle LrdModelHandle;

// Finite-past predictor for one window.
typedef struct LrdPredictorHandle LrdPredictorHandle;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread, or NULL. Valid until the
// next call on the same thread.
const char *lrd_last_error_message(void);

// Fractional Brownian motion with Hurst index `h` in (1/2, 1).
//
// # Safety
// `out` must be a valid pointer.
enum LrdStatus lrd_model_fbm(double h, struct LrdModelHandle **out);

// Two-index model; `scale_k <= 0` selects the default scale.
//
// # Safety
// `out` must be a valid pointer.
enum LrdStatus lrd_model_two_index(double h,
                                   double h0,
                                   double scale_k,
                                   struct LrdModelHandle **out);

// Model from a JSON document such as `{"kind": "fbm", "H": 0.75}`.
//
// # Safety
// `json` must be a NUL-terminated string and `out` a valid pointer.
enum LrdStatus lrd_model_from_json(const char *json, struct LrdModelHandle **out);

// Override the relative quadrature tolerance used by later calls.
//
// # Safety
// `model` must come from one of the constructors.
enum LrdStatus lrd_model_set_tolerance(struct LrdModelHandle *model, double rel_tol);

// # Safety
// `model` must come from one of the constructors and not be used afterwards.
void lrd_model_free(struct LrdModelHandle *model);

// MA(∞) coefficient `c(t)`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_model_c(const struct LrdModelHandle *model, double t, double *out);

// `g(t) = ∫₀^t c`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_model_g(const struct LrdModelHandle *model, double t, double *out);

// Variogram `E|X(t) − X(0)|²`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_model_variogram(const struct LrdModelHandle *model, double t, double *out);

// `α(t) = ∫_t^∞ a`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_ar_alpha(const struct LrdModelHandle *model, double t, double *out);

// AR(∞) coefficient `a(t)`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_ar_a(const struct LrdModelHandle *model, double t, double *out);

// `β(t) = ∫₀^∞ c(s) a(t+s) ds`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_ar_beta(const struct LrdModelHandle *model, double t, double *out);

// Infinite-past predictor kernel `b(t, s)`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_kernel_b(const struct LrdModelHandle *model, double t, double s, double *out);

// Build the finite-past predictor for `[−t0, t1]` and target `T`.
//
// # Safety
// `model` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_predictor_new(const struct LrdModelHandle *model,
                                 double t0,
                                 double t1,
                                 double big_t,
                                 struct LrdPredictorHandle **out);

// # Safety
// `pred` must come from [`lrd_predictor_new`] and not be used afterwards.
void lrd_predictor_free(struct LrdPredictorHandle *pred);

// Coefficient of `dX(s)` in the finite-past predictor, `−t0 < s < t1`.
//
// # Safety
// `pred` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_predictor_coeff(const struct LrdPredictorHandle *pred, double s, double *out);

// Mean-square prediction error.
//
// # Safety
// `pred` must be a live handle and `out` a valid pointer.
enum LrdStatus lrd_predictor_error_variance(const struct LrdPredictorHandle *pred,
                                            enum LrdErrorMode mode,
                                            double *out);

// Both sides of the Baxter inequality for the predictor's window.
//
// # Safety
// `pred` must be a live handle; `lhs` and `rhs` valid pointers.
enum LrdStatus lrd_predictor_baxter(const struct LrdPredictorHandle *pred,
                                    double *lhs,
                                    double *rhs);

// Limit of the Baxter ratio for `0 < d < 1/2`.
//
// # Safety
// `out` must be a valid pointer.
enum LrdStatus lrd_limit_constant(double d, double *out);

// Exact Gaussian sample of `X` on `grid` (increasing, containing 0).
// `values` receives `len` doubles.
//
// # Safety
// `grid` and `values` must point to `len` doubles.
enum LrdStatus lrd_simulate(const struct LrdModelHandle *model,
                            const double *grid,
                            size_t len,
                            uint64_t seed,
                            uint64_t replicate,
                            double *values);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LRD_FFI_H */
