#ifndef FIBERED_DYN_H
#define FIBERED_DYN_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

// Rows written by [`fd_decomposition_check`].
#define FD_DECOMP_ROWS 6

// Status codes; the numbering follows the command-line exit codes where they overlap.
typedef enum FdStatus {
  FD_STATUS_OK = 0,
  // A required pointer was null.
  FD_STATUS_NULL_POINTER = 1,
  // Bad input: unknown name, malformed JSON, invalid argument.
  FD_STATUS_INVALID_INPUT = 2,
  // Validation failure, non-convergence, degenerate fiber.
  FD_STATUS_NUMERICAL = 3,
  // A Rust panic was caught.
  FD_STATUS_PANIC = 4,
} FdStatus;

// A validated fibered map.
typedef struct FdMap FdMap;

typedef struct FdGreen {
  double value;
  double truncation_bound;
  size_t iterations;
} FdGreen;

typedef struct FdEstimate {
  double value;
  double se;
  size_t n;
} FdEstimate;

typedef struct FdExponents {
  struct FdEstimate lambda_theta;
  struct FdEstimate lambda_sigma;
  struct FdEstimate lambda_f;
} FdExponents;

typedef struct FdBjReport {
  struct FdEstimate direct;
  struct FdEstimate formula;
  double discrepancy;
  double discrepancy_se;
} FdBjReport;

typedef struct FdDecompRow {
  uint32_t exps[3];
  struct FdEstimate direct;
  struct FdEstimate nested;
  double combined_se;
  bool passed;
} FdDecompRow;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message of the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *fd_last_error(void);

// Library version, static.
const char *fd_version(void);

// Built-in map by name (`torus`, `chebyshev`, `basilica_base`, `cheb_coupled`, `desboves`).
//
// # Safety
// `name` must be a NUL-terminated string; `out` must be writable.
enum FdStatus fd_map_builtin(const char *name, struct FdMap **out);

// Map from its JSON form (`{"d", "theta0", "theta1", "r"}` or `{"d", "affine"}`).
//
// # Safety
// `json` must be a NUL-terminated string; `out` must be writable.
enum FdStatus fd_map_from_json(const char *json, struct FdMap **out);

// Release a handle; null is ignored.
//
// # Safety
// `map` must come from this library and not be used afterwards.
void fd_map_free(struct FdMap *map);

// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_map_degree(const struct FdMap *map, size_t *out);

// Relative Green function at the affine point `(t, z)`.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_relative_green(const struct FdMap *map,
                                double t_re,
                                double t_im,
                                double z_re,
                                double z_im,
                                double tol,
                                struct FdGreen *out);

// Green function of the base at `(t, 1)`.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_green_theta(const struct FdMap *map,
                             double t_re,
                             double t_im,
                             double tol,
                             struct FdGreen *out);

// Lyapunov exponents from `samples` points of `μ_f` and `μ_θ`.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_exponents(const struct FdMap *map,
                           size_t samples,
                           uint64_t seed,
                           struct FdExponents *out);

// Direct sectional exponent against the pairing formula.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_bj_check(const struct FdMap *map,
                          size_t samples,
                          uint64_t seed,
                          double tol,
                          struct FdBjReport *out);

// Periodic-fiber approximation of the sectional exponent at period `n`.
//
// # Safety
// `map` must be a live handle; `out` must be writable.
enum FdStatus fd_sigma_periodic(const struct FdMap *map, size_t n, double tol, double *out);

// Direct against nested integrals of the six P² test functions; writes
// [`FD_DECOMP_ROWS`] rows.
//
// # Safety
// `map` must be a live handle; `rows` must hold `FD_DECOMP_ROWS` entries.
enum FdStatus fd_decomposition_check(const struct FdMap *map,
                                     size_t direct_samples,
                                     size_t base_samples,
                                     size_t fiber_samples,
                                     uint64_t seed,
                                     struct FdDecompRow *rows);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FIBERED_DYN_H */
