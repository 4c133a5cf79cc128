#ifndef FREETRANS_H
#define FREETRANS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum FtStatus {
  FT_STATUS_OK = 0,
  FT_STATUS_NULL_ARGUMENT = 1,
  FT_STATUS_CONFIG = 3,
  FT_STATUS_IO = 4,
  FT_STATUS_NON_CONVERGENCE = 5,
  FT_STATUS_NUMERICAL = 6,
  FT_STATUS_VERIFICATION_FAILED = 7,
  FT_STATUS_SHAPE_MISMATCH = 8,
  FT_STATUS_BUFFER_TOO_SMALL = 9,
  FT_STATUS_PANIC = 10,
} FtStatus;

/**
 * A validated run configuration.
 */
typedef struct FtConfig FtConfig;

/**
 * A grid solution together with its domain.
 */
typedef struct FtSolution FtSolution;

typedef struct FtVerifyResult {
  double c0;
  size_t sub_evaluations;
  size_t sub_failures;
  double sub_worst_margin;
  size_t super_evaluations;
  size_t super_failures;
  double super_worst_margin;
  size_t gradient_nodes;
  size_t gradient_violations;
  /**
   * 1 when every check passed.
   */
  int32_t passed;
} FtVerifyResult;

typedef struct FtHolderResult {
  double slope;
  /**
   * `slope - 1`; NaN unless `reliable` is 1.
   */
  double alpha_hat;
  double residual;
  int32_t smooth;
  int32_t reliable;
} FtHolderResult;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version as a static NUL-terminated string.
 */
const char *ft_version(void);

/**
 * Copies the calling thread's last error message (NUL-terminated, possibly
 * truncated) into `buf` and returns the full message length in bytes.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ft_last_error_message(char *buf, size_t len);

/**
 * Parses INI text into a configuration handle.
 *
 * # Safety
 * `text` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_config_from_str(const char *text, struct FtConfig **out);

/**
 * Reads a configuration file.
 *
 * # Safety
 * `path` must be a NUL-terminated string and `out` a valid pointer.
 */
enum FtStatus ft_config_from_file(const char *path, struct FtConfig **out);

/**
 * # Safety
 * `cfg` must be null or a handle from `ft_config_from_*` not yet freed.
 */
void ft_config_free(struct FtConfig *cfg);

/**
 * # Safety
 * `cfg` must be a live configuration handle.
 */
enum FtStatus ft_config_set_seed(struct FtConfig *cfg, uint64_t seed);

/**
 * Runs the ε-continuation for the configured problem.
 *
 * # Safety
 * `cfg` must be a live configuration handle and `out` a valid pointer.
 */
enum FtStatus ft_solve(const struct FtConfig *cfg, struct FtSolution **out);

/**
 * Builds a solution handle from nodal values on the configured grid.
 *
 * # Safety
 * `values` must point to `len` readable doubles.
 */
enum FtStatus ft_solution_from_values(const struct FtConfig *cfg,
                                      const double *values,
                                      size_t len,
                                      struct FtSolution **out);

/**
 * # Safety
 * `sol` must be null or a live solution handle.
 */
void ft_solution_free(struct FtSolution *sol);

/**
 * Number of grid nodes, 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
size_t ft_solution_len(const struct FtSolution *sol);

/**
 * Spatial dimension, 0 for a null handle.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
size_t ft_solution_dim(const struct FtSolution *sol);

/**
 * Final regularization level, NaN when the values were supplied directly.
 *
 * # Safety
 * `sol` must be null or a live solution handle.
 */
double ft_solution_epsilon(const struct FtSolution *sol);

/**
 * Copies the nodal values; `len` must be at least `ft_solution_len`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum FtStatus ft_solution_values(const struct FtSolution *sol, double *out, size_t len);

/**
 * Copies node coordinates, `dim` per node in node order; `len` must be at
 * least `dim * ft_solution_len`.
 *
 * # Safety
 * `out` must point to `len` writable doubles.
 */
enum FtStatus ft_solution_coords(const struct FtSolution *sol, double *out, size_t len);

/**
 * Both touching tests and the large-gradient check with the configured
 * settings. Returns `FT_STATUS_VERIFICATION_FAILED` (with `out` filled)
 * when a check fails.
 *
 * # Safety
 * Handles must be live and `out` valid.
 */
enum FtStatus ft_verify(const struct FtConfig *cfg,
                        const struct FtSolution *sol,
                        struct FtVerifyResult *out);

/**
 * Hölder exponent of the gradient at `(x1, x2)` from affine errors at radii
 * `r_max·ρ^k`, `k = 0..=n_scales`.
 *
 * # Safety
 * `sol` must be live and `out` valid.
 */
enum FtStatus ft_holder_exponent(const struct FtSolution *sol,
                                 double x1,
                                 double x2,
                                 double r_max,
                                 double rho,
                                 size_t n_scales,
                                 struct FtHolderResult *out);

/**
 * `min(α₀, 1/(1+θ₂))`; `supremum` is set to 1 when the bound is not attained.
 *
 * # Safety
 * `value` and `supremum` must be valid pointers.
 */
enum FtStatus ft_predicted_exponent(double theta2, double alpha0, double *value, int32_t *supremum);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* FREETRANS_H */
