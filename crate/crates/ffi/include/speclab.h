#ifndef SPECLAB_H
#define SPECLAB_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Status codes; 2, 3 and 4 match the command-line exit codes.
 */
typedef enum SpeclabStatus {
  SPECLAB_STATUS_OK = 0,
  /**
   * Null pointer, bad UTF-8 or a buffer that is too small.
   */
  SPECLAB_STATUS_INVALID_ARGUMENT = 1,
  SPECLAB_STATUS_VALIDATION = 2,
  SPECLAB_STATUS_CONTRACT = 3,
  SPECLAB_STATUS_RESOURCE = 4,
  SPECLAB_STATUS_PANIC = 5,
} SpeclabStatus;

/**
 * Parameter region of the extended Harper's model.
 */
typedef enum SpeclabRegion {
  SPECLAB_REGION_REGION_I = 1,
  SPECLAB_REGION_REGION_II = 2,
  SPECLAB_REGION_REGION_III = 3,
  SPECLAB_REGION_BOUNDARY = 0,
} SpeclabRegion;

/**
 * Continued-fraction expansion of a frequency.
 */
typedef struct SpeclabCf SpeclabCf;

/**
 * Extended Harper's model at a fixed frequency.
 */
typedef struct SpeclabModel SpeclabModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Library version, a static NUL-terminated string.
 */
const char *speclab_version(void);

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *speclab_last_error(void);

/**
 * Expands `alpha` (`golden`, `silver`, `p/q` or a decimal) to `depth`
 * partial quotients.
 *
 * # Safety
 * `alpha` must be a NUL-terminated string and `out` a valid pointer.
 */
enum SpeclabStatus speclab_cf_expand(const char *alpha, size_t depth, struct SpeclabCf **out_cf);

/**
 * Frequency whose quotients grow so that `q_{n+1} ≈ e^{β q_n}` after the
 * given prefix.
 *
 * # Safety
 * `prefix` must hold `prefix_len` values and `out_cf` be valid.
 */
enum SpeclabStatus speclab_cf_synthesize(double target_beta,
                                         const uint64_t *prefix,
                                         size_t prefix_len,
                                         size_t levels,
                                         struct SpeclabCf **out_cf);

/**
 * # Safety
 * `cf` must come from this library and not be used afterwards.
 */
void speclab_cf_free(struct SpeclabCf *cf);

/**
 * Number of partial quotients.
 *
 * # Safety
 * `cf` must be a live handle.
 */
enum SpeclabStatus speclab_cf_depth(const struct SpeclabCf *cf, size_t *out_depth);

/**
 * Frequency as a double.
 *
 * # Safety
 * `cf` must be a live handle.
 */
enum SpeclabStatus speclab_cf_alpha(const struct SpeclabCf *cf, double *out_alpha);

/**
 * Denominator `q_n` when it fits in 64 bits; `Resource` otherwise.
 *
 * # Safety
 * `cf` must be a live handle.
 */
enum SpeclabStatus speclab_cf_q(const struct SpeclabCf *cf, size_t n, uint64_t *out_q);

/**
 * `β(α)` over the last `window` levels; 0 picks the default window.
 *
 * # Safety
 * `cf` must be a live handle.
 */
enum SpeclabStatus speclab_cf_beta(const struct SpeclabCf *cf, size_t window, double *out_beta);

/**
 * # Safety
 * `out_region` must be valid.
 */
enum SpeclabStatus speclab_ehm_classify(double l1,
                                        double l2,
                                        double l3,
                                        enum SpeclabRegion *out_region);

/**
 * Closed-form Lyapunov exponent on region I.
 *
 * # Safety
 * `out_value` must be valid.
 */
enum SpeclabStatus speclab_ehm_lyapunov_closed_form(double l1,
                                                    double l2,
                                                    double l3,
                                                    double *out_value);

/**
 * Model with hopping `λ₁e^{−2πi(θ+α/2)} + λ₂ + λ₃e^{2πi(θ+α/2)}` and
 * potential `2cos2πθ`. The frequency is copied from `cf`.
 *
 * # Safety
 * `cf` must be a live handle and `out_model` valid.
 */
enum SpeclabStatus speclab_model_new_ehm(double l1,
                                         double l2,
                                         double l3,
                                         const struct SpeclabCf *cf,
                                         struct SpeclabModel **out_model);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards.
 */
void speclab_model_free(struct SpeclabModel *model);

/**
 * Lyapunov exponent of the normalized cocycle, averaged over `n_phases`
 * seeded phases.
 *
 * # Safety
 * `model` must be a live handle; outputs must be valid.
 */
enum SpeclabStatus speclab_model_lyapunov(const struct SpeclabModel *model,
                                          double energy,
                                          uint64_t n_iter,
                                          size_t n_phases,
                                          uint64_t seed,
                                          double *out_value,
                                          double *out_stderr);

/**
 * Fibered rotation number in `[0, 1/2]`.
 *
 * # Safety
 * `model` must be a live handle; `out_rho` valid.
 */
enum SpeclabStatus speclab_model_rotation_number(const struct SpeclabModel *model,
                                                 double energy,
                                                 uint64_t n_iter,
                                                 double theta0,
                                                 double *out_rho);

/**
 * Integrated density of states at `n_energies` energies, written to
 * `out_values`.
 *
 * # Safety
 * `energies` and `out_values` must hold `n_energies` doubles.
 */
enum SpeclabStatus speclab_model_ids(const struct SpeclabModel *model,
                                     const double *energies,
                                     size_t n_energies,
                                     size_t n_half,
                                     size_t n_phases,
                                     uint64_t seed,
                                     double *out_values);

/**
 * Eigenvalues of the truncation to `[−n_half, n_half]` at phase `theta`,
 * ascending. `capacity` must be at least `2·n_half + 1`; the count is
 * written to `out_len`.
 *
 * # Safety
 * `out_values` must hold `capacity` doubles.
 */
enum SpeclabStatus speclab_model_eigenvalues(const struct SpeclabModel *model,
                                             double theta,
                                             size_t n_half,
                                             double *out_values,
                                             size_t capacity,
                                             size_t *out_len);

/**
 * Winding number of `Σ_k (re_k + i·im_k) e^{2πi(kmin+k)θ}` for
 * `k = 0..n_coeffs`.
 *
 * # Safety
 * `re` and `im` must hold `n_coeffs` doubles.
 */
enum SpeclabStatus speclab_winding(const double *re,
                                   const double *im,
                                   size_t n_coeffs,
                                   int64_t kmin,
                                   int64_t *out_winding);

/**
 * Runs one experiment from a JSON run config (the same format as the
 * command-line `--config` file) and returns its exit code.
 *
 * # Safety
 * `config_json` must be a NUL-terminated string.
 */
int32_t speclab_run_json(const char *config_json);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SPECLAB_H */
