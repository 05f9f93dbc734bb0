#ifndef LINKLOSS_H
#define LINKLOSS_H

/* Generated by cbindgen from the linkloss-ffi crate; do not edit by hand. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Number of scalar features one profile yields.
 */
#define LL_FEATURE_COUNT 8

/**
 * Outcome of a fallible call.
 */
typedef enum LlStatus {
  /**
   * The call succeeded.
   */
  LL_STATUS_OK = 0,
  /**
   * A pointer was null or an argument value was unusable.
   */
  LL_STATUS_INVALID_ARGUMENT = 1,
  /**
   * The profile violates a structural invariant.
   */
  LL_STATUS_INVALID_PROFILE = 2,
  /**
   * A numeric argument sits outside its mathematical domain.
   */
  LL_STATUS_DOMAIN = 3,
  /**
   * Input bytes could not be decoded.
   */
  LL_STATUS_PARSE = 4,
  /**
   * The operating system reported an I/O failure.
   */
  LL_STATUS_IO = 5,
  /**
   * An unexpected internal failure; report this as a bug.
   */
  LL_STATUS_INTERNAL = 6,
} LlStatus;

/**
 * A trained model ready for prediction.
 */
typedef struct LlModel LlModel;

/**
 * An immutable link path profile.
 */
typedef struct LlProfile LlProfile;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Returns the diagnostic for the most recent failure on this thread, as a
 * NUL-terminated string. The pointer stays valid until the next failing
 * call on the same thread; never free it.
 */
const char *ll_last_error(void);

/**
 * Returns the library version as a static NUL-terminated string.
 */
const char *ll_version(void);

/**
 * Number of trainable parameters in the production architecture for the
 * given input width; zero if `n_features` is zero.
 */
size_t ll_param_count(size_t n_features);

/**
 * Free-space path loss in dB for a frequency in MHz and a distance in
 * metres, written to `out`.
 */
enum LlStatus ll_fspl(double frequency_mhz, double distance_m, double *out);

/**
 * Effective-curvature bulge in metres at along-path position `x_m` on a
 * path of length `d_m` over an Earth of radius `radius_m`, written to
 * `out`.
 */
enum LlStatus ll_curvature_drop(double x_m, double d_m, double radius_m, double *out);

/**
 * Builds a validated path profile from parallel surface and terrain
 * arrays of `len` samples each and writes the new handle to `out`.
 * Heights are metres above sea level, sample `0` at the transmitter.
 * The arrays are copied; the caller keeps ownership of its buffers and
 * must release the handle with `ll_profile_free`.
 */
enum LlStatus ll_profile_create(double spacing_m,
                                const double *dsm_m,
                                const double *dtm_m,
                                size_t len,
                                double tx_height_agl_m,
                                double rx_height_agl_m,
                                double frequency_mhz,
                                struct LlProfile **out);

/**
 * Releases a profile handle. Passing null is a no-op.
 */
void ll_profile_free(struct LlProfile *profile);

/**
 * Extracts the eight obstruction features of a profile under an
 * effective Earth radius of `radius_m` metres, writing them in feature
 * order to `out_features`, which must hold `LL_FEATURE_COUNT` doubles.
 */
enum LlStatus ll_extract_features(const struct LlProfile *profile,
                                  double radius_m,
                                  double *out_features);

/**
 * Loads a model from a JSON file at the NUL-terminated `path` and writes
 * the new handle to `out`. Release it with `ll_model_free`.
 */
enum LlStatus ll_model_load_json(const char *path, struct LlModel **out);

/**
 * Releases a model handle. Passing null is a no-op.
 */
void ll_model_free(struct LlModel *model);

/**
 * Number of input features the model expects; zero if `model` is null.
 */
size_t ll_model_input_dim(const struct LlModel *model);

/**
 * Predicts path loss in dB for `n_rows` feature rows stored row-major in
 * `features` (`n_rows * n_features` doubles, raw unnormalized values;
 * the model applies its stored normalization). `n_features` must equal
 * the model's input width. Writes `n_rows` predictions to `out`.
 */
enum LlStatus ll_model_predict(const struct LlModel *model,
                               const double *features,
                               size_t n_rows,
                               size_t n_features,
                               double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LINKLOSS_H */
