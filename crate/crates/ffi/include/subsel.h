#ifndef SUBSEL_H
#define SUBSEL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stddef.h>
#include <stdint.h>

typedef enum SubselStatus {
  SUBSEL_STATUS_OK = 0,
  SUBSEL_STATUS_NULL_POINTER = 1,
  SUBSEL_STATUS_INVALID_ARGUMENT = 2,
  SUBSEL_STATUS_IO = 3,
  SUBSEL_STATUS_FORMAT = 4,
  SUBSEL_STATUS_TRUNCATED = 5,
  SUBSEL_STATUS_PARSE = 6,
  SUBSEL_STATUS_VALIDATION = 7,
  SUBSEL_STATUS_CAPACITY = 8,
  SUBSEL_STATUS_UNSUPPORTED = 9,
  SUBSEL_STATUS_INTERNAL = 10,
} SubselStatus;

typedef enum SubselObjective {
  SUBSEL_OBJECTIVE_FACILITY_LOCATION = 0,
  SUBSEL_OBJECTIVE_DISPARITY_MIN = 1,
} SubselObjective;

typedef enum SubselUncertainty {
  SUBSEL_UNCERTAINTY_LEAST_CONFIDENCE = 0,
  SUBSEL_UNCERTAINTY_MARGIN = 1,
  SUBSEL_UNCERTAINTY_ENTROPY = 2,
} SubselUncertainty;

/**
 * Opaque feature matrix.
 */
typedef struct SubselFeatures SubselFeatures;

/**
 * Opaque selection result.
 */
typedef struct SubselSelection SubselSelection;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failure on this thread, or NULL. The pointer
 * stays valid until the next failing call on the same thread.
 */
const char *subsel_last_error(void);

/**
 * Loads a binary (or `.csv`) feature file.
 *
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum SubselStatus subsel_features_load(const char *path, struct SubselFeatures **out);

/**
 * Copies an `n × d` row-major buffer into a new feature matrix.
 *
 * # Safety
 * `data` must point to `n * d` readable floats; `out` must be writable.
 */
enum SubselStatus subsel_features_from_data(const float *data,
                                            uintptr_t n,
                                            uintptr_t d,
                                            struct SubselFeatures **out);

/**
 * # Safety
 * `features` must be a live handle; `path` a NUL-terminated string.
 */
enum SubselStatus subsel_features_save(const struct SubselFeatures *features, const char *path);

/**
 * # Safety
 * `features` must be a live handle or NULL.
 */
uintptr_t subsel_features_rows(const struct SubselFeatures *features);

/**
 * # Safety
 * `features` must be a live handle or NULL.
 */
uintptr_t subsel_features_cols(const struct SubselFeatures *features);

/**
 * # Safety
 * `features` must come from this library and not be freed twice. NULL is ignored.
 */
void subsel_features_free(struct SubselFeatures *features);

/**
 * Selects up to `budget` rows. Facility-Location uses the shifted-cosine
 * kernel (sparsified to `kappa` neighbours per row when `kappa > 0`) and lazy
 * greedy; Disparity-Min uses Euclidean distance and farthest-point greedy,
 * and requires `kappa == 0`.
 *
 * # Safety
 * `features` must be a live handle; `out` must be writable.
 */
enum SubselStatus subsel_select(const struct SubselFeatures *features,
                                enum SubselObjective objective,
                                uintptr_t budget,
                                uintptr_t kappa,
                                struct SubselSelection **out);

/**
 * # Safety
 * `selection` must be a live handle or NULL.
 */
uintptr_t subsel_selection_len(const struct SubselSelection *selection);

/**
 * Selected row indices in selection order; `subsel_selection_len` entries.
 * Owned by the handle.
 *
 * # Safety
 * `selection` must be a live handle or NULL.
 */
const uintptr_t *subsel_selection_indices(const struct SubselSelection *selection);

/**
 * Objective value of the selection (+inf for a Disparity-Min singleton).
 *
 * # Safety
 * `selection` must be a live handle or NULL.
 */
double subsel_selection_value(const struct SubselSelection *selection);

/**
 * # Safety
 * `selection` must come from this library and not be freed twice. NULL is ignored.
 */
void subsel_selection_free(struct SubselSelection *selection);

/**
 * Uncertainty of a class-probability vector.
 *
 * # Safety
 * `probs` must point to `len` readable doubles; `out` must be writable.
 */
enum SubselStatus subsel_uncertainty(const double *probs,
                                     uintptr_t len,
                                     enum SubselUncertainty method,
                                     double *out);

/**
 * Keeps the `ceil(beta_percent/100 · len)` highest scores plus exact ties
 * with the last kept one. Writes positions into `out_positions` (capacity
 * `len`) by descending score and the count into `out_len`.
 *
 * # Safety
 * `scores` must point to `len` readable doubles, `out_positions` to `len`
 * writable entries, and `out_len` must be writable.
 */
enum SubselStatus subsel_filter_uncertain(const double *scores,
                                          uintptr_t len,
                                          double beta_percent,
                                          uintptr_t *out_positions,
                                          uintptr_t *out_len);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SUBSEL_H */
