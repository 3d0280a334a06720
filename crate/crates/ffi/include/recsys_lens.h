#ifndef RECSYS_LENS_H
#define RECSYS_LENS_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum RlStatus {
  RL_STATUS_OK = 0,
  RL_STATUS_NULL_ARGUMENT = 1,
  RL_STATUS_INVALID_UTF8 = 2,
  RL_STATUS_IO = 3,
  RL_STATUS_PARSE = 4,
  RL_STATUS_VALIDATE = 5,
  RL_STATUS_COMPUTE = 6,
  RL_STATUS_BUFFER_TOO_SMALL = 7,
  RL_STATUS_PANIC = 8,
} RlStatus;

typedef enum RlInputFormat {
  RL_INPUT_FORMAT_MOVIELENS_DAT = 0,
  RL_INPUT_FORMAT_MOVIELENS_TAB = 1,
  RL_INPUT_FORMAT_COMODA_CSV = 2,
} RlInputFormat;

typedef enum RlAlgorithm {
  RL_ALGORITHM_MF = 0,
  RL_ALGORITHM_ZEROMAT = 1,
  RL_ALGORITHM_DOTMAT = 2,
  RL_ALGORITHM_DOTMAT_HYBRID = 3,
} RlAlgorithm;

typedef enum RlSide {
  RL_SIDE_USER = 0,
  RL_SIDE_ITEM = 1,
} RlSide;

/**
 * Opaque rating dataset.
 */
typedef struct RlDataset RlDataset;

/**
 * Opaque trained factor model.
 */
typedef struct RlModel RlModel;

/**
 * Opaque sparse similarity matrix.
 */
typedef struct RlSimilarity RlSimilarity;

/**
 * SGD settings for [`rl_model_train`].
 */
typedef struct RlTrainConfig {
  size_t k;
  double gamma;
  double lambda;
  uint64_t iterations;
  /**
   * Dotmat steps before the MF phase (hybrid only).
   */
  uint64_t iters_pre;
  uint64_t seed;
} RlTrainConfig;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the most recent failed call on this thread, or null. The
 * pointer stays valid until the next call into this library on the same
 * thread.
 */
const char *rl_last_error_message(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *rl_version(void);

struct RlTrainConfig rl_train_config_default(void);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RlStatus rl_dataset_load(const char *path,
                              enum RlInputFormat format,
                              double scale_min,
                              double scale_max,
                              struct RlDataset **out);

/**
 * Builds a dataset from parallel arrays of dense indices and values.
 *
 * # Safety
 * Each array must hold `len` elements; `out` must be writable.
 */
enum RlStatus rl_dataset_from_triplets(const size_t *users,
                                       const size_t *items,
                                       const double *values,
                                       size_t len,
                                       size_t num_users,
                                       size_t num_items,
                                       double scale_min,
                                       double scale_max,
                                       struct RlDataset **out);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t rl_dataset_num_users(const struct RlDataset *dataset);

/**
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t rl_dataset_num_items(const struct RlDataset *dataset);

/**
 * Number of ratings.
 *
 * # Safety
 * `dataset` must be null or a live handle.
 */
size_t rl_dataset_len(const struct RlDataset *dataset);

/**
 * # Safety
 * `dataset` must be a live handle; `train` and `test` must be writable.
 */
enum RlStatus rl_dataset_split(const struct RlDataset *dataset,
                               double ratio,
                               uint64_t seed,
                               struct RlDataset **train,
                               struct RlDataset **test);

/**
 * # Safety
 * `dataset` must be null or a handle not yet freed.
 */
void rl_dataset_free(struct RlDataset *dataset);

/**
 * Trains a factor model. ZeroMat reads only the dataset's dimensions and
 * rating scale, so `train` may hold no ratings.
 *
 * # Safety
 * `train` and `config` must be valid; `out` must be writable.
 */
enum RlStatus rl_model_train(enum RlAlgorithm algorithm,
                             const struct RlDataset *train,
                             const struct RlTrainConfig *config,
                             struct RlModel **out);

/**
 * # Safety
 * `model` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_model_predict(const struct RlModel *model, size_t user, size_t item, double *out);

/**
 * Mean absolute error of the model on `test`.
 *
 * # Safety
 * Handles must be live; `out` must be writable.
 */
enum RlStatus rl_model_mae(const struct RlModel *model, const struct RlDataset *test, double *out);

/**
 * MAE of seeded uniform random placement on `test`.
 *
 * # Safety
 * `test` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_random_placement_mae(uint64_t seed, const struct RlDataset *test, double *out);

/**
 * # Safety
 * `model` must be a live handle; `path` a NUL-terminated string.
 */
enum RlStatus rl_model_save(const struct RlModel *model, const char *path);

/**
 * # Safety
 * `path` must be a NUL-terminated string; `out` must be writable.
 */
enum RlStatus rl_model_load(const char *path, struct RlModel **out);

/**
 * # Safety
 * `model` must be null or a handle not yet freed.
 */
void rl_model_free(struct RlModel *model);

/**
 * # Safety
 * `dataset` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_similarity_compute(const struct RlDataset *dataset,
                                    enum RlSide side,
                                    size_t min_support,
                                    struct RlSimilarity **out);

/**
 * Number of entities (matrix order).
 *
 * # Safety
 * `sim` must be null or a live handle.
 */
size_t rl_similarity_size(const struct RlSimilarity *sim);

/**
 * # Safety
 * `sim` must be a live handle; `out` must be writable.
 */
enum RlStatus rl_similarity_get(const struct RlSimilarity *sim, size_t a, size_t b, double *out);

/**
 * Writes each entity's similarity radius into `out`, which must hold
 * `rl_similarity_size(sim)` elements.
 *
 * # Safety
 * `sim` must be a live handle; `out` must point to `len` writable elements.
 */
enum RlStatus rl_similarity_radii(const struct RlSimilarity *sim, size_t *out, size_t len);

/**
 * Determinant of the similarity submatrix indexed by `selection`.
 *
 * # Safety
 * `sim` must be a live handle; `selection` must hold `len` elements.
 */
enum RlStatus rl_dpp_diversity(const struct RlSimilarity *sim,
                               const size_t *selection,
                               size_t len,
                               double *out);

/**
 * # Safety
 * `sim` must be null or a handle not yet freed.
 */
void rl_similarity_free(struct RlSimilarity *sim);

/**
 * Delay embedding of `series` into row-major points of width `dim`.
 *
 * `*points` receives the number of points. When `out` is null only the
 * count is reported; otherwise `out_len` must be at least `points * dim`.
 *
 * # Safety
 * `series` must hold `len` elements and `out` (when non-null) `out_len`.
 */
enum RlStatus rl_takens_embed(const double *series,
                              size_t len,
                              size_t dim,
                              size_t tau,
                              double *out,
                              size_t out_len,
                              size_t *points);

/**
 * Fraction of set cells in the recurrence plot of `series` at `epsilon`.
 *
 * # Safety
 * `series` must hold `len` elements; `out` must be writable.
 */
enum RlStatus rl_recurrence_rate(const double *series, size_t len, double epsilon, double *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* RECSYS_LENS_H */
