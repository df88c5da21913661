#ifndef BNPIRT_H
#define BNPIRT_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum BnpirtAbilityModel {
  BNPIRT_ABILITY_MODEL_PARAMETRIC = 0,
  BNPIRT_ABILITY_MODEL_SEMIPARAMETRIC = 1,
} BnpirtAbilityModel;

typedef enum BnpirtAlgorithm {
  BNPIRT_ALGORITHM_MH_CONJUGATE = 0,
  BNPIRT_ALGORITHM_CENTERED = 1,
} BnpirtAlgorithm;

typedef enum BnpirtConstraint {
  BNPIRT_CONSTRAINT_UNCONSTRAINED = 0,
  BNPIRT_CONSTRAINT_CONSTRAINED_ABILITIES = 1,
  BNPIRT_CONSTRAINT_CONSTRAINED_ITEMS = 2,
} BnpirtConstraint;

typedef enum BnpirtModel {
  BNPIRT_MODEL_ONE_PL = 1,
  BNPIRT_MODEL_TWO_PL = 2,
  BNPIRT_MODEL_THREE_PL = 3,
} BnpirtModel;

typedef enum BnpirtParameterization {
  BNPIRT_PARAMETERIZATION_IRT = 0,
  BNPIRT_PARAMETERIZATION_SLOPE_INTERCEPT = 1,
} BnpirtParameterization;

typedef enum BnpirtStatus {
  BNPIRT_STATUS_OK = 0,
  BNPIRT_STATUS_NULL_POINTER = 1,
  BNPIRT_STATUS_INVALID_ARGUMENT = 2,
  BNPIRT_STATUS_DIMENSION = 3,
  BNPIRT_STATUS_IO = 4,
  BNPIRT_STATUS_RUNTIME = 5,
  BNPIRT_STATUS_PANIC = 6,
} BnpirtStatus;

// Post-burn-in draws of one chain.
typedef struct BnpirtArchive BnpirtArchive;

// Binary response matrix.
typedef struct BnpirtResponses BnpirtResponses;

// One cell of the strategy matrix; each field holds a value of the enum of
// the same name.
typedef struct BnpirtStrategy {
  int32_t model;
  int32_t parameterization;
  int32_t constraint;
  int32_t algorithm;
  int32_t ability_model;
} BnpirtStrategy;

typedef struct BnpirtWaic {
  double waic;
  double lppd;
  double p_waic;
} BnpirtWaic;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Copies the last error message of this thread into `buf` (NUL-terminated,
// truncated to `len`). Returns the full message length, 0 if there is none.
size_t bnpirt_last_error(char *buf, size_t len);

// Library version as a static NUL-terminated string.
const char *bnpirt_version(void);

// Builds a response matrix from `n_individuals * n_items` row-major cells:
// 0, 1, or -1 for missing.
enum BnpirtStatus bnpirt_responses_new(size_t n_individuals,
                                       size_t n_items,
                                       const int8_t *cells,
                                       struct BnpirtResponses **out);

enum BnpirtStatus bnpirt_responses_read_csv(const char *path, struct BnpirtResponses **out);

void bnpirt_responses_free(struct BnpirtResponses *handle);

enum BnpirtStatus bnpirt_responses_shape(const struct BnpirtResponses *handle,
                                         size_t *n_individuals,
                                         size_t *n_items);

// Probability of a correct response; `guessing` is ignored unless the model is 3PL.
enum BnpirtStatus bnpirt_success_probability(int32_t model,
                                             double discrimination,
                                             double difficulty,
                                             double guessing,
                                             double ability,
                                             double *out);

// Runs one chain with default priors. `thin` of 0 means 1.
enum BnpirtStatus bnpirt_fit(const struct BnpirtResponses *responses,
                             struct BnpirtStrategy strategy,
                             size_t iterations,
                             size_t burnin,
                             size_t thin,
                             uint64_t seed,
                             struct BnpirtArchive **out);

enum BnpirtStatus bnpirt_archive_read(const char *dir, struct BnpirtArchive **out);

enum BnpirtStatus bnpirt_archive_write(const struct BnpirtArchive *archive, const char *dir);

void bnpirt_archive_free(struct BnpirtArchive *handle);

enum BnpirtStatus bnpirt_archive_shape(const struct BnpirtArchive *archive,
                                       size_t *n_draws,
                                       size_t *n_columns);

// Copies the draws of column `name` into `buf` (capacity `len`). `written`
// receives the number of draws; the call fails if `len` is too small.
enum BnpirtStatus bnpirt_archive_column(const struct BnpirtArchive *archive,
                                        const char *name,
                                        double *buf,
                                        size_t len,
                                        size_t *written);

// New archive mapped to the identified base parameterization.
enum BnpirtStatus bnpirt_archive_postprocess(const struct BnpirtArchive *archive,
                                             struct BnpirtArchive **out);

enum BnpirtStatus bnpirt_waic(const struct BnpirtArchive *archive,
                              const struct BnpirtResponses *responses,
                              struct BnpirtWaic *out);

// Multivariate ESS over item parameters and abilities on the base scale, and
// its rate per second of total run time.
enum BnpirtStatus bnpirt_multivariate_ess(const struct BnpirtArchive *archive,
                                          double *mess,
                                          double *mess_per_second);

enum BnpirtStatus bnpirt_univariate_ess(const double *chain, size_t n, double *out);

// Prior mean and variance of the number of clusters among `n` CRP draws.
enum BnpirtStatus bnpirt_crp_cluster_moments(double alpha,
                                             size_t n,
                                             double *expected,
                                             double *variance);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* BNPIRT_H */
