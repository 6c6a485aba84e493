#ifndef KRONSPEC_H
#define KRONSPEC_H

/* Generated by cbindgen from crates/ffi/src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum KsStatus {
  KS_STATUS_OK = 0,
  KS_STATUS_INVALID_ARGUMENT = 1,
  KS_STATUS_INPUT = 2,
  KS_STATUS_NUMERIC = 3,
  KS_STATUS_EXHAUSTED = 4,
  KS_STATUS_PRECONDITION = 5,
  KS_STATUS_PANIC = 6,
} KsStatus;

typedef enum KsFormat {
  /**
   * JSON for a `.json` extension, Matrix Market otherwise.
   */
  KS_FORMAT_AUTO = 0,
  KS_FORMAT_MATRIX_MARKET = 1,
  KS_FORMAT_JSON = 2,
} KsFormat;

typedef enum KsSelfMap {
  KS_SELF_MAP_IDENTITY = 0,
  KS_SELF_MAP_INVERSE = 1,
  KS_SELF_MAP_TRANSPOSE = 2,
  KS_SELF_MAP_CONJUGATE_TRANSPOSE = 3,
} KsSelfMap;

typedef struct KsDecomposition KsDecomposition;

typedef struct KsMatrix KsMatrix;

typedef struct KsOutcome KsOutcome;

typedef struct KsSpectrumSummary {
  size_t n;
  /**
   * Infinite for n = 1.
   */
  double min_gap;
  bool is_simple;
  bool is_invertible;
  bool has_eig_condition;
  double eig_condition;
  double safe_radius;
  double gap_tol_used;
} KsSpectrumSummary;

typedef struct KsPerturbSpec {
  double eps;
  double gap_tol;
  size_t max_attempts;
  double stage2_shrink;
  uint64_t seed;
  /**
   * Draw complex perturbation directions (otherwise real).
   */
  bool complex_field;
  size_t designated;
} KsPerturbSpec;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message for the last failed call on this thread; empty after a success.
 * Valid until the next call into this library on the same thread.
 */
const char *ks_last_error(void);

void ks_string_free(char *s);

/**
 * `data` holds `rows * cols` doubles, row-major.
 */
enum KsStatus ks_matrix_from_real(size_t rows,
                                  size_t cols,
                                  const double *data,
                                  struct KsMatrix **out);

/**
 * `data` holds `2 * rows * cols` doubles, row-major `(re, im)` pairs.
 */
enum KsStatus ks_matrix_from_complex(size_t rows,
                                     size_t cols,
                                     const double *data,
                                     struct KsMatrix **out);

enum KsStatus ks_matrix_identity(size_t n, struct KsMatrix **out);

/**
 * Seeded standard Gaussian matrix.
 */
enum KsStatus ks_matrix_gaussian(size_t n, bool complex, uint64_t seed, struct KsMatrix **out);

void ks_matrix_free(struct KsMatrix *m);

/**
 * Zero for a null handle.
 */
size_t ks_matrix_rows(const struct KsMatrix *m);

/**
 * Zero for a null handle.
 */
size_t ks_matrix_cols(const struct KsMatrix *m);

bool ks_matrix_is_complex(const struct KsMatrix *m);

enum KsStatus ks_matrix_get(const struct KsMatrix *m,
                            size_t row,
                            size_t col,
                            double *re,
                            double *im);

enum KsStatus ks_matrix_read(const char *path, enum KsFormat format, struct KsMatrix **out);

enum KsStatus ks_matrix_write(const struct KsMatrix *m, const char *path, enum KsFormat format);

enum KsStatus ks_matrix_to_json(const struct KsMatrix *m, char **out);

enum KsStatus ks_matrix_multiply(const struct KsMatrix *a,
                                 const struct KsMatrix *b,
                                 struct KsMatrix **out);

enum KsStatus ks_matrix_inverse(const struct KsMatrix *m, struct KsMatrix **out);

enum KsStatus ks_matrix_frobenius_norm(const struct KsMatrix *m, double *out);

enum KsStatus ks_matrix_spectral_norm(const struct KsMatrix *m, double *out);

enum KsStatus ks_spectrum_report(const struct KsMatrix *m,
                                 double gap_tol,
                                 struct KsSpectrumSummary *out);

/**
 * Full report including eigenvalues, as JSON.
 */
enum KsStatus ks_spectrum_report_json(const struct KsMatrix *m, double gap_tol, char **out);

struct KsPerturbSpec ks_perturb_spec_default(void);

/**
 * Perturbs `k` matrices so that `maps[0](A_0) ... maps[k-1](A_{k-1})` has a
 * simple spectrum. `spec` may be null for the defaults.
 */
enum KsStatus ks_perturb_tuple(const struct KsMatrix *const *matrices,
                               const enum KsSelfMap *maps,
                               size_t k,
                               const struct KsPerturbSpec *spec,
                               struct KsOutcome **out);

void ks_outcome_free(struct KsOutcome *o);

/**
 * Number of perturbed matrices; zero for a null handle.
 */
size_t ks_outcome_len(const struct KsOutcome *o);

size_t ks_outcome_attempts_used(const struct KsOutcome *o);

/**
 * Copy of the `index`-th perturbed matrix.
 */
enum KsStatus ks_outcome_matrix(const struct KsOutcome *o, size_t index, struct KsMatrix **out);

enum KsStatus ks_outcome_delta(const struct KsOutcome *o, size_t index, double *out);

enum KsStatus ks_outcome_product(const struct KsOutcome *o, struct KsMatrix **out);

enum KsStatus ks_outcome_to_json(const struct KsOutcome *o, char **out);

/**
 * Inverse of `A⊗C + B⊗D` as at most `min(p, q)` Kronecker products.
 */
enum KsStatus ks_binomial_inverse(const struct KsMatrix *a,
                                  const struct KsMatrix *b,
                                  const struct KsMatrix *c,
                                  const struct KsMatrix *d,
                                  double gap_tol,
                                  struct KsDecomposition **out);

/**
 * Perturbs `A` and `B` by less than `delta` each (Frobenius) so that
 * `ks_binomial_inverse` accepts the result. `spec` may be null.
 */
enum KsStatus ks_preprocess_binomial(const struct KsMatrix *a,
                                     const struct KsMatrix *b,
                                     const struct KsMatrix *c,
                                     const struct KsMatrix *d,
                                     double delta,
                                     const struct KsPerturbSpec *spec,
                                     struct KsMatrix **a_out,
                                     struct KsMatrix **b_out);

void ks_decomposition_free(struct KsDecomposition *d);

/**
 * Number of terms; zero for a null handle.
 */
size_t ks_decomposition_len(const struct KsDecomposition *d);

/**
 * `||X * reconstruction - I||_F`; NaN for a null handle.
 */
double ks_decomposition_residual(const struct KsDecomposition *d);

/**
 * Copies of the factors of term `index`.
 */
enum KsStatus ks_decomposition_term(const struct KsDecomposition *d,
                                    size_t index,
                                    struct KsMatrix **left,
                                    struct KsMatrix **right);

enum KsStatus ks_decomposition_reconstruct(const struct KsDecomposition *d, struct KsMatrix **out);

/**
 * `{"p", "q", "terms"}` JSON.
 */
enum KsStatus ks_decomposition_to_json(const struct KsDecomposition *d, char **out);

enum KsStatus ks_kron_rank(const struct KsMatrix *x, size_t p, size_t q, double tol, size_t *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* KRONSPEC_H */
