/* C interface to the symskel library (libsymskel_ffi).
 *
 * Maintained by hand; crates/ffi/src/lib.rs is the source of truth and its
 * tests check that this header lists every exported symbol.
 *
 * Conventions:
 *  - SkSkeleton / SkModel are opaque; create via sk_* constructors, release
 *    with the matching sk_*_free. free(NULL) is a no-op.
 *  - Fallible calls return int32_t status codes (SK_OK == 0). On failure,
 *    sk_last_error() returns a NUL-terminated message for the most recent
 *    failing call on this thread; out parameters are written only on
 *    success.
 *  - char** results are owned by the caller: release with sk_string_free.
 *  - Panics never unwind across this boundary; they surface as SK_ERR_PANIC.
 */

#ifndef SYMSKEL_H
#define SYMSKEL_H

#include <stddef.h>
#include <stdint.h>

#ifdef __cplusplus
extern "C" {
#endif

/* Status codes. */
enum {
    SK_OK = 0,
    SK_ERR_NULL_ARG = 1, /* required pointer argument was NULL           */
    SK_ERR_UTF8 = 2,     /* string argument/result not valid UTF-8       */
    SK_ERR_PARSE = 3,    /* prefix text did not parse as a skeleton      */
    SK_ERR_IO = 4,       /* file missing, unreadable, or corrupt         */
    SK_ERR_EVAL = 5,     /* expression not evaluable (e.g. extra vars)   */
    SK_ERR_DECODE = 6,   /* model produced an invalid token sequence     */
    SK_ERR_BAD_ARG = 7,  /* argument out of range or inconsistent        */
    SK_ERR_PANIC = 8     /* internal error caught at the boundary        */
};

/* Opaque handles. */
typedef struct SkSkeleton SkSkeleton;
typedef struct SkModel SkModel;

/* Evaluator parameters; fill with sk_eval_params_default, then override.
 * Field order and 8-byte packing must match the Rust definition. */
typedef struct SkEvalParams {
    uint64_t n_test;          /* test points per repeat                  */
    uint64_t repeats;         /* independent target concretizations      */
    uint64_t population;      /* GA population size                      */
    uint64_t tournament;      /* tournament size for selection           */
    uint64_t stop_window;     /* generations without improvement to stop */
    uint64_t max_generations; /* hard generation cap                     */
    uint64_t seed;            /* RNG seed; same seed => same result      */
    double expansion;         /* test-domain widening factor (>= 1)      */
    double crossover_rate;
    double mutation_sigma;
    double mutation_rate;
    double stop_delta;        /* improvement threshold for stop_window   */
    double init_lo;           /* constant search range                   */
    double init_hi;
} SkEvalParams;

/* Fit-error summary: mean/std over repeats of the accumulated absolute
 * error, plus the same mean normalized by n_test times the target range. */
typedef struct SkEvalSummary {
    double mean;
    double std_dev;
    double normalized_mean;
} SkEvalSummary;

/* ------------------------------------------------------------------ */
/* Library                                                             */

/* ABI revision of this surface; currently 1. */
uint32_t sk_abi_version(void);

/* Message for the most recent failing call on this thread ("" after a
 * success). Valid until the next sk_* call on the same thread. */
const char *sk_last_error(void);

/* Release a string returned through a char** out parameter. */
void sk_string_free(char *s);

/* ------------------------------------------------------------------ */
/* Skeletons                                                           */

/* Parse prefix notation, e.g. "add c mul c x" for c1 + c2*x. */
int32_t sk_skeleton_parse(const char *src, SkSkeleton **out);

/* Parse a concrete expression (numeric constants, variables x or x1..xN)
 * and reduce it to its skeleton. variable == 0 abstracts every constant;
 * variable == v >= 1 also treats all variables except x_v as constants and
 * renames x_v to x, producing a univariate skeleton. */
int32_t sk_skeletonize(const char *src, uint32_t variable, SkSkeleton **out);

void sk_skeleton_free(SkSkeleton *s);

/* Prefix rendering of the skeleton as parsed/built. */
int32_t sk_skeleton_prefix(const SkSkeleton *s, char **out);

/* Canonical key; equal keys mean the same expression family. */
int32_t sk_skeleton_canonical_key(const SkSkeleton *s, char **out);

/* Number of constant placeholders. */
int32_t sk_skeleton_n_constants(const SkSkeleton *s, uint32_t *out);

/* *out = 1 when a and b describe the same family, else 0. */
int32_t sk_skeleton_equal(const SkSkeleton *a, const SkSkeleton *b,
                          int32_t *out);

/* Substitute constants (c1..ck order; n_constants must equal the skeleton's
 * placeholder count) and evaluate at n_points univariate inputs xs, writing
 * ys. Undefined points yield NaN rather than an error. */
int32_t sk_skeleton_eval(const SkSkeleton *s, const double *constants,
                         size_t n_constants, const double *xs,
                         size_t n_points, double *ys);

/* ------------------------------------------------------------------ */
/* Scoring                                                             */

int32_t sk_eval_params_default(SkEvalParams *out);

/* Score est against the family target on [lo, hi]: each repeat draws the
 * target's constants at random, fits est's constants with the GA, and
 * accumulates absolute error over a fresh test set. Deterministic in
 * params->seed. params == NULL uses the defaults (minutes of work; shrink
 * n_test/repeats/population for interactive use). */
int32_t sk_evaluate(const SkSkeleton *est, const SkSkeleton *target,
                    double lo, double hi, const SkEvalParams *params,
                    SkEvalSummary *out);

/* ------------------------------------------------------------------ */
/* Models                                                              */

/* Load a checkpoint written by `symskel train-mst`. */
int32_t sk_model_load(const char *path, SkModel **out);

void sk_model_free(SkModel *m);

/* Predict the shared skeleton of n_sets curves sampled from one family.
 * xs and ys hold the curves back to back: curve s occupies indices
 * [s*n_points, (s+1)*n_points). Requires n_sets >= 1, n_points >= 2. */
int32_t sk_model_predict_curves(const SkModel *m, const double *xs,
                                const double *ys, size_t n_sets,
                                size_t n_points, SkSkeleton **out);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* SYMSKEL_H */
