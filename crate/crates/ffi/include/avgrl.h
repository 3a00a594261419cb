#ifndef AVGRL_H
#define AVGRL_H

/* Generated by cbindgen. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum AvgrlStatus {
  AVGRL_STATUS_OK = 0,
  AVGRL_STATUS_NULL_POINTER = 1,
  AVGRL_STATUS_INVALID_ARGUMENT = 2,
  AVGRL_STATUS_VALIDATION = 3,
  AVGRL_STATUS_NUMERICAL = 4,
  AVGRL_STATUS_NOT_WEAKLY_COMMUNICATING = 5,
  AVGRL_STATUS_BUFFER_TOO_SMALL = 6,
  AVGRL_STATUS_PANIC = 7,
} AvgrlStatus;

typedef enum AvgrlStructure {
  AVGRL_STRUCTURE_COMMUNICATING = 0,
  AVGRL_STRUCTURE_WEAKLY_COMMUNICATING = 1,
  AVGRL_STRUCTURE_NOT_WEAKLY_COMMUNICATING = 2,
} AvgrlStructure;

/**
 * A Differential Q-learning state.
 */
typedef struct AvgrlLearner AvgrlLearner;

/**
 * A validated MDP together with its one-step semi-MDP view.
 */
typedef struct AvgrlModel AvgrlModel;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or null. The pointer is
 * valid until the next failing call on the same thread.
 */
const char *avgrl_last_error_message(void);

/**
 * Creates one of the built-in models by name.
 *
 * # Safety
 * `name` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AvgrlStatus avgrl_model_builtin(const char *name, struct AvgrlModel **out);

/**
 * Parses and validates a model document.
 *
 * # Safety
 * `json` must be a NUL-terminated string and `out` a writable pointer.
 */
enum AvgrlStatus avgrl_model_from_json(const char *json, struct AvgrlModel **out);

/**
 * # Safety
 * `model` must come from this library and not be used afterwards. Null is ignored.
 */
void avgrl_model_free(struct AvgrlModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (which yields 0).
 */
size_t avgrl_model_n_states(const struct AvgrlModel *model);

/**
 * # Safety
 * `model` must be a live handle or null (which yields 0).
 */
size_t avgrl_model_n_actions(const struct AvgrlModel *model);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum AvgrlStatus avgrl_model_classify(const struct AvgrlModel *model, enum AvgrlStructure *out);

/**
 * # Safety
 * `model` must be a live handle and `out` writable.
 */
enum AvgrlStatus avgrl_optimal_reward_rate(const struct AvgrlModel *model, double *out);

/**
 * Solves the optimality equation pinned by `f(q) = sum_i weights[i] q[i]`
 * (the plain sum when `weights` is null). Writes the witness row-major into
 * `q_out`, which must hold `n_states * n_actions` values.
 *
 * # Safety
 * Pointers must be valid for the stated lengths; `weights` may be null.
 */
enum AvgrlStatus avgrl_solve_q(const struct AvgrlModel *model,
                               const double *weights,
                               double tol,
                               double *q_out,
                               size_t q_len,
                               double *r_star_out);

/**
 * Sup-norm Bellman residual of `q` (row-major, `q_len` entries) at rate `r_bar`.
 *
 * # Safety
 * Pointers must be valid for the stated lengths.
 */
enum AvgrlStatus avgrl_bellman_residual(const struct AvgrlModel *model,
                                        const double *q,
                                        size_t q_len,
                                        double r_bar,
                                        double *out);

/**
 * Differential Q-learning state with a constant step size `alpha`.
 *
 * # Safety
 * `out` must be writable.
 */
enum AvgrlStatus avgrl_learner_new(size_t n_states,
                                   size_t n_actions,
                                   double q0,
                                   double r_bar0,
                                   double eta,
                                   double alpha,
                                   struct AvgrlLearner **out);

/**
 * One Differential Q-learning update on `(s, a, r, s_next)`.
 *
 * # Safety
 * `learner` must be a live handle.
 */
enum AvgrlStatus avgrl_learner_dql_step(struct AvgrlLearner *learner,
                                        size_t s,
                                        size_t a,
                                        double r,
                                        size_t s_next);

/**
 * # Safety
 * `learner` must be a live handle and `out` writable.
 */
enum AvgrlStatus avgrl_learner_r_bar(const struct AvgrlLearner *learner, double *out);

/**
 * Copies the table row-major into `buf`.
 *
 * # Safety
 * `learner` must be a live handle and `buf` valid for `len` values.
 */
enum AvgrlStatus avgrl_learner_q(const struct AvgrlLearner *learner, double *buf, size_t len);

/**
 * # Safety
 * `learner` must come from this library and not be used afterwards. Null is ignored.
 */
void avgrl_learner_free(struct AvgrlLearner *learner);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* AVGRL_H */
