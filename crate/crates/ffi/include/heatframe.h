#ifndef HEATFRAME_H
#define HEATFRAME_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stddef.h>
#include <stdint.h>

/**
 * Result code of every fallible call.
 */
typedef enum HfStatus {
  HF_STATUS_OK = 0,
  /**
   * A required pointer argument was null.
   */
  HF_STATUS_NULL_POINTER = 1,
  /**
   * A string argument was not valid UTF-8.
   */
  HF_STATUS_INVALID_UTF8 = 2,
  /**
   * The statement could not be solved; the handle still carries the defect report.
   */
  HF_STATUS_PROBLEM_DEFECT = 3,
  /**
   * The finite element budget was exhausted; results are from the last iterate.
   */
  HF_STATUS_PARTIAL = 4,
  /**
   * The requested quantity does not exist for this problem class.
   */
  HF_STATUS_NOT_APPLICABLE = 5,
  /**
   * The output buffer is too small; the required length was written.
   */
  HF_STATUS_BUFFER_TOO_SMALL = 6,
  /**
   * Reading the commonsense file or writing outputs failed.
   */
  HF_STATUS_IO = 7,
  /**
   * The commonsense database could not be parsed.
   */
  HF_STATUS_INVALID_COMMONSENSE = 8,
  /**
   * The library panicked; this is a bug.
   */
  HF_STATUS_PANIC = 9,
} HfStatus;

/**
 * A solved (or rejected) problem statement.
 */
typedef struct HfProblem HfProblem;

/**
 * Solver settings. Obtain defaults from [`hf_options_default`].
 */
typedef struct HfOptions {
  /**
   * Nonzero to run the adaptive finite element solver on generalized walls.
   */
  int fe;
  /**
   * Relative tolerance on the QoI estimate.
   */
  double tol_qoi;
  /**
   * Tolerance on the energy estimate relative to the discrete energy norm.
   */
  double tol_energy;
  size_t max_dofs;
  double marking_fraction;
} HfOptions;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Default solver settings.
 */
struct HfOptions hf_options_default(void);

/**
 * Library version as a static NUL-terminated string.
 */
const char *hf_version(void);

/**
 * Static description of a status code.
 */
const char *hf_status_message(enum HfStatus status);

/**
 * Solves a statement. `name` labels the report; `options` and `commonsense_path` may be
 * null for defaults. On `Ok`, `Partial` and `ProblemDefect` a handle is stored in `*out`
 * and must be released with [`hf_problem_free`]; on other codes `*out` is null.
 *
 * # Safety
 * String arguments must be NUL-terminated; `out` must be writable.
 */
enum HfStatus hf_solve(const char *statement,
                       const char *name,
                       const struct HfOptions *options,
                       const char *commonsense_path,
                       struct HfProblem **out);

/**
 * Releases a handle; null is ignored.
 *
 * # Safety
 * `p` must come from [`hf_solve`] and not be used afterwards.
 */
void hf_problem_free(struct HfProblem *p);

/**
 * Status of a solved handle: `Ok`, `Partial` or `ProblemDefect`.
 *
 * # Safety
 * `p` must be a live handle.
 */
enum HfStatus hf_problem_status(const struct HfProblem *p);

/**
 * Copies the JSON report into a new string owned by the caller.
 *
 * # Safety
 * `p` must be a live handle; `out` must be writable.
 */
enum HfStatus hf_report_json(const struct HfProblem *p, char **out);

/**
 * Releases a string returned by this library; null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be used afterwards.
 */
void hf_string_free(char *s);

/**
 * Number of defects in the report.
 *
 * # Safety
 * `p` must be a live handle; `count` must be writable.
 */
enum HfStatus hf_defect_count(const struct HfProblem *p, size_t *count);

/**
 * Sentence index of defect `i`, or -1 when it has none.
 *
 * # Safety
 * `p` must be a live handle; `sentence` must be writable.
 */
enum HfStatus hf_defect_sentence(const struct HfProblem *p, size_t i, int64_t *sentence);

/**
 * Biot number and verdict (`1` small, `0` not small, `-1` not gated) of a quasi-1d problem.
 *
 * # Safety
 * `p` must be a live handle; outputs must be writable.
 */
enum HfStatus hf_biot(const struct HfProblem *p, double *value, int *small);

/**
 * Port positions and temperatures of a quasi-1d problem. `*len` holds the buffer capacity
 * on entry and the number of ports on return; null buffers query the length only.
 *
 * # Safety
 * `p` must be a live handle; `len` must be writable; non-null buffers must hold `*len` values.
 */
enum HfStatus hf_ports(const struct HfProblem *p,
                       double *positions,
                       double *temperatures,
                       size_t *len);

/**
 * Lower and upper bounds on the nondimensional heat transfer rate of a generalized wall.
 *
 * # Safety
 * `p` must be a live handle; outputs must be writable.
 */
enum HfStatus hf_bounds(const struct HfProblem *p, double *lower, double *upper);

/**
 * Finite element value of the nondimensional rate, its error estimate and the final dof count.
 * Returns `Partial` when the dof budget was exhausted.
 *
 * # Safety
 * `p` must be a live handle; outputs must be writable.
 */
enum HfStatus hf_fe_result(const struct HfProblem *p,
                           double *value,
                           double *estimate,
                           size_t *dofs);

/**
 * Writes `report.json` and the SVG figures into `dir`.
 *
 * # Safety
 * `p` must be a live handle; `dir` must be NUL-terminated.
 */
enum HfStatus hf_write_outputs(const struct HfProblem *p, const char *dir);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* HEATFRAME_H */
