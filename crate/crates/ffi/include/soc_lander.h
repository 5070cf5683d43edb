#ifndef SOC_LANDER_H
#define SOC_LANDER_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>

typedef enum SlStatus {
  SL_STATUS_OK = 0,
  SL_STATUS_NULL_POINTER = 1,
  SL_STATUS_INVALID_ARGUMENT = 2,
  SL_STATUS_UNKNOWN_LEVEL = 3,
  SL_STATUS_RUN_FAILED = 4,
  SL_STATUS_OUT_OF_RANGE = 5,
  SL_STATUS_PANIC = 6,
} SlStatus;

/**
 * A protocol connection driving at most one live session.
 */
typedef struct SlConnection SlConnection;

/**
 * A finished episode.
 */
typedef struct SlTrace SlTrace;

/**
 * One trace row. Absent SoC values are NaN.
 */
typedef struct SlRecord {
  uint64_t step;
  double x;
  double y;
  /**
   * -1 left, 0 none, +1 right.
   */
  int8_t input;
  double ll_soc;
  double hl_soc;
  bool trigger;
  bool crashed;
} SlRecord;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread; empty after a success.
 * The pointer stays valid until the next library call on this thread.
 */
const char *sl_last_error(void);

/**
 * Releases a string returned by this library. Null is ignored.
 *
 * # Safety
 * `s` must come from this library and not be freed twice.
 */
void sl_string_free(char *s);

/**
 * Gain `F / (F + pi)`, 0.5 when both are zero.
 *
 * # Safety
 * `out` must be valid for writing.
 */
enum SlStatus sl_kalman_gain(double free_energy, double precision, double *out);

/**
 * Writes `(1 - gain) * top_down + gain * bottom_up` to `out`. Both inputs
 * must be probability vectors of length `n`.
 *
 * # Safety
 * All pointers must reference `n` valid doubles.
 */
enum SlStatus sl_belief_update(const double *top_down,
                               const double *bottom_up,
                               size_t n,
                               double gain,
                               double *out);

/**
 * Entropy of `pred` plus its divergence from `evidence`.
 *
 * # Safety
 * Input pointers must reference `n` valid doubles; `out` must be writable.
 */
enum SlStatus sl_free_energy(const double *pred, const double *evidence, size_t n, double *out);

/**
 * Log inverse variance of `n >= 2` prediction errors, clamped.
 *
 * # Safety
 * `errors` must reference `n` doubles; `out` must be writable.
 */
enum SlStatus sl_precision(const double *errors, size_t n, double *out);

/**
 * Runs one episode. `level` is a builtin id (`a`..`f`) or a level file
 * path. A negative `k` selects the dynamic gain. With `ccl` false the
 * threshold is ignored.
 *
 * # Safety
 * `level` must be a NUL-terminated string; `out` must be writable.
 */
enum SlStatus sl_run_episode(const char *level,
                             double k,
                             double ccl_threshold,
                             bool ccl,
                             uint64_t seed,
                             struct SlTrace **out);

/**
 * Number of steps in the trace; 0 for null.
 *
 * # Safety
 * `t` must be null or a live trace handle.
 */
size_t sl_trace_len(const struct SlTrace *t);

/**
 * Whether the episode ended in a crash; false for null.
 *
 * # Safety
 * `t` must be null or a live trace handle.
 */
bool sl_trace_crashed(const struct SlTrace *t);

/**
 * Copies row `index` into `out`.
 *
 * # Safety
 * `t` must be a live trace handle and `out` writable.
 */
enum SlStatus sl_trace_record(const struct SlTrace *t, size_t index, struct SlRecord *out);

/**
 * The trace as CSV text; free with [`sl_string_free`]. Null on a null
 * handle.
 *
 * # Safety
 * `t` must be null or a live trace handle.
 */
char *sl_trace_to_csv(const struct SlTrace *t);

/**
 * The trace's `key=value` sidecar; free with [`sl_string_free`].
 *
 * # Safety
 * `t` must be null or a live trace handle.
 */
char *sl_trace_meta(const struct SlTrace *t);

/**
 * # Safety
 * `t` must be null or a handle from [`sl_run_episode`], freed once.
 */
void sl_trace_free(struct SlTrace *t);

/**
 * A new in-process protocol connection with default configuration.
 */
struct SlConnection *sl_connection_new(void);

/**
 * Feeds one client message line. Replies are written to `*out` as
 * newline-terminated JSON lines (possibly empty); free with
 * [`sl_string_free`].
 *
 * # Safety
 * `c` must be a live connection, `line` a NUL-terminated string and `out`
 * writable.
 */
enum SlStatus sl_connection_send(struct SlConnection *c, const char *line, char **out);

/**
 * Advances the running session one step, writing replies as in
 * [`sl_connection_send`].
 *
 * # Safety
 * `c` must be a live connection and `out` writable.
 */
enum SlStatus sl_connection_tick(struct SlConnection *c, char **out);

/**
 * Trace CSV of the connection's finished session.
 *
 * # Safety
 * `c` must be a live connection and `out` writable.
 */
enum SlStatus sl_connection_export_csv(const struct SlConnection *c, char **out);

/**
 * # Safety
 * `c` must be null or a handle from [`sl_connection_new`], freed once.
 */
void sl_connection_free(struct SlConnection *c);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* SOC_LANDER_H */
