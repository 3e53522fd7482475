#ifndef CTXTRACK_H
#define CTXTRACK_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum CtxStatus {
  CTX_STATUS_OK = 0,
  CTX_STATUS_NULL_POINTER = 1,
  CTX_STATUS_INVALID_ARGUMENT = 2,
  CTX_STATUS_INVALID_CONFIG = 3,
  /**
   * A covariance was not symmetric positive definite.
   */
  CTX_STATUS_NUMERICAL = 4,
  /**
   * Scans were given out of time order.
   */
  CTX_STATUS_TIME_ORDER = 5,
  CTX_STATUS_BUFFER_TOO_SMALL = 6,
  CTX_STATUS_PANIC = 7,
} CtxStatus;

typedef enum CtxSensorKind {
  CTX_SENSOR_KIND_RADAR = 0,
  CTX_SENSOR_KIND_LIDAR = 1,
} CtxSensorKind;

/**
 * Detection probability and clutter model for one scan.
 */
typedef struct CtxContext CtxContext;

/**
 * Labelled GM-PHD filter.
 */
typedef struct CtxGmphd CtxGmphd;

/**
 * A position measurement. `cov` is row-major 2×2; set `area` to NaN when the
 * sensor reports no segmentation area.
 */
typedef struct CtxDetection {
  double x;
  double y;
  double cov[4];
  double area;
} CtxDetection;

/**
 * An extracted target: label and state `[x, vx, y, vy]`.
 */
typedef struct CtxEstimate {
  uint64_t label;
  double mean[4];
} CtxEstimate;

typedef struct CtxGospa {
  double total;
  double localization;
  double missed;
  double false_estimates;
} CtxGospa;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Copies the last error message of this thread into `buf` (NUL-terminated,
 * truncated to `len`). Returns the full message length excluding the NUL.
 *
 * # Safety
 * `buf` must be null or point to `len` writable bytes.
 */
size_t ctx_last_error(char *buf, size_t len);

/**
 * Context with a constant detection probability and clutter intensity (m⁻²).
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum CtxStatus ctx_context_new_uniform(double pd, double lambda, struct CtxContext **out);

/**
 * Radar coverage at the given sensor pose with default parameters; clutter
 * is converted to m⁻² around the sensor.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum CtxStatus ctx_context_new_radar(double x, double y, double heading, struct CtxContext **out);

/**
 * Lidar coverage at the given sensor pose with default parameters.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum CtxStatus ctx_context_new_lidar(double x, double y, double heading, struct CtxContext **out);

/**
 * # Safety
 * `ctx` must be null or a handle from a `ctx_context_new_*` call not yet freed.
 */
void ctx_context_free(struct CtxContext *ctx);

/**
 * Detection probability of a target at `(x, y)`.
 *
 * # Safety
 * `ctx` must be a live context handle and `out` writable.
 */
enum CtxStatus ctx_context_pd(const struct CtxContext *ctx, double x, double y, double *out);

/**
 * Clutter intensity (m⁻²) at a detection.
 *
 * # Safety
 * `ctx` must be a live context handle, `det` readable and `out` writable.
 */
enum CtxStatus ctx_context_clutter(const struct CtxContext *ctx,
                                   const struct CtxDetection *det,
                                   double *out);

/**
 * GM-PHD filter with default parameters.
 *
 * # Safety
 * `out` must be a valid pointer to write the handle to.
 */
enum CtxStatus ctx_gmphd_new(struct CtxGmphd **out);

/**
 * # Safety
 * `f` must be null or a handle from `ctx_gmphd_new` not yet freed.
 */
void ctx_gmphd_free(struct CtxGmphd *f);

/**
 * Processes one scan taken at `time` seconds. Scans must arrive in time
 * order. On error the filter keeps its previous state.
 *
 * # Safety
 * `f` and `ctx` must be live handles; `dets` must point to `n` detections
 * (it may be null when `n` is 0).
 */
enum CtxStatus ctx_gmphd_step(struct CtxGmphd *f,
                              const struct CtxContext *ctx,
                              enum CtxSensorKind kind,
                              double time,
                              const struct CtxDetection *dets,
                              size_t n);

/**
 * Copies the estimates extracted by the last step into `out`. `written`
 * receives the number available; if it exceeds `capacity` nothing is copied
 * and `CTX_STATUS_BUFFER_TOO_SMALL` is returned.
 *
 * # Safety
 * `f` must be a live handle, `out` must point to `capacity` writable
 * estimates (or be null when `capacity` is 0) and `written` must be writable.
 */
enum CtxStatus ctx_gmphd_estimates(const struct CtxGmphd *f,
                                   struct CtxEstimate *out,
                                   size_t capacity,
                                   size_t *written);

/**
 * Sum of mixture weights, the expected number of targets.
 *
 * # Safety
 * `f` must be a live handle and `out` writable.
 */
enum CtxStatus ctx_gmphd_total_weight(const struct CtxGmphd *f, double *out);

/**
 * GOSPA between `n` truth points and `m` estimates, each given as
 * interleaved `x, y` pairs.
 *
 * # Safety
 * `truth` must point to `2n` doubles and `estimates` to `2m` doubles (either
 * may be null when its count is 0); `out` must be writable.
 */
enum CtxStatus ctx_gospa(const double *truth,
                         size_t n,
                         const double *estimates,
                         size_t m,
                         double c,
                         double p,
                         double alpha,
                         struct CtxGospa *out);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* CTXTRACK_H */
