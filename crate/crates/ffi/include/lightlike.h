#ifndef LIGHTLIKE_H
#define LIGHTLIKE_H

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum LlStatus {
  LL_STATUS_OK = 0,
  LL_STATUS_NULL_POINTER = 1,
  LL_STATUS_INVALID_UTF8 = 2,
  LL_STATUS_INVALID_INPUT = 3,
  LL_STATUS_OUTSIDE_DOMAIN = 4,
  LL_STATUS_DEGENERATE_VECTOR = 5,
  LL_STATUS_BUFFER_TOO_SMALL = 6,
  LL_STATUS_IO = 7,
  LL_STATUS_CONFIG = 20,
  LL_STATUS_NOT_IN_CLASS = 21,
  LL_STATUS_CONDITIONS_FAIL = 22,
  LL_STATUS_HEIGHTS = 23,
  LL_STATUS_SOLVER_FAILED = 24,
  LL_STATUS_SAMPLING = 25,
  LL_STATUS_EXTENSION = 26,
  LL_STATUS_PERIODIZE = 27,
  LL_STATUS_VERIFICATION_FAILED = 28,
  LL_STATUS_EXPORT = 29,
  LL_STATUS_PANIC = 99,
} LlStatus;

// Opaque handle to a solved maximal graph.
typedef struct LlPatch LlPatch;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Library version as a static NUL-terminated string.
const char *ll_version(void);

// Message of the last failure on this thread, or NULL. Valid until the next call into the library.
const char *ll_last_error_message(void);

// `<u, v> = u_x v_x + u_y v_y - u_t v_t`.
//
// # Safety
// `u` and `v` point to 3 doubles, `out` to one.
enum LlStatus ll_minkowski(const double *u, const double *v, double *out);

// Residual of a catalogued implicit surface (`"S1"`, `"S2"`, `"S3"`, `"H"`, `"P"`) at `p = (x, y, t)`.
//
// # Safety
// `name` is a NUL-terminated string, `p` points to 3 doubles, `out` to one.
enum LlStatus ll_implicit_residual(const char *name,
                                   const double *p,
                                   double *out);

// Builds the maximal graph over a counterclockwise polygon with alternating labels.
// `xy` holds `n` vertex pairs. On success `*out` owns a handle to release with [`ll_patch_free`].
//
// # Safety
// `xy` points to `2 n` doubles and `out` is writable.
enum LlStatus ll_patch_from_polygon(const double *xy, uintptr_t n, struct LlPatch **out);

// Releases a handle; NULL is ignored.
//
// # Safety
// `patch` came from [`ll_patch_from_polygon`] and is not used afterwards.
void ll_patch_free(struct LlPatch *patch);

// Copies the jump points into `out` (capacity `cap`) and stores their count in `*len`.
//
// # Safety
// `patch` is a live handle, `out` has room for `cap` doubles, `len` is writable.
enum LlStatus ll_patch_jumps(const struct LlPatch *patch,
                             double *out,
                             uintptr_t cap,
                             uintptr_t *len);

// Harmonic map at `ζ = re + i im` in the upper half-plane; writes `(x, y, t)`.
//
// # Safety
// `patch` is a live handle and `out` points to 3 doubles.
enum LlStatus ll_patch_eval(const struct LlPatch *patch, double re, double im, double *out);

// Height `t = ψ(x, y)` of the graph over an interior point.
//
// # Safety
// `patch` is a live handle and `out` points to one double.
enum LlStatus ll_patch_graph_value(const struct LlPatch *patch, double x, double y, double *out);

// Runs the full pipeline on a JSON configuration. When `out_dir` is non-NULL, meshes and
// reports are written there. When `report` is non-NULL it receives the verification report
// as JSON, to be released with [`ll_string_free`].
//
// # Safety
// `config_json` is NUL-terminated; `out_dir` is NULL or NUL-terminated; `report` is NULL or writable.
enum LlStatus ll_run_pipeline(const char *config_json,
                              const char *out_dir,
                              char **report);

// Releases a string returned by the library; NULL is ignored.
//
// # Safety
// `s` came from this library and is not used afterwards.
void ll_string_free(char *s);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* LIGHTLIKE_H */
