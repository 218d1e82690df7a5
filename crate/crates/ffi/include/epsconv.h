#ifndef EPSCONV_H
#define EPSCONV_H

#include <stdarg.h>
#include <stdbool.h>
#include <stddef.h>
#include <stdint.h>
#include <stdlib.h>

typedef enum EcStatus {
  EC_STATUS_OK = 0,
  EC_STATUS_NULL_POINTER = 1,
  EC_STATUS_INVALID_UTF8 = 2,
  EC_STATUS_PARSE = 3,
  EC_STATUS_INVALID_INPUT = 4,
  EC_STATUS_DIMENSION_MISMATCH = 5,
  EC_STATUS_WINDOW_TOO_SMALL = 6,
  EC_STATUS_UNSUPPORTED = 7,
  // A panic was caught at the boundary.
  EC_STATUS_INTERNAL = 8,
} EcStatus;

// A proper convex function with its conjugate prepared on first use.
typedef struct EcFunction EcFunction;

// A closed convex set.
typedef struct EcSet EcSet;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Parses a function description. The handle must be released with
// [`ec_function_free`].
//
// # Safety
// `json` is a NUL-terminated string; `out_fn` is writable.
enum EcStatus ec_function_from_json(const char *json, struct EcFunction **out_fn);

// # Safety
// `f` is null or a handle from [`ec_function_from_json`] not yet freed.
void ec_function_free(struct EcFunction *f);

// Dimension of the function's domain, 0 for a null handle.
//
// # Safety
// `f` is null or a live handle.
size_t ec_function_dim(const struct EcFunction *f);

// # Safety
// `f` is a live handle, `x` points to `n` doubles, `value` is writable.
enum EcStatus ec_function_eval(const struct EcFunction *f,
                               const double *x,
                               size_t n,
                               double *value);

// Conjugate value at `xs`. `on_window_edge` (may be null) reports that the
// supremum was reached at the edge of the sampling window, in which case the
// true value may be larger.
//
// # Safety
// `f` is a live handle, `xs` points to `n` doubles, `value` is writable.
enum EcStatus ec_conjugate_at(struct EcFunction *f,
                              const double *xs,
                              size_t n,
                              double *value,
                              bool *on_window_edge);

// Bounds of the ε-subdifferential of a one-dimensional function at
// `x_bar`. An empty set is reported as `lo = +inf`, `hi = -inf`.
//
// # Safety
// `f` is a live handle, `lo` and `hi` are writable.
enum EcStatus ec_eps_subdiff_interval(const struct EcFunction *f,
                                      double x_bar,
                                      double eps,
                                      double *lo,
                                      double *hi);

// Whether `xs` lies in the ε-subdifferential at `x_bar` (both of length `n`).
//
// # Safety
// `f` is a live handle, `x_bar` and `xs` point to `n` doubles, `member` is
// writable.
enum EcStatus ec_eps_subdiff_contains(const struct EcFunction *f,
                                      const double *x_bar,
                                      const double *xs,
                                      size_t n,
                                      double eps,
                                      bool *member);

// Parses a set description. The handle must be released with
// [`ec_set_free`].
//
// # Safety
// `json` is a NUL-terminated string; `out_set` is writable.
enum EcStatus ec_set_from_json(const char *json, struct EcSet **out_set);

// # Safety
// `s` is null or a handle from [`ec_set_from_json`] not yet freed.
void ec_set_free(struct EcSet *s);

// # Safety
// `s` is a live handle, `x` points to `n` doubles, `member` is writable.
enum EcStatus ec_set_contains(const struct EcSet *s, const double *x, size_t n, bool *member);

// Whether `xs` lies in the polar `{x* : <x*, x> <= 1 for all x in C}`.
//
// # Safety
// `s` is a live handle, `xs` points to `n` doubles, `member` is writable.
enum EcStatus ec_polar_contains(const struct EcSet *s, const double *xs, size_t n, bool *member);

// Whether `xs` is an ε-normal to the set at `x_bar`.
//
// # Safety
// `s` is a live handle, `x_bar` and `xs` point to `n` doubles, `member` is
// writable.
enum EcStatus ec_eps_normal_contains(const struct EcSet *s,
                                     const double *x_bar,
                                     const double *xs,
                                     size_t n,
                                     double eps,
                                     bool *member);

// Runs one scenario given as JSON and writes its report as JSON to
// `report`, to be released with [`ec_string_free`]. A scenario that runs
// but fails its checks still returns `Ok`; see the `pass` field.
//
// # Safety
// `json` is a NUL-terminated string; `report` is writable.
enum EcStatus ec_run_scenario_json(const char *json, char **report);

// # Safety
// `s` is null or a string returned by this library, not yet freed.
void ec_string_free(char *s);

// Message of the last failed call on this thread, or null. Valid until the
// next failing call on the same thread.
const char *ec_last_error_message(void);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* EPSCONV_H */
