#ifndef HERMDENS_H
#define HERMDENS_H

/* Generated by cbindgen from src/lib.rs; do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

// Result of every call.
typedef enum HdStatus {
  HD_STATUS_OK = 0,
  // Arguments rejected by the library.
  HD_STATUS_INVALID = 1,
  // A brute-force count exceeded its budget.
  HD_STATUS_BUDGET = 2,
  // An internal consistency check failed.
  HD_STATUS_INTERNAL = 3,
  HD_STATUS_NULL_POINTER = 4,
  HD_STATUS_UTF8 = 5,
  HD_STATUS_PANIC = 6,
} HdStatus;

// An exact rational function of `q`.
typedef struct HdValue HdValue;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

// Message for the last failed call on this thread; empty after a success.
// Valid until the next call on the same thread.
const char *hd_last_error(void);

// Library version, a static string.
const char *hd_version(void);

// `W_{h,t}(B, 0)` and `−d/dx W_{h,t}(B, r)` at `r = 0`, for `B` of size 2
// written as `diag:a,b` or `mono:sigma=[..];e=[..]`.
//
// # Safety
// `b` must be a NUL-terminated string; `out_value` and `out_derivative`
// must be writable. Free the results with `hd_value_free`.
enum HdStatus hd_wdens_n1(const char *b,
                          uint32_t h,
                          uint32_t t,
                          struct HdValue **out_value,
                          struct HdValue **out_derivative);

// `𝒥_t(B)` at `n = 1`.
//
// # Safety
// `b` must be a NUL-terminated string and `out` writable.
enum HdStatus hd_jfun_n1(uint32_t t, const char *b, struct HdValue **out);

// `α(π^ξ, π^λ)`, or its derivative along the self-dual padding when
// `prime` is set.
//
// # Safety
// `xi` and `lam` must point to `xi_len` and `lam_len` readable values
// (either may be null when its length is 0); `out` must be writable.
enum HdStatus hd_alpha(const int64_t *xi,
                       uintptr_t xi_len,
                       const int64_t *lam,
                       uintptr_t lam_len,
                       bool prime,
                       struct HdValue **out);

// One constant of the β system: `β^h_i` (or `β^{2n−h}_i` when `dual`), or
// `δ_h` when `index` equals `n`.
//
// # Safety
// `out` must be writable.
enum HdStatus hd_beta(uint32_t n, uint32_t h, uint32_t index, bool dual, struct HdValue **out);

// Twice the tree intersection number, so that half-integers stay exact.
// Pass a negative `vdet` when it is not known (allowed in Case 3 only).
//
// # Safety
// `out_twice` must be writable.
enum HdStatus hd_tree_intersection(int64_t q,
                                   int64_t m_x,
                                   int64_t m_y,
                                   int64_t d,
                                   int64_t vdet,
                                   int64_t *out_twice);

// The value as an expression in `q`. Free with `hd_string_free`.
//
// # Safety
// `v` must be a live handle.
char *hd_value_expr(const struct HdValue *v);

// Exact value at `q` as `num/den` (or an integer), through `out`.
// Free the string with `hd_string_free`.
//
// # Safety
// `v` must be a live handle and `out` writable.
enum HdStatus hd_value_eval(const struct HdValue *v, int64_t q, char **out);

// Nearest `double` to the value at `q`.
//
// # Safety
// `v` must be a live handle and `out` writable.
enum HdStatus hd_value_eval_f64(const struct HdValue *v, int64_t q, double *out);

// # Safety
// `v` must come from this library and not be freed twice; null is ignored.
void hd_value_free(struct HdValue *v);

// # Safety
// `s` must come from this library and not be freed twice; null is ignored.
void hd_string_free(char *s);

#ifdef __cplusplus
} // extern "C"
#endif // __cplusplus

#endif /* HERMDENS_H */
