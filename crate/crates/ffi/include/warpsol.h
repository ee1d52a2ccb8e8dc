#ifndef WARPSOL_H
#define WARPSOL_H

/* Generated by cbindgen from crates/ffi/src/lib.rs. Do not edit. */

#include <stdarg.h>
#include <stdbool.h>
#include <stdint.h>
#include <stdlib.h>

/**
 * Result of every fallible call.
 */
typedef enum WsStatus {
  WS_STATUS_OK = 0,
  WS_STATUS_NULL_POINTER = 1,
  WS_STATUS_INVALID_UTF8 = 2,
  WS_STATUS_PARSE_ERROR = 3,
  WS_STATUS_INVALID_INPUT = 4,
  WS_STATUS_NUMERICAL_ERROR = 5,
  WS_STATUS_PANIC = 6,
} WsStatus;

/**
 * Parsed expression.
 */
typedef struct WsExpr WsExpr;

/**
 * Verification report of a scenario or catalog run.
 */
typedef struct WsReport WsReport;

#ifdef __cplusplus
extern "C" {
#endif // __cplusplus

/**
 * Message of the last failed call on this thread, or NULL. The pointer
 * stays valid until the next call into this library on the same thread.
 */
const char *ws_last_error(void);

/**
 * Parse `source` into a new expression handle.
 *
 * # Safety
 * `source` must be a NUL-terminated string and `out` a valid pointer.
 */
enum WsStatus ws_expr_parse(const char *source, struct WsExpr **out);

/**
 * Exact derivative of `expr` with respect to `var`, as a new handle.
 *
 * # Safety
 * `expr` must come from this library; `var` must be NUL-terminated.
 */
enum WsStatus ws_expr_differentiate(const struct WsExpr *expr,
                                    const char *var,
                                    struct WsExpr **out);

/**
 * Evaluate `expr` with `names[i] = values[i]` for `i < len`.
 *
 * # Safety
 * `names` and `values` must point to `len` entries each.
 */
enum WsStatus ws_expr_evaluate(const struct WsExpr *expr,
                               const char *const *names,
                               const double *values,
                               uintptr_t len,
                               double *out);

/**
 * Render `expr` as text that parses back to the same expression.
 * Returns NULL on a NULL handle.
 *
 * # Safety
 * `expr` must come from this library.
 */
char *ws_expr_render(const struct WsExpr *expr);

/**
 * # Safety
 * `expr` must come from this library and not be used afterwards.
 */
void ws_expr_free(struct WsExpr *expr);

/**
 * # Safety
 * `s` must be a string returned by this library.
 */
void ws_string_free(char *s);

/**
 * Run catalog instance `name`. `params_json` is NULL or a JSON object of
 * catalog parameters; `fd_step <= 0` selects symbolic derivatives.
 *
 * # Safety
 * Strings must be NUL-terminated; `out` must be a valid pointer.
 */
enum WsStatus ws_catalog_run(const char *name,
                             const char *params_json,
                             double fd_step,
                             struct WsReport **out);

/**
 * Run a JSON scenario config.
 *
 * # Safety
 * `config_json` must be NUL-terminated; `out` must be a valid pointer.
 */
enum WsStatus ws_scenario_run(const char *config_json, struct WsReport **out);

/**
 * Report as JSON, or NULL on a NULL handle.
 *
 * # Safety
 * `report` must come from this library.
 */
char *ws_report_json(const struct WsReport *report);

/**
 * 1 when every checked residual is within tolerance, 0 when one is not,
 * -1 on a NULL handle.
 *
 * # Safety
 * `report` must come from this library.
 */
int ws_report_passed(const struct WsReport *report);

/**
 * # Safety
 * `report` must come from this library and not be used afterwards.
 */
void ws_report_free(struct WsReport *report);

#ifdef __cplusplus
}  // extern "C"
#endif  // __cplusplus

#endif  /* WARPSOL_H */
