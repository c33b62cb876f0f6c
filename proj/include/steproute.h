/*
 * steproute — step-level speculative generation with routed escalation.
 *
 * C API over the engine: opaque handles, integer status codes, UTF-8
 * strings. Every function returning sr_status sets a thread-local error
 * message retrievable with sr_last_error() on failure. Strings returned
 * through char** out-parameters are heap-allocated; release them with
 * sr_string_free().
 */

#ifndef STEPROUTE_H
#define STEPROUTE_H

#include <stddef.h>
#include <stdint.h>

#if defined(_WIN32)
#define SR_API __declspec(dllexport)
#else
#define SR_API __attribute__((visibility("default")))
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum sr_status {
    SR_OK = 0,
    SR_ERR_INVALID_ARG = 1,
    SR_ERR_CONFIG = 2,   /* bad/missing configuration or scripted-world key */
    SR_ERR_IO = 3,       /* file and serialization failures */
    SR_ERR_BACKEND = 4,  /* endpoint failed after retries */
    SR_ERR_INVARIANT = 5 /* internal law violated; indicates a bug */
} sr_status;

SR_API const char* sr_status_name(sr_status status);
SR_API const char* sr_version(void);

/* Thread-local message describing the most recent failure on this thread. */
SR_API const char* sr_last_error(void);

SR_API void sr_string_free(char* s);

/* ---- configuration ---------------------------------------------------- */

typedef struct sr_config sr_config;

SR_API sr_status sr_config_load(const char* path, sr_config** out);
SR_API sr_status sr_config_parse(const char* json_text, sr_config** out);
/* Dotted-path override, e.g. sr_config_override(cfg, "policy.tau", "0.7"). */
SR_API sr_status sr_config_override(sr_config* cfg, const char* dotted_key,
                                    const char* json_value);
SR_API sr_status sr_config_hash(const sr_config* cfg, char** hash_out);
/* The effective configuration as canonical JSON (defaults resolved by the
 * library at use time; unset fields absent). */
SR_API sr_status sr_config_dump(const sr_config* cfg, char** json_out);
SR_API void sr_config_free(sr_config* cfg);

/* ---- pipeline commands ------------------------------------------------ */
/* Each runs one stage end to end, writes its outputs under the configured
 * output directory, and (when summary_out is non-NULL) returns the summary
 * JSON it wrote. */

SR_API sr_status sr_cmd_run(const sr_config* cfg, char** summary_out);
SR_API sr_status sr_cmd_collect(const sr_config* cfg, char** summary_out);
SR_API sr_status sr_cmd_train(const sr_config* cfg, char** summary_out);
SR_API sr_status sr_cmd_eval(const sr_config* cfg, char** summary_out);
SR_API sr_status sr_cmd_sweep(const sr_config* cfg, char** summary_out);
SR_API sr_status sr_cmd_report(const sr_config* cfg, char** summary_out);

/* ---- routing math ------------------------------------------------------ */

/* delta = s_t - s_d */
SR_API double sr_advantage(double s_d, double s_t);
/* s_d + a * delta; a must be 0 or 1 */
SR_API double sr_realized_score(double s_d, double delta, int a);
/* Escalation decisions (1 = escalate, 0 = accept draft). */
SR_API int sr_rsd_decide(double s_d, double tau);     /* accept iff s_d > tau */
SR_API int sr_oracle_decide(double delta, double tau); /* escalate iff delta > tau */
SR_API int sr_router_decide(double y_hat, double tau); /* accept iff y_hat <= tau */

/* Optimal escalation plan under a budget: decisions_out must hold n ints.
 * Writes the achieved gain (sum of selected deltas) to gain_out. */
SR_API sr_status sr_budgeted_select(const double* deltas, size_t n, size_t budget,
                                    int* decisions_out, double* gain_out);
/* Threshold reproducing the budgeted plan (ties fill lowest-index first). */
SR_API sr_status sr_plan_to_threshold(const double* deltas, size_t n, size_t budget,
                                      double* tau_out);

/* Spearman rank correlation with average-rank ties. Returns
 * SR_ERR_INVALID_ARG when undefined (constant input or n < 2). */
SR_API sr_status sr_spearman(const double* a, const double* b, size_t n, double* rho_out);

/* ---- step segmentation -------------------------------------------------- */

/* Splits text into steps; returns a JSON array of
 * {"content": ..., "terminal": bool} through steps_json_out. */
SR_API sr_status sr_segment_steps(const char* text, const char* separator,
                                  const char* eos_marker, char** steps_json_out);

/* ---- router models ------------------------------------------------------ */

typedef struct sr_router sr_router;

SR_API sr_status sr_router_load(const char* path, sr_router** out);
/* y_hat in (0,1) for a draft step in context. step_index is the 0-based
 * ordinal of the step within its problem. */
SR_API sr_status sr_router_predict(const sr_router* router, const char* context,
                                   const char* draft_step, double s_d, int step_index,
                                   int draft_terminal, double* y_hat_out);
SR_API void sr_router_free(sr_router* router);

#ifdef __cplusplus
} /* extern "C" */
#endif

#endif /* STEPROUTE_H */
