/*
 * nsproj C API: no-signalling projection and canonical Bell-expression
 * evaluation for (n, m, 2) Bell scenarios, behind opaque handles.
 *
 * Conventions:
 *  - behaviours are length-(2m)^n arrays in canonical order: setting blocks
 *    lexicographic (party 1 most significant), outcomes lexicographic within
 *    a block;
 *  - functions returning a pointer return NULL on failure, functions
 *    returning nsp_status return a nonzero code; nsp_last_error() holds a
 *    thread-local message describing the most recent failure;
 *  - every returned char* must be released with nsp_string_free, every handle
 *    with its matching *_free.
 */
#ifndef NSPROJ_H
#define NSPROJ_H

#include <stddef.h>

#ifdef __cplusplus
extern "C" {
#endif

typedef enum nsp_status {
  NSP_OK = 0,
  NSP_ERR_INVALID = 1,     /* bad arguments, scenario mismatch, schema violation */
  NSP_ERR_PARSE = 2,       /* malformed CSV/JSON input */
  NSP_ERR_CONVERGENCE = 3, /* iterative routine exhausted its budget */
  NSP_ERR_INTERNAL = 4
} nsp_status;

typedef struct nsp_scenario nsp_scenario;
typedef struct nsp_counts nsp_counts;
typedef struct nsp_behavior nsp_behavior;
typedef struct nsp_expression nsp_expression;

const char* nsp_last_error(void);
/* Status code of the most recent failure on this thread (NSP_OK after a
 * successful pointer-returning call has never failed). */
nsp_status nsp_last_status(void);
void nsp_string_free(char* text);

/* ---- scenarios ---- */
nsp_scenario* nsp_scenario_create(int parties, int settings);
void nsp_scenario_free(nsp_scenario* sc);
int nsp_scenario_dimension(const nsp_scenario* sc);
int nsp_scenario_setting_blocks(const nsp_scenario* sc);

/* ---- count tables ---- */
nsp_counts* nsp_counts_parse_csv(const nsp_scenario* sc, const char* text);
/* 4x4 grid layout for (2,2,2): settings rows 00,01,10,11; outcome columns
 * 00,01,10,11. */
nsp_counts* nsp_counts_parse_grid222(const char* text);
char* nsp_counts_to_csv(const nsp_counts* counts);
long long nsp_counts_total(const nsp_counts* counts);
int nsp_counts_setting_blocks(const nsp_counts* counts);
void nsp_counts_free(nsp_counts* counts);

/* ---- behaviours ---- */
nsp_behavior* nsp_behavior_create(const nsp_scenario* sc, const double* entries, size_t length);
nsp_behavior* nsp_behavior_parse_json(const char* text);
char* nsp_behavior_to_json(const nsp_behavior* behavior);
int nsp_behavior_dimension(const nsp_behavior* behavior);
nsp_status nsp_behavior_entries(const nsp_behavior* behavior, double* out, size_t length);
void nsp_behavior_free(nsp_behavior* behavior);

/* Empirical frequencies f(a|x) = N(a,x)/N(x). If setting_distribution is
 * non-NULL it receives pi(x) = N(x)/N, one entry per setting block. */
nsp_behavior* nsp_counts_frequencies(const nsp_counts* counts, double* setting_distribution);

/* ---- projection ----
 * method: "pipeline" (closed-form three-map projection), "direct"
 * (kernel-basis projector), "weighted" (weighted L2), "nonneg"
 * (projection onto the no-signalling polytope), "ml" (maximum-likelihood
 * estimate). "weighted" and "ml" need weights: one positive entry per
 * setting block ("ml" reads them as the observed settings distribution);
 * other methods take weights = NULL. */
nsp_behavior* nsp_project(const nsp_behavior* behavior, const char* method, const double* weights,
                          size_t weights_length);

/* Infinity norms of the equality residuals A_eq v - b, split by row kind. */
nsp_status nsp_residual_max(const nsp_behavior* behavior, double* nosig_max, double* norm_max);
char* nsp_signalling_report_json(const nsp_behavior* behavior);

/* ---- Bell expressions ---- */
/* name: "chsh", "mermin", "tilted" (alpha >= 1, beta >= 0), "i3322",
 * "losr_gtnl"; alpha/beta are ignored by the parameter-free families. */
nsp_expression* nsp_expression_builtin(const char* name, double alpha, double beta);
nsp_expression* nsp_expression_parse_json(const char* text);
char* nsp_expression_to_json(const nsp_expression* expr);
char* nsp_expression_canonical_json(const nsp_expression* expr);
nsp_status nsp_expression_scenario(const nsp_expression* expr, int* parties, int* settings);
nsp_status nsp_expression_bound(const nsp_expression* expr, double* bound, int* is_le);
void nsp_expression_free(nsp_expression* expr);

/* Evaluates the expression (canonical != 0: its canonicalised form) on the
 * behaviour. violated is 0/1; margin is the signed distance past the bound. */
nsp_status nsp_evaluate(const nsp_expression* expr, const nsp_behavior* behavior, int canonical,
                        double* value, double* margin, int* violated);

/* ---- synthetic data ---- */
/* Drift-contaminated counts from a no-signalling base behaviour, returned as
 * long-format CSV. trials_per_setting has one entry per setting block. */
char* nsp_generate_counts_csv(const nsp_behavior* base, const long long* trials_per_setting,
                              size_t length, double drift_amplitude, int blocks,
                              unsigned long long seed, int expected_mode);

#ifdef __cplusplus
}
#endif

#endif /* NSPROJ_H */
