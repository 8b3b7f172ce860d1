/* C interface to the self-preferencing audit library.
 *
 * Every function returns a pa_status. On failure pa_last_error() describes
 * the problem (thread-local, valid until the next call on the same thread).
 * Strings returned through char** are owned by the caller and released with
 * pa_string_free. Configurations and results travel as JSON text. */
#ifndef PREFAUDIT_H
#define PREFAUDIT_H

#include <stddef.h>
#include <stdint.h>

#if defined(PREFAUDIT_BUILDING)
#define PA_API __attribute__((visibility("default")))
#else
#define PA_API
#endif

#ifdef __cplusplus
extern "C" {
#endif

typedef enum pa_status {
  PA_OK = 0,
  PA_ERR_INVALID_ARGUMENT = 1,
  PA_ERR_IO = 2,
  PA_ERR_VALIDATION = 3,
  PA_ERR_PRECONDITION = 4,
  PA_ERR_NUMERICAL = 5,
  PA_ERR_INTERNAL = 6
} pa_status;

typedef struct pa_panel pa_panel;

PA_API const char* pa_version(void);
PA_API const char* pa_schema_version(void);
PA_API const char* pa_last_error(void);
PA_API const char* pa_status_name(pa_status status);
PA_API void pa_string_free(char* s);

/* Visibility index from a keyword-rank file. ecp_path may be NULL for the
 * default curve. options_json: {"cycle_length":365,"scale":1e6} or NULL.
 * out_csv receives offer_id,date,relative_visibility; out_json a summary. */
PA_API pa_status pa_visibility_compute(const char* keywords_path, const char* ecp_path,
                                       const char* options_json, char** out_csv, char** out_json);

/* Panels. */
PA_API pa_status pa_panel_read(const char* path, double currency_rate, pa_panel** out);
PA_API pa_status pa_panel_parse(const char* csv_text, double currency_rate, pa_panel** out);
PA_API pa_status pa_panel_write(const pa_panel* panel, const char* path);
PA_API pa_status pa_panel_to_csv(const pa_panel* panel, char** out_csv);
PA_API void pa_panel_free(pa_panel* panel);
PA_API size_t pa_panel_rows(const pa_panel* panel);
PA_API size_t pa_panel_products(const pa_panel* panel);
PA_API pa_status pa_panel_digest(const pa_panel* panel, char** out_hex);
PA_API pa_status pa_panel_lag(const pa_panel* panel, int lag_days, const char* outcome,
                              pa_panel** out);
/* Declares an already lagged panel (for files written after lagging). */
PA_API pa_status pa_panel_mark_lagged(pa_panel* panel, int lag_days, const char* outcome);
PA_API pa_status pa_panel_filter(const pa_panel* panel, const char* filter_json, pa_panel** out);
PA_API pa_status pa_panel_pool(const pa_panel* const* panels, const char* const* markets, size_t count,
                               pa_panel** out);
PA_API pa_status pa_panel_impute_seller_rating(const pa_panel* panel, double rating, pa_panel** out);
PA_API pa_status pa_panel_summary(const pa_panel* panel, char** out_csv);
/* groups_json: [{"group_id":..,"platform_product_id":..,"substitute_product_ids":[..]}] */
PA_API pa_status pa_panel_assign_groups(const pa_panel* panel, const char* groups_json, pa_panel** out);
/* request_json: {"platform_products":[{"product_id","category"}],
 * "candidates":{"category":[ids]},"max_substitutes":5,"seed":1}. */
PA_API pa_status pa_build_comparison_groups(const char* request_json, char** out_json);

/* Synthetic data. */
PA_API pa_status pa_simulate(const char* config_json, pa_panel** out_panel, char** out_truth_json);
PA_API pa_status pa_inject_omitted_variable(const pa_panel* panel, const char* kind, double multiplier,
                                            uint64_t seed, double noise_sd, pa_panel** out);
/* request_json: {"grid":[config,...],"replications":200,"lag":1} */
PA_API pa_status pa_monte_carlo(const char* request_json, char** out_json, char** out_csv);

/* Estimation. spec_json may be NULL for the default model of each call. */
PA_API pa_status pa_fit(const pa_panel* panel, const char* spec_json, char** out_json);
PA_API pa_status pa_test_coo(const pa_panel* lagged, const char* spec_json, const char* label,
                             char** out_json);
PA_API pa_status pa_test_ob(const pa_panel* lagged, const char* spec_json, const char* label,
                            char** out_json);
PA_API pa_status pa_compare_tests(const char* coo_json, const char* ob_json, char** out_json);
PA_API pa_status pa_transform_estimate(double delta, double se, double z, double* percent,
                                       double* ci_low, double* ci_high);

/* Robustness. analysis: "buybox" (takes the unlagged panel), "ratio" or
 * "seller_rating" (take the lagged panel). options_json: {"spec":{...},
 * "lag":1,"cutoffs":[1,..],"imputations":[null,80,..]}. */
PA_API pa_status pa_robustness(const pa_panel* panel, const char* analysis, const char* options_json,
                               char** out_json, char** out_csv);

/* Rendering. reports_json: array of test reports (or envelopes); labels are
 * taken from each report's "label". */
PA_API pa_status pa_report_render(const char* reports_json, const char* title, char** out_svg,
                                  char** out_csv);
PA_API pa_status pa_report_summary(const char* report_json, char** out_text);
/* Wraps result_json in the versioned report envelope with digests of the
 * given input files. */
PA_API pa_status pa_report_envelope(const char* command, const char* config_json,
                                    const char* const* input_paths, size_t input_count,
                                    const char* result_json, char** out_json);
PA_API pa_status pa_sha256_file(const char* path, char** out_hex);

#ifdef __cplusplus
}
#endif

#endif
