#pragma once

// Sensitivity analyses around the COO test: buy-box changes, the
// platform-to-substitute visibility ratio of comparison groups, and the
// seller rating assumed for the platform.

#include <limits>
#include <optional>
#include <string>
#include <vector>

#include "prefaudit/fe_glm.hpp"
#include "prefaudit/panel.hpp"
#include "prefaudit/sp_tests.hpp"

namespace prefaudit::robust {

struct VariantReport {
  std::string analysis;  // "buybox_change", "ratio_cutoff", "seller_rating"
  std::string variant;
  std::optional<sp::TestReport> report;  // empty: no estimable sample
  double share_dropped = 0.0;
  std::size_t rows_excluded = 0;
  std::string note;
};

inline constexpr const char* kChangeToday = "buybox_change_t";
inline constexpr const char* kChangeYesterday = "buybox_change_t1";

// Per row of `raw`: 1 when the buy-box seller differs from the seller on the
// previous calendar day, 0 otherwise or when that day is missing.
std::vector<double> buybox_change_indicator(const panel::Panel& raw);

// `raw` is the unlagged panel; the function lags it around the spec's
// outcome. The change indicators refer to the visibility day t. Returns
// original, add_t, add_t_t1, exclude_t, exclude_t_t1 in that order. An
// indicator that is zero on the estimation sample is not added (the fit would
// be singular); the variant then equals the original.
std::vector<VariantReport> buybox_change_sensitivity(const panel::Panel& raw,
                                                     const fe::ModelSpec& spec, int lag_days = 1);

struct GroupRatio {
  std::string group_id;
  double platform_mean = 0.0;
  double substitute_mean = 0.0;
  double ratio = 1.0;  // max(r, 1/r); +inf when exactly one side is zero
};

// Window-mean organic visibility per product, then the platform product's
// mean against the arithmetic mean of the substitutes' means.
std::vector<GroupRatio> group_visibility_ratios(const panel::Panel& panel);

// Drops groups whose ratio exceeds `cutoff`.
panel::Panel filter_by_ratio(const panel::Panel& panel, double cutoff, double* share_dropped = nullptr);

// One report per cutoff; infinity is allowed. A cutoff that leaves too few
// groups to estimate yields an entry without report.
std::vector<VariantReport> ratio_cutoff_sensitivity(const panel::Panel& lagged,
                                                    const fe::ModelSpec& spec,
                                                    const std::vector<double>& cutoffs);

// nullopt stands for "omit the seller rating regressor".
std::vector<VariantReport> seller_rating_sensitivity(
    const panel::Panel& lagged, const fe::ModelSpec& spec,
    const std::vector<std::optional<double>>& imputations);

std::vector<std::optional<double>> default_imputations();
std::vector<double> default_cutoffs();  // 1..30

// analysis,variant,delta,se,ci_low,ci_high,share_dropped (log scale).
std::string sensitivity_csv(const std::vector<VariantReport>& reports);

}  // namespace prefaudit::robust
