#pragma once

// Daily product-level panel: ingestion, validation, lagging, sample
// selection, comparison groups, pooling and descriptive statistics.

#include <cstdint>
#include <map>
#include <optional>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "prefaudit/common.hpp"

namespace prefaudit::panel {

struct Observation {
  std::string product_id;
  Day date = 0;
  double organic_visibility = 0.0;
  std::optional<double> sponsored_visibility;
  std::int64_t sales_rank = 1;
  double price = 1.0;  // currency-normalized, shipping included
  std::int64_t count_reviews = 1;
  double rating_product = 5.0;        // [1,5]
  std::optional<double> rating_seller;  // [0,100]; may be absent for platform rows
  bool is_prime = false;
  bool is_amazon = false;
  std::string buybox_seller_id;
  std::string comparison_group_id;
  std::string market;
  std::vector<double> extra;  // values of Panel::extra_names, same order
};

struct LagInfo {
  int days = 0;
  std::string outcome;  // the column left unshifted
};

struct Panel {
  std::vector<Observation> rows;  // sorted by (product_id, date)
  std::vector<std::string> extra_names;
  std::optional<LagInfo> lag;
  // Observation window used for availability shares; survives filtering.
  Day window_first = 0;
  Day window_last = -1;
  // Products whose dates are not contiguous.
  std::vector<std::string> gap_products;

  bool empty() const { return rows.empty(); }
  std::size_t size() const { return rows.size(); }
  std::size_t window_days() const {
    return window_last >= window_first ? static_cast<std::size_t>(window_last - window_first + 1) : 0;
  }
  std::optional<std::size_t> extra_index(std::string_view name) const;
  // Appends a numeric column; `values` aligned with rows.
  void add_extra(const std::string& name, std::span<const double> values);
  void drop_extra(std::string_view name);
};

// Column names understood by value(); extras are addressed by their own name.
inline constexpr std::string_view kOrganicVisibility = "organic_visibility";
inline constexpr std::string_view kSponsoredVisibility = "sponsored_visibility";
inline constexpr std::string_view kSalesRank = "sales_rank";
inline constexpr std::string_view kPrice = "price";
inline constexpr std::string_view kCountReviews = "count_reviews";
inline constexpr std::string_view kRatingProduct = "rating_product";
inline constexpr std::string_view kRatingSeller = "rating_seller";
inline constexpr std::string_view kIsPrime = "is_prime";
inline constexpr std::string_view kIsAmazon = "is_amazon";

bool is_numeric_column(const Panel& panel, std::string_view name);
// Numeric value of a column; nullopt for an absent optional. Throws for an
// unknown column name.
std::optional<double> value(const Panel& panel, const Observation& row, std::string_view name);

// Sorts rows, rejects duplicate (product, date) keys, recomputes gap
// bookkeeping and, when unset, the observation window.
void normalize(Panel& panel);

// Per-row bounds checks; throws ValidationError with one diagnostic per
// violation. `first_line` is the file line of row 0 (for messages).
void validate(const Panel& panel, std::size_t first_line = 2);

// CSV with the schema header plus any extra numeric columns. Every price is
// multiplied by `currency_rate`.
Panel parse_csv(std::string_view text, double currency_rate = 1.0);
Panel ingest_observations(const std::string& path, double currency_rate = 1.0);
std::string to_csv(const Panel& panel);

// Replaces every covariate at day t by its value at t - lag_days for the
// same product and drops rows without that predecessor. `outcome` names the
// column that stays at day t.
Panel lag_covariates(const Panel& panel, int lag_days,
                     std::string_view outcome = kOrganicVisibility);

struct SampleFilter {
  double sales_rank_min = 1.0;
  double sales_rank_max = 1e18;
  double availability_min_share = 0.0;
  std::optional<Day> first_listed_before;
  bool require_buybox_variation = false;
};

void validate(const SampleFilter& filter);

struct ProductProfile {
  std::string product_id;
  std::size_t days_present = 0;
  double mean_sales_rank = 0.0;  // over days present
  double availability = 0.0;     // days present / window days
  std::size_t distinct_sellers = 0;
  Day first_seen = 0;
  bool always_platform = true;
  bool never_platform = true;
};

std::vector<ProductProfile> profile_products(const Panel& panel);

// Keeps whole products that meet every criterion. First-listing dates come
// from `first_listed` when given, otherwise the product's first day in the
// panel.
Panel filter_sample(const Panel& panel, const SampleFilter& filter,
                    const std::map<std::string, Day>* first_listed = nullptr);

struct ComparisonGroup {
  std::string group_id;
  std::string platform_product_id;
  std::vector<std::string> substitute_product_ids;
};

struct PlatformProduct {
  std::string product_id;
  std::string category;  // narrowest category key
};

struct GroupBuild {
  std::vector<ComparisonGroup> groups;  // ordered by platform product id
  std::vector<std::string> warnings;
};

// One group per platform product from candidates in its narrowest category.
// When a category holds more candidates than `max_substitutes`, a seeded
// uniform sample is drawn. Candidates are consumed so no product joins two
// groups; platform products are served in id order.
GroupBuild build_comparison_groups(
    const std::vector<PlatformProduct>& platform_products,
    const std::map<std::string, std::vector<std::string>>& candidates_by_category,
    std::size_t max_substitutes, std::uint64_t seed);

// Products served by exactly one non-platform buy-box seller over the panel.
std::vector<std::string> single_third_party_seller_products(const Panel& panel);

// Writes comparison_group_id and keeps only grouped products.
Panel assign_groups(const Panel& panel, const std::vector<ComparisonGroup>& groups);

struct LabeledPanel {
  std::string market;
  const Panel* panel = nullptr;
};

// Concatenates panels with disjoint product ids. Rows without a market get
// the panel's label.
Panel pool_samples(std::span<const LabeledPanel> panels);

// Platform seller rating assigned to every platform-held row.
Panel impute_platform_seller_rating(const Panel& panel, double rating);

struct SummaryRow {
  std::string variable;
  std::string group;  // "third_party", "amazon" or "all"
  std::size_t n = 0;
  double min = 0, q1 = 0, median = 0, mean = 0, q3 = 0, max = 0, sd = 0;
};

// Type-7 quantile of already sorted data.
double quantile_type7(std::span<const double> sorted, double p);

std::vector<SummaryRow> summary_stats(const Panel& panel);
std::string summary_to_csv(const std::vector<SummaryRow>& rows);

// Digest of the (product, date) key set.
std::string sample_digest(const Panel& panel);

std::size_t count_products(const Panel& panel);

}  // namespace prefaudit::panel
