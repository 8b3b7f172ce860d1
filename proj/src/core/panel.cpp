#include "prefaudit/panel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>
#include <set>
#include <sstream>
#include <tuple>
#include <unordered_map>
#include <unordered_set>

#include "prefaudit/csv.hpp"

namespace prefaudit::panel {

namespace {

const std::vector<std::string>& schema() {
  static const std::vector<std::string> cols = {
      "product_id",     "date",          "organic_visibility", "sponsored_visibility",
      "sales_rank",     "price",         "count_reviews",      "rating_product",
      "rating_seller",  "is_prime",      "is_amazon",          "buybox_seller_id",
      "comparison_group_id", "market"};
  return cols;
}

bool row_less(const Observation& a, const Observation& b) {
  return std::tie(a.product_id, a.date) < std::tie(b.product_id, b.date);
}

// Assigns the named field of `dst` from `src`.
void copy_field(Observation& dst, const Observation& src, std::string_view name,
                const Panel& panel) {
  if (name == kOrganicVisibility) dst.organic_visibility = src.organic_visibility;
  else if (name == kSponsoredVisibility) dst.sponsored_visibility = src.sponsored_visibility;
  else if (name == kSalesRank) dst.sales_rank = src.sales_rank;
  else if (name == kPrice) dst.price = src.price;
  else if (name == kCountReviews) dst.count_reviews = src.count_reviews;
  else if (name == kRatingProduct) dst.rating_product = src.rating_product;
  else if (name == kRatingSeller) dst.rating_seller = src.rating_seller;
  else if (name == kIsPrime) dst.is_prime = src.is_prime;
  else if (name == kIsAmazon) dst.is_amazon = src.is_amazon;
  else if (auto idx = panel.extra_index(name)) dst.extra[*idx] = src.extra[*idx];
  else throw invalid_argument("unknown panel column '" + std::string(name) + "'");
}

}  // namespace

std::optional<std::size_t> Panel::extra_index(std::string_view name) const {
  for (std::size_t i = 0; i < extra_names.size(); ++i)
    if (extra_names[i] == name) return i;
  return std::nullopt;
}

void Panel::add_extra(const std::string& name, std::span<const double> values) {
  if (values.size() != rows.size())
    throw invalid_argument("extra column '" + name + "' has wrong length");
  if (is_numeric_column(*this, name) ||
      std::find(schema().begin(), schema().end(), name) != schema().end())
    throw invalid_argument("column '" + name + "' already exists");
  extra_names.push_back(name);
  for (std::size_t i = 0; i < rows.size(); ++i) rows[i].extra.push_back(values[i]);
}

void Panel::drop_extra(std::string_view name) {
  auto idx = extra_index(name);
  if (!idx) return;
  extra_names.erase(extra_names.begin() + static_cast<std::ptrdiff_t>(*idx));
  for (auto& r : rows) r.extra.erase(r.extra.begin() + static_cast<std::ptrdiff_t>(*idx));
}

bool is_numeric_column(const Panel& panel, std::string_view name) {
  static const std::set<std::string_view> builtin = {
      kOrganicVisibility, kSponsoredVisibility, kSalesRank, kPrice, kCountReviews,
      kRatingProduct,     kRatingSeller,        kIsPrime,   kIsAmazon};
  return builtin.count(name) > 0 || panel.extra_index(name).has_value();
}

std::optional<double> value(const Panel& panel, const Observation& row, std::string_view name) {
  if (name == kOrganicVisibility) return row.organic_visibility;
  if (name == kSponsoredVisibility) return row.sponsored_visibility;
  if (name == kSalesRank) return static_cast<double>(row.sales_rank);
  if (name == kPrice) return row.price;
  if (name == kCountReviews) return static_cast<double>(row.count_reviews);
  if (name == kRatingProduct) return row.rating_product;
  if (name == kRatingSeller) return row.rating_seller;
  if (name == kIsPrime) return row.is_prime ? 1.0 : 0.0;
  if (name == kIsAmazon) return row.is_amazon ? 1.0 : 0.0;
  if (auto idx = panel.extra_index(name)) return row.extra[*idx];
  throw invalid_argument("unknown panel column '" + std::string(name) + "'");
}

void normalize(Panel& panel) {
  std::stable_sort(panel.rows.begin(), panel.rows.end(), row_less);
  panel.gap_products.clear();
  for (std::size_t i = 1; i < panel.rows.size(); ++i) {
    const auto& a = panel.rows[i - 1];
    const auto& b = panel.rows[i];
    if (a.product_id != b.product_id) continue;
    if (a.date == b.date)
      throw ValidationError("duplicate row for product '" + a.product_id + "' on " +
                            format_iso_date(a.date));
    if (b.date != a.date + 1 &&
        (panel.gap_products.empty() || panel.gap_products.back() != a.product_id))
      panel.gap_products.push_back(a.product_id);
  }
  if (panel.window_last < panel.window_first && !panel.rows.empty()) {
    auto [lo, hi] = std::minmax_element(panel.rows.begin(), panel.rows.end(),
                                        [](auto& a, auto& b) { return a.date < b.date; });
    panel.window_first = lo->date;
    panel.window_last = hi->date;
  }
}

namespace {

void check_row(const Observation& r, std::size_t extra_count, std::size_t line,
               std::vector<RowDiagnostic>& diags) {
  if (r.product_id.empty()) diags.push_back({line, "product_id", "empty identifier"});
  if (!(r.organic_visibility >= 0.0) || !std::isfinite(r.organic_visibility))
    diags.push_back({line, "organic_visibility", "must be a non-negative number"});
  if (r.sponsored_visibility && !(*r.sponsored_visibility >= 0.0))
    diags.push_back({line, "sponsored_visibility", "must be non-negative"});
  if (r.sales_rank < 1) diags.push_back({line, "sales_rank", "must be a positive integer"});
  if (!(r.price > 0.0) || !std::isfinite(r.price))
    diags.push_back({line, "price", "must be positive"});
  if (r.count_reviews < 1) diags.push_back({line, "count_reviews", "must be a positive integer"});
  if (!(r.rating_product >= 1.0 && r.rating_product <= 5.0))
    diags.push_back({line, "rating_product", "must lie in [1,5]"});
  if (r.rating_seller && !(*r.rating_seller >= 0.0 && *r.rating_seller <= 100.0))
    diags.push_back({line, "rating_seller", "must lie in [0,100]"});
  if (r.extra.size() != extra_count) diags.push_back({line, "", "extra column count mismatch"});
}

}  // namespace

void validate(const Panel& panel, std::size_t first_line) {
  std::vector<RowDiagnostic> diags;
  for (std::size_t i = 0; i < panel.rows.size(); ++i)
    check_row(panel.rows[i], panel.extra_names.size(), first_line + i, diags);
  if (!diags.empty()) throw ValidationError("panel validation failed", std::move(diags));
}

// ---------------------------------------------------------------------------
// CSV

Panel parse_csv(std::string_view text, double currency_rate) {
  if (!(currency_rate > 0.0) || !std::isfinite(currency_rate))
    throw invalid_argument("currency rate must be positive");
  const auto table = csv::Table::parse(text);
  table.require_columns(schema());

  std::vector<std::size_t> col;
  for (const auto& name : schema()) col.push_back(*table.column(name));
  std::vector<std::size_t> extra_cols;
  Panel panel;
  for (std::size_t c = 0; c < table.header().size(); ++c) {
    const auto& h = table.header()[c];
    if (std::find(schema().begin(), schema().end(), h) == schema().end()) {
      extra_cols.push_back(c);
      panel.extra_names.push_back(h);
    }
  }

  std::vector<RowDiagnostic> diags;
  panel.rows.reserve(table.rows());
  for (std::size_t i = 0; i < table.rows(); ++i) {
    const auto& f = table.row(i);
    const std::size_t line = table.line_of(i);
    auto bad = [&](const char* column, const char* msg) { diags.push_back({line, column, msg}); };
    Observation r;
    r.product_id = f[col[0]];
    try {
      r.date = parse_iso_date(f[col[1]]);
    } catch (const Error&) {
      bad("date", "not an ISO-8601 date");
    }
    if (auto v = csv::to_double(f[col[2]])) r.organic_visibility = *v;
    else bad("organic_visibility", "not a number");
    if (!f[col[3]].empty()) {
      if (auto v = csv::to_double(f[col[3]])) r.sponsored_visibility = *v;
      else bad("sponsored_visibility", "not a number");
    }
    if (auto v = csv::to_int(f[col[4]])) r.sales_rank = *v;
    else bad("sales_rank", "not an integer");
    if (auto v = csv::to_double(f[col[5]])) r.price = *v * currency_rate;
    else bad("price", "not a number");
    if (auto v = csv::to_int(f[col[6]])) r.count_reviews = *v;
    else bad("count_reviews", "not an integer");
    if (auto v = csv::to_double(f[col[7]])) r.rating_product = *v;
    else bad("rating_product", "not a number");
    if (!f[col[8]].empty()) {
      if (auto v = csv::to_double(f[col[8]])) r.rating_seller = *v;
      else bad("rating_seller", "not a number");
    }
    auto flag = [&](std::size_t c, const char* name, bool& out) {
      if (f[c] == "1") out = true;
      else if (f[c] == "0") out = false;
      else bad(name, "boolean must be 0 or 1");
    };
    flag(col[9], "is_prime", r.is_prime);
    flag(col[10], "is_amazon", r.is_amazon);
    r.buybox_seller_id = f[col[11]];
    r.comparison_group_id = f[col[12]];
    r.market = f[col[13]];
    for (std::size_t c : extra_cols) {
      if (auto v = csv::to_double(f[c])) r.extra.push_back(*v);
      else {
        diags.push_back({line, table.header()[c], "not a number"});
        r.extra.push_back(0.0);
      }
    }
    panel.rows.push_back(std::move(r));
  }
  if (!diags.empty()) throw ValidationError("panel file failed to parse", std::move(diags));

  // Bound checks report file lines, so run them before sorting.
  for (std::size_t i = 0; i < panel.rows.size(); ++i)
    check_row(panel.rows[i], panel.extra_names.size(), table.line_of(i), diags);
  if (!diags.empty()) throw ValidationError("panel validation failed", std::move(diags));
  normalize(panel);
  return panel;
}

Panel ingest_observations(const std::string& path, double currency_rate) {
  return parse_csv(read_file(path), currency_rate);
}

std::string to_csv(const Panel& panel) {
  std::ostringstream os;
  for (std::size_t i = 0; i < schema().size(); ++i) os << (i ? "," : "") << schema()[i];
  for (const auto& e : panel.extra_names) os << ',' << csv::escape(e);
  os << '\n';
  for (const auto& r : panel.rows) {
    os << csv::escape(r.product_id) << ',' << format_iso_date(r.date) << ','
       << csv::format_double(r.organic_visibility) << ','
       << (r.sponsored_visibility ? csv::format_double(*r.sponsored_visibility) : "") << ','
       << r.sales_rank << ',' << csv::format_double(r.price) << ',' << r.count_reviews << ','
       << csv::format_double(r.rating_product) << ','
       << (r.rating_seller ? csv::format_double(*r.rating_seller) : "") << ','
       << (r.is_prime ? '1' : '0') << ',' << (r.is_amazon ? '1' : '0') << ','
       << csv::escape(r.buybox_seller_id) << ',' << csv::escape(r.comparison_group_id) << ','
       << csv::escape(r.market);
    for (double v : r.extra) os << ',' << csv::format_double(v);
    os << '\n';
  }
  return os.str();
}

// ---------------------------------------------------------------------------
// Lagging

Panel lag_covariates(const Panel& panel, int lag_days, std::string_view outcome) {
  if (lag_days < 0) throw invalid_argument("lag must be non-negative");
  if (!is_numeric_column(panel, outcome))
    throw invalid_argument("unknown outcome column '" + std::string(outcome) + "'");
  if (panel.lag && panel.lag->outcome != outcome)
    throw PreconditionError("panel already lagged around outcome '" + panel.lag->outcome + "'");

  Panel out;
  out.extra_names = panel.extra_names;
  out.window_first = panel.window_first;
  out.window_last = panel.window_last;
  out.lag = LagInfo{lag_days + (panel.lag ? panel.lag->days : 0), std::string(outcome)};
  if (lag_days == 0) {
    out.rows = panel.rows;
    out.gap_products = panel.gap_products;
    return out;
  }

  out.rows.reserve(panel.rows.size());
  const auto& rows = panel.rows;
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    while (end < rows.size() && rows[end].product_id == rows[begin].product_id) ++end;
    for (std::size_t i = begin; i < end; ++i) {
      const Day want = rows[i].date - lag_days;
      auto it = std::lower_bound(rows.begin() + static_cast<std::ptrdiff_t>(begin),
                                 rows.begin() + static_cast<std::ptrdiff_t>(i), want,
                                 [](const Observation& o, Day d) { return o.date < d; });
      if (it == rows.begin() + static_cast<std::ptrdiff_t>(i) || it->date != want) continue;
      Observation lagged = *it;
      lagged.date = rows[i].date;
      copy_field(lagged, rows[i], outcome, panel);
      out.rows.push_back(std::move(lagged));
    }
    begin = end;
  }
  normalize(out);
  return out;
}

// ---------------------------------------------------------------------------
// Sample selection

void validate(const SampleFilter& filter) {
  if (!(filter.sales_rank_min <= filter.sales_rank_max))
    throw invalid_argument("sales rank range has min > max");
  if (!(filter.availability_min_share >= 0.0 && filter.availability_min_share <= 1.0))
    throw invalid_argument("availability share must lie in [0,1]");
}

std::vector<ProductProfile> profile_products(const Panel& panel) {
  std::vector<ProductProfile> out;
  const double window = static_cast<double>(panel.window_days());
  const auto& rows = panel.rows;
  for (std::size_t begin = 0; begin < rows.size();) {
    std::size_t end = begin;
    ProductProfile p;
    p.product_id = rows[begin].product_id;
    p.first_seen = rows[begin].date;
    std::set<std::string> sellers;
    double rank_sum = 0.0;
    std::size_t in_window = 0;
    for (; end < rows.size() && rows[end].product_id == p.product_id; ++end) {
      const auto& r = rows[end];
      ++p.days_present;
      rank_sum += static_cast<double>(r.sales_rank);
      if (r.date >= panel.window_first && r.date <= panel.window_last) ++in_window;
      if (!r.buybox_seller_id.empty()) sellers.insert(r.buybox_seller_id);
      p.always_platform = p.always_platform && r.is_amazon;
      p.never_platform = p.never_platform && !r.is_amazon;
    }
    p.mean_sales_rank = rank_sum / static_cast<double>(p.days_present);
    p.availability = window > 0 ? static_cast<double>(in_window) / window : 0.0;
    p.distinct_sellers = sellers.size();
    out.push_back(std::move(p));
    begin = end;
  }
  return out;
}

Panel filter_sample(const Panel& panel, const SampleFilter& filter,
                    const std::map<std::string, Day>* first_listed) {
  validate(filter);
  std::unordered_set<std::string> keep;
  for (const auto& p : profile_products(panel)) {
    if (p.mean_sales_rank < filter.sales_rank_min || p.mean_sales_rank > filter.sales_rank_max)
      continue;
    if (p.availability < filter.availability_min_share) continue;
    if (filter.first_listed_before) {
      Day listed = p.first_seen;
      if (first_listed) {
        auto it = first_listed->find(p.product_id);
        if (it != first_listed->end()) listed = it->second;
      }
      if (!(listed < *filter.first_listed_before)) continue;
    }
    if (filter.require_buybox_variation && p.distinct_sellers < 2) continue;
    keep.insert(p.product_id);
  }
  Panel out;
  out.extra_names = panel.extra_names;
  out.lag = panel.lag;
  out.window_first = panel.window_first;
  out.window_last = panel.window_last;
  for (const auto& r : panel.rows)
    if (keep.count(r.product_id)) out.rows.push_back(r);
  for (const auto& g : panel.gap_products)
    if (keep.count(g)) out.gap_products.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Comparison groups

namespace {

// Unbiased draw in [0, n) from a 64-bit Mersenne Twister.
std::size_t bounded(std::mt19937_64& rng, std::size_t n) {
  const std::uint64_t limit = UINT64_MAX - (UINT64_MAX % n);
  std::uint64_t x;
  do {
    x = rng();
  } while (x >= limit);
  return static_cast<std::size_t>(x % n);
}

std::uint64_t fnv1a(std::string_view s) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : s) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

}  // namespace

GroupBuild build_comparison_groups(
    const std::vector<PlatformProduct>& platform_products,
    const std::map<std::string, std::vector<std::string>>& candidates_by_category,
    std::size_t max_substitutes, std::uint64_t seed) {
  if (max_substitutes == 0) throw invalid_argument("max_substitutes must be positive");
  std::vector<PlatformProduct> platforms = platform_products;
  std::sort(platforms.begin(), platforms.end(),
            [](auto& a, auto& b) { return a.product_id < b.product_id; });
  for (std::size_t i = 1; i < platforms.size(); ++i)
    if (platforms[i].product_id == platforms[i - 1].product_id)
      throw invalid_argument("platform product '" + platforms[i].product_id + "' listed twice");

  std::set<std::string> platform_ids;
  for (const auto& p : platforms) platform_ids.insert(p.product_id);

  // Pool per category: sorted, de-duplicated, platform products removed.
  std::map<std::string, std::vector<std::string>> pool;
  for (const auto& [cat, cands] : candidates_by_category) {
    std::set<std::string> uniq(cands.begin(), cands.end());
    auto& v = pool[cat];
    for (const auto& c : uniq)
      if (!platform_ids.count(c)) v.push_back(c);
  }

  GroupBuild out;
  for (const auto& p : platforms) {
    auto it = pool.find(p.category);
    if (it == pool.end() || it->second.empty()) {
      out.warnings.push_back("platform product '" + p.product_id +
                             "' has no substitutes in category '" + p.category +
                             "'; group omitted");
      continue;
    }
    auto& avail = it->second;
    ComparisonGroup g;
    g.group_id = "G-" + p.product_id;
    g.platform_product_id = p.product_id;
    if (avail.size() <= max_substitutes) {
      g.substitute_product_ids = avail;
      avail.clear();
    } else {
      std::mt19937_64 rng(mix_seed(seed, fnv1a(p.product_id)));
      // Partial Fisher-Yates over a copy; chosen entries move to the front.
      std::vector<std::string> work = avail;
      for (std::size_t k = 0; k < max_substitutes; ++k) {
        const std::size_t j = k + bounded(rng, work.size() - k);
        std::swap(work[k], work[j]);
      }
      g.substitute_product_ids.assign(work.begin(),
                                      work.begin() + static_cast<std::ptrdiff_t>(max_substitutes));
      std::set<std::string> chosen(g.substitute_product_ids.begin(), g.substitute_product_ids.end());
      std::erase_if(avail, [&](const std::string& s) { return chosen.count(s) > 0; });
    }
    std::sort(g.substitute_product_ids.begin(), g.substitute_product_ids.end());
    out.groups.push_back(std::move(g));
  }
  return out;
}

std::vector<std::string> single_third_party_seller_products(const Panel& panel) {
  std::vector<std::string> out;
  for (const auto& p : profile_products(panel))
    if (p.never_platform && p.distinct_sellers == 1) out.push_back(p.product_id);
  return out;
}

Panel assign_groups(const Panel& panel, const std::vector<ComparisonGroup>& groups) {
  std::unordered_map<std::string, std::string> group_of;
  for (const auto& g : groups) {
    auto put = [&](const std::string& id) {
      if (!group_of.emplace(id, g.group_id).second)
        throw invalid_argument("product '" + id + "' appears in two comparison groups");
    };
    put(g.platform_product_id);
    for (const auto& s : g.substitute_product_ids) put(s);
  }
  Panel out;
  out.extra_names = panel.extra_names;
  out.lag = panel.lag;
  out.window_first = panel.window_first;
  out.window_last = panel.window_last;
  for (const auto& r : panel.rows) {
    auto it = group_of.find(r.product_id);
    if (it == group_of.end()) continue;
    Observation o = r;
    o.comparison_group_id = it->second;
    out.rows.push_back(std::move(o));
  }
  for (const auto& g : panel.gap_products)
    if (group_of.count(g)) out.gap_products.push_back(g);
  return out;
}

// ---------------------------------------------------------------------------
// Pooling

Panel pool_samples(std::span<const LabeledPanel> panels) {
  if (panels.empty()) throw invalid_argument("nothing to pool");
  Panel out;
  out.extra_names = panels[0].panel->extra_names;
  out.lag = panels[0].panel->lag;
  out.window_first = panels[0].panel->window_first;
  out.window_last = panels[0].panel->window_last;
  std::unordered_map<std::string, std::size_t> owner;
  for (std::size_t p = 0; p < panels.size(); ++p) {
    const Panel& src = *panels[p].panel;
    if (src.extra_names != out.extra_names)
      throw invalid_argument("pooled panels carry different extra columns");
    const bool same_lag = (!src.lag && !out.lag) ||
                          (src.lag && out.lag && src.lag->days == out.lag->days &&
                           src.lag->outcome == out.lag->outcome);
    if (!same_lag) throw invalid_argument("pooled panels were lagged differently");
    if (src.window_last >= src.window_first) {
      out.window_first = std::min(out.window_first, src.window_first);
      out.window_last = std::max(out.window_last, src.window_last);
    }
    for (const auto& r : src.rows) {
      auto [it, inserted] = owner.emplace(r.product_id, p);
      if (!inserted && it->second != p)
        throw invalid_argument("product id '" + r.product_id +
                               "' occurs in more than one pooled sample; prefix ids by market");
      Observation o = r;
      if (o.market.empty()) o.market = panels[p].market;
      out.rows.push_back(std::move(o));
    }
  }
  normalize(out);
  return out;
}

Panel impute_platform_seller_rating(const Panel& panel, double rating) {
  if (!(rating >= 0.0 && rating <= 100.0))
    throw invalid_argument("seller rating must lie in [0,100]");
  Panel out = panel;
  for (auto& r : out.rows)
    if (r.is_amazon) r.rating_seller = rating;
  return out;
}

// ---------------------------------------------------------------------------
// Summary statistics

double quantile_type7(std::span<const double> sorted, double p) {
  if (sorted.empty()) throw invalid_argument("quantile of empty data");
  if (!(p >= 0.0 && p <= 1.0)) throw invalid_argument("quantile probability outside [0,1]");
  const double h = (static_cast<double>(sorted.size()) - 1.0) * p;
  const auto lo = static_cast<std::size_t>(std::floor(h));
  const std::size_t hi = std::min(lo + 1, sorted.size() - 1);
  return sorted[lo] + (h - static_cast<double>(lo)) * (sorted[hi] - sorted[lo]);
}

std::vector<SummaryRow> summary_stats(const Panel& panel) {
  if (panel.empty()) throw invalid_argument("summary of empty panel");
  static const std::vector<std::string_view> vars = {
      kOrganicVisibility, kSalesRank,    kPrice,   kCountReviews,
      kRatingProduct,     kRatingSeller, kIsPrime};
  std::vector<SummaryRow> out;
  for (auto var : vars) {
    for (const char* group : {"third_party", "amazon", "all"}) {
      std::vector<double> xs;
      for (const auto& r : panel.rows) {
        if (std::string_view(group) == "third_party" && r.is_amazon) continue;
        if (std::string_view(group) == "amazon" && !r.is_amazon) continue;
        if (auto v = value(panel, r, var)) xs.push_back(*v);
      }
      SummaryRow s;
      s.variable = std::string(var);
      s.group = group;
      s.n = xs.size();
      if (xs.empty()) {
        const double nan = std::nan("");
        s.min = s.q1 = s.median = s.mean = s.q3 = s.max = s.sd = nan;
        out.push_back(s);
        continue;
      }
      std::sort(xs.begin(), xs.end());
      s.min = xs.front();
      s.max = xs.back();
      s.q1 = quantile_type7(xs, 0.25);
      s.median = quantile_type7(xs, 0.5);
      s.q3 = quantile_type7(xs, 0.75);
      double sum = 0.0;
      for (double x : xs) sum += x;
      s.mean = sum / static_cast<double>(xs.size());
      double ss = 0.0;
      for (double x : xs) ss += (x - s.mean) * (x - s.mean);
      s.sd = xs.size() > 1 ? std::sqrt(ss / static_cast<double>(xs.size() - 1)) : 0.0;
      out.push_back(s);
    }
  }
  return out;
}

std::string summary_to_csv(const std::vector<SummaryRow>& rows) {
  std::ostringstream os;
  os << "variable,group,n,min,q1,median,mean,q3,max,sd\n";
  for (const auto& s : rows)
    os << s.variable << ',' << s.group << ',' << s.n << ',' << csv::format_double(s.min) << ','
       << csv::format_double(s.q1) << ',' << csv::format_double(s.median) << ','
       << csv::format_double(s.mean) << ',' << csv::format_double(s.q3) << ','
       << csv::format_double(s.max) << ',' << csv::format_double(s.sd) << '\n';
  return os.str();
}

std::string sample_digest(const Panel& panel) {
  std::string keys;
  keys.reserve(panel.rows.size() * 24);
  for (const auto& r : panel.rows) {
    keys += r.product_id;
    keys.push_back('\x1f');
    keys += std::to_string(r.date);
    keys.push_back('\n');
  }
  return sha256_hex(keys);
}

std::size_t count_products(const Panel& panel) {
  std::size_t n = 0;
  for (std::size_t i = 0; i < panel.rows.size(); ++i)
    if (i == 0 || panel.rows[i].product_id != panel.rows[i - 1].product_id) ++n;
  return n;
}

}  // namespace prefaudit::panel
