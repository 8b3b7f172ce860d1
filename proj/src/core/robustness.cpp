#include "prefaudit/robustness.hpp"

#include <algorithm>
#include <cmath>
#include <map>
#include <sstream>

#include "prefaudit/csv.hpp"

namespace prefaudit::robust {

std::vector<double> buybox_change_indicator(const panel::Panel& raw) {
  std::vector<double> out(raw.rows.size(), 0.0);
  for (std::size_t i = 1; i < raw.rows.size(); ++i) {
    const auto& cur = raw.rows[i];
    const auto& prev = raw.rows[i - 1];
    if (prev.product_id == cur.product_id && prev.date + 1 == cur.date &&
        prev.buybox_seller_id != cur.buybox_seller_id)
      out[i] = 1.0;
  }
  return out;
}

namespace {

std::optional<sp::TestReport> try_coo(const panel::Panel& p, const fe::ModelSpec& spec,
                                      std::string& note) {
  if (p.rows.empty()) {
    note = "no rows left";
    return std::nullopt;
  }
  try {
    return sp::coo_test(p, spec);
  } catch (const PreconditionError& e) {
    note = e.what();
  } catch (const NumericalError& e) {
    note = e.what();
  }
  return std::nullopt;
}

panel::Panel keep_rows(const panel::Panel& p, const std::vector<char>& keep) {
  panel::Panel out;
  out.extra_names = p.extra_names;
  out.lag = p.lag;
  out.window_first = p.window_first;
  out.window_last = p.window_last;
  for (std::size_t i = 0; i < p.rows.size(); ++i)
    if (keep[i]) out.rows.push_back(p.rows[i]);
  panel::normalize(out);
  return out;
}

bool any_nonzero(const panel::Panel& p, std::size_t extra) {
  return std::any_of(p.rows.begin(), p.rows.end(),
                     [&](const panel::Observation& o) { return o.extra[extra] != 0.0; });
}

}  // namespace

std::vector<VariantReport> buybox_change_sensitivity(const panel::Panel& raw,
                                                     const fe::ModelSpec& spec, int lag_days) {
  for (const auto& r : raw.rows)
    if (r.buybox_seller_id.empty())
      throw PreconditionError("buy-box seller id missing for product '" + r.product_id + "' on " +
                              format_iso_date(r.date));
  if (raw.lag) throw PreconditionError("buy-box change analysis needs the unlagged panel");
  if (lag_days < 1) throw invalid_argument("lag must be at least one day");

  const auto change = buybox_change_indicator(raw);
  std::vector<double> change_prev(raw.rows.size(), 0.0);
  for (std::size_t i = 1; i < raw.rows.size(); ++i)
    if (raw.rows[i - 1].product_id == raw.rows[i].product_id &&
        raw.rows[i - 1].date + 1 == raw.rows[i].date)
      change_prev[i] = change[i - 1];

  panel::Panel lagged = panel::lag_covariates(raw, lag_days, spec.outcome);
  // Attach day-t indicators to the lagged rows (both panels are sorted).
  std::vector<double> ct(lagged.rows.size()), ct1(lagged.rows.size());
  {
    std::size_t j = 0;
    for (std::size_t i = 0; i < lagged.rows.size(); ++i) {
      const auto& key = lagged.rows[i];
      while (j < raw.rows.size() &&
             (raw.rows[j].product_id < key.product_id ||
              (raw.rows[j].product_id == key.product_id && raw.rows[j].date < key.date)))
        ++j;
      if (j == raw.rows.size() || raw.rows[j].product_id != key.product_id ||
          raw.rows[j].date != key.date)
        throw Error(ErrorKind::Internal, "lagged row without raw counterpart");
      ct[i] = change[j];
      ct1[i] = change_prev[j];
    }
  }
  lagged.add_extra(kChangeToday, ct);
  lagged.add_extra(kChangeYesterday, ct1);
  const std::size_t it = *lagged.extra_index(kChangeToday);
  const std::size_t it1 = *lagged.extra_index(kChangeYesterday);

  std::vector<VariantReport> out;
  auto push = [&](std::string variant, const panel::Panel& p, const fe::ModelSpec& s,
                  std::size_t excluded, std::string note) {
    VariantReport v;
    v.analysis = "buybox_change";
    v.variant = std::move(variant);
    std::string fail;
    v.report = try_coo(p, s, fail);
    v.rows_excluded = excluded;
    v.note = fail.empty() ? std::move(note) : fail;
    out.push_back(std::move(v));
  };

  push("original", lagged, spec, 0, "");

  {
    fe::ModelSpec s = spec;
    std::string note;
    if (any_nonzero(lagged, it)) s.covariates.push_back({kChangeToday, fe::Transform::Identity});
    else note = "no buy-box changes; indicator omitted";
    push("add_t", lagged, s, 0, note);
  }
  {
    fe::ModelSpec s = spec;
    std::string note;
    if (any_nonzero(lagged, it)) s.covariates.push_back({kChangeToday, fe::Transform::Identity});
    else note = "indicator at t omitted (all zero)";
    if (any_nonzero(lagged, it1)) s.covariates.push_back({kChangeYesterday, fe::Transform::Identity});
    else note += std::string(note.empty() ? "" : "; ") + "indicator at t-1 omitted (all zero)";
    push("add_t_t1", lagged, s, 0, note);
  }
  {
    std::vector<char> keep(lagged.rows.size());
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      keep[i] = lagged.rows[i].extra[it] == 0.0;
      excluded += !keep[i];
    }
    push("exclude_t", keep_rows(lagged, keep), spec, excluded, "");
  }
  {
    std::vector<char> keep(lagged.rows.size());
    std::size_t excluded = 0;
    for (std::size_t i = 0; i < keep.size(); ++i) {
      keep[i] = lagged.rows[i].extra[it] == 0.0 && lagged.rows[i].extra[it1] == 0.0;
      excluded += !keep[i];
    }
    push("exclude_t_t1", keep_rows(lagged, keep), spec, excluded, "");
  }
  return out;
}

std::vector<GroupRatio> group_visibility_ratios(const panel::Panel& p) {
  struct Acc {
    double sum = 0;
    std::size_t n = 0;
    bool platform = false;
    std::string group;
  };
  std::map<std::string, Acc> products;
  for (const auto& r : p.rows) {
    if (r.comparison_group_id.empty())
      throw PreconditionError("product '" + r.product_id + "' has no comparison_group_id");
    auto& a = products[r.product_id];
    if (!a.group.empty() && a.group != r.comparison_group_id)
      throw PreconditionError("product '" + r.product_id + "' appears in two comparison groups");
    a.group = r.comparison_group_id;
    a.sum += r.organic_visibility;
    ++a.n;
    a.platform = a.platform || r.is_amazon;
  }
  struct G {
    double plat_sum = 0, sub_sum = 0;
    std::size_t plat_n = 0, sub_n = 0;
  };
  std::map<std::string, G> groups;
  for (const auto& [pid, a] : products) {
    auto& g = groups[a.group];
    const double mean = a.sum / static_cast<double>(a.n);
    if (a.platform) {
      g.plat_sum += mean;
      ++g.plat_n;
    } else {
      g.sub_sum += mean;
      ++g.sub_n;
    }
  }
  std::vector<GroupRatio> out;
  for (const auto& [gid, g] : groups) {
    GroupRatio r;
    r.group_id = gid;
    r.platform_mean = g.plat_n ? g.plat_sum / static_cast<double>(g.plat_n) : 0.0;
    r.substitute_mean = g.sub_n ? g.sub_sum / static_cast<double>(g.sub_n) : 0.0;
    if (r.platform_mean == 0.0 && r.substitute_mean == 0.0) r.ratio = 1.0;
    else if (r.platform_mean == 0.0 || r.substitute_mean == 0.0)
      r.ratio = std::numeric_limits<double>::infinity();
    else {
      const double x = r.platform_mean / r.substitute_mean;
      r.ratio = std::max(x, 1.0 / x);
    }
    out.push_back(r);
  }
  return out;
}

panel::Panel filter_by_ratio(const panel::Panel& p, double cutoff, double* share_dropped) {
  if (!(cutoff >= 1.0)) throw invalid_argument("ratio cutoff must be at least 1");
  const auto ratios = group_visibility_ratios(p);
  std::map<std::string, bool> keep_group;
  std::size_t dropped = 0;
  for (const auto& r : ratios) {
    const bool keep = !(r.ratio > cutoff);
    keep_group[r.group_id] = keep;
    dropped += !keep;
  }
  if (share_dropped)
    *share_dropped = ratios.empty() ? 0.0 : static_cast<double>(dropped) / static_cast<double>(ratios.size());
  std::vector<char> keep(p.rows.size());
  for (std::size_t i = 0; i < keep.size(); ++i) keep[i] = keep_group[p.rows[i].comparison_group_id];
  return keep_rows(p, keep);
}

std::vector<VariantReport> ratio_cutoff_sensitivity(const panel::Panel& lagged,
                                                    const fe::ModelSpec& spec,
                                                    const std::vector<double>& cutoffs) {
  if (cutoffs.empty()) throw invalid_argument("no ratio cutoffs given");
  std::vector<VariantReport> out;
  for (double x : cutoffs) {
    VariantReport v;
    v.analysis = "ratio_cutoff";
    v.variant = std::isinf(x) ? "inf" : csv::format_double(x);
    const auto kept = filter_by_ratio(lagged, x, &v.share_dropped);
    v.rows_excluded = lagged.rows.size() - kept.rows.size();
    if (kept.rows.empty()) v.note = "all groups dropped";
    else v.report = try_coo(kept, spec, v.note);
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<VariantReport> seller_rating_sensitivity(
    const panel::Panel& lagged, const fe::ModelSpec& spec,
    const std::vector<std::optional<double>>& imputations) {
  std::vector<VariantReport> out;
  for (const auto& level : imputations) {
    VariantReport v;
    v.analysis = "seller_rating";
    fe::ModelSpec s = spec;
    if (!level) {
      v.variant = "none";
      s.drop_covariate(panel::kRatingSeller);
      v.report = sp::coo_test(lagged, s);
    } else {
      if (!(*level >= 0.0 && *level <= 100.0))
        throw invalid_argument("seller rating imputation must lie in [0,100]");
      v.variant = csv::format_double(*level);
      s.platform_seller_rating = *level;
      v.report = sp::coo_test(panel::impute_platform_seller_rating(lagged, *level), s);
    }
    out.push_back(std::move(v));
  }
  return out;
}

std::vector<std::optional<double>> default_imputations() {
  return {std::nullopt, 80.0, 90.0, 95.0, 100.0};
}

std::vector<double> default_cutoffs() {
  std::vector<double> x;
  for (int i = 1; i <= 30; ++i) x.push_back(i);
  return x;
}

std::string sensitivity_csv(const std::vector<VariantReport>& reports) {
  std::ostringstream os;
  os << "analysis,variant,delta,se,ci_low,ci_high,share_dropped\n";
  for (const auto& v : reports) {
    os << csv::escape(v.analysis) << ',' << csv::escape(v.variant) << ',';
    if (v.report)
      os << csv::format_double(v.report->estimate) << ',' << csv::format_double(v.report->se) << ','
         << csv::format_double(v.report->ci_low) << ',' << csv::format_double(v.report->ci_high);
    else
      os << ",,,";
    os << ',' << csv::format_double(v.share_dropped) << '\n';
  }
  return os.str();
}

}  // namespace prefaudit::robust
