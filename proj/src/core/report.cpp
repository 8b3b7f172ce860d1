#include "prefaudit/report.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>

#include "prefaudit/csv.hpp"

namespace prefaudit::report {

namespace {

json vector_json(const Eigen::VectorXd& v) {
  json a = json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v[i]);
  return a;
}

std::string transform_name(fe::Transform t) { return t == fe::Transform::Log ? "log" : "identity"; }

fe::Transform transform_from(const std::string& s) {
  if (s == "log") return fe::Transform::Log;
  if (s == "identity") return fe::Transform::Identity;
  throw invalid_argument("unknown transform '" + s + "' (use log or identity)");
}

void reject_unknown(const json& j, std::initializer_list<const char*> known, const char* what) {
  if (!j.is_object()) throw invalid_argument(std::string(what) + " must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::none_of(known.begin(), known.end(), [&](const char* k) { return it.key() == k; }))
      throw invalid_argument("unknown " + std::string(what) + " key '" + it.key() + "'");
  }
}

template <typename T>
void read(const json& j, const char* key, T& out) {
  if (!j.contains(key)) return;
  try {
    out = j.at(key).get<T>();
  } catch (const json::exception&) {
    throw invalid_argument(std::string("config key '") + key + "' has the wrong type");
  }
}

}  // namespace

json to_json(const fe::FitResult& fit) {
  json j;
  j["names"] = fit.names;
  j["coefficients"] = vector_json(fit.coefficients);
  j["se"] = vector_json(fit.se);
  json cov = json::array();
  for (Eigen::Index r = 0; r < fit.covariance.rows(); ++r) {
    json row = json::array();
    for (Eigen::Index c = 0; c < fit.covariance.cols(); ++c) row.push_back(fit.covariance(r, c));
    cov.push_back(row);
  }
  j["covariance"] = cov;
  j["cluster_dimensions"] = fit.cluster_names;
  j["n_obs"] = fit.n_obs;
  j["n_units"] = fit.n_units;
  j["n_dates"] = fit.n_dates;
  j["dropped_obs"] = fit.dropped_obs;
  j["dropped_levels"] = fit.dropped_levels;
  j["deviance"] = fit.deviance;
  j["null_deviance"] = fit.null_deviance;
  j["log_likelihood"] = fit.log_likelihood;
  j["null_log_likelihood"] = fit.null_log_likelihood;
  j["saturated_log_likelihood"] = fit.saturated_log_likelihood;
  j["pseudo_r2"] = fit.pseudo_r2;
  j["iterations"] = fit.iterations;
  j["projection_iterations"] = fit.projection_iterations;
  j["converged"] = fit.converged;
  j["negative_eigenvalues_zeroed"] = fit.negative_eigenvalues_zeroed;
  json fes = json::array();
  for (const auto& f : fit.fixed_effects) {
    json e;
    e["name"] = f.name;
    e["labels"] = f.labels;
    e["values"] = f.values;
    fes.push_back(e);
  }
  j["fixed_effects"] = fes;
  return j;
}

json to_json(const fe::ModelSpec& s) {
  json j;
  j["outcome"] = s.outcome;
  j["protected_attribute"] = s.protected_attribute;
  json cov = json::array();
  for (const auto& c : s.covariates) cov.push_back({{"column", c.column}, {"transform", transform_name(c.transform)}});
  j["covariates"] = cov;
  j["unit"] = s.unit == fe::UnitKind::Product ? "product" : "group";
  j["unit_effects"] = s.unit_effects;
  j["date_effects"] = s.date_effects;
  j["cluster_dims"] = s.cluster_dims;
  j["platform_seller_rating"] = s.platform_seller_rating;
  j["max_iterations"] = s.options.max_iterations;
  j["deviance_tolerance"] = s.options.deviance_tolerance;
  j["projection_tolerance"] = s.options.projection_tolerance;
  return j;
}

fe::ModelSpec model_spec_from_json(const json& j, fe::ModelSpec s) {
  reject_unknown(j,
                 {"outcome", "protected_attribute", "covariates", "unit", "unit_effects", "date_effects",
                  "cluster_dims", "platform_seller_rating", "max_iterations", "deviance_tolerance",
                  "projection_tolerance", "threads"},
                 "model spec");
  read(j, "outcome", s.outcome);
  read(j, "protected_attribute", s.protected_attribute);
  if (j.contains("covariates")) {
    if (!j["covariates"].is_array()) throw invalid_argument("'covariates' must be an array");
    s.covariates.clear();
    for (const auto& c : j["covariates"]) {
      if (c.is_string()) {
        // "ln_price" shorthand for a log transform.
        std::string name = c.get<std::string>();
        if (name.rfind("ln_", 0) == 0) s.covariates.push_back({name.substr(3), fe::Transform::Log});
        else s.covariates.push_back({name, fe::Transform::Identity});
        continue;
      }
      reject_unknown(c, {"column", "transform"}, "covariate");
      fe::Covariate cv;
      read(c, "column", cv.column);
      std::string t = "identity";
      read(c, "transform", t);
      cv.transform = transform_from(t);
      if (cv.column.empty()) throw invalid_argument("covariate without column name");
      s.covariates.push_back(cv);
    }
  }
  if (j.contains("unit")) {
    const std::string u = j["unit"].get<std::string>();
    if (u == "product") s.unit = fe::UnitKind::Product;
    else if (u == "group") s.unit = fe::UnitKind::ComparisonGroup;
    else throw invalid_argument("unit must be 'product' or 'group'");
  }
  read(j, "unit_effects", s.unit_effects);
  read(j, "date_effects", s.date_effects);
  read(j, "cluster_dims", s.cluster_dims);
  read(j, "platform_seller_rating", s.platform_seller_rating);
  read(j, "max_iterations", s.options.max_iterations);
  read(j, "deviance_tolerance", s.options.deviance_tolerance);
  read(j, "projection_tolerance", s.options.projection_tolerance);
  read(j, "threads", s.options.threads);
  return s;
}

json to_json(const sp::TestReport& r, bool include_fit) {
  json j;
  j["test"] = sp::to_string(r.kind);
  if (!r.label.empty()) j["label"] = r.label;
  j["attribute"] = r.attribute;
  j["estimate"] = r.estimate;
  j["se"] = r.se;
  j["ci_low"] = r.ci_low;
  j["ci_high"] = r.ci_high;
  j["z"] = r.z_value;
  j["p_value"] = r.p_value;
  j["percent"] = r.percent.percent;
  j["percent_ci_low"] = r.percent.ci_low;
  j["percent_ci_high"] = r.percent.ci_high;
  j["conclusion"] = sp::to_string(r.conclusion);
  j["sample"] = {{"digest", r.sample_digest},
                 {"rows", r.sample_rows},
                 {"products", r.sample_products},
                 {"lag_days", r.lag_days},
                 {"dropped_zero_visibility_rows", r.dropped_zero_rows}};
  if (include_fit) j["fit"] = to_json(r.fit);
  return j;
}

sp::TestReport test_report_from_json(const json& j0) {
  const json& j = j0.contains("result") ? j0["result"] : j0;
  try {
    sp::TestReport r;
    r.kind = sp::test_kind_from_string(j.at("test").get<std::string>());
    r.label = j.value("label", "");
    r.attribute = j.at("attribute").get<std::string>();
    r.estimate = j.at("estimate").get<double>();
    r.se = j.at("se").get<double>();
    r.ci_low = j.at("ci_low").get<double>();
    r.ci_high = j.at("ci_high").get<double>();
    r.z_value = j.value("z", 0.0);
    r.p_value = j.value("p_value", 1.0);
    r.percent = {j.at("percent").get<double>(), j.at("percent_ci_low").get<double>(),
                 j.at("percent_ci_high").get<double>()};
    r.conclusion = sp::conclusion_from_string(j.at("conclusion").get<std::string>());
    if (r.conclusion != sp::conclude(r.ci_low, r.ci_high))
      throw invalid_argument("report conclusion does not match its confidence interval");
    const auto& s = j.at("sample");
    r.sample_digest = s.at("digest").get<std::string>();
    r.sample_rows = s.value("rows", std::size_t{0});
    r.sample_products = s.value("products", std::size_t{0});
    r.lag_days = s.value("lag_days", 0);
    r.dropped_zero_rows = s.value("dropped_zero_visibility_rows", std::size_t{0});
    return r;
  } catch (const json::exception& e) {
    throw invalid_argument(std::string("malformed test report: ") + e.what());
  }
}

json to_json(const sp::JointVerdict& v) {
  json j;
  j["verdict"] = sp::to_string(v.verdict);
  j["coo"] = to_json(v.coo, false);
  j["ob"] = to_json(v.ob, false);
  return j;
}

json to_json(const robust::VariantReport& v) {
  json j;
  j["analysis"] = v.analysis;
  j["variant"] = v.variant;
  j["share_dropped"] = v.share_dropped;
  j["rows_excluded"] = v.rows_excluded;
  if (!v.note.empty()) j["note"] = v.note;
  if (v.report) j["report"] = to_json(*v.report, false);
  else j["report"] = nullptr;
  return j;
}

namespace {

// Numeric SimulationConfig fields addressable from JSON.
const std::vector<std::pair<const char*, double synth::SimulationConfig::*>>& double_fields() {
  using C = synth::SimulationConfig;
  static const std::vector<std::pair<const char*, double C::*>> f = {
      {"delta_true", &C::delta_true},
      {"alpha_mean", &C::alpha_mean},
      {"alpha_sd", &C::alpha_sd},
      {"gamma_sd", &C::gamma_sd},
      {"gamma_shape", &C::gamma_shape},
      {"sales_rank_log_mean", &C::sales_rank_log_mean},
      {"sales_rank_log_sd", &C::sales_rank_log_sd},
      {"sales_rank_ar", &C::sales_rank_ar},
      {"sales_rank_innovation_sd", &C::sales_rank_innovation_sd},
      {"price_log_mean", &C::price_log_mean},
      {"price_log_sd", &C::price_log_sd},
      {"price_walk_sd", &C::price_walk_sd},
      {"seller_markup_sd", &C::seller_markup_sd},
      {"review_log_mean", &C::review_log_mean},
      {"review_log_sd", &C::review_log_sd},
      {"review_growth_max", &C::review_growth_max},
      {"rating_noise_sd", &C::rating_noise_sd},
      {"buybox_mean_holding", &C::buybox_mean_holding},
      {"platform_product_share", &C::platform_product_share},
      {"platform_seller_rating", &C::platform_seller_rating},
      {"sponsored_zero_share", &C::sponsored_zero_share},
      {"sponsored_log_sd", &C::sponsored_log_sd},
      {"product_noise_sd", &C::product_noise_sd},
      {"ob_bias", &C::ob_bias},
      {"utility_sd", &C::utility_sd},
      {"utility_loading", &C::utility_loading},
      {"visibility_noise_sd", &C::visibility_noise_sd},
      {"demand_visibility", &C::demand_visibility},
      {"demand_utility", &C::demand_utility},
      {"demand_sponsored", &C::demand_sponsored},
      {"demand_price", &C::demand_price},
      {"sales_noise_sd", &C::sales_noise_sd},
      {"omitted_multiplier", &C::omitted_multiplier},
      {"omitted_noise_sd", &C::omitted_noise_sd},
  };
  return f;
}

const std::vector<std::pair<const char*, double synth::Betas::*>>& beta_fields() {
  using B = synth::Betas;
  static const std::vector<std::pair<const char*, double B::*>> f = {
      {"ln_sales_rank", &B::ln_sales_rank}, {"ln_price", &B::ln_price},
      {"ln_count_reviews", &B::ln_count_reviews}, {"rating_product", &B::rating_product},
      {"rating_seller", &B::rating_seller}, {"is_prime", &B::is_prime}};
  return f;
}

}  // namespace

json to_json(const synth::SimulationConfig& c) {
  json j;
  j["design"] = c.design == synth::Design::StudyA ? "A" : "B";
  j["sales_model"] = c.sales_model == synth::SalesModel::Independent ? "independent" : "visibility_driven";
  j["n_products"] = c.n_products;
  j["n_days"] = c.n_days;
  j["start_date"] = c.start_date;
  j["market"] = c.market;
  if (c.seed) j["seed"] = *c.seed;
  else j["seed"] = nullptr;
  json b;
  for (const auto& [k, m] : beta_fields()) b[k] = c.betas.*m;
  j["betas"] = b;
  for (const auto& [k, m] : double_fields()) j[k] = c.*m;
  j["max_third_party_sellers"] = c.max_third_party_sellers;
  j["max_substitutes"] = c.max_substitutes;
  j["emit_platform_seller_rating"] = c.emit_platform_seller_rating;
  return j;
}

synth::SimulationConfig simulation_config_from_json(const json& j, synth::SimulationConfig c) {
  if (!j.is_object()) throw invalid_argument("simulation config must be a JSON object");
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string& k = it.key();
    const json& v = it.value();
    try {
      if (k == "design") {
        const auto s = v.get<std::string>();
        if (s == "A") c.design = synth::Design::StudyA;
        else if (s == "B") c.design = synth::Design::StudyB;
        else throw invalid_argument("design must be 'A' or 'B'");
      } else if (k == "sales_model") {
        const auto s = v.get<std::string>();
        if (s == "independent") c.sales_model = synth::SalesModel::Independent;
        else if (s == "visibility_driven") c.sales_model = synth::SalesModel::VisibilityDriven;
        else throw invalid_argument("sales_model must be 'independent' or 'visibility_driven'");
      } else if (k == "n_products") c.n_products = v.get<std::size_t>();
      else if (k == "n_days") c.n_days = v.get<std::size_t>();
      else if (k == "start_date") c.start_date = v.get<std::string>();
      else if (k == "market") c.market = v.get<std::string>();
      else if (k == "seed") {
        if (v.is_null()) c.seed.reset();
        else c.seed = v.get<std::uint64_t>();
      } else if (k == "max_third_party_sellers") c.max_third_party_sellers = v.get<std::size_t>();
      else if (k == "max_substitutes") c.max_substitutes = v.get<std::size_t>();
      else if (k == "emit_platform_seller_rating") c.emit_platform_seller_rating = v.get<bool>();
      else if (k == "betas") {
        if (!v.is_object()) throw invalid_argument("'betas' must be an object");
        for (auto b = v.begin(); b != v.end(); ++b) {
          auto f = std::find_if(beta_fields().begin(), beta_fields().end(),
                                [&](const auto& p) { return b.key() == p.first; });
          if (f == beta_fields().end()) throw invalid_argument("unknown beta '" + b.key() + "'");
          c.betas.*(f->second) = b.value().get<double>();
        }
      } else {
        auto f = std::find_if(double_fields().begin(), double_fields().end(),
                              [&](const auto& p) { return k == p.first; });
        if (f == double_fields().end()) throw invalid_argument("unknown simulation config key '" + k + "'");
        c.*(f->second) = v.get<double>();
      }
    } catch (const json::exception&) {
      throw invalid_argument("simulation config key '" + k + "' has the wrong type");
    }
  }
  return c;
}

json to_json(const synth::GroundTruth& t) {
  json j;
  j["delta_true"] = t.delta_true;
  json b;
  for (const auto& [k, m] : beta_fields()) b[k] = t.betas.*m;
  j["betas"] = b;
  j["platform_seller_rating"] = t.platform_seller_rating;
  j["expected_delta_ob"] = t.expected_delta_ob;
  j["product_ids"] = t.product_ids;
  j["alpha"] = t.alpha;
  j["dates"] = t.dates;
  j["gamma"] = t.gamma;
  return j;
}

json to_json(const synth::MonteCarloCell& c) {
  json j;
  j["config"] = to_json(c.config);
  j["replications"] = c.replications;
  j["successes"] = c.successes;
  j["failures"] = c.failures;
  j["mean_estimate"] = c.mean_estimate;
  j["empirical_sd"] = c.empirical_sd;
  j["mean_se"] = c.mean_se;
  j["rejection_rate"] = c.rejection_rate;
  j["coverage"] = c.coverage;
  j["within_3se"] = c.within_3se;
  j["wide_variance"] = c.wide_variance;
  j["estimates"] = c.estimates;
  j["std_errors"] = c.std_errors;
  return j;
}

json to_json(const panel::SampleFilter& f) {
  json j;
  j["sales_rank_min"] = f.sales_rank_min;
  j["sales_rank_max"] = f.sales_rank_max;
  j["availability_min_share"] = f.availability_min_share;
  if (f.first_listed_before) j["first_listed_before"] = format_iso_date(*f.first_listed_before);
  j["require_buybox_variation"] = f.require_buybox_variation;
  return j;
}

panel::SampleFilter sample_filter_from_json(const json& j) {
  reject_unknown(j,
                 {"sales_rank_min", "sales_rank_max", "availability_min_share", "first_listed_before",
                  "require_buybox_variation"},
                 "sample filter");
  panel::SampleFilter f;
  read(j, "sales_rank_min", f.sales_rank_min);
  read(j, "sales_rank_max", f.sales_rank_max);
  read(j, "availability_min_share", f.availability_min_share);
  if (j.contains("first_listed_before") && !j["first_listed_before"].is_null())
    f.first_listed_before = parse_iso_date(j["first_listed_before"].get<std::string>());
  read(j, "require_buybox_variation", f.require_buybox_variation);
  panel::validate(f);
  return f;
}

json envelope(const std::string& command, const json& config, const std::vector<InputDigest>& inputs,
              json body) {
  json j;
  j["schema_version"] = kSchemaVersion;
  j["tool_version"] = kToolVersion;
  j["command"] = command;
  j["config"] = config;
  j["config_digest"] = sha256_hex(config.dump());
  json in = json::array();
  for (const auto& d : inputs) in.push_back({{"name", d.name}, {"sha256", d.sha256}});
  j["inputs"] = in;
  j["result"] = std::move(body);
  return j;
}

namespace {

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

}  // namespace

std::string summary_text(const sp::TestReport& r) {
  std::ostringstream os;
  os << sp::to_string(r.kind) << " test";
  if (!r.label.empty()) os << " [" << r.label << "]";
  os << ": " << r.attribute << " = " << fmt("%.4f", r.estimate) << " (se " << fmt("%.4f", r.se)
     << ", p = " << fmt("%.3f", r.p_value) << ")\n";
  os << "  percent effect " << fmt("%.2f", r.percent.percent) << "%, 95% CI ["
     << fmt("%.2f", r.percent.ci_low) << "%, " << fmt("%.2f", r.percent.ci_high) << "%]\n";
  os << "  n = " << r.sample_rows << " rows, " << r.sample_products << " products";
  if (r.dropped_zero_rows) os << ", " << r.dropped_zero_rows << " zero-visibility rows dropped";
  if (r.fit.dropped_obs) os << ", " << r.fit.dropped_obs << " rows in all-zero levels dropped";
  os << "\n  conclusion: " << sp::to_string(r.conclusion) << "\n";
  return os.str();
}

std::string summary_text(const sp::JointVerdict& v) {
  return summary_text(v.coo) + summary_text(v.ob) + "verdict: " + sp::to_string(v.verdict) + "\n";
}

std::string monte_carlo_csv(const std::vector<synth::MonteCarloCell>& cells) {
  std::ostringstream os;
  os << "design,delta_true,replications,successes,mean_estimate,empirical_sd,mean_se,"
        "rejection_rate,coverage,within_3se,wide_variance\n";
  for (const auto& c : cells) {
    os << (c.config.design == synth::Design::StudyA ? "A" : "B") << ','
       << csv::format_double(c.config.delta_true) << ',' << c.replications << ',' << c.successes << ','
       << csv::format_double(c.mean_estimate) << ',' << csv::format_double(c.empirical_sd) << ','
       << csv::format_double(c.mean_se) << ',' << csv::format_double(c.rejection_rate) << ','
       << csv::format_double(c.coverage) << ',' << csv::format_double(c.within_3se) << ','
       << (c.wide_variance ? 1 : 0) << '\n';
  }
  return os.str();
}

PlotPoint plot_point(const sp::TestReport& r, std::string label) {
  if (label.empty()) label = r.label.empty() ? sp::to_string(r.kind) : r.label;
  return {std::move(label), r.percent.percent, r.percent.ci_low, r.percent.ci_high};
}

namespace {

std::string xml_escape(std::string_view s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '&': out += "&amp;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

double nice_step(double span) {
  const double raw = span / 6.0;
  const double mag = std::pow(10.0, std::floor(std::log10(raw)));
  for (double m : {1.0, 2.0, 2.5, 5.0, 10.0})
    if (raw <= m * mag) return m * mag;
  return 10.0 * mag;
}

}  // namespace

std::string render_coefficient_svg(std::span<const PlotPoint> points, const std::string& title,
                                   const std::string& y_label) {
  if (points.empty()) throw invalid_argument("nothing to plot");
  for (const auto& p : points)
    if (!std::isfinite(p.estimate) || !std::isfinite(p.ci_low) || !std::isfinite(p.ci_high))
      throw invalid_argument("plot point '" + p.label + "' is not finite");

  double lo = 0.0, hi = 0.0;
  for (const auto& p : points) {
    lo = std::min({lo, p.ci_low, p.estimate});
    hi = std::max({hi, p.ci_high, p.estimate});
  }
  if (hi - lo < 1e-9) {
    lo -= 1.0;
    hi += 1.0;
  }
  const double step = nice_step(hi - lo);
  lo = std::floor(lo / step) * step;
  hi = std::ceil(hi / step) * step;

  const double left = 70, right = 20, top = 40, bottom = 90;
  const double slot = 80;
  const double width = left + right + slot * static_cast<double>(points.size());
  const double height = 420;
  const double plot_h = height - top - bottom;
  auto y_of = [&](double v) { return top + (hi - v) / (hi - lo) * plot_h; };

  std::ostringstream os;
  os << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << width << "\" height=\"" << height
     << "\" viewBox=\"0 0 " << width << ' ' << height << "\" font-family=\"sans-serif\" font-size=\"12\">\n";
  os << "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n";
  os << "<text x=\"" << width / 2 << "\" y=\"22\" text-anchor=\"middle\" font-size=\"14\">"
     << xml_escape(title) << "</text>\n";
  // Axes and grid.
  os << "<line x1=\"" << left << "\" y1=\"" << top << "\" x2=\"" << left << "\" y2=\"" << top + plot_h
     << "\" stroke=\"black\"/>\n";
  for (double v = lo; v <= hi + step * 1e-6; v += step) {
    const double y = y_of(v);
    os << "<line x1=\"" << left - 4 << "\" y1=\"" << y << "\" x2=\"" << width - right << "\" y2=\"" << y
       << "\" stroke=\"#e0e0e0\"/>\n";
    os << "<text x=\"" << left - 8 << "\" y=\"" << y + 4 << "\" text-anchor=\"end\">"
       << fmt("%g", std::abs(v) < step * 1e-6 ? 0.0 : v) << "</text>\n";
  }
  os << "<line x1=\"" << left << "\" y1=\"" << y_of(0.0) << "\" x2=\"" << width - right << "\" y2=\""
     << y_of(0.0) << "\" stroke=\"black\" stroke-dasharray=\"5,4\"/>\n";
  os << "<text transform=\"translate(18," << top + plot_h / 2 << ") rotate(-90)\" text-anchor=\"middle\">"
     << xml_escape(y_label) << "</text>\n";

  for (std::size_t i = 0; i < points.size(); ++i) {
    const auto& p = points[i];
    const double x = left + slot * (static_cast<double>(i) + 0.5);
    os << "<g class=\"sample\">\n";
    os << "<line x1=\"" << x << "\" y1=\"" << y_of(p.ci_low) << "\" x2=\"" << x << "\" y2=\""
       << y_of(p.ci_high) << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    for (double v : {p.ci_low, p.ci_high})
      os << "<line x1=\"" << x - 8 << "\" y1=\"" << y_of(v) << "\" x2=\"" << x + 8 << "\" y2=\"" << y_of(v)
         << "\" stroke=\"black\" stroke-width=\"1.5\"/>\n";
    os << "<circle cx=\"" << x << "\" cy=\"" << y_of(p.estimate) << "\" r=\"4\" fill=\"black\"/>\n";
    os << "<text x=\"" << x + 10 << "\" y=\"" << y_of(p.estimate) + 4 << "\" font-size=\"10\">"
       << fmt("%.1f", p.estimate) << "</text>\n";
    os << "<text transform=\"translate(" << x << ',' << top + plot_h + 14
       << ") rotate(30)\" text-anchor=\"start\">" << xml_escape(p.label) << "</text>\n";
    os << "</g>\n";
  }
  os << "</svg>\n";
  return os.str();
}

std::string plot_data_csv(std::span<const PlotPoint> points) {
  std::ostringstream os;
  os << "label,percent,ci_low,ci_high\n";
  for (const auto& p : points)
    os << csv::escape(p.label) << ',' << csv::format_double(p.estimate) << ','
       << csv::format_double(p.ci_low) << ',' << csv::format_double(p.ci_high) << '\n';
  return os.str();
}

}  // namespace prefaudit::report
