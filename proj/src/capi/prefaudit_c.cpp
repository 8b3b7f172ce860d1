#include "prefaudit/prefaudit.h"

#include <cstring>
#include <exception>
#include <cstdlib>
#include <limits>
#include <map>
#include <new>
#include <set>
#include <string>

#include "prefaudit/report.hpp"

using prefaudit::report::json;
namespace pa = prefaudit;

struct pa_panel {
  pa::panel::Panel p;
};

namespace {

thread_local std::string g_last_error;

pa_status status_of(pa::ErrorKind k) {
  switch (k) {
    case pa::ErrorKind::InvalidArgument: return PA_ERR_INVALID_ARGUMENT;
    case pa::ErrorKind::Io: return PA_ERR_IO;
    case pa::ErrorKind::Validation: return PA_ERR_VALIDATION;
    case pa::ErrorKind::Precondition: return PA_ERR_PRECONDITION;
    case pa::ErrorKind::Numerical: return PA_ERR_NUMERICAL;
    default: return PA_ERR_INTERNAL;
  }
}

template <typename Fn>
pa_status guard(Fn fn) {
  g_last_error.clear();
  try {
    fn();
    return PA_OK;
  } catch (const pa::Error& e) {
    g_last_error = e.what();
    return status_of(e.kind());
  } catch (const json::exception& e) {
    g_last_error = std::string("malformed JSON: ") + e.what();
    return PA_ERR_INVALID_ARGUMENT;
  } catch (const std::bad_alloc&) {
    g_last_error = "out of memory";
    return PA_ERR_INTERNAL;
  } catch (const std::exception& e) {
    g_last_error = e.what();
    return PA_ERR_INTERNAL;
  } catch (...) {
    g_last_error = "unknown error";
    return PA_ERR_INTERNAL;
  }
}

char* dup(const std::string& s) {
  char* out = static_cast<char*>(std::malloc(s.size() + 1));
  if (!out) throw std::bad_alloc();
  std::memcpy(out, s.data(), s.size());
  out[s.size()] = '\0';
  return out;
}

void put(char** out, const std::string& s) {
  if (out) *out = dup(s);
}

void need(const void* p, const char* what) {
  if (!p) throw pa::invalid_argument(std::string(what) + " must not be NULL");
}

json parse_json(const char* text, const char* what) {
  if (!text || !*text) return json::object();
  try {
    return json::parse(text);
  } catch (const json::parse_error& e) {
    throw pa::invalid_argument(std::string(what) + " is not valid JSON: " + e.what());
  }
}

pa_panel* wrap(pa::panel::Panel p) { return new pa_panel{std::move(p)}; }

}  // namespace

extern "C" {

const char* pa_version(void) { return pa::report::kToolVersion; }
const char* pa_schema_version(void) { return pa::report::kSchemaVersion; }
const char* pa_last_error(void) { return g_last_error.c_str(); }
void pa_string_free(char* s) { std::free(s); }

const char* pa_status_name(pa_status status) {
  switch (status) {
    case PA_OK: return "ok";
    case PA_ERR_INVALID_ARGUMENT: return "invalid argument";
    case PA_ERR_IO: return "i/o error";
    case PA_ERR_VALIDATION: return "validation error";
    case PA_ERR_PRECONDITION: return "precondition failed";
    case PA_ERR_NUMERICAL: return "numerical error";
    default: return "internal error";
  }
}

pa_status pa_visibility_compute(const char* keywords_path, const char* ecp_path, const char* options_json,
                                char** out_csv, char** out_json) {
  return guard([&] {
    need(keywords_path, "keywords_path");
    const json opt = parse_json(options_json, "options");
    for (auto it = opt.begin(); it != opt.end(); ++it)
      if (it.key() != "cycle_length" && it.key() != "scale" && it.key() != "keyword_classes" &&
          it.key() != "ecp_variants")
        throw pa::invalid_argument("unknown visibility option '" + it.key() + "'");
    pa::visibility::Options o;
    o.cycle_length = opt.value("cycle_length", o.cycle_length);
    o.scale = opt.value("scale", o.scale);
    if (opt.contains("keyword_classes"))
      o.keyword_classes = opt["keyword_classes"].get<std::map<std::string, std::string>>();
    if (o.cycle_length < 1) throw pa::invalid_argument("cycle_length must be at least 1");
    if (!(o.scale > 0.0)) throw pa::invalid_argument("scale must be positive");

    auto curve = ecp_path ? pa::visibility::EcpCurve::load_csv(ecp_path)
                          : pa::visibility::EcpCurve::geometric_default();
    if (opt.contains("ecp_variants"))
      for (const auto& [cls, probs] : opt["ecp_variants"].items())
        curve.add_variant(cls, probs.get<std::vector<double>>());
    const auto records = pa::visibility::load_keyword_ranks(keywords_path);
    const auto table = pa::visibility::compute(records, curve, o);

    std::set<std::string> keywords, offers;
    std::set<pa::Day> periods;
    for (const auto& r : records) {
      keywords.insert(r.keyword_id);
      offers.insert(r.offer_id);
      periods.insert(r.period);
    }
    json s;
    s["records"] = records.size();
    s["keywords"] = keywords.size();
    s["offers"] = offers.size();
    s["periods"] = periods.size();
    s["first_period"] = periods.empty() ? "" : pa::format_iso_date(*periods.begin());
    s["last_period"] = periods.empty() ? "" : pa::format_iso_date(*periods.rbegin());
    s["cycle_length"] = table.cycle_length;
    s["scale"] = table.scale;
    s["partial_windows"] = table.partial_windows;
    s["ecp_ranks"] = curve.size();
    put(out_csv, pa::visibility::to_csv(table));
    put(out_json, s.dump(2));
  });
}

pa_status pa_panel_read(const char* path, double currency_rate, pa_panel** out) {
  return guard([&] {
    need(path, "path");
    need(out, "out");
    *out = wrap(pa::panel::ingest_observations(path, currency_rate));
  });
}

pa_status pa_panel_parse(const char* csv_text, double currency_rate, pa_panel** out) {
  return guard([&] {
    need(csv_text, "csv_text");
    need(out, "out");
    *out = wrap(pa::panel::parse_csv(csv_text, currency_rate));
  });
}

pa_status pa_panel_write(const pa_panel* panel, const char* path) {
  return guard([&] {
    need(panel, "panel");
    need(path, "path");
    pa::write_file(path, pa::panel::to_csv(panel->p));
  });
}

pa_status pa_panel_to_csv(const pa_panel* panel, char** out_csv) {
  return guard([&] {
    need(panel, "panel");
    put(out_csv, pa::panel::to_csv(panel->p));
  });
}

void pa_panel_free(pa_panel* panel) { delete panel; }

size_t pa_panel_rows(const pa_panel* panel) { return panel ? panel->p.size() : 0; }

size_t pa_panel_products(const pa_panel* panel) {
  return panel ? pa::panel::count_products(panel->p) : 0;
}

pa_status pa_panel_digest(const pa_panel* panel, char** out_hex) {
  return guard([&] {
    need(panel, "panel");
    put(out_hex, pa::panel::sample_digest(panel->p));
  });
}

pa_status pa_panel_lag(const pa_panel* panel, int lag_days, const char* outcome, pa_panel** out) {
  return guard([&] {
    need(panel, "panel");
    need(out, "out");
    const std::string o = outcome ? outcome : std::string(pa::panel::kOrganicVisibility);
    *out = wrap(pa::panel::lag_covariates(panel->p, lag_days, o));
  });
}

pa_status pa_panel_mark_lagged(pa_panel* panel, int lag_days, const char* outcome) {
  return guard([&] {
    need(panel, "panel");
    if (lag_days < 1) throw pa::invalid_argument("lag must be at least one day");
    const std::string o = outcome ? outcome : std::string(pa::panel::kOrganicVisibility);
    if (!pa::panel::is_numeric_column(panel->p, o))
      throw pa::invalid_argument("unknown outcome column '" + o + "'");
    panel->p.lag = pa::panel::LagInfo{lag_days, o};
  });
}

pa_status pa_panel_filter(const pa_panel* panel, const char* filter_json, pa_panel** out) {
  return guard([&] {
    need(panel, "panel");
    need(out, "out");
    const json j = parse_json(filter_json, "filter");
    json f = j;
    std::map<std::string, pa::Day> listed;
    const bool has_listed = j.contains("first_listed");
    if (has_listed) {
      for (const auto& [pid, d] : j["first_listed"].items()) listed[pid] = pa::parse_iso_date(d.get<std::string>());
      f.erase("first_listed");
    }
    const auto filter = pa::report::sample_filter_from_json(f);
    *out = wrap(pa::panel::filter_sample(panel->p, filter, has_listed ? &listed : nullptr));
  });
}

pa_status pa_panel_pool(const pa_panel* const* panels, const char* const* markets, size_t count,
                        pa_panel** out) {
  return guard([&] {
    need(panels, "panels");
    need(out, "out");
    std::vector<pa::panel::LabeledPanel> in;
    for (size_t i = 0; i < count; ++i) {
      need(panels[i], "panel");
      in.push_back({markets && markets[i] ? markets[i] : "", &panels[i]->p});
    }
    *out = wrap(pa::panel::pool_samples(in));
  });
}

pa_status pa_panel_impute_seller_rating(const pa_panel* panel, double rating, pa_panel** out) {
  return guard([&] {
    need(panel, "panel");
    need(out, "out");
    if (!(rating >= 0.0 && rating <= 100.0)) throw pa::invalid_argument("rating must lie in [0,100]");
    *out = wrap(pa::panel::impute_platform_seller_rating(panel->p, rating));
  });
}

pa_status pa_panel_summary(const pa_panel* panel, char** out_csv) {
  return guard([&] {
    need(panel, "panel");
    put(out_csv, pa::panel::summary_to_csv(pa::panel::summary_stats(panel->p)));
  });
}

pa_status pa_panel_assign_groups(const pa_panel* panel, const char* groups_json, pa_panel** out) {
  return guard([&] {
    need(panel, "panel");
    need(out, "out");
    const json j = parse_json(groups_json, "groups");
    if (!j.is_array()) throw pa::invalid_argument("groups must be a JSON array");
    std::vector<pa::panel::ComparisonGroup> groups;
    for (const auto& g : j) {
      pa::panel::ComparisonGroup cg;
      cg.platform_product_id = g.at("platform_product_id").get<std::string>();
      cg.group_id = g.value("group_id", "G-" + cg.platform_product_id);
      cg.substitute_product_ids = g.at("substitute_product_ids").get<std::vector<std::string>>();
      groups.push_back(std::move(cg));
    }
    *out = wrap(pa::panel::assign_groups(panel->p, groups));
  });
}

pa_status pa_build_comparison_groups(const char* request_json, char** out_json) {
  return guard([&] {
    const json j = parse_json(request_json, "request");
    std::vector<pa::panel::PlatformProduct> platforms;
    for (const auto& p : j.at("platform_products"))
      platforms.push_back({p.at("product_id").get<std::string>(), p.at("category").get<std::string>()});
    const auto candidates = j.at("candidates").get<std::map<std::string, std::vector<std::string>>>();
    const auto build = pa::panel::build_comparison_groups(
        platforms, candidates, j.value("max_substitutes", std::size_t{5}), j.at("seed").get<std::uint64_t>());
    json out;
    json groups = json::array();
    for (const auto& g : build.groups)
      groups.push_back({{"group_id", g.group_id},
                        {"platform_product_id", g.platform_product_id},
                        {"substitute_product_ids", g.substitute_product_ids}});
    out["groups"] = groups;
    out["warnings"] = build.warnings;
    put(out_json, out.dump(2));
  });
}

pa_status pa_simulate(const char* config_json, pa_panel** out_panel, char** out_truth_json) {
  return guard([&] {
    need(out_panel, "out_panel");
    const auto cfg = pa::report::simulation_config_from_json(parse_json(config_json, "config"));
    auto sim = pa::synth::simulate_panel(cfg);
    if (out_truth_json) {
      json t = pa::report::to_json(sim.truth);
      t["config"] = pa::report::to_json(cfg);
      put(out_truth_json, t.dump(2));
    }
    *out_panel = wrap(std::move(sim.panel));
  });
}

pa_status pa_inject_omitted_variable(const pa_panel* panel, const char* kind, double multiplier,
                                     uint64_t seed, double noise_sd, pa_panel** out) {
  return guard([&] {
    need(panel, "panel");
    need(kind, "kind");
    need(out, "out");
    *out = wrap(pa::synth::inject_omitted_variable(panel->p, pa::synth::omitted_kind_from_string(kind),
                                                   multiplier, seed, noise_sd));
  });
}

pa_status pa_monte_carlo(const char* request_json, char** out_json, char** out_csv) {
  return guard([&] {
    const json j = parse_json(request_json, "request");
    std::vector<pa::synth::SimulationConfig> grid;
    for (const auto& c : j.at("grid")) grid.push_back(pa::report::simulation_config_from_json(c));
    pa::synth::MonteCarloOptions o;
    o.replications = j.value("replications", o.replications);
    o.lag_days = j.value("lag", o.lag_days);
    o.threads = j.value("threads", 0u);
    const auto cells = pa::synth::monte_carlo_study(grid, o);
    json out = json::array();
    for (const auto& c : cells) out.push_back(pa::report::to_json(c));
    put(out_json, out.dump(2));
    put(out_csv, pa::report::monte_carlo_csv(cells));
  });
}

pa_status pa_fit(const pa_panel* panel, const char* spec_json, char** out_json) {
  return guard([&] {
    need(panel, "panel");
    const auto spec = pa::report::model_spec_from_json(parse_json(spec_json, "spec"),
                                                       pa::fe::ModelSpec::visibility_model());
    const auto fit = pa::fe::fit_poisson_two_way_fe(panel->p, spec);
    json j = pa::report::to_json(fit);
    j["spec"] = pa::report::to_json(spec);
    put(out_json, j.dump(2));
  });
}

pa_status pa_test_coo(const pa_panel* lagged, const char* spec_json, const char* label, char** out_json) {
  return guard([&] {
    need(lagged, "panel");
    const auto spec = pa::report::model_spec_from_json(parse_json(spec_json, "spec"),
                                                       pa::fe::ModelSpec::visibility_model());
    auto r = pa::sp::coo_test(lagged->p, spec);
    if (label) r.label = label;
    json j = pa::report::to_json(r);
    j["spec"] = pa::report::to_json(spec);
    put(out_json, j.dump(2));
  });
}

pa_status pa_test_ob(const pa_panel* lagged, const char* spec_json, const char* label, char** out_json) {
  return guard([&] {
    need(lagged, "panel");
    const auto spec = pa::report::model_spec_from_json(parse_json(spec_json, "spec"),
                                                       pa::fe::ModelSpec::outcome_model());
    auto r = pa::sp::ob_test(lagged->p, spec);
    if (label) r.label = label;
    json j = pa::report::to_json(r);
    j["spec"] = pa::report::to_json(spec);
    put(out_json, j.dump(2));
  });
}

pa_status pa_compare_tests(const char* coo_json, const char* ob_json, char** out_json) {
  return guard([&] {
    need(coo_json, "coo_json");
    need(ob_json, "ob_json");
    const auto coo = pa::report::test_report_from_json(parse_json(coo_json, "COO report"));
    const auto ob = pa::report::test_report_from_json(parse_json(ob_json, "OB report"));
    put(out_json, pa::report::to_json(pa::sp::compare_tests(coo, ob)).dump(2));
  });
}

pa_status pa_transform_estimate(double delta, double se, double z, double* percent, double* ci_low,
                                double* ci_high) {
  return guard([&] {
    const auto t = pa::fe::transform_estimate(delta, se, z);
    if (percent) *percent = t.percent;
    if (ci_low) *ci_low = t.ci_low;
    if (ci_high) *ci_high = t.ci_high;
  });
}

pa_status pa_robustness(const pa_panel* panel, const char* analysis, const char* options_json,
                        char** out_json, char** out_csv) {
  return guard([&] {
    need(panel, "panel");
    need(analysis, "analysis");
    const json opt = parse_json(options_json, "options");
    for (auto it = opt.begin(); it != opt.end(); ++it)
      if (it.key() != "spec" && it.key() != "lag" && it.key() != "cutoffs" && it.key() != "imputations")
        throw pa::invalid_argument("unknown robustness option '" + it.key() + "'");
    const auto spec = pa::report::model_spec_from_json(opt.value("spec", json::object()),
                                                       pa::fe::ModelSpec::visibility_model());
    const std::string a = analysis;
    std::vector<pa::robust::VariantReport> v;
    if (a == "buybox") {
      v = pa::robust::buybox_change_sensitivity(panel->p, spec, opt.value("lag", 1));
    } else if (a == "ratio") {
      std::vector<double> cutoffs = pa::robust::default_cutoffs();
      if (opt.contains("cutoffs")) {
        cutoffs.clear();
        for (const auto& x : opt["cutoffs"]) {
          if (x.is_string() && (x == "inf" || x == "Inf")) cutoffs.push_back(std::numeric_limits<double>::infinity());
          else cutoffs.push_back(x.get<double>());
        }
      }
      v = pa::robust::ratio_cutoff_sensitivity(panel->p, spec, cutoffs);
    } else if (a == "seller_rating") {
      auto levels = pa::robust::default_imputations();
      if (opt.contains("imputations")) {
        levels.clear();
        for (const auto& x : opt["imputations"]) {
          if (x.is_null() || (x.is_string() && x == "none")) levels.push_back(std::nullopt);
          else levels.push_back(x.get<double>());
        }
      }
      v = pa::robust::seller_rating_sensitivity(panel->p, spec, levels);
    } else {
      throw pa::invalid_argument("unknown analysis '" + a + "' (use buybox, ratio or seller_rating)");
    }
    json out = json::array();
    for (const auto& r : v) out.push_back(pa::report::to_json(r));
    put(out_json, out.dump(2));
    put(out_csv, pa::robust::sensitivity_csv(v));
  });
}

pa_status pa_report_render(const char* reports_json, const char* title, char** out_svg, char** out_csv) {
  return guard([&] {
    need(reports_json, "reports_json");
    const json j = parse_json(reports_json, "reports");
    if (!j.is_array()) throw pa::invalid_argument("reports must be a JSON array");
    std::vector<pa::report::PlotPoint> points;
    for (const auto& r : j) points.push_back(pa::report::plot_point(pa::report::test_report_from_json(r)));
    put(out_svg, pa::report::render_coefficient_svg(points, title ? title : "Self-preferencing estimates"));
    put(out_csv, pa::report::plot_data_csv(points));
  });
}

pa_status pa_report_summary(const char* report_json, char** out_text) {
  return guard([&] {
    const json j0 = parse_json(report_json, "report");
    const json& j = j0.contains("result") ? j0["result"] : j0;
    if (j.contains("verdict")) {
      pa::sp::JointVerdict v;
      v.verdict = j["verdict"] == "CONSISTENT-EVIDENCE"   ? pa::sp::Verdict::ConsistentEvidence
                  : j["verdict"] == "DISAGREE"            ? pa::sp::Verdict::Disagree
                                                          : pa::sp::Verdict::ConsistentNoEvidence;
      v.coo = pa::report::test_report_from_json(j.at("coo"));
      v.ob = pa::report::test_report_from_json(j.at("ob"));
      put(out_text, pa::report::summary_text(v));
    } else {
      put(out_text, pa::report::summary_text(pa::report::test_report_from_json(j)));
    }
  });
}

pa_status pa_report_envelope(const char* command, const char* config_json, const char* const* input_paths,
                             size_t input_count, const char* result_json, char** out_json) {
  return guard([&] {
    need(command, "command");
    std::vector<pa::report::InputDigest> inputs;
    for (size_t i = 0; i < input_count; ++i) {
      need(input_paths[i], "input path");
      inputs.push_back({input_paths[i], pa::sha256_file(input_paths[i])});
    }
    put(out_json, pa::report::envelope(command, parse_json(config_json, "config"), inputs,
                                       parse_json(result_json, "result"))
                      .dump(2));
  });
}

pa_status pa_sha256_file(const char* path, char** out_hex) {
  return guard([&] {
    need(path, "path");
    put(out_hex, pa::sha256_file(path));
  });
}

}  // extern "C"
