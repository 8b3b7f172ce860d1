// prefaudit: command-line front end over the C library interface.

#include <CLI11.hpp>
#include <json.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <sstream>
#include <stdexcept>
#include <string>
#include <vector>

#include "prefaudit/prefaudit.h"

namespace fs = std::filesystem;
using json = nlohmann::ordered_json;

namespace {

struct Failure : std::runtime_error {
  using std::runtime_error::runtime_error;
};

void check(pa_status s, const std::string& what) {
  if (s != PA_OK)
    throw Failure(what + ": " + pa_status_name(s) + ": " + pa_last_error());
}

struct PanelDeleter {
  void operator()(pa_panel* p) const { pa_panel_free(p); }
};
using PanelPtr = std::unique_ptr<pa_panel, PanelDeleter>;

// Takes ownership of a library string.
std::string take(char* s) {
  if (!s) return {};
  std::string out(s);
  pa_string_free(s);
  return out;
}

std::string slurp(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Failure("cannot read '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void spill(const fs::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Failure("cannot write '" + path.string() + "'");
  out << text;
  if (!out) throw Failure("write failed for '" + path.string() + "'");
}

fs::path out_dir(const std::string& dir) {
  fs::path p(dir);
  std::error_code ec;
  fs::create_directories(p, ec);
  if (ec) throw Failure("cannot create output directory '" + dir + "': " + ec.message());
  return p;
}

PanelPtr read_panel(const std::string& path, double rate = 1.0) {
  pa_panel* p = nullptr;
  check(pa_panel_read(path.c_str(), rate, &p), "reading " + path);
  return PanelPtr(p);
}

PanelPtr lagged_panel(const pa_panel* raw, int lag, bool assume_lagged, const std::string& outcome,
                      const std::string& source) {
  if (assume_lagged) {
    PanelPtr copy = read_panel(source);
    check(pa_panel_mark_lagged(copy.get(), lag, outcome.c_str()), "marking panel as lagged");
    return copy;
  }
  pa_panel* p = nullptr;
  check(pa_panel_lag(raw, lag, outcome.c_str(), &p), "lagging covariates");
  return PanelPtr(p);
}

std::string envelope(const std::string& command, const json& config, const std::vector<std::string>& inputs,
                     const std::string& result) {
  std::vector<const char*> paths;
  for (const auto& s : inputs) paths.push_back(s.c_str());
  char* out = nullptr;
  const std::string cfg = config.dump();
  check(pa_report_envelope(command.c_str(), cfg.c_str(), paths.data(), paths.size(), result.c_str(), &out),
        "building report");
  return take(out);
}

std::optional<double> parse_rating(const std::string& s) {
  if (s == "none") return std::nullopt;
  try {
    std::size_t used = 0;
    const double v = std::stod(s, &used);
    if (used != s.size()) throw std::invalid_argument(s);
    return v;
  } catch (const std::exception&) {
    throw Failure("invalid seller rating '" + s + "' (use a number in [0,100] or none)");
  }
}

std::vector<std::string> split(const std::string& s, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream in(s);
  while (std::getline(in, cur, sep))
    if (!cur.empty()) out.push_back(cur);
  return out;
}

// "1..30", "1,2,5,inf" or a mix.
json parse_cutoffs(const std::string& s) {
  json out = json::array();
  for (const auto& part : split(s, ',')) {
    const auto dots = part.find("..");
    try {
      if (dots != std::string::npos) {
        const int a = std::stoi(part.substr(0, dots));
        const int b = std::stoi(part.substr(dots + 2));
        if (a > b) throw Failure("empty cutoff range '" + part + "'");
        for (int x = a; x <= b; ++x) out.push_back(x);
      } else if (part == "inf" || part == "Inf") {
        out.push_back("inf");
      } else {
        std::size_t used = 0;
        const double v = std::stod(part, &used);
        if (used != part.size()) throw std::invalid_argument(part);
        out.push_back(v);
      }
    } catch (const Failure&) {
      throw;
    } catch (const std::exception&) {
      throw Failure("invalid cutoff '" + part + "'");
    }
  }
  if (out.empty()) throw Failure("no cutoffs given");
  return out;
}

struct SpecFlags {
  std::string spec_file;
  std::string unit;
  std::vector<std::string> drop;
  std::string impute;

  void add(CLI::App* app, bool impute_flag = true) {
    app->add_option("--spec", spec_file, "Model spec JSON file");
    app->add_option("--unit", unit, "Unit fixed effect: product or group")
        ->check(CLI::IsMember({"product", "group"}));
    app->add_option("--drop-covariate", drop, "Covariate column to leave out");
    if (impute_flag)
      app->add_option("--seller-rating-impute", impute,
                      "Platform seller rating (0-100), or none to omit the regressor");
  }

  // Starts from `defaults` (the library's default covariate list written out)
  // so that dropping covariates works without a spec file.
  json build(const json& defaults) const {
    json spec = spec_file.empty() ? json::object() : json::parse(slurp(spec_file));
    if (!unit.empty()) spec["unit"] = unit;
    if (!spec.contains("covariates") && (!drop.empty() || (!impute.empty() && impute == "none")))
      spec["covariates"] = defaults;
    auto remove = [&](const std::string& col) {
      json kept = json::array();
      bool found = false;
      for (const auto& c : spec["covariates"]) {
        const std::string name = c.is_string() ? c.get<std::string>() : c.value("column", "");
        const std::string bare = name.rfind("ln_", 0) == 0 && c.is_string() ? name.substr(3) : name;
        if (bare == col || name == col) found = true;
        else kept.push_back(c);
      }
      if (!found) throw Failure("covariate '" + col + "' is not in the model");
      spec["covariates"] = kept;
    };
    for (const auto& d : drop) remove(d);
    if (!impute.empty()) {
      auto r = parse_rating(impute);
      if (r) spec["platform_seller_rating"] = *r;
      else remove("rating_seller");
    }
    return spec;
  }
};

const json kCooCovariates = {"ln_sales_rank", "ln_price", "ln_count_reviews",
                             "rating_product", "rating_seller", "is_prime"};
const json kObCovariates = {"ln_organic_visibility", "ln_sponsored_visibility", "ln_price"};

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Self-preferencing audit toolkit"};
  app.require_subcommand(1);
  app.set_version_flag("--version", std::string(pa_version()));

  // visibility
  auto* vis = app.add_subcommand("visibility", "Compute the relative visibility index from keyword ranks");
  std::string keywords, ecp, vis_out;
  std::size_t cycle = 365;
  double scale = 1e6;
  vis->add_option("--keywords", keywords, "keyword_id,date,offer_id,rank,query_volume CSV")->required()->check(CLI::ExistingFile);
  vis->add_option("--ecp", ecp, "rank,click_prob CSV (default: geometric curve)")->check(CLI::ExistingFile);
  vis->add_option("--cycle", cycle, "Seasonal cycle length in days")->check(CLI::PositiveNumber);
  vis->add_option("--scale", scale, "Scale of relative shares")->check(CLI::PositiveNumber);
  vis->add_option("--out", vis_out, "Output directory")->required();

  // ingest
  auto* ing = app.add_subcommand("ingest", "Validate, select and describe panel files");
  std::vector<std::string> ing_panels, ing_markets;
  std::vector<double> ing_rates;
  std::string ing_out, ing_filter, ing_impute, ing_first_before;
  double rank_min = 1, rank_max = 1e18, avail_min = 0;
  bool need_variation = false;
  ing->add_option("--panel", ing_panels, "Panel CSV (repeat to pool markets)")->required()->check(CLI::ExistingFile);
  ing->add_option("--market", ing_markets, "Market label per --panel");
  ing->add_option("--currency-rate", ing_rates, "Price multiplier per --panel (or one for all)");
  ing->add_option("--filter", ing_filter, "Sample filter JSON file")->check(CLI::ExistingFile);
  ing->add_option("--sales-rank-min", rank_min, "Minimum mean sales rank");
  ing->add_option("--sales-rank-max", rank_max, "Maximum mean sales rank");
  ing->add_option("--availability-min", avail_min, "Minimum share of window days present");
  ing->add_option("--first-listed-before", ing_first_before, "Keep products first seen before this date");
  ing->add_flag("--require-buybox-variation", need_variation, "Keep products whose buy box changes hands");
  ing->add_option("--seller-rating-impute", ing_impute, "Seller rating written for platform rows");
  ing->add_option("--out", ing_out, "Output directory")->required();

  // test-coo / test-ob share most flags
  struct TestFlags {
    std::string panel, out, label, compare, inject;
    std::uint64_t inject_seed = 1;
    double multiplier = 15.0, noise = 1.0;
    int lag = 1;
    bool assume_lagged = false;
    SpecFlags spec;
  } coo_f, ob_f;
  auto* coo = app.add_subcommand("test-coo", "Conditioning-on-observables test");
  auto* ob = app.add_subcommand("test-ob", "Outcome-based test");
  for (auto [cmd, f] : {std::pair{coo, &coo_f}, std::pair{ob, &ob_f}}) {
    cmd->add_option("--panel", f->panel, "Panel CSV")->required()->check(CLI::ExistingFile);
    cmd->add_option("--lag", f->lag, "Days the covariates are lagged")->check(CLI::NonNegativeNumber);
    cmd->add_flag("--assume-lagged", f->assume_lagged, "Panel file is already lagged by --lag days");
    cmd->add_option("--label", f->label, "Sample label used in reports and plots");
    cmd->add_option("--out", f->out, "Output directory")->required();
    f->spec.add(cmd, cmd == coo);
  }
  coo->add_option("--inject", coo_f.inject, "Add an omitted variable built from the lagged panel: advantage or disadvantage")
      ->check(CLI::IsMember({"advantage", "disadvantage"}));
  coo->add_option("--inject-seed", coo_f.inject_seed, "Seed for the omitted-variable noise");
  coo->add_option("--multiplier", coo_f.multiplier, "Omitted-variable multiplier");
  coo->add_option("--noise-sd", coo_f.noise, "Omitted-variable noise SD")->check(CLI::NonNegativeNumber);
  ob->add_option("--compare", ob_f.compare, "COO report JSON to compare against")->check(CLI::ExistingFile);

  // simulate
  auto* sim = app.add_subcommand("simulate", "Generate a synthetic marketplace panel");
  std::optional<std::uint64_t> sim_seed;
  std::string sim_config, sim_out, sim_design, sim_sales, sim_inject, sim_deltas;
  std::optional<std::size_t> sim_products, sim_days;
  std::optional<double> sim_delta, sim_ob_bias;
  double sim_multiplier = 15.0, sim_noise = 1.0;
  std::size_t sim_reps = 0;
  sim->add_option("--seed", sim_seed, "Random seed")->required();
  sim->add_option("--config", sim_config, "Simulation config JSON file")->check(CLI::ExistingFile);
  sim->add_option("--products", sim_products, "Number of products");
  sim->add_option("--days", sim_days, "Number of days");
  sim->add_option("--delta", sim_delta, "True self-preferencing effect (log scale)");
  sim->add_option("--design", sim_design, "A (product effects) or B (comparison groups)")->check(CLI::IsMember({"A", "B"}));
  sim->add_option("--sales-model", sim_sales, "independent or visibility_driven")
      ->check(CLI::IsMember({"independent", "visibility_driven"}));
  sim->add_option("--ob-bias", sim_ob_bias, "Platform visibility inflation (visibility_driven)");
  sim->add_option("--inject", sim_inject, "Add an omitted variable: advantage or disadvantage")
      ->check(CLI::IsMember({"advantage", "disadvantage"}));
  sim->add_option("--multiplier", sim_multiplier, "Omitted-variable multiplier");
  sim->add_option("--noise-sd", sim_noise, "Omitted-variable noise SD")->check(CLI::NonNegativeNumber);
  sim->add_option("--replications", sim_reps, "Run a Monte Carlo study instead of writing a panel");
  sim->add_option("--deltas", sim_deltas, "Comma-separated true effects for the Monte Carlo grid");
  sim->add_option("--out", sim_out, "Output directory")->required();

  // robustness
  auto* rob = app.add_subcommand("robustness", "Sensitivity analyses");
  std::string rob_panel, rob_out, rob_cutoffs, rob_impute, rob_analyses;
  int rob_lag = 1;
  SpecFlags rob_spec;
  rob->add_option("--panel", rob_panel, "Unlagged panel CSV")->required()->check(CLI::ExistingFile);
  rob->add_option("--lag", rob_lag, "Days the covariates are lagged")->check(CLI::PositiveNumber);
  rob->add_option("--cutoffs", rob_cutoffs, "Ratio cutoffs, e.g. 1..30 or 1,2,inf");
  rob->add_option("--seller-rating-impute", rob_impute, "Imputations, e.g. none,80,90,95,100");
  rob->add_option("--analyses", rob_analyses, "Comma list of buybox, seller_rating, ratio");
  rob->add_option("--out", rob_out, "Output directory")->required();
  rob_spec.add(rob, false);

  // report
  auto* rep = app.add_subcommand("report", "Coefficient plot and summary over test reports");
  std::vector<std::string> rep_inputs, rep_labels;
  std::string rep_out, rep_title = "Self-preferencing estimates";
  rep->add_option("--input", rep_inputs, "Test report JSON (repeatable)")->required()->check(CLI::ExistingFile);
  rep->add_option("--label", rep_labels, "Label per --input");
  rep->add_option("--title", rep_title, "Plot title");
  rep->add_option("--out", rep_out, "Output directory")->required();

  CLI11_PARSE(app, argc, argv);

  try {
    if (*vis) {
      const auto dir = out_dir(vis_out);
      json opt = {{"cycle_length", cycle}, {"scale", scale}};
      char *csv = nullptr, *summary = nullptr;
      check(pa_visibility_compute(keywords.c_str(), ecp.empty() ? nullptr : ecp.c_str(), opt.dump().c_str(),
                                  &csv, &summary),
            "visibility");
      spill(dir / "visibility.csv", take(csv));
      json cfg = opt;
      cfg["ecp"] = ecp.empty() ? "geometric_default" : ecp;
      std::vector<std::string> inputs{keywords};
      if (!ecp.empty()) inputs.push_back(ecp);
      spill(dir / "visibility_report.json", envelope("visibility", cfg, inputs, take(summary)));
      std::cout << "wrote " << (dir / "visibility.csv").string() << "\n";
    } else if (*ing) {
      const auto dir = out_dir(ing_out);
      if (!ing_markets.empty() && ing_markets.size() != ing_panels.size())
        throw Failure("give one --market per --panel");
      if (ing_rates.size() > 1 && ing_rates.size() != ing_panels.size())
        throw Failure("give one --currency-rate, or one per --panel");
      std::vector<PanelPtr> panels;
      for (std::size_t i = 0; i < ing_panels.size(); ++i) {
        const double rate = ing_rates.empty() ? 1.0 : ing_rates.size() == 1 ? ing_rates[0] : ing_rates[i];
        panels.push_back(read_panel(ing_panels[i], rate));
      }
      PanelPtr pooled;
      if (panels.size() == 1 && ing_markets.empty()) {
        pooled = std::move(panels[0]);
      } else {
        std::vector<const pa_panel*> ptrs;
        std::vector<const char*> labels;
        for (std::size_t i = 0; i < panels.size(); ++i) {
          ptrs.push_back(panels[i].get());
          labels.push_back(ing_markets.empty() ? "" : ing_markets[i].c_str());
        }
        pa_panel* p = nullptr;
        check(pa_panel_pool(ptrs.data(), labels.data(), ptrs.size(), &p), "pooling panels");
        pooled.reset(p);
      }
      json filter = ing_filter.empty() ? json::object() : json::parse(slurp(ing_filter));
      if (!filter.contains("sales_rank_min")) filter["sales_rank_min"] = rank_min;
      if (!filter.contains("sales_rank_max")) filter["sales_rank_max"] = rank_max;
      if (!filter.contains("availability_min_share")) filter["availability_min_share"] = avail_min;
      if (!ing_first_before.empty()) filter["first_listed_before"] = ing_first_before;
      if (need_variation) filter["require_buybox_variation"] = true;
      const std::size_t rows_in = pa_panel_rows(pooled.get());
      const std::size_t products_in = pa_panel_products(pooled.get());
      pa_panel* f = nullptr;
      check(pa_panel_filter(pooled.get(), filter.dump().c_str(), &f), "filtering sample");
      PanelPtr kept(f);
      if (!ing_impute.empty()) {
        auto r = parse_rating(ing_impute);
        if (!r) throw Failure("ingest needs a numeric --seller-rating-impute");
        pa_panel* p = nullptr;
        check(pa_panel_impute_seller_rating(kept.get(), *r, &p), "imputing seller rating");
        kept.reset(p);
      }
      check(pa_panel_write(kept.get(), (dir / "panel.csv").string().c_str()), "writing panel");
      char* summary = nullptr;
      check(pa_panel_summary(kept.get(), &summary), "summary statistics");
      spill(dir / "summary_stats.csv", take(summary));
      char* digest = nullptr;
      check(pa_panel_digest(kept.get(), &digest), "digest");
      json result = {{"rows_in", rows_in},
                     {"products_in", products_in},
                     {"rows_kept", pa_panel_rows(kept.get())},
                     {"products_kept", pa_panel_products(kept.get())},
                     {"sample_digest", take(digest)}};
      json cfg = {{"filter", filter}, {"markets", ing_markets}, {"currency_rates", ing_rates}};
      if (!ing_impute.empty()) cfg["seller_rating_impute"] = ing_impute;
      spill(dir / "ingest_report.json", envelope("ingest", cfg, ing_panels, result.dump()));
      std::cout << "kept " << result["rows_kept"] << " of " << rows_in << " rows ("
                << result["products_kept"] << " products)\n";
    } else if (*coo || *ob) {
      const bool is_coo = coo->parsed();
      const TestFlags& f = is_coo ? coo_f : ob_f;
      const auto dir = out_dir(f.out);
      if (f.lag < 1 && f.assume_lagged) throw Failure("--assume-lagged needs --lag of at least 1");
      json spec = f.spec.build(is_coo ? kCooCovariates : kObCovariates);
      const std::string outcome = spec.value("outcome", is_coo ? "organic_visibility" : "sales_rank");
      PanelPtr raw = read_panel(f.panel);
      PanelPtr lagged = lagged_panel(raw.get(), f.lag, f.assume_lagged, outcome, f.panel);
      json cfg = {{"lag", f.lag}, {"assume_lagged", f.assume_lagged}};
      if (is_coo && !f.inject.empty()) {
        // Built after lagging so the column carries same-day visibility.
        pa_panel* q = nullptr;
        check(pa_inject_omitted_variable(lagged.get(), f.inject.c_str(), f.multiplier, f.inject_seed, f.noise, &q),
              "injecting omitted variable");
        lagged.reset(q);
        if (!spec.contains("covariates")) spec["covariates"] = kCooCovariates;
        spec["covariates"].push_back({{"column", "amazon_" + f.inject}, {"transform", "identity"}});
        cfg["inject"] = {{"kind", f.inject}, {"seed", f.inject_seed}, {"multiplier", f.multiplier}, {"noise_sd", f.noise}};
      }
      cfg["spec"] = spec;
      char* out = nullptr;
      const std::string spec_text = spec.dump();
      const char* label = f.label.empty() ? nullptr : f.label.c_str();
      check(is_coo ? pa_test_coo(lagged.get(), spec_text.c_str(), label, &out)
                   : pa_test_ob(lagged.get(), spec_text.c_str(), label, &out),
            is_coo ? "COO test" : "OB test");
      const std::string result = take(out);
      if (!f.label.empty()) cfg["label"] = f.label;
      const std::string doc = envelope(is_coo ? "test-coo" : "test-ob", cfg, {f.panel}, result);
      spill(dir / (is_coo ? "coo_report.json" : "ob_report.json"), doc);
      char* text = nullptr;
      check(pa_report_summary(doc.c_str(), &text), "summary");
      std::cout << take(text);
      if (!is_coo && !f.compare.empty()) {
        const std::string coo_doc = slurp(f.compare);
        char* cmp = nullptr;
        check(pa_compare_tests(coo_doc.c_str(), doc.c_str(), &cmp), "comparing tests");
        const std::string joint = envelope("test-ob --compare", cfg, {f.panel, f.compare}, take(cmp));
        spill(dir / "comparison.json", joint);
        std::cout << "verdict: " << json::parse(joint)["result"]["verdict"].get<std::string>() << "\n";
      }
    } else if (*sim) {
      const auto dir = out_dir(sim_out);
      json cfg = sim_config.empty() ? json::object() : json::parse(slurp(sim_config));
      cfg["seed"] = *sim_seed;
      if (sim_products) cfg["n_products"] = *sim_products;
      if (sim_days) cfg["n_days"] = *sim_days;
      if (sim_delta) cfg["delta_true"] = *sim_delta;
      if (!sim_design.empty()) cfg["design"] = sim_design;
      if (!sim_sales.empty()) cfg["sales_model"] = sim_sales;
      if (sim_ob_bias) cfg["ob_bias"] = *sim_ob_bias;
      std::vector<std::string> inputs;
      if (!sim_config.empty()) inputs.push_back(sim_config);
      if (sim_reps > 0) {
        json grid = json::array();
        if (sim_deltas.empty()) {
          grid.push_back(cfg);
        } else {
          for (const auto& d : split(sim_deltas, ',')) {
            json c = cfg;
            try {
              c["delta_true"] = std::stod(d);
            } catch (const std::exception&) {
              throw Failure("invalid delta '" + d + "'");
            }
            grid.push_back(c);
          }
        }
        json req = {{"grid", grid}, {"replications", sim_reps}, {"lag", 1}};
        char *out = nullptr, *csv = nullptr;
        check(pa_monte_carlo(req.dump().c_str(), &out, &csv), "Monte Carlo study");
        const std::string table = take(csv);
        spill(dir / "monte_carlo.csv", table);
        spill(dir / "monte_carlo.json", envelope("simulate --replications", req, inputs, take(out)));
        std::cout << table;
      } else {
        pa_panel* p = nullptr;
        char* truth = nullptr;
        check(pa_simulate(cfg.dump().c_str(), &p, &truth), "simulation");
        PanelPtr panel(p);
        const std::string truth_text = take(truth);
        if (!sim_inject.empty()) {
          pa_panel* q = nullptr;
          check(pa_inject_omitted_variable(panel.get(), sim_inject.c_str(), sim_multiplier, *sim_seed, sim_noise, &q),
                "injecting omitted variable");
          panel.reset(q);
          cfg["inject"] = {{"kind", sim_inject}, {"multiplier", sim_multiplier}, {"noise_sd", sim_noise}};
        }
        check(pa_panel_write(panel.get(), (dir / "panel.csv").string().c_str()), "writing panel");
        spill(dir / "ground_truth.json", envelope("simulate", cfg, inputs, truth_text));
        std::cout << "wrote " << pa_panel_rows(panel.get()) << " rows to " << (dir / "panel.csv").string() << "\n";
      }
    } else if (*rob) {
      const auto dir = out_dir(rob_out);
      json spec = rob_spec.build(kCooCovariates);
      std::vector<std::string> analyses = rob_analyses.empty() ? std::vector<std::string>{} : split(rob_analyses, ',');
      if (analyses.empty()) {
        analyses = {"buybox", "seller_rating"};
        if (!rob_cutoffs.empty()) analyses.push_back("ratio");
      }
      PanelPtr raw = read_panel(rob_panel);
      const std::string outcome = spec.value("outcome", "organic_visibility");
      PanelPtr lagged = lagged_panel(raw.get(), rob_lag, false, outcome, rob_panel);
      json all = json::array();
      std::string csv;
      json cfg = {{"lag", rob_lag}, {"spec", spec}, {"analyses", analyses}};
      for (const auto& a : analyses) {
        json opt = {{"spec", spec}, {"lag", rob_lag}};
        if (a == "ratio") {
          opt["cutoffs"] = parse_cutoffs(rob_cutoffs.empty() ? "1..30" : rob_cutoffs);
          cfg["cutoffs"] = opt["cutoffs"];
        }
        if (a == "seller_rating" && !rob_impute.empty()) {
          json levels = json::array();
          for (const auto& s : split(rob_impute, ',')) {
            auto r = parse_rating(s);
            if (r) levels.push_back(*r);
            else levels.push_back(nullptr);
          }
          opt["imputations"] = levels;
          cfg["imputations"] = levels;
        }
        if (a != "buybox") opt.erase("lag");
        char *out = nullptr, *part = nullptr;
        check(pa_robustness(a == "buybox" ? raw.get() : lagged.get(), a.c_str(), opt.dump().c_str(), &out, &part),
              "robustness analysis '" + a + "'");
        for (auto& v : json::parse(take(out))) all.push_back(v);
        const std::string p = take(part);
        csv += csv.empty() ? p : p.substr(p.find('\n') + 1);
      }
      spill(dir / "sensitivity.csv", csv);
      spill(dir / "robustness_report.json", envelope("robustness", cfg, {rob_panel}, all.dump()));
      for (const auto& v : all) {
        std::cout << v["analysis"].get<std::string>() << " " << v["variant"].get<std::string>() << ": ";
        if (v["report"].is_null()) std::cout << "no estimate";
        else std::cout << v["report"]["conclusion"].get<std::string>();
        std::cout << "\n";
      }
    } else if (*rep) {
      const auto dir = out_dir(rep_out);
      if (!rep_labels.empty() && rep_labels.size() != rep_inputs.size())
        throw Failure("give one --label per --input");
      json reports = json::array();
      std::string text;
      for (std::size_t i = 0; i < rep_inputs.size(); ++i) {
        json doc = json::parse(slurp(rep_inputs[i]));
        json r = doc.contains("result") ? doc["result"] : doc;
        if (!rep_labels.empty()) r["label"] = rep_labels[i];
        else if (!r.contains("label")) r["label"] = fs::path(rep_inputs[i]).parent_path().filename().string();
        char* t = nullptr;
        check(pa_report_summary(r.dump().c_str(), &t), "summarizing " + rep_inputs[i]);
        text += take(t);
        reports.push_back(r);
      }
      char *svg = nullptr, *csv = nullptr;
      check(pa_report_render(reports.dump().c_str(), rep_title.c_str(), &svg, &csv), "rendering plot");
      spill(dir / "coefficient_plot.svg", take(svg));
      spill(dir / "plot_data.csv", take(csv));
      spill(dir / "summary.txt", text);
      json cfg = {{"title", rep_title}, {"labels", rep_labels}};
      spill(dir / "report.json", envelope("report", cfg, rep_inputs, reports.dump()));
      std::cout << text;
    }
  } catch (const Failure& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  } catch (const json::exception& e) {
    std::cerr << "error: malformed JSON input: " << e.what() << "\n";
    return 1;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}
