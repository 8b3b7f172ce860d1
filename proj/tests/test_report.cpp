#include <doctest.h>

#include "prefaudit/report.hpp"

using namespace prefaudit;
using report::json;

namespace {

sp::TestReport sample_report(double est = 0.048, double se = 0.023) {
  sp::TestReport r;
  r.kind = sp::TestKind::COO;
  r.label = "France";
  r.attribute = "is_amazon";
  r.estimate = est;
  r.se = se;
  r.ci_low = est - 1.96 * se;
  r.ci_high = est + 1.96 * se;
  r.percent = fe::transform_estimate(est, se);
  r.conclusion = sp::conclude(r.ci_low, r.ci_high);
  r.sample_digest = "abc";
  r.sample_rows = 10;
  r.lag_days = 1;
  return r;
}

}  // namespace

TEST_CASE("test reports survive a json roundtrip") {
  auto r = sample_report();
  auto j = report::to_json(r, false);
  CHECK(j["conclusion"] == "evidence-for");
  auto back = report::test_report_from_json(j);
  CHECK(back.estimate == r.estimate);
  CHECK(back.percent.ci_high == r.percent.ci_high);
  CHECK(back.sample_digest == "abc");
  auto env = report::envelope("test-coo", json{{"lag", 1}}, {{"panel.csv", "00"}}, j);
  CHECK(env["schema_version"] == report::kSchemaVersion);
  CHECK(env["config_digest"] == sha256_hex(json{{"lag", 1}}.dump()));
  CHECK(report::test_report_from_json(env).label == "France");
  j["conclusion"] = "negative";
  CHECK_THROWS(report::test_report_from_json(j));
  CHECK_THROWS(report::test_report_from_json(json{{"test", "COO"}}));
}

TEST_CASE("model spec parsing") {
  auto s = report::model_spec_from_json(json::parse(R"({"covariates":["ln_price","is_prime"],"unit":"group"})"),
                                        fe::ModelSpec::visibility_model());
  REQUIRE(s.covariates.size() == 2);
  CHECK(s.covariates[0].column == "price");
  CHECK(s.covariates[0].transform == fe::Transform::Log);
  CHECK(s.unit == fe::UnitKind::ComparisonGroup);
  CHECK_THROWS(report::model_spec_from_json(json{{"bogus", 1}}, {}));
  auto round = report::model_spec_from_json(report::to_json(s), {});
  CHECK(round.covariates.size() == 2);
  CHECK(round.covariates[1].label() == "is_prime");
}

TEST_CASE("simulation config parsing") {
  auto c = report::simulation_config_from_json(json::parse(R"({"seed":7,"n_products":30,"delta_true":0.05})"));
  CHECK(*c.seed == 7);
  CHECK(c.n_products == 30);
  CHECK(c.delta_true == 0.05);
  auto again = report::simulation_config_from_json(report::to_json(c));
  CHECK(report::to_json(again) == report::to_json(c));
  CHECK_THROWS(report::simulation_config_from_json(json{{"sed", 1}}));
}

TEST_CASE("sample filter parsing") {
  auto f = report::sample_filter_from_json(
      json::parse(R"({"sales_rank_min":1,"sales_rank_max":1000,"first_listed_before":"2020-01-01"})"));
  CHECK(f.sales_rank_max == 1000);
  CHECK(*f.first_listed_before == parse_iso_date("2020-01-01"));
  CHECK_THROWS(report::sample_filter_from_json(json{{"sales_rank_min", 5}, {"sales_rank_max", 1}}));
}

TEST_CASE("summary text") {
  auto t = report::summary_text(sample_report());
  CHECK(t.find("COO test [France]") != std::string::npos);
  CHECK(t.find("4.92%") != std::string::npos);
  CHECK(t.find("evidence-for") != std::string::npos);
}

TEST_CASE("coefficient plot") {
  std::vector<report::PlotPoint> pts{report::plot_point(sample_report()),
                                     report::plot_point(sample_report(-0.616, 0.05), "Study B <all>")};
  auto svg = report::render_coefficient_svg(pts, "Estimates");
  CHECK(svg.rfind("<svg", 0) == 0);
  CHECK(svg.find("France") != std::string::npos);
  CHECK(svg.find("Study B &lt;all&gt;") != std::string::npos);
  CHECK(svg.find("stroke-dasharray") != std::string::npos);
  auto csv = report::plot_data_csv(pts);
  CHECK(csv.rfind("label,percent,ci_low,ci_high\n", 0) == 0);
  CHECK(csv.find("France,4.9") != std::string::npos);
  CHECK(report::render_coefficient_svg(pts, "Estimates") == svg);
}

TEST_CASE("monte carlo csv") {
  synth::MonteCarloCell c;
  c.config.delta_true = 0.05;
  c.replications = 2;
  c.wide_variance = true;
  auto csv = report::monte_carlo_csv({c});
  CHECK(csv.find("\nA,0.05,2,0,") != std::string::npos);
  CHECK(csv.back() == '\n');
  CHECK(report::to_json(c)["wide_variance"] == true);
}
