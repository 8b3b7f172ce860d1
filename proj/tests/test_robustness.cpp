#include <doctest.h>

#include <cmath>
#include <limits>
#include <random>

#include "prefaudit/robustness.hpp"
#include "prefaudit/synthetic.hpp"

using namespace prefaudit;
using namespace prefaudit::robust;

namespace {

synth::Simulation market(std::uint64_t seed, synth::Design design = synth::Design::StudyA) {
  synth::SimulationConfig c;
  c.seed = seed;
  c.n_products = design == synth::Design::StudyA ? 120 : 240;
  c.n_days = 30;
  c.design = design;
  return synth::simulate_panel(c);
}

panel::Observation row(std::string pid, Day d, std::string seller, bool amazon = false) {
  panel::Observation o;
  o.product_id = std::move(pid);
  o.date = d;
  o.organic_visibility = 1.0;
  o.buybox_seller_id = std::move(seller);
  o.is_amazon = amazon;
  o.rating_seller = 90;
  return o;
}

}  // namespace

TEST_CASE("change indicator marks seller switches") {
  panel::Panel p;
  for (Day d = 1; d <= 8; ++d) p.rows.push_back(row("A", d, d >= 5 ? "S2" : "S1"));
  for (Day d = 1; d <= 8; ++d) p.rows.push_back(row("B", d, "S1"));
  p.rows.push_back(row("C", 1, "S1"));
  p.rows.push_back(row("C", 3, "S2"));  // gap: not a day-to-day change
  panel::normalize(p);
  auto c = buybox_change_indicator(p);
  double total = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    total += c[i];
    if (c[i] == 1.0) {
      CHECK(p.rows[i].product_id == "A");
      CHECK(p.rows[i].date == 5);
    }
  }
  CHECK(total == 1.0);
}

TEST_CASE("buy-box variants") {
  auto sim = market(1);
  auto spec = fe::ModelSpec::visibility_model();
  auto v = buybox_change_sensitivity(sim.panel, spec);
  REQUIRE(v.size() == 5);
  const char* names[] = {"original", "add_t", "add_t_t1", "exclude_t", "exclude_t_t1"};
  for (std::size_t i = 0; i < 5; ++i) {
    CHECK(v[i].variant == names[i]);
    REQUIRE(v[i].report);
    CHECK(v[i].report->ci_low < 0.0);
    CHECK(v[i].report->ci_high > 0.0);
  }
  CHECK(v[3].rows_excluded > 0);
  CHECK(v[4].rows_excluded >= v[3].rows_excluded);
  CHECK(v[1].report->fit.index_of(kChangeToday));
  CHECK(v[2].report->fit.index_of(kChangeYesterday));
  auto original = sp::coo_test(panel::lag_covariates(sim.panel, 1), spec);
  CHECK(v[0].report->estimate == original.estimate);
  CHECK_THROWS_AS(buybox_change_sensitivity(panel::lag_covariates(sim.panel, 1), spec), PreconditionError);
}

TEST_CASE("no seller changes: all variants coincide") {
  auto sim = market(2);
  // pin each product to the seller it starts with
  std::string pid, seller;
  bool amazon = false;
  std::optional<double> rating;
  bool prime = false;
  for (auto& r : sim.panel.rows) {
    if (r.product_id != pid) {
      pid = r.product_id;
      seller = r.buybox_seller_id;
      amazon = r.is_amazon;
      rating = r.rating_seller;
      prime = r.is_prime;
    }
    r.buybox_seller_id = seller;
    r.is_amazon = amazon;
    r.rating_seller = rating;
    r.is_prime = prime;
  }
  // a time-varying binary flag stands in for the protected attribute
  std::mt19937_64 g(2);
  std::vector<double> flag(sim.panel.size());
  for (auto& f : flag) f = static_cast<double>(g() % 2);
  sim.panel.add_extra("flag", flag);
  auto spec = fe::ModelSpec::visibility_model();
  spec.drop_covariate(panel::kIsPrime);
  spec.drop_covariate(panel::kRatingSeller);
  spec.protected_attribute = "flag";
  auto v = buybox_change_sensitivity(sim.panel, spec);
  REQUIRE(v.size() == 5);
  for (const auto& x : v) {
    REQUIRE(x.report);
    CHECK(std::abs(x.report->estimate - v[0].report->estimate) < 1e-10);
    CHECK(x.rows_excluded == 0);
  }
  CHECK_FALSE(v[1].note.empty());
}

TEST_CASE("one change excludes one row per affected product") {
  auto sim = market(3);
  std::size_t switched = 0;
  std::string last_pid;
  // one switch on the fifth day for products that have a third-party seller
  for (std::size_t i = 0; i < sim.panel.rows.size(); ++i) {
    auto& r = sim.panel.rows[i];
    const Day k = r.date - sim.panel.window_first;
    const bool flip = (i / 30) % 2 == 0;
    r.is_amazon = flip && k >= 5;
    r.buybox_seller_id = r.is_amazon ? "AMAZON" : "S-" + r.product_id;
    r.rating_seller = r.is_amazon ? std::optional<double>() : std::optional<double>(90.0);
    if (flip && k == 5) ++switched;
  }
  auto v = buybox_change_sensitivity(sim.panel, fe::ModelSpec::visibility_model());
  CHECK(v[3].rows_excluded == switched);
  CHECK(v[4].rows_excluded == 2 * switched);
}

TEST_CASE("group ratios") {
  panel::Panel p;
  auto add = [&](std::string pid, std::string g, bool amazon, double v0, double v1) {
    auto a = row(pid, 0, "X", amazon);
    auto b = row(pid, 1, "X", amazon);
    a.organic_visibility = v0;
    b.organic_visibility = v1;
    a.comparison_group_id = b.comparison_group_id = g;
    p.rows.push_back(a);
    p.rows.push_back(b);
  };
  add("AB1", "G1", true, 2, 4);   // mean 3
  add("S1", "G1", false, 1, 1);   // mean 1
  add("S2", "G1", false, 2, 2);   // mean 2 -> substitute mean 1.5, ratio 2
  add("AB2", "G2", true, 1, 1);
  add("S3", "G2", false, 4, 4);  // ratio 4 (inverse)
  add("AB3", "G3", true, 0, 0);
  add("S4", "G3", false, 0, 0);  // both zero -> 1
  add("AB4", "G4", true, 0, 0);
  add("S5", "G4", false, 1, 1);  // one side zero -> inf
  add("AB5", "G5", true, 5, 5);
  add("S6", "G5", false, 5, 5);  // equal -> 1
  panel::normalize(p);
  auto r = group_visibility_ratios(p);
  REQUIRE(r.size() == 5);
  CHECK(r[0].ratio == doctest::Approx(2.0));
  CHECK(r[1].ratio == doctest::Approx(4.0));
  CHECK(r[2].ratio == 1.0);
  CHECK(std::isinf(r[3].ratio));
  CHECK(r[4].ratio == 1.0);

  double share = -1;
  auto kept = filter_by_ratio(p, 1.0, &share);
  CHECK(share == doctest::Approx(3.0 / 5));
  filter_by_ratio(p, std::numeric_limits<double>::infinity(), &share);
  CHECK(share == 0.0);
  double prev = 1.0;
  for (double x = 1; x <= 30; x += 0.5) {
    filter_by_ratio(p, x, &share);
    CHECK(share <= prev);
    prev = share;
  }
  // nesting: x then x' >= x equals x
  auto a = filter_by_ratio(filter_by_ratio(p, 2.0), 3.0);
  CHECK(panel::to_csv(a) == panel::to_csv(filter_by_ratio(p, 2.0)));
  CHECK_THROWS(filter_by_ratio(p, 0.5));
}

TEST_CASE("ratio cutoff sweep") {
  auto sim = market(4, synth::Design::StudyB);
  auto spec = fe::ModelSpec::visibility_model();
  spec.unit = fe::UnitKind::ComparisonGroup;
  auto lagged = panel::lag_covariates(sim.panel, 1);
  auto cutoffs = default_cutoffs();
  CHECK(cutoffs.size() == 30);
  cutoffs.push_back(std::numeric_limits<double>::infinity());
  auto v = ratio_cutoff_sensitivity(lagged, spec, cutoffs);
  REQUIRE(v.size() == 31);
  for (std::size_t i = 1; i < v.size(); ++i) CHECK(v[i].share_dropped <= v[i - 1].share_dropped);
  CHECK(v.back().variant == "inf");
  CHECK(v.back().share_dropped == 0.0);
  REQUIRE(v.back().report);
  CHECK(v.back().report->estimate == sp::coo_test(lagged, spec).estimate);
  CHECK(v[0].share_dropped == 1.0);
  CHECK_FALSE(v[0].report);
  CHECK_FALSE(v[0].note.empty());
}

TEST_CASE("seller rating sweep") {
  auto sim = market(5);
  auto lagged = panel::lag_covariates(sim.panel, 1);
  auto spec = fe::ModelSpec::visibility_model();
  auto v = seller_rating_sensitivity(lagged, spec, default_imputations());
  REQUIRE(v.size() == 5);
  CHECK(v[0].variant == "none");
  CHECK(v[0].report->fit.names.size() + 1 == v[4].report->fit.names.size());
  auto baseline = sp::coo_test(lagged, spec);
  CHECK(v[4].report->estimate == baseline.estimate);
  // the imputed level only shifts the platform rows, so the protected
  // coefficient moves by -(level change) * seller rating coefficient
  const double b_rs = v[4].report->fit.coef("rating_seller");
  for (std::size_t i = 1; i < 4; ++i) {
    const double level = std::stod(v[i].variant);
    CHECK(v[i].report->estimate - v[4].report->estimate == doctest::Approx(-(level - 100.0) * b_rs).epsilon(1e-6));
    CHECK(v[i].report->fit.coef("rating_seller") == doctest::Approx(b_rs).epsilon(1e-6));
  }
  CHECK_THROWS(seller_rating_sensitivity(lagged, spec, {120.0}));
}

TEST_CASE("sensitivity csv") {
  VariantReport empty{"ratio_cutoff", "1", std::nullopt, 1.0, 10, "all groups dropped"};
  auto csv = sensitivity_csv({empty});
  CHECK(csv == "analysis,variant,delta,se,ci_low,ci_high,share_dropped\nratio_cutoff,1,,,,,1\n");
}
