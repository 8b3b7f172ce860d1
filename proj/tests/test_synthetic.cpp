#include <doctest.h>

#include <cmath>

#include "prefaudit/synthetic.hpp"

using namespace prefaudit;
using namespace prefaudit::synth;

namespace {

SimulationConfig small(std::uint64_t seed, double delta = 0.0) {
  SimulationConfig c;
  c.seed = seed;
  c.n_products = 80;
  c.n_days = 40;
  c.delta_true = delta;
  return c;
}

double corr(const std::vector<double>& a, const std::vector<double>& b) {
  const double n = static_cast<double>(a.size());
  double ma = 0, mb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    ma += a[i] / n;
    mb += b[i] / n;
  }
  double sab = 0, saa = 0, sbb = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    sab += (a[i] - ma) * (b[i] - mb);
    saa += (a[i] - ma) * (a[i] - ma);
    sbb += (b[i] - mb) * (b[i] - mb);
  }
  return sab / std::sqrt(saa * sbb);
}

}  // namespace

TEST_CASE("config validation") {
  SimulationConfig c;
  CHECK_THROWS(simulate_panel(c));  // no seed
  c.seed = 1;
  c.n_products = 1;
  CHECK_THROWS(validate(c));
  c.n_products = 5;
  c.n_days = 1;
  CHECK_THROWS(validate(c));
  c.n_days = 5;
  CHECK_NOTHROW(validate(c));
  CHECK(c.omitted_multiplier == 15.0);
  CHECK(c.omitted_noise_sd == 1.0);
  CHECK(c.buybox_mean_holding == 10.0);
}

TEST_CASE("generation is reproducible from the seed") {
  auto a = simulate_panel(small(7)), b = simulate_panel(small(7)), c = simulate_panel(small(8));
  CHECK(panel::to_csv(a.panel) == panel::to_csv(b.panel));
  CHECK(panel::to_csv(a.panel) != panel::to_csv(c.panel));
  CHECK(a.truth.gamma == b.truth.gamma);
  CHECK(a.panel.size() == 80 * 40);
}

TEST_CASE("panel content follows the schema") {
  auto s = simulate_panel(small(3));
  panel::validate(s.panel);
  std::size_t platform = 0;
  for (const auto& r : s.panel.rows) {
    if (r.is_amazon) {
      ++platform;
      CHECK_FALSE(r.rating_seller);
      CHECK(r.buybox_seller_id == "AMAZON");
    } else {
      CHECK(r.rating_seller);
    }
    CHECK(r.sponsored_visibility);
  }
  CHECK(platform > 0);
  CHECK(platform < s.panel.size());
  auto cfg = small(3);
  cfg.emit_platform_seller_rating = true;
  for (const auto& r : simulate_panel(cfg).panel.rows)
    if (r.is_amazon) CHECK(*r.rating_seller == 100.0);
}

TEST_CASE("null market: visibility noise is mean one for both seller types") {
  auto cfg = small(4);
  cfg.n_products = 300;
  auto s = simulate_panel(cfg);
  double sum[2] = {0, 0};
  double n[2] = {0, 0};
  for (std::size_t i = 0; i < s.panel.size(); ++i) {
    const auto& r = s.panel.rows[i];
    if (r.date == s.panel.window_first) continue;
    const int k = r.is_amazon ? 1 : 0;
    sum[k] += r.organic_visibility / std::exp(s.truth.log_mean[i]);
    n[k] += 1;
  }
  CHECK(std::abs(sum[1] / n[1] / (sum[0] / n[0]) - 1.0) < 0.05);
}

TEST_CASE("buy box holding times average about ten days") {
  auto cfg = small(5);
  cfg.n_products = 300;
  cfg.n_days = 120;
  auto s = simulate_panel(cfg);
  std::size_t changes = 0, days = 0;
  for (std::size_t i = 1; i < s.panel.size(); ++i) {
    const auto& a = s.panel.rows[i - 1];
    const auto& b = s.panel.rows[i];
    if (a.product_id != b.product_id) continue;
    ++days;
    if (a.buybox_seller_id != b.buybox_seller_id) ++changes;
  }
  // Single-seller products never change, so the pooled rate sits below 1/10.
  CHECK(changes > 0);
  CHECK(static_cast<double>(days) / changes >= 9.0);
}

TEST_CASE("comparison group layout") {
  auto cfg = small(6);
  cfg.design = Design::StudyB;
  cfg.n_products = 97;
  auto s = simulate_panel(cfg);
  std::map<std::string, std::pair<int, int>> groups;  // platform, substitutes
  for (const auto& r : s.panel.rows) {
    if (r.date != s.panel.window_first) continue;
    REQUIRE_FALSE(r.comparison_group_id.empty());
    auto& g = groups[r.comparison_group_id];
    (r.is_amazon ? g.first : g.second) += 1;
  }
  for (const auto& [id, g] : groups) {
    CHECK(g.first == 1);
    CHECK(g.second >= 1);
    CHECK(g.second <= 5 + 1);  // a folded trailing platform product counts as substitute
  }
}

TEST_CASE("label swap negates the estimate") {
  auto cfg = small(9);
  cfg.emit_platform_seller_rating = true;
  auto s = simulate_panel(cfg);
  auto swapped = s.panel;
  for (auto& r : swapped.rows) r.is_amazon = !r.is_amazon;
  auto spec = fe::ModelSpec::visibility_model();
  auto a = sp::coo_test(panel::lag_covariates(s.panel, 1), spec);
  auto b = sp::coo_test(panel::lag_covariates(swapped, 1), spec);
  CHECK(b.estimate == doctest::Approx(-a.estimate).epsilon(1e-8));
  CHECK(b.se == doctest::Approx(a.se).epsilon(1e-6));
}

TEST_CASE("omitted variable injection") {
  auto s = simulate_panel(small(10));
  auto zero = s.panel;
  for (auto& r : zero.rows) r.organic_visibility = 0.0;
  auto adv0 = inject_omitted_variable(zero, OmittedKind::Advantage, 15.0, 1, 0.0);
  const auto col = *adv0.extra_index("amazon_advantage");
  for (const auto& r : adv0.rows) CHECK(r.extra[col] == (r.is_amazon ? 15.0 : 0.0));

  auto adv = inject_omitted_variable(s.panel, OmittedKind::Advantage, 15.0, 2);
  auto dis = inject_omitted_variable(s.panel, OmittedKind::Disadvantage, 15.0, 2);
  std::vector<double> flag, a, d;
  for (std::size_t i = 0; i < adv.size(); ++i) {
    flag.push_back(adv.rows[i].is_amazon);
    a.push_back(adv.rows[i].extra[0]);
    d.push_back(dis.rows[i].extra[0]);
  }
  CHECK(corr(flag, a) > 0);
  CHECK(corr(flag, d) < 0);

  auto stripped = adv;
  stripped.drop_extra("amazon_advantage");
  CHECK(panel::to_csv(stripped) == panel::to_csv(s.panel));
  CHECK(omitted_kind_from_string("disadvantage") == OmittedKind::Disadvantage);
  CHECK_THROWS(omitted_kind_from_string("other"));
}

TEST_CASE("omitted variables move the estimate in opposite directions") {
  auto s = simulate_panel(small(12, 0.0));
  auto spec = fe::ModelSpec::visibility_model();
  const auto lagged = panel::lag_covariates(s.panel, 1);
  const double base = sp::coo_test(lagged, spec).estimate;
  for (auto kind : {OmittedKind::Advantage, OmittedKind::Disadvantage}) {
    auto p = inject_omitted_variable(lagged, kind, 15.0, 3);
    auto sp2 = spec;
    sp2.covariates.push_back({p.extra_names.back(), fe::Transform::Identity});
    const double est = sp::coo_test(p, sp2).estimate;
    if (kind == OmittedKind::Advantage) CHECK(est < base);
    else CHECK(est > base);
  }
}

TEST_CASE("monte carlo bookkeeping") {
  auto c = small(13, 0.5);
  c.n_products = 40;
  c.n_days = 20;
  MonteCarloOptions o;
  o.replications = 2;
  o.threads = 1;
  auto one = monte_carlo_study({c}, o);
  REQUIRE(one.size() == 1);
  CHECK(one[0].wide_variance);
  CHECK(one[0].successes == 2);
  o.replications = 12;
  c.n_products = 120;
  c.n_days = 40;
  auto a = monte_carlo_study({c, small(14)}, o);
  o.threads = 3;
  auto b = monte_carlo_study({c, small(14)}, o);
  CHECK(a[0].estimates == b[0].estimates);
  CHECK(a[1].std_errors == b[1].std_errors);
  CHECK(a[0].rejection_rate == 1.0);
  o.replications = 1;
  CHECK_THROWS(monte_carlo_study({c}, o));
}

TEST_CASE("monte carlo records failing replications") {
  auto c = small(15);
  c.n_products = 2;
  c.n_days = 2;  // lagging leaves one day: date effects cannot be clustered
  MonteCarloOptions o;
  o.replications = 3;
  auto cells = monte_carlo_study({c}, o);
  CHECK(cells[0].successes == 0);
  CHECK(cells[0].failures.size() == 3);
  CHECK(std::isnan(cells[0].mean_estimate));
}
