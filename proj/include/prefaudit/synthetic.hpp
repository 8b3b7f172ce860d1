#pragma once

// Synthetic marketplace panels with known ground truth, omitted-variable
// injection and Monte Carlo studies.
//
// Visibility on day t is drawn from a Gamma distribution with mean
//   exp(delta isAmazon + b'x + alpha_i + gamma_t)
// evaluated at day t-1's covariates, so lagging the panel by one day gives a
// correctly specified model. In the "visibility_driven" sales model the sales
// rank of day t+1 is instead generated from day t's visibility, sponsored
// visibility, price and a latent utility that visibility partly reveals.

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "prefaudit/fe_glm.hpp"
#include "prefaudit/panel.hpp"
#include "prefaudit/sp_tests.hpp"

namespace prefaudit::synth {

enum class Design { StudyA, StudyB };
enum class SalesModel { Independent, VisibilityDriven };

struct Betas {
  double ln_sales_rank = -0.120;
  double ln_price = -0.368;
  double ln_count_reviews = 0.033;
  double rating_product = 0.104;
  double rating_seller = 0.0;
  double is_prime = 0.029;
};

struct SimulationConfig {
  Design design = Design::StudyA;
  SalesModel sales_model = SalesModel::Independent;
  std::size_t n_products = 200;
  std::size_t n_days = 60;
  std::string start_date = "2020-01-01";
  std::string market = "SYN";
  std::optional<std::uint64_t> seed;  // mandatory

  double delta_true = 0.0;
  Betas betas;

  double alpha_mean = 3.0;  // mean product effect (log scale)
  double alpha_sd = 1.0;
  double gamma_sd = 0.2;
  double gamma_shape = 2.0;  // Gamma noise shape; larger is less noisy

  // Covariate processes.
  double sales_rank_log_mean = 8.5;
  double sales_rank_log_sd = 1.0;   // across products
  double sales_rank_ar = 0.9;
  double sales_rank_innovation_sd = 0.15;
  double price_log_mean = 3.3;
  double price_log_sd = 0.6;
  double price_walk_sd = 0.02;
  double seller_markup_sd = 0.05;
  double review_log_mean = 5.0;
  double review_log_sd = 1.2;
  double review_growth_max = 0.01;  // per day
  double rating_noise_sd = 0.02;

  // Buy box.
  double buybox_mean_holding = 10.0;  // days
  double platform_product_share = 0.5;
  std::size_t max_third_party_sellers = 3;
  double platform_seller_rating = 100.0;
  bool emit_platform_seller_rating = false;  // platform rows carry no rating by default

  // Sponsored visibility.
  double sponsored_zero_share = 0.05;
  double sponsored_log_sd = 0.5;

  // Study B.
  std::size_t max_substitutes = 5;
  double product_noise_sd = 0.2;

  // Visibility-driven sales.
  double ob_bias = 0.0;            // platform visibility inflation at fixed utility
  double utility_sd = 0.5;
  double utility_loading = 1.0;    // visibility response to utility
  double visibility_noise_sd = 0.5;
  double demand_visibility = 0.5;  // theta
  double demand_utility = 1.0;     // phi
  double demand_sponsored = 0.1;
  double demand_price = 1.0;
  double sales_noise_sd = 0.2;

  // Omitted-variable simulation.
  double omitted_multiplier = 15.0;
  double omitted_noise_sd = 1.0;
};

void validate(const SimulationConfig& config);

struct GroundTruth {
  double delta_true = 0.0;
  Betas betas;
  double platform_seller_rating = 100.0;
  std::vector<std::string> product_ids;
  std::vector<double> alpha;  // per product, includes the group effect in design B
  std::vector<std::string> dates;
  std::vector<double> gamma;
  // Per panel row: log of the visibility mean used for the draw.
  std::vector<double> log_mean;
  // Visibility-driven sales: the OB coefficient implied by the DGP.
  double expected_delta_ob = 0.0;
};

struct Simulation {
  panel::Panel panel;
  GroundTruth truth;
};

Simulation simulate_panel(const SimulationConfig& config);

enum class OmittedKind { Advantage, Disadvantage };
OmittedKind omitted_kind_from_string(std::string_view s);
std::string to_string(OmittedKind k);

// Adds a column sign * multiplier * isAmazon + organic_visibility + v with
// v ~ N(0, noise_sd). Named "amazon_advantage" or "amazon_disadvantage"
// unless `name` is given.
panel::Panel inject_omitted_variable(const panel::Panel& panel, OmittedKind kind,
                                     double multiplier, std::uint64_t seed,
                                     double noise_sd = 1.0, std::string name = {});

struct MonteCarloCell {
  SimulationConfig config;
  std::size_t replications = 0;
  std::size_t successes = 0;
  std::vector<std::string> failures;
  std::vector<double> estimates;  // by replication index; NaN for failures
  std::vector<double> std_errors;
  double mean_estimate = 0.0;
  double empirical_sd = 0.0;
  double mean_se = 0.0;
  double rejection_rate = 0.0;    // share with p < 0.05 against zero
  double coverage = 0.0;          // share of 95% CIs covering delta_true
  double within_3se = 0.0;        // share with |est - truth| <= 3 se
  bool wide_variance = false;     // too few replications for stable moments
};

struct MonteCarloOptions {
  std::size_t replications = 200;
  int lag_days = 1;
  unsigned threads = 0;  // 0: thread_budget()
};

// Each replication draws its own seed from (cell seed, replication index),
// so results do not depend on scheduling.
std::vector<MonteCarloCell> monte_carlo_study(const std::vector<SimulationConfig>& grid,
                                              const MonteCarloOptions& options);

}  // namespace prefaudit::synth
