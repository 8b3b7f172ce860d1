#include "prefaudit/synthetic.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <random>
#include <thread>

namespace prefaudit::synth {

namespace {

constexpr const char* kPlatformSeller = "AMAZON";

struct Seller {
  std::string id;
  bool platform = false;
  bool prime = false;
  double rating = 100.0;
  double markup = 1.0;  // multiplicative price markup
};

std::string product_name(std::size_t i) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "P%06zu", i);
  return buf;
}

double normal(std::mt19937_64& g, double sd) {
  return sd > 0.0 ? std::normal_distribution<double>(0.0, sd)(g) : 0.0;
}

double uniform(std::mt19937_64& g, double a, double b) {
  return std::uniform_real_distribution<double>(a, b)(g);
}

bool bernoulli(std::mt19937_64& g, double p) {
  if (p <= 0.0) return false;
  if (p >= 1.0) return true;
  return std::bernoulli_distribution(p)(g);
}

std::size_t uniform_index(std::mt19937_64& g, std::size_t n) {
  return std::uniform_int_distribution<std::size_t>(0, n - 1)(g);
}

Seller third_party(std::mt19937_64& g, const std::string& product, std::size_t j,
                   const SimulationConfig& c) {
  Seller s;
  s.id = "S-" + product + "-" + std::to_string(j);
  s.prime = bernoulli(g, 0.6);
  s.rating = std::round(uniform(g, 80.0, 100.0));
  s.markup = std::exp(normal(g, c.seller_markup_sd));
  return s;
}

Seller platform(std::mt19937_64& g, const SimulationConfig& c) {
  Seller s;
  s.id = kPlatformSeller;
  s.platform = true;
  s.prime = true;
  s.rating = c.platform_seller_rating;
  s.markup = std::exp(normal(g, c.seller_markup_sd));
  return s;
}

// Covariate trajectories of one product before visibility is drawn.
struct Path {
  std::vector<std::size_t> seller;  // index into sellers, per day
  std::vector<double> ln_rank_latent;
  std::vector<double> ln_price_latent;
  std::vector<double> rating;
  double review0 = 1.0;
  double review_growth = 0.0;
};

Path draw_path(std::mt19937_64& g, std::size_t n_sellers, const SimulationConfig& c) {
  const std::size_t T = c.n_days;
  Path p;
  p.seller.resize(T);
  p.seller[0] = uniform_index(g, n_sellers);
  const double switch_p = 1.0 / c.buybox_mean_holding;
  for (std::size_t t = 1; t < T; ++t) {
    p.seller[t] = p.seller[t - 1];
    if (n_sellers > 1 && bernoulli(g, switch_p)) {
      std::size_t other = uniform_index(g, n_sellers - 1);
      if (other >= p.seller[t - 1]) ++other;
      p.seller[t] = other;
    }
  }
  const double m = c.sales_rank_log_mean + normal(g, c.sales_rank_log_sd);
  const double stat_sd =
      c.sales_rank_innovation_sd / std::sqrt(std::max(1e-12, 1.0 - c.sales_rank_ar * c.sales_rank_ar));
  p.ln_rank_latent.resize(T);
  p.ln_rank_latent[0] = m + normal(g, stat_sd);
  for (std::size_t t = 1; t < T; ++t)
    p.ln_rank_latent[t] = m + c.sales_rank_ar * (p.ln_rank_latent[t - 1] - m) +
                          normal(g, c.sales_rank_innovation_sd);
  p.ln_price_latent.resize(T);
  p.ln_price_latent[0] = c.price_log_mean + normal(g, c.price_log_sd);
  for (std::size_t t = 1; t < T; ++t)
    p.ln_price_latent[t] = p.ln_price_latent[t - 1] + normal(g, c.price_walk_sd);
  p.review0 = std::exp(c.review_log_mean + normal(g, c.review_log_sd));
  p.review_growth = uniform(g, 0.0, c.review_growth_max);
  const double base = uniform(g, 3.0, 4.9);
  p.rating.resize(T);
  for (std::size_t t = 0; t < T; ++t)
    p.rating[t] = std::clamp(base + normal(g, c.rating_noise_sd), 1.0, 5.0);
  return p;
}

double linear_predictor(const panel::Observation& x, double seller_rating, const SimulationConfig& c) {
  const auto& b = c.betas;
  return c.delta_true * (x.is_amazon ? 1.0 : 0.0) +
         b.ln_sales_rank * std::log(static_cast<double>(x.sales_rank)) +
         b.ln_price * std::log(x.price) +
         b.ln_count_reviews * std::log(static_cast<double>(x.count_reviews)) +
         b.rating_product * x.rating_product + b.rating_seller * seller_rating +
         b.is_prime * (x.is_prime ? 1.0 : 0.0);
}

}  // namespace

void validate(const SimulationConfig& c) {
  if (!c.seed) throw invalid_argument("simulation seed is mandatory");
  if (c.n_products < 2) throw invalid_argument("n_products must be at least 2");
  if (c.n_days < 2) throw invalid_argument("n_days must be at least 2");
  if (!(c.gamma_shape > 0.0)) throw invalid_argument("gamma_shape must be positive");
  if (!(c.buybox_mean_holding >= 1.0)) throw invalid_argument("buybox_mean_holding must be >= 1");
  if (!(c.platform_product_share >= 0.0 && c.platform_product_share <= 1.0))
    throw invalid_argument("platform_product_share must lie in [0,1]");
  if (c.max_third_party_sellers < 1) throw invalid_argument("max_third_party_sellers must be >= 1");
  if (c.design == Design::StudyB && c.max_substitutes < 1)
    throw invalid_argument("max_substitutes must be >= 1");
  if (!(c.sales_rank_ar > -1.0 && c.sales_rank_ar < 1.0))
    throw invalid_argument("sales_rank_ar must lie in (-1,1)");
  if (!(c.sponsored_zero_share >= 0.0 && c.sponsored_zero_share < 1.0))
    throw invalid_argument("sponsored_zero_share must lie in [0,1)");
  for (double sd : {c.alpha_sd, c.gamma_sd, c.sales_rank_log_sd, c.sales_rank_innovation_sd,
                    c.price_log_sd, c.price_walk_sd, c.seller_markup_sd, c.review_log_sd,
                    c.rating_noise_sd, c.sponsored_log_sd, c.product_noise_sd, c.utility_sd,
                    c.visibility_noise_sd, c.sales_noise_sd, c.omitted_noise_sd})
    if (!(sd >= 0.0)) throw invalid_argument("standard deviations must be non-negative");
  if (!(c.platform_seller_rating >= 0.0 && c.platform_seller_rating <= 100.0))
    throw invalid_argument("platform_seller_rating must lie in [0,100]");
  parse_iso_date(c.start_date);
}

Simulation simulate_panel(const SimulationConfig& c) {
  validate(c);
  const std::uint64_t seed = *c.seed;
  const std::size_t T = c.n_days;
  const Day start = parse_iso_date(c.start_date);

  Simulation sim;
  auto& truth = sim.truth;
  truth.delta_true = c.sales_model == SalesModel::VisibilityDriven ? c.ob_bias : c.delta_true;
  truth.betas = c.betas;
  truth.platform_seller_rating = c.platform_seller_rating;

  std::mt19937_64 gdate(mix_seed(seed, 0));
  truth.gamma.resize(T);
  std::vector<double> tau(T);  // date effect of log sales rank (visibility-driven)
  for (std::size_t t = 0; t < T; ++t) {
    truth.gamma[t] = t == 0 ? 0.0 : normal(gdate, c.gamma_sd);
    tau[t] = normal(gdate, 0.05);
    truth.dates.push_back(format_iso_date(start + static_cast<Day>(t)));
  }

  // Study B: group layout (platform product first, then substitutes).
  struct Member {
    std::size_t group = 0;
    bool platform = false;
  };
  std::vector<Member> members;
  std::vector<double> group_effect;
  if (c.design == Design::StudyB) {
    std::mt19937_64 gg(mix_seed(seed, 1));
    std::size_t g = 0;
    while (members.size() < c.n_products) {
      const std::size_t subs = 1 + uniform_index(gg, c.max_substitutes);
      members.push_back({g, true});
      for (std::size_t s = 0; s < subs && members.size() < c.n_products; ++s)
        members.push_back({g, false});
      group_effect.push_back(c.alpha_mean + normal(gg, c.alpha_sd));
      ++g;
    }
    // A trailing group without substitutes gets folded into the previous one.
    if (members.back().platform && g > 1) {
      members.back() = {g - 2, false};
      group_effect.pop_back();
    }
  }

  auto& rows = sim.panel.rows;
  rows.reserve(c.n_products * T);
  truth.log_mean.reserve(c.n_products * T);
  std::string group_label;

  for (std::size_t i = 0; i < c.n_products; ++i) {
    std::mt19937_64 g(mix_seed(seed, 16 + i));
    const std::string pid = product_name(i);
    truth.product_ids.push_back(pid);

    std::vector<Seller> sellers;
    double alpha = 0.0;
    std::string group_id;
    if (c.design == Design::StudyA) {
      if (bernoulli(g, c.platform_product_share)) sellers.push_back(platform(g, c));
      const std::size_t k = 1 + uniform_index(g, c.max_third_party_sellers);
      for (std::size_t j = 0; j < k; ++j) sellers.push_back(third_party(g, pid, j, c));
      alpha = c.alpha_mean + normal(g, c.alpha_sd);
    } else {
      const auto& m = members[i];
      if (m.platform) {
        sellers.push_back(platform(g, c));
        group_label = "G-" + pid;
      } else {
        sellers.push_back(third_party(g, pid, 0, c));
      }
      group_id = group_label;
      alpha = group_effect[m.group] + normal(g, c.product_noise_sd);
    }
    truth.alpha.push_back(alpha);

    const Path path = draw_path(g, sellers.size(), c);
    const double kappa = c.sales_rank_log_mean + normal(g, c.sales_rank_log_sd);
    const std::size_t first = rows.size();

    // Covariates.
    for (std::size_t t = 0; t < T; ++t) {
      const Seller& s = sellers[path.seller[t]];
      panel::Observation o;
      o.product_id = pid;
      o.date = start + static_cast<Day>(t);
      o.sales_rank = std::max<std::int64_t>(1, std::llround(std::exp(path.ln_rank_latent[t])));
      o.price = std::max(0.01, std::round(std::exp(path.ln_price_latent[t]) * s.markup * 100.0) / 100.0);
      o.count_reviews = std::max<std::int64_t>(
          1, std::llround(path.review0 * std::exp(path.review_growth * static_cast<double>(t))));
      o.rating_product = std::round(path.rating[t] * 1000.0) / 1000.0;
      if (!s.platform || c.emit_platform_seller_rating) o.rating_seller = s.rating;
      o.is_prime = s.prime;
      o.is_amazon = s.platform;
      o.buybox_seller_id = s.id;
      o.comparison_group_id = group_id;
      o.market = c.market;
      rows.push_back(std::move(o));
    }

    if (c.sales_model == SalesModel::Independent) {
      const double noise_shape = c.gamma_shape;
      std::gamma_distribution<double> noise(noise_shape, 1.0 / noise_shape);
      for (std::size_t t = 0; t < T; ++t) {
        auto& o = rows[first + t];
        const auto& x = rows[first + (t == 0 ? 0 : t - 1)];
        const Seller& sx = sellers[path.seller[t == 0 ? 0 : t - 1]];
        const double eta = linear_predictor(x, sx.rating, c) + alpha + truth.gamma[t];
        truth.log_mean.push_back(eta);
        o.organic_visibility = std::exp(eta) * noise(g);
        o.sponsored_visibility = bernoulli(g, c.sponsored_zero_share)
                                     ? 0.0
                                     : std::exp(eta - 1.0 + normal(g, c.sponsored_log_sd));
      }
    } else {
      // Visibility responds to a latent utility and, with ob_bias, to the
      // platform flag; day t+1's sales rank follows day t's outcomes.
      std::vector<double> w(T), lnv(T), lns(T, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        auto& o = rows[first + t];
        w[t] = normal(g, c.utility_sd);
        lnv[t] = alpha + truth.gamma[t] + c.ob_bias * (o.is_amazon ? 1.0 : 0.0) +
                 c.utility_loading * w[t] + normal(g, c.visibility_noise_sd);
        truth.log_mean.push_back(lnv[t]);
        o.organic_visibility = std::exp(lnv[t]);
        if (bernoulli(g, c.sponsored_zero_share)) {
          o.sponsored_visibility = 0.0;
        } else {
          lns[t] = lnv[t] - 1.0 + normal(g, c.sponsored_log_sd);
          o.sponsored_visibility = std::exp(lns[t]);
        }
      }
      for (std::size_t t = 0; t < T; ++t) {
        auto& o = rows[first + t];
        const std::size_t s = t == 0 ? 0 : t - 1;
        const double ln_rank = kappa + tau[t] - c.demand_visibility * lnv[s] -
                               c.demand_utility * w[s] - c.demand_sponsored * lns[s] +
                               c.demand_price * std::log(rows[first + s].price) +
                               normal(g, c.sales_noise_sd);
        o.sales_rank = std::max<std::int64_t>(1, std::llround(std::exp(ln_rank)));
      }
    }
  }

  if (c.sales_model == SalesModel::VisibilityDriven) {
    const double a = c.utility_loading;
    const double su2 = c.utility_sd * c.utility_sd;
    const double denom = a * a * su2 + c.visibility_noise_sd * c.visibility_noise_sd;
    const double cc = denom > 0.0 ? a * su2 / denom : 0.0;
    truth.expected_delta_ob = c.demand_utility * cc * c.ob_bias;
  }

  sim.panel.window_first = start;
  sim.panel.window_last = start + static_cast<Day>(T) - 1;
  panel::normalize(sim.panel);
  return sim;
}

OmittedKind omitted_kind_from_string(std::string_view s) {
  if (s == "advantage") return OmittedKind::Advantage;
  if (s == "disadvantage") return OmittedKind::Disadvantage;
  throw invalid_argument("omitted variable kind must be 'advantage' or 'disadvantage'");
}

std::string to_string(OmittedKind k) {
  return k == OmittedKind::Advantage ? "advantage" : "disadvantage";
}

panel::Panel inject_omitted_variable(const panel::Panel& panel, OmittedKind kind, double multiplier,
                                     std::uint64_t seed, double noise_sd, std::string name) {
  if (!(noise_sd >= 0.0)) throw invalid_argument("noise_sd must be non-negative");
  if (name.empty()) name = kind == OmittedKind::Advantage ? "amazon_advantage" : "amazon_disadvantage";
  const double sign = kind == OmittedKind::Advantage ? 1.0 : -1.0;
  std::mt19937_64 g(mix_seed(seed, kind == OmittedKind::Advantage ? 1 : 2));
  std::vector<double> col(panel.rows.size());
  for (std::size_t i = 0; i < col.size(); ++i) {
    const auto& r = panel.rows[i];
    col[i] = sign * multiplier * (r.is_amazon ? 1.0 : 0.0) + r.organic_visibility + normal(g, noise_sd);
  }
  panel::Panel out = panel;
  out.add_extra(name, col);
  return out;
}

std::vector<MonteCarloCell> monte_carlo_study(const std::vector<SimulationConfig>& grid,
                                              const MonteCarloOptions& options) {
  if (options.replications < 2) throw invalid_argument("replications must be at least 2");
  if (options.lag_days < 1) throw invalid_argument("Monte Carlo lag must be at least 1 day");
  for (const auto& c : grid) validate(c);

  std::vector<MonteCarloCell> cells(grid.size());
  struct Job {
    std::size_t cell, rep;
  };
  std::vector<Job> jobs;
  for (std::size_t c = 0; c < grid.size(); ++c) {
    cells[c].config = grid[c];
    cells[c].replications = options.replications;
    cells[c].estimates.assign(options.replications, std::nan(""));
    cells[c].std_errors.assign(options.replications, std::nan(""));
    for (std::size_t r = 0; r < options.replications; ++r) jobs.push_back({c, r});
  }
  std::vector<std::string> errors(jobs.size());

  auto run = [&](std::size_t j) {
    const auto [c, r] = jobs[j];
    try {
      SimulationConfig cfg = grid[c];
      cfg.seed = mix_seed(*grid[c].seed, r);
      const auto sim = simulate_panel(cfg);
      fe::ModelSpec spec = fe::ModelSpec::visibility_model();
      if (cfg.design == Design::StudyB) spec.unit = fe::UnitKind::ComparisonGroup;
      spec.platform_seller_rating = cfg.platform_seller_rating;
      spec.options.threads = 1;
      const auto lagged = panel::lag_covariates(sim.panel, options.lag_days);
      const auto rep = sp::coo_test(lagged, spec);
      cells[c].estimates[r] = rep.estimate;
      cells[c].std_errors[r] = rep.se;
    } catch (const std::exception& e) {
      errors[j] = "replication " + std::to_string(r) + ": " + e.what();
    }
  };

  const unsigned threads = options.threads == 0 ? thread_budget() : options.threads;
  const std::size_t workers = std::min<std::size_t>(std::max(1u, threads), jobs.size());
  if (workers <= 1) {
    for (std::size_t j = 0; j < jobs.size(); ++j) run(j);
  } else {
    std::vector<std::thread> pool;
    for (std::size_t w = 0; w < workers; ++w)
      pool.emplace_back([&, w] {
        for (std::size_t j = w; j < jobs.size(); j += workers) run(j);
      });
    for (auto& t : pool) t.join();
  }

  for (std::size_t j = 0; j < jobs.size(); ++j)
    if (!errors[j].empty()) cells[jobs[j].cell].failures.push_back(errors[j]);

  for (auto& cell : cells) {
    const double truth = cell.config.sales_model == SalesModel::VisibilityDriven
                             ? cell.config.ob_bias
                             : cell.config.delta_true;
    double sum = 0, sum_se = 0;
    std::size_t n = 0, rejected = 0, covered = 0, within = 0;
    for (std::size_t r = 0; r < cell.replications; ++r) {
      const double est = cell.estimates[r], se = cell.std_errors[r];
      if (std::isnan(est)) continue;
      ++n;
      sum += est;
      sum_se += se;
      if (sp::normal_p_value(est, se) < 0.05) ++rejected;
      if (std::abs(est - truth) <= 1.96 * se) ++covered;
      if (std::abs(est - truth) <= 3.0 * se) ++within;
    }
    cell.successes = n;
    if (n > 0) {
      cell.mean_estimate = sum / static_cast<double>(n);
      cell.mean_se = sum_se / static_cast<double>(n);
      double ss = 0;
      for (double est : cell.estimates)
        if (!std::isnan(est)) ss += (est - cell.mean_estimate) * (est - cell.mean_estimate);
      cell.empirical_sd = n > 1 ? std::sqrt(ss / static_cast<double>(n - 1)) : 0.0;
      cell.rejection_rate = static_cast<double>(rejected) / static_cast<double>(n);
      cell.coverage = static_cast<double>(covered) / static_cast<double>(n);
      cell.within_3se = static_cast<double>(within) / static_cast<double>(n);
    } else {
      cell.mean_estimate = cell.mean_se = cell.empirical_sd = std::nan("");
    }
    cell.wide_variance = n < 30;
  }
  return cells;
}

}  // namespace prefaudit::synth
