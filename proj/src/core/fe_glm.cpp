#include "prefaudit/fe_glm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <thread>
#include <unordered_map>

namespace prefaudit::fe {

std::string Covariate::label() const {
  return transform == Transform::Log ? "ln_" + column : column;
}

ModelSpec ModelSpec::visibility_model() {
  ModelSpec s;
  s.outcome = std::string(panel::kOrganicVisibility);
  s.protected_attribute = std::string(panel::kIsAmazon);
  s.covariates = {
      {std::string(panel::kSalesRank), Transform::Log},
      {std::string(panel::kPrice), Transform::Log},
      {std::string(panel::kCountReviews), Transform::Log},
      {std::string(panel::kRatingProduct), Transform::Identity},
      {std::string(panel::kRatingSeller), Transform::Identity},
      {std::string(panel::kIsPrime), Transform::Identity},
  };
  return s;
}

ModelSpec ModelSpec::outcome_model() {
  ModelSpec s;
  s.outcome = std::string(panel::kSalesRank);
  s.protected_attribute = std::string(panel::kIsAmazon);
  s.covariates = {
      {std::string(panel::kOrganicVisibility), Transform::Log},
      {std::string(panel::kSponsoredVisibility), Transform::Log},
      {std::string(panel::kPrice), Transform::Log},
  };
  return s;
}

bool ModelSpec::has_covariate(std::string_view column) const {
  return std::any_of(covariates.begin(), covariates.end(),
                     [&](const Covariate& c) { return c.column == column; });
}

void ModelSpec::drop_covariate(std::string_view column) {
  std::erase_if(covariates, [&](const Covariate& c) { return c.column == column; });
}

std::optional<std::size_t> FitResult::index_of(std::string_view name) const {
  for (std::size_t i = 0; i < names.size(); ++i)
    if (names[i] == name) return i;
  return std::nullopt;
}

double FitResult::coef(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw invalid_argument("no coefficient named '" + std::string(name) + "'");
  return coefficients[static_cast<Eigen::Index>(*i)];
}

double FitResult::stderr_of(std::string_view name) const {
  auto i = index_of(name);
  if (!i) throw invalid_argument("no coefficient named '" + std::string(name) + "'");
  return se[static_cast<Eigen::Index>(*i)];
}

// ---------------------------------------------------------------------------
// Design construction

namespace {

// Dense codes in first-appearance order; labels sorted to make the coding
// independent of row order.
template <typename KeyFn>
std::pair<std::vector<int>, std::vector<std::string>> encode(std::size_t n, KeyFn key) {
  std::vector<std::string> labels;
  labels.reserve(64);
  {
    std::vector<std::string> all;
    all.reserve(n);
    for (std::size_t i = 0; i < n; ++i) all.push_back(key(i));
    labels = all;
    std::sort(labels.begin(), labels.end());
    labels.erase(std::unique(labels.begin(), labels.end()), labels.end());
    std::unordered_map<std::string, int> code_of;
    code_of.reserve(labels.size() * 2);
    for (std::size_t l = 0; l < labels.size(); ++l) code_of.emplace(labels[l], static_cast<int>(l));
    std::vector<int> codes(n);
    for (std::size_t i = 0; i < n; ++i) codes[i] = code_of.at(all[i]);
    return {std::move(codes), std::move(labels)};
  }
}

}  // namespace

Design build_design(const panel::Panel& panel, const ModelSpec& spec) {
  const std::size_t n = panel.rows.size();
  if (n == 0) throw PreconditionError("estimation sample is empty");
  if (!panel::is_numeric_column(panel, spec.outcome))
    throw invalid_argument("unknown outcome column '" + spec.outcome + "'");
  if (!panel::is_numeric_column(panel, spec.protected_attribute))
    throw invalid_argument("unknown protected attribute '" + spec.protected_attribute + "'");

  Design d;
  d.y.resize(n);
  const std::size_t k = 1 + spec.covariates.size();
  d.X.resize(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(k));
  d.names.push_back(spec.protected_attribute);
  for (const auto& c : spec.covariates) {
    if (!panel::is_numeric_column(panel, c.column))
      throw invalid_argument("unknown covariate column '" + c.column + "'");
    d.names.push_back(c.label());
  }
  for (std::size_t a = 0; a < d.names.size(); ++a)
    for (std::size_t b = a + 1; b < d.names.size(); ++b)
      if (d.names[a] == d.names[b]) throw invalid_argument("covariate '" + d.names[a] + "' listed twice");

  for (std::size_t i = 0; i < n; ++i) {
    const auto& row = panel.rows[i];
    auto yv = panel::value(panel, row, spec.outcome);
    if (!yv || !(*yv >= 0.0) || !std::isfinite(*yv))
      throw PreconditionError("outcome '" + spec.outcome + "' missing or negative for product '" +
                              row.product_id + "' on " + format_iso_date(row.date));
    d.y[i] = *yv;

    auto pv = panel::value(panel, row, spec.protected_attribute);
    if (!pv || (*pv != 0.0 && *pv != 1.0))
      throw PreconditionError("protected attribute '" + spec.protected_attribute +
                              "' must be binary");
    d.X(static_cast<Eigen::Index>(i), 0) = *pv;

    for (std::size_t j = 0; j < spec.covariates.size(); ++j) {
      const auto& c = spec.covariates[j];
      std::optional<double> v = panel::value(panel, row, c.column);
      if (!v && c.column == panel::kRatingSeller && row.is_amazon) v = spec.platform_seller_rating;
      if (!v)
        throw PreconditionError("covariate '" + c.column + "' missing for product '" +
                                row.product_id + "' on " + format_iso_date(row.date));
      double x = *v;
      if (c.transform == Transform::Log) {
        if (!(x > 0.0))
          throw PreconditionError("log covariate '" + c.column +
                                  "' is not strictly positive (product '" + row.product_id +
                                  "', " + format_iso_date(row.date) + ")");
        x = std::log(x);
      }
      d.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j + 1)) = x;
    }
  }

  const std::string unit_col = spec.unit_column();
  if (spec.unit == UnitKind::ComparisonGroup)
    for (const auto& r : panel.rows)
      if (r.comparison_group_id.empty())
        throw PreconditionError("comparison-group effects requested but product '" +
                                r.product_id + "' has no comparison_group_id");

  auto unit_key = [&](std::size_t i) {
    return spec.unit == UnitKind::Product ? panel.rows[i].product_id
                                          : panel.rows[i].comparison_group_id;
  };
  auto date_key = [&](std::size_t i) { return format_iso_date(panel.rows[i].date); };

  if (spec.unit_effects) {
    auto [codes, labels] = encode(n, unit_key);
    d.fixed_effects.push_back({unit_col, std::move(codes), std::move(labels)});
  }
  if (spec.date_effects) {
    auto [codes, labels] = encode(n, date_key);
    d.fixed_effects.push_back({"date", std::move(codes), std::move(labels)});
  }

  std::vector<std::string> dims = spec.cluster_dims;
  if (dims.empty()) {
    if (spec.unit_effects) dims.push_back("unit");
    if (spec.date_effects) dims.push_back("date");
    if (dims.empty()) dims.push_back("obs");
  }
  if (dims.size() > 2) throw invalid_argument("at most two cluster dimensions are supported");
  for (const auto& name : dims) {
    ClusterDimension c;
    std::vector<std::string> labels;
    if (name == "unit") {
      std::tie(c.codes, labels) = encode(n, unit_key);
      c.name = unit_col;
    } else if (name == "product") {
      std::tie(c.codes, labels) = encode(n, [&](std::size_t i) { return panel.rows[i].product_id; });
      c.name = "product_id";
    } else if (name == "group") {
      std::tie(c.codes, labels) =
          encode(n, [&](std::size_t i) { return panel.rows[i].comparison_group_id; });
      c.name = "comparison_group_id";
    } else if (name == "date") {
      std::tie(c.codes, labels) = encode(n, date_key);
      c.name = "date";
    } else if (name == "obs") {
      c.codes.resize(n);
      std::iota(c.codes.begin(), c.codes.end(), 0);
      labels.resize(n);
      c.name = "observation";
    } else {
      throw invalid_argument("unknown cluster dimension '" + name + "'");
    }
    c.groups = labels.size();
    d.clusters.push_back(std::move(c));
  }
  return d;
}

// ---------------------------------------------------------------------------
// Alternating projections

Projector::Projector(const std::vector<FeDimension>& fe, std::span<const double> w)
    : fe_(fe), w_(w) {
  if (fe.size() > 2) throw invalid_argument("at most two fixed-effect dimensions are supported");
  for (const auto& dim : fe) {
    std::vector<double> sums(dim.levels(), 0.0);
    for (std::size_t i = 0; i < w.size(); ++i) sums[static_cast<std::size_t>(dim.codes[i])] += w[i];
    weight_sums_.push_back(std::move(sums));
  }
}

int Projector::partial_out(std::span<double> x, std::vector<std::vector<double>>& coefs,
                           double tolerance, int max_iterations) const {
  const std::size_t n = x.size();
  coefs.resize(fe_.size());
  for (std::size_t d = 0; d < fe_.size(); ++d) coefs[d].resize(fe_[d].levels(), 0.0);
  if (fe_.empty()) return 0;

  // Weighted sums of x per level.
  std::vector<std::vector<double>> wx(fe_.size());
  for (std::size_t d = 0; d < fe_.size(); ++d) {
    wx[d].assign(fe_[d].levels(), 0.0);
    const int* code = fe_[d].codes.data();
    for (std::size_t i = 0; i < n; ++i) wx[d][static_cast<std::size_t>(code[i])] += w_[i] * x[i];
  }

  if (fe_.size() == 1) {
    auto& a = coefs[0];
    for (std::size_t l = 0; l < a.size(); ++l) a[l] = wx[0][l] / weight_sums_[0][l];
    const int* code = fe_[0].codes.data();
    for (std::size_t i = 0; i < n; ++i) x[i] -= a[static_cast<std::size_t>(code[i])];
    return 1;
  }

  const int* ca = fe_[0].codes.data();
  const int* cb = fe_[1].codes.data();
  const std::size_t A = fe_[0].levels();
  const std::size_t B = fe_[1].levels();
  const auto& swa = weight_sums_[0];
  const auto& swb = weight_sums_[1];
  std::vector<double> tmp_a(A), tmp_b(B);
  std::vector<double>& alpha = coefs[0];

  // One sweep: alpha given gamma, then gamma given alpha.
  auto sweep = [&](const std::vector<double>& gamma_in, std::vector<double>& gamma_out) {
    std::fill(tmp_a.begin(), tmp_a.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      tmp_a[static_cast<std::size_t>(ca[i])] += w_[i] * gamma_in[static_cast<std::size_t>(cb[i])];
    for (std::size_t l = 0; l < A; ++l) alpha[l] = (wx[0][l] - tmp_a[l]) / swa[l];
    std::fill(tmp_b.begin(), tmp_b.end(), 0.0);
    for (std::size_t i = 0; i < n; ++i)
      tmp_b[static_cast<std::size_t>(cb[i])] += w_[i] * alpha[static_cast<std::size_t>(ca[i])];
    gamma_out.resize(B);
    for (std::size_t l = 0; l < B; ++l) gamma_out[l] = (wx[1][l] - tmp_b[l]) / swb[l];
  };
  auto converged = [&](const std::vector<double>& a, const std::vector<double>& b) {
    for (std::size_t l = 0; l < B; ++l)
      if (std::abs(a[l] - b[l]) > tolerance * (0.1 + std::abs(a[l]))) return false;
    return true;
  };

  std::vector<double> gamma = coefs[1];
  std::vector<double> g1(B), g2(B);
  int iter = 0;
  bool done = false;
  while (iter < max_iterations) {
    sweep(gamma, g1);
    ++iter;
    if (converged(gamma, g1)) {
      gamma.swap(g1);
      done = true;
      break;
    }
    sweep(g1, g2);
    ++iter;
    if (converged(g1, g2)) {
      gamma.swap(g2);
      done = true;
      break;
    }
    // Irons-Tuck extrapolation from gamma, F(gamma), F(F(gamma)).
    double vprod = 0.0, ssq = 0.0;
    for (std::size_t l = 0; l < B; ++l) {
      const double d_g = g2[l] - g1[l];
      const double d2 = d_g - g1[l] + gamma[l];
      vprod += d_g * d2;
      ssq += d2 * d2;
    }
    if (ssq == 0.0) {
      gamma.swap(g2);
      done = true;
      break;
    }
    const double coef = vprod / ssq;
    for (std::size_t l = 0; l < B; ++l) gamma[l] = g2[l] - coef * (g2[l] - g1[l]);
  }
  if (!done) {
    // Leave alpha consistent with the last gamma.
    sweep(gamma, g1);
    gamma.swap(g1);
  }
  // alpha currently corresponds to the gamma that produced `gamma`; recompute
  // it from the final gamma so the unit-level normal equations hold exactly.
  std::fill(tmp_a.begin(), tmp_a.end(), 0.0);
  for (std::size_t i = 0; i < n; ++i)
    tmp_a[static_cast<std::size_t>(ca[i])] += w_[i] * gamma[static_cast<std::size_t>(cb[i])];
  for (std::size_t l = 0; l < A; ++l) alpha[l] = (wx[0][l] - tmp_a[l]) / swa[l];
  coefs[1] = gamma;
  for (std::size_t i = 0; i < n; ++i)
    x[i] -= alpha[static_cast<std::size_t>(ca[i])] + gamma[static_cast<std::size_t>(cb[i])];
  return iter;
}

// ---------------------------------------------------------------------------
// Fitting

namespace {

double deviance(const Eigen::VectorXd& y, const Eigen::VectorXd& mu) {
  double d = 0.0;
  for (Eigen::Index i = 0; i < y.size(); ++i) {
    const double yi = y[i], mi = mu[i];
    d += (yi > 0.0 ? yi * std::log(yi / mi) : 0.0) - (yi - mi);
  }
  return 2.0 * d;
}

// Runs fn(i) for i in [0, count) over up to `threads` workers. Work items
// must be independent.
template <typename Fn>
void parallel_for(std::size_t count, unsigned threads, Fn fn) {
  const std::size_t workers = std::min<std::size_t>(threads == 0 ? 1 : threads, count);
  if (workers <= 1) {
    for (std::size_t i = 0; i < count; ++i) fn(i);
    return;
  }
  std::vector<std::exception_ptr> errors(workers);
  std::vector<std::thread> pool;
  pool.reserve(workers);
  for (std::size_t t = 0; t < workers; ++t) {
    pool.emplace_back([&, t] {
      try {
        for (std::size_t i = t; i < count; i += workers) fn(i);
      } catch (...) {
        errors[t] = std::current_exception();
      }
    });
  }
  for (auto& th : pool) th.join();
  for (auto& e : errors)
    if (e) std::rethrow_exception(e);
}

struct Sample {
  Eigen::VectorXd y;
  Eigen::MatrixXd X;
  std::vector<FeDimension> fe;
  std::vector<ClusterDimension> clusters;
  std::size_t dropped_obs = 0;
  std::vector<std::size_t> dropped_levels;
};

void recode(std::vector<int>& codes, std::size_t levels, std::vector<std::string>* labels,
            std::size_t* groups) {
  std::vector<int> map(levels, -1);
  int next = 0;
  // Keep the original (sorted-label) order of surviving levels.
  std::vector<char> used(levels, 0);
  for (int c : codes) used[static_cast<std::size_t>(c)] = 1;
  for (std::size_t l = 0; l < levels; ++l)
    if (used[l]) map[l] = next++;
  for (int& c : codes) c = map[static_cast<std::size_t>(c)];
  if (labels) {
    std::vector<std::string> kept;
    for (std::size_t l = 0; l < levels; ++l)
      if (used[l]) kept.push_back(std::move((*labels)[l]));
    *labels = std::move(kept);
  }
  if (groups) *groups = static_cast<std::size_t>(next);
}

// Removes fixed-effect levels whose outcomes are all zero, repeating until
// stable; without fixed effects an all-zero outcome is rejected.
Sample drop_separated(const Design& design) {
  const std::size_t n = design.y.size();
  std::vector<char> keep(n, 1);
  std::vector<std::size_t> dropped_levels(design.fixed_effects.size(), 0);
  bool changed = true;
  while (changed) {
    changed = false;
    for (std::size_t d = 0; d < design.fixed_effects.size(); ++d) {
      const auto& dim = design.fixed_effects[d];
      std::vector<double> sum(dim.levels(), 0.0);
      std::vector<char> present(dim.levels(), 0);
      for (std::size_t i = 0; i < n; ++i) {
        if (!keep[i]) continue;
        sum[static_cast<std::size_t>(dim.codes[i])] += design.y[i];
        present[static_cast<std::size_t>(dim.codes[i])] = 1;
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto c = static_cast<std::size_t>(dim.codes[i]);
        if (keep[i] && present[c] && sum[c] == 0.0) {
          keep[i] = 0;
          changed = true;
        }
      }
      for (std::size_t l = 0; l < dim.levels(); ++l)
        if (present[l] && sum[l] == 0.0) ++dropped_levels[d];
    }
  }

  Sample s;
  s.dropped_levels = dropped_levels;
  std::vector<std::size_t> rows;
  rows.reserve(n);
  for (std::size_t i = 0; i < n; ++i)
    if (keep[i]) rows.push_back(i);
  s.dropped_obs = n - rows.size();
  if (rows.empty()) throw PreconditionError("every observation has a zero outcome");

  const auto m = static_cast<Eigen::Index>(rows.size());
  s.y.resize(m);
  s.X.resize(m, design.X.cols());
  for (Eigen::Index r = 0; r < m; ++r) {
    const auto i = static_cast<Eigen::Index>(rows[static_cast<std::size_t>(r)]);
    s.y[r] = design.y[static_cast<std::size_t>(i)];
    s.X.row(r) = design.X.row(i);
  }
  for (const auto& dim : design.fixed_effects) {
    FeDimension out{dim.name, {}, dim.labels};
    out.codes.reserve(rows.size());
    for (auto i : rows) out.codes.push_back(dim.codes[i]);
    recode(out.codes, dim.levels(), &out.labels, nullptr);
    s.fe.push_back(std::move(out));
  }
  if (s.fe.empty()) {
    // Intercept only.
    s.fe.push_back({"intercept", std::vector<int>(rows.size(), 0), {"(intercept)"}});
  }
  for (const auto& c : design.clusters) {
    ClusterDimension out{c.name, {}, 0};
    out.codes.reserve(rows.size());
    for (auto i : rows) out.codes.push_back(c.codes[i]);
    recode(out.codes, c.groups, nullptr, &out.groups);
    s.clusters.push_back(std::move(out));
  }
  return s;
}

// Sequential Cholesky pivots of the weighted cross-product; a pivot that
// vanishes relative to the column's raw weighted norm marks the column as
// collinear with the fixed effects and earlier columns.
void check_collinearity(const Eigen::MatrixXd& Xt, const Eigen::MatrixXd& X,
                        const Eigen::VectorXd& w, const std::vector<std::string>& names) {
  const Eigen::Index k = Xt.cols();
  Eigen::MatrixXd M = Xt.transpose() * w.asDiagonal() * Xt;
  Eigen::MatrixXd L = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index j = 0; j < k; ++j) {
    const double raw = (X.col(j).array().square() * w.array()).sum();
    double d = M(j, j);
    for (Eigen::Index p = 0; p < j; ++p) d -= L(j, p) * L(j, p);
    const double scale = raw > 0.0 ? raw : 1.0;
    if (!(d > 1e-9 * scale))
      throw NumericalError("covariate '" + names[static_cast<std::size_t>(j)] +
                           "' is collinear with the fixed effects or other covariates");
    L(j, j) = std::sqrt(d);
    for (Eigen::Index r = j + 1; r < k; ++r) {
      double v = M(r, j);
      for (Eigen::Index p = 0; p < j; ++p) v -= L(r, p) * L(j, p);
      L(r, j) = v / L(j, j);
    }
  }
}

}  // namespace

FitResult fit(const Design& design, const FitOptions& options) {
  if (design.y.size() != static_cast<std::size_t>(design.X.rows()))
    throw invalid_argument("design outcome and covariate rows differ");
  if (design.names.size() != static_cast<std::size_t>(design.X.cols()))
    throw invalid_argument("design column names do not match covariates");
  for (double v : design.y)
    if (!(v >= 0.0) || !std::isfinite(v)) throw PreconditionError("outcome must be non-negative");

  Sample s = drop_separated(design);
  const Eigen::Index n = s.y.size();
  const Eigen::Index k = s.X.cols();
  const unsigned threads = options.threads == 0 ? thread_budget() : options.threads;

  FitResult out;
  out.names = design.names;
  out.n_obs = static_cast<std::size_t>(n);
  out.dropped_obs = s.dropped_obs;
  out.dropped_levels = s.dropped_levels;
  for (const auto& dim : s.fe) {
    if (dim.name == "date") out.n_dates = dim.levels();
    else if (dim.name != "intercept" && out.n_units == 0) out.n_units = dim.levels();
  }

  const double ybar = s.y.mean();

  // Start: beta = 0, eta = one projection pass of log(y + 0.1 ybar).
  Eigen::VectorXd eta(n);
  {
    Eigen::VectorXd z0 = (s.y.array() + 0.1 * ybar).log();
    Eigen::VectorXd resid = z0;
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    Projector proj(s.fe, ones);
    std::vector<std::vector<double>> coefs;
    proj.partial_out({resid.data(), static_cast<std::size_t>(n)}, coefs, 0.0, 1);
    eta = z0 - resid;
  }
  Eigen::VectorXd beta = Eigen::VectorXd::Zero(k);
  Eigen::VectorXd mu = eta.array().exp();
  double dev = deviance(s.y, mu);

  // Projection coefficients per column (0: working response), per dimension.
  std::vector<std::vector<std::vector<double>>> warm(static_cast<std::size_t>(k) + 1);
  Eigen::MatrixXd Z(n, k + 1);
  Eigen::MatrixXd Xt;
  long long proj_iters = 0;
  bool converged = false;
  int iter = 0;

  auto demean_columns = [&](Eigen::MatrixXd& cols, const Projector& proj, std::size_t first_warm) {
    std::vector<int> used(static_cast<std::size_t>(cols.cols()), 0);
    parallel_for(static_cast<std::size_t>(cols.cols()), threads, [&](std::size_t c) {
      used[c] = proj.partial_out({cols.col(static_cast<Eigen::Index>(c)).data(),
                                  static_cast<std::size_t>(n)},
                                 warm[first_warm + c], options.projection_tolerance,
                                 options.max_projection_iterations);
    });
    for (int u : used) proj_iters += u;
  };

  for (iter = 1; iter <= options.max_iterations; ++iter) {
    const Eigen::VectorXd w = mu;
    Z.col(0) = eta.array() + (s.y.array() - mu.array()) / mu.array();
    Z.rightCols(k) = s.X;
    const Eigen::VectorXd z = Z.col(0);
    Projector proj(s.fe, {w.data(), static_cast<std::size_t>(n)});
    demean_columns(Z, proj, 0);

    Xt = Z.rightCols(k);
    if (iter == 1) check_collinearity(Xt, s.X, w, design.names);
    const Eigen::MatrixXd M = Xt.transpose() * w.asDiagonal() * Xt;
    const Eigen::VectorXd rhs = Xt.transpose() * (w.array() * Z.col(0).array()).matrix();
    Eigen::LDLT<Eigen::MatrixXd> ldlt(M);
    if (ldlt.info() != Eigen::Success) throw NumericalError("weighted cross-product is singular");
    const Eigen::VectorXd beta_new = ldlt.solve(rhs);

    Eigen::VectorXd eta_new = z - Z.col(0) + Xt * beta_new;
    Eigen::VectorXd mu_new = eta_new.array().exp();
    double dev_new = deviance(s.y, mu_new);
    Eigen::VectorXd beta_step = beta_new;
    int halvings = 0;
    while ((!std::isfinite(dev_new) || dev_new > dev * (1.0 + 1e-12) + 1e-12) && halvings < 30) {
      eta_new = 0.5 * (eta + eta_new);
      beta_step = 0.5 * (beta + beta_step);
      mu_new = eta_new.array().exp();
      dev_new = deviance(s.y, mu_new);
      ++halvings;
    }
    if (!std::isfinite(dev_new)) throw NumericalError("deviance became non-finite");

    const double change = std::abs(dev_new - dev) / (0.1 + std::abs(dev_new));
    eta = std::move(eta_new);
    mu = std::move(mu_new);
    beta = beta_step;
    dev = dev_new;
    if (change < options.deviance_tolerance) {
      converged = true;
      break;
    }
  }
  out.iterations = std::min(iter, options.max_iterations);
  if (!converged) {
    std::ostringstream os;
    os << "Poisson fit did not converge after " << options.max_iterations
       << " iterations (last deviance " << dev << ")";
    throw NumericalError(os.str());
  }
  out.converged = true;
  out.coefficients = beta;
  out.deviance = dev;

  // Partial the covariates out at the final weights for the sandwich.
  {
    Eigen::MatrixXd Xf = s.X;
    Projector proj(s.fe, {mu.data(), static_cast<std::size_t>(n)});
    demean_columns(Xf, proj, 1);
    Xt = std::move(Xf);
  }
  out.projection_iterations = proj_iters;

  // Fixed-effect values from eta - X beta, with the first date as reference.
  {
    Eigen::VectorXd f = eta - s.X * beta;
    Eigen::VectorXd resid = f;
    std::vector<double> ones(static_cast<std::size_t>(n), 1.0);
    Projector proj(s.fe, ones);
    std::vector<std::vector<double>> coefs;
    proj.partial_out({resid.data(), static_cast<std::size_t>(n)}, coefs, 1e-14, 100000);
    if (coefs.size() == 2 && !coefs[1].empty()) {
      const double shift = coefs[1][0];
      for (double& g : coefs[1]) g -= shift;
      for (double& a : coefs[0]) a += shift;
    }
    for (std::size_t d = 0; d < s.fe.size(); ++d)
      out.fixed_effects.push_back({s.fe[d].name, s.fe[d].labels, coefs[d]});
  }

  auto internals = std::make_shared<FitInternals>();
  internals->X_tilde = std::move(Xt);
  internals->mu = mu;
  internals->y = s.y;
  internals->clusters = s.clusters;

  Covariance cov = two_way_clustered_covariance(*internals, internals->clusters);
  out.covariance = std::move(cov.matrix);
  out.negative_eigenvalues_zeroed = cov.negative_eigenvalues_zeroed;
  out.se = out.covariance.diagonal().array().max(0.0).sqrt();
  for (const auto& c : s.clusters) out.cluster_names.push_back(c.name);

  const std::span<const double> ys{s.y.data(), static_cast<std::size_t>(n)};
  out.log_likelihood = poisson_log_likelihood(ys, {mu.data(), static_cast<std::size_t>(n)});
  const std::vector<double> mu_null(static_cast<std::size_t>(n), ybar);
  out.null_log_likelihood = poisson_log_likelihood(ys, mu_null);
  out.saturated_log_likelihood = poisson_log_likelihood(ys, ys);
  out.null_deviance = deviance(s.y, Eigen::VectorXd::Constant(n, ybar));
  out.pseudo_r2 = out.null_log_likelihood == out.saturated_log_likelihood
                      ? std::nan("")
                      : pseudo_r2(out.log_likelihood, out.null_log_likelihood,
                                  out.saturated_log_likelihood);
  out.internals = std::move(internals);
  return out;
}

FitResult fit_poisson_two_way_fe(const panel::Panel& panel, const ModelSpec& spec) {
  return fit(build_design(panel, spec), spec.options);
}

// ---------------------------------------------------------------------------
// Covariance

namespace {

Eigen::MatrixXd cluster_meat(const Eigen::MatrixXd& scores, const std::vector<int>& codes,
                             std::size_t groups) {
  Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(groups), scores.cols());
  for (Eigen::Index i = 0; i < scores.rows(); ++i)
    sums.row(codes[static_cast<std::size_t>(i)]) += scores.row(i);
  return sums.transpose() * sums;
}

}  // namespace

Covariance clustered_covariance(const Eigen::MatrixXd& X_tilde, const Eigen::VectorXd& mu,
                                const Eigen::VectorXd& y,
                                const std::vector<ClusterDimension>& clusters) {
  if (clusters.empty() || clusters.size() > 2)
    throw invalid_argument("clustered covariance needs one or two cluster dimensions");
  for (const auto& c : clusters) {
    if (c.codes.size() != static_cast<std::size_t>(y.size()))
      throw invalid_argument("cluster codes do not match the sample");
    if (c.groups < 2)
      throw PreconditionError("cluster dimension '" + c.name + "' has a single cluster");
  }
  if (X_tilde.cols() == 0) return {};
  const Eigen::MatrixXd M = X_tilde.transpose() * mu.asDiagonal() * X_tilde;
  const Eigen::MatrixXd bread = M.ldlt().solve(Eigen::MatrixXd::Identity(M.rows(), M.cols()));
  const Eigen::MatrixXd scores = X_tilde.array().colwise() * (y - mu).array();

  auto term = [&](const std::vector<int>& codes, std::size_t groups) -> Eigen::MatrixXd {
    const double g = static_cast<double>(groups);
    return (g / (g - 1.0)) * bread * cluster_meat(scores, codes, groups) * bread;
  };

  Eigen::MatrixXd V = term(clusters[0].codes, clusters[0].groups);
  if (clusters.size() == 2) {
    V += term(clusters[1].codes, clusters[1].groups);
    // Intersection clusters.
    std::unordered_map<std::uint64_t, int> pair_code;
    std::vector<int> codes(clusters[0].codes.size());
    for (std::size_t i = 0; i < codes.size(); ++i) {
      const std::uint64_t key = (static_cast<std::uint64_t>(clusters[0].codes[i]) << 32) |
                                static_cast<std::uint32_t>(clusters[1].codes[i]);
      auto [it, inserted] = pair_code.emplace(key, static_cast<int>(pair_code.size()));
      codes[i] = it->second;
    }
    if (pair_code.size() >= 2) V -= term(codes, pair_code.size());
  }
  V = 0.5 * (V + V.transpose());

  Covariance out;
  Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> eig(V);
  if (eig.eigenvalues().minCoeff() < 0.0) {
    Eigen::VectorXd vals = eig.eigenvalues();
    for (Eigen::Index i = 0; i < vals.size(); ++i)
      if (vals[i] < 0.0) {
        vals[i] = 0.0;
        ++out.negative_eigenvalues_zeroed;
      }
    V = eig.eigenvectors() * vals.asDiagonal() * eig.eigenvectors().transpose();
    V = 0.5 * (V + V.transpose());
  }
  out.matrix = std::move(V);
  return out;
}

Covariance two_way_clustered_covariance(const FitInternals& internals,
                                        const std::vector<ClusterDimension>& clusters) {
  return clustered_covariance(internals.X_tilde, internals.mu, internals.y, clusters);
}

// ---------------------------------------------------------------------------
// Likelihood and reporting transforms

double poisson_log_likelihood(std::span<const double> y, std::span<const double> mu) {
  if (y.size() != mu.size()) throw invalid_argument("log-likelihood inputs differ in length");
  double ll = 0.0;
  for (std::size_t i = 0; i < y.size(); ++i) {
    const double yi = y[i], mi = mu[i];
    ll += (yi > 0.0 ? yi * std::log(mi) : 0.0) - mi - std::lgamma(yi + 1.0);
  }
  return ll;
}

double pseudo_r2(double ll_model, double ll_null, double ll_saturated) {
  const double denom = ll_null - ll_saturated;
  if (!(std::abs(denom) > 0.0) || !std::isfinite(denom))
    throw NumericalError("pseudo R2 undefined: null model already saturated");
  return 1.0 - (ll_model - ll_saturated) / denom;
}

double pseudo_r2(const FitResult& fit) {
  return pseudo_r2(fit.log_likelihood, fit.null_log_likelihood, fit.saturated_log_likelihood);
}

PercentEstimate transform_estimate(double delta, double se, double z) {
  if (!(se >= 0.0)) throw invalid_argument("standard error must be non-negative");
  return {std::expm1(delta) * 100.0, std::expm1(delta - z * se) * 100.0,
          std::expm1(delta + z * se) * 100.0};
}

}  // namespace prefaudit::fe
