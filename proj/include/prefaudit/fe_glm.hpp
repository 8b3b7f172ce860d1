#pragma once

// Poisson pseudo-maximum-likelihood with up to two absorbed fixed-effect
// dimensions and multiway clustered covariance.
//
// The fit runs IRLS. Each working regression partials the fixed effects out
// of the working response and the covariates by weighted alternating
// projections (Irons-Tuck accelerated), warm-started from the previous
// iteration's projection coefficients. Columns are demeaned independently,
// so spreading them across threads cannot change any floating-point result.

#include <Eigen/Dense>

#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "prefaudit/common.hpp"
#include "prefaudit/panel.hpp"

namespace prefaudit::fe {

enum class Transform { Identity, Log };

struct Covariate {
  std::string column;
  Transform transform = Transform::Identity;
  // "ln_<column>" for logs, the column name otherwise.
  std::string label() const;
};

enum class UnitKind { Product, ComparisonGroup };

struct FitOptions {
  int max_iterations = 100;
  double deviance_tolerance = 1e-10;    // relative deviance change
  double projection_tolerance = 1e-12;  // alternating projections
  int max_projection_iterations = 100000;
  unsigned threads = 0;  // 0: thread_budget()
};

struct ModelSpec {
  std::string outcome = std::string(panel::kOrganicVisibility);
  std::string protected_attribute = std::string(panel::kIsAmazon);
  std::vector<Covariate> covariates;
  bool unit_effects = true;
  bool date_effects = true;
  UnitKind unit = UnitKind::Product;
  // Subset of {"unit", "product", "group", "date", "obs"}. Empty: the fixed
  // effect dimensions, or observation-level clusters without fixed effects.
  std::vector<std::string> cluster_dims;
  // Used for platform rows that carry no seller rating.
  double platform_seller_rating = 100.0;
  FitOptions options;

  // Visibility on the protected indicator, ln sales rank, ln price,
  // ln review count, product rating, seller rating and Prime eligibility.
  static ModelSpec visibility_model();
  // Sales rank on the protected indicator, ln organic visibility,
  // ln sponsored visibility and ln price.
  static ModelSpec outcome_model();

  std::string unit_column() const {
    return unit == UnitKind::Product ? "product_id" : "comparison_group_id";
  }
  bool has_covariate(std::string_view column) const;
  void drop_covariate(std::string_view column);
};

struct FeDimension {
  std::string name;
  std::vector<int> codes;            // per observation, 0..levels-1
  std::vector<std::string> labels;   // per level
  std::size_t levels() const { return labels.size(); }
};

struct ClusterDimension {
  std::string name;
  std::vector<int> codes;
  std::size_t groups = 0;
};

// Numeric estimation problem, independent of the panel layout.
struct Design {
  std::vector<double> y;
  Eigen::MatrixXd X;  // n x k
  std::vector<std::string> names;
  std::vector<FeDimension> fixed_effects;  // zero, one or two
  std::vector<ClusterDimension> clusters;  // one or two
};

// Converts panel rows into a Design. Log covariates must be positive; the
// protected attribute must be binary.
Design build_design(const panel::Panel& panel, const ModelSpec& spec);

struct FixedEffectValues {
  std::string name;
  std::vector<std::string> labels;
  std::vector<double> values;
};

// State kept at convergence for covariance computations.
struct FitInternals {
  Eigen::MatrixXd X_tilde;  // covariates with fixed effects partialled out
  Eigen::VectorXd mu;
  Eigen::VectorXd y;
  std::vector<ClusterDimension> clusters;
};

struct FitResult {
  std::vector<std::string> names;
  Eigen::VectorXd coefficients;
  Eigen::MatrixXd covariance;
  Eigen::VectorXd se;
  std::vector<FixedEffectValues> fixed_effects;
  std::vector<std::string> cluster_names;

  std::size_t n_obs = 0;
  std::size_t n_units = 0;  // levels of the first fixed-effect dimension
  std::size_t n_dates = 0;  // levels of the date dimension (0 if absent)
  std::size_t dropped_obs = 0;
  std::vector<std::size_t> dropped_levels;  // per fixed-effect dimension

  double deviance = 0.0;
  double null_deviance = 0.0;
  double log_likelihood = 0.0;
  double null_log_likelihood = 0.0;
  double saturated_log_likelihood = 0.0;
  double pseudo_r2 = 0.0;

  int iterations = 0;
  long long projection_iterations = 0;
  bool converged = false;
  int negative_eigenvalues_zeroed = 0;

  std::shared_ptr<const FitInternals> internals;

  double coef(std::string_view name) const;
  double stderr_of(std::string_view name) const;
  std::optional<std::size_t> index_of(std::string_view name) const;
};

// Fits the Poisson model on a prepared design. Levels whose outcomes are all
// zero are removed first (their effect diverges under the log link).
FitResult fit(const Design& design, const FitOptions& options = {});

// Builds the design from the panel and fits it.
FitResult fit_poisson_two_way_fe(const panel::Panel& panel, const ModelSpec& spec);

struct Covariance {
  Eigen::MatrixXd matrix;
  int negative_eigenvalues_zeroed = 0;
};

// Sandwich covariance clustered on one or two dimensions. Two dimensions
// combine as V_A + V_B - V_AB (intersection clusters), each term scaled by
// G/(G-1). Negative eigenvalues of the sum are set to zero.
Covariance clustered_covariance(const Eigen::MatrixXd& X_tilde, const Eigen::VectorXd& mu,
                                const Eigen::VectorXd& y,
                                const std::vector<ClusterDimension>& clusters);
Covariance two_way_clustered_covariance(const FitInternals& internals,
                                        const std::vector<ClusterDimension>& clusters);

// Poisson log-likelihood terms (y ln mu - mu - lgamma(y+1)), summed.
double poisson_log_likelihood(std::span<const double> y, std::span<const double> mu);

// 1 - (ll_model - ll_sat) / (ll_null - ll_sat): McFadden's ratio with both
// log-likelihoods measured against the saturated model, which equals one
// minus the deviance ratio. The null model holds only an intercept.
double pseudo_r2(const FitResult& fit);
double pseudo_r2(double ll_model, double ll_null, double ll_saturated);

struct PercentEstimate {
  double percent = 0.0;
  double ci_low = 0.0;
  double ci_high = 0.0;
};

// (exp(delta) - 1) * 100 with bounds (exp(delta -/+ z se) - 1) * 100.
PercentEstimate transform_estimate(double delta, double se, double z = 1.96);

// Weighted alternating projections: removes the fixed effects from a column
// in place. Exposed for tests and for callers that partial out extra
// columns at the fitted weights.
class Projector {
 public:
  Projector(const std::vector<FeDimension>& fe, std::span<const double> w);

  // `coefs[d]` (levels of dimension d) warm-starts the iteration and
  // receives the final coefficients. Returns the number of iterations.
  int partial_out(std::span<double> x, std::vector<std::vector<double>>& coefs,
                  double tolerance, int max_iterations) const;

 private:
  const std::vector<FeDimension>& fe_;
  std::span<const double> w_;
  std::vector<std::vector<double>> weight_sums_;
};

}  // namespace prefaudit::fe
