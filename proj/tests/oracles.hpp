#pragma once

// Reference implementations used only by tests. They follow the textbook
// definitions directly and share no code with the library.

#include <Eigen/Dense>

#include <cmath>
#include <map>
#include <random>
#include <string>
#include <tuple>
#include <vector>

namespace oracle {

// ---------------------------------------------------------------------------
// Visibility

struct Rec {
  std::string kw;
  int day;
  std::string offer;
  int rank;
  double volume;
};

// relative[(day, offer)] by direct summation.
inline std::map<std::pair<int, std::string>, double> relative_visibility(
    const std::vector<Rec>& recs, const std::vector<double>& ecp, int cycle, double scale,
    std::map<std::pair<int, std::string>, double>* index_out = nullptr,
    std::map<std::pair<int, std::string>, double>* raw_out = nullptr) {
  auto f = [&](int rank) { return rank >= 1 && rank <= static_cast<int>(ecp.size()) ? ecp[rank - 1] : 0.0; };
  // keyword volume per observed day
  std::map<std::pair<std::string, int>, double> vol;
  for (const auto& r : recs) vol[{r.kw, r.day}] = r.volume;
  std::map<std::pair<int, std::string>, double> index, raw;
  for (const auto& r : recs) {
    double sum = 0;
    int n = 0;
    for (const auto& [key, v] : vol) {
      if (key.first != r.kw) continue;
      if (key.second <= r.day && key.second > r.day - cycle) {
        sum += v;
        ++n;
      }
    }
    index[{r.day, r.offer}] += (sum / n) * f(r.rank);
    raw[{r.day, r.offer}] += r.volume * f(r.rank);
  }
  std::map<int, double> total;
  for (const auto& [key, v] : index) total[key.first] += v;
  std::map<std::pair<int, std::string>, double> rel;
  for (const auto& [key, v] : index) rel[key] = v / total[key.first] * scale;
  if (index_out) *index_out = index;
  if (raw_out) *raw_out = raw;
  return rel;
}

// ---------------------------------------------------------------------------
// Poisson GLM with explicit dummies

struct DummyFit {
  Eigen::VectorXd beta;  // covariates only
  Eigen::VectorXd mu;
  bool converged = false;
};

// Covariates X, unit codes a (0..A-1), date codes b (0..B-1). Full dummy
// sets for units, dates without the first level. Plain Newton/IRLS with a
// dense solve.
inline DummyFit dummy_poisson(const Eigen::VectorXd& y, const Eigen::MatrixXd& X, const std::vector<int>& a,
                              int A, const std::vector<int>& b, int B) {
  const Eigen::Index n = y.size(), k = X.cols();
  const Eigen::Index p = k + A + (B > 0 ? B - 1 : 0);
  Eigen::MatrixXd D = Eigen::MatrixXd::Zero(n, p);
  D.leftCols(k) = X;
  for (Eigen::Index i = 0; i < n; ++i) {
    D(i, k + a[i]) = 1.0;
    if (B > 0 && b[i] > 0) D(i, k + A + b[i] - 1) = 1.0;
  }
  Eigen::VectorXd theta = Eigen::VectorXd::Zero(p);
  const double ybar = y.mean();
  for (int l = 0; l < A; ++l) theta[k + l] = std::log(ybar);
  Eigen::VectorXd eta = D * theta, mu = eta.array().exp();
  auto dev = [&](const Eigen::VectorXd& m) {
    double d = 0;
    for (Eigen::Index i = 0; i < n; ++i) d += (y[i] > 0 ? y[i] * std::log(y[i] / m[i]) : 0.0) - (y[i] - m[i]);
    return 2 * d;
  };
  double d_old = dev(mu);
  DummyFit out;
  for (int it = 0; it < 200; ++it) {
    Eigen::VectorXd z = eta.array() + (y.array() - mu.array()) / mu.array();
    Eigen::MatrixXd W = mu.asDiagonal();
    Eigen::MatrixXd M = D.transpose() * W * D;
    Eigen::VectorXd rhs = D.transpose() * W * z;
    Eigen::VectorXd next = M.colPivHouseholderQr().solve(rhs);
    Eigen::VectorXd eta_n = D * next;
    Eigen::VectorXd mu_n = eta_n.array().exp();
    double d_new = dev(mu_n);
    int h = 0;
    while (d_new > d_old * (1 + 1e-14) && h < 40) {
      next = 0.5 * (next + theta);
      eta_n = D * next;
      mu_n = eta_n.array().exp();
      d_new = dev(mu_n);
      ++h;
    }
    theta = next;
    eta = eta_n;
    mu = mu_n;
    if (std::abs(d_new - d_old) / (0.1 + std::abs(d_new)) < 1e-15) {
      out.converged = true;
      d_old = d_new;
      break;
    }
    d_old = d_new;
  }
  out.beta = theta.head(k);
  out.mu = mu;
  return out;
}

// ---------------------------------------------------------------------------
// Clustered sandwich by direct double summation over observation pairs.

inline Eigen::MatrixXd clustered_sandwich(const Eigen::MatrixXd& Xt, const Eigen::VectorXd& mu,
                                          const Eigen::VectorXd& y, const std::vector<int>& ca, int GA,
                                          const std::vector<int>& cb, int GB) {
  const Eigen::Index n = y.size(), k = Xt.cols();
  Eigen::MatrixXd M = Eigen::MatrixXd::Zero(k, k);
  for (Eigen::Index i = 0; i < n; ++i) M += mu[i] * Xt.row(i).transpose() * Xt.row(i);
  const Eigen::MatrixXd B = M.inverse();
  Eigen::MatrixXd mA = Eigen::MatrixXd::Zero(k, k), mB = mA, mAB = mA;
  std::map<std::pair<int, int>, int> inter;
  for (Eigen::Index i = 0; i < n; ++i) inter.emplace(std::make_pair(ca[i], cb[i]), 0);
  for (Eigen::Index i = 0; i < n; ++i)
    for (Eigen::Index j = 0; j < n; ++j) {
      const Eigen::MatrixXd outer =
          (y[i] - mu[i]) * (y[j] - mu[j]) * Xt.row(i).transpose() * Xt.row(j);
      if (ca[i] == ca[j]) mA += outer;
      if (cb[i] == cb[j]) mB += outer;
      if (ca[i] == ca[j] && cb[i] == cb[j]) mAB += outer;
    }
  const double G = GA, H = GB, I = static_cast<double>(inter.size());
  return G / (G - 1) * B * mA * B + H / (H - 1) * B * mB * B - I / (I - 1) * B * mAB * B;
}

}  // namespace oracle
