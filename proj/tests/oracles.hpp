// Reference computations that share no code with the library: they work from
// the textbook definitions, in probability space or by brute force.

#pragma once

#include <cmath>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

namespace oracle {

/// ARI from the four pair counts, enumerating every index pair.
inline double pair_count_ari(const std::vector<int>& a, const std::vector<int>& b) {
  double same_both = 0, same_a = 0, same_b = 0, neither = 0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    for (std::size_t j = i + 1; j < a.size(); ++j) {
      const bool in_a = a[i] == a[j];
      const bool in_b = b[i] == b[j];
      if (in_a && in_b) same_both += 1;
      else if (in_a) same_a += 1;
      else if (in_b) same_b += 1;
      else neither += 1;
    }
  }
  const double num = 2.0 * (neither * same_both - same_a * same_b);
  const double den = (neither + same_a) * (same_a + same_both) + (neither + same_b) * (same_b + same_both);
  return den == 0 ? 1.0 : num / den;
}

/// Every set partition of n elements as a restricted growth string.
inline void for_each_partition(int n, const std::function<void(const std::vector<int>&)>& visit) {
  std::vector<int> labels(static_cast<std::size_t>(n), 0);
  std::function<void(int, int)> rec = [&](int pos, int used) {
    if (pos == n) {
      visit(labels);
      return;
    }
    for (int v = 0; v <= used; ++v) {
      labels[static_cast<std::size_t>(pos)] = v;
      rec(pos + 1, std::max(used, v + 1));
    }
  };
  rec(0, 0);
}

inline double factorial(int v) {
  double out = 1;
  for (int i = 2; i <= v; ++i) out *= i;
  return out;
}

/// Multinomial probability evaluated directly, with the coefficient.
inline double multinomial_probability(const Eigen::VectorXi& x, const Eigen::VectorXd& mu) {
  double p = factorial(x.sum());
  for (Eigen::Index d = 0; d < x.size(); ++d) p *= std::pow(mu(d), x(d)) / factorial(x(d));
  return p;
}

/// Expected complete-data log-likelihood
///   sum_i sum_k r_ik (log pi_k + sum_d x_id log mu_kd)
/// over dense counts.
inline double expected_complete_ll(const Eigen::MatrixXd& counts, const Eigen::MatrixXd& resp,
                                   const Eigen::VectorXd& pi, const Eigen::MatrixXd& mu) {
  double q = 0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index k = 0; k < resp.cols(); ++k) {
      double inner = std::log(pi(k));
      for (Eigen::Index d = 0; d < counts.cols(); ++d) inner += counts(i, d) * std::log(mu(k, d));
      q += resp(i, k) * inner;
    }
  }
  return q;
}

/// Central-difference gradient of Q with respect to every mu_kd and pi_k,
/// projected onto the tangent space of each simplex (mean removed). Returns
/// the largest absolute component.
inline double projected_gradient_norm(const Eigen::MatrixXd& counts, const Eigen::MatrixXd& resp,
                                      const Eigen::VectorXd& pi, const Eigen::MatrixXd& mu, double h = 1e-6) {
  double worst = 0;
  auto project = [&](Eigen::VectorXd g) {
    g.array() -= g.mean();
    worst = std::max(worst, g.cwiseAbs().maxCoeff());
  };
  for (Eigen::Index k = 0; k < mu.rows(); ++k) {
    Eigen::VectorXd g(mu.cols());
    for (Eigen::Index d = 0; d < mu.cols(); ++d) {
      Eigen::MatrixXd up = mu, down = mu;
      const double step = h * mu(k, d);
      up(k, d) += step;
      down(k, d) -= step;
      g(d) = (expected_complete_ll(counts, resp, pi, up) - expected_complete_ll(counts, resp, pi, down)) / (2 * step);
    }
    project(g);
  }
  Eigen::VectorXd g(pi.size());
  for (Eigen::Index k = 0; k < pi.size(); ++k) {
    Eigen::VectorXd up = pi, down = pi;
    const double step = h * pi(k);
    up(k) += step;
    down(k) -= step;
    g(k) = (expected_complete_ll(counts, resp, up, mu) - expected_complete_ll(counts, resp, down, mu)) / (2 * step);
  }
  project(g);
  return worst;
}

}  // namespace oracle
