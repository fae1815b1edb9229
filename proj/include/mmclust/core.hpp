// Multinomial mixture core: count data, mixture parameters, and the EM
// building blocks (joint log-densities, E-step, M-step, EM driver).
//
// Parameter types are templated on the scalar so the density and step
// functions work for float as well as double; the EM driver and everything
// built on top of it use double.

#pragma once

#include <cmath>
#include <cstdint>
#include <limits>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include <Eigen/Core>
#include <Eigen/SparseCore>

namespace mmclust {

using Index = Eigen::Index;
using Rng = std::mt19937_64;

template <typename Scalar>
using Vector = Eigen::Matrix<Scalar, Eigen::Dynamic, 1>;
template <typename Scalar>
using Matrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic>;
template <typename Scalar>
using RowMatrix = Eigen::Matrix<Scalar, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

using CountVector = Eigen::VectorXi;
using ProbVector = Eigen::VectorXd;
/// N x K posterior membership probabilities.
using ResponsibilityMatrix = Eigen::MatrixXd;

/// Data and model disagree on dimension (D) or sample count (N).
class DimensionError : public std::invalid_argument {
 public:
  using std::invalid_argument::invalid_argument;
};

/// Whether log-likelihoods carry the per-sample multinomial coefficient
/// log(V! / prod x_d!). It is constant in the parameters, so it never changes
/// responsibilities or the argmin of any selection criterion.
enum class Coefficient { excluded, included };

inline constexpr double kDefaultProbFloor = 1e-10;

/// Tolerance used when validating that externally supplied vectors are
/// normalized. Tight for double, loose enough for float.
template <typename Scalar>
constexpr Scalar normalization_tolerance() {
  return std::sqrt(std::numeric_limits<Scalar>::epsilon()) * Scalar(16);
}

template <typename Derived>
double log_multinomial_coefficient(const Eigen::MatrixBase<Derived>& x) {
  double order = 0.0;
  double denom = 0.0;
  for (Index d = 0; d < x.size(); ++d) {
    const double c = static_cast<double>(x(d));
    order += c;
    denom += std::lgamma(c + 1.0);
  }
  return std::lgamma(order + 1.0) - denom;
}

/// Normalizes `p` onto the simplex with every entry >= floor. Mass removed
/// from the floored entries comes proportionally from the others, so the
/// result sums to one and respects the floor exactly.
template <typename Derived>
Vector<typename Derived::Scalar> floor_probabilities(const Eigen::MatrixBase<Derived>& p,
                                                     typename Derived::Scalar floor) {
  using Scalar = typename Derived::Scalar;
  const Index dim = p.size();
  if (dim == 0) throw std::invalid_argument("probability vector is empty");
  if (!(floor > 0) || floor * Scalar(dim) >= Scalar(1)) {
    throw std::invalid_argument("probability floor must lie in (0, 1/D)");
  }
  if ((p.array() < Scalar(0)).any() || !p.allFinite()) {
    throw std::invalid_argument("probability vector has negative or non-finite entries");
  }
  const Scalar total = p.sum();
  if (!(total > 0)) throw std::invalid_argument("probability vector has zero mass");

  Vector<Scalar> out = p / total;
  Eigen::Array<bool, Eigen::Dynamic, 1> pinned = Eigen::Array<bool, Eigen::Dynamic, 1>::Constant(dim, false);
  for (Index pass = 0; pass < dim; ++pass) {
    bool changed = false;
    for (Index d = 0; d < dim; ++d) {
      if (!pinned(d) && out(d) < floor) {
        pinned(d) = true;
        changed = true;
      }
    }
    if (!changed) break;
    Scalar free_mass = 0;
    for (Index d = 0; d < dim; ++d) {
      if (!pinned(d)) free_mass += out(d);
    }
    const Scalar budget = Scalar(1) - floor * Scalar(pinned.count());
    for (Index d = 0; d < dim; ++d) {
      out(d) = pinned(d) ? floor : out(d) * budget / free_mass;
    }
  }
  return out;
}

/// Mixing weights plus one probability vector per component (rows of a K x D
/// matrix). Immutable once built; components are floored at construction.
template <typename Scalar>
class BasicMixtureModel {
 public:
  using VectorType = Vector<Scalar>;
  using ComponentMatrix = RowMatrix<Scalar>;

  BasicMixtureModel(VectorType weights, ComponentMatrix components,
                    Scalar prob_floor = Scalar(kDefaultProbFloor))
      : weights_(std::move(weights)), components_(std::move(components)), prob_floor_(prob_floor) {
    const Index k = weights_.size();
    if (k < 1) throw std::invalid_argument("mixture needs at least one component");
    if (components_.rows() != k) {
      throw DimensionError("mixture has " + std::to_string(k) + " weights but " +
                           std::to_string(components_.rows()) + " components");
    }
    if (components_.cols() < 1) throw std::invalid_argument("components must have D >= 1");
    if (!weights_.allFinite() || (weights_.array() < Scalar(0)).any()) {
      throw std::invalid_argument("mixing weights must be finite and non-negative");
    }
    const Scalar weight_sum = weights_.sum();
    if (std::abs(weight_sum - Scalar(1)) > normalization_tolerance<Scalar>()) {
      throw std::invalid_argument("mixing weights must sum to one");
    }
    weights_ /= weight_sum;
    for (Index c = 0; c < k; ++c) {
      const Scalar row_sum = components_.row(c).sum();
      if (std::abs(row_sum - Scalar(1)) > normalization_tolerance<Scalar>()) {
        throw std::invalid_argument("component " + std::to_string(c) + " does not sum to one");
      }
      components_.row(c) = floor_probabilities(components_.row(c).transpose(), prob_floor_).transpose();
    }
  }

  Index num_components() const { return weights_.size(); }
  Index dim() const { return components_.cols(); }
  Scalar prob_floor() const { return prob_floor_; }

  const VectorType& weights() const { return weights_; }
  Scalar weight(Index k) const { return weights_(k); }
  const ComponentMatrix& components() const { return components_; }
  auto component(Index k) const { return components_.row(k); }

  ComponentMatrix log_components() const { return components_.array().log().matrix(); }

 private:
  VectorType weights_;
  ComponentMatrix components_;
  Scalar prob_floor_;
};

using MixtureModel = BasicMixtureModel<double>;

/// N count vectors of common dimension D, stored sparse (row-major) since
/// document-term data is overwhelmingly zero. Labels are optional, 0-based.
class CountDataset {
 public:
  using SparseMatrix = Eigen::SparseMatrix<double, Eigen::RowMajor>;

  explicit CountDataset(SparseMatrix counts, std::vector<int> labels = {});
  static CountDataset from_dense(const Eigen::MatrixXi& counts, std::vector<int> labels = {});

  Index size() const { return counts_.rows(); }
  Index dim() const { return counts_.cols(); }
  const SparseMatrix& counts() const { return counts_; }
  /// Per-row order V.
  const Eigen::VectorXd& orders() const { return orders_; }
  const Eigen::VectorXd& log_coefficients() const { return log_coefficients_; }
  double log_coefficient_sum() const { return log_coefficients_.sum(); }
  CountVector row(Index i) const;
  Eigen::VectorXd term_totals() const;

  bool has_labels() const { return !labels_.empty(); }
  const std::vector<int>& labels() const { return labels_; }
  /// Number of distinct label values (0 when unlabeled).
  int num_classes() const;

  CountDataset with_labels(std::vector<int> labels) const;

 private:
  SparseMatrix counts_;
  Eigen::VectorXd orders_;
  Eigen::VectorXd log_coefficients_;
  std::vector<int> labels_;
};

template <typename CountDerived, typename ProbDerived>
typename ProbDerived::Scalar log_multinomial_pmf(const Eigen::MatrixBase<CountDerived>& x,
                                                 const Eigen::MatrixBase<ProbDerived>& mu,
                                                 Coefficient coefficient = Coefficient::excluded) {
  using Scalar = typename ProbDerived::Scalar;
  if (x.size() != mu.size()) {
    throw DimensionError("count vector has D=" + std::to_string(x.size()) + " but parameter has D=" +
                         std::to_string(mu.size()));
  }
  Scalar value = 0;
  for (Index d = 0; d < x.size(); ++d) {
    const auto c = x(d);
    if (c < 0) throw std::invalid_argument("counts must be non-negative");
    if (c != 0) value += static_cast<Scalar>(c) * std::log(mu(d));
  }
  if (coefficient == Coefficient::included) {
    value += static_cast<Scalar>(log_multinomial_coefficient(x));
  }
  return value;
}

inline void check_compatible(const CountDataset& data, Index model_dim) {
  if (data.size() < 1) throw std::invalid_argument("dataset is empty");
  if (data.dim() != model_dim) {
    throw DimensionError("dataset has D=" + std::to_string(data.dim()) + " but model has D=" +
                         std::to_string(model_dim));
  }
}

/// N x K matrix of log(pi_k) + log M(x_i | mu_k).
template <typename Scalar>
Matrix<Scalar> log_joint(const CountDataset& data, const BasicMixtureModel<Scalar>& model,
                         Coefficient coefficient = Coefficient::excluded) {
  check_compatible(data, model.dim());
  Matrix<Scalar> joint = data.counts().template cast<Scalar>() * model.log_components().transpose();
  joint.rowwise() += model.weights().array().log().matrix().transpose();
  if (coefficient == Coefficient::included) {
    joint.colwise() += data.log_coefficients().template cast<Scalar>();
  }
  return joint;
}

template <typename Scalar>
struct Expectation {
  Matrix<Scalar> responsibilities;
  Scalar log_likelihood;
};

/// E-step and observed-data log-likelihood from a single log-sum-exp pass.
template <typename Scalar>
Expectation<Scalar> expectation(const CountDataset& data, const BasicMixtureModel<Scalar>& model,
                                Coefficient coefficient = Coefficient::excluded) {
  Matrix<Scalar> joint = log_joint(data, model, coefficient);
  const Vector<Scalar> row_max = joint.rowwise().maxCoeff();
  if (!row_max.allFinite()) {
    throw std::runtime_error("sample has zero density under every component");
  }
  joint = (joint.colwise() - row_max).array().exp().matrix();
  const Vector<Scalar> row_sum = joint.rowwise().sum();
  joint.array().colwise() /= row_sum.array();
  const Scalar llh = (row_max.array() + row_sum.array().log()).sum();
  return {std::move(joint), llh};
}

template <typename Scalar>
Matrix<Scalar> e_step(const CountDataset& data, const BasicMixtureModel<Scalar>& model) {
  return expectation(data, model).responsibilities;
}

template <typename Scalar>
Scalar mixture_log_likelihood(const CountDataset& data, const BasicMixtureModel<Scalar>& model,
                              Coefficient coefficient = Coefficient::excluded) {
  return expectation(data, model, coefficient).log_likelihood;
}

/// Pooled term frequencies of the whole dataset; uniform when every row is empty.
Eigen::VectorXd global_frequencies(const CountDataset& data);

/// M-step. A component with no responsibility-weighted counts is restarted
/// from the global term frequencies with multiplicative noise drawn from
/// `rng`, at weight 1/N before the weights are renormalized.
template <typename Scalar, typename Derived>
BasicMixtureModel<Scalar> m_step(const CountDataset& data, const Eigen::MatrixBase<Derived>& resp,
                                 Scalar prob_floor, Rng& rng) {
  const Index n = data.size();
  const Index k = resp.cols();
  if (resp.rows() != n) {
    throw DimensionError("responsibilities have " + std::to_string(resp.rows()) + " rows for " +
                         std::to_string(n) + " samples");
  }
  if (k < 1) throw std::invalid_argument("responsibilities need at least one column");

  const Matrix<Scalar> r = resp.template cast<Scalar>();
  Vector<Scalar> weights = r.colwise().sum().transpose() / Scalar(n);
  RowMatrix<Scalar> mass = r.transpose() * data.counts().template cast<Scalar>();

  Vector<Scalar> fallback;
  std::uniform_real_distribution<double> jitter(0.5, 1.5);
  for (Index c = 0; c < k; ++c) {
    const Scalar total = mass.row(c).sum();
    if (total > 0 && weights(c) > 0) {
      mass.row(c) /= total;
      continue;
    }
    if (fallback.size() == 0) fallback = global_frequencies(data).template cast<Scalar>();
    for (Index d = 0; d < mass.cols(); ++d) {
      mass(c, d) = fallback(d) * static_cast<Scalar>(jitter(rng)) + prob_floor;
    }
    mass.row(c) /= mass.row(c).sum();
    weights(c) = Scalar(1) / Scalar(n);
  }
  weights /= weights.sum();
  return BasicMixtureModel<Scalar>(std::move(weights), std::move(mass), prob_floor);
}

template <typename Derived>
MixtureModel m_step(const CountDataset& data, const Eigen::MatrixBase<Derived>& resp,
                    double prob_floor = kDefaultProbFloor) {
  Rng rng(0);
  return m_step<double>(data, resp, prob_floor, rng);
}

/// Argmax of each responsibility row; ties go to the lowest index.
template <typename Derived>
std::vector<int> hard_assignments(const Eigen::MatrixBase<Derived>& resp) {
  std::vector<int> out(static_cast<std::size_t>(resp.rows()));
  for (Index i = 0; i < resp.rows(); ++i) {
    Index best = 0;
    for (Index c = 1; c < resp.cols(); ++c) {
      if (resp(i, c) > resp(i, best)) best = c;
    }
    out[static_cast<std::size_t>(i)] = static_cast<int>(best);
  }
  return out;
}

struct EmConfig {
  int max_iterations = 100;
  /// Absolute change in log-likelihood that counts as converged.
  double tolerance = 1e-5;
  double prob_floor = kDefaultProbFloor;
  std::uint64_t seed = 0;
  Coefficient coefficient = Coefficient::excluded;

  void validate(Index dim) const;
};

struct FitResult {
  MixtureModel model;
  double log_likelihood = 0.0;
  ResponsibilityMatrix responsibilities;
  int iterations = 0;
  bool converged = false;
  double elapsed = 0.0;
  /// Log-likelihood of the initial model followed by one value per iteration.
  std::vector<double> trace;

  Index num_components() const { return model.num_components(); }
};

/// Alternates M and E steps from `init` until the log-likelihood changes by
/// less than the tolerance or the iteration cap is reached.
FitResult em_fit(const CountDataset& data, const MixtureModel& init, const EmConfig& config);

/// Scores a fixed model without iterating: responsibilities and
/// log-likelihood on `data`, iterations recorded as given.
FitResult evaluate_model(const CountDataset& data, MixtureModel model, Coefficient coefficient,
                         int iterations = 1, bool converged = true);

}  // namespace mmclust
