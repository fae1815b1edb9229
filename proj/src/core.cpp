#include "mmclust/core.hpp"

#include <algorithm>
#include <chrono>
#include <set>

namespace mmclust {

CountDataset::CountDataset(SparseMatrix counts, std::vector<int> labels)
    : counts_(std::move(counts)), labels_(std::move(labels)) {
  if (counts_.rows() < 1) throw std::invalid_argument("dataset needs at least one sample");
  if (counts_.cols() < 1) throw std::invalid_argument("dataset needs D >= 1");
  counts_.prune(0.0);
  counts_.makeCompressed();

  orders_ = Eigen::VectorXd::Zero(counts_.rows());
  log_coefficients_ = Eigen::VectorXd::Zero(counts_.rows());
  for (Index i = 0; i < counts_.outerSize(); ++i) {
    double order = 0.0;
    double denom = 0.0;
    for (SparseMatrix::InnerIterator it(counts_, i); it; ++it) {
      const double c = it.value();
      if (c < 0 || c != std::floor(c) || !std::isfinite(c)) {
        throw std::invalid_argument("count at row " + std::to_string(i + 1) + ", column " +
                                    std::to_string(it.col() + 1) + " is not a non-negative integer");
      }
      order += c;
      denom += std::lgamma(c + 1.0);
    }
    orders_(i) = order;
    log_coefficients_(i) = std::lgamma(order + 1.0) - denom;
  }

  if (!labels_.empty()) {
    if (static_cast<Index>(labels_.size()) != counts_.rows()) {
      throw DimensionError("dataset has " + std::to_string(counts_.rows()) + " samples but " +
                           std::to_string(labels_.size()) + " labels");
    }
    if (std::any_of(labels_.begin(), labels_.end(), [](int l) { return l < 0; })) {
      throw std::invalid_argument("labels must be non-negative");
    }
  }
}

CountDataset CountDataset::from_dense(const Eigen::MatrixXi& counts, std::vector<int> labels) {
  return CountDataset(counts.cast<double>().sparseView(), std::move(labels));
}

CountVector CountDataset::row(Index i) const {
  CountVector out = CountVector::Zero(dim());
  for (SparseMatrix::InnerIterator it(counts_, i); it; ++it) out(it.col()) = static_cast<int>(it.value());
  return out;
}

Eigen::VectorXd CountDataset::term_totals() const {
  Eigen::VectorXd totals = Eigen::VectorXd::Zero(dim());
  for (Index i = 0; i < counts_.outerSize(); ++i) {
    for (SparseMatrix::InnerIterator it(counts_, i); it; ++it) totals(it.col()) += it.value();
  }
  return totals;
}

int CountDataset::num_classes() const {
  return static_cast<int>(std::set<int>(labels_.begin(), labels_.end()).size());
}

CountDataset CountDataset::with_labels(std::vector<int> labels) const {
  CountDataset copy = *this;
  if (!labels.empty() && static_cast<Index>(labels.size()) != size()) {
    throw DimensionError("dataset has " + std::to_string(size()) + " samples but " +
                         std::to_string(labels.size()) + " labels");
  }
  copy.labels_ = std::move(labels);
  return copy;
}

Eigen::VectorXd global_frequencies(const CountDataset& data) {
  Eigen::VectorXd totals = data.term_totals();
  const double sum = totals.sum();
  if (sum <= 0) return Eigen::VectorXd::Constant(data.dim(), 1.0 / static_cast<double>(data.dim()));
  return totals / sum;
}

void EmConfig::validate(Index dim) const {
  if (max_iterations < 1) throw std::invalid_argument("max_iterations must be >= 1");
  if (!(tolerance > 0)) throw std::invalid_argument("tolerance must be positive");
  if (!(prob_floor > 0) || prob_floor * static_cast<double>(dim) >= 1.0) {
    throw std::invalid_argument("prob_floor must lie in (0, 1/D)");
  }
}

FitResult em_fit(const CountDataset& data, const MixtureModel& init, const EmConfig& config) {
  const auto start = std::chrono::steady_clock::now();
  check_compatible(data, init.dim());
  config.validate(data.dim());

  Rng rng(config.seed);
  MixtureModel model = init;
  Expectation<double> current = expectation(data, model, config.coefficient);

  FitResult fit{model, current.log_likelihood, {}, 0, false, 0.0, {current.log_likelihood}};
  for (int it = 1; it <= config.max_iterations; ++it) {
    model = m_step<double>(data, current.responsibilities, config.prob_floor, rng);
    Expectation<double> next = expectation(data, model, config.coefficient);
    const double change = std::abs(next.log_likelihood - current.log_likelihood);
    current = std::move(next);
    fit.trace.push_back(current.log_likelihood);
    fit.iterations = it;
    if (change < config.tolerance) {
      fit.converged = true;
      break;
    }
  }

  fit.model = std::move(model);
  fit.log_likelihood = current.log_likelihood;
  fit.responsibilities = std::move(current.responsibilities);
  fit.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

FitResult evaluate_model(const CountDataset& data, MixtureModel model, Coefficient coefficient,
                         int iterations, bool converged) {
  const auto start = std::chrono::steady_clock::now();
  Expectation<double> e = expectation(data, model, coefficient);
  FitResult fit{std::move(model), e.log_likelihood, std::move(e.responsibilities), iterations, converged,
                0.0, {e.log_likelihood}};
  fit.elapsed = std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count();
  return fit;
}

}  // namespace mmclust
