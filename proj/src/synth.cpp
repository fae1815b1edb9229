#include "mmclust/synth.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "mmclust/modelgen.hpp"
#include "mmclust/random.hpp"

namespace mmclust {

std::string to_string(Separation separation) { return separation == Separation::ws ? "ws" : "nws"; }

Separation parse_separation(std::string_view name) {
  if (name == "ws") return Separation::ws;
  if (name == "nws") return Separation::nws;
  throw std::invalid_argument("unknown separation '" + std::string(name) + "' (expected ws or nws)");
}

double SynthSpec::alpha() const {
  if (dirichlet_alpha) return *dirichlet_alpha;
  return separation == Separation::ws ? 0.1 : 1.0;
}

std::pair<int, int> SynthSpec::orders() const {
  if (order_range) return *order_range;
  return {static_cast<int>(std::ceil(0.5 * d)), static_cast<int>(std::floor(1.5 * d))};
}

void SynthSpec::validate() const {
  if (k < 1) throw std::invalid_argument("synthetic K must be >= 1");
  if (d < 2) throw std::invalid_argument("synthetic D must be >= 2");
  if (n < k) throw std::invalid_argument("synthetic N must be >= K");
  if (!(alpha() > 0)) throw std::invalid_argument("Dirichlet alpha must be positive");
  const auto [lo, hi] = orders();
  if (lo < 0 || hi < lo) throw std::invalid_argument("invalid order range");
  if (!(separation_threshold > 0)) throw std::invalid_argument("separation threshold must be positive");
  if (weights) {
    if (weights->size() != k) throw DimensionError("synthetic weights must have K entries");
    if ((weights->array() < 0).any() || std::abs(weights->sum() - 1.0) > 1e-10) {
      throw std::invalid_argument("synthetic weights must be a probability vector");
    }
  }
}

double min_pairwise_skld(const MixtureModel& model) {
  double best = std::numeric_limits<double>::infinity();
  for (Index a = 0; a < model.num_components(); ++a) {
    for (Index b = a + 1; b < model.num_components(); ++b) {
      best = std::min(best, skld(model.component(a), model.component(b)));
    }
  }
  return best;
}

Separation classify_separation(const MixtureModel& model, double threshold) {
  if (model.num_components() < 2) return Separation::ws;
  return min_pairwise_skld(model) >= threshold ? Separation::ws : Separation::nws;
}

GeneratingModel sample_generating_model(const SynthSpec& spec) {
  spec.validate();
  Rng rng(spec.seed);
  const auto [order_lo, order_hi] = spec.orders();
  std::uniform_int_distribution<int> order_dist(order_lo, order_hi);
  const Eigen::VectorXd weights =
      spec.weights ? *spec.weights : Eigen::VectorXd::Constant(spec.k, 1.0 / spec.k);

  double best = -std::numeric_limits<double>::infinity();
  double worst = std::numeric_limits<double>::infinity();
  for (int attempt = 1; attempt <= kRejectionBudget; ++attempt) {
    MixtureModel::ComponentMatrix components(spec.k, spec.d);
    for (int c = 0; c < spec.k; ++c) components.row(c) = sample_dirichlet(spec.d, spec.alpha(), rng).transpose();
    std::vector<int> orders(static_cast<std::size_t>(spec.k));
    for (int& v : orders) v = order_dist(rng);
    MixtureModel model(weights, std::move(components));

    const double separation = min_pairwise_skld(model);
    best = std::max(best, separation);
    worst = std::min(worst, separation);
    if (classify_separation(model, spec.separation_threshold) == spec.separation) {
      return {std::move(model), std::move(orders), separation, attempt};
    }
  }
  throw SeparationError("no " + to_string(spec.separation) + " model within " + std::to_string(kRejectionBudget) +
                            " attempts (min pairwise sKLD ranged " + std::to_string(worst) + " to " +
                            std::to_string(best) + ", threshold " + std::to_string(spec.separation_threshold) +
                            ")",
                        best, worst, kRejectionBudget);
}

CountDataset sample_dataset(const MixtureModel& model, const std::vector<int>& orders, int n, std::uint64_t seed) {
  if (static_cast<Index>(orders.size()) != model.num_components()) {
    throw DimensionError("need one order per component");
  }
  if (n < 1) throw std::invalid_argument("sample count must be >= 1");
  Rng rng(seed);
  std::vector<Eigen::Triplet<double>> triplets;
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) {
    const Index z = sample_categorical(model.weights(), rng);
    labels[static_cast<std::size_t>(i)] = static_cast<int>(z);
    const Eigen::VectorXd probs = model.component(z).transpose();
    const CountVector x = sample_multinomial(orders[static_cast<std::size_t>(z)], probs, rng);
    for (Index d = 0; d < x.size(); ++d) {
      if (x(d) != 0) triplets.emplace_back(i, d, static_cast<double>(x(d)));
    }
  }
  CountDataset::SparseMatrix counts(n, model.dim());
  counts.setFromTriplets(triplets.begin(), triplets.end());
  return CountDataset(std::move(counts), std::move(labels));
}

SynthDataset generate(const SynthSpec& spec) {
  GeneratingModel truth = sample_generating_model(spec);
  CountDataset data = sample_dataset(truth.model, truth.orders, spec.n, derive_seed(spec.seed, 1));
  return {std::move(truth), std::move(data)};
}

}  // namespace mmclust
