#include "mmclust/random.hpp"

#include <random>

namespace mmclust {

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

}  // namespace

std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index) {
  if (index == 0) return master;
  return splitmix64(master ^ splitmix64(index));
}

Eigen::VectorXd sample_dirichlet(Index dim, double alpha, Rng& rng) {
  if (dim < 1) throw std::invalid_argument("Dirichlet dimension must be positive");
  if (!(alpha > 0)) throw std::invalid_argument("Dirichlet concentration must be positive");
  std::gamma_distribution<double> gamma(alpha, 1.0);
  Eigen::VectorXd draw(dim);
  // Small alpha can underflow every coordinate; redraw in that case.
  for (;;) {
    for (Index d = 0; d < dim; ++d) draw(d) = gamma(rng);
    const double total = draw.sum();
    if (total > 0 && std::isfinite(total)) return draw / total;
  }
}

CountVector sample_multinomial(int order, const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng) {
  if (order < 0) throw std::invalid_argument("multinomial order must be non-negative");
  CountVector counts = CountVector::Zero(probs.size());
  for (int t = 0; t < order; ++t) ++counts(sample_categorical(probs, rng));
  return counts;
}

}  // namespace mmclust
