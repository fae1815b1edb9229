// Seed derivation and the few distributions the generators need.

#pragma once

#include <cstdint>

#include "mmclust/core.hpp"

namespace mmclust {

/// Independent sub-seed for stream `index` of a master seed. Index 0 maps to
/// the master seed itself, so a single-trial run matches the direct call.
std::uint64_t derive_seed(std::uint64_t master, std::uint64_t index);

/// Draw from a symmetric Dirichlet(alpha) over `dim` categories.
Eigen::VectorXd sample_dirichlet(Index dim, double alpha, Rng& rng);

/// Index drawn with probability proportional to `probs` (need not be normalized).
template <typename Derived>
Index sample_categorical(const Eigen::MatrixBase<Derived>& probs, Rng& rng) {
  const double total = probs.sum();
  std::uniform_real_distribution<double> unit(0.0, total);
  const double u = unit(rng);
  double acc = 0.0;
  Index last_positive = 0;
  for (Index k = 0; k < probs.size(); ++k) {
    if (probs(k) <= 0) continue;
    acc += probs(k);
    last_positive = k;
    if (u < acc) return k;
  }
  return last_positive;
}

/// One multinomial draw of `order` trials.
CountVector sample_multinomial(int order, const Eigen::Ref<const Eigen::VectorXd>& probs, Rng& rng);

}  // namespace mmclust
