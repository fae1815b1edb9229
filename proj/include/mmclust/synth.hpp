// Labeled synthetic count data drawn from a constructed multinomial mixture,
// with rejection on the separation regime of the generating parameters.

#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "mmclust/core.hpp"

namespace mmclust {

/// ws: well separated, nws: not well separated.
enum class Separation { ws, nws };

std::string to_string(Separation separation);
Separation parse_separation(std::string_view name);

inline constexpr double kDefaultSeparationThreshold = 1.0;
inline constexpr int kRejectionBudget = 1000;

struct SynthSpec {
  int k = 3;
  int d = 10;
  int n = 1000;
  /// Symmetric Dirichlet concentration; 0.1 for ws and 1.0 for nws when unset.
  std::optional<double> dirichlet_alpha;
  /// Inclusive range of per-cluster orders; [ceil(D/2), floor(3D/2)] when unset.
  std::optional<std::pair<int, int>> order_range;
  Separation separation = Separation::ws;
  double separation_threshold = kDefaultSeparationThreshold;
  /// Uniform when unset.
  std::optional<Eigen::VectorXd> weights;
  std::uint64_t seed = 0;

  double alpha() const;
  std::pair<int, int> orders() const;
  void validate() const;
};

struct GeneratingModel {
  MixtureModel model;
  /// Order V_k of each component.
  std::vector<int> orders;
  /// Smallest pairwise sKLD among components (+inf for K=1).
  double min_skld = 0.0;
  int attempts = 0;
};

/// Thrown when no model in the rejection budget lands in the requested regime.
class SeparationError : public std::runtime_error {
 public:
  SeparationError(const std::string& what, double best_min_skld, double worst_min_skld, int attempts)
      : std::runtime_error(what), best(best_min_skld), worst(worst_min_skld), attempts(attempts) {}
  double best;
  double worst;
  int attempts;
};

double min_pairwise_skld(const MixtureModel& model);
Separation classify_separation(const MixtureModel& model, double threshold = kDefaultSeparationThreshold);

GeneratingModel sample_generating_model(const SynthSpec& spec);
CountDataset sample_dataset(const MixtureModel& model, const std::vector<int>& orders, int n, std::uint64_t seed);

struct SynthDataset {
  GeneratingModel truth;
  CountDataset data;
};

/// Model and dataset from one spec; the dataset uses a seed derived from spec.seed.
SynthDataset generate(const SynthSpec& spec);

}  // namespace mmclust
