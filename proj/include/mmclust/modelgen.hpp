// Candidate model generation over K = 1..K_max.
//
//   mul_em  independent EM fit per K
//   int_em  one EM process that drops the lightest component and keeps going
//   em_hac  one EM fit at K_max, then agglomerative merging of its components
//           (symmetric KL dissimilarity, complete linkage, weight-averaged merges)

#pragma once

#include <cmath>
#include <limits>
#include <map>
#include <span>
#include <string>
#include <string_view>
#include <vector>

#include "mmclust/core.hpp"
#include "mmclust/init.hpp"

namespace mmclust {

template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar kl_divergence(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  if (a.size() != b.size()) {
    throw DimensionError("KL divergence between vectors of size " + std::to_string(a.size()) + " and " +
                         std::to_string(b.size()));
  }
  using Scalar = typename DerivedA::Scalar;
  Scalar value = 0;
  for (Index d = 0; d < a.size(); ++d) {
    if (a(d) > 0) value += a(d) * std::log(a(d) / b(d));
  }
  return value;
}

/// Symmetric KL divergence (KL(a,b) + KL(b,a)) / 2.
// Summed as (a-b)(log a - log b) per term: each term is non-negative even after
// rounding, so near-identical components never come out slightly negative.
template <typename DerivedA, typename DerivedB>
typename DerivedA::Scalar skld(const Eigen::MatrixBase<DerivedA>& a, const Eigen::MatrixBase<DerivedB>& b) {
  using Scalar = typename DerivedA::Scalar;
  if (a.size() != b.size()) throw DimensionError("sKLD of vectors with different lengths");
  Scalar value = 0;
  for (Index d = 0; d < a.size(); ++d) {
    const Scalar x = a(d), y = static_cast<Scalar>(b(d));
    if (x == y) continue;
    if (x <= 0 || y <= 0) return std::numeric_limits<Scalar>::infinity();
    value += (x - y) * (std::log(x) - std::log(y));
  }
  return value / 2;
}

/// Pairwise sKLD between the components of a mixture.
template <typename Scalar>
Matrix<Scalar> pairwise_skld(const BasicMixtureModel<Scalar>& model) {
  const Index k = model.num_components();
  Matrix<Scalar> out = Matrix<Scalar>::Zero(k, k);
  for (Index a = 0; a < k; ++a) {
    for (Index b = a + 1; b < k; ++b) {
      out(a, b) = out(b, a) = skld(model.component(a), model.component(b));
    }
  }
  return out;
}

struct WeightedComponent {
  double weight = 0.0;
  Eigen::VectorXd probs;
};

/// Weight-summing, weight-averaging merge of mixture components.
WeightedComponent merge_components(std::span<const WeightedComponent> parts);

/// Largest pairwise dissimilarity between members of two disjoint clusters.
double complete_linkage(const Eigen::MatrixXd& dissimilarity, std::span<const int> cluster_a,
                        std::span<const int> cluster_b);

enum class GenerationMethod { mul_em, int_em, em_hac };

std::string to_string(GenerationMethod method);
GenerationMethod parse_generation_method(std::string_view name);

struct MergeStep {
  /// Smallest original component index of each merged cluster.
  int left = 0;
  int right = 0;
  WeightedComponent merged;
  double dissimilarity = 0.0;
  /// Number of clusters after this merge.
  int resulting_k = 0;
  /// Outlier absorption rather than a complete-linkage merge.
  bool absorbed = false;
};

struct HacOptions {
  /// Components whose expected support N * pi_k is below this many samples
  /// are outliers: before linkage starts, each is merged into the component
  /// with the smallest sKLD to it and then ignored when computing linkage.
  /// Zero disables absorption.
  double min_support = 3.0;
};

struct CandidateModelSet {
  GenerationMethod method = GenerationMethod::mul_em;
  std::map<int, FitResult> entries;
  double total_elapsed = 0.0;
  /// em_hac only, in merge order.
  std::vector<MergeStep> merges;
  /// K values that failed to fit, with the reason.
  std::map<int, std::string> failures;

  bool empty() const { return entries.empty(); }
  int k_max() const { return entries.empty() ? 0 : entries.rbegin()->first; }
  const FitResult& at(int k) const;
};

CandidateModelSet mul_em(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em);
CandidateModelSet int_em(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em);
CandidateModelSet em_hac(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em,
                         const HacOptions& hac = {});

/// Merges the components of `fit` down to a single cluster. Every
/// intermediate mixture is rescored on `data` without refitting.
CandidateModelSet hac_from_fit(const CountDataset& data, const FitResult& fit, Coefficient coefficient,
                               const HacOptions& hac = {});

/// Drops the lightest component (lowest index on ties) and renormalizes the rest.
MixtureModel annihilate_lightest(const MixtureModel& model);

CandidateModelSet generate_candidates(const CountDataset& data, int k_max, GenerationMethod method,
                                      const InitConfig& init, const EmConfig& em, const HacOptions& hac = {});

/// Recomputes every entry's log-likelihood with or without the multinomial
/// coefficient; responsibilities are unaffected.
CandidateModelSet rescore(const CandidateModelSet& candidates, const CountDataset& data, Coefficient coefficient);

}  // namespace mmclust
