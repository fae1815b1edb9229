#include "mmclust/modelgen.hpp"

#include <algorithm>
#include <chrono>
#include <limits>

#include "mmclust/random.hpp"

namespace mmclust {

namespace {

using Clock = std::chrono::steady_clock;

double seconds_since(Clock::time_point start) {
  return std::chrono::duration<double>(Clock::now() - start).count();
}

MixtureModel drop_component(const MixtureModel& model, Index drop) {
  if (model.num_components() < 2) throw std::invalid_argument("cannot remove the only component");
  const Index k = model.num_components();
  Eigen::VectorXd weights(k - 1);
  MixtureModel::ComponentMatrix components(k - 1, model.dim());
  for (Index c = 0, out = 0; c < k; ++c) {
    if (c == drop) continue;
    weights(out) = model.weight(c);
    components.row(out) = model.component(c);
    ++out;
  }
  const double remaining = weights.sum();
  if (!(remaining > 0)) throw std::runtime_error("no weight left after removing a component");
  weights /= remaining;
  return MixtureModel(std::move(weights), std::move(components), model.prob_floor());
}

}  // namespace

WeightedComponent merge_components(std::span<const WeightedComponent> parts) {
  if (parts.empty()) throw std::invalid_argument("merge needs at least one component");
  const Index dim = parts.front().probs.size();
  double weight = 0.0;
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const WeightedComponent& part : parts) {
    if (part.probs.size() != dim) throw DimensionError("merged components differ in dimension");
    if (part.weight < 0 || !std::isfinite(part.weight)) {
      throw std::invalid_argument("merged component weight must be finite and non-negative");
    }
    weight += part.weight;
    mean += part.weight * part.probs;
  }
  if (weight > 1.0 + 1e-10) throw std::invalid_argument("merged weights exceed one");
  if (!(weight > 0)) throw std::invalid_argument("cannot merge components with zero total weight");
  mean /= weight;
  return {weight, mean / mean.sum()};
}

double complete_linkage(const Eigen::MatrixXd& dissimilarity, std::span<const int> cluster_a,
                        std::span<const int> cluster_b) {
  if (cluster_a.empty() || cluster_b.empty()) throw std::invalid_argument("linkage needs non-empty clusters");
  double worst = -std::numeric_limits<double>::infinity();
  for (int a : cluster_a) {
    for (int b : cluster_b) {
      if (a < 0 || b < 0 || a >= dissimilarity.rows() || b >= dissimilarity.cols()) {
        throw std::out_of_range("linkage index out of range");
      }
      if (a == b) throw std::invalid_argument("linkage clusters must be disjoint");
      worst = std::max(worst, dissimilarity(a, b));
    }
  }
  return worst;
}

std::string to_string(GenerationMethod method) {
  switch (method) {
    case GenerationMethod::mul_em: return "mul-em";
    case GenerationMethod::int_em: return "int-em";
    case GenerationMethod::em_hac: return "em-hac";
  }
  return "unknown";
}

GenerationMethod parse_generation_method(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "mul-em" || key == "mult-em") return GenerationMethod::mul_em;
  if (key == "int-em") return GenerationMethod::int_em;
  if (key == "em-hac") return GenerationMethod::em_hac;
  throw std::invalid_argument("unknown generation method '" + std::string(name) + "'");
}

MixtureModel annihilate_lightest(const MixtureModel& model) {
  Index lightest = 0;
  model.weights().minCoeff(&lightest);
  return drop_component(model, lightest);
}

const FitResult& CandidateModelSet::at(int k) const {
  auto it = entries.find(k);
  if (it == entries.end()) throw std::out_of_range("no candidate model with K=" + std::to_string(k));
  return it->second;
}

CandidateModelSet mul_em(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em) {
  if (k_max < 1) throw std::invalid_argument("K_max must be >= 1");
  const auto start = Clock::now();
  CandidateModelSet out;
  out.method = GenerationMethod::mul_em;
  for (int k = 1; k <= k_max; ++k) {
    const auto k_start = Clock::now();
    try {
      InitConfig init_k = init;
      init_k.seed = derive_seed(init.seed, static_cast<std::uint64_t>(k));
      EmConfig em_k = em;
      em_k.seed = derive_seed(em.seed, static_cast<std::uint64_t>(k));
      InitResult start_point = initialize(data, k, init_k);
      FitResult fit = em_fit(data, start_point.model, em_k);
      fit.elapsed = seconds_since(k_start);
      out.entries.emplace(k, std::move(fit));
    } catch (const std::exception& e) {
      out.failures.emplace(k, e.what());
    }
  }
  out.total_elapsed = seconds_since(start);
  return out;
}

CandidateModelSet int_em(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em) {
  if (k_max < 1) throw std::invalid_argument("K_max must be >= 1");
  const auto start = Clock::now();
  CandidateModelSet out;
  out.method = GenerationMethod::int_em;
  MixtureModel model = initialize(data, k_max, init).model;
  for (int k = k_max; k >= 1; --k) {
    const auto k_start = Clock::now();
    FitResult fit = em_fit(data, model, em);
    if (k > 1) model = annihilate_lightest(fit.model);
    fit.elapsed = k == k_max ? seconds_since(start) : seconds_since(k_start);
    out.entries.emplace(k, std::move(fit));
  }
  out.total_elapsed = seconds_since(start);
  return out;
}

CandidateModelSet hac_from_fit(const CountDataset& data, const FitResult& fit, Coefficient coefficient,
                               const HacOptions& hac) {
  const auto start = Clock::now();
  const MixtureModel& base = fit.model;
  const int k_max = static_cast<int>(base.num_components());
  const Eigen::MatrixXd dissimilarity = pairwise_skld(base);

  std::vector<WeightedComponent> originals;
  originals.reserve(static_cast<std::size_t>(k_max));
  for (Index c = 0; c < k_max; ++c) originals.push_back({base.weight(c), base.component(c).transpose()});

  // `members` feed the merged parameters; `core` members alone feed the
  // linkage, so absorbed outliers never stretch a cluster's diameter.
  struct Cluster {
    std::vector<int> members;
    std::vector<int> core;
    WeightedComponent params;
  };
  std::vector<Cluster> clusters;
  for (int c = 0; c < k_max; ++c) clusters.push_back({{c}, {c}, originals[static_cast<std::size_t>(c)]});

  CandidateModelSet out;
  out.method = GenerationMethod::em_hac;
  out.entries.emplace(k_max, fit);

  auto find_cluster = [&](int original) {
    for (std::size_t i = 0; i < clusters.size(); ++i) {
      const auto& m = clusters[i].members;
      if (std::find(m.begin(), m.end(), original) != m.end()) return i;
    }
    throw std::logic_error("component missing from every cluster");
  };

  // Folds cluster `b` into cluster `a`, keeps clusters sorted by their
  // smallest original index, and records the resulting mixture.
  auto merge = [&](std::size_t a, std::size_t b, double link, bool absorbed, Clock::time_point step_start) {
    MergeStep step;
    step.left = std::min(clusters[a].members.front(), clusters[b].members.front());
    step.right = std::max(clusters[a].members.front(), clusters[b].members.front());
    step.dissimilarity = link;
    step.absorbed = absorbed;

    Cluster& target = clusters[a];
    target.members.insert(target.members.end(), clusters[b].members.begin(), clusters[b].members.end());
    std::sort(target.members.begin(), target.members.end());
    if (!absorbed) {
      target.core.insert(target.core.end(), clusters[b].core.begin(), clusters[b].core.end());
      std::sort(target.core.begin(), target.core.end());
    }
    std::vector<WeightedComponent> parts;
    for (int member : target.members) parts.push_back(originals[static_cast<std::size_t>(member)]);
    target.params = merge_components(parts);
    step.merged = target.params;
    clusters.erase(clusters.begin() + static_cast<std::ptrdiff_t>(b));
    std::sort(clusters.begin(), clusters.end(),
              [](const Cluster& x, const Cluster& y) { return x.members.front() < y.members.front(); });

    const Index k = static_cast<Index>(clusters.size());
    Eigen::VectorXd weights(k);
    MixtureModel::ComponentMatrix components(k, base.dim());
    for (Index c = 0; c < k; ++c) {
      weights(c) = clusters[static_cast<std::size_t>(c)].params.weight;
      components.row(c) = clusters[static_cast<std::size_t>(c)].params.probs.transpose();
    }
    weights /= weights.sum();
    FitResult entry = evaluate_model(data, MixtureModel(std::move(weights), std::move(components), base.prob_floor()),
                                     coefficient, fit.iterations, fit.converged);
    entry.elapsed = seconds_since(step_start);
    step.resulting_k = static_cast<int>(k);
    out.merges.push_back(std::move(step));
    out.entries.emplace(static_cast<int>(k), std::move(entry));
  };

  if (hac.min_support > 0) {
    const double n = static_cast<double>(data.size());
    std::vector<int> outliers;
    std::vector<int> core;
    for (int c = 0; c < k_max; ++c) {
      (n * base.weight(c) < hac.min_support ? outliers : core).push_back(c);
    }
    std::stable_sort(outliers.begin(), outliers.end(), [&](int a, int b) { return base.weight(a) < base.weight(b); });
    if (!core.empty()) {
      for (int o : outliers) {
        const auto step_start = Clock::now();
        int nearest = core.front();
        for (int c : core) {
          if (dissimilarity(o, c) < dissimilarity(o, nearest)) nearest = c;
        }
        merge(find_cluster(nearest), find_cluster(o), dissimilarity(o, nearest), true, step_start);
      }
    }
  }

  while (clusters.size() > 1) {
    const auto step_start = Clock::now();
    std::size_t best_a = 0;
    std::size_t best_b = 1;
    double best = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < clusters.size(); ++a) {
      for (std::size_t b = a + 1; b < clusters.size(); ++b) {
        const double link = complete_linkage(dissimilarity, clusters[a].core, clusters[b].core);
        if (link < best) {
          best = link;
          best_a = a;
          best_b = b;
        }
      }
    }
    merge(best_a, best_b, best, false, step_start);
  }
  out.total_elapsed = seconds_since(start);
  return out;
}

CandidateModelSet em_hac(const CountDataset& data, int k_max, const InitConfig& init, const EmConfig& em,
                         const HacOptions& hac) {
  if (k_max < 2) throw std::invalid_argument("EM-HAC needs K_max >= 2");
  const auto start = Clock::now();
  MixtureModel start_point = initialize(data, k_max, init).model;
  FitResult fit = em_fit(data, start_point, em);
  fit.elapsed = seconds_since(start);
  CandidateModelSet out = hac_from_fit(data, fit, em.coefficient, hac);
  out.total_elapsed = seconds_since(start);
  return out;
}

CandidateModelSet generate_candidates(const CountDataset& data, int k_max, GenerationMethod method,
                                      const InitConfig& init, const EmConfig& em, const HacOptions& hac) {
  switch (method) {
    case GenerationMethod::mul_em: return mul_em(data, k_max, init, em);
    case GenerationMethod::int_em: return int_em(data, k_max, init, em);
    case GenerationMethod::em_hac: return em_hac(data, k_max, init, em, hac);
  }
  throw std::invalid_argument("unknown generation method");
}

CandidateModelSet rescore(const CandidateModelSet& candidates, const CountDataset& data, Coefficient coefficient) {
  CandidateModelSet out = candidates;
  for (auto& [k, fit] : out.entries) fit.log_likelihood = mixture_log_likelihood(data, fit.model, coefficient);
  return out;
}

}  // namespace mmclust
