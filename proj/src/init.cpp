#include "mmclust/init.hpp"

#include <algorithm>
#include <limits>
#include <optional>

#include "mmclust/random.hpp"

namespace mmclust {

namespace {

void check_k(const CountDataset& data, Index k) {
  if (k < 1) throw std::invalid_argument("number of components must be >= 1");
  if (k > data.size()) {
    throw std::invalid_argument("number of components K=" + std::to_string(k) +
                                " exceeds number of samples N=" + std::to_string(data.size()));
  }
}

void check_trials(int trials) {
  if (trials < 1) throw std::invalid_argument("trials must be >= 1");
}

MixtureModel random_model(Index k, Index dim, std::uint64_t seed, double prob_floor) {
  Rng rng(seed);
  MixtureModel::ComponentMatrix components(k, dim);
  for (Index c = 0; c < k; ++c) components.row(c) = sample_dirichlet(dim, 1.0, rng).transpose();
  return MixtureModel(Eigen::VectorXd::Constant(k, 1.0 / static_cast<double>(k)), std::move(components),
                      prob_floor);
}

// Strict improvement keeps the earliest trial on ties.
void keep_best(std::optional<InitResult>& best, MixtureModel model, double llh) {
  if (!best || llh > best->log_likelihood) {
    std::vector<double> trace = best ? std::move(best->trace) : std::vector<double>{};
    best.emplace(InitResult{std::move(model), llh, std::move(trace)});
  }
  best->trace.push_back(llh);
}

template <typename Transform>
MixtureModel run_modified_em(const CountDataset& data, MixtureModel model, int iterations, double prob_floor,
                             Rng& rng, Transform&& transform) {
  for (int it = 0; it < iterations; ++it) {
    ResponsibilityMatrix resp = e_step(data, model);
    transform(resp);
    model = m_step<double>(data, resp, prob_floor, rng);
  }
  return model;
}

}  // namespace

std::string to_string(InitStrategy strategy) {
  switch (strategy) {
    case InitStrategy::random: return "random";
    case InitStrategy::rnd_em: return "rnd-em";
    case InitStrategy::sm_em: return "sm-em";
    case InitStrategy::cem: return "cem";
    case InitStrategy::sem: return "sem";
  }
  return "unknown";
}

InitStrategy parse_init_strategy(std::string_view name) {
  std::string key(name);
  std::replace(key.begin(), key.end(), '_', '-');
  if (key == "random") return InitStrategy::random;
  if (key == "rnd-em" || key == "rndem") return InitStrategy::rnd_em;
  if (key == "sm-em" || key == "smem") return InitStrategy::sm_em;
  if (key == "cem") return InitStrategy::cem;
  if (key == "sem") return InitStrategy::sem;
  throw std::invalid_argument("unknown initialization strategy '" + std::string(name) + "'");
}

InitConfig InitConfig::defaults(InitStrategy strategy, std::uint64_t seed) {
  InitConfig config;
  config.strategy = strategy;
  config.seed = seed;
  switch (strategy) {
    case InitStrategy::random:
      config.trials = 1;
      config.short_run_iterations = 0;
      break;
    case InitStrategy::rnd_em:
      config.trials = 100;
      config.short_run_iterations = 0;
      break;
    case InitStrategy::sm_em:
    case InitStrategy::cem:
      config.trials = 5;
      config.short_run_iterations = 50;
      break;
    case InitStrategy::sem:
      config.trials = 1;
      config.short_run_iterations = 500;
      break;
  }
  return config;
}

void InitConfig::validate() const {
  check_trials(trials);
  if (short_run_iterations < 0) throw std::invalid_argument("short_run_iterations must be >= 0");
  if (strategy == InitStrategy::sem && short_run_iterations < 1) {
    throw std::invalid_argument("SEM needs at least one iteration");
  }
}

InitResult init_random(const CountDataset& data, Index k, std::uint64_t seed, double prob_floor) {
  check_k(data, k);
  MixtureModel model = random_model(k, data.dim(), seed, prob_floor);
  const double llh = mixture_log_likelihood(data, model);
  return {std::move(model), llh, {llh}};
}

InitResult init_rnd_em(const CountDataset& data, Index k, int trials, std::uint64_t seed,
                       double prob_floor) {
  check_k(data, k);
  check_trials(trials);
  std::optional<InitResult> best;
  for (int t = 0; t < trials; ++t) {
    MixtureModel model = random_model(k, data.dim(), derive_seed(seed, static_cast<std::uint64_t>(t)), prob_floor);
    const double llh = mixture_log_likelihood(data, model);
    keep_best(best, std::move(model), llh);
  }
  return std::move(*best);
}

InitResult init_sm_em(const CountDataset& data, Index k, int trials, int short_run_iterations,
                      std::uint64_t seed, double prob_floor) {
  check_k(data, k);
  check_trials(trials);
  if (short_run_iterations < 0) throw std::invalid_argument("short_run_iterations must be >= 0");
  std::optional<InitResult> best;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    MixtureModel model = random_model(k, data.dim(), trial_seed, prob_floor);
    double llh = 0.0;
    if (short_run_iterations == 0) {
      llh = mixture_log_likelihood(data, model);
    } else {
      EmConfig config;
      config.max_iterations = short_run_iterations;
      config.prob_floor = prob_floor;
      config.seed = trial_seed;
      FitResult fit = em_fit(data, model, config);
      model = std::move(fit.model);
      llh = fit.log_likelihood;
    }
    keep_best(best, std::move(model), llh);
  }
  return std::move(*best);
}

InitResult init_cem(const CountDataset& data, Index k, int trials, int short_run_iterations,
                    std::uint64_t seed, double prob_floor) {
  check_k(data, k);
  check_trials(trials);
  if (short_run_iterations < 0) throw std::invalid_argument("short_run_iterations must be >= 0");
  std::optional<InitResult> best;
  for (int t = 0; t < trials; ++t) {
    const std::uint64_t trial_seed = derive_seed(seed, static_cast<std::uint64_t>(t));
    Rng rng(derive_seed(trial_seed, 1));
    MixtureModel model = run_modified_em(data, random_model(k, data.dim(), trial_seed, prob_floor),
                                         short_run_iterations, prob_floor, rng,
                                         [](ResponsibilityMatrix& r) { harden(r); });
    const double llh = mixture_log_likelihood(data, model);
    keep_best(best, std::move(model), llh);
  }
  return std::move(*best);
}

InitResult init_sem(const CountDataset& data, Index k, int max_iterations, std::uint64_t seed,
                    double prob_floor) {
  check_k(data, k);
  if (max_iterations < 1) throw std::invalid_argument("SEM needs at least one iteration");
  Rng rng(derive_seed(seed, 1));
  MixtureModel model = random_model(k, data.dim(), seed, prob_floor);
  std::optional<InitResult> best;
  std::vector<double> trace;
  for (int it = 0; it < max_iterations; ++it) {
    model = run_modified_em(data, std::move(model), 1, prob_floor, rng,
                            [&rng](ResponsibilityMatrix& r) { sample_assignments(r, rng); });
    const double llh = mixture_log_likelihood(data, model);
    trace.push_back(llh);
    if (!best || llh > best->log_likelihood) best.emplace(InitResult{model, llh, {}});
  }
  best->trace = std::move(trace);
  return std::move(*best);
}

InitResult initialize(const CountDataset& data, Index k, const InitConfig& config) {
  config.validate();
  switch (config.strategy) {
    case InitStrategy::random:
      return init_random(data, k, config.seed, config.prob_floor);
    case InitStrategy::rnd_em:
      return init_rnd_em(data, k, config.trials, config.seed, config.prob_floor);
    case InitStrategy::sm_em:
      return init_sm_em(data, k, config.trials, config.short_run_iterations, config.seed, config.prob_floor);
    case InitStrategy::cem:
      return init_cem(data, k, config.trials, config.short_run_iterations, config.seed, config.prob_floor);
    case InitStrategy::sem:
      return init_sem(data, k, config.short_run_iterations, config.seed, config.prob_floor);
  }
  throw std::invalid_argument("unknown initialization strategy");
}

void harden(ResponsibilityMatrix& resp) {
  const std::vector<int> labels = hard_assignments(resp);
  resp.setZero();
  for (Index i = 0; i < resp.rows(); ++i) resp(i, labels[static_cast<std::size_t>(i)]) = 1.0;
}

void sample_assignments(ResponsibilityMatrix& resp, Rng& rng) {
  for (Index i = 0; i < resp.rows(); ++i) {
    const Index pick = sample_categorical(resp.row(i), rng);
    resp.row(i).setZero();
    resp(i, pick) = 1.0;
  }
}

}  // namespace mmclust
