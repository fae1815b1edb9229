#include <doctest.h>

#include <cmath>

#include "mmclust/modelgen.hpp"
#include "mmclust/synth.hpp"
#include "test_support.hpp"

using namespace mmclust;

namespace {

CountDataset synthetic(std::uint64_t seed, int k = 3, int d = 10, int n = 400) {
  SynthSpec spec;
  spec.k = k;
  spec.d = d;
  spec.n = n;
  spec.seed = seed;
  return generate(spec).data;
}

InitConfig quick_init(std::uint64_t seed) {
  InitConfig init = InitConfig::defaults(InitStrategy::sm_em, seed);
  init.trials = 2;
  init.short_run_iterations = 10;
  return init;
}

Eigen::VectorXd barycenter(const MixtureModel& m) { return m.components().transpose() * m.weights(); }

void check_entries(const CandidateModelSet& set, int k_max) {
  REQUIRE(set.entries.size() == static_cast<std::size_t>(k_max));
  for (const auto& [k, fit] : set.entries) {
    CHECK(fit.model.num_components() == k);
    CHECK((fit.model.weights().array() > 0).all());
    CHECK(std::abs(fit.model.weights().sum() - 1.0) < 1e-10);
    CHECK(std::isfinite(fit.log_likelihood));
  }
}

}  // namespace

TEST_CASE("skld hand value and properties") {
  const Eigen::Vector2d a(0.5, 0.5), b(0.25, 0.75);
  CHECK(kl_divergence(a, b) == doctest::Approx(0.1438).epsilon(1e-3));
  CHECK(kl_divergence(b, a) == doctest::Approx(0.1308).epsilon(1e-3));
  CHECK(std::abs(skld(a, b) - 0.1373) < 1e-4);
  CHECK_THROWS_AS(skld(a, Eigen::Vector3d(0.2, 0.3, 0.5)), DimensionError);

  Rng rng(1);
  for (int i = 0; i < 1000; ++i) {
    const Index d = 2 + i % 9;
    const Eigen::VectorXd p = fixture::random_simplex(d, rng, 0.3);
    const Eigen::VectorXd q = fixture::random_simplex(d, rng, 0.3);
    CHECK(skld(p, q) == skld(q, p));
    CHECK(skld(p, q) > 0);
    CHECK(skld(p, p) == 0);
  }
}

TEST_CASE("merge hand values") {
  const WeightedComponent a{0.3, Eigen::Vector2d(0.2, 0.8)}, b{0.2, Eigen::Vector2d(0.7, 0.3)};
  const WeightedComponent both[] = {a, b};
  const WeightedComponent merged = merge_components(both);
  CHECK(merged.weight == doctest::Approx(0.5));
  CHECK(merged.probs(0) == doctest::Approx(0.4));
  CHECK(merged.probs(1) == doctest::Approx(0.6));

  const WeightedComponent single = merge_components(std::span(&a, 1));
  CHECK(single.weight == a.weight);
  CHECK((single.probs - a.probs).cwiseAbs().maxCoeff() < 1e-15);

  const WeightedComponent twins[] = {{0.1, a.probs}, {0.4, a.probs}};
  const WeightedComponent same = merge_components(twins);
  CHECK(same.weight == doctest::Approx(0.5));
  CHECK((same.probs - a.probs).cwiseAbs().maxCoeff() < 1e-15);

  const WeightedComponent zero[] = {{0.0, a.probs}, {0.0, b.probs}};
  CHECK_THROWS(merge_components(zero));
  const WeightedComponent heavy[] = {{0.7, a.probs}, {0.6, b.probs}};
  CHECK_THROWS(merge_components(heavy));
  CHECK_THROWS(merge_components(std::span<const WeightedComponent>()));
}

TEST_CASE("complete linkage") {
  Eigen::MatrixXd dis = Eigen::MatrixXd::Zero(3, 3);
  dis(0, 2) = dis(2, 0) = 0.2;
  dis(1, 2) = dis(2, 1) = 0.5;
  dis(0, 1) = dis(1, 0) = 0.1;
  const std::vector<int> a{0, 1}, b{2};
  CHECK(complete_linkage(dis, a, b) == 0.5);
  CHECK(complete_linkage(dis, b, a) == 0.5);
  CHECK(complete_linkage(dis, std::vector<int>{0}, std::vector<int>{2}) == 0.2);
  CHECK_THROWS(complete_linkage(dis, a, std::vector<int>{1}));
  CHECK_THROWS(complete_linkage(dis, a, std::vector<int>{5}));
}

TEST_CASE("generation method names") {
  for (auto m : {GenerationMethod::mul_em, GenerationMethod::int_em, GenerationMethod::em_hac}) {
    CHECK(parse_generation_method(to_string(m)) == m);
  }
  CHECK_THROWS(parse_generation_method("bisect"));
}

TEST_CASE("Mul-EM") {
  const CountDataset data = synthetic(1);
  const CandidateModelSet one = mul_em(data, 1, quick_init(1), EmConfig{});
  REQUIRE(one.entries.size() == 1);
  const Eigen::VectorXd freq = data.term_totals() / data.term_totals().sum();
  CHECK((one.at(1).model.component(0).transpose() - freq).cwiseAbs().maxCoeff() < 1e-9);

  const CandidateModelSet set = mul_em(data, 6, quick_init(1), EmConfig{});
  check_entries(set, 6);
  CHECK(set.failures.empty());
  double per_k = 0;
  for (const auto& [k, fit] : set.entries) per_k += fit.elapsed;
  CHECK(per_k <= set.total_elapsed + 1e-9);
  CHECK(per_k >= 0.5 * set.total_elapsed);
}

TEST_CASE("Int-EM") {
  const MixtureModel model(Eigen::Vector3d(0.6, 0.3, 0.1), MixtureModel::ComponentMatrix::Constant(3, 2, 0.5));
  const MixtureModel reduced = annihilate_lightest(model);
  CHECK(reduced.num_components() == 2);
  CHECK(reduced.weight(0) == doctest::Approx(2.0 / 3));
  CHECK(reduced.weight(1) == doctest::Approx(1.0 / 3));
  const MixtureModel tied(Eigen::Vector3d(0.4, 0.3, 0.3), MixtureModel::ComponentMatrix::Constant(3, 2, 0.5));
  CHECK(annihilate_lightest(tied).weight(1) == doctest::Approx(0.3 / 0.7));

  const CountDataset data = synthetic(2);
  const InitConfig init = quick_init(2);
  const CandidateModelSet set = int_em(data, 7, init, EmConfig{});
  check_entries(set, 7);
  const FitResult plain = em_fit(data, initialize(data, 7, init).model, EmConfig{});
  CHECK(set.at(7).log_likelihood == doctest::Approx(plain.log_likelihood).epsilon(1e-12));
  CHECK((set.at(7).model.components() - plain.model.components()).cwiseAbs().maxCoeff() < 1e-12);

  const CandidateModelSet single_int = int_em(data, 1, init, EmConfig{});
  const CandidateModelSet single_mul = mul_em(data, 1, init, EmConfig{});
  CHECK(single_int.at(1).log_likelihood == doctest::Approx(single_mul.at(1).log_likelihood).epsilon(1e-9));
}

TEST_CASE("EM-HAC merges identical components first") {
  Rng rng(3);
  const CountDataset data = CountDataset::from_dense(fixture::random_counts(60, 4, 5, rng));
  MixtureModel::ComponentMatrix mu(3, 4);
  mu << 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.25, 0.7, 0.1, 0.1, 0.1;
  const FitResult fit = evaluate_model(data, MixtureModel(Eigen::Vector3d(0.3, 0.3, 0.4), mu), Coefficient::excluded);
  const CandidateModelSet set = hac_from_fit(data, fit, Coefficient::excluded, HacOptions{0.0});
  REQUIRE(set.merges.size() == 2);
  CHECK(set.merges[0].left == 0);
  CHECK(set.merges[0].right == 1);
  CHECK(set.merges[0].dissimilarity == 0.0);
  check_entries(set, 3);
}

TEST_CASE("EM-HAC conservation and monotone linkage") {
  for (std::uint64_t seed = 1; seed <= 6; ++seed) {
    const CountDataset data = synthetic(seed, 3, 8, 300);
    for (double support : {0.0, 3.0}) {
      const CandidateModelSet set = em_hac(data, 10, quick_init(seed), EmConfig{}, HacOptions{support});
      check_entries(set, 10);
      const Eigen::VectorXd center = barycenter(set.at(10).model);
      for (const auto& [k, fit] : set.entries) {
        CHECK((barycenter(fit.model) - center).cwiseAbs().maxCoeff() < 1e-10);
      }
      CHECK((set.at(1).model.component(0).transpose() - center).cwiseAbs().maxCoeff() < 1e-10);
      double last = 0;
      for (const MergeStep& step : set.merges) {
        CHECK(step.dissimilarity >= 0);
        if (step.absorbed) continue;
        CHECK(step.dissimilarity >= last);
        last = step.dissimilarity;
      }
      if (support == 0.0) {
        for (const MergeStep& step : set.merges) CHECK_FALSE(step.absorbed);
      }
    }
  }
}

TEST_CASE("EM-HAC smallest case and validation") {
  const CountDataset data = synthetic(9);
  const CandidateModelSet set = em_hac(data, 2, quick_init(9), EmConfig{});
  check_entries(set, 2);
  CHECK_THROWS(em_hac(data, 1, quick_init(9), EmConfig{}));
  CHECK_THROWS(mul_em(data, 0, quick_init(9), EmConfig{}));
}

TEST_CASE("EM-HAC absorbs low-support components") {
  Rng rng(4);
  const CountDataset data = CountDataset::from_dense(fixture::random_counts(100, 4, 5, rng));
  MixtureModel::ComponentMatrix mu(4, 4);
  mu << 0.7, 0.1, 0.1, 0.1, 0.1, 0.7, 0.1, 0.1, 0.1, 0.1, 0.1, 0.7, 0.01, 0.01, 0.01, 0.97;
  const Eigen::Vector4d weights(0.45, 0.45, 0.09, 0.01);
  const FitResult fit = evaluate_model(data, MixtureModel(weights, mu), Coefficient::excluded);
  const CandidateModelSet set = hac_from_fit(data, fit, Coefficient::excluded, HacOptions{3.0});
  REQUIRE(!set.merges.empty());
  CHECK(set.merges[0].absorbed);
  CHECK(set.merges[0].left == 2);
  CHECK(set.merges[0].right == 3);
  CHECK_FALSE(set.merges[1].absorbed);
}

TEST_CASE("rescore shifts every entry by the same constant") {
  const CountDataset data = synthetic(10);
  const CandidateModelSet set = em_hac(data, 6, quick_init(10), EmConfig{});
  const CandidateModelSet shifted = rescore(set, data, Coefficient::included);
  for (const auto& [k, fit] : set.entries) {
    CHECK(shifted.at(k).log_likelihood - fit.log_likelihood ==
          doctest::Approx(data.log_coefficient_sum()).epsilon(1e-9));
  }
}

TEST_CASE("generation is deterministic") {
  const CountDataset data = synthetic(11);
  for (auto m : {GenerationMethod::mul_em, GenerationMethod::int_em, GenerationMethod::em_hac}) {
    const CandidateModelSet a = generate_candidates(data, 5, m, quick_init(3), EmConfig{});
    const CandidateModelSet b = generate_candidates(data, 5, m, quick_init(3), EmConfig{});
    for (const auto& [k, fit] : a.entries) CHECK(fit.log_likelihood == b.at(k).log_likelihood);
  }
}
