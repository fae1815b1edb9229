#include <doctest.h>

#include <cmath>
#include <set>

#include "mmclust/eval.hpp"
#include "mmclust/init.hpp"
#include "mmclust/synth.hpp"
#include "test_support.hpp"

using namespace mmclust;

namespace {

SynthSpec make_spec(int k, int d, int n, std::uint64_t seed, Separation sep = Separation::ws) {
  SynthSpec spec;
  spec.k = k;
  spec.d = d;
  spec.n = n;
  spec.seed = seed;
  spec.separation = sep;
  return spec;
}

std::size_t fingerprint(const CountDataset& data) {
  std::size_t h = 0;
  for (Index i = 0; i < data.size(); ++i) {
    const CountVector row = data.row(i);
    for (Index d = 0; d < row.size(); ++d) h = h * 1000003u + static_cast<std::size_t>(row(d));
  }
  return h;
}

}  // namespace

TEST_CASE("synthetic settings defaults and validation") {
  SynthSpec spec = make_spec(3, 10, 100, 0);
  CHECK(spec.alpha() == 0.1);
  CHECK(spec.orders() == std::pair{5, 15});
  spec.d = 7;
  CHECK(spec.orders() == std::pair{4, 10});
  spec.separation = Separation::nws;
  CHECK(spec.alpha() == 1.0);
  CHECK_THROWS(make_spec(0, 10, 100, 0).validate());
  CHECK_THROWS(make_spec(3, 1, 100, 0).validate());
  CHECK_THROWS(make_spec(5, 10, 4, 0).validate());
  CHECK(parse_separation("nws") == Separation::nws);
  CHECK_THROWS(parse_separation("maybe"));
}

TEST_CASE("generating models land in the requested regime") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const GeneratingModel ws = sample_generating_model(make_spec(3, 10, 100, seed));
    CHECK(ws.min_skld >= kDefaultSeparationThreshold);
    CHECK(classify_separation(ws.model) == Separation::ws);
    const GeneratingModel nws = sample_generating_model(make_spec(3, 10, 100, seed, Separation::nws));
    CHECK(nws.min_skld < kDefaultSeparationThreshold);
    for (int v : ws.orders) {
      CHECK(v >= 5);
      CHECK(v <= 15);
    }
  }
  const GeneratingModel single = sample_generating_model(make_spec(1, 5, 10, 3));
  CHECK(single.attempts == 1);
  CHECK(std::isinf(single.min_skld));
}

TEST_CASE("large alpha concentrates near uniform") {
  SynthSpec spec = make_spec(4, 10, 100, 1, Separation::nws);
  spec.dirichlet_alpha = 1e4;
  CHECK(sample_generating_model(spec).min_skld < 1e-2);
}

TEST_CASE("rejection budget exhaustion reports statistics") {
  SynthSpec spec = make_spec(4, 10, 100, 1, Separation::ws);
  spec.dirichlet_alpha = 1e4;
  try {
    sample_generating_model(spec);
    FAIL("expected a separation error");
  } catch (const SeparationError& e) {
    CHECK(e.attempts == kRejectionBudget);
    CHECK(e.best < kDefaultSeparationThreshold);
    CHECK(e.worst <= e.best);
  }
}

TEST_CASE("classification") {
  const Eigen::VectorXd mu = Eigen::VectorXd::Constant(4, 0.25);
  MixtureModel::ComponentMatrix twins(2, 4);
  twins.row(0) = mu.transpose();
  twins.row(1) = mu.transpose();
  CHECK(classify_separation(MixtureModel(Eigen::Vector2d(0.5, 0.5), twins), 1e-6) == Separation::nws);

  MixtureModel::ComponentMatrix hot(2, 4);
  hot << 0.97, 0.01, 0.01, 0.01, 0.01, 0.01, 0.01, 0.97;
  CHECK(classify_separation(MixtureModel(Eigen::Vector2d(0.5, 0.5), hot)) == Separation::ws);

  Rng rng(3);
  for (int i = 0; i < 100; ++i) {
    const MixtureModel m = fixture::random_model(3, 5, rng);
    bool was_nws = false;
    for (double t : {0.01, 0.1, 0.5, 1.0, 2.0, 5.0, 20.0}) {
      const bool nws = classify_separation(m, t) == Separation::nws;
      CHECK_FALSE((was_nws && !nws));
      was_nws = nws;
    }
  }
}

TEST_CASE("datasets follow their generating model") {
  const SynthDataset s = generate(make_spec(3, 10, 400, 5));
  CHECK(s.data.size() == 400);
  CHECK(s.data.dim() == 10);
  for (Index i = 0; i < s.data.size(); ++i) {
    const int z = s.data.labels()[static_cast<std::size_t>(i)];
    REQUIRE(z >= 0);
    REQUIRE(z < 3);
    CHECK(s.data.orders()(i) == s.truth.orders[static_cast<std::size_t>(z)]);
  }
}

TEST_CASE("label frequencies match the weights") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const int n = 2000;
    const SynthDataset s = generate(make_spec(4, 6, n, seed));
    Eigen::VectorXd freq = Eigen::VectorXd::Zero(4);
    for (int z : s.data.labels()) freq(z) += 1.0 / n;
    CHECK((freq - s.truth.model.weights()).cwiseAbs().maxCoeff() < 3.0 / std::sqrt(double(n)));
  }
}

TEST_CASE("per-cluster term frequencies converge to the parameters") {
  const SynthDataset s = generate(make_spec(2, 5, 20000, 9));
  Eigen::MatrixXd totals = Eigen::MatrixXd::Zero(2, 5);
  for (Index i = 0; i < s.data.size(); ++i) {
    totals.row(s.data.labels()[static_cast<std::size_t>(i)]) += s.data.row(i).cast<double>().transpose();
  }
  for (int k = 0; k < 2; ++k) {
    const Eigen::RowVectorXd freq = totals.row(k) / totals.row(k).sum();
    CHECK((freq - s.truth.model.component(k)).cwiseAbs().maxCoeff() < 0.01);
  }
}

TEST_CASE("generation is deterministic and seed-sensitive") {
  const SynthDataset a = generate(make_spec(3, 10, 200, 4));
  const SynthDataset b = generate(make_spec(3, 10, 200, 4));
  CHECK(fingerprint(a.data) == fingerprint(b.data));
  CHECK(a.data.labels() == b.data.labels());
  std::set<std::size_t> seen;
  for (std::uint64_t seed = 0; seed < 10; ++seed) seen.insert(fingerprint(generate(make_spec(3, 10, 200, seed)).data));
  CHECK(seen.size() >= 9);
}

TEST_CASE("EM at the true K recovers well-separated clusters") {
  double total = 0;
  for (std::uint64_t seed = 1; seed <= 10; ++seed) {
    const CountDataset data = generate(make_spec(3, 10, 1000, seed)).data;
    const InitResult init = initialize(data, 3, InitConfig::defaults(InitStrategy::sm_em, seed));
    const FitResult fit = em_fit(data, init.model, EmConfig{});
    total += adjusted_rand_index(hard_assignments(fit.responsibilities), data.labels());
  }
  MESSAGE("mean ARI " << total / 10);
  CHECK(total / 10 >= 0.9);
}
