#include <doctest.h>

#include <cmath>
#include <numbers>

#include "helpers.hpp"
#include "pacbma/core.hpp"

using namespace pacbma;
using namespace testing;

TEST_CASE("kl_discrete examples") {
  const std::vector<double> half{0.5, 0.5};
  CHECK(kl_discrete(half, half) == 0.0);
  CHECK(kl_discrete(std::vector<double>{1.0, 0.0}, half) == doctest::Approx(std::log(2.0)).epsilon(1e-12));
  const double expected = 0.5 * std::log(0.5 / 0.25) + 0.5 * std::log(0.5 / 0.75);
  CHECK(kl_discrete(half, std::vector<double>{0.25, 0.75}) == doctest::Approx(expected).epsilon(1e-12));
  CHECK(expected == doctest::Approx(0.1438).epsilon(1e-3));
}

TEST_CASE("kl_discrete errors") {
  CHECK_THROWS_AS(kl_discrete(std::vector<double>{1.0}, std::vector<double>{0.5, 0.5}), std::invalid_argument);
  CHECK_THROWS_AS(kl_discrete(std::vector<double>{0.5, 0.5}, std::vector<double>{1.0, 0.0}), InfiniteDivergence);
  // zero posterior mass where the prior is zero is fine
  CHECK(kl_discrete(std::vector<double>{1.0, 0.0}, std::vector<double>{1.0, 0.0}) == 0.0);
}

TEST_CASE("kl_discrete is nonnegative and zero only at equality") {
  Stream s(42);
  for (int t = 0; t < 1000; ++t) {
    const std::size_t n = 2 + s.index(6);
    const auto q = random_simplex(s, n);
    const auto p = t % 2 ? random_simplex(s, n, true) : q;
    const double kl = kl_discrete(p, q);
    CHECK(kl >= 0.0);
    double maxdiff = 0.0;
    for (std::size_t j = 0; j < n; ++j) maxdiff = std::max(maxdiff, std::abs(p[j] - q[j]));
    CHECK((kl == 0.0) == (maxdiff < 1e-12));
  }
}

TEST_CASE("mixture_kl") {
  MixtureDistribution prior{{0.5, 0.5}, {{0.5, 0.5}, {0.5, 0.5}}};
  MixtureDistribution post{{1.0, 0.0}, {{1.0, 0.0}, {0.5, 0.5}}};
  CHECK(mixture_kl(prior, prior) == 0.0);
  CHECK(mixture_kl(post, prior) == doctest::Approx(2.0 * std::log(2.0)).epsilon(1e-12));
  CHECK(mixture_kl(post, prior) == doctest::Approx(1.3863).epsilon(1e-4));

  Stream s(7);
  for (int t = 0; t < 50; ++t) {
    const auto xi = random_mixture(s, {1, 1, 1, 1});
    const auto xi0 = random_mixture(s, {1, 1, 1, 1});
    CHECK(mixture_kl(xi, xi0) == kl_discrete(xi.class_weights, xi0.class_weights));
    const auto g = random_mixture(s, {2, 3, 1});
    CHECK(mixture_kl(g, g) == 0.0);
  }
}

TEST_CASE("predict examples") {
  const auto pool = constant_pool({{3.7}, {1.0}});
  const std::vector<double> x{0.0};
  CHECK(predict(MixtureDistribution{{1.0, 0.0}, {{1.0}, {1.0}}}, pool, x)[0] == doctest::Approx(3.7));

  const auto two = constant_pool({{0.0}, {2.0}});
  CHECK(predict(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, x)[0] == doctest::Approx(1.0));

  const auto three = constant_pool({{1.0}, {2.0}, {4.0}});
  CHECK(predict(MixtureDistribution{{0.2, 0.3, 0.5}, {{1.0}, {1.0}, {1.0}}}, three, x)[0] ==
        doctest::Approx(0.2 * 1 + 0.3 * 2 + 0.5 * 4).epsilon(1e-12));

  CHECK_THROWS_AS(predict(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, std::vector<double>{1.0, 2.0}),
                  std::invalid_argument);
}

TEST_CASE("predict is linear in class weights") {
  Stream s(3);
  const auto pool = constant_pool({{1.0, -2.0}, {0.5}, {4.0, 3.0, 7.0}});
  const std::vector<double> x{0.0};
  for (int t = 0; t < 100; ++t) {
    auto a = random_mixture(s, {2, 1, 3});
    auto b = a;
    b.class_weights = random_simplex(s, 3);
    const double alpha = s.uniform();
    MixtureDistribution c = a;
    for (std::size_t k = 0; k < 3; ++k) c.class_weights[k] = alpha * a.class_weights[k] + (1 - alpha) * b.class_weights[k];
    const double lhs = predict(c, pool, x)[0];
    const double rhs = alpha * predict(a, pool, x)[0] + (1 - alpha) * predict(b, pool, x)[0];
    CHECK(std::abs(lhs - rhs) < 1e-10);
  }
}

namespace {

CandidatePool probability_pool(const std::vector<std::vector<double>>& vectors) {
  CandidatePool pool;
  pool.input_dim = 1;
  pool.output_dim = vectors[0].size();
  for (std::size_t k = 0; k < vectors.size(); ++k) {
    CandidateModel m;
    m.class_id = static_cast<int>(k);
    m.predictor = ConstantPredictor{vectors[k]};
    pool.classes.push_back({m});
  }
  return pool;
}

} // namespace

TEST_CASE("predict_class returns the 0-based argmax with ties to the smallest index") {
  const std::vector<double> x{0.0};
  const MixtureDistribution one{{1.0}, {{1.0}}};
  CHECK(predict_class(one, probability_pool({{0.1, 0.7, 0.2}}), x) == 1);
  CHECK(predict_class(one, probability_pool({{0.5, 0.5}}), x) == 0);
  CHECK(predict_class(one, probability_pool({{1.0}}), x) == 0);
}

TEST_CASE("argmax is invariant under monotone rescaling") {
  Stream s(11);
  for (int t = 0; t < 200; ++t) {
    const auto p = random_simplex(s, 5);
    std::vector<double> q(p.size());
    const double a = 0.1 + 5.0 * s.uniform();
    for (std::size_t i = 0; i < p.size(); ++i) q[i] = std::exp(a * p[i]) + 3.0;
    CHECK(argmax_first(p) == argmax_first(q));
  }
}

TEST_CASE("mixture prediction of classifiers stays on the simplex") {
  const auto pool = probability_pool({{0.2, 0.8}, {0.6, 0.4}, {1.0, 0.0}});
  Stream s(5);
  for (int t = 0; t < 50; ++t) {
    const auto xi = random_mixture(s, {1, 1, 1});
    const auto p = predict(xi, pool, std::vector<double>{0.0});
    CHECK(p[0] + p[1] == doctest::Approx(1.0).epsilon(1e-12));
    CHECK(p[0] >= 0.0);
    CHECK(p[1] >= 0.0);
  }
}

TEST_CASE("empirical_risk examples") {
  // point mass on a constant model with per-sample clipped losses 0.2 and 0.4
  const double c = 1.0;
  const auto S = dataset({{0.0}, {0.0}}, {std::sqrt(0.2), std::sqrt(0.4)});
  const auto pool = constant_pool({{0.0}, {100.0}});
  LossSpec loss{c};
  CHECK(empirical_risk(MixtureDistribution{{1.0, 0.0}, {{1.0}, {1.0}}}, pool, S, loss) ==
        doctest::Approx(0.3).epsilon(1e-12));

  // exact model
  const auto exact = dataset({{1.0}, {2.0}, {3.0}}, {3.0, 5.0, 7.0});
  const auto line = linear_pool({{1.0, 2.0}});
  CHECK(empirical_risk(MixtureDistribution{{1.0}, {{1.0}}}, line, exact, LossSpec{}) == 0.0);

  // two-model uniform mixture with mean losses 0.1 and 0.5
  const auto S2 = dataset({{0.0}}, {0.0});
  const auto two = constant_pool({{std::sqrt(0.1)}, {std::sqrt(0.5)}});
  CHECK(empirical_risk(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, S2, LossSpec{1.0}) ==
        doctest::Approx(0.3).epsilon(1e-12));

  LabeledDataset empty;
  empty.X.resize(0, 1);
  empty.Y.resize(0, 1);
  CHECK_THROWS_AS(empirical_risk(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, empty, LossSpec{1.0}),
                  std::invalid_argument);
}

TEST_CASE("empirical_risk stays in [0,1]") {
  Stream s(9);
  for (int t = 0; t < 100; ++t) {
    std::vector<std::vector<double>> X;
    std::vector<double> y;
    for (int i = 0; i < 8; ++i) {
      X.push_back({s.normal()});
      y.push_back(10.0 * s.normal());
    }
    const auto S = dataset(X, y);
    const auto pool = linear_pool({{50.0 * s.normal(), 30.0 * s.normal()}, {s.normal(), s.normal()}});
    const auto xi = random_mixture(s, {1, 1});
    const double r = empirical_risk(xi, pool, S, LossSpec{});
    CHECK(r >= 0.0);
    CHECK(r <= 1.0);
  }
}

TEST_CASE("clip scale resolution") {
  const auto S = dataset({{0.0}, {0.0}, {0.0}}, {-1.0, 4.0, 2.0});
  CHECK(resolve_clip_scale(LossSpec{}, S) == 5.0);
  CHECK(resolve_clip_scale(LossSpec{2.5}, S) == 2.5);
  const auto flat = dataset({{0.0}, {1.0}}, {3.0, 3.0});
  CHECK(resolve_clip_scale(LossSpec{}, flat) == 1.0);
  CHECK(clipped_loss(std::vector<double>{0.0}, std::vector<double>{10.0}, 1.0) == 1.0);
}

TEST_CASE("volatility examples") {
  const auto two = constant_pool({{0.0}, {2.0}});
  Matrix B = Matrix::Zero(1, 1);
  CHECK(volatility(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, B) == doctest::Approx(1.0));
  CHECK(volatility(MixtureDistribution{{1.0, 0.0}, {{1.0}, {1.0}}}, two, B) == 0.0);

  const auto skew = constant_pool({{0.0}, {4.0}});
  CHECK(volatility(MixtureDistribution{{0.25, 0.75}, {{1.0}, {1.0}}}, skew, B) ==
        doctest::Approx(0.25 * 9 + 0.75 * 1).epsilon(1e-12));

  CHECK_THROWS_AS(volatility(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, two, Matrix(0, 1)),
                  std::invalid_argument);
}

TEST_CASE("volatility of classifiers sums the per-coordinate variances") {
  const auto pool = probability_pool({{1.0, 0.0}, {0.0, 1.0}});
  Matrix B = Matrix::Zero(1, 1);
  // each coordinate is Bernoulli(0.5): variance 0.25, two coordinates
  CHECK(volatility(MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}, pool, B) == doctest::Approx(0.5));
}

TEST_CASE("mixture and pool validation") {
  CHECK_THROWS_AS((MixtureDistribution{{0.6, 0.6}, {{1.0}, {1.0}}}).validate(), std::invalid_argument);
  CHECK_THROWS_AS((MixtureDistribution{{0.5, 0.5}, {{0.5, 0.4}, {1.0}}}).validate(), std::invalid_argument);
  const auto pool = constant_pool({{1.0}, {2.0, 3.0}});
  CHECK_THROWS_AS((MixtureDistribution{{0.5, 0.5}, {{1.0}, {1.0}}}).validate(pool), std::invalid_argument);
  CandidatePool bad = pool;
  bad.classes[1].clear();
  CHECK_THROWS_AS(bad.validate(), std::invalid_argument);

  LabeledDataset S;
  S.X = Matrix::Zero(2, 1);
  S.Y = Matrix::Zero(2, 2);
  S.Y(0, 0) = 1.0;
  S.Y(1, 0) = 0.5;
  CHECK_THROWS_AS(S.validate(), std::invalid_argument);
}
