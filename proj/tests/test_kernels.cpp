#include <doctest.h>

#include "helpers.hpp"
#include "pacbma/datagen.hpp"
#include "pacbma/kernels.hpp"
#include "pacbma/models.hpp"

using namespace pacbma;

namespace {

struct Fixture {
  CandidatePool pool;
  LabeledDataset test;
  std::vector<double> probs;

  Fixture() {
    const auto train = generate(linear_model_spec(1, 0.5, 1.0, 3)).data;
    CandidateConfig cc;
    cc.mode = PoolMode::GridClasses;
    cc.max_subset_size = 6;
    pool = generate_candidates(train, cc).pool;
    SyntheticSpec spec = linear_model_spec(1, 0.5, 1.0, 4);
    spec.n = 777;
    test = generate(spec).data;
    Stream s(8);
    probs = testing::random_simplex(s, pool.num_models());
  }
};

} // namespace

TEST_CASE("omp kernels agree bitwise with the serial reference") {
  Fixture f;
  for (int threads : {1, 3, 8}) {
    kernels::set_threads(threads);
    const auto ts = kernels::serial::predict_all(f.pool, f.test.X);
    const auto to = kernels::omp::predict_all(f.pool, f.test.X);
    CHECK(ts.values == to.values);
    CHECK(kernels::serial::mean_losses(ts, f.test.Y, 7.0) == kernels::omp::mean_losses(to, f.test.Y, 7.0));
    CHECK(kernels::serial::pointwise_variance(ts, f.probs) == kernels::omp::pointwise_variance(to, f.probs));
    CHECK(kernels::serial::mixture_mean(ts, f.probs) == kernels::omp::mixture_mean(to, f.probs));
    std::vector<std::vector<std::size_t>> batches{{0, 1, 2}, {5, 700}, {776}};
    const auto v = kernels::serial::pointwise_variance(ts, f.probs);
    CHECK(kernels::serial::batch_means(v, batches) == kernels::omp::batch_means(v, batches));
  }
  kernels::set_threads(kernels::max_threads());
}

TEST_CASE("predict_all matches per-model evaluation") {
  Fixture f;
  const auto t = kernels::omp::predict_all(f.pool, f.test.X);
  const auto flat = kernels::flatten(f.pool);
  REQUIRE(t.models == flat.size());
  for (std::size_t m = 0; m < flat.size(); m += 7) {
    for (std::size_t i = 0; i < f.test.size(); i += 50) {
      double out = 0.0;
      evaluate(flat[m]->predictor, f.test.x(i), std::span<double>(&out, 1));
      CHECK(*t.at(m, i) == out);
    }
  }
}

TEST_CASE("pointwise variance against a two-pass oracle") {
  Fixture f;
  const auto t = kernels::omp::predict_all(f.pool, f.test.X);
  const auto v = kernels::omp::pointwise_variance(t, f.probs);
  for (std::size_t i = 0; i < f.test.size(); i += 97) {
    double mean = 0.0;
    for (std::size_t m = 0; m < t.models; ++m) mean += f.probs[m] * *t.at(m, i);
    double var = 0.0;
    for (std::size_t m = 0; m < t.models; ++m) var += f.probs[m] * (*t.at(m, i) - mean) * (*t.at(m, i) - mean);
    CHECK(v[i] == doctest::Approx(var).epsilon(1e-9));
    CHECK(v[i] >= 0.0);
  }
}
