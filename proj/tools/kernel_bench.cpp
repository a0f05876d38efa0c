// Times the serial reference kernels against the OpenMP versions on a large
// prediction table and checks that both agree bitwise.
#include <chrono>
#include <cstdio>
#include <cstdlib>
#include <functional>

#include "pacbma/datagen.hpp"
#include "pacbma/kernels.hpp"
#include "pacbma/models.hpp"

using namespace pacbma;

namespace {

double best_of(int runs, const std::function<void()>& f) {
  double best = 1e300;
  for (int r = 0; r < runs; ++r) {
    const auto t0 = std::chrono::steady_clock::now();
    f();
    const auto t1 = std::chrono::steady_clock::now();
    best = std::min(best, std::chrono::duration<double, std::milli>(t1 - t0).count());
  }
  return best;
}

} // namespace

int main(int argc, char** argv) {
  const std::size_t points = argc > 1 ? std::strtoul(argv[1], nullptr, 10) : 20000;
  const int runs = 5;

  SyntheticSpec spec = linear_model_spec(2, 0.5, 1.0, 11);
  const auto train = generate(spec).data;
  CandidateConfig cc;
  cc.mode = PoolMode::GridClasses;
  cc.max_subset_size = 20;
  const CandidatePool pool = generate_candidates(train, cc).pool;
  spec.n = points;
  spec.seed = 12;
  const auto test = generate(spec).data;
  const auto probs = std::vector<double>(pool.num_models(), 1.0 / static_cast<double>(pool.num_models()));

  std::printf("threads=%d models=%zu points=%zu\n", kernels::max_threads(), pool.num_models(), points);
  std::printf("%-20s %12s %12s %8s %s\n", "kernel", "serial_ms", "omp_ms", "speedup", "identical");

  kernels::PredictionTable ts, to;
  const double a = best_of(runs, [&] { ts = kernels::serial::predict_all(pool, test.X); });
  const double b = best_of(runs, [&] { to = kernels::omp::predict_all(pool, test.X); });
  std::printf("%-20s %12.3f %12.3f %8.2f %s\n", "predict_all", a, b, a / b, ts.values == to.values ? "yes" : "NO");

  std::vector<double> ls, lo;
  const double c = best_of(runs, [&] { ls = kernels::serial::mean_losses(ts, test.Y, 10.0); });
  const double d = best_of(runs, [&] { lo = kernels::omp::mean_losses(ts, test.Y, 10.0); });
  std::printf("%-20s %12.3f %12.3f %8.2f %s\n", "mean_losses", c, d, c / d, ls == lo ? "yes" : "NO");

  std::vector<double> vs, vo;
  const double e = best_of(runs, [&] { vs = kernels::serial::pointwise_variance(ts, probs); });
  const double f = best_of(runs, [&] { vo = kernels::omp::pointwise_variance(ts, probs); });
  std::printf("%-20s %12.3f %12.3f %8.2f %s\n", "pointwise_variance", e, f, e / f, vs == vo ? "yes" : "NO");

  std::vector<double> ms, mo;
  const double g = best_of(runs, [&] { ms = kernels::serial::mixture_mean(ts, probs); });
  const double h = best_of(runs, [&] { mo = kernels::omp::mixture_mean(ts, probs); });
  std::printf("%-20s %12.3f %12.3f %8.2f %s\n", "mixture_mean", g, h, g / h, ms == mo ? "yes" : "NO");

  const bool ok = ts.values == to.values && ls == lo && vs == vo && ms == mo;
  return ok ? 0 : 1;
}
