#include "pacbma/kernels.hpp"

#include <cstdint>

#ifdef _OPENMP
#include <omp.h>
#endif

namespace pacbma::kernels {

std::vector<const CandidateModel*> flatten(const CandidatePool& pool) {
  std::vector<const CandidateModel*> out;
  out.reserve(pool.num_models());
  for (const auto& cls : pool.classes)
    for (const auto& m : cls) out.push_back(&m);
  return out;
}

int max_threads() {
#ifdef _OPENMP
  return omp_get_max_threads();
#else
  return 1;
#endif
}

void set_threads(int n) {
#ifdef _OPENMP
  if (n > 0) omp_set_num_threads(n);
#else
  (void)n;
#endif
}

namespace {

PredictionTable make_table(const CandidatePool& pool, const Matrix& X) {
  PredictionTable t;
  t.models = pool.num_models();
  t.points = static_cast<std::size_t>(X.rows());
  t.outputs = pool.output_dim;
  t.values.assign(t.models * t.points * t.outputs, 0.0);
  return t;
}

inline void predict_cell(const std::vector<const CandidateModel*>& models, const Matrix& X,
                         PredictionTable& t, std::size_t m, std::size_t i) {
  std::span<const double> x(X.data() + i * X.cols(), static_cast<std::size_t>(X.cols()));
  std::span<double> out(t.values.data() + (m * t.points + i) * t.outputs, t.outputs);
  evaluate(models[m]->predictor, x, out);
}

inline double model_mean_loss(const PredictionTable& t, const Matrix& Y, double c, std::size_t m) {
  double sum = 0.0;
  for (std::size_t i = 0; i < t.points; ++i) {
    std::span<const double> y(Y.data() + i * Y.cols(), t.outputs);
    sum += clipped_loss(y, {t.at(m, i), t.outputs}, c);
  }
  return sum / static_cast<double>(t.points);
}

inline double point_variance(const PredictionTable& t, std::span<const double> probs,
                             std::size_t i) {
  double total = 0.0;
  for (std::size_t o = 0; o < t.outputs; ++o) {
    double mean = 0.0;
    for (std::size_t m = 0; m < t.models; ++m) mean += probs[m] * t.at(m, i)[o];
    double var = 0.0;
    for (std::size_t m = 0; m < t.models; ++m) {
      const double dev = t.at(m, i)[o] - mean;
      var += probs[m] * dev * dev;
    }
    total += var;
  }
  return total;
}

inline void point_mean(const PredictionTable& t, std::span<const double> probs, std::size_t i,
                       double* out) {
  for (std::size_t o = 0; o < t.outputs; ++o) {
    double mean = 0.0;
    for (std::size_t m = 0; m < t.models; ++m) mean += probs[m] * t.at(m, i)[o];
    out[o] = mean;
  }
}

inline double batch_mean(std::span<const double> per_point, const std::vector<std::size_t>& b) {
  double s = 0.0;
  for (std::size_t idx : b) s += per_point[idx];
  return b.empty() ? 0.0 : s / static_cast<double>(b.size());
}

} // namespace

namespace serial {

PredictionTable predict_all(const CandidatePool& pool, const Matrix& X) {
  auto models = flatten(pool);
  PredictionTable t = make_table(pool, X);
  for (std::size_t m = 0; m < t.models; ++m)
    for (std::size_t i = 0; i < t.points; ++i) predict_cell(models, X, t, m, i);
  return t;
}

std::vector<double> mean_losses(const PredictionTable& t, const Matrix& Y, double c) {
  std::vector<double> out(t.models);
  for (std::size_t m = 0; m < t.models; ++m) out[m] = model_mean_loss(t, Y, c, m);
  return out;
}

std::vector<double> pointwise_variance(const PredictionTable& t, std::span<const double> probs) {
  std::vector<double> out(t.points);
  for (std::size_t i = 0; i < t.points; ++i) out[i] = point_variance(t, probs, i);
  return out;
}

std::vector<double> mixture_mean(const PredictionTable& t, std::span<const double> probs) {
  std::vector<double> out(t.points * t.outputs);
  for (std::size_t i = 0; i < t.points; ++i) point_mean(t, probs, i, out.data() + i * t.outputs);
  return out;
}

std::vector<double> batch_means(std::span<const double> per_point,
                                const std::vector<std::vector<std::size_t>>& batches) {
  std::vector<double> out(batches.size());
  for (std::size_t b = 0; b < batches.size(); ++b) out[b] = batch_mean(per_point, batches[b]);
  return out;
}

} // namespace serial

namespace omp {

PredictionTable predict_all(const CandidatePool& pool, const Matrix& X) {
  auto models = flatten(pool);
  PredictionTable t = make_table(pool, X);
  const std::int64_t cells = static_cast<std::int64_t>(t.models * t.points);
#pragma omp parallel for schedule(static)
  for (std::int64_t c = 0; c < cells; ++c) {
    const auto m = static_cast<std::size_t>(c) / t.points;
    const auto i = static_cast<std::size_t>(c) % t.points;
    predict_cell(models, X, t, m, i);
  }
  return t;
}

std::vector<double> mean_losses(const PredictionTable& t, const Matrix& Y, double c) {
  std::vector<double> out(t.models);
  const auto n = static_cast<std::int64_t>(t.models);
#pragma omp parallel for schedule(static)
  for (std::int64_t m = 0; m < n; ++m)
    out[static_cast<std::size_t>(m)] = model_mean_loss(t, Y, c, static_cast<std::size_t>(m));
  return out;
}

std::vector<double> pointwise_variance(const PredictionTable& t, std::span<const double> probs) {
  std::vector<double> out(t.points);
  const auto n = static_cast<std::int64_t>(t.points);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i)
    out[static_cast<std::size_t>(i)] = point_variance(t, probs, static_cast<std::size_t>(i));
  return out;
}

std::vector<double> mixture_mean(const PredictionTable& t, std::span<const double> probs) {
  std::vector<double> out(t.points * t.outputs);
  const auto n = static_cast<std::int64_t>(t.points);
#pragma omp parallel for schedule(static)
  for (std::int64_t i = 0; i < n; ++i) {
    const auto p = static_cast<std::size_t>(i);
    point_mean(t, probs, p, out.data() + p * t.outputs);
  }
  return out;
}

std::vector<double> batch_means(std::span<const double> per_point,
                                const std::vector<std::vector<std::size_t>>& batches) {
  std::vector<double> out(batches.size());
  const auto n = static_cast<std::int64_t>(batches.size());
#pragma omp parallel for schedule(static)
  for (std::int64_t b = 0; b < n; ++b)
    out[static_cast<std::size_t>(b)] = batch_mean(per_point, batches[static_cast<std::size_t>(b)]);
  return out;
}

} // namespace omp

} // namespace pacbma::kernels
