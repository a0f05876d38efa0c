#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "pacbma/core.hpp"

// Data-parallel inner loops. Every kernel has a serial reference and an
// OpenMP version; the OpenMP versions write each output slot from exactly one
// iteration and reduce in index order, so both produce bitwise-identical
// results. The library calls the omp:: versions.
namespace pacbma::kernels {

/// Outputs of every pool member at every point, model-major:
/// values[(m * points + i) * outputs + o].
struct PredictionTable {
  std::size_t models = 0;
  std::size_t points = 0;
  std::size_t outputs = 0;
  std::vector<double> values;

  const double* at(std::size_t m, std::size_t i) const {
    return values.data() + (m * points + i) * outputs;
  }
};

namespace serial {
PredictionTable predict_all(const CandidatePool& pool, const Matrix& X);
/// Mean clipped loss of each model over the rows of Y.
std::vector<double> mean_losses(const PredictionTable& table, const Matrix& Y, double clip_scale);
/// Mixture variance of the prediction at each point (summed over outputs).
std::vector<double> pointwise_variance(const PredictionTable& table, std::span<const double> probs);
/// Mixture mean prediction at each point, point-major.
std::vector<double> mixture_mean(const PredictionTable& table, std::span<const double> probs);
/// Mean of `per_point` over each index batch.
std::vector<double> batch_means(std::span<const double> per_point,
                                const std::vector<std::vector<std::size_t>>& batches);
} // namespace serial

namespace omp {
PredictionTable predict_all(const CandidatePool& pool, const Matrix& X);
std::vector<double> mean_losses(const PredictionTable& table, const Matrix& Y, double clip_scale);
std::vector<double> pointwise_variance(const PredictionTable& table, std::span<const double> probs);
std::vector<double> mixture_mean(const PredictionTable& table, std::span<const double> probs);
std::vector<double> batch_means(std::span<const double> per_point,
                                const std::vector<std::vector<std::size_t>>& batches);
} // namespace omp

/// Pool members flattened in class-major order.
std::vector<const CandidateModel*> flatten(const CandidatePool& pool);

/// Worker count used by the omp kernels (OpenMP max threads, or 1).
int max_threads();
void set_threads(int n);

} // namespace pacbma::kernels
