#pragma once
#include <cstddef>
#include <cstdint>
#include <span>
#include <string>
#include <vector>

#include "pacbma/core.hpp"
#include "pacbma/rng.hpp"

namespace pacbma {

enum class SyntheticKind { Linear, Nonlinear1, Nonlinear2, ClassificationToy };

std::string to_string(SyntheticKind kind);
SyntheticKind parse_synthetic_kind(const std::string& s);

/// Generator settings. Linear: y = intercept + x'beta + sigma*eps;
/// Nonlinear1: y = intercept + sin(x1) + cos(x2) + sigma*eps;
/// Nonlinear2: y = intercept + sin(x1 + x2) + sigma*eps;
/// ClassificationToy: three unit-variance blobs centred on an equilateral
/// triangle of side 4 in (x1, x2), one-hot responses.
/// Features follow N_d(0, Sigma) with Sigma_ij = rho^|i-j|.
struct SyntheticSpec {
  SyntheticKind kind = SyntheticKind::Linear;
  std::size_t n = 50;
  std::size_t d = 8;
  std::vector<double> beta;
  double sigma = 1.0;
  double rho = 0.0;
  double intercept = 1.0;
  std::uint64_t seed = 0;

  void validate() const;
};

struct SyntheticData {
  LabeledDataset data;
  /// Noiseless regression function at each row (empty for classification).
  std::vector<double> f;
  /// Standard-normal noise draws, so y = f + sigma * eps.
  std::vector<double> noise;
};

/// Lower Cholesky factor of the AR(rho) covariance.
Eigen::MatrixXd ar_covariance(std::size_t d, double rho);
Eigen::MatrixXd ar_cholesky(std::size_t d, double rho);

/// Noiseless regression function of the spec at x.
double true_function(const SyntheticSpec& spec, std::span<const double> x);

/// Features drawn from the spec's distribution using `stream`.
Matrix sample_features(const SyntheticSpec& spec, std::size_t count, Stream& stream);

/// Labels arbitrary feature rows under the spec's noise model.
SyntheticData label_features(const SyntheticSpec& spec, const Matrix& X, Stream& stream);

/// Per-coordinate marginal mean and standard deviation of the features.
void feature_marginals(const SyntheticSpec& spec, std::vector<double>& mean, std::vector<double>& sd);

SyntheticData generate(const SyntheticSpec& spec);

/// m datasets; dataset t uses seed derive_seed(seed, {t}).
std::vector<SyntheticData> task_family(const SyntheticSpec& base, std::size_t m, std::uint64_t seed);

// Presets for the simulation studies.
SyntheticSpec linear_model_spec(int model, double rho, double sigma, std::uint64_t seed);
SyntheticSpec nonlinear_model_spec(int model, std::uint64_t seed);
SyntheticSpec transfer_target_spec(double sigma, std::uint64_t seed);
/// Historical tasks for the transfer study: the linear models, padded or
/// truncated to the target's 10 features, with (rho, sigma) = (0, 1).
std::vector<SyntheticSpec> transfer_history_specs(std::uint64_t seed);
/// Number of batches used by the sequential design for the linear models.
inline constexpr int kLinearModelSteps = 5;

} // namespace pacbma
