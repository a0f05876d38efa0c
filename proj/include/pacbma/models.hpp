#pragma once
#include <cstddef>
#include <span>
#include <vector>

#include "pacbma/core.hpp"

namespace pacbma {

enum class PoolMode {
  /// One singleton class per nested subset (intercept-only, best-1, ..., best-s).
  RankedSubsets,
  /// One class per nested subset; members are ridge fits over a lambda grid.
  GridClasses,
};

struct CandidateConfig {
  PoolMode mode = PoolMode::RankedSubsets;
  /// 0 means min(d, 10).
  int max_subset_size = 0;
  /// Negative means 1e-3 * n.
  double ridge_lambda = -1.0;
  /// Multipliers of n used by GridClasses.
  std::vector<double> lambda_grid = {1e-4, 1e-2, 1.0};
  /// Fixed variable order for the nested subsets (0-based). Empty means rank
  /// by marginal correlation on the data being fit.
  std::vector<int> ranking;

  int resolved_subset_size(std::size_t d) const;
  double resolved_lambda(std::size_t n) const;
};

struct GeneratedPool {
  CandidatePool pool;
  /// Response had zero variance; the pool is the intercept-only model.
  bool constant_response = false;
};

/// Ridge fit with an unpenalized intercept on the given feature subset.
LinearPredictor fit_ridge(const LabeledDataset& S, std::span<const int> subset, double lambda);

/// Feature indices sorted by decreasing |corr(x_j, y)|; ties keep index order.
std::vector<int> rank_by_marginal_correlation(const LabeledDataset& S);

/// Regression pools built from S (see CandidateConfig). One-hot data gets the
/// classifier pool instead.
GeneratedPool generate_candidates(const LabeledDataset& S, const CandidateConfig& cfg);

/// Refits every linear member of `pool` on S with the same subset and lambda.
/// Other predictor kinds are copied unchanged.
CandidatePool refit_pool(const CandidatePool& pool, const LabeledDataset& S);

/// Pool for one-hot data: one class per feature subset ({x1}, {x2}, ..., all),
/// members are centroid classifiers over a temperature grid.
CandidatePool generate_classifier_candidates(const LabeledDataset& S,
                                             std::span<const double> temperatures = {});

/// Homoscedastic residual scale of the mixture predictor, floored at 1e-6.
double estimate_sigma(const MixtureDistribution& xi, const CandidatePool& pool,
                      const LabeledDataset& S);

enum class DensityKind { Normal, StudentT, DoubleExponential };

/// Standardized (mean 0, variance 1) error density.
class ErrorDensity {
public:
  /// nu is only used for StudentT and must exceed 2. Throws
  /// std::invalid_argument otherwise, or if the density fails to integrate
  /// to 1 within 1e-6.
  explicit ErrorDensity(DensityKind kind = DensityKind::Normal, double nu = 5.0);

  DensityKind kind() const { return kind_; }
  double nu() const { return nu_; }
  double log_density(double t) const;
  double density(double t) const;

private:
  DensityKind kind_;
  double nu_;
  double log_norm_ = 0.0;
  double t_scale_ = 1.0;
};

double density_at(const ErrorDensity& q, double t);

} // namespace pacbma
