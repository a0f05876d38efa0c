#pragma once
#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "pacbma/bound.hpp"
#include "pacbma/core.hpp"
#include "pacbma/models.hpp"

namespace pacbma {

struct TaskBundle {
  LabeledDataset data;
  double split_fraction = 0.5;
  CandidatePool pool;
  MixtureDistribution prior;
  BoundReport report;
};

/// xi_i = minimize_bound(uniform, S_i) on a pool generated from S_i.
/// Needs m >= 2 tasks with a common feature dimension and response arity.
std::vector<TaskBundle> fit_task_priors(const std::vector<LabeledDataset>& tasks,
                                        const CandidateConfig& candidates,
                                        const BoundConfig& bound, double split_fraction = 0.5);

struct LogWeight {
  double log_value = 0.0;
  /// exp(log_value); may underflow to 0.
  double value = 0.0;
};

/// prod_a q((y_a - f_a)/sigma) / sigma^{n_val}, accumulated in log space.
LogWeight likelihood_weight(std::span<const double> predictions, double sigma,
                            const LabeledDataset& validation, const ErrorDensity& q);
LogWeight likelihood_weight(const MixtureDistribution& xi, const CandidatePool& pool, double sigma,
                            const LabeledDataset& validation, const ErrorDensity& q);

/// Normalises log-scores with log-sum-exp. All -inf gives the uniform vector.
std::vector<double> normalize_log_weights(std::span<const double> log_scores);

struct WeightMatrix {
  /// Likelihood scores E_j^i averaged over repeats; raw(i, i) is unused (0).
  Matrix raw;
  /// Log scores averaged over repeats.
  Matrix log_raw;
  /// Row-normalised weights w_j^(i), averaged over repeats.
  Matrix per_task;
  /// Final task weights on the simplex.
  std::vector<double> final_weights;
};

struct HdrConfig {
  int repeats = 20;
  double split_fraction = 0.5;
  ErrorDensity density;
  /// Rank variables once on the pooled historical data and use that order for
  /// every pool (historical and new), so class k is the same variable subset
  /// in every task. Otherwise each pool ranks its own data.
  bool shared_ranking = false;
};

/// Marginal-correlation ranking of the stacked tasks.
std::vector<int> pooled_ranking(const std::vector<LabeledDataset>& tasks);

struct HdrResult {
  MixtureDistribution prior;
  /// Candidate settings the prior is aligned to; the new task's pool must be
  /// generated with these.
  CandidateConfig candidates;
  WeightMatrix weights;
  std::vector<TaskBundle> tasks;
};

/// Distribution over the hypothesis set given by sum_i weights[i] * xi_i.
/// Class weights and within-class distributions are combined jointly, so the
/// result is the exact mixture of the inputs.
MixtureDistribution combine_mixtures(std::span<const double> weights,
                                     const std::vector<MixtureDistribution>& mixtures);

/// Cross-validated likelihood weighting of the task priors. Split seeds are
/// derived from each task's content, so permuting the tasks permutes the
/// weights.
HdrResult hdr_learn_prior(const std::vector<LabeledDataset>& tasks, const CandidateConfig& candidates,
                          const BoundConfig& bound, const HdrConfig& cfg, std::uint64_t seed);

/// Same, starting from already fitted task bundles.
HdrResult hdr_learn_prior(std::vector<TaskBundle> tasks, const CandidateConfig& candidates,
                          const BoundConfig& bound, const HdrConfig& cfg, std::uint64_t seed);

struct HdrPosterior {
  CandidatePool pool;
  BoundFit fit;
};

HdrPosterior hdr_posterior(const MixtureDistribution& prior, const LabeledDataset& new_task,
                           const CandidateConfig& candidates, const BoundConfig& bound);

} // namespace pacbma
