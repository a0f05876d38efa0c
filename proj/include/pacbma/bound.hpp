#pragma once
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "pacbma/core.hpp"

namespace pacbma {

/// The bound objective became NaN or infinite during optimisation.
class NonFiniteObjective : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

struct OptimizerConfig {
  double step_size = 0.1;
  int max_iterations = 10000;
  double tolerance = 1e-8;  // relative change of the objective
};

struct BoundConfig {
  double delta = 0.01;
  OptimizerConfig optimizer;
  LossSpec loss;

  void validate() const;
};

/// Decomposed right-hand side of the McAllester-style bound:
///   total = empirical_risk + sqrt((kl_total + ln(n/delta)) / (2(n-1))).
struct BoundReport {
  double empirical_risk = 0.0;
  double kl_total = 0.0;
  double penalty = 0.0;
  double total = 0.0;
  std::size_t n = 0;
};

double bound_penalty(double kl_total, std::size_t n, double delta);

BoundReport pac_bound(const MixtureDistribution& posterior, const MixtureDistribution& prior,
                      const CandidatePool& pool, const LabeledDataset& S, const BoundConfig& cfg);

/// Same bound when the per-model mean losses (class-major order) are already known.
BoundReport pac_bound_from_losses(const MixtureDistribution& posterior,
                                  const MixtureDistribution& prior,
                                  std::span<const double> model_losses, std::size_t n,
                                  double delta);

struct BoundFit {
  MixtureDistribution posterior;
  BoundReport report;
  int iterations = 0;
};

/// Gradient descent on softmax logits of w and each Q_k, started at the
/// prior. Entries where the prior is zero stay zero. The result never has a
/// larger bound than the prior itself.
BoundFit minimize_bound(const MixtureDistribution& prior, const CandidatePool& pool,
                        const LabeledDataset& S, const BoundConfig& cfg);

BoundFit minimize_bound_from_losses(const MixtureDistribution& prior,
                                    std::span<const double> model_losses, std::size_t n,
                                    const BoundConfig& cfg);

MixtureDistribution uniform_prior(const CandidatePool& pool);

/// Per-model mean clipped loss on S, class-major.
std::vector<double> model_losses(const CandidatePool& pool, const LabeledDataset& S,
                                 const LossSpec& loss);

} // namespace pacbma
