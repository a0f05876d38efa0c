#pragma once
#include <cstddef>
#include <cstdint>
#include <optional>
#include <vector>

#include "pacbma/bound.hpp"
#include "pacbma/core.hpp"
#include "pacbma/datagen.hpp"
#include "pacbma/models.hpp"

namespace pacbma {

/// Where labelled points come from: a synthetic generator that labels any
/// feature vector, or a finite labelled pool drawn without replacement.
class LabelSource {
public:
  static LabelSource generator(SyntheticSpec spec);
  /// With `replay`, points return to the pool after every step.
  static LabelSource pool(LabeledDataset data, bool replay = false);

  bool is_generator() const { return generator_; }
  bool replay() const { return replay_; }
  std::size_t dim() const;
  const SyntheticSpec& spec() const { return spec_; }
  const LabeledDataset& data() const { return data_; }

  /// Unconsumed pool rows in increasing order (empty in generator mode).
  std::vector<std::size_t> available() const;
  void consume(const std::vector<std::size_t>& rows);

private:
  bool generator_ = true;
  bool replay_ = false;
  SyntheticSpec spec_;
  LabeledDataset data_;
  std::vector<bool> consumed_;
};

struct Acquisition {
  LabeledDataset data;
  /// Pool rows (pool mode only).
  std::vector<std::size_t> rows;
};

/// Generator mode: Latin-hypercube levels mapped through the marginal normal
/// quantiles (then through the AR Cholesky factor), labelled by the
/// generator. Pool mode: greedy maximin from the point nearest the centroid,
/// refined by single-point exchanges while the minimum distance grows.
Acquisition space_filling_design(const LabelSource& source, std::size_t n, std::uint64_t seed);

struct BatchChoice {
  Acquisition batch;
  double volatility = 0.0;
  /// Threshold actually applied (the median candidate volatility in auto mode).
  double threshold = 0.0;
  std::size_t candidate_index = 0;
  std::vector<double> candidate_volatilities;
};

/// Scores `budget` random candidate batches by volatility under xi and
/// returns the first one above the threshold, else the most volatile one.
/// `gamma` empty selects the auto threshold (median candidate volatility).
BatchChoice select_batch(const MixtureDistribution& xi, const CandidatePool& pool,
                         const LabelSource& source, std::size_t batch_size,
                         std::optional<double> gamma, std::size_t budget, std::uint64_t seed);

struct SbsConfig {
  int steps = kLinearModelSteps;
  std::size_t batch_size = 10;
  /// Size of the initial space-filling set; 0 means batch_size.
  std::size_t initial_size = 0;
  /// gamma_2..gamma_b; empty means auto.
  std::vector<double> gamma;
  std::size_t candidate_budget = 200;
  BoundConfig bound;
  /// Refit the candidates on every distinct point acquired before a step.
  bool refit_pool = true;

  void validate() const;
  std::size_t resolved_initial_size() const { return initial_size ? initial_size : batch_size; }
};

struct SbsStep {
  LabeledDataset batch;
  BoundReport report;
  double threshold = 0.0;
  double volatility = 0.0;
};

struct SbsResult {
  MixtureDistribution posterior;
  CandidatePool pool;
  /// Pool the final posterior was optimised against (before the final refit).
  CandidatePool step_pool;
  std::vector<SbsStep> trace;
  std::vector<MixtureDistribution> posteriors;
};

SbsResult sbs_run(LabelSource source, const CandidateConfig& candidates, const SbsConfig& cfg,
                  std::uint64_t seed);

} // namespace pacbma
