#pragma once
#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>
#include <vector>

#include "pacbma/bound.hpp"
#include "pacbma/core.hpp"
#include "pacbma/datagen.hpp"
#include "pacbma/hdr.hpp"
#include "pacbma/models.hpp"
#include "pacbma/sbs.hpp"

namespace pacbma {

enum class Method { RBM, SBS, HDR, BASELINE };

std::string to_string(Method m);
Method parse_method(const std::string& s);

/// Mean squared deviation between the mixture prediction and `truth`
/// (the noiseless f, or held-out responses for real data).
double mspe(const MixtureDistribution& xi, const CandidatePool& pool, const Matrix& test_features,
            std::span<const double> truth);

/// k-fold cross-validated MSE for every candidate (linear members are refit
/// on the training folds with their own subset and lambda). Returns the
/// point mass on the winner; ties go to the smaller class-major index.
MixtureDistribution baseline_select_single(const CandidatePool& pool, const LabeledDataset& S,
                                           std::size_t folds, std::uint64_t seed);
std::vector<double> cross_validated_mse(const CandidatePool& pool, const LabeledDataset& S,
                                        std::size_t folds, std::uint64_t seed);

struct RepRecord {
  double mspe = 0.0;
  double volatility = 0.0;
  double bound_total = 0.0;
  double kl_total = 0.0;
  /// Model probabilities of the fitted posterior (class-major).
  std::vector<double> weights;
};

struct MetricSummary {
  double mean = 0.0;
  double se = 0.0;
};

MetricSummary summarize(const std::vector<double>& values);

struct EvalReport {
  Method method = Method::RBM;
  std::size_t reps = 0;
  std::vector<RepRecord> per_rep;
  MetricSummary mspe;
  MetricSummary volatility;
  /// Bound of the first repetition's posterior.
  BoundReport bound;
  /// MSPE is measured against held-out responses rather than a known f.
  bool predictive = false;

  void finalize();
};

struct ExperimentSpec {
  /// Training-data generator (synthetic runs).
  SyntheticSpec train;
  /// Fixed dataset for real-data runs; test rows are held out per repetition.
  std::optional<LabeledDataset> data;
  std::size_t test_size = 1000;
  CandidateConfig candidates;
  BoundConfig bound;
  SbsConfig sbs;
  std::size_t baseline_folds = 5;
  /// Historical task generators for HDR.
  std::vector<SyntheticSpec> history;
  /// Replicates drawn from each history spec.
  std::size_t history_replicates = 1;
  HdrConfig hdr;
  /// Overrides the per-repetition test-set seed material.
  std::optional<std::uint64_t> test_seed;
};

/// Runs `reps` seeded repetitions. Each repetition draws fresh training data
/// (and history), fits every method and evaluates it on a fresh test set.
/// Repetitions run in parallel; results are stored by repetition index.
std::map<Method, EvalReport> run_comparison(const ExperimentSpec& spec,
                                            const std::vector<Method>& methods, std::size_t reps,
                                            std::uint64_t seed);

struct FittedMethod {
  MixtureDistribution posterior;
  CandidatePool pool;
  BoundReport report;
};

/// Fits one method on one repetition's data (exposed for the CLI).
FittedMethod fit_method(Method method, const ExperimentSpec& spec, const LabeledDataset& train,
                        std::uint64_t seed);

/// Historical datasets for one repetition.
std::vector<LabeledDataset> draw_history(const ExperimentSpec& spec, std::uint64_t seed);

// CSV renderers.
std::string per_rep_csv(const std::map<Method, EvalReport>& reports);
std::string summary_csv(const std::map<Method, EvalReport>& reports);

} // namespace pacbma
