#pragma once
#include <cstddef>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "pacbma/bench.hpp"

namespace pacbma {

/// Comparison settings for one simulation cell.
ExperimentSpec linear_experiment(int model, double rho, double sigma);
ExperimentSpec nonlinear_experiment(int model);
ExperimentSpec transfer_experiment(double sigma);

struct ReproduceCell {
  std::string label;
  ExperimentSpec spec;
  /// Numeric x-coordinate for plot data (sigma), if meaningful.
  double x = 0.0;
};

struct ReproducePlan {
  std::string table;
  std::vector<ReproduceCell> cells;
  std::vector<Method> methods;
};

/// t2, t3, t4 (linear models 1-3), t5 (nonlinear models), fig3 (transfer
/// study over sigma = 1..5). Throws std::invalid_argument on an unknown id.
ReproducePlan reproduce_plan(const std::string& table);

/// Output file name and content pairs.
using FileSet = std::vector<std::pair<std::string, std::string>>;

/// Runs every cell with `reps` repetitions and renders the table-shaped
/// summary (rows: metric x method, columns: cells), a long-form summary,
/// per-repetition rows, and for fig3 the plot-data files.
FileSet reproduce(const std::string& table, std::size_t reps, std::uint64_t seed);

} // namespace pacbma
