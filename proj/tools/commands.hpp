#pragma once
#include <cstddef>
#include <cstdint>
#include <functional>
#include <string>
#include <vector>

namespace pacbma::cli {

enum ExitCode : int {
  kOk = 0,
  kFailure = 1,
  kConfigError = 2,
  kIoError = 3,
  kNumericError = 4,
  kSchemaError = 5,
};

struct GlobalOptions {
  std::uint64_t seed = 0;
  int threads = 0;
  std::string out = ".";
};

struct FitInputs {
  std::string method;
  std::string config;
  std::string data;
  std::vector<std::string> tasks;
};

struct EvalInputs {
  std::string artifact;
  std::string test;
  std::string config;
};

/// Runs `body` and maps exceptions to exit codes, printing the diagnostic
/// to stderr.
int guarded(const std::function<void()>& body);

void cmd_simulate(const GlobalOptions& g, const std::string& config_path);
void cmd_fit(const GlobalOptions& g, const FitInputs& in);
void cmd_eval(const GlobalOptions& g, const EvalInputs& in);
void cmd_reproduce(const GlobalOptions& g, const std::string& table, std::size_t reps);

} // namespace pacbma::cli
