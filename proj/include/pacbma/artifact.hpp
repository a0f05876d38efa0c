#pragma once
#include <cstdint>
#include <map>
#include <optional>
#include <stdexcept>
#include <string>
#include <vector>

#include <json.hpp>

#include "pacbma/bench.hpp"
#include "pacbma/bound.hpp"
#include "pacbma/core.hpp"
#include "pacbma/datagen.hpp"
#include "pacbma/hdr.hpp"
#include "pacbma/models.hpp"
#include "pacbma/sbs.hpp"

namespace pacbma {

inline constexpr int kSchemaVersion = 1;

/// Malformed or invalid run configuration.
class ConfigError : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// Artifact that cannot be parsed or has the wrong schema version.
class SchemaError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Resolved run configuration. Every default is filled in so the echo in an
/// artifact describes the run completely.
struct RunConfig {
  /// Training data generator; absent when the data comes from CSV.
  std::optional<SyntheticSpec> data;
  CandidateConfig candidates;
  BoundConfig bound;
  SbsConfig sbs;
  HdrConfig hdr;
  std::vector<SyntheticSpec> history;
  std::size_t history_replicates = 1;
  std::size_t reps = 100;
  std::size_t test_size = 1000;
  std::size_t baseline_folds = 5;
};

/// Parses the JSON config text. Errors name the line or the offending field.
RunConfig parse_config(const std::string& text);
RunConfig load_config(const std::string& path);
nlohmann::json config_to_json(const RunConfig& cfg);
ExperimentSpec to_experiment(const RunConfig& cfg);

nlohmann::json to_json(const SyntheticSpec& s);
nlohmann::json to_json(const CandidatePool& pool);
nlohmann::json to_json(const MixtureDistribution& xi);
nlohmann::json to_json(const BoundReport& r);
nlohmann::json to_json(const WeightMatrix& w);
nlohmann::json to_json(const EvalReport& r);

CandidatePool pool_from_json(const nlohmann::json& j);
MixtureDistribution mixture_from_json(const nlohmann::json& j);
BoundReport report_from_json(const nlohmann::json& j);

struct RunArtifact {
  int schema_version = kSchemaVersion;
  std::string command;
  std::string method;
  nlohmann::json config_echo = nlohmann::json::object();
  nlohmann::json seeds = nlohmann::json::object();
  /// Pool, prior, posterior, bound report, HDR weights, SBS trace, eval reports.
  nlohmann::json results = nlohmann::json::object();
};

std::string serialize(const RunArtifact& a);
/// Throws SchemaError on malformed text or a schema_version mismatch.
RunArtifact parse_artifact(const std::string& text);
RunArtifact load_artifact(const std::string& path);

} // namespace pacbma
