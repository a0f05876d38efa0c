#include "pacbma/artifact.hpp"

#include <algorithm>
#include <fstream>
#include <set>
#include <sstream>
#include <system_error>

namespace pacbma {

using nlohmann::json;

namespace {

std::size_t line_of(const std::string& text, std::size_t byte) {
  byte = std::min(byte, text.size());
  return 1 + static_cast<std::size_t>(std::count(text.begin(), text.begin() + static_cast<std::ptrdiff_t>(byte), '\n'));
}

/// Reads fields of one config object, remembering which keys were used so
/// that typos are reported instead of silently ignored.
class Section {
public:
  Section(const json& j, std::string path) : j_(j), path_(std::move(path)) {
    if (!j_.is_object()) throw ConfigError("field '" + path_ + "': expected an object");
  }

  bool has(const std::string& key) const { return j_.contains(key); }

  template <class T>
  T get(const std::string& key, T fallback) {
    used_.insert(key);
    if (!j_.contains(key)) return fallback;
    return convert<T>(j_.at(key), key);
  }

  template <class T>
  T require(const std::string& key) {
    used_.insert(key);
    if (!j_.contains(key)) throw ConfigError("field '" + name(key) + "': missing");
    return convert<T>(j_.at(key), key);
  }

  const json& raw(const std::string& key) {
    used_.insert(key);
    return j_.at(key);
  }

  std::string name(const std::string& key) const { return path_.empty() ? key : path_ + "." + key; }

  void finish() const {
    for (const auto& [k, v] : j_.items())
      if (!used_.count(k)) throw ConfigError("field '" + name(k) + "': unknown key");
  }

private:
  template <class T>
  T convert(const json& v, const std::string& key) const {
    try {
      if constexpr (std::is_same_v<T, std::size_t> || std::is_same_v<T, std::uint64_t>) {
        if (!v.is_number_integer() || (v.is_number_integer() && v.get<std::int64_t>() < 0 && !v.is_number_unsigned()))
          throw ConfigError("field '" + name(key) + "': expected a non-negative integer");
      } else if constexpr (std::is_same_v<T, int>) {
        if (!v.is_number_integer()) throw ConfigError("field '" + name(key) + "': expected an integer");
      } else if constexpr (std::is_same_v<T, double>) {
        if (!v.is_number()) throw ConfigError("field '" + name(key) + "': expected a number");
      }
      return v.get<T>();
    } catch (const json::exception& e) {
      throw ConfigError("field '" + name(key) + "': " + e.what());
    }
  }

  const json& j_;
  std::string path_;
  std::set<std::string> used_;
};

SyntheticSpec parse_data_spec(const json& j, const std::string& path) {
  Section s(j, path);
  SyntheticSpec spec;
  if (s.has("preset")) {
    const auto preset = s.require<std::string>("preset");
    const auto seed = s.get<std::uint64_t>("seed", 0);
    if (preset == "linear") {
      const int model = s.require<int>("model");
      if (model < 1 || model > 3) throw ConfigError("field '" + s.name("model") + "': expected 1, 2 or 3");
      spec = linear_model_spec(model, s.get<double>("rho", 0.0), s.get<double>("sigma", 1.0), seed);
    } else if (preset == "nonlinear") {
      const int model = s.require<int>("model");
      if (model < 1 || model > 2) throw ConfigError("field '" + s.name("model") + "': expected 1 or 2");
      spec = nonlinear_model_spec(model, seed);
    } else if (preset == "transfer") {
      spec = transfer_target_spec(s.get<double>("sigma", 1.0), seed);
    } else {
      throw ConfigError("field '" + s.name("preset") + "': unknown preset '" + preset + "'");
    }
    if (s.has("n")) spec.n = s.get<std::size_t>("n", spec.n);
  } else {
    try {
      spec.kind = parse_synthetic_kind(s.get<std::string>("kind", "linear"));
    } catch (const std::invalid_argument& e) {
      throw ConfigError("field '" + s.name("kind") + "': " + e.what());
    }
    spec.n = s.get<std::size_t>("n", spec.n);
    spec.d = s.get<std::size_t>("d", spec.d);
    spec.beta = s.get<std::vector<double>>("beta", spec.beta);
    spec.sigma = s.get<double>("sigma", spec.sigma);
    spec.rho = s.get<double>("rho", spec.rho);
    spec.intercept = s.get<double>("intercept", spec.intercept);
    spec.seed = s.get<std::uint64_t>("seed", spec.seed);
  }
  s.finish();
  try {
    spec.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError("field '" + path + "': " + e.what());
  }
  return spec;
}

DensityKind parse_density(const std::string& s, const std::string& field) {
  if (s == "normal") return DensityKind::Normal;
  if (s == "student-t") return DensityKind::StudentT;
  if (s == "double-exponential") return DensityKind::DoubleExponential;
  throw ConfigError("field '" + field + "': unknown density '" + s + "'");
}

std::string density_name(DensityKind k) {
  switch (k) {
    case DensityKind::Normal: return "normal";
    case DensityKind::StudentT: return "student-t";
    case DensityKind::DoubleExponential: return "double-exponential";
  }
  return "normal";
}

json matrix_to_json(const Matrix& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < m.cols(); ++j) row.push_back(m(i, j));
    rows.push_back(std::move(row));
  }
  return rows;
}

json predictor_to_json(const Predictor& p) {
  return std::visit(
      [](const auto& q) -> json {
        using T = std::decay_t<decltype(q)>;
        if constexpr (std::is_same_v<T, LinearPredictor>)
          return {{"type", "linear"}, {"intercept", q.intercept}, {"coefficients", q.coefficients},
                  {"subset", q.subset}, {"lambda", q.ridge_lambda}};
        else if constexpr (std::is_same_v<T, CentroidPredictor>)
          return {{"type", "centroid"}, {"features", q.features}, {"centroids", q.centroids},
                  {"temperature", q.temperature}};
        else
          return {{"type", "constant"}, {"value", q.value}};
      },
      p);
}

Predictor predictor_from_json(const json& j) {
  const auto type = j.at("type").get<std::string>();
  if (type == "linear") {
    LinearPredictor p;
    p.intercept = j.at("intercept").get<double>();
    p.coefficients = j.at("coefficients").get<std::vector<double>>();
    p.subset = j.at("subset").get<std::vector<int>>();
    p.ridge_lambda = j.at("lambda").get<double>();
    return p;
  }
  if (type == "centroid") {
    CentroidPredictor p;
    p.features = j.at("features").get<std::vector<int>>();
    p.centroids = j.at("centroids").get<std::vector<std::vector<double>>>();
    p.temperature = j.at("temperature").get<double>();
    return p;
  }
  if (type == "constant") return ConstantPredictor{j.at("value").get<std::vector<double>>()};
  throw SchemaError("unknown predictor type '" + type + "'");
}

std::string pool_mode_name(PoolMode m) { return m == PoolMode::GridClasses ? "grid" : "ranked"; }

} // namespace

RunConfig parse_config(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw ConfigError("config line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  Section root(j, "");
  RunConfig cfg;
  if (root.has("data")) cfg.data = parse_data_spec(root.raw("data"), "data");

  if (root.has("history")) {
    const json& h = root.raw("history");
    if (!h.is_array()) throw ConfigError("field 'history': expected an array");
    for (std::size_t i = 0; i < h.size(); ++i) {
      const json& item = h[i];
      // {"preset": "transfer-history"} expands to the stock historical tasks.
      if (item.is_object() && item.value("preset", "") == "transfer-history") {
        Section s(item, "history[" + std::to_string(i) + "]");
        s.require<std::string>("preset");
        const auto seed = s.get<std::uint64_t>("seed", 0);
        s.finish();
        for (auto& spec : transfer_history_specs(seed)) cfg.history.push_back(spec);
      } else {
        cfg.history.push_back(parse_data_spec(item, "history[" + std::to_string(i) + "]"));
      }
    }
  }
  cfg.history_replicates = root.get<std::size_t>("history_replicates", cfg.history_replicates);
  if (cfg.history_replicates < 1) throw ConfigError("field 'history_replicates': must be >= 1");

  if (root.has("candidates")) {
    Section s(root.raw("candidates"), "candidates");
    const auto mode = s.get<std::string>("mode", "ranked");
    if (mode == "ranked") cfg.candidates.mode = PoolMode::RankedSubsets;
    else if (mode == "grid") cfg.candidates.mode = PoolMode::GridClasses;
    else throw ConfigError("field 'candidates.mode': expected 'ranked' or 'grid'");
    cfg.candidates.max_subset_size = s.get<int>("max_subset_size", cfg.candidates.max_subset_size);
    cfg.candidates.ridge_lambda = s.get<double>("ridge_lambda", cfg.candidates.ridge_lambda);
    cfg.candidates.lambda_grid = s.get<std::vector<double>>("lambda_grid", cfg.candidates.lambda_grid);
    s.finish();
    if (cfg.candidates.max_subset_size < 0)
      throw ConfigError("field 'candidates.max_subset_size': must be >= 0");
    if (cfg.candidates.lambda_grid.empty())
      throw ConfigError("field 'candidates.lambda_grid': must be nonempty");
  }

  if (root.has("bound")) {
    Section s(root.raw("bound"), "bound");
    cfg.bound.delta = s.get<double>("delta", cfg.bound.delta);
    cfg.bound.optimizer.step_size = s.get<double>("step_size", cfg.bound.optimizer.step_size);
    cfg.bound.optimizer.max_iterations = s.get<int>("max_iterations", cfg.bound.optimizer.max_iterations);
    cfg.bound.optimizer.tolerance = s.get<double>("tolerance", cfg.bound.optimizer.tolerance);
    cfg.bound.loss.clip_scale = s.get<double>("clip_scale", cfg.bound.loss.clip_scale);
    s.finish();
  }
  try {
    cfg.bound.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field 'bound': ") + e.what());
  }

  bool batch_given = false;
  if (root.has("sbs")) {
    Section s(root.raw("sbs"), "sbs");
    cfg.sbs.steps = s.get<int>("steps", cfg.sbs.steps);
    batch_given = s.has("batch_size");
    cfg.sbs.batch_size = s.get<std::size_t>("batch_size", cfg.sbs.batch_size);
    cfg.sbs.initial_size = s.get<std::size_t>("initial_size", cfg.sbs.initial_size);
    cfg.sbs.gamma = s.get<std::vector<double>>("gamma", cfg.sbs.gamma);
    cfg.sbs.candidate_budget = s.get<std::size_t>("candidate_budget", cfg.sbs.candidate_budget);
    cfg.sbs.refit_pool = s.get<bool>("refit_pool", cfg.sbs.refit_pool);
    s.finish();
  }
  // Each step uses n/b points unless the batch size is given explicitly.
  if (!batch_given && cfg.data && cfg.sbs.steps >= 1)
    cfg.sbs.batch_size = std::max<std::size_t>(1, cfg.data->n / static_cast<std::size_t>(cfg.sbs.steps));
  cfg.sbs.bound = cfg.bound;
  try {
    cfg.sbs.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(std::string("field 'sbs': ") + e.what());
  }

  if (root.has("hdr")) {
    Section s(root.raw("hdr"), "hdr");
    cfg.hdr.repeats = s.get<int>("repeats", cfg.hdr.repeats);
    cfg.hdr.split_fraction = s.get<double>("split_fraction", cfg.hdr.split_fraction);
    const auto kind = parse_density(s.get<std::string>("density", "normal"), "hdr.density");
    const double nu = s.get<double>("nu", 5.0);
    cfg.hdr.shared_ranking = s.get<bool>("shared_ranking", cfg.hdr.shared_ranking);
    s.finish();
    try {
      cfg.hdr.density = ErrorDensity(kind, nu);
    } catch (const std::invalid_argument& e) {
      throw ConfigError(std::string("field 'hdr': ") + e.what());
    }
    if (cfg.hdr.repeats < 1) throw ConfigError("field 'hdr.repeats': must be >= 1");
    if (!(cfg.hdr.split_fraction > 0.0 && cfg.hdr.split_fraction < 1.0))
      throw ConfigError("field 'hdr.split_fraction': must be in (0,1)");
  }

  if (root.has("eval")) {
    Section s(root.raw("eval"), "eval");
    cfg.reps = s.get<std::size_t>("reps", cfg.reps);
    cfg.test_size = s.get<std::size_t>("test_size", cfg.test_size);
    cfg.baseline_folds = s.get<std::size_t>("baseline_folds", cfg.baseline_folds);
    s.finish();
    if (cfg.reps < 1) throw ConfigError("field 'eval.reps': must be >= 1");
    if (cfg.test_size < 1) throw ConfigError("field 'eval.test_size': must be >= 1");
    if (cfg.baseline_folds < 2) throw ConfigError("field 'eval.baseline_folds': must be >= 2");
  }
  root.finish();
  return cfg;
}

RunConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_config(ss.str());
}

json to_json(const SyntheticSpec& s) {
  return {{"kind", to_string(s.kind)}, {"n", s.n},         {"d", s.d},
          {"beta", s.beta},            {"sigma", s.sigma}, {"rho", s.rho},
          {"intercept", s.intercept},  {"seed", s.seed}};
}

json config_to_json(const RunConfig& cfg) {
  json j;
  if (cfg.data) j["data"] = to_json(*cfg.data);
  json hist = json::array();
  for (const auto& h : cfg.history) hist.push_back(to_json(h));
  j["history"] = hist;
  j["history_replicates"] = cfg.history_replicates;
  j["candidates"] = {{"mode", pool_mode_name(cfg.candidates.mode)},
                     {"max_subset_size", cfg.candidates.max_subset_size},
                     {"ridge_lambda", cfg.candidates.ridge_lambda},
                     {"lambda_grid", cfg.candidates.lambda_grid}};
  j["bound"] = {{"delta", cfg.bound.delta},
                {"step_size", cfg.bound.optimizer.step_size},
                {"max_iterations", cfg.bound.optimizer.max_iterations},
                {"tolerance", cfg.bound.optimizer.tolerance},
                {"clip_scale", cfg.bound.loss.clip_scale}};
  j["sbs"] = {{"steps", cfg.sbs.steps},
              {"batch_size", cfg.sbs.batch_size},
              {"initial_size", cfg.sbs.initial_size},
              {"gamma", cfg.sbs.gamma},
              {"candidate_budget", cfg.sbs.candidate_budget},
              {"refit_pool", cfg.sbs.refit_pool}};
  j["hdr"] = {{"repeats", cfg.hdr.repeats},
              {"split_fraction", cfg.hdr.split_fraction},
              {"density", density_name(cfg.hdr.density.kind())},
              {"nu", cfg.hdr.density.nu()},
              {"shared_ranking", cfg.hdr.shared_ranking}};
  j["eval"] = {{"reps", cfg.reps}, {"test_size", cfg.test_size}, {"baseline_folds", cfg.baseline_folds}};
  return j;
}

ExperimentSpec to_experiment(const RunConfig& cfg) {
  ExperimentSpec e;
  if (cfg.data) e.train = *cfg.data;
  e.test_size = cfg.test_size;
  e.candidates = cfg.candidates;
  e.bound = cfg.bound;
  e.sbs = cfg.sbs;
  e.baseline_folds = cfg.baseline_folds;
  e.history = cfg.history;
  e.history_replicates = cfg.history_replicates;
  e.hdr = cfg.hdr;
  return e;
}

json to_json(const CandidatePool& pool) {
  json classes = json::array();
  for (const auto& cls : pool.classes) {
    json members = json::array();
    for (const auto& m : cls)
      members.push_back({{"class_id", m.class_id},
                         {"member_id", m.member_id},
                         {"metadata", m.metadata},
                         {"predictor", predictor_to_json(m.predictor)}});
    classes.push_back(std::move(members));
  }
  return {{"input_dim", pool.input_dim}, {"output_dim", pool.output_dim}, {"classes", classes}};
}

CandidatePool pool_from_json(const json& j) {
  CandidatePool pool;
  pool.input_dim = j.at("input_dim").get<std::size_t>();
  pool.output_dim = j.at("output_dim").get<std::size_t>();
  for (const auto& cls : j.at("classes")) {
    std::vector<CandidateModel> members;
    for (const auto& m : cls) {
      CandidateModel c;
      c.class_id = m.at("class_id").get<int>();
      c.member_id = m.at("member_id").get<int>();
      c.metadata = m.at("metadata").get<std::string>();
      c.predictor = predictor_from_json(m.at("predictor"));
      members.push_back(std::move(c));
    }
    pool.classes.push_back(std::move(members));
  }
  return pool;
}

json to_json(const MixtureDistribution& xi) {
  return {{"class_weights", xi.class_weights}, {"member_weights", xi.member_weights}};
}

MixtureDistribution mixture_from_json(const json& j) {
  MixtureDistribution xi;
  xi.class_weights = j.at("class_weights").get<std::vector<double>>();
  xi.member_weights = j.at("member_weights").get<std::vector<std::vector<double>>>();
  return xi;
}

json to_json(const BoundReport& r) {
  return {{"empirical_risk", r.empirical_risk}, {"kl_total", r.kl_total}, {"penalty", r.penalty},
          {"total", r.total}, {"n", r.n}};
}

BoundReport report_from_json(const json& j) {
  BoundReport r;
  r.empirical_risk = j.at("empirical_risk").get<double>();
  r.kl_total = j.at("kl_total").get<double>();
  r.penalty = j.at("penalty").get<double>();
  r.total = j.at("total").get<double>();
  r.n = j.at("n").get<std::size_t>();
  return r;
}

json to_json(const WeightMatrix& w) {
  return {{"raw", matrix_to_json(w.raw)},
          {"log_raw", matrix_to_json(w.log_raw)},
          {"per_task", matrix_to_json(w.per_task)},
          {"final_weights", w.final_weights}};
}

json to_json(const EvalReport& r) {
  json per = json::array();
  for (const auto& x : r.per_rep)
    per.push_back({{"mspe", x.mspe}, {"volatility", x.volatility}, {"bound_total", x.bound_total},
                   {"kl_total", x.kl_total}});
  return {{"method", to_string(r.method)},
          {"reps", r.reps},
          {"predictive", r.predictive},
          {"mspe", {{"mean", r.mspe.mean}, {"se", r.mspe.se}}},
          {"volatility", {{"mean", r.volatility.mean}, {"se", r.volatility.se}}},
          {"bound", to_json(r.bound)},
          {"per_rep", per}};
}

std::string serialize(const RunArtifact& a) {
  json j;
  j["schema_version"] = a.schema_version;
  j["command"] = a.command;
  j["method"] = a.method;
  j["config_echo"] = a.config_echo;
  j["seeds"] = a.seeds;
  j["results"] = a.results;
  return j.dump(2) + "\n";
}

RunArtifact parse_artifact(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw SchemaError("artifact line " + std::to_string(line_of(text, e.byte)) + ": " + e.what());
  }
  try {
    RunArtifact a;
    a.schema_version = j.at("schema_version").get<int>();
    if (a.schema_version != kSchemaVersion)
      throw SchemaError("artifact schema_version " + std::to_string(a.schema_version) + " (expected " +
                        std::to_string(kSchemaVersion) + ")");
    a.command = j.at("command").get<std::string>();
    a.method = j.at("method").get<std::string>();
    a.config_echo = j.at("config_echo");
    a.seeds = j.at("seeds");
    a.results = j.at("results");
    if (!a.results.is_object()) throw SchemaError("artifact: results must be an object");
    return a;
  } catch (const json::exception& e) {
    throw SchemaError(std::string("artifact: ") + e.what());
  }
}

RunArtifact load_artifact(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::system_error(errno, std::generic_category(), "cannot open " + path);
  std::ostringstream ss;
  ss << in.rdbuf();
  return parse_artifact(ss.str());
}

} // namespace pacbma
