#include "commands.hpp"

#include <filesystem>
#include <iostream>
#include <optional>
#include <sstream>
#include <system_error>

#include "pacbma/artifact.hpp"
#include "pacbma/bench.hpp"
#include "pacbma/csv.hpp"
#include "pacbma/experiments.hpp"
#include "pacbma/kernels.hpp"

namespace pacbma::cli {

namespace fs = std::filesystem;
using nlohmann::json;

int guarded(const std::function<void()>& body) {
  try {
    body();
    return kOk;
  } catch (const SchemaError& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kSchemaError;
  } catch (const NonFiniteObjective& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kNumericError;
  } catch (const std::system_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kIoError;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::domain_error& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kConfigError;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return kFailure;
  }
}

namespace {

std::string out_path(const GlobalOptions& g, const std::string& name) { return (fs::path(g.out) / name).string(); }

RunConfig config_or_default(const std::string& path) { return path.empty() ? parse_config("{}") : load_config(path); }

/// The generated dataset's seed combines the config seed with --seed.
SyntheticSpec seeded(SyntheticSpec spec, std::uint64_t global) {
  spec.seed = derive_seed(global, {spec.seed});
  return spec;
}

LabeledDataset training_data(const GlobalOptions& g, const RunConfig& cfg, const std::string& data_path,
                             json& seeds) {
  if (!data_path.empty()) return read_dataset_csv(data_path);
  if (!cfg.data) throw ConfigError("no training data: pass --data or set 'data' in the config");
  const SyntheticSpec spec = seeded(*cfg.data, g.seed);
  seeds["data"] = spec.seed;
  return generate(spec).data;
}

RunArtifact new_artifact(const GlobalOptions& g, const std::string& command, const std::string& method,
                         const RunConfig& cfg) {
  RunArtifact a;
  a.command = command;
  a.method = method;
  a.config_echo = config_to_json(cfg);
  a.seeds["global"] = g.seed;
  return a;
}

void write_artifact(const GlobalOptions& g, const RunArtifact& a) {
  write_file_atomic(out_path(g, "artifact.json"), serialize(a));
}

} // namespace

void cmd_simulate(const GlobalOptions& g, const std::string& config_path) {
  const RunConfig cfg = load_config(config_path);
  if (!cfg.data && cfg.history.empty()) throw ConfigError("field 'data': missing");
  if (cfg.data) {
    const SyntheticSpec spec = seeded(*cfg.data, g.seed);
    std::ostringstream os;
    write_dataset_csv(os, generate(spec).data);
    write_file_atomic(out_path(g, "dataset.csv"), os.str());
  }
  std::size_t t = 0;
  for (const auto& h : cfg.history)
    for (std::size_t c = 0; c < cfg.history_replicates; ++c, ++t) {
      SyntheticSpec spec = h;
      spec.seed = derive_seed(g.seed, {h.seed, c, 0x4157});
      std::ostringstream os;
      write_dataset_csv(os, generate(spec).data);
      write_file_atomic(out_path(g, "history_" + std::to_string(t) + ".csv"), os.str());
    }
}

void cmd_fit(const GlobalOptions& g, const FitInputs& in) {
  const Method method = parse_method(in.method);
  const RunConfig cfg = config_or_default(in.config);
  const ExperimentSpec spec = to_experiment(cfg);
  RunArtifact a = new_artifact(g, "fit", to_string(method), cfg);
  json& res = a.results;

  switch (method) {
    case Method::RBM:
    case Method::BASELINE: {
      const LabeledDataset S = training_data(g, cfg, in.data, a.seeds);
      const FittedMethod fit = fit_method(method, spec, S, g.seed);
      res["pool"] = to_json(fit.pool);
      res["prior"] = to_json(uniform_prior(fit.pool));
      res["posterior"] = to_json(fit.posterior);
      res["report"] = to_json(fit.report);
      if (method == Method::BASELINE)
        res["cv_mse"] = cross_validated_mse(fit.pool, S, cfg.baseline_folds, g.seed);
      break;
    }
    case Method::SBS: {
      SbsConfig sc = cfg.sbs;
      sc.bound = cfg.bound;
      std::optional<LabelSource> source;
      if (!in.data.empty()) {
        LabeledDataset pool_data = read_dataset_csv(in.data);
        const std::size_t need =
            sc.resolved_initial_size() + static_cast<std::size_t>(sc.steps - 1) * sc.batch_size;
        if (pool_data.size() < need)
          throw ConfigError("sbs: pool CSV has " + std::to_string(pool_data.size()) + " rows, needs " +
                            std::to_string(need));
        source = LabelSource::pool(std::move(pool_data));
      } else {
        if (!cfg.data) throw ConfigError("sbs needs a generator ('data' in the config) or a pool CSV");
        const SyntheticSpec gen = seeded(*cfg.data, g.seed);
        a.seeds["data"] = gen.seed;
        source = LabelSource::generator(gen);
      }
      const SbsResult r = sbs_run(std::move(*source), cfg.candidates, sc, g.seed);
      res["pool"] = to_json(r.pool);
      res["posterior"] = to_json(r.posterior);
      res["report"] = to_json(r.trace.back().report);
      json trace = json::array();
      for (const auto& step : r.trace)
        trace.push_back({{"batch_size", step.batch.size()},
                         {"threshold", step.threshold},
                         {"volatility", step.volatility},
                         {"report", to_json(step.report)}});
      res["trace"] = trace;
      break;
    }
    case Method::HDR: {
      std::vector<LabeledDataset> tasks;
      for (const auto& p : in.tasks) tasks.push_back(read_dataset_csv(p));
      if (tasks.empty() && !cfg.history.empty()) tasks = draw_history(spec, derive_seed(g.seed, {0x4157}));
      if (tasks.size() < 2) throw ConfigError("hdr needs at least 2 historical tasks (got " + std::to_string(tasks.size()) + ")");
      const LabeledDataset S = training_data(g, cfg, in.data, a.seeds);
      const HdrResult learned = hdr_learn_prior(tasks, cfg.candidates, cfg.bound, cfg.hdr, g.seed);
      const HdrPosterior post = hdr_posterior(learned.prior, S, learned.candidates, cfg.bound);
      res["weights"] = to_json(learned.weights);
      res["prior"] = to_json(learned.prior);
      res["pool"] = to_json(post.pool);
      res["posterior"] = to_json(post.fit.posterior);
      res["report"] = to_json(post.fit.report);
      break;
    }
  }
  write_artifact(g, a);
}

void cmd_eval(const GlobalOptions& g, const EvalInputs& in) {
  const RunArtifact a = load_artifact(in.artifact);
  CandidatePool pool;
  MixtureDistribution xi;
  BoundReport bound;
  try {
    pool = pool_from_json(a.results.at("pool"));
    xi = mixture_from_json(a.results.at("posterior"));
    bound = report_from_json(a.results.at("report"));
    xi.validate(pool);
  } catch (const nlohmann::json::exception& e) {
    throw SchemaError(std::string("artifact: ") + e.what());
  } catch (const std::invalid_argument& e) {
    throw SchemaError(std::string("artifact: ") + e.what());
  }

  Matrix X;
  std::vector<double> truth;
  bool predictive = false;
  if (!in.test.empty()) {
    const LabeledDataset T = read_dataset_csv(in.test);
    X = T.X;
    truth.assign(T.Y.data(), T.Y.data() + T.Y.size());
    predictive = true;
  } else {
    const RunConfig cfg = config_or_default(in.config);
    if (!cfg.data) throw ConfigError("eval needs --test or a config with 'data'");
    SyntheticSpec spec = *cfg.data;
    spec.n = cfg.test_size;
    spec.seed = derive_seed(g.seed, {spec.seed, 0x7e57});
    SyntheticData d = generate(spec);
    if (d.f.empty()) {
      truth.assign(d.data.Y.data(), d.data.Y.data() + d.data.Y.size());
      predictive = true;
    } else {
      truth = std::move(d.f);
    }
    X = std::move(d.data.X);
  }
  if (static_cast<std::size_t>(X.cols()) != pool.input_dim)
    throw ConfigError("test features have " + std::to_string(X.cols()) + " columns, the artifact expects " +
                      std::to_string(pool.input_dim));

  EvalReport rep;
  rep.method = parse_method(a.method);
  rep.predictive = predictive;
  RepRecord rec;
  rec.mspe = mspe(xi, pool, X, truth);
  rec.volatility = volatility(xi, pool, X);
  rec.bound_total = bound.total;
  rec.kl_total = bound.kl_total;
  rep.per_rep.push_back(rec);
  rep.bound = bound;
  rep.finalize();
  const std::map<Method, EvalReport> reports{{rep.method, rep}};
  write_file_atomic(out_path(g, "per_rep.csv"), per_rep_csv(reports));
  write_file_atomic(out_path(g, "summary.csv"), summary_csv(reports));
}

void cmd_reproduce(const GlobalOptions& g, const std::string& table, std::size_t reps) {
  if (reps < 1) throw ConfigError("--reps must be >= 1");
  reproduce_plan(table);  // validates the id before any work
  for (const auto& [name, content] : reproduce(table, reps, g.seed)) write_file_atomic(out_path(g, name), content);
}

} // namespace pacbma::cli
