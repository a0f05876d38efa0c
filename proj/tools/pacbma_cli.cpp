#include <CLI11.hpp>

#include "commands.hpp"
#include "pacbma/kernels.hpp"

using namespace pacbma::cli;

int main(int argc, char** argv) {
  CLI::App app{"PAC-Bayes model averaging toolkit"};
  app.require_subcommand(1);
  // Subcommands inherit this, so global flags may follow the subcommand.
  app.fallthrough();
  GlobalOptions g;
  app.add_option("--seed", g.seed, "Base seed (u64)");
  app.add_option("--threads", g.threads, "Worker threads (default: all cores)")->check(CLI::NonNegativeNumber);
  app.add_option("--out", g.out, "Output directory");

  std::string config;
  auto* simulate = app.add_subcommand("simulate", "Generate a synthetic dataset CSV");
  simulate->add_option("config,--config", config, "Run config (JSON)")->required();

  FitInputs fit;
  auto* fit_cmd = app.add_subcommand("fit", "Fit rbm, sbs, hdr or baseline");
  fit_cmd->add_option("method", fit.method, "rbm|sbs|hdr|baseline")
      ->required()
      ->check(CLI::IsMember({"rbm", "sbs", "hdr", "baseline"}, CLI::ignore_case));
  fit_cmd->add_option("--config", fit.config, "Run config (JSON)");
  fit_cmd->add_option("--data", fit.data, "Training CSV (SBS: labelled pool CSV)");
  fit_cmd->add_option("--task", fit.tasks, "Historical task CSV (HDR, repeatable)");

  EvalInputs ev;
  auto* eval = app.add_subcommand("eval", "Evaluate a fitted artifact");
  eval->add_option("artifact,--artifact", ev.artifact, "Artifact JSON")->required();
  eval->add_option("--test", ev.test, "Held-out CSV (predictive MSPE)");
  eval->add_option("--config", ev.config, "Config whose data spec generates the test set");

  std::string table;
  std::size_t reps = 100;
  auto* repro = app.add_subcommand("reproduce", "Re-run a simulation table");
  repro->add_option("table", table, "t2|t3|t4|t5|fig3")->required();
  repro->add_option("--reps", reps, "Repetitions per cell");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : kConfigError;
  }
  pacbma::kernels::set_threads(g.threads);

  if (*simulate) return guarded([&] { cmd_simulate(g, config); });
  if (*fit_cmd) return guarded([&] { cmd_fit(g, fit); });
  if (*eval) return guarded([&] { cmd_eval(g, ev); });
  return guarded([&] { cmd_reproduce(g, table, reps); });
}
