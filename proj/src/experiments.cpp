#include "pacbma/experiments.hpp"

#include <sstream>
#include <stdexcept>

#include "pacbma/csv.hpp"

namespace pacbma {

namespace {

ExperimentSpec base_experiment(const SyntheticSpec& train) {
  ExperimentSpec e;
  e.train = train;
  e.test_size = 1000;
  e.sbs.steps = kLinearModelSteps;
  e.sbs.batch_size = train.n / static_cast<std::size_t>(kLinearModelSteps);
  return e;
}

std::string sigma_label(double rho, double sigma) {
  std::ostringstream os;
  os << "rho=" << format_double(rho) << " sigma=" << format_double(sigma);
  return os.str();
}

} // namespace

ExperimentSpec linear_experiment(int model, double rho, double sigma) {
  return base_experiment(linear_model_spec(model, rho, sigma, 0));
}

ExperimentSpec nonlinear_experiment(int model) { return base_experiment(nonlinear_model_spec(model, 0)); }

ExperimentSpec transfer_experiment(double sigma) {
  ExperimentSpec e = base_experiment(transfer_target_spec(sigma, 0));
  e.history = transfer_history_specs(0);
  e.history_replicates = 2;
  return e;
}

ReproducePlan reproduce_plan(const std::string& table) {
  ReproducePlan plan;
  plan.table = table;
  if (table == "t2" || table == "t3" || table == "t4") {
    const int model = table[1] - '1';
    plan.methods = {Method::RBM, Method::BASELINE, Method::SBS};
    for (double rho : {0.0, 0.9})
      for (double sigma : {1.0, 5.0})
        plan.cells.push_back({sigma_label(rho, sigma), linear_experiment(model, rho, sigma), sigma});
  } else if (table == "t5") {
    plan.methods = {Method::RBM, Method::BASELINE, Method::SBS};
    for (int model : {1, 2})
      plan.cells.push_back({"model " + std::to_string(model), nonlinear_experiment(model), 1.0});
  } else if (table == "fig3") {
    plan.methods = {Method::RBM, Method::BASELINE, Method::HDR};
    for (int s = 1; s <= 5; ++s) {
      const auto sigma = static_cast<double>(s);
      plan.cells.push_back({sigma_label(0.0, sigma), transfer_experiment(sigma), sigma});
    }
  } else {
    throw std::invalid_argument("unknown table id '" + table + "' (expected t2, t3, t4, t5 or fig3)");
  }
  return plan;
}

FileSet reproduce(const std::string& table, std::size_t reps, std::uint64_t seed) {
  const ReproducePlan plan = reproduce_plan(table);
  std::vector<std::map<Method, EvalReport>> results;
  for (std::size_t c = 0; c < plan.cells.size(); ++c)
    results.push_back(run_comparison(plan.cells[c].spec, plan.methods, reps, derive_seed(seed, {c})));

  std::ostringstream wide;
  wide << "metric,method";
  for (const auto& cell : plan.cells) wide << ',' << cell.label;
  wide << '\n';
  for (const char* metric : {"mspe", "volatility"}) {
    for (Method m : plan.methods) {
      wide << metric << ',' << to_string(m);
      for (const auto& res : results) {
        const EvalReport& r = res.at(m);
        wide << ',' << format_double(metric[0] == 'm' ? r.mspe.mean : r.volatility.mean);
      }
      wide << '\n';
    }
  }

  std::ostringstream lng;
  lng << "cell,method,mean_mspe,se_mspe,mean_vol,se_vol\n";
  std::ostringstream per;
  per << "cell,rep,method,mspe,volatility,bound_total,kl_total\n";
  for (std::size_t c = 0; c < plan.cells.size(); ++c) {
    for (Method m : plan.methods) {
      const EvalReport& r = results[c].at(m);
      lng << plan.cells[c].label << ',' << to_string(m) << ',' << format_double(r.mspe.mean) << ','
          << format_double(r.mspe.se) << ',' << format_double(r.volatility.mean) << ','
          << format_double(r.volatility.se) << '\n';
      for (std::size_t i = 0; i < r.per_rep.size(); ++i) {
        const auto& x = r.per_rep[i];
        per << plan.cells[c].label << ',' << i << ',' << to_string(m) << ',' << format_double(x.mspe) << ','
            << format_double(x.volatility) << ',' << format_double(x.bound_total) << ','
            << format_double(x.kl_total) << '\n';
      }
    }
  }

  FileSet files;
  files.emplace_back(table + "_table.csv", wide.str());
  files.emplace_back(table + "_summary.csv", lng.str());
  files.emplace_back(table + "_per_rep.csv", per.str());
  if (table == "fig3") {
    for (Method m : plan.methods) {
      std::ostringstream plot;
      plot << "sigma,mean_mspe\n";
      for (std::size_t c = 0; c < plan.cells.size(); ++c)
        plot << format_double(plan.cells[c].x) << ',' << format_double(results[c].at(m).mspe.mean) << '\n';
      files.emplace_back("fig3_" + to_string(m) + ".csv", plot.str());
    }
  }
  return files;
}

} // namespace pacbma
