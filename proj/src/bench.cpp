#include "pacbma/bench.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include "pacbma/csv.hpp"
#include "pacbma/kernels.hpp"

namespace pacbma {

std::string to_string(Method m) {
  switch (m) {
    case Method::RBM: return "RBM";
    case Method::SBS: return "SBS";
    case Method::HDR: return "HDR";
    case Method::BASELINE: return "BASELINE";
  }
  return "RBM";
}

Method parse_method(const std::string& s) {
  std::string u = s;
  std::transform(u.begin(), u.end(), u.begin(), [](unsigned char c) { return static_cast<char>(std::toupper(c)); });
  if (u == "RBM") return Method::RBM;
  if (u == "SBS") return Method::SBS;
  if (u == "HDR") return Method::HDR;
  if (u == "BASELINE") return Method::BASELINE;
  throw std::invalid_argument("unknown method '" + s + "'");
}

double mspe(const MixtureDistribution& xi, const CandidatePool& pool, const Matrix& test_features,
            std::span<const double> truth) {
  if (test_features.rows() == 0) throw std::invalid_argument("mspe: empty test set");
  const std::size_t r = pool.output_dim;
  if (truth.size() != static_cast<std::size_t>(test_features.rows()) * r)
    throw std::invalid_argument("mspe: truth size mismatch");
  xi.validate(pool);
  const auto table = kernels::omp::predict_all(pool, test_features);
  const auto mean = kernels::omp::mixture_mean(table, xi.model_probabilities());
  double s = 0.0;
  for (std::size_t i = 0; i < mean.size(); ++i) {
    const double e = mean[i] - truth[i];
    s += e * e;
  }
  return s / static_cast<double>(test_features.rows());
}

std::vector<double> cross_validated_mse(const CandidatePool& pool, const LabeledDataset& S,
                                        std::size_t folds, std::uint64_t seed) {
  if (folds < 2) throw std::invalid_argument("baseline_select_single: need >= 2 folds");
  if (S.size() < folds) throw std::invalid_argument("baseline_select_single: n < folds");
  pool.validate();
  const std::size_t n = S.size(), r = S.response_dim();
  std::vector<std::size_t> perm(n);
  std::iota(perm.begin(), perm.end(), 0);
  Stream stream(derive_seed(seed, {0xcf}));
  stream.shuffle(perm);

  const auto models = kernels::flatten(pool);
  std::vector<double> sse(models.size(), 0.0);
  std::vector<double> out(r);
  for (std::size_t f = 0; f < folds; ++f) {
    std::vector<std::size_t> train, test;
    for (std::size_t a = 0; a < n; ++a) (a % folds == f ? test : train).push_back(perm[a]);
    std::sort(train.begin(), train.end());
    std::sort(test.begin(), test.end());
    const LabeledDataset tr = S.subset(train), te = S.subset(test);
    for (std::size_t m = 0; m < models.size(); ++m) {
      Predictor p = models[m]->predictor;
      if (const auto* lp = std::get_if<LinearPredictor>(&p)) p = fit_ridge(tr, lp->subset, lp->ridge_lambda);
      for (std::size_t i = 0; i < te.size(); ++i) {
        evaluate(p, te.x(i), out);
        for (std::size_t o = 0; o < r; ++o) {
          const double e = te.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) - out[o];
          sse[m] += e * e;
        }
      }
    }
  }
  for (double& v : sse) v /= static_cast<double>(n);
  return sse;
}

MixtureDistribution baseline_select_single(const CandidatePool& pool, const LabeledDataset& S,
                                           std::size_t folds, std::uint64_t seed) {
  const auto cv = cross_validated_mse(pool, S, folds, seed);
  std::size_t best = 0;
  for (std::size_t m = 1; m < cv.size(); ++m)
    if (cv[m] < cv[best]) best = m;

  MixtureDistribution xi;
  xi.class_weights.assign(pool.num_classes(), 0.0);
  std::size_t flat = 0;
  for (std::size_t k = 0; k < pool.num_classes(); ++k) {
    const std::size_t size = pool.classes[k].size();
    if (best >= flat && best < flat + size) {
      xi.class_weights[k] = 1.0;
      std::vector<double> q(size, 0.0);
      q[best - flat] = 1.0;
      xi.member_weights.push_back(std::move(q));
    } else {
      xi.member_weights.emplace_back(size, 1.0 / static_cast<double>(size));
    }
    flat += size;
  }
  return xi;
}

MetricSummary summarize(const std::vector<double>& v) {
  MetricSummary s;
  if (v.empty()) return s;
  const double n = static_cast<double>(v.size());
  for (double x : v) s.mean += x;
  s.mean /= n;
  if (v.size() > 1) {
    double ss = 0.0;
    for (double x : v) ss += (x - s.mean) * (x - s.mean);
    s.se = std::sqrt(ss / (n - 1.0)) / std::sqrt(n);
  }
  return s;
}

void EvalReport::finalize() {
  reps = per_rep.size();
  std::vector<double> m, v;
  for (const auto& r : per_rep) {
    m.push_back(r.mspe);
    v.push_back(r.volatility);
  }
  mspe = summarize(m);
  volatility = summarize(v);
}

std::vector<LabeledDataset> draw_history(const ExperimentSpec& spec, std::uint64_t seed) {
  std::vector<LabeledDataset> out;
  for (std::size_t h = 0; h < spec.history.size(); ++h) {
    for (std::size_t c = 0; c < spec.history_replicates; ++c) {
      SyntheticSpec s = spec.history[h];
      s.seed = derive_seed(seed, {h, c, s.seed});
      out.push_back(generate(s).data);
    }
  }
  return out;
}

FittedMethod fit_method(Method method, const ExperimentSpec& spec, const LabeledDataset& train,
                        std::uint64_t seed) {
  FittedMethod out;
  switch (method) {
    case Method::RBM: {
      out.pool = generate_candidates(train, spec.candidates).pool;
      auto fit = minimize_bound(uniform_prior(out.pool), out.pool, train, spec.bound);
      out.posterior = std::move(fit.posterior);
      out.report = fit.report;
      break;
    }
    case Method::BASELINE: {
      out.pool = generate_candidates(train, spec.candidates).pool;
      out.posterior = baseline_select_single(out.pool, train, spec.baseline_folds, seed);
      if (train.size() >= 2)
        out.report = pac_bound(out.posterior, uniform_prior(out.pool), out.pool, train, spec.bound);
      break;
    }
    case Method::SBS: {
      SbsConfig cfg = spec.sbs;
      cfg.bound = spec.bound;
      LabelSource source = spec.data ? LabelSource::pool(train) : LabelSource::generator(spec.train);
      auto res = sbs_run(std::move(source), spec.candidates, cfg, seed);
      out.posterior = std::move(res.posterior);
      out.pool = std::move(res.pool);
      out.report = res.trace.back().report;
      break;
    }
    case Method::HDR: {
      if (spec.history.empty()) throw std::invalid_argument("HDR needs historical tasks");
      const auto history = draw_history(spec, derive_seed(seed, {0x4157}));
      const auto learned = hdr_learn_prior(history, spec.candidates, spec.bound, spec.hdr, seed);
      auto post = hdr_posterior(learned.prior, train, learned.candidates, spec.bound);
      out.posterior = std::move(post.fit.posterior);
      out.pool = std::move(post.pool);
      out.report = post.fit.report;
      break;
    }
  }
  return out;
}

namespace {

struct RepData {
  LabeledDataset train;
  Matrix test_X;
  std::vector<double> truth;
};

RepData draw_rep(const ExperimentSpec& spec, std::uint64_t train_seed, std::uint64_t test_seed) {
  RepData d;
  if (spec.data) {
    const LabeledDataset& all = *spec.data;
    if (all.size() <= spec.test_size + 1)
      throw std::invalid_argument("run_comparison: dataset too small for the test split");
    std::vector<std::size_t> perm(all.size());
    std::iota(perm.begin(), perm.end(), 0);
    Stream s(test_seed);
    s.shuffle(perm);
    std::vector<std::size_t> test(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(spec.test_size));
    std::vector<std::size_t> train(perm.begin() + static_cast<std::ptrdiff_t>(spec.test_size), perm.end());
    std::sort(test.begin(), test.end());
    std::sort(train.begin(), train.end());
    d.train = all.subset(train);
    const LabeledDataset te = all.subset(test);
    d.test_X = te.X;
    d.truth.assign(te.Y.data(), te.Y.data() + te.Y.size());
    return d;
  }
  SyntheticSpec tr = spec.train;
  tr.seed = train_seed;
  d.train = generate(tr).data;
  SyntheticSpec te = spec.train;
  te.n = spec.test_size;
  te.seed = test_seed;
  auto test = generate(te);
  d.test_X = std::move(test.data.X);
  d.truth = std::move(test.f);
  return d;
}

} // namespace

std::map<Method, EvalReport> run_comparison(const ExperimentSpec& spec,
                                            const std::vector<Method>& methods, std::size_t reps,
                                            std::uint64_t seed) {
  if (reps < 1) throw std::invalid_argument("run_comparison: reps must be >= 1");
  if (methods.empty()) throw std::invalid_argument("run_comparison: no methods");
  for (Method m : methods) {
    if (m == Method::HDR && spec.history.empty())
      throw std::invalid_argument("run_comparison: HDR needs a task family");
    if (m == Method::SBS && spec.data) {
      const std::size_t need = spec.sbs.resolved_initial_size() +
                               static_cast<std::size_t>(spec.sbs.steps - 1) * spec.sbs.batch_size;
      if (spec.data->size() < need + spec.test_size)
        throw std::invalid_argument("run_comparison: fixed dataset too small for sequential batch sampling");
    }
  }
  if (!spec.data) spec.train.validate();

  const std::size_t M = methods.size();
  std::vector<RepRecord> records(reps * M);
  std::vector<BoundReport> bounds(reps * M);
  std::vector<std::exception_ptr> errors(reps);

#pragma omp parallel for schedule(dynamic)
  for (std::int64_t rr = 0; rr < static_cast<std::int64_t>(reps); ++rr) {
    const auto rep = static_cast<std::uint64_t>(rr);
    try {
      const std::uint64_t train_seed = derive_seed(seed, {rep, 1});
      const std::uint64_t test_seed = spec.test_seed ? derive_seed(*spec.test_seed, {rep, 2})
                                                     : derive_seed(seed, {rep, 2});
      const RepData data = draw_rep(spec, train_seed, test_seed);
      for (std::size_t mi = 0; mi < M; ++mi) {
        const std::uint64_t method_seed = derive_seed(seed, {rep, 3, static_cast<std::uint64_t>(methods[mi])});
        const FittedMethod fit = fit_method(methods[mi], spec, data.train, method_seed);
        RepRecord& rec = records[static_cast<std::size_t>(rr) * M + mi];
        rec.mspe = mspe(fit.posterior, fit.pool, data.test_X, data.truth);
        rec.volatility = volatility(fit.posterior, fit.pool, data.test_X);
        rec.bound_total = fit.report.total;
        rec.kl_total = fit.report.kl_total;
        rec.weights = fit.posterior.model_probabilities();
        bounds[static_cast<std::size_t>(rr) * M + mi] = fit.report;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(rr)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  std::map<Method, EvalReport> out;
  for (std::size_t mi = 0; mi < M; ++mi) {
    EvalReport rep;
    rep.method = methods[mi];
    rep.predictive = spec.data.has_value();
    for (std::size_t r = 0; r < reps; ++r) rep.per_rep.push_back(records[r * M + mi]);
    rep.bound = bounds[mi];
    rep.finalize();
    out[methods[mi]] = std::move(rep);
  }
  return out;
}

std::string per_rep_csv(const std::map<Method, EvalReport>& reports) {
  std::ostringstream os;
  os << "rep,method,mspe,volatility,bound_total,kl_total\n";
  for (const auto& [m, rep] : reports)
    for (std::size_t r = 0; r < rep.per_rep.size(); ++r) {
      const auto& x = rep.per_rep[r];
      os << r << ',' << to_string(m) << ',' << format_double(x.mspe) << ','
         << format_double(x.volatility) << ',' << format_double(x.bound_total) << ','
         << format_double(x.kl_total) << '\n';
    }
  return os.str();
}

std::string summary_csv(const std::map<Method, EvalReport>& reports) {
  std::ostringstream os;
  os << "method,mean_mspe,se_mspe,mean_vol,se_vol\n";
  for (const auto& [m, rep] : reports)
    os << to_string(m) << ',' << format_double(rep.mspe.mean) << ',' << format_double(rep.mspe.se)
       << ',' << format_double(rep.volatility.mean) << ',' << format_double(rep.volatility.se) << '\n';
  return os.str();
}

} // namespace pacbma
