#include "pacbma/hdr.hpp"

#include <algorithm>
#include <cmath>
#include <exception>
#include <limits>
#include <stdexcept>

#include "pacbma/kernels.hpp"
#include "pacbma/rng.hpp"

namespace pacbma {

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

std::uint64_t dataset_hash(const LabeledDataset& S) {
  const std::uint64_t hx = content_hash({S.X.data(), static_cast<std::size_t>(S.X.size())});
  const std::uint64_t hy = content_hash({S.Y.data(), static_cast<std::size_t>(S.Y.size())});
  return derive_seed(hx, {hy});
}

} // namespace

std::vector<TaskBundle> fit_task_priors(const std::vector<LabeledDataset>& tasks,
                                        const CandidateConfig& candidates,
                                        const BoundConfig& bound, double split_fraction) {
  if (tasks.size() < 2) throw std::invalid_argument("fit_task_priors: need m >= 2 tasks");
  if (!(split_fraction > 0.0 && split_fraction < 1.0))
    throw std::invalid_argument("fit_task_priors: split fraction must be in (0,1)");
  for (const auto& t : tasks) {
    t.validate();
    if (t.dim() != tasks[0].dim() || t.response_dim() != tasks[0].response_dim())
      throw std::invalid_argument("fit_task_priors: tasks differ in shape");
  }
  std::vector<TaskBundle> out(tasks.size());
  std::vector<std::exception_ptr> errors(tasks.size());
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t ii = 0; ii < static_cast<std::int64_t>(tasks.size()); ++ii) {
    const auto i = static_cast<std::size_t>(ii);
    try {
      TaskBundle b;
      b.data = tasks[i];
      b.split_fraction = split_fraction;
      b.pool = generate_candidates(tasks[i], candidates).pool;
      BoundFit fit = minimize_bound(uniform_prior(b.pool), b.pool, tasks[i], bound);
      b.prior = std::move(fit.posterior);
      b.report = fit.report;
      out[i] = std::move(b);
    } catch (...) {
      errors[i] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);
  for (const auto& b : out)
    if (b.prior.shape() != out[0].prior.shape())
      throw std::invalid_argument("fit_task_priors: task pools have different shapes");
  return out;
}

LogWeight likelihood_weight(std::span<const double> predictions, double sigma,
                            const LabeledDataset& validation, const ErrorDensity& q) {
  if (validation.size() == 0) throw std::invalid_argument("likelihood_weight: empty validation set");
  if (!(sigma > 0.0)) throw std::invalid_argument("likelihood_weight: sigma must be > 0");
  if (predictions.size() != validation.size() * validation.response_dim())
    throw std::invalid_argument("likelihood_weight: prediction count mismatch");
  const double log_sigma = std::log(sigma);
  const std::size_t r = validation.response_dim();
  LogWeight w;
  for (std::size_t a = 0; a < validation.size(); ++a)
    for (std::size_t o = 0; o < r; ++o) {
      const double resid = validation.Y(static_cast<Eigen::Index>(a), static_cast<Eigen::Index>(o)) - predictions[a * r + o];
      w.log_value += q.log_density(resid / sigma) - log_sigma;
    }
  w.value = std::exp(w.log_value);
  return w;
}

LogWeight likelihood_weight(const MixtureDistribution& xi, const CandidatePool& pool, double sigma,
                            const LabeledDataset& validation, const ErrorDensity& q) {
  xi.validate(pool);
  const auto table = kernels::omp::predict_all(pool, validation.X);
  const auto mean = kernels::omp::mixture_mean(table, xi.model_probabilities());
  return likelihood_weight(mean, sigma, validation, q);
}

std::vector<double> normalize_log_weights(std::span<const double> log_scores) {
  std::vector<double> out(log_scores.size());
  if (out.empty()) return out;
  double mx = kNegInf;
  for (double v : log_scores) mx = std::max(mx, v);
  if (mx == kNegInf || std::isnan(mx)) {
    std::fill(out.begin(), out.end(), 1.0 / static_cast<double>(out.size()));
    return out;
  }
  double z = 0.0;
  for (std::size_t j = 0; j < out.size(); ++j) {
    out[j] = std::exp(log_scores[j] - mx);
    z += out[j];
  }
  for (double& v : out) v /= z;
  return out;
}

MixtureDistribution combine_mixtures(std::span<const double> weights,
                                     const std::vector<MixtureDistribution>& mixtures) {
  if (weights.size() != mixtures.size() || mixtures.empty())
    throw std::invalid_argument("combine_mixtures: weight count mismatch");
  const auto shape = mixtures[0].shape();
  for (const auto& m : mixtures)
    if (m.shape() != shape) throw std::invalid_argument("combine_mixtures: shape mismatch");
  const std::size_t K = shape.size();
  MixtureDistribution out;
  out.class_weights.assign(K, 0.0);
  out.member_weights.resize(K);
  for (std::size_t k = 0; k < K; ++k) {
    out.member_weights[k].assign(shape[k], 0.0);
    for (std::size_t i = 0; i < mixtures.size(); ++i) {
      const double wk = weights[i] * mixtures[i].class_weights[k];
      out.class_weights[k] += wk;
      for (std::size_t j = 0; j < shape[k]; ++j) out.member_weights[k][j] += wk * mixtures[i].member_weights[k][j];
    }
    double z = 0.0;
    for (double v : out.member_weights[k]) z += v;
    for (double& v : out.member_weights[k]) v = z > 0.0 ? v / z : 1.0 / static_cast<double>(shape[k]);
  }
  double z = 0.0;
  for (double v : out.class_weights) z += v;
  for (double& v : out.class_weights) v /= z;
  return out;
}

std::vector<int> pooled_ranking(const std::vector<LabeledDataset>& tasks) {
  if (tasks.empty()) throw std::invalid_argument("pooled_ranking: no tasks");
  Eigen::Index rows = 0;
  for (const auto& t : tasks) {
    if (t.dim() != tasks[0].dim() || t.response_dim() != tasks[0].response_dim())
      throw std::invalid_argument("pooled_ranking: tasks differ in shape");
    rows += t.X.rows();
  }
  LabeledDataset all;
  all.X.resize(rows, tasks[0].X.cols());
  all.Y.resize(rows, tasks[0].Y.cols());
  Eigen::Index r = 0;
  for (const auto& t : tasks) {
    all.X.middleRows(r, t.X.rows()) = t.X;
    all.Y.middleRows(r, t.Y.rows()) = t.Y;
    r += t.X.rows();
  }
  return rank_by_marginal_correlation(all);
}

HdrResult hdr_learn_prior(const std::vector<LabeledDataset>& tasks, const CandidateConfig& candidates,
                          const BoundConfig& bound, const HdrConfig& cfg, std::uint64_t seed) {
  CandidateConfig cc = candidates;
  if (cfg.shared_ranking && tasks.size() >= 2 && !tasks[0].is_classification()) cc.ranking = pooled_ranking(tasks);
  return hdr_learn_prior(fit_task_priors(tasks, cc, bound, cfg.split_fraction), cc, bound, cfg, seed);
}

HdrResult hdr_learn_prior(std::vector<TaskBundle> tasks, const CandidateConfig& candidates,
                          const BoundConfig& bound, const HdrConfig& cfg, std::uint64_t seed) {
  const std::size_t m = tasks.size();
  if (m < 2) throw std::invalid_argument("hdr_learn_prior: need m >= 2 tasks");
  if (cfg.repeats < 1) throw std::invalid_argument("hdr_learn_prior: repeats must be >= 1");
  const auto R = static_cast<std::size_t>(cfg.repeats);

  std::vector<std::uint64_t> task_keys(m);
  for (std::size_t i = 0; i < m; ++i) task_keys[i] = dataset_hash(tasks[i].data);

  // log_e[(r * m + i) * m + j] = log E_j^i for repeat r.
  std::vector<double> log_e(R * m * m, 0.0);
  std::vector<std::exception_ptr> errors(R * m);
#pragma omp parallel for schedule(dynamic)
  for (std::int64_t cell = 0; cell < static_cast<std::int64_t>(R * m); ++cell) {
    const auto r = static_cast<std::size_t>(cell) / m;
    const auto i = static_cast<std::size_t>(cell) % m;
    try {
      const LabeledDataset& S = tasks[i].data;
      const std::size_t n = S.size();
      const auto n_train = std::clamp<std::size_t>(
          static_cast<std::size_t>(std::llround(tasks[i].split_fraction * static_cast<double>(n))), 1, n - 1);
      std::vector<std::size_t> perm(n);
      for (std::size_t a = 0; a < n; ++a) perm[a] = a;
      Stream stream(derive_seed(seed, {task_keys[i], r}));
      stream.shuffle(perm);
      std::vector<std::size_t> train_rows(perm.begin(), perm.begin() + static_cast<std::ptrdiff_t>(n_train));
      std::vector<std::size_t> val_rows(perm.begin() + static_cast<std::ptrdiff_t>(n_train), perm.end());
      std::sort(train_rows.begin(), train_rows.end());
      std::sort(val_rows.begin(), val_rows.end());
      const LabeledDataset train = S.subset(train_rows);
      const LabeledDataset val = S.subset(val_rows);

      const CandidatePool pool = generate_candidates(train, candidates).pool;
      const auto losses = model_losses(pool, train, bound.loss);
      const auto val_table = kernels::serial::predict_all(pool, val.X);
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        if (tasks[j].prior.shape() != pool.class_sizes())
          throw std::invalid_argument("hdr_learn_prior: task pools are not aligned");
        const BoundFit post = minimize_bound_from_losses(tasks[j].prior, losses, train.size(), bound);
        const double sigma = estimate_sigma(post.posterior, pool, train);
        const auto mean = kernels::serial::mixture_mean(val_table, post.posterior.model_probabilities());
        log_e[cell * static_cast<std::int64_t>(m) + static_cast<std::int64_t>(j)] =
            likelihood_weight(mean, sigma, val, cfg.density).log_value;
      }
    } catch (...) {
      errors[static_cast<std::size_t>(cell)] = std::current_exception();
    }
  }
  for (const auto& e : errors)
    if (e) std::rethrow_exception(e);

  HdrResult out;
  WeightMatrix& W = out.weights;
  const auto mm = static_cast<Eigen::Index>(m);
  W.raw = Matrix::Zero(mm, mm);
  W.log_raw = Matrix::Zero(mm, mm);
  W.per_task = Matrix::Zero(mm, mm);
  for (std::size_t r = 0; r < R; ++r) {
    for (std::size_t i = 0; i < m; ++i) {
      std::vector<double> row;
      for (std::size_t j = 0; j < m; ++j)
        if (j != i) row.push_back(log_e[(r * m + i) * m + j]);
      const auto norm = normalize_log_weights(row);
      std::size_t c = 0;
      for (std::size_t j = 0; j < m; ++j) {
        if (j == i) continue;
        const double le = log_e[(r * m + i) * m + j];
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        W.raw(ii, jj) += std::exp(le) / static_cast<double>(R);
        W.log_raw(ii, jj) += le / static_cast<double>(R);
        W.per_task(ii, jj) += norm[c++] / static_cast<double>(R);
      }
    }
  }
  // Each j appears in the m-1 rows i != j; average there, then renormalise.
  W.final_weights.assign(m, 0.0);
  for (std::size_t j = 0; j < m; ++j) {
    double s = 0.0;
    for (std::size_t i = 0; i < m; ++i)
      if (i != j) s += W.per_task(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
    W.final_weights[j] = s / static_cast<double>(m - 1);
  }
  double z = 0.0;
  for (double v : W.final_weights) z += v;
  for (double& v : W.final_weights) v /= z;

  std::vector<MixtureDistribution> priors;
  for (const auto& t : tasks) priors.push_back(t.prior);
  out.prior = combine_mixtures(W.final_weights, priors);
  out.candidates = candidates;
  out.tasks = std::move(tasks);
  return out;
}

HdrPosterior hdr_posterior(const MixtureDistribution& prior, const LabeledDataset& new_task,
                           const CandidateConfig& candidates, const BoundConfig& bound) {
  if (new_task.X.rows() == 0) throw std::invalid_argument("hdr_posterior: empty task");
  new_task.validate();
  HdrPosterior out;
  out.pool = generate_candidates(new_task, candidates).pool;
  if (prior.shape() != out.pool.class_sizes())
    throw std::invalid_argument("hdr_posterior: prior does not match the task's pool shape");
  out.fit = minimize_bound(prior, out.pool, new_task, bound);
  return out;
}

} // namespace pacbma
