#include "pacbma/sbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include <boost/math/distributions/normal.hpp>

#include "pacbma/kernels.hpp"

namespace pacbma {

LabelSource LabelSource::generator(SyntheticSpec spec) {
  spec.validate();
  LabelSource s;
  s.generator_ = true;
  s.spec_ = std::move(spec);
  return s;
}

LabelSource LabelSource::pool(LabeledDataset data, bool replay) {
  data.validate();
  LabelSource s;
  s.generator_ = false;
  s.replay_ = replay;
  s.consumed_.assign(data.size(), false);
  s.data_ = std::move(data);
  return s;
}

std::size_t LabelSource::dim() const { return generator_ ? spec_.d : data_.dim(); }

std::vector<std::size_t> LabelSource::available() const {
  std::vector<std::size_t> rows;
  for (std::size_t i = 0; i < consumed_.size(); ++i)
    if (!consumed_[i]) rows.push_back(i);
  return rows;
}

void LabelSource::consume(const std::vector<std::size_t>& rows) {
  if (generator_ || replay_) return;
  for (std::size_t r : rows) consumed_.at(r) = true;
}

namespace {

double sq_dist(const Matrix& X, std::size_t a, std::size_t b) {
  return (X.row(static_cast<Eigen::Index>(a)) - X.row(static_cast<Eigen::Index>(b))).squaredNorm();
}

std::vector<std::size_t> greedy_maximin(const Matrix& X, std::vector<std::size_t> candidates,
                                        std::size_t n) {
  Eigen::RowVectorXd centroid = Eigen::RowVectorXd::Zero(X.cols());
  for (std::size_t r : candidates) centroid += X.row(static_cast<Eigen::Index>(r));
  centroid /= static_cast<double>(candidates.size());

  std::vector<std::size_t> chosen;
  std::vector<bool> taken(candidates.size(), false);
  std::size_t first = 0;
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t c = 0; c < candidates.size(); ++c) {
    const double d = (X.row(static_cast<Eigen::Index>(candidates[c])) - centroid).squaredNorm();
    if (d < best) {
      best = d;
      first = c;
    }
  }
  chosen.push_back(candidates[first]);
  taken[first] = true;
  std::vector<double> mind(candidates.size(), std::numeric_limits<double>::infinity());
  while (chosen.size() < n) {
    const std::size_t last = chosen.back();
    std::size_t pick = candidates.size();
    double pick_d = -1.0;
    for (std::size_t c = 0; c < candidates.size(); ++c) {
      if (taken[c]) continue;
      mind[c] = std::min(mind[c], sq_dist(X, candidates[c], last));
      if (mind[c] > pick_d) {
        pick_d = mind[c];
        pick = c;
      }
    }
    chosen.push_back(candidates[pick]);
    taken[pick] = true;
  }

  // Exchange refinement: swap a chosen point for an unchosen one whenever the
  // design's minimum pairwise distance strictly increases.
  auto min_pair = [&](const std::vector<std::size_t>& set) {
    double m = std::numeric_limits<double>::infinity();
    for (std::size_t a = 0; a < set.size(); ++a)
      for (std::size_t b = a + 1; b < set.size(); ++b) m = std::min(m, sq_dist(X, set[a], set[b]));
    return m;
  };
  if (n >= 2 && n < candidates.size()) {
    double current = min_pair(chosen);
    for (int pass = 0; pass < 100; ++pass) {
      bool improved = false;
      for (std::size_t a = 0; a < chosen.size(); ++a) {
        for (std::size_t c = 0; c < candidates.size(); ++c) {
          if (taken[c]) continue;
          auto trial = chosen;
          trial[a] = candidates[c];
          const double v = min_pair(trial);
          if (v > current) {
            const auto old = std::find(candidates.begin(), candidates.end(), chosen[a]) - candidates.begin();
            taken[static_cast<std::size_t>(old)] = false;
            taken[c] = true;
            chosen = std::move(trial);
            current = v;
            improved = true;
          }
        }
      }
      if (!improved) break;
    }
  }
  return chosen;
}

} // namespace

Acquisition space_filling_design(const LabelSource& source, std::size_t n, std::uint64_t seed) {
  if (n < 2) throw std::invalid_argument("space_filling_design: n must be >= 2");
  Stream stream(derive_seed(seed, {0x5f11}));
  Acquisition out;
  if (source.is_generator()) {
    const SyntheticSpec& spec = source.spec();
    const std::size_t d = spec.d;
    const boost::math::normal_distribution<double> stdnorm;
    Matrix Z(static_cast<Eigen::Index>(n), static_cast<Eigen::Index>(d));
    for (std::size_t j = 0; j < d; ++j) {
      std::vector<std::size_t> perm(n);
      std::iota(perm.begin(), perm.end(), 0);
      stream.shuffle(perm);
      for (std::size_t i = 0; i < n; ++i) {
        const double u = (static_cast<double>(perm[i]) + stream.uniform_open()) / static_cast<double>(n);
        Z(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = boost::math::quantile(stdnorm, u);
      }
    }
    Matrix X(Z.rows(), Z.cols());
    if (spec.kind == SyntheticKind::ClassificationToy) {
      std::vector<double> mean, sd;
      feature_marginals(spec, mean, sd);
      for (Eigen::Index i = 0; i < Z.rows(); ++i)
        for (Eigen::Index j = 0; j < Z.cols(); ++j)
          X(i, j) = mean[static_cast<std::size_t>(j)] + sd[static_cast<std::size_t>(j)] * Z(i, j);
    } else {
      const Eigen::MatrixXd L = ar_cholesky(d, spec.rho);
      X = Z * L.transpose();
    }
    Stream labels(derive_seed(seed, {0x1abe1}));
    out.data = label_features(spec, X, labels).data;
    return out;
  }

  const auto avail = source.available();
  if (avail.size() < n) throw std::invalid_argument("space_filling_design: pool smaller than n");
  if (avail.size() == n) {
    out.rows = avail;
  } else {
    out.rows = greedy_maximin(source.data().X, avail, n);
    std::sort(out.rows.begin(), out.rows.end());
  }
  out.data = source.data().subset(out.rows);
  return out;
}

BatchChoice select_batch(const MixtureDistribution& xi, const CandidatePool& pool,
                         const LabelSource& source, std::size_t batch_size,
                         std::optional<double> gamma, std::size_t budget, std::uint64_t seed) {
  if (batch_size < 2) throw std::invalid_argument("select_batch: batch size must be >= 2");
  if (budget < 1) throw std::invalid_argument("select_batch: budget must be >= 1");
  xi.validate(pool);
  Stream stream(derive_seed(seed, {0xba7c4}));

  // Candidate batches are index lists into `points`.
  Matrix points;
  std::vector<std::vector<std::size_t>> batches(budget);
  std::vector<std::size_t> pool_rows;
  if (source.is_generator()) {
    points = sample_features(source.spec(), budget * batch_size, stream);
    for (std::size_t b = 0; b < budget; ++b) {
      batches[b].resize(batch_size);
      std::iota(batches[b].begin(), batches[b].end(), b * batch_size);
    }
  } else {
    pool_rows = source.available();
    if (pool_rows.size() < batch_size) throw std::invalid_argument("select_batch: label pool exhausted");
    points = source.data().subset(pool_rows).X;
    std::vector<std::size_t> idx(pool_rows.size());
    for (std::size_t b = 0; b < budget; ++b) {
      std::iota(idx.begin(), idx.end(), 0);
      // Partial Fisher-Yates: the first batch_size slots are the draw.
      for (std::size_t i = 0; i < batch_size; ++i) {
        const std::size_t j = i + stream.index(idx.size() - i);
        std::swap(idx[i], idx[j]);
      }
      batches[b].assign(idx.begin(), idx.begin() + static_cast<std::ptrdiff_t>(batch_size));
      std::sort(batches[b].begin(), batches[b].end());
    }
  }

  const auto table = kernels::omp::predict_all(pool, points);
  const auto var = kernels::omp::pointwise_variance(table, xi.model_probabilities());
  BatchChoice choice;
  choice.candidate_volatilities = kernels::omp::batch_means(var, batches);
  const auto& vols = choice.candidate_volatilities;

  if (gamma) {
    choice.threshold = *gamma;
  } else {
    auto sorted = vols;
    std::sort(sorted.begin(), sorted.end());
    const std::size_t m = sorted.size();
    choice.threshold = m % 2 ? sorted[m / 2] : 0.5 * (sorted[m / 2 - 1] + sorted[m / 2]);
  }
  std::size_t pick = budget;
  for (std::size_t b = 0; b < budget; ++b)
    if (vols[b] > choice.threshold) {
      pick = b;
      break;
    }
  if (pick == budget) pick = static_cast<std::size_t>(std::max_element(vols.begin(), vols.end()) - vols.begin());
  choice.candidate_index = pick;
  choice.volatility = vols[pick];

  if (source.is_generator()) {
    Matrix X(static_cast<Eigen::Index>(batch_size), points.cols());
    for (std::size_t i = 0; i < batch_size; ++i)
      X.row(static_cast<Eigen::Index>(i)) = points.row(static_cast<Eigen::Index>(batches[pick][i]));
    Stream labels(derive_seed(seed, {0x1abe1}));
    choice.batch.data = label_features(source.spec(), X, labels).data;
  } else {
    for (std::size_t i : batches[pick]) choice.batch.rows.push_back(pool_rows[i]);
    choice.batch.data = source.data().subset(choice.batch.rows);
  }
  return choice;
}

void SbsConfig::validate() const {
  if (steps < 1) throw std::invalid_argument("SbsConfig: b must be >= 1");
  if (batch_size < 2) throw std::invalid_argument("SbsConfig: batch size must be >= 2");
  if (!gamma.empty() && gamma.size() != static_cast<std::size_t>(steps - 1))
    throw std::invalid_argument("SbsConfig: gamma must have b-1 entries");
  for (double g : gamma)
    if (!(g >= 0.0)) throw std::invalid_argument("SbsConfig: gamma entries must be >= 0");
  if (candidate_budget < 1) throw std::invalid_argument("SbsConfig: candidate budget must be >= 1");
  bound.validate();
}

namespace {

// Distinct labelled points acquired so far. Pool rows are kept sorted by
// source index so that refits do not depend on acquisition order.
class SeenData {
public:
  explicit SeenData(const LabelSource& source) : source_(source) {}

  void add(const Acquisition& a) {
    if (source_.is_generator()) {
      const auto old = X_.rows();
      X_.conservativeResize(old + a.data.X.rows(), a.data.X.cols());
      Y_.conservativeResize(old + a.data.Y.rows(), a.data.Y.cols());
      X_.bottomRows(a.data.X.rows()) = a.data.X;
      Y_.bottomRows(a.data.Y.rows()) = a.data.Y;
    } else {
      rows_.insert(rows_.end(), a.rows.begin(), a.rows.end());
      std::sort(rows_.begin(), rows_.end());
      rows_.erase(std::unique(rows_.begin(), rows_.end()), rows_.end());
    }
  }

  LabeledDataset dataset() const {
    if (!source_.is_generator()) return source_.data().subset(rows_);
    LabeledDataset S;
    S.X = X_;
    S.Y = Y_;
    return S;
  }

private:
  const LabelSource& source_;
  Matrix X_, Y_;
  std::vector<std::size_t> rows_;
};

CandidatePool rebuild_pool(const CandidatePool& current, const LabeledDataset& seen,
                           const CandidateConfig& candidates) {
  auto gen = generate_candidates(seen, candidates);
  if (gen.pool.class_sizes() != current.class_sizes()) return current;
  return gen.pool;
}

} // namespace

SbsResult sbs_run(LabelSource source, const CandidateConfig& candidates, const SbsConfig& cfg,
                  std::uint64_t seed) {
  cfg.validate();
  if (!source.is_generator() && !source.replay()) {
    const std::size_t need = cfg.resolved_initial_size() + static_cast<std::size_t>(cfg.steps - 1) * cfg.batch_size;
    if (source.data().size() < need)
      throw std::invalid_argument("sbs_run: label pool smaller than the sampling plan");
  }

  SbsResult result;
  SeenData seen(source);

  Acquisition first = space_filling_design(source, cfg.resolved_initial_size(), derive_seed(seed, {1}));
  source.consume(first.rows);
  seen.add(first);
  const LabeledDataset seen0 = seen.dataset();
  CandidatePool pool = generate_candidates(seen0, candidates).pool;

  // The loss scale is fixed from the initial design for every step.
  BoundConfig bcfg = cfg.bound;
  bcfg.loss.clip_scale = resolve_clip_scale(cfg.bound.loss, first.data);

  BoundFit fit = minimize_bound(uniform_prior(pool), pool, first.data, bcfg);
  result.trace.push_back({first.data, fit.report, 0.0, 0.0});
  result.posteriors.push_back(fit.posterior);

  for (int i = 2; i <= cfg.steps; ++i) {
    if (cfg.refit_pool) pool = rebuild_pool(pool, seen.dataset(), candidates);
    std::optional<double> gamma;
    if (!cfg.gamma.empty()) gamma = cfg.gamma[static_cast<std::size_t>(i - 2)];
    BatchChoice choice = select_batch(fit.posterior, pool, source, cfg.batch_size, gamma,
                                      cfg.candidate_budget, derive_seed(seed, {static_cast<std::uint64_t>(i)}));
    source.consume(choice.batch.rows);
    seen.add(choice.batch);
    BoundFit next = minimize_bound(fit.posterior, pool, choice.batch.data, bcfg);
    result.trace.push_back({choice.batch.data, next.report, choice.threshold, choice.volatility});
    result.posteriors.push_back(next.posterior);
    fit = std::move(next);
  }

  result.step_pool = pool;
  if (cfg.refit_pool && cfg.steps > 1) pool = rebuild_pool(pool, seen.dataset(), candidates);
  result.pool = std::move(pool);
  result.posterior = std::move(fit.posterior);
  return result;
}

} // namespace pacbma
