#include "pacbma/models.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>
#include <string>

#include <boost/math/quadrature/exp_sinh.hpp>

#include "pacbma/kernels.hpp"

namespace pacbma {

int CandidateConfig::resolved_subset_size(std::size_t d) const {
  const int dd = static_cast<int>(d);
  const int s = max_subset_size > 0 ? max_subset_size : std::min(dd, 10);
  if (s < 1 || s > dd) throw std::invalid_argument("CandidateConfig: max_subset_size must be in [1, d]");
  return s;
}

double CandidateConfig::resolved_lambda(std::size_t n) const {
  return ridge_lambda >= 0.0 ? ridge_lambda : 1e-3 * static_cast<double>(n);
}

LinearPredictor fit_ridge(const LabeledDataset& S, std::span<const int> subset, double lambda) {
  if (S.size() == 0) throw std::invalid_argument("fit_ridge: empty dataset");
  if (S.response_dim() != 1) throw std::invalid_argument("fit_ridge: scalar response required");
  const auto n = static_cast<Eigen::Index>(S.size());
  const auto p = static_cast<Eigen::Index>(subset.size());

  LinearPredictor lp;
  lp.coefficients.assign(S.dim(), 0.0);
  lp.subset.assign(subset.begin(), subset.end());
  lp.ridge_lambda = lambda;

  const double ybar = S.Y.col(0).mean();
  if (p == 0) {
    lp.intercept = ybar;
    return lp;
  }
  Eigen::MatrixXd Xs(n, p);
  for (Eigen::Index c = 0; c < p; ++c) Xs.col(c) = S.X.col(subset[static_cast<std::size_t>(c)]);
  const Eigen::RowVectorXd xbar = Xs.colwise().mean();
  Xs.rowwise() -= xbar;
  const Eigen::VectorXd yc = S.Y.col(0).array() - ybar;

  Eigen::MatrixXd A = Xs.transpose() * Xs;
  A.diagonal().array() += lambda;
  const Eigen::VectorXd b = Xs.transpose() * yc;
  Eigen::VectorXd beta = A.ldlt().solve(b);
  if (!beta.allFinite()) beta = A.completeOrthogonalDecomposition().solve(b);

  lp.intercept = ybar - xbar.dot(beta);
  for (Eigen::Index c = 0; c < p; ++c)
    lp.coefficients[static_cast<std::size_t>(subset[static_cast<std::size_t>(c)])] = beta(c);
  return lp;
}

std::vector<int> rank_by_marginal_correlation(const LabeledDataset& S) {
  const auto d = static_cast<int>(S.dim());
  const Eigen::VectorXd y = S.Y.col(0).array() - S.Y.col(0).mean();
  const double sy = y.norm();
  std::vector<double> score(static_cast<std::size_t>(d), 0.0);
  for (int j = 0; j < d; ++j) {
    const Eigen::VectorXd x = S.X.col(j).array() - S.X.col(j).mean();
    const double sx = x.norm();
    if (sx > 0.0 && sy > 0.0) score[static_cast<std::size_t>(j)] = std::abs(x.dot(y)) / (sx * sy);
  }
  std::vector<int> order(static_cast<std::size_t>(d));
  std::iota(order.begin(), order.end(), 0);
  std::stable_sort(order.begin(), order.end(), [&](int a, int b) {
    return score[static_cast<std::size_t>(a)] > score[static_cast<std::size_t>(b)];
  });
  return order;
}

namespace {

std::string subset_label(std::span<const int> subset) {
  std::string s = "subset={";
  for (std::size_t i = 0; i < subset.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(subset[i] + 1);
  }
  return s + "}";
}

CandidateModel make_member(int k, int j, LinearPredictor lp) {
  CandidateModel m;
  m.class_id = k;
  m.member_id = j;
  m.metadata = subset_label(lp.subset) + " lambda=" + std::to_string(lp.ridge_lambda);
  m.predictor = std::move(lp);
  return m;
}

} // namespace

GeneratedPool generate_candidates(const LabeledDataset& S, const CandidateConfig& cfg) {
  S.validate();
  if (S.size() < 2) throw std::invalid_argument("generate_candidates: need n >= 2");
  if (S.is_classification()) return {generate_classifier_candidates(S), false};

  GeneratedPool out;
  out.pool.input_dim = S.dim();
  out.pool.output_dim = 1;
  const double lambda = cfg.resolved_lambda(S.size());

  const double y0 = S.Y(0, 0);
  if ((S.Y.col(0).array() == y0).all()) {
    out.constant_response = true;
    out.pool.classes.push_back({make_member(0, 0, fit_ridge(S, {}, lambda))});
    return out;
  }

  const int s = cfg.resolved_subset_size(S.dim());
  if (!cfg.ranking.empty()) {
    std::vector<int> sorted = cfg.ranking;
    std::sort(sorted.begin(), sorted.end());
    if (sorted.size() != S.dim() || std::adjacent_find(sorted.begin(), sorted.end()) != sorted.end() ||
        sorted.front() != 0 || sorted.back() != static_cast<int>(S.dim()) - 1)
      throw std::invalid_argument("generate_candidates: ranking must be a permutation of the features");
  }
  const auto order = cfg.ranking.empty() ? rank_by_marginal_correlation(S) : cfg.ranking;
  const auto n = static_cast<double>(S.size());
  out.pool.classes.resize(static_cast<std::size_t>(s) + 1);

  // Subsets are fit independently and written to their own slot.
#pragma omp parallel for schedule(dynamic)
  for (int size = 0; size <= s; ++size) {
    std::vector<int> subset(order.begin(), order.begin() + size);
    auto& cls = out.pool.classes[static_cast<std::size_t>(size)];
    if (cfg.mode == PoolMode::RankedSubsets) {
      cls.push_back(make_member(size, 0, fit_ridge(S, subset, lambda)));
    } else {
      for (std::size_t g = 0; g < cfg.lambda_grid.size(); ++g)
        cls.push_back(make_member(size, static_cast<int>(g), fit_ridge(S, subset, cfg.lambda_grid[g] * n)));
    }
  }
  return out;
}

CandidatePool refit_pool(const CandidatePool& pool, const LabeledDataset& S) {
  CandidatePool out = pool;
  for (auto& cls : out.classes) {
    for (auto& m : cls) {
      if (auto* lp = std::get_if<LinearPredictor>(&m.predictor))
        m.predictor = fit_ridge(S, lp->subset, lp->ridge_lambda);
    }
  }
  return out;
}

CandidatePool generate_classifier_candidates(const LabeledDataset& S,
                                             std::span<const double> temperatures) {
  S.validate();
  if (!S.is_classification()) throw std::invalid_argument("generate_classifier_candidates: one-hot response required");
  static const std::vector<double> kDefaultTemps = {0.5, 1.0, 2.0};
  if (temperatures.empty()) temperatures = kDefaultTemps;

  const std::size_t d = S.dim(), c = S.response_dim();
  std::vector<std::vector<int>> subsets;
  for (std::size_t j = 0; j < d; ++j) subsets.push_back({static_cast<int>(j)});
  if (d > 1) {
    subsets.emplace_back(d);
    std::iota(subsets.back().begin(), subsets.back().end(), 0);
  }

  const Eigen::RowVectorXd overall = S.X.colwise().mean();
  Matrix means = Matrix::Zero(static_cast<Eigen::Index>(c), S.X.cols());
  std::vector<double> counts(c, 0.0);
  for (std::size_t i = 0; i < S.size(); ++i) {
    const std::size_t label = argmax_first({S.Y.data() + i * c, c});
    means.row(static_cast<Eigen::Index>(label)) += S.X.row(static_cast<Eigen::Index>(i));
    counts[label] += 1.0;
  }
  for (std::size_t k = 0; k < c; ++k) {
    if (counts[k] > 0) means.row(static_cast<Eigen::Index>(k)) /= counts[k];
    else means.row(static_cast<Eigen::Index>(k)) = overall;
  }

  CandidatePool pool;
  pool.input_dim = d;
  pool.output_dim = c;
  for (std::size_t k = 0; k < subsets.size(); ++k) {
    std::vector<CandidateModel> cls;
    for (std::size_t t = 0; t < temperatures.size(); ++t) {
      CentroidPredictor cp;
      cp.features = subsets[k];
      cp.temperature = temperatures[t];
      for (std::size_t lab = 0; lab < c; ++lab) {
        std::vector<double> centre;
        for (int f : subsets[k]) centre.push_back(means(static_cast<Eigen::Index>(lab), f));
        cp.centroids.push_back(std::move(centre));
      }
      CandidateModel m;
      m.class_id = static_cast<int>(k);
      m.member_id = static_cast<int>(t);
      m.metadata = subset_label(subsets[k]) + " temperature=" + std::to_string(temperatures[t]);
      m.predictor = std::move(cp);
      cls.push_back(std::move(m));
    }
    pool.classes.push_back(std::move(cls));
  }
  return pool;
}

double estimate_sigma(const MixtureDistribution& xi, const CandidatePool& pool,
                      const LabeledDataset& S) {
  if (S.size() < 2) throw std::invalid_argument("estimate_sigma: need n >= 2");
  xi.validate(pool);
  const auto table = kernels::omp::predict_all(pool, S.X);
  const auto mean = kernels::omp::mixture_mean(table, xi.model_probabilities());
  const std::size_t r = S.response_dim();
  double ss = 0.0;
  for (std::size_t i = 0; i < S.size(); ++i)
    for (std::size_t o = 0; o < r; ++o) {
      const double e = S.Y(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(o)) - mean[i * r + o];
      ss += e * e;
    }
  return std::max(std::sqrt(ss / static_cast<double>(S.size())), 1e-6);
}

// ---------------------------------------------------------------------------

ErrorDensity::ErrorDensity(DensityKind kind, double nu) : kind_(kind), nu_(nu) {
  switch (kind_) {
    case DensityKind::Normal:
      log_norm_ = -0.5 * std::log(2.0 * std::numbers::pi);
      break;
    case DensityKind::StudentT:
      if (!(nu_ > 2.0)) throw std::invalid_argument("ErrorDensity: Student-t needs nu > 2");
      t_scale_ = std::sqrt((nu_ - 2.0) / nu_);
      log_norm_ = std::lgamma(0.5 * (nu_ + 1.0)) - std::lgamma(0.5 * nu_) -
                  0.5 * std::log(nu_ * std::numbers::pi) - std::log(t_scale_);
      break;
    case DensityKind::DoubleExponential:
      log_norm_ = std::log(std::sqrt(2.0) / 2.0);
      break;
  }
  boost::math::quadrature::exp_sinh<double> integrator;
  const double half = integrator.integrate([this](double t) { return density(t); }, 0.0,
                                           std::numeric_limits<double>::infinity());
  if (std::abs(2.0 * half - 1.0) > 1e-6)
    throw std::invalid_argument("ErrorDensity: density does not integrate to 1");
}

double ErrorDensity::log_density(double t) const {
  switch (kind_) {
    case DensityKind::Normal:
      return log_norm_ - 0.5 * t * t;
    case DensityKind::StudentT: {
      const double x = t / t_scale_;
      return log_norm_ - 0.5 * (nu_ + 1.0) * std::log1p(x * x / nu_);
    }
    case DensityKind::DoubleExponential:
      return log_norm_ - std::sqrt(2.0) * std::abs(t);
  }
  return log_norm_;
}

double ErrorDensity::density(double t) const { return std::exp(log_density(t)); }

double density_at(const ErrorDensity& q, double t) { return q.density(t); }

} // namespace pacbma
