#include "pacbma/core.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "pacbma/kernels.hpp"

namespace pacbma {

namespace {

constexpr double kSimplexTol = 1e-9;

void check_simplex(std::span<const double> v, const char* what) {
  if (v.empty()) throw std::invalid_argument(std::string(what) + ": empty distribution");
  double s = 0.0;
  for (double x : v) {
    if (!(x >= 0.0) || !std::isfinite(x))
      throw std::invalid_argument(std::string(what) + ": negative or non-finite weight");
    s += x;
  }
  if (std::abs(s - 1.0) > kSimplexTol)
    throw std::invalid_argument(std::string(what) + ": weights do not sum to 1");
}

} // namespace

// ---------------------------------------------------------------------------
// Predictors

std::size_t output_dim(const Predictor& p) {
  struct Visitor {
    std::size_t operator()(const LinearPredictor&) const { return 1; }
    std::size_t operator()(const CentroidPredictor& c) const { return c.centroids.size(); }
    std::size_t operator()(const ConstantPredictor& c) const { return c.value.size(); }
  };
  return std::visit(Visitor{}, p);
}

void evaluate(const Predictor& p, std::span<const double> x, std::span<double> out) {
  struct Visitor {
    std::span<const double> x;
    std::span<double> out;
    void operator()(const LinearPredictor& lp) const {
      if (x.size() != lp.coefficients.size())
        throw std::invalid_argument("evaluate: feature dimension mismatch");
      double v = lp.intercept;
      for (int j : lp.subset) v += lp.coefficients[static_cast<std::size_t>(j)] * x[static_cast<std::size_t>(j)];
      out[0] = v;
    }
    void operator()(const CentroidPredictor& cp) const {
      const std::size_t c = cp.centroids.size();
      double best = -INFINITY;
      for (std::size_t k = 0; k < c; ++k) {
        double d2 = 0.0;
        for (std::size_t f = 0; f < cp.features.size(); ++f) {
          const auto col = static_cast<std::size_t>(cp.features[f]);
          if (col >= x.size()) throw std::invalid_argument("evaluate: feature dimension mismatch");
          const double diff = x[col] - cp.centroids[k][f];
          d2 += diff * diff;
        }
        out[k] = -d2 / (2.0 * cp.temperature);
        best = std::max(best, out[k]);
      }
      double z = 0.0;
      for (std::size_t k = 0; k < c; ++k) {
        out[k] = std::exp(out[k] - best);
        z += out[k];
      }
      for (std::size_t k = 0; k < c; ++k) out[k] /= z;
    }
    void operator()(const ConstantPredictor& cp) const {
      std::copy(cp.value.begin(), cp.value.end(), out.begin());
    }
  };
  if (out.size() != output_dim(p)) throw std::invalid_argument("evaluate: output size mismatch");
  std::visit(Visitor{x, out}, p);
}

// ---------------------------------------------------------------------------
// Pool / mixture / dataset

std::size_t CandidatePool::num_models() const {
  std::size_t n = 0;
  for (const auto& c : classes) n += c.size();
  return n;
}

std::vector<std::size_t> CandidatePool::class_sizes() const {
  std::vector<std::size_t> s;
  s.reserve(classes.size());
  for (const auto& c : classes) s.push_back(c.size());
  return s;
}

void CandidatePool::validate() const {
  if (classes.empty()) throw std::invalid_argument("CandidatePool: K must be >= 1");
  for (std::size_t k = 0; k < classes.size(); ++k) {
    if (classes[k].empty()) throw std::invalid_argument("CandidatePool: empty model class");
    for (std::size_t j = 0; j < classes[k].size(); ++j) {
      const auto& m = classes[k][j];
      if (m.class_id != static_cast<int>(k) || m.member_id != static_cast<int>(j))
        throw std::invalid_argument("CandidatePool: (class_id, member_id) not dense");
      if (pacbma::output_dim(m.predictor) != output_dim)
        throw std::invalid_argument("CandidatePool: predictor output dimension mismatch");
    }
  }
}

std::vector<double> MixtureDistribution::model_probabilities() const {
  std::vector<double> p;
  for (std::size_t k = 0; k < class_weights.size(); ++k)
    for (double q : member_weights[k]) p.push_back(class_weights[k] * q);
  return p;
}

std::vector<std::size_t> MixtureDistribution::shape() const {
  std::vector<std::size_t> s;
  for (const auto& q : member_weights) s.push_back(q.size());
  return s;
}

void MixtureDistribution::validate() const {
  check_simplex(class_weights, "class weights");
  if (member_weights.size() != class_weights.size())
    throw std::invalid_argument("MixtureDistribution: member weight count != K");
  for (const auto& q : member_weights) check_simplex(q, "member weights");
}

void MixtureDistribution::validate(const CandidatePool& pool) const {
  validate();
  if (shape() != pool.class_sizes())
    throw std::invalid_argument("MixtureDistribution: shape does not match pool");
}

bool LabeledDataset::is_classification() const {
  if (Y.cols() < 2) return false;
  for (Eigen::Index i = 0; i < Y.rows(); ++i) {
    int ones = 0;
    for (Eigen::Index c = 0; c < Y.cols(); ++c) {
      const double v = Y(i, c);
      if (v == 1.0) ++ones;
      else if (v != 0.0) return false;
    }
    if (ones != 1) return false;
  }
  return true;
}

void LabeledDataset::validate() const {
  if (X.rows() < 1) throw std::invalid_argument("LabeledDataset: n must be >= 1");
  if (Y.rows() != X.rows()) throw std::invalid_argument("LabeledDataset: row count mismatch");
  if (Y.cols() < 1) throw std::invalid_argument("LabeledDataset: missing response");
  if (Y.cols() > 1 && !is_classification())
    throw std::invalid_argument("LabeledDataset: multi-column response is not one-hot");
}

LabeledDataset LabeledDataset::subset(std::span<const std::size_t> rows) const {
  LabeledDataset out;
  out.X.resize(static_cast<Eigen::Index>(rows.size()), X.cols());
  out.Y.resize(static_cast<Eigen::Index>(rows.size()), Y.cols());
  for (std::size_t r = 0; r < rows.size(); ++r) {
    out.X.row(static_cast<Eigen::Index>(r)) = X.row(static_cast<Eigen::Index>(rows[r]));
    out.Y.row(static_cast<Eigen::Index>(r)) = Y.row(static_cast<Eigen::Index>(rows[r]));
  }
  return out;
}

double resolve_clip_scale(const LossSpec& loss, const LabeledDataset& S) {
  if (loss.clip_scale > 0.0) return loss.clip_scale;
  if (S.response_dim() > 1) return std::sqrt(2.0);
  const double range = S.Y.col(0).maxCoeff() - S.Y.col(0).minCoeff();
  return range > 0.0 ? range : 1.0;
}

double clipped_loss(std::span<const double> y, std::span<const double> h, double c) {
  double se = 0.0;
  for (std::size_t o = 0; o < y.size(); ++o) {
    const double d = y[o] - h[o];
    se += d * d;
  }
  return std::min(1.0, se / (c * c));
}

// ---------------------------------------------------------------------------
// Functionals

double kl_discrete(std::span<const double> p, std::span<const double> q) {
  if (p.size() != q.size()) throw std::invalid_argument("kl_discrete: dimension mismatch");
  double kl = 0.0;
  for (std::size_t j = 0; j < p.size(); ++j) {
    if (p[j] <= 0.0) continue;
    if (q[j] <= 0.0) throw InfiniteDivergence("kl_discrete: p has mass where q has none");
    kl += p[j] * std::log(p[j] / q[j]);
  }
  // Rounding can leave a tiny negative value for near-identical inputs.
  return std::max(kl, 0.0);
}

double mixture_kl(const MixtureDistribution& post, const MixtureDistribution& prior) {
  if (post.shape() != prior.shape()) throw std::invalid_argument("mixture_kl: shape mismatch");
  double kl = kl_discrete(post.class_weights, prior.class_weights);
  for (std::size_t k = 0; k < post.num_classes(); ++k) {
    if (post.class_weights[k] <= 0.0) continue;
    kl += post.class_weights[k] * kl_discrete(post.member_weights[k], prior.member_weights[k]);
  }
  return kl;
}

std::vector<double> predict(const MixtureDistribution& xi, const CandidatePool& pool,
                            std::span<const double> x) {
  xi.validate(pool);
  if (x.size() != pool.input_dim) throw std::invalid_argument("predict: feature dimension mismatch");
  std::vector<double> out(pool.output_dim, 0.0), buf(pool.output_dim);
  for (std::size_t k = 0; k < pool.num_classes(); ++k) {
    for (std::size_t j = 0; j < pool.classes[k].size(); ++j) {
      const double p = xi.class_weights[k] * xi.member_weights[k][j];
      if (p == 0.0) continue;
      evaluate(pool.classes[k][j].predictor, x, buf);
      for (std::size_t o = 0; o < out.size(); ++o) out[o] += p * buf[o];
    }
  }
  return out;
}

std::size_t argmax_first(std::span<const double> v) {
  std::size_t best = 0;
  for (std::size_t i = 1; i < v.size(); ++i)
    if (v[i] > v[best]) best = i;
  return best;
}

std::size_t predict_class(const MixtureDistribution& xi, const CandidatePool& pool,
                          std::span<const double> x) {
  return argmax_first(predict(xi, pool, x));
}

double empirical_risk(const MixtureDistribution& xi, const CandidatePool& pool,
                      const LabeledDataset& S, const LossSpec& loss) {
  if (S.size() == 0) throw std::invalid_argument("empirical_risk: empty dataset");
  xi.validate(pool);
  if (S.dim() != pool.input_dim || S.response_dim() != pool.output_dim)
    throw std::invalid_argument("empirical_risk: dataset shape does not match pool");
  const auto table = kernels::omp::predict_all(pool, S.X);
  const auto losses = kernels::omp::mean_losses(table, S.Y, resolve_clip_scale(loss, S));
  const auto probs = xi.model_probabilities();
  double r = 0.0;
  for (std::size_t m = 0; m < losses.size(); ++m) r += probs[m] * losses[m];
  return std::clamp(r, 0.0, 1.0);
}

double volatility(const MixtureDistribution& xi, const CandidatePool& pool, const Matrix& B) {
  if (B.rows() == 0) throw std::invalid_argument("volatility: empty feature set");
  if (static_cast<std::size_t>(B.cols()) != pool.input_dim)
    throw std::invalid_argument("volatility: feature dimension mismatch");
  xi.validate(pool);
  const auto table = kernels::omp::predict_all(pool, B);
  const auto probs = xi.model_probabilities();
  const auto var = kernels::omp::pointwise_variance(table, probs);
  double s = 0.0;
  for (double v : var) s += v;
  return s / static_cast<double>(var.size());
}

} // namespace pacbma
