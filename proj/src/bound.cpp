#include "pacbma/bound.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "pacbma/kernels.hpp"

namespace pacbma {

void BoundConfig::validate() const {
  if (!(delta > 0.0 && delta < 1.0)) throw std::invalid_argument("BoundConfig: delta must be in (0,1)");
  if (!(optimizer.step_size > 0.0)) throw std::invalid_argument("BoundConfig: step size must be > 0");
  if (optimizer.max_iterations < 1) throw std::invalid_argument("BoundConfig: max iterations must be >= 1");
}

double bound_penalty(double kl_total, std::size_t n, double delta) {
  if (n < 2) throw std::invalid_argument("pac_bound: need n >= 2");
  const double nd = static_cast<double>(n);
  return std::sqrt((kl_total + std::log(nd / delta)) / (2.0 * (nd - 1.0)));
}

BoundReport pac_bound_from_losses(const MixtureDistribution& posterior,
                                  const MixtureDistribution& prior,
                                  std::span<const double> losses, std::size_t n, double delta) {
  if (n < 2) throw std::invalid_argument("pac_bound: need n >= 2");
  const auto probs = posterior.model_probabilities();
  if (probs.size() != losses.size()) throw std::invalid_argument("pac_bound: loss vector size mismatch");
  BoundReport r;
  r.n = n;
  for (std::size_t m = 0; m < probs.size(); ++m) r.empirical_risk += probs[m] * losses[m];
  r.kl_total = mixture_kl(posterior, prior);
  r.penalty = bound_penalty(r.kl_total, n, delta);
  r.total = r.empirical_risk + r.penalty;
  return r;
}

std::vector<double> model_losses(const CandidatePool& pool, const LabeledDataset& S,
                                 const LossSpec& loss) {
  if (S.dim() != pool.input_dim || S.response_dim() != pool.output_dim)
    throw std::invalid_argument("dataset shape does not match pool");
  const auto table = kernels::omp::predict_all(pool, S.X);
  return kernels::omp::mean_losses(table, S.Y, resolve_clip_scale(loss, S));
}

BoundReport pac_bound(const MixtureDistribution& posterior, const MixtureDistribution& prior,
                      const CandidatePool& pool, const LabeledDataset& S, const BoundConfig& cfg) {
  cfg.validate();
  if (S.size() < 2) throw std::invalid_argument("pac_bound: need n >= 2");
  posterior.validate(pool);
  prior.validate(pool);
  const auto losses = model_losses(pool, S, cfg.loss);
  return pac_bound_from_losses(posterior, prior, losses, S.size(), cfg.delta);
}

MixtureDistribution uniform_prior(const CandidatePool& pool) {
  pool.validate();
  MixtureDistribution xi;
  const double K = static_cast<double>(pool.num_classes());
  xi.class_weights.assign(pool.num_classes(), 1.0 / K);
  for (const auto& cls : pool.classes)
    xi.member_weights.emplace_back(cls.size(), 1.0 / static_cast<double>(cls.size()));
  return xi;
}

namespace {

constexpr double kNegInf = -std::numeric_limits<double>::infinity();

// Softmax and log-softmax over logits; -inf logits map to exactly zero.
void softmax(const double* logits, std::size_t n, double* out, double* log_out) {
  double mx = kNegInf;
  for (std::size_t i = 0; i < n; ++i) mx = std::max(mx, logits[i]);
  double z = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    out[i] = logits[i] == kNegInf ? 0.0 : std::exp(logits[i] - mx);
    z += out[i];
  }
  const double lz = std::log(z);
  for (std::size_t i = 0; i < n; ++i) {
    out[i] /= z;
    log_out[i] = logits[i] == kNegInf ? kNegInf : logits[i] - mx - lz;
  }
}

// Posterior in flat form: class weights first, then every Q_k back to back.
struct FlatState {
  std::vector<double> p, logp;
  double value = 0.0;
};

// Objective over logits, with the prior's zero entries pinned.
class BoundObjective {
public:
  BoundObjective(const MixtureDistribution& prior, std::span<const double> losses, std::size_t n,
                 double delta)
      : losses_(losses.begin(), losses.end()) {
    const double nd = static_cast<double>(n);
    log_term_ = std::log(nd / delta);
    denom_ = 2.0 * (nd - 1.0);
    K_ = prior.num_classes();
    offsets_.resize(K_ + 1);
    std::size_t off = K_;
    for (std::size_t k = 0; k < K_; ++k) {
      offsets_[k] = off;
      off += prior.member_weights[k].size();
    }
    offsets_[K_] = off;
    log_prior_.reserve(off);
    for (double w : prior.class_weights) log_prior_.push_back(w > 0.0 ? std::log(w) : kNegInf);
    for (const auto& q : prior.member_weights)
      for (double v : q) log_prior_.push_back(v > 0.0 ? std::log(v) : kNegInf);
    class_risk_.resize(K_);
    class_kl_.resize(K_);
  }

  std::size_t num_params() const { return offsets_[K_]; }
  const std::vector<double>& initial_logits() const { return log_prior_; }

  void evaluate(const std::vector<double>& th, FlatState& s) {
    s.p.resize(num_params());
    s.logp.resize(num_params());
    softmax(th.data(), K_, s.p.data(), s.logp.data());
    for (std::size_t k = 0; k < K_; ++k)
      softmax(th.data() + offsets_[k], offsets_[k + 1] - offsets_[k], s.p.data() + offsets_[k],
              s.logp.data() + offsets_[k]);
    double risk = 0.0;
    kl_ = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      double a = 0.0, kq = 0.0;
      for (std::size_t j = offsets_[k]; j < offsets_[k + 1]; ++j) {
        if (s.p[j] <= 0.0) continue;
        a += s.p[j] * losses_[j - K_];
        kq += s.p[j] * (s.logp[j] - log_prior_[j]);
      }
      class_risk_[k] = a;
      class_kl_[k] = kq;
      const double w = s.p[k];
      risk += w * a;
      if (w > 0.0) kl_ += w * (s.logp[k] - log_prior_[k] + kq);
    }
    s.value = risk + std::sqrt((kl_ + log_term_) / denom_);
  }

  // Gradient with respect to the logits at the state last passed to
  // evaluate() (it reuses that call's per-class sums); pinned logits get 0.
  void gradient(const FlatState& s, std::vector<double>& grad) {
    grad.assign(num_params(), 0.0);
    // d sqrt((kl + L)/D) / d kl; strictly finite since L = ln(n/delta) > 0.
    const double g = 0.5 / std::sqrt((kl_ + log_term_) * denom_);
    double avg = 0.0;
    for (std::size_t k = 0; k < K_; ++k) {
      const double w = s.p[k];
      if (w <= 0.0) continue;
      grad[k] = class_risk_[k] + g * (s.logp[k] - log_prior_[k] + 1.0 + class_kl_[k]);
      avg += w * grad[k];
    }
    for (std::size_t k = 0; k < K_; ++k) {
      const double w = s.p[k];
      grad[k] = w > 0.0 ? w * (grad[k] - avg) : 0.0;
      double qavg = 0.0;
      for (std::size_t j = offsets_[k]; j < offsets_[k + 1]; ++j) {
        if (s.p[j] <= 0.0) continue;
        grad[j] = w * (losses_[j - K_] + g * (s.logp[j] - log_prior_[j] + 1.0));
        qavg += s.p[j] * grad[j];
      }
      for (std::size_t j = offsets_[k]; j < offsets_[k + 1]; ++j) grad[j] = s.p[j] * (grad[j] - qavg);
    }
  }

  MixtureDistribution to_mixture(const FlatState& s) const {
    MixtureDistribution xi;
    xi.class_weights.assign(s.p.begin(), s.p.begin() + static_cast<std::ptrdiff_t>(K_));
    for (std::size_t k = 0; k < K_; ++k)
      xi.member_weights.emplace_back(s.p.begin() + static_cast<std::ptrdiff_t>(offsets_[k]),
                                     s.p.begin() + static_cast<std::ptrdiff_t>(offsets_[k + 1]));
    return xi;
  }

private:
  std::vector<double> losses_;
  std::vector<double> log_prior_;
  std::vector<std::size_t> offsets_;
  std::vector<double> class_risk_, class_kl_;
  std::size_t K_ = 0;
  double kl_ = 0.0;
  double log_term_ = 0.0;
  double denom_ = 1.0;
};

} // namespace

BoundFit minimize_bound_from_losses(const MixtureDistribution& prior,
                                    std::span<const double> losses, std::size_t n,
                                    const BoundConfig& cfg) {
  cfg.validate();
  prior.validate();
  if (n < 2) throw std::invalid_argument("pac_bound: need n >= 2");
  if (losses.size() != prior.model_probabilities().size())
    throw std::invalid_argument("pac_bound: loss vector size mismatch");
  BoundObjective obj(prior, losses, n, cfg.delta);

  std::vector<double> theta = obj.initial_logits();
  FlatState current, cand;
  obj.evaluate(theta, current);
  if (!std::isfinite(current.value)) throw NonFiniteObjective("minimize_bound: non-finite objective at the prior");
  std::vector<double> grad, trial(theta.size());
  obj.gradient(current, grad);
  double step = cfg.optimizer.step_size;
  int it = 0;
  while (it < cfg.optimizer.max_iterations) {
    ++it;
    for (std::size_t i = 0; i < theta.size(); ++i)
      trial[i] = theta[i] == kNegInf ? kNegInf : theta[i] - step * grad[i];
    obj.evaluate(trial, cand);
    if (!std::isfinite(cand.value)) throw NonFiniteObjective("minimize_bound: non-finite objective");
    if (cand.value > current.value) {
      step *= 0.5;
      if (step < 1e-300) break;
      continue;
    }
    const double rel = std::abs(current.value - cand.value) / std::max(std::abs(current.value), 1e-300);
    theta.swap(trial);
    std::swap(current, cand);
    if (rel < cfg.optimizer.tolerance) break;
    obj.gradient(current, grad);
  }

  BoundFit fit;
  fit.posterior = obj.to_mixture(current);
  fit.report = pac_bound_from_losses(fit.posterior, prior, losses, n, cfg.delta);
  fit.iterations = it;
  return fit;
}

BoundFit minimize_bound(const MixtureDistribution& prior, const CandidatePool& pool,
                        const LabeledDataset& S, const BoundConfig& cfg) {
  cfg.validate();
  if (S.size() < 2) throw std::invalid_argument("pac_bound: need n >= 2");
  prior.validate(pool);
  const auto losses = model_losses(pool, S, cfg.loss);
  return minimize_bound_from_losses(prior, losses, S.size(), cfg);
}

} // namespace pacbma
