#include "pacbma/datagen.hpp"

#include <cmath>
#include <numbers>
#include <stdexcept>

namespace pacbma {

std::string to_string(SyntheticKind kind) {
  switch (kind) {
    case SyntheticKind::Linear: return "linear";
    case SyntheticKind::Nonlinear1: return "nonlinear-1";
    case SyntheticKind::Nonlinear2: return "nonlinear-2";
    case SyntheticKind::ClassificationToy: return "classification-toy";
  }
  return "linear";
}

SyntheticKind parse_synthetic_kind(const std::string& s) {
  if (s == "linear") return SyntheticKind::Linear;
  if (s == "nonlinear-1") return SyntheticKind::Nonlinear1;
  if (s == "nonlinear-2") return SyntheticKind::Nonlinear2;
  if (s == "classification-toy") return SyntheticKind::ClassificationToy;
  throw std::invalid_argument("unknown synthetic kind '" + s + "'");
}

void SyntheticSpec::validate() const {
  if (n < 1) throw std::invalid_argument("SyntheticSpec: n must be >= 1");
  if (d < 1) throw std::invalid_argument("SyntheticSpec: d must be >= 1");
  if (!(rho >= 0.0 && rho < 1.0)) throw std::invalid_argument("SyntheticSpec: rho must be in [0,1)");
  if (!(sigma > 0.0)) throw std::invalid_argument("SyntheticSpec: sigma must be > 0");
  switch (kind) {
    case SyntheticKind::Linear:
      if (beta.size() != d) throw std::invalid_argument("SyntheticSpec: |beta| must equal d");
      break;
    case SyntheticKind::Nonlinear1:
    case SyntheticKind::Nonlinear2:
    case SyntheticKind::ClassificationToy:
      if (d < 2) throw std::invalid_argument("SyntheticSpec: this kind needs d >= 2");
      break;
  }
}

Eigen::MatrixXd ar_covariance(std::size_t d, double rho) {
  const auto dd = static_cast<Eigen::Index>(d);
  Eigen::MatrixXd S(dd, dd);
  for (Eigen::Index i = 0; i < dd; ++i)
    for (Eigen::Index j = 0; j < dd; ++j)
      S(i, j) = i == j ? 1.0 : std::pow(rho, static_cast<double>(std::abs(i - j)));
  return S;
}

Eigen::MatrixXd ar_cholesky(std::size_t d, double rho) {
  Eigen::LLT<Eigen::MatrixXd> llt(ar_covariance(d, rho));
  return llt.matrixL();
}

namespace {

// Blob centres: equilateral triangle of side 4 centred on the origin.
const double kBlob[3][2] = {
    {0.0, 4.0 / std::numbers::sqrt3},
    {-2.0, -2.0 / std::numbers::sqrt3},
    {2.0, -2.0 / std::numbers::sqrt3},
};

std::vector<double> class_posterior(std::span<const double> x) {
  std::vector<double> p(3);
  double mx = -INFINITY;
  for (int c = 0; c < 3; ++c) {
    const double a = x[0] - kBlob[c][0], b = x[1] - kBlob[c][1];
    p[static_cast<std::size_t>(c)] = -0.5 * (a * a + b * b);
    mx = std::max(mx, p[static_cast<std::size_t>(c)]);
  }
  double z = 0.0;
  for (double& v : p) {
    v = std::exp(v - mx);
    z += v;
  }
  for (double& v : p) v /= z;
  return p;
}

} // namespace

double true_function(const SyntheticSpec& spec, std::span<const double> x) {
  switch (spec.kind) {
    case SyntheticKind::Linear: {
      double v = spec.intercept;
      for (std::size_t j = 0; j < spec.d; ++j) v += spec.beta[j] * x[j];
      return v;
    }
    case SyntheticKind::Nonlinear1:
      return spec.intercept + std::sin(x[0]) + std::cos(x[1]);
    case SyntheticKind::Nonlinear2:
      return spec.intercept + std::sin(x[0] + x[1]);
    case SyntheticKind::ClassificationToy:
      break;
  }
  throw std::invalid_argument("true_function: classification has no regression function");
}

Matrix sample_features(const SyntheticSpec& spec, std::size_t count, Stream& stream) {
  const auto d = static_cast<Eigen::Index>(spec.d);
  Matrix X(static_cast<Eigen::Index>(count), d);
  if (spec.kind == SyntheticKind::ClassificationToy) {
    for (Eigen::Index i = 0; i < X.rows(); ++i) {
      const std::size_t c = stream.index(3);
      for (Eigen::Index j = 0; j < d; ++j) X(i, j) = stream.normal();
      X(i, 0) += kBlob[c][0];
      X(i, 1) += kBlob[c][1];
    }
    return X;
  }
  const Eigen::MatrixXd L = ar_cholesky(spec.d, spec.rho);
  Eigen::VectorXd z(d);
  for (Eigen::Index i = 0; i < X.rows(); ++i) {
    for (Eigen::Index j = 0; j < d; ++j) z(j) = stream.normal();
    X.row(i) = (L * z).transpose();
  }
  return X;
}

void feature_marginals(const SyntheticSpec& spec, std::vector<double>& mean, std::vector<double>& sd) {
  mean.assign(spec.d, 0.0);
  sd.assign(spec.d, 1.0);
  if (spec.kind == SyntheticKind::ClassificationToy) {
    // Moment-matched marginals of the equal-weight blob mixture.
    for (int j = 0; j < 2; ++j) {
      double m2 = 0.0;
      for (const auto& c : kBlob) m2 += c[j] * c[j] / 3.0;
      sd[static_cast<std::size_t>(j)] = std::sqrt(1.0 + m2);
    }
  }
}

SyntheticData label_features(const SyntheticSpec& spec, const Matrix& X, Stream& stream) {
  SyntheticData out;
  out.data.X = X;
  const auto n = X.rows();
  if (spec.kind == SyntheticKind::ClassificationToy) {
    out.data.Y = Matrix::Zero(n, 3);
    for (Eigen::Index i = 0; i < n; ++i) {
      const auto p = class_posterior({X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())});
      const double u = stream.uniform();
      std::size_t c = 0;
      double acc = p[0];
      while (c + 1 < p.size() && u >= acc) acc += p[++c];
      out.data.Y(i, static_cast<Eigen::Index>(c)) = 1.0;
    }
    return out;
  }
  out.data.Y.resize(n, 1);
  out.f.resize(static_cast<std::size_t>(n));
  out.noise.resize(static_cast<std::size_t>(n));
  for (Eigen::Index i = 0; i < n; ++i) {
    const auto r = static_cast<std::size_t>(i);
    out.f[r] = true_function(spec, {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())});
    out.noise[r] = stream.normal();
    out.data.Y(i, 0) = out.f[r] + spec.sigma * out.noise[r];
  }
  return out;
}

SyntheticData generate(const SyntheticSpec& spec) {
  spec.validate();
  Stream features(derive_seed(spec.seed, {1}));
  Stream labels(derive_seed(spec.seed, {2}));
  if (spec.kind == SyntheticKind::ClassificationToy) {
    // Blob membership is the label; draw both from the same stream.
    SyntheticData out;
    out.data.X.resize(static_cast<Eigen::Index>(spec.n), static_cast<Eigen::Index>(spec.d));
    out.data.Y = Matrix::Zero(static_cast<Eigen::Index>(spec.n), 3);
    for (Eigen::Index i = 0; i < out.data.X.rows(); ++i) {
      const std::size_t c = features.index(3);
      for (Eigen::Index j = 0; j < out.data.X.cols(); ++j) out.data.X(i, j) = features.normal();
      out.data.X(i, 0) += kBlob[c][0];
      out.data.X(i, 1) += kBlob[c][1];
      out.data.Y(i, static_cast<Eigen::Index>(c)) = 1.0;
    }
    return out;
  }
  const Matrix X = sample_features(spec, spec.n, features);
  return label_features(spec, X, labels);
}

std::vector<SyntheticData> task_family(const SyntheticSpec& base, std::size_t m, std::uint64_t seed) {
  if (m < 1) throw std::invalid_argument("task_family: m must be >= 1");
  std::vector<SyntheticData> out(m);
#pragma omp parallel for schedule(static)
  for (std::int64_t t = 0; t < static_cast<std::int64_t>(m); ++t) {
    SyntheticSpec s = base;
    s.seed = derive_seed(seed, {static_cast<std::uint64_t>(t)});
    out[static_cast<std::size_t>(t)] = generate(s);
  }
  return out;
}

SyntheticSpec linear_model_spec(int model, double rho, double sigma, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = SyntheticKind::Linear;
  s.rho = rho;
  s.sigma = sigma;
  s.seed = seed;
  switch (model) {
    case 1:
      s.n = 50;
      s.d = 8;
      s.beta = {3, 1.5, 0, 0, 2, 0, 0, 0};
      break;
    case 2:
      s.n = 150;
      s.d = 50;
      s.beta.assign(50, 0.0);
      s.beta[0] = 1;
      s.beta[1] = 2;
      s.beta[2] = 3;
      s.beta[3] = 2;
      s.beta[4] = 0.75;
      break;
    case 3:
      s.n = 50;
      s.d = 50;
      s.beta.assign(50, 0.0);
      for (int j = 0; j < 6; ++j) s.beta[static_cast<std::size_t>(j)] = 1.0 / (j + 1);
      break;
    default:
      throw std::invalid_argument("linear_model_spec: model must be 1, 2 or 3");
  }
  return s;
}

SyntheticSpec nonlinear_model_spec(int model, std::uint64_t seed) {
  if (model != 1 && model != 2) throw std::invalid_argument("nonlinear_model_spec: model must be 1 or 2");
  SyntheticSpec s;
  s.kind = model == 1 ? SyntheticKind::Nonlinear1 : SyntheticKind::Nonlinear2;
  s.n = 50;
  s.d = 8;
  s.sigma = 1.0;
  s.rho = 0.0;
  s.seed = seed;
  return s;
}

SyntheticSpec transfer_target_spec(double sigma, std::uint64_t seed) {
  SyntheticSpec s;
  s.kind = SyntheticKind::Linear;
  s.n = 20;
  s.d = 10;
  s.beta = {1, -1, 0, 0, 0.5, 0, 0, 0, 0, 0};
  s.sigma = sigma;
  s.rho = 0.0;
  s.seed = seed;
  return s;
}

std::vector<SyntheticSpec> transfer_history_specs(std::uint64_t seed) {
  std::vector<SyntheticSpec> out;
  for (int model = 1; model <= 3; ++model) {
    SyntheticSpec s = linear_model_spec(model, 0.0, 1.0, derive_seed(seed, {static_cast<std::uint64_t>(model)}));
    s.beta.resize(10, 0.0);
    s.d = 10;
    out.push_back(s);
  }
  return out;
}

} // namespace pacbma
