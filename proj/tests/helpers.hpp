#pragma once
#include <cmath>
#include <cstdint>
#include <vector>

#include "pacbma/core.hpp"
#include "pacbma/rng.hpp"

namespace testing {

using namespace pacbma;

/// Pool whose class k holds constant predictors with the given values.
inline CandidatePool constant_pool(const std::vector<std::vector<double>>& values, std::size_t d = 1) {
  CandidatePool pool;
  pool.input_dim = d;
  pool.output_dim = 1;
  for (std::size_t k = 0; k < values.size(); ++k) {
    std::vector<CandidateModel> cls;
    for (std::size_t j = 0; j < values[k].size(); ++j) {
      CandidateModel m;
      m.class_id = static_cast<int>(k);
      m.member_id = static_cast<int>(j);
      m.predictor = ConstantPredictor{{values[k][j]}};
      cls.push_back(m);
    }
    pool.classes.push_back(cls);
  }
  return pool;
}

/// Pool of singleton classes holding the given linear predictors (intercept, slope on x1).
inline CandidatePool linear_pool(const std::vector<std::pair<double, double>>& lines, std::size_t d = 1) {
  CandidatePool pool;
  pool.input_dim = d;
  for (std::size_t k = 0; k < lines.size(); ++k) {
    LinearPredictor lp;
    lp.intercept = lines[k].first;
    lp.coefficients.assign(d, 0.0);
    lp.coefficients[0] = lines[k].second;
    lp.subset = {0};
    CandidateModel m;
    m.class_id = static_cast<int>(k);
    m.predictor = lp;
    pool.classes.push_back({m});
  }
  return pool;
}

inline std::vector<double> random_simplex(Stream& s, std::size_t n, bool sparse = false) {
  std::vector<double> p(n);
  double z = 0.0;
  for (auto& v : p) {
    v = -std::log(s.uniform_open());
    if (sparse && s.uniform() < 0.3) v = 0.0;
    z += v;
  }
  if (z == 0.0) {
    p[0] = 1.0;
    return p;
  }
  for (auto& v : p) v /= z;
  return p;
}

inline MixtureDistribution random_mixture(Stream& s, const std::vector<std::size_t>& shape) {
  MixtureDistribution xi;
  xi.class_weights = random_simplex(s, shape.size());
  for (std::size_t k : shape) xi.member_weights.push_back(random_simplex(s, k));
  return xi;
}

inline LabeledDataset dataset(const std::vector<std::vector<double>>& X, const std::vector<double>& y) {
  LabeledDataset S;
  S.X.resize(static_cast<Eigen::Index>(X.size()), static_cast<Eigen::Index>(X.empty() ? 0 : X[0].size()));
  S.Y.resize(static_cast<Eigen::Index>(y.size()), 1);
  for (std::size_t i = 0; i < X.size(); ++i) {
    for (std::size_t j = 0; j < X[i].size(); ++j) S.X(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) = X[i][j];
    S.Y(static_cast<Eigen::Index>(i), 0) = y[i];
  }
  return S;
}

} // namespace testing
