#pragma once
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Dense>

namespace pacbma {

using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

/// Raised when a KL divergence is infinite because the posterior puts mass
/// where the prior has none.
class InfiniteDivergence : public std::domain_error {
public:
  using std::domain_error::domain_error;
};

// ---------------------------------------------------------------------------
// Predictors

/// intercept + <coefficients, x>; coefficients outside `subset` are exactly 0.
struct LinearPredictor {
  double intercept = 0.0;
  std::vector<double> coefficients;
  std::vector<int> subset;
  double ridge_lambda = 0.0;
};

/// Softmax over negative squared distances to class centroids, restricted to
/// `features`. Emits a probability vector with one entry per centroid.
struct CentroidPredictor {
  std::vector<int> features;
  std::vector<std::vector<double>> centroids;
  double temperature = 1.0;
};

/// Returns `value` for every input.
struct ConstantPredictor {
  std::vector<double> value;
};

using Predictor = std::variant<LinearPredictor, CentroidPredictor, ConstantPredictor>;

std::size_t output_dim(const Predictor& p);
void evaluate(const Predictor& p, std::span<const double> x, std::span<double> out);

struct CandidateModel {
  int class_id = 0;
  int member_id = 0;
  Predictor predictor;
  std::string metadata;
};

/// The hypothesis set: K nonempty classes of candidate models.
struct CandidatePool {
  std::vector<std::vector<CandidateModel>> classes;
  std::size_t input_dim = 0;
  std::size_t output_dim = 1;

  std::size_t num_classes() const { return classes.size(); }
  std::size_t num_models() const;
  std::vector<std::size_t> class_sizes() const;
  /// Checks K >= 1, nonempty classes, dense (class_id, member_id) and output
  /// dimensions. Throws std::invalid_argument.
  void validate() const;
};

/// xi = (w, Q_1..Q_K).
struct MixtureDistribution {
  std::vector<double> class_weights;
  std::vector<std::vector<double>> member_weights;

  std::size_t num_classes() const { return class_weights.size(); }
  /// Probability of each model in class-major order (w_k * Q_k[j]).
  std::vector<double> model_probabilities() const;
  std::vector<std::size_t> shape() const;
  /// Simplex checks at 1e-9. Throws std::invalid_argument.
  void validate() const;
  void validate(const CandidatePool& pool) const;
};

/// Rows are samples. Y has one column for regression and c one-hot columns
/// for classification.
struct LabeledDataset {
  Matrix X;
  Matrix Y;

  std::size_t size() const { return static_cast<std::size_t>(X.rows()); }
  std::size_t dim() const { return static_cast<std::size_t>(X.cols()); }
  std::size_t response_dim() const { return static_cast<std::size_t>(Y.cols()); }
  bool is_classification() const;
  std::span<const double> x(std::size_t i) const {
    return {X.data() + i * X.cols(), static_cast<std::size_t>(X.cols())};
  }
  void validate() const;
  LabeledDataset subset(std::span<const std::size_t> rows) const;
};

/// Squared error mapped into [0,1] as min(1, |y - h(x)|^2 / c^2).
/// clip_scale <= 0 means "resolve from the training set".
struct LossSpec {
  double clip_scale = 0.0;
};

/// c = max y - min y for regression (1 if the response is constant) and
/// sqrt(2) for one-hot responses, where |y - h|^2 <= 2.
double resolve_clip_scale(const LossSpec& loss, const LabeledDataset& S);

double clipped_loss(std::span<const double> y, std::span<const double> h, double clip_scale);

// ---------------------------------------------------------------------------
// Functionals

double kl_discrete(std::span<const double> p, std::span<const double> q);

/// KL(w || w0) + sum_k w_k KL(Q_k || Q0_k).
double mixture_kl(const MixtureDistribution& posterior, const MixtureDistribution& prior);

std::vector<double> predict(const MixtureDistribution& xi, const CandidatePool& pool,
                            std::span<const double> x);

/// 0-based argmax of predict(); ties go to the smallest index.
std::size_t predict_class(const MixtureDistribution& xi, const CandidatePool& pool,
                          std::span<const double> x);

std::size_t argmax_first(std::span<const double> v);

/// Exact mixture expectation of the mean clipped loss over S.
double empirical_risk(const MixtureDistribution& xi, const CandidatePool& pool,
                      const LabeledDataset& S, const LossSpec& loss);

/// Mean over rows of B of the exact mixture variance of h(x) (summed over
/// output coordinates).
double volatility(const MixtureDistribution& xi, const CandidatePool& pool, const Matrix& B);

} // namespace pacbma
