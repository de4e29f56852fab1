#include <quadmath.h>

#include <cmath>
#include <string>
#include <vector>

#include "snl/error.hpp"
#include "snl/gradients.hpp"

namespace snl {

namespace {

inline double exp_of(double x) { return std::exp(x); }
inline double log_of(double x) { return std::log(x); }
inline bool finite(double x) { return std::isfinite(x); }
inline __float128 exp_of(__float128 x) { return expq(x); }
inline __float128 log_of(__float128 x) { return logq(x); }
inline bool finite(__float128 x) { return finiteq(x) != 0; }

// Straight transcription of the frozen objective, written independently of
// the production evaluator: each separation term is
//   log(S_P + S_N) - log(S_P),  S_X = sum_{x in X} exp(-sigma D - shift),
// and each squeeze term is D(i, farthest) - D(i, closest).
template <typename T>
class ReferenceLoss {
 public:
  ReferenceLoss(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config)
      : rows_(static_cast<std::size_t>(embeddings.rows())),
        cols_(static_cast<std::size_t>(embeddings.cols())),
        x_(rows_ * cols_),
        frozen_(frozen),
        sigma_(config.sigma),
        lambda_(config.lambda) {
    for (std::size_t i = 0; i < rows_; ++i) {
      for (std::size_t k = 0; k < cols_; ++k) x_[i * cols_ + k] = static_cast<T>(embeddings(i, k));
    }
  }

  T& at(std::size_t i, std::size_t k) { return x_[i * cols_ + k]; }

  T operator()() const {
    T separation = 0;
    T squeeze = 0;
    std::size_t active = 0;
    for (std::size_t i = 0; i < rows_; ++i) {
      const auto& nb = frozen_.neighborhoods[i];
      if (nb.positives.empty()) continue;
      ++active;
      if (!nb.negatives.empty()) {
        T shift = -sigma_ * dist(i, nb.positives.front());
        T s_pos = 0;
        T s_neg = 0;
        for (auto p : nb.positives) s_pos += exp_of(-sigma_ * dist(i, p) - shift);
        for (auto n : nb.negatives) s_neg += exp_of(-sigma_ * dist(i, n) - shift);
        separation += log_of(s_pos + s_neg) - log_of(s_pos);
      }
      const auto& sel = frozen_.squeeze[i];
      if (sel) squeeze += dist(i, sel->farthest) - dist(i, sel->closest);
    }
    if (active == 0) return T(0);
    return (separation + lambda_ * squeeze) / static_cast<T>(active);
  }

  std::size_t rows() const { return rows_; }
  std::size_t cols() const { return cols_; }

 private:
  T dist(std::size_t a, std::size_t b) const {
    T acc = 0;
    for (std::size_t k = 0; k < cols_; ++k) {
      const T d = x_[a * cols_ + k] - x_[b * cols_ + k];
      acc += d * d;
    }
    return acc;
  }

  std::size_t rows_;
  std::size_t cols_;
  std::vector<T> x_;
  const FrozenStructure& frozen_;
  T sigma_;
  T lambda_;
};

template <typename T>
Matrix central_differences(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config,
                           double h) {
  ReferenceLoss<T> loss(embeddings, frozen, config);
  Matrix out(embeddings.rows(), embeddings.cols());
  const T step = static_cast<T>(h);
  for (std::size_t j = 0; j < loss.rows(); ++j) {
    for (std::size_t k = 0; k < loss.cols(); ++k) {
      const T x = loss.at(j, k);
      loss.at(j, k) = x + step;
      const T up = loss();
      loss.at(j, k) = x - step;
      const T down = loss();
      loss.at(j, k) = x;
      if (!finite(up) || !finite(down)) {
        throw NumericError("non-finite loss when perturbing entry (" + std::to_string(j) + ", " +
                           std::to_string(k) + ")");
      }
      out(static_cast<Eigen::Index>(j), static_cast<Eigen::Index>(k)) =
          static_cast<double>((up - down) / (2 * step));
    }
  }
  return out;
}

}  // namespace

Matrix finite_diff_grad(const LossEvaluator& loss, const Matrix& embeddings, double h) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  Matrix out(embeddings.rows(), embeddings.cols());
  Matrix probe = embeddings;
  for (Eigen::Index j = 0; j < embeddings.rows(); ++j) {
    for (Eigen::Index k = 0; k < embeddings.cols(); ++k) {
      const double x = embeddings(j, k);
      probe(j, k) = x + h;
      const double up = loss(probe);
      probe(j, k) = x - h;
      const double down = loss(probe);
      probe(j, k) = x;
      if (!std::isfinite(up) || !std::isfinite(down)) {
        throw NumericError("non-finite loss when perturbing entry (" + std::to_string(j) + ", " +
                           std::to_string(k) + ")");
      }
      out(j, k) = (up - down) / (2.0 * h);
    }
  }
  return out;
}

Matrix finite_diff_grad(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config,
                        double h, FdPrecision precision) {
  if (!(h > 0.0)) throw ValidationError("finite-difference step must be positive");
  config.validate();
  if (frozen.neighborhoods.size() != static_cast<std::size_t>(embeddings.rows()) ||
      frozen.squeeze.size() != frozen.neighborhoods.size()) {
    throw ShapeError("frozen structure does not match the batch");
  }
  if (precision == FdPrecision::binary64) return central_differences<double>(embeddings, frozen, config, h);
  return central_differences<__float128>(embeddings, frozen, config, h);
}

}  // namespace snl
