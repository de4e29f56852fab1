#include "snl/losses.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <string>

#include "snl/error.hpp"
#include "snl/numeric.hpp"

namespace snl {

namespace {

void check_neighborhoods(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods) {
  const auto m = static_cast<std::size_t>(embeddings.rows());
  if (neighborhoods.size() != m) {
    throw ShapeError(std::to_string(neighborhoods.size()) + " neighbourhoods for " + std::to_string(m) +
                     " embeddings");
  }
  for (std::size_t i = 0; i < m; ++i) {
    const auto& nb = neighborhoods[i];
    if (nb.anchor != i) throw ShapeError("neighbourhood " + std::to_string(i) + " belongs to another anchor");
    for (auto j : nb.knn) {
      if (j >= m || j == i) throw ShapeError("neighbourhood " + std::to_string(i) + " has an invalid member");
    }
  }
}

void check_labels(const Matrix& embeddings, std::span<const int> labels) {
  if (labels.size() != static_cast<std::size_t>(embeddings.rows())) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(embeddings.rows()) +
                     " embeddings");
  }
}

// Per anchor index sets of a triplet batch, validated against the
// batch-level contract (every identity at least twice, at least two ids).
struct TripletRoles {
  std::vector<std::vector<std::size_t>> positives;
  std::vector<std::vector<std::size_t>> negatives;
};

TripletRoles triplet_roles(const Matrix& embeddings, std::span<const int> labels) {
  check_labels(embeddings, labels);
  require_finite_rows(embeddings);
  std::map<int, std::size_t> counts;
  for (int y : labels) ++counts[y];
  for (const auto& [y, n] : counts) {
    if (n < 2) throw ContractError("identity " + std::to_string(y) + " appears once in the batch");
  }
  if (counts.size() < 2) throw ContractError("triplet losses need at least two identities in the batch");

  const auto m = labels.size();
  TripletRoles roles{std::vector<std::vector<std::size_t>>(m), std::vector<std::vector<std::size_t>>(m)};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      if (j == i) continue;
      (labels[j] == labels[i] ? roles.positives[i] : roles.negatives[i]).push_back(j);
    }
  }
  return roles;
}

// grad += coeff * dD(a, b)/dx for D = |x_a - x_b|^2.
void add_distance_grad(Matrix& grad, const Matrix& x, std::size_t a, std::size_t b, double coeff) {
  const auto ia = static_cast<Eigen::Index>(a);
  const auto ib = static_cast<Eigen::Index>(b);
  const auto diff = (x.row(ia) - x.row(ib)).eval();
  grad.row(ia) += 2.0 * coeff * diff;
  grad.row(ib) -= 2.0 * coeff * diff;
}

}  // namespace

void SNConfig::validate() const {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) throw ValidationError("sigma must be positive");
  if (!(lambda >= 0.0) || !std::isfinite(lambda)) throw ValidationError("lambda must be non-negative");
  if (K < 1) throw ValidationError("K must be at least 1");
}

ComponentLoss separation_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods,
                              double sigma, SeparationForm form) {
  check_neighborhoods(embeddings, neighborhoods);
  if (!(sigma > 0.0)) throw ValidationError("sigma must be positive");

  const auto m = neighborhoods.size();
  ComponentLoss out;
  out.terms.assign(m, 0.0);
  out.skipped.assign(m, false);

  std::vector<double> pos, neg, all;
  long double sum = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& nb = neighborhoods[i];
    if (nb.positives.empty()) {
      out.skipped[i] = true;
      ++out.skipped_count;
      continue;
    }
    if (nb.negatives.empty()) continue;  // ratio is exactly one

    pos.clear();
    neg.clear();
    all.clear();
    for (auto p : nb.positives) pos.push_back(-sigma * squared_distance(embeddings, i, p));
    for (auto n : nb.negatives) neg.push_back(-sigma * squared_distance(embeddings, i, n));

    double term = 0.0;
    if (form == SeparationForm::neighborhood_sum) {
      for (auto s : nb.knn) all.push_back(-sigma * squared_distance(embeddings, i, s));
      // Shift both sums by their own maximum and subtract the shifts first, so
      // they cancel exactly when the nearest neighbour is a positive.
      const double shift_all = *std::max_element(all.begin(), all.end());
      const double shift_pos = *std::max_element(pos.begin(), pos.end());
      double acc_all = 0.0;
      double acc_pos = 0.0;
      for (double v : all) acc_all += std::exp(v - shift_all);
      for (double v : pos) acc_pos += std::exp(v - shift_pos);
      term = (shift_all - shift_pos) + (std::log(acc_all) - std::log(acc_pos));
    } else {
      // log((S_P + S_N) / S_P) = softplus(log S_N - log S_P)
      term = softplus(log_sum_exp(neg) - log_sum_exp(pos));
    }
    // The positive sum is part of the denominator, so the term is >= 0 up to
    // rounding; clamp the rounding away.
    term = std::max(0.0, term);
    out.terms[i] = term;
    sum += term;
  }
  const auto active = m - out.skipped_count;
  out.mean = active > 0 ? static_cast<double>(sum / static_cast<long double>(active)) : 0.0;
  return out;
}

ComponentLoss squeeze_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods) {
  check_neighborhoods(embeddings, neighborhoods);
  const auto m = neighborhoods.size();
  ComponentLoss out;
  out.terms.assign(m, 0.0);
  out.skipped.assign(m, false);

  long double sum = 0.0L;
  for (std::size_t i = 0; i < m; ++i) {
    const auto& nb = neighborhoods[i];
    if (nb.positives.empty()) {
      out.skipped[i] = true;
      ++out.skipped_count;
      continue;
    }
    double lo = std::numeric_limits<double>::infinity();
    double hi = -std::numeric_limits<double>::infinity();
    for (auto p : nb.positives) {
      const double d = squared_distance(embeddings, i, p);
      lo = std::min(lo, d);
      hi = std::max(hi, d);
    }
    out.terms[i] = hi - lo;
    sum += hi - lo;
  }
  const auto active = m - out.skipped_count;
  out.mean = active > 0 ? static_cast<double>(sum / static_cast<long double>(active)) : 0.0;
  return out;
}

LossResult combine_sn_terms(const ComponentLoss& separation, const ComponentLoss& squeeze,
                            std::span<const SupportNeighborhood> neighborhoods, double lambda) {
  LossResult out;
  out.separation = separation.mean;
  out.squeeze = squeeze.mean;
  out.total = separation.mean + lambda * squeeze.mean;
  out.skipped_anchors = separation.skipped_count;
  out.per_anchor.reserve(neighborhoods.size());
  for (std::size_t i = 0; i < neighborhoods.size(); ++i) {
    const auto& nb = neighborhoods[i];
    out.per_anchor.push_back({i, separation.terms[i], squeeze.terms[i], nb.positives.size(),
                              nb.negatives.size(), separation.skipped[i]});
  }
  return out;
}

LossResult sn_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods,
                   const SNConfig& config) {
  config.validate();
  const auto sep = separation_loss(embeddings, neighborhoods, config.sigma);
  const auto sqz = squeeze_loss(embeddings, neighborhoods);
  return combine_sn_terms(sep, sqz, neighborhoods, config.lambda);
}

LossResult sn_loss(const Matrix& embeddings, std::span<const int> labels, const SNConfig& config) {
  config.validate();
  check_labels(embeddings, labels);
  const auto dist = pairwise_sq_distances(embeddings);
  const auto neighborhoods = support_neighbors(dist, labels, config.K);
  return sn_loss(embeddings, neighborhoods, config);
}

SoftmaxGradient softmax_loss_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                       const Matrix& weights, const Vector& biases) {
  check_labels(embeddings, labels);
  if (weights.cols() != embeddings.cols() || biases.size() != weights.rows()) {
    throw ShapeError("classifier is " + std::to_string(weights.rows()) + "x" + std::to_string(weights.cols()) +
                     " with " + std::to_string(biases.size()) + " biases, embeddings have dimension " +
                     std::to_string(embeddings.cols()));
  }
  if (!weights.allFinite() || !biases.allFinite()) throw NumericError("classifier parameters are not finite");
  require_finite_rows(embeddings);
  const auto classes = weights.rows();
  for (std::size_t i = 0; i < labels.size(); ++i) {
    if (labels[i] < 0 || labels[i] >= classes) {
      throw LabelError("label " + std::to_string(labels[i]) + " of sample " + std::to_string(i) +
                       " outside [0, " + std::to_string(classes) + ")");
    }
  }

  const auto n = embeddings.rows();
  SoftmaxGradient out;
  out.embeddings = Matrix::Zero(n, embeddings.cols());
  out.weights = Matrix::Zero(weights.rows(), weights.cols());
  out.biases = Vector::Zero(classes);
  if (n == 0) return out;

  const double scale = 1.0 / static_cast<double>(n);
  // running mean: exact when every sample has the same loss (zero parameters)
  double mean = 0.0;
  Vector logits(classes);
  Vector prob(classes);
  for (Eigen::Index i = 0; i < n; ++i) {
    logits = weights * embeddings.row(i).transpose() + biases;
    const double lse = log_sum_exp(std::span<const double>(logits.data(), static_cast<std::size_t>(classes)));
    const int y = labels[static_cast<std::size_t>(i)];
    mean += (lse - logits[y] - mean) / static_cast<double>(i + 1);

    prob = (logits.array() - lse).exp().matrix();
    prob[y] -= 1.0;
    prob *= scale;
    out.embeddings.row(i) = (weights.transpose() * prob).transpose();
    out.weights += prob * embeddings.row(i);
    out.biases += prob;
  }
  out.loss = mean;
  return out;
}

double softmax_loss(const Matrix& embeddings, std::span<const int> labels, const Matrix& weights,
                    const Vector& biases) {
  return softmax_loss_with_grad(embeddings, labels, weights, biases).loss;
}

LossAndGradient triplet_batch_hard_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                             double margin) {
  const auto roles = triplet_roles(embeddings, labels);
  const auto dist = pairwise_sq_distances(embeddings);
  const auto m = labels.size();

  LossAndGradient out{0.0, Matrix::Zero(embeddings.rows(), embeddings.cols())};
  const double scale = 1.0 / static_cast<double>(m);
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    std::size_t hard_pos = roles.positives[i].front();
    for (auto p : roles.positives[i]) {
      if (dist(i, p) > dist(i, hard_pos)) hard_pos = p;
    }
    std::size_t hard_neg = roles.negatives[i].front();
    for (auto n : roles.negatives[i]) {
      if (dist(i, n) < dist(i, hard_neg)) hard_neg = n;
    }
    const double value = dist(i, hard_pos) - dist(i, hard_neg) + margin;
    if (value > 0.0) {
      sum += value;
      add_distance_grad(out.gradient, embeddings, i, hard_pos, scale);
      add_distance_grad(out.gradient, embeddings, i, hard_neg, -scale);
    }
  }
  out.loss = sum * scale;
  return out;
}

LossAndGradient triplet_batch_all_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                            double margin) {
  const auto roles = triplet_roles(embeddings, labels);
  const auto dist = pairwise_sq_distances(embeddings);
  const auto m = labels.size();

  std::size_t count = 0;
  for (std::size_t i = 0; i < m; ++i) count += roles.positives[i].size() * roles.negatives[i].size();
  const double scale = 1.0 / static_cast<double>(count);

  LossAndGradient out{0.0, Matrix::Zero(embeddings.rows(), embeddings.cols())};
  double sum = 0.0;
  for (std::size_t i = 0; i < m; ++i) {
    for (auto p : roles.positives[i]) {
      double pos_coeff = 0.0;
      for (auto n : roles.negatives[i]) {
        const double value = dist(i, p) - dist(i, n) + margin;
        if (value > 0.0) {
          sum += value;
          pos_coeff += scale;
          add_distance_grad(out.gradient, embeddings, i, n, -scale);
        }
      }
      if (pos_coeff != 0.0) add_distance_grad(out.gradient, embeddings, i, p, pos_coeff);
    }
  }
  out.loss = sum * scale;
  return out;
}

double triplet_batch_hard(const Matrix& embeddings, std::span<const int> labels, double margin) {
  return triplet_batch_hard_with_grad(embeddings, labels, margin).loss;
}

double triplet_batch_all(const Matrix& embeddings, std::span<const int> labels, double margin) {
  return triplet_batch_all_with_grad(embeddings, labels, margin).loss;
}

}  // namespace snl
