#include "snl/gradients.hpp"

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <sstream>

#include <json.hpp>

#include "snl/error.hpp"
#include "snl/numeric.hpp"

namespace snl {

namespace {

// grad_a += coeff_a * dD(a, b)/dx_a and grad_b += coeff_b * dD(a, b)/dx_b.
void add_pair_grad(Matrix& grad, const Matrix& x, std::size_t a, std::size_t b, double coeff_a, double coeff_b) {
  const auto ia = static_cast<Eigen::Index>(a);
  const auto ib = static_cast<Eigen::Index>(b);
  const auto diff = (x.row(ia) - x.row(ib)).eval();
  if (coeff_a != 0.0) grad.row(ia) += (2.0 * coeff_a) * diff;
  if (coeff_b != 0.0) grad.row(ib) -= (2.0 * coeff_b) * diff;
}

void check_frozen(const Matrix& embeddings, const FrozenStructure& frozen) {
  const auto m = static_cast<std::size_t>(embeddings.rows());
  if (frozen.neighborhoods.size() != m || frozen.squeeze.size() != m) {
    throw ShapeError("frozen structure covers " + std::to_string(frozen.neighborhoods.size()) +
                     " anchors, batch has " + std::to_string(m));
  }
}

}  // namespace

FrozenStructure freeze_structure(const Matrix& embeddings, std::span<const int> labels, std::size_t K) {
  if (labels.size() != static_cast<std::size_t>(embeddings.rows())) {
    throw ShapeError(std::to_string(labels.size()) + " labels for " + std::to_string(embeddings.rows()) +
                     " embeddings");
  }
  const auto dist = pairwise_sq_distances(embeddings);
  FrozenStructure frozen;
  frozen.neighborhoods = support_neighbors(dist, labels, K);
  frozen.squeeze.resize(frozen.neighborhoods.size());
  for (const auto& nb : frozen.neighborhoods) {
    if (nb.positives.empty()) continue;
    // knn order is ascending distance with index tie-break, and positives
    // keep that order.
    SqueezeSelection sel;
    sel.closest = nb.positives.front();
    sel.farthest = nb.positives.back();
    sel.tied = dist(nb.anchor, sel.closest) == dist(nb.anchor, sel.farthest);
    frozen.squeeze[nb.anchor] = sel;
  }
  return frozen;
}

double sn_loss_frozen(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config) {
  config.validate();
  check_frozen(embeddings, frozen);
  const auto sep = separation_loss(embeddings, frozen.neighborhoods, config.sigma);

  long double squeeze_sum = 0.0L;
  for (std::size_t i = 0; i < frozen.squeeze.size(); ++i) {
    const auto& sel = frozen.squeeze[i];
    if (!sel) continue;
    squeeze_sum += squared_distance(embeddings, i, sel->farthest) - squared_distance(embeddings, i, sel->closest);
  }
  const auto active = frozen.neighborhoods.size() - sep.skipped_count;
  const double squeeze = active > 0 ? static_cast<double>(squeeze_sum / static_cast<long double>(active)) : 0.0;
  return sep.mean + config.lambda * squeeze;
}

LossWithGradient sn_loss_with_grad(const Matrix& embeddings, const FrozenStructure& frozen,
                                   const SNConfig& config, GradientAblation ablation) {
  config.validate();
  check_frozen(embeddings, frozen);
  const auto& neighborhoods = frozen.neighborhoods;

  LossWithGradient out;
  out.loss = sn_loss(embeddings, std::span<const SupportNeighborhood>(neighborhoods), config);
  out.gradient.values = Matrix::Zero(embeddings.rows(), embeddings.cols());
  out.gradient.frozen = frozen;

  const auto active = out.loss.active_anchors();
  if (active == 0) return out;
  const double scale = 1.0 / static_cast<double>(active);
  const double sigma = config.sigma;
  const bool neighbor_roles = ablation != GradientAblation::drop_neighbor_roles;
  const double positive_sign = ablation == GradientAblation::negate_positive_role ? -1.0 : 1.0;

  Matrix& grad = out.gradient.values;
  std::vector<double> pos_logits;
  std::vector<double> neg_logits;
  for (std::size_t i = 0; i < neighborhoods.size(); ++i) {
    const auto& nb = neighborhoods[i];
    if (nb.positives.empty()) continue;

    if (!nb.negatives.empty()) {
      // term = softplus(delta), delta = lse_N(-sigma D) - lse_P(-sigma D).
      // dterm/dD(i,p) =  sigma * u_p * r   for positives (u: softmax over P)
      // dterm/dD(i,n) = -sigma * w_n       for negatives (w: softmax over K)
      // with r = S_N / S_K = logistic(delta). Writing the positive
      // coefficient as u_p * r avoids the cancellation in u_p - w_p.
      pos_logits.clear();
      neg_logits.clear();
      for (auto p : nb.positives) pos_logits.push_back(-sigma * squared_distance(embeddings, i, p));
      for (auto n : nb.negatives) neg_logits.push_back(-sigma * squared_distance(embeddings, i, n));
      const double lse_pos = log_sum_exp(pos_logits);
      const double lse_neg = log_sum_exp(neg_logits);
      const double delta = lse_neg - lse_pos;
      const double lse_all = lse_pos + softplus(delta);
      const double r = logistic(delta);

      for (std::size_t q = 0; q < nb.positives.size(); ++q) {
        const double coeff = scale * sigma * r * std::exp(pos_logits[q] - lse_pos);
        const double neighbor_coeff = neighbor_roles ? positive_sign * coeff : 0.0;
        add_pair_grad(grad, embeddings, i, nb.positives[q], coeff, neighbor_coeff);
      }
      for (std::size_t q = 0; q < nb.negatives.size(); ++q) {
        const double coeff = -scale * sigma * std::exp(neg_logits[q] - lse_all);
        const double neighbor_coeff = neighbor_roles ? coeff : 0.0;
        add_pair_grad(grad, embeddings, i, nb.negatives[q], coeff, neighbor_coeff);
      }
    }

    const auto& sel = frozen.squeeze[i];
    if (config.lambda != 0.0 && sel && !sel->tied) {
      const double coeff = scale * config.lambda;
      const double neighbor_coeff = neighbor_roles ? coeff : 0.0;
      add_pair_grad(grad, embeddings, i, sel->farthest, coeff, neighbor_coeff);
      add_pair_grad(grad, embeddings, i, sel->closest, -coeff, -neighbor_coeff);
    }
  }
  return out;
}

LossWithGradient sn_loss_with_grad(const Matrix& embeddings, std::span<const int> labels, const SNConfig& config,
                                   GradientAblation ablation) {
  config.validate();
  return sn_loss_with_grad(embeddings, freeze_structure(embeddings, labels, config.K), config, ablation);
}

double max_relative_error(const Matrix& analytic, const Matrix& numeric) {
  if (analytic.rows() != numeric.rows() || analytic.cols() != numeric.cols()) {
    throw ShapeError("gradient shapes differ");
  }
  double worst = 0.0;
  for (Eigen::Index i = 0; i < analytic.rows(); ++i) {
    for (Eigen::Index k = 0; k < analytic.cols(); ++k) {
      const double a = analytic(i, k);
      const double f = numeric(i, k);
      worst = std::max(worst, std::abs(a - f) / std::max(1e-8, std::abs(a) + std::abs(f)));
    }
  }
  return worst;
}

void GradcheckOptions::validate() const {
  if (trials < 1) throw ValidationError("gradcheck needs at least one trial");
  if (identities < 2 || batch_size < 2 * identities) {
    throw ValidationError("gradcheck batch needs at least two identities with two samples each");
  }
  if (K < 1 || K + 1 > batch_size) throw ValidationError("K must lie in [1, batch_size - 1]");
  if (dimension < 1) throw ValidationError("dimension must be positive");
  if (!(h > 0.0)) throw ValidationError("h must be positive");
  if (sigmas.empty() || lambdas.empty()) throw ValidationError("sigma and lambda grids must be non-empty");
  for (double s : sigmas) {
    if (!(s > 0.0)) throw ValidationError("sigma must be positive");
  }
  for (double l : lambdas) {
    if (!(l >= 0.0)) throw ValidationError("lambda must be non-negative");
  }
}

RandomBatch tie_free_batch(Rng& rng, std::size_t batch_size, std::size_t dimension, std::size_t identities,
                           double min_gap) {
  const double stddev = 1.0 / std::sqrt(static_cast<double>(dimension));
  std::normal_distribution<double> normal(0.0, stddev);
  RandomBatch batch;
  batch.labels.resize(batch_size);
  const auto per_identity = (batch_size + identities - 1) / identities;
  for (std::size_t i = 0; i < batch_size; ++i) batch.labels[i] = static_cast<int>(i / per_identity);

  batch.embeddings.resize(static_cast<Eigen::Index>(batch_size), static_cast<Eigen::Index>(dimension));
  std::vector<double> distances;
  while (true) {
    for (Eigen::Index i = 0; i < batch.embeddings.rows(); ++i) {
      for (Eigen::Index k = 0; k < batch.embeddings.cols(); ++k) batch.embeddings(i, k) = normal(rng);
    }
    distances.clear();
    for (std::size_t i = 0; i < batch_size; ++i) {
      for (std::size_t j = i + 1; j < batch_size; ++j) distances.push_back(squared_distance(batch.embeddings, i, j));
    }
    std::sort(distances.begin(), distances.end());
    bool separated = true;
    for (std::size_t r = 1; r < distances.size() && separated; ++r) {
      separated = distances[r] - distances[r - 1] > min_gap;
    }
    if (separated) return batch;
  }
}

GradcheckReport gradcheck(const GradcheckOptions& options) {
  options.validate();
  Rng rng(options.seed);
  GradcheckReport report;
  report.tolerance = options.tolerance;
  report.pass = true;
  const auto ns = options.sigmas.size();
  const auto nl = options.lambdas.size();
  for (std::size_t t = 0; t < options.trials; ++t) {
    SNConfig config;
    config.sigma = options.sigmas[t % ns];
    config.lambda = options.lambdas[(t / ns) % nl];
    config.K = options.K;

    const auto batch = tie_free_batch(rng, options.batch_size, options.dimension, options.identities);
    const auto analytic = sn_loss_with_grad(batch.embeddings, batch.labels, config, options.ablation);
    const auto numeric =
        finite_diff_grad(batch.embeddings, analytic.gradient.frozen, config, options.h, options.precision);

    GradcheckTrial trial;
    trial.trial = t;
    trial.sigma = config.sigma;
    trial.lambda = config.lambda;
    trial.max_rel_err = max_relative_error(analytic.gradient.values, numeric);
    trial.pass = trial.max_rel_err <= options.tolerance;
    report.pass = report.pass && trial.pass;
    report.max_rel_err = std::max(report.max_rel_err, trial.max_rel_err);
    report.trials.push_back(trial);
  }
  return report;
}

std::string GradcheckReport::to_json() const {
  nlohmann::ordered_json j;
  j["pass"] = pass;
  j["max_rel_err"] = max_rel_err;
  j["tolerance"] = tolerance;
  auto& arr = j["trials"] = nlohmann::ordered_json::array();
  for (const auto& t : trials) {
    arr.push_back({{"trial", t.trial}, {"sigma", t.sigma}, {"lambda", t.lambda},
                   {"max_rel_err", t.max_rel_err}, {"pass", t.pass}});
  }
  return j.dump(2) + "\n";
}

std::string GradcheckReport::to_text() const {
  std::ostringstream out;
  char line[128];
  for (const auto& t : trials) {
    std::snprintf(line, sizeof line, "trial %3zu  sigma=%-5g lambda=%-4g max_rel_err=%.3e  %s\n", t.trial, t.sigma,
                  t.lambda, t.max_rel_err, t.pass ? "PASS" : "FAIL");
    out << line;
  }
  std::snprintf(line, sizeof line, "gradcheck: %zu trials, max_rel_err=%.3e, tolerance=%.1e -> %s\n",
                trials.size(), max_rel_err, tolerance, pass ? "PASS" : "FAIL");
  out << line;
  return out.str();
}

}  // namespace snl
