#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snl/neighbors.hpp"
#include "snl/types.hpp"

namespace snl {

struct SNConfig {
  double sigma = 30.0;   ///< scale applied to distances inside the exponentials
  double lambda = 0.1;   ///< weight of the squeeze term
  std::size_t K = 8;     ///< support neighbours per anchor

  void validate() const;
};

struct AnchorTerms {
  std::size_t anchor = 0;
  double separation = 0.0;
  double squeeze = 0.0;
  std::size_t num_positives = 0;
  std::size_t num_negatives = 0;
  /// No positive among the K neighbours: the anchor contributes nothing.
  bool skipped = false;
};

struct LossResult {
  double total = 0.0;
  double separation = 0.0;
  double squeeze = 0.0;
  std::vector<AnchorTerms> per_anchor;
  std::size_t skipped_anchors = 0;

  std::size_t active_anchors() const { return per_anchor.size() - skipped_anchors; }
};

// Per-anchor values of one loss component plus their mean over the
// non-skipped anchors (0 when every anchor is skipped).
struct ComponentLoss {
  double mean = 0.0;
  std::vector<double> terms;
  std::vector<bool> skipped;
  std::size_t skipped_count = 0;
};

// Two algebraically equal ways of writing the separation denominator: one
// sum over the whole neighbourhood, or the positive and negative sums added.
// split_sum is evaluated as softplus(lse_N - lse_P), which keeps full relative
// precision when the positives dominate; it is the default.
enum class SeparationForm { neighborhood_sum, split_sum };

/// -log(sum_P exp(-sigma D) / sum_K exp(-sigma D)) per anchor, evaluated in
/// max-shifted log-sum-exp form. Anchors without positives are skipped;
/// anchors without negatives contribute exactly 0.
ComponentLoss separation_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods,
                              double sigma, SeparationForm form = SeparationForm::split_sum);

/// max_P D - min_P D per anchor; anchors without positives are skipped.
ComponentLoss squeeze_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods);

/// Combines already-computed components into separation + lambda * squeeze.
LossResult combine_sn_terms(const ComponentLoss& separation, const ComponentLoss& squeeze,
                            std::span<const SupportNeighborhood> neighborhoods, double lambda);

LossResult sn_loss(const Matrix& embeddings, std::span<const int> labels, const SNConfig& config);

/// Same loss over caller-supplied neighbourhoods (no K-NN search).
LossResult sn_loss(const Matrix& embeddings, std::span<const SupportNeighborhood> neighborhoods,
                   const SNConfig& config);

// --- baselines -------------------------------------------------------------

/// Mean cross-entropy of softmax(W x + b); W is classes x dim. Labels must be
/// class indices in [0, classes).
double softmax_loss(const Matrix& embeddings, std::span<const int> labels, const Matrix& weights,
                    const Vector& biases);

struct SoftmaxGradient {
  double loss = 0.0;
  Matrix embeddings;
  Matrix weights;
  Vector biases;
};

SoftmaxGradient softmax_loss_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                       const Matrix& weights, const Vector& biases);

/// Mean over anchors of [max_pos D - min_neg D + margin]_+ (squared distances).
double triplet_batch_hard(const Matrix& embeddings, std::span<const int> labels, double margin);

/// Mean of [D(i,p) - D(i,n) + margin]_+ over every valid (i, p, n).
double triplet_batch_all(const Matrix& embeddings, std::span<const int> labels, double margin);

struct LossAndGradient {
  double loss = 0.0;
  Matrix gradient;
};

LossAndGradient triplet_batch_hard_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                             double margin);
LossAndGradient triplet_batch_all_with_grad(const Matrix& embeddings, std::span<const int> labels,
                                            double margin);

}  // namespace snl
