#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "snl/losses.hpp"
#include "snl/neighbors.hpp"
#include "snl/types.hpp"

namespace snl {

// Closest and farthest positive of one anchor as selected in the forward pass.
struct SqueezeSelection {
  std::size_t closest = 0;
  std::size_t farthest = 0;
  /// max == min at selection time; the subgradient is taken as 0.
  bool tied = false;
};

// The discrete part of the SN loss, held fixed while differentiating: K-NN
// membership, the positive/negative split and the squeeze arg-max/arg-min.
struct FrozenStructure {
  std::vector<SupportNeighborhood> neighborhoods;
  std::vector<std::optional<SqueezeSelection>> squeeze;  ///< empty for skipped anchors
};

FrozenStructure freeze_structure(const Matrix& embeddings, std::span<const int> labels, std::size_t K);

struct GradientMatrix {
  Matrix values;  ///< dL/dx, one row per batch embedding
  FrozenStructure frozen;
};

// Deliberate corruptions of the analytic gradient, used as negative controls
// for the finite-difference check.
enum class GradientAblation {
  none,
  negate_positive_role,  ///< flip the sign of the positive-neighbour contribution
  drop_neighbor_roles,   ///< keep only each sample's contribution as an anchor
};

struct LossWithGradient {
  LossResult loss;
  GradientMatrix gradient;
};

/// Loss and dL/dx. Every sample accumulates its role as an anchor, as a
/// positive neighbour and as a negative neighbour of other anchors, and for
/// the squeeze term as the closest or farthest positive of other anchors.
LossWithGradient sn_loss_with_grad(const Matrix& embeddings, std::span<const int> labels, const SNConfig& config,
                                   GradientAblation ablation = GradientAblation::none);

LossWithGradient sn_loss_with_grad(const Matrix& embeddings, const FrozenStructure& frozen,
                                   const SNConfig& config, GradientAblation ablation = GradientAblation::none);

/// SN loss evaluated with the given structure held fixed (squeeze uses the
/// frozen closest/farthest pair instead of re-selecting).
double sn_loss_frozen(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config);

using LossEvaluator = std::function<double(const Matrix&)>;

/// Central differences (L(x + h e) - L(x - h e)) / 2h for every coordinate.
/// Throws NumericError if the loss is non-finite at a perturbed point.
Matrix finite_diff_grad(const LossEvaluator& loss, const Matrix& embeddings, double h);

// Arithmetic used by the SN finite-difference oracle. A double central
// difference cannot resolve coordinates whose derivative is ~1e-8 when the
// loss itself is O(10) (rounding noise is about eps * |L| / h), so the oracle
// evaluates its own copy of the frozen loss in binary128 by default.
enum class FdPrecision { binary64, binary128 };

/// Central differences of the frozen SN loss. The loss is re-evaluated by an
/// independent reference evaluator in the requested precision; the batch and
/// the step stay float64.
Matrix finite_diff_grad(const Matrix& embeddings, const FrozenStructure& frozen, const SNConfig& config,
                        double h, FdPrecision precision = FdPrecision::binary128);

/// max over entries of |a - f| / max(1e-8, |a| + |f|).
double max_relative_error(const Matrix& analytic, const Matrix& numeric);

struct GradcheckOptions {
  std::size_t trials = 100;
  std::uint64_t seed = 0;
  std::size_t batch_size = 16;
  std::size_t dimension = 8;
  std::size_t identities = 4;
  std::size_t K = 7;
  double h = 1e-6;
  double tolerance = 1e-5;
  /// Trial t uses sigmas[t % |sigmas|] and lambdas[(t / |sigmas|) % |lambdas|].
  std::vector<double> sigmas{0.5, 5.0, 30.0, 60.0};
  std::vector<double> lambdas{0.0, 0.1, 1.0};
  GradientAblation ablation = GradientAblation::none;
  FdPrecision precision = FdPrecision::binary128;

  void validate() const;
};

struct GradcheckTrial {
  std::size_t trial = 0;
  double sigma = 0.0;
  double lambda = 0.0;
  double max_rel_err = 0.0;
  bool pass = false;
};

struct GradcheckReport {
  std::vector<GradcheckTrial> trials;
  double max_rel_err = 0.0;
  double tolerance = 0.0;
  bool pass = false;

  std::string to_json() const;
  std::string to_text() const;
};

/// Random batch whose pairwise distances are pairwise separated by more than
/// `min_gap`, so no K-NN boundary or squeeze selection sits near a tie.
/// Identities are assigned in contiguous blocks (PK layout).
struct RandomBatch {
  Matrix embeddings;
  std::vector<int> labels;
};
RandomBatch tie_free_batch(Rng& rng, std::size_t batch_size, std::size_t dimension, std::size_t identities,
                           double min_gap = 1e-6);

GradcheckReport gradcheck(const GradcheckOptions& options);

}  // namespace snl
