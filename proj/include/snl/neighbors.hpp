#pragma once

#include <cstddef>
#include <span>
#include <vector>

#include "snl/types.hpp"

namespace snl {

// Squared Euclidean distances between all batch rows. Symmetric with a zero
// diagonal by construction.
struct DistanceMatrix {
  Matrix values;

  std::size_t size() const { return static_cast<std::size_t>(values.rows()); }
  double operator()(std::size_t i, std::size_t j) const {
    return values(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j));
  }
};

// The K nearest batch members of one anchor, ordered by ascending distance
// (ties to the lower batch index), split by label into positives and
// negatives. Both subsets keep the knn order, so positives.front() is the
// closest positive and positives.back() the farthest.
struct SupportNeighborhood {
  std::size_t anchor = 0;
  std::vector<std::size_t> knn;
  std::vector<std::size_t> positives;
  std::vector<std::size_t> negatives;

  friend bool operator==(const SupportNeighborhood&, const SupportNeighborhood&) = default;
};

/// Squared distance between two rows, summed in coordinate order.
double squared_distance(const Matrix& x, std::size_t i, std::size_t j);

/// Throws NumericError naming the first row with a non-finite entry.
void require_finite_rows(const Matrix& x);

/// Throws ShapeError for fewer than two rows, NumericError for non-finite input.
DistanceMatrix pairwise_sq_distances(const Matrix& embeddings);

/// Throws ValidationError unless 1 <= K <= M-1, ShapeError on a label-count mismatch.
std::vector<SupportNeighborhood> support_neighbors(const DistanceMatrix& dist, std::span<const int> labels,
                                                   std::size_t K);

}  // namespace snl
