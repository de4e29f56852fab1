#include "snl/neighbors.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <string>

#include "snl/error.hpp"

namespace snl {

double squared_distance(const Matrix& x, std::size_t i, std::size_t j) {
  double acc = 0.0;
  const auto a = x.row(static_cast<Eigen::Index>(i));
  const auto b = x.row(static_cast<Eigen::Index>(j));
  for (Eigen::Index k = 0; k < x.cols(); ++k) {
    const double diff = a[k] - b[k];
    acc += diff * diff;
  }
  return acc;
}

void require_finite_rows(const Matrix& x) {
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    if (!x.row(i).allFinite()) {
      throw NumericError("embedding row " + std::to_string(i) + " has a non-finite entry");
    }
  }
}

DistanceMatrix pairwise_sq_distances(const Matrix& embeddings) {
  const auto m = static_cast<std::size_t>(embeddings.rows());
  if (m < 2) throw ShapeError("pairwise distances need at least two rows");
  require_finite_rows(embeddings);

  DistanceMatrix out{Matrix::Zero(embeddings.rows(), embeddings.rows())};
  for (std::size_t i = 0; i < m; ++i) {
    for (std::size_t j = i + 1; j < m; ++j) {
      const double d = squared_distance(embeddings, i, j);
      out.values(i, j) = d;
      out.values(j, i) = d;
    }
  }
  return out;
}

std::vector<SupportNeighborhood> support_neighbors(const DistanceMatrix& dist, std::span<const int> labels,
                                                   std::size_t K) {
  const auto m = dist.size();
  if (labels.size() != m) {
    throw ShapeError("got " + std::to_string(labels.size()) + " labels for a batch of " + std::to_string(m));
  }
  if (K < 1 || K + 1 > m) {
    throw ValidationError("K=" + std::to_string(K) + " outside [1, " + std::to_string(m == 0 ? 0 : m - 1) + "]");
  }

  std::vector<SupportNeighborhood> out(m);
  std::vector<std::size_t> candidates;
  for (std::size_t i = 0; i < m; ++i) {
    candidates.clear();
    for (std::size_t j = 0; j < m; ++j) {
      if (j != i) candidates.push_back(j);
    }
    auto closer = [&](std::size_t a, std::size_t b) {
      const double da = dist(i, a);
      const double db = dist(i, b);
      return da < db || (da == db && a < b);
    };
    std::partial_sort(candidates.begin(), candidates.begin() + static_cast<long>(K), candidates.end(), closer);

    auto& nb = out[i];
    nb.anchor = i;
    nb.knn.assign(candidates.begin(), candidates.begin() + static_cast<long>(K));
    for (auto j : nb.knn) {
      (labels[j] == labels[i] ? nb.positives : nb.negatives).push_back(j);
    }
  }
  return out;
}

}  // namespace snl
