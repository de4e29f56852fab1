#pragma once

#include <cmath>
#include <random>
#include <vector>

#include "snl/types.hpp"

namespace snl::test {

inline Matrix gaussian(Rng& rng, std::size_t rows, std::size_t cols, double stddev = 1.0) {
  std::normal_distribution<double> n(0.0, stddev);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i)
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = n(rng);
  return m;
}

// P identities x Q samples, contiguous blocks.
inline std::vector<int> pk_labels(std::size_t P, std::size_t Q) {
  std::vector<int> labels;
  for (std::size_t p = 0; p < P; ++p)
    for (std::size_t q = 0; q < Q; ++q) labels.push_back(static_cast<int>(p));
  return labels;
}

inline double rel_diff(double a, double b) {
  const double s = std::max(std::abs(a), std::abs(b));
  return s == 0.0 ? 0.0 : std::abs(a - b) / s;
}

inline Matrix permute_rows(const Matrix& m, const std::vector<std::size_t>& perm) {
  Matrix out(m.rows(), m.cols());
  for (std::size_t i = 0; i < perm.size(); ++i) out.row(static_cast<Eigen::Index>(i)) = m.row(static_cast<Eigen::Index>(perm[i]));
  return out;
}

}  // namespace snl::test
