#pragma once

#include <cstdint>
#include <random>

#include <Eigen/Core>

namespace snl {

// Row-major so that one sample (or one embedding) is one contiguous row.
using Matrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;
using Vector = Eigen::VectorXd;

using Rng = std::mt19937_64;

}  // namespace snl
