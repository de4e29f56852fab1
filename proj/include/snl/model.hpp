#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <vector>

#include "snl/types.hpp"

namespace snl {

enum class ModelKind { linear, mlp2 };

std::string to_string(ModelKind kind);
ModelKind parse_model_kind(const std::string& name);

/// y = weight * x + bias, weight is out x in.
struct DenseLayer {
  Matrix weight;
  Vector bias;

  friend bool operator==(const DenseLayer& a, const DenseLayer& b) {
    return a.weight.rows() == b.weight.rows() && a.weight.cols() == b.weight.cols() && a.weight == b.weight &&
           a.bias.size() == b.bias.size() && a.bias == b.bias;
  }
};

// Any list of dense parameter blocks: model parameters, their gradients,
// optimizer moments.
using ParameterSet = std::vector<DenseLayer>;

ParameterSet zeros_like(const ParameterSet& params);

// linear: x = W f + b.  mlp2: x = W2 relu(W1 f + b1) + b2.
struct EmbeddingModel {
  ModelKind kind = ModelKind::linear;
  std::size_t input_dim = 0;
  std::size_t hidden_dim = 0;  ///< 0 for linear
  std::size_t output_dim = 0;
  ParameterSet layers;

  /// Throws ShapeError on inconsistent shapes, NumericError on non-finite parameters.
  void validate() const;

  friend bool operator==(const EmbeddingModel&, const EmbeddingModel&) = default;
};

/// He-normal weights for layers followed by a rectifier, Glorot-normal for
/// the output layer, zero biases.
EmbeddingModel make_model(ModelKind kind, std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim,
                          std::uint64_t seed);

/// Linear model with W = I and b = 0.
EmbeddingModel identity_model(std::size_t dim);

/// Rows of `features` are samples. Throws ShapeError on a dimension mismatch.
Matrix forward(const EmbeddingModel& model, const Matrix& features);

/// dL/dtheta for dL/d(embeddings) = upstream, summed over the batch.
ParameterSet backward(const EmbeddingModel& model, const Matrix& features, const Matrix& upstream);

std::string checkpoint_json(const EmbeddingModel& model);
EmbeddingModel checkpoint_from_json(const std::string& text);
void save_checkpoint(const EmbeddingModel& model, const std::filesystem::path& path);
EmbeddingModel load_checkpoint(const std::filesystem::path& path);

// --- optimisation ----------------------------------------------------------

enum class OptimizerKind { adam, sgd };

std::string to_string(OptimizerKind kind);
OptimizerKind parse_optimizer_kind(const std::string& name);

struct OptimizerState {
  OptimizerKind kind = OptimizerKind::adam;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  ParameterSet first_moment;
  ParameterSet second_moment;
  std::uint64_t step = 0;
};

OptimizerState make_optimizer_state(OptimizerKind kind, const ParameterSet& params);

/// One Adam (bias-corrected) or SGD update in place. A non-finite gradient
/// throws NumericError before anything is modified.
void optimizer_step(OptimizerState& state, ParameterSet& params, const ParameterSet& grad, double lr);

/// r0 up to epoch decay_start, then r0 * 0.001^((t - decay_start) / (total - decay_start)).
/// Epochs are 1-based; t outside [1, total] throws ValidationError.
double lr_schedule(int epoch, double base_lr, int decay_start, int total_epochs);

}  // namespace snl
