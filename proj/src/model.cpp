#include "snl/model.hpp"

#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "snl/error.hpp"
#include "snl/random.hpp"

namespace snl {

namespace {

using json = nlohmann::ordered_json;

Matrix gaussian_matrix(Rng& rng, std::size_t rows, std::size_t cols, double stddev) {
  std::normal_distribution<double> normal(0.0, stddev);
  Matrix m(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    for (Eigen::Index j = 0; j < m.cols(); ++j) m(i, j) = normal(rng);
  }
  return m;
}

void check_features(const EmbeddingModel& model, const Matrix& features) {
  if (static_cast<std::size_t>(features.cols()) != model.input_dim) {
    throw ShapeError("features have dimension " + std::to_string(features.cols()) + ", model expects " +
                     std::to_string(model.input_dim));
  }
}

Matrix affine(const DenseLayer& layer, const Matrix& in) {
  Matrix out = in * layer.weight.transpose();
  out.rowwise() += layer.bias.transpose();
  return out;
}

bool all_finite(const ParameterSet& params) {
  for (const auto& p : params) {
    if (!p.weight.allFinite() || !p.bias.allFinite()) return false;
  }
  return true;
}

void check_same_shape(const ParameterSet& a, const ParameterSet& b) {
  bool ok = a.size() == b.size();
  for (std::size_t i = 0; ok && i < a.size(); ++i) {
    ok = a[i].weight.rows() == b[i].weight.rows() && a[i].weight.cols() == b[i].weight.cols() &&
         a[i].bias.size() == b[i].bias.size();
  }
  if (!ok) throw ShapeError("parameter and gradient shapes differ");
}

json layer_json(const DenseLayer& layer) {
  json w = json::array();
  for (Eigen::Index i = 0; i < layer.weight.rows(); ++i) {
    json row = json::array();
    for (Eigen::Index j = 0; j < layer.weight.cols(); ++j) row.push_back(layer.weight(i, j));
    w.push_back(std::move(row));
  }
  json b = json::array();
  for (Eigen::Index i = 0; i < layer.bias.size(); ++i) b.push_back(layer.bias[i]);
  return {{"weight", std::move(w)}, {"bias", std::move(b)}};
}

DenseLayer layer_from_json(const json& j) {
  const auto& w = j.at("weight");
  const auto& b = j.at("bias");
  DenseLayer layer;
  const auto rows = w.size();
  const auto cols = rows ? w.at(0).size() : 0;
  layer.weight.resize(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::size_t i = 0; i < rows; ++i) {
    if (w.at(i).size() != cols) throw ShapeError("ragged weight matrix in checkpoint");
    for (std::size_t k = 0; k < cols; ++k) layer.weight(i, k) = w.at(i).at(k).get<double>();
  }
  layer.bias.resize(static_cast<Eigen::Index>(b.size()));
  for (std::size_t i = 0; i < b.size(); ++i) layer.bias[i] = b.at(i).get<double>();
  return layer;
}

}  // namespace

std::string to_string(ModelKind kind) { return kind == ModelKind::linear ? "linear" : "mlp2"; }

ModelKind parse_model_kind(const std::string& name) {
  if (name == "linear") return ModelKind::linear;
  if (name == "mlp2") return ModelKind::mlp2;
  throw ValidationError("unknown model kind '" + name + "' (expected linear or mlp2)");
}

ParameterSet zeros_like(const ParameterSet& params) {
  ParameterSet out;
  out.reserve(params.size());
  for (const auto& p : params) {
    out.push_back({Matrix::Zero(p.weight.rows(), p.weight.cols()), Vector::Zero(p.bias.size())});
  }
  return out;
}

void EmbeddingModel::validate() const {
  std::vector<std::pair<std::size_t, std::size_t>> shapes;  // (out, in)
  if (kind == ModelKind::linear) {
    shapes = {{output_dim, input_dim}};
  } else {
    if (hidden_dim == 0) throw ShapeError("mlp2 needs a positive hidden dimension");
    shapes = {{hidden_dim, input_dim}, {output_dim, hidden_dim}};
  }
  if (input_dim == 0 || output_dim == 0) throw ShapeError("model dimensions must be positive");
  if (layers.size() != shapes.size()) throw ShapeError("wrong number of layers for " + to_string(kind));
  for (std::size_t i = 0; i < shapes.size(); ++i) {
    const auto& l = layers[i];
    if (static_cast<std::size_t>(l.weight.rows()) != shapes[i].first ||
        static_cast<std::size_t>(l.weight.cols()) != shapes[i].second ||
        static_cast<std::size_t>(l.bias.size()) != shapes[i].first) {
      throw ShapeError("layer " + std::to_string(i) + " has inconsistent shape");
    }
  }
  if (!all_finite(layers)) throw NumericError("model parameters are not finite");
}

EmbeddingModel make_model(ModelKind kind, std::size_t input_dim, std::size_t output_dim, std::size_t hidden_dim,
                          std::uint64_t seed) {
  EmbeddingModel model;
  model.kind = kind;
  model.input_dim = input_dim;
  model.output_dim = output_dim;
  model.hidden_dim = kind == ModelKind::mlp2 ? hidden_dim : 0;
  auto rng = keyed_rng(seed, {0x6d6f64656cULL});
  const auto in = static_cast<double>(input_dim);
  if (kind == ModelKind::linear) {
    model.layers.push_back({gaussian_matrix(rng, output_dim, input_dim, std::sqrt(2.0 / (in + output_dim))),
                            Vector::Zero(static_cast<Eigen::Index>(output_dim))});
  } else {
    model.layers.push_back({gaussian_matrix(rng, hidden_dim, input_dim, std::sqrt(2.0 / in)),
                            Vector::Zero(static_cast<Eigen::Index>(hidden_dim))});
    model.layers.push_back(
        {gaussian_matrix(rng, output_dim, hidden_dim, std::sqrt(2.0 / static_cast<double>(hidden_dim + output_dim))),
         Vector::Zero(static_cast<Eigen::Index>(output_dim))});
  }
  model.validate();
  return model;
}

EmbeddingModel identity_model(std::size_t dim) {
  EmbeddingModel model;
  model.kind = ModelKind::linear;
  model.input_dim = dim;
  model.output_dim = dim;
  const auto n = static_cast<Eigen::Index>(dim);
  model.layers.push_back({Matrix::Identity(n, n), Vector::Zero(n)});
  return model;
}

Matrix forward(const EmbeddingModel& model, const Matrix& features) {
  check_features(model, features);
  if (model.kind == ModelKind::linear) return affine(model.layers[0], features);
  const Matrix hidden = affine(model.layers[0], features).cwiseMax(0.0);
  return affine(model.layers[1], hidden);
}

ParameterSet backward(const EmbeddingModel& model, const Matrix& features, const Matrix& upstream) {
  check_features(model, features);
  if (upstream.rows() != features.rows() || static_cast<std::size_t>(upstream.cols()) != model.output_dim) {
    throw ShapeError("upstream gradient is " + std::to_string(upstream.rows()) + "x" +
                     std::to_string(upstream.cols()) + ", expected " + std::to_string(features.rows()) + "x" +
                     std::to_string(model.output_dim));
  }
  ParameterSet grad = zeros_like(model.layers);
  if (model.kind == ModelKind::linear) {
    grad[0].weight = upstream.transpose() * features;
    grad[0].bias = upstream.colwise().sum().transpose();
    return grad;
  }
  const Matrix pre = affine(model.layers[0], features);
  const Matrix hidden = pre.cwiseMax(0.0);
  grad[1].weight = upstream.transpose() * hidden;
  grad[1].bias = upstream.colwise().sum().transpose();
  // relu'(0) is taken as 0
  const Matrix d_hidden = (upstream * model.layers[1].weight).cwiseProduct((pre.array() > 0.0).cast<double>().matrix());
  grad[0].weight = d_hidden.transpose() * features;
  grad[0].bias = d_hidden.colwise().sum().transpose();
  return grad;
}

std::string checkpoint_json(const EmbeddingModel& model) {
  json j;
  j["kind"] = to_string(model.kind);
  j["input_dim"] = model.input_dim;
  j["hidden_dim"] = model.hidden_dim;
  j["output_dim"] = model.output_dim;
  auto& layers = j["layers"] = json::array();
  for (const auto& l : model.layers) layers.push_back(layer_json(l));
  return j.dump(1) + "\n";
}

EmbeddingModel checkpoint_from_json(const std::string& text) {
  EmbeddingModel model;
  try {
    const auto j = json::parse(text);
    model.kind = parse_model_kind(j.at("kind").get<std::string>());
    model.input_dim = j.at("input_dim").get<std::size_t>();
    model.hidden_dim = j.at("hidden_dim").get<std::size_t>();
    model.output_dim = j.at("output_dim").get<std::size_t>();
    for (const auto& l : j.at("layers")) model.layers.push_back(layer_from_json(l));
  } catch (const nlohmann::json::exception& e) {
    throw ParseError(std::string("malformed checkpoint: ") + e.what(), 0);
  }
  model.validate();
  return model;
}

void save_checkpoint(const EmbeddingModel& model, const std::filesystem::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << checkpoint_json(model);
}

EmbeddingModel load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("cannot open " + path.string());
  std::stringstream buf;
  buf << in.rdbuf();
  return checkpoint_from_json(buf.str());
}

std::string to_string(OptimizerKind kind) { return kind == OptimizerKind::adam ? "adam" : "sgd"; }

OptimizerKind parse_optimizer_kind(const std::string& name) {
  if (name == "adam") return OptimizerKind::adam;
  if (name == "sgd") return OptimizerKind::sgd;
  throw ValidationError("unknown optimizer '" + name + "' (expected adam or sgd)");
}

OptimizerState make_optimizer_state(OptimizerKind kind, const ParameterSet& params) {
  OptimizerState state;
  state.kind = kind;
  if (kind == OptimizerKind::adam) {
    state.first_moment = zeros_like(params);
    state.second_moment = zeros_like(params);
  }
  return state;
}

void optimizer_step(OptimizerState& state, ParameterSet& params, const ParameterSet& grad, double lr) {
  check_same_shape(params, grad);
  if (!all_finite(grad)) throw NumericError("non-finite gradient, optimizer step aborted");
  if (!(lr >= 0.0) || !std::isfinite(lr)) throw ValidationError("learning rate must be finite and non-negative");

  if (state.kind == OptimizerKind::sgd) {
    for (std::size_t i = 0; i < params.size(); ++i) {
      params[i].weight -= lr * grad[i].weight;
      params[i].bias -= lr * grad[i].bias;
    }
    ++state.step;
    return;
  }

  check_same_shape(params, state.first_moment);
  ++state.step;
  const double t = static_cast<double>(state.step);
  const double c1 = 1.0 - std::pow(state.beta1, t);
  const double c2 = 1.0 - std::pow(state.beta2, t);
  auto update = [&](auto& theta, auto& m, auto& v, const auto& g) {
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g.cwiseProduct(g);
    const auto m_hat = (m / c1).array();
    const auto v_hat = (v / c2).array();
    theta.array() -= lr * m_hat / (v_hat.sqrt() + state.epsilon);
  };
  for (std::size_t i = 0; i < params.size(); ++i) {
    update(params[i].weight, state.first_moment[i].weight, state.second_moment[i].weight, grad[i].weight);
    update(params[i].bias, state.first_moment[i].bias, state.second_moment[i].bias, grad[i].bias);
  }
}

double lr_schedule(int epoch, double base_lr, int decay_start, int total_epochs) {
  if (epoch < 1 || epoch > total_epochs) {
    throw ValidationError("epoch " + std::to_string(epoch) + " outside [1, " + std::to_string(total_epochs) + "]");
  }
  if (decay_start < 1 || decay_start > total_epochs) {
    throw ValidationError("decay start must lie in [1, total epochs]");
  }
  if (epoch <= decay_start) return base_lr;
  const double progress =
      static_cast<double>(epoch - decay_start) / static_cast<double>(total_epochs - decay_start);
  return base_lr * std::pow(0.001, progress);
}

}  // namespace snl
