#include "snl/trainer.hpp"

#include <cmath>
#include <cstdio>
#include <map>

#include "snl/gradients.hpp"
#include "snl/random.hpp"
#include "snl/sampling.hpp"

namespace snl {

namespace {

constexpr std::uint64_t kSamplingStream = 0x70;
constexpr std::uint64_t kHeadStream = 0x71;

DenseLayer make_head(std::size_t classes, std::size_t dim, std::uint64_t seed) {
  auto rng = keyed_rng(seed, {kHeadStream});
  std::normal_distribution<double> normal(0.0, std::sqrt(2.0 / static_cast<double>(classes + dim)));
  DenseLayer head{Matrix(static_cast<Eigen::Index>(classes), static_cast<Eigen::Index>(dim)),
                  Vector::Zero(static_cast<Eigen::Index>(classes))};
  for (Eigen::Index i = 0; i < head.weight.rows(); ++i) {
    for (Eigen::Index j = 0; j < head.weight.cols(); ++j) head.weight(i, j) = normal(rng);
  }
  return head;
}

}  // namespace

std::string to_string(LossKind kind) {
  switch (kind) {
    case LossKind::sn: return "sn";
    case LossKind::triplet_bh: return "triplet_bh";
    case LossKind::triplet_ba: return "triplet_ba";
    case LossKind::softmax: return "softmax";
  }
  return "?";
}

LossKind parse_loss_kind(const std::string& name) {
  if (name == "sn") return LossKind::sn;
  if (name == "triplet_bh") return LossKind::triplet_bh;
  if (name == "triplet_ba") return LossKind::triplet_ba;
  if (name == "softmax") return LossKind::softmax;
  throw ValidationError("unknown loss '" + name + "' (expected sn, triplet_bh, triplet_ba or softmax)");
}

void TrainConfig::validate() const {
  if (total_epochs < 0) throw ValidationError("total_epochs must be >= 0");
  if (total_epochs > 0 && (decay_start < 1 || decay_start > total_epochs)) {
    throw ValidationError("decay_start must satisfy 0 < T_s <= T_f (got T_s=" + std::to_string(decay_start) +
                          ", T_f=" + std::to_string(total_epochs) + ")");
  }
  if (!(base_lr > 0.0) || !std::isfinite(base_lr)) throw ValidationError("base_lr must be positive");
  if (P < 2) throw ValidationError("P must be >= 2");
  if (Q < 2) throw ValidationError("Q must be >= 2");
  if (eval_every < 0) throw ValidationError("eval_every must be >= 0");
  if (!(margin >= 0.0) || !std::isfinite(margin)) throw ValidationError("margin must be finite and >= 0");
  if (loss == LossKind::sn) {
    sn.validate();
    if (sn.K > P * Q - 1) {
      throw ValidationError("K=" + std::to_string(sn.K) + " exceeds batch size - 1 = " + std::to_string(P * Q - 1));
    }
  }
}

BatchLoss metric_loss_with_grad(const Matrix& embeddings, const std::vector<int>& labels, const TrainConfig& config) {
  switch (config.loss) {
    case LossKind::sn: {
      auto r = sn_loss_with_grad(embeddings, labels, config.sn);
      return {r.loss.total, std::move(r.gradient.values), r.loss.skipped_anchors};
    }
    case LossKind::triplet_bh: {
      auto r = triplet_batch_hard_with_grad(embeddings, labels, config.margin);
      return {r.loss, std::move(r.gradient), 0};
    }
    case LossKind::triplet_ba: {
      auto r = triplet_batch_all_with_grad(embeddings, labels, config.margin);
      return {r.loss, std::move(r.gradient), 0};
    }
    case LossKind::softmax:
      break;
  }
  throw ValidationError("softmax needs a classifier head; use train()");
}

TrainResult train(const Dataset& dataset, const EmbeddingModel& init, const TrainConfig& config,
                  const std::optional<HeldOut>& held_out) {
  config.validate();
  init.validate();
  if (dataset.dimension() != init.input_dim) {
    throw ShapeError("dataset dimension " + std::to_string(dataset.dimension()) + " does not match model input " +
                     std::to_string(init.input_dim));
  }
  if (dataset.num_identities() < config.P) {
    throw SamplingError("dataset has " + std::to_string(dataset.num_identities()) + " identities, P=" +
                        std::to_string(config.P));
  }

  TrainResult result{init, {}, std::nullopt};
  if (config.total_epochs == 0) return result;

  const bool softmax = config.loss == LossKind::softmax;
  std::map<int, int> class_of;
  for (const auto& [id, rows] : dataset.identity_index()) class_of.emplace(id, static_cast<int>(class_of.size()));

  // Trainable blocks: model layers, then the classifier head for softmax.
  ParameterSet params = init.layers;
  if (softmax) params.push_back(make_head(class_of.size(), init.output_dim, config.seed));
  const std::size_t model_layers = init.layers.size();
  auto state = make_optimizer_state(config.optimizer, params);
  auto rng = keyed_rng(config.seed, {kSamplingStream});

  EmbeddingModel& model = result.model;
  for (int epoch = 1; epoch <= config.total_epochs; ++epoch) {
    const double lr = lr_schedule(epoch, config.base_lr, config.decay_start, config.total_epochs);
    const auto batches = epoch_batches(dataset, config.P, config.Q, rng);
    double loss_sum = 0.0;
    double skipped_sum = 0.0;
    for (std::size_t b = 0; b < batches.size(); ++b) {
      const auto& plan = batches[b];
      try {
        const Matrix features = dataset.features(plan.indices);
        auto labels = dataset.labels(plan.indices);
        const Matrix emb = forward(model, features);
        ParameterSet grad;
        if (softmax) {
          for (auto& l : labels) l = class_of.at(l);
          const auto& head = params[model_layers];
          auto g = softmax_loss_with_grad(emb, labels, head.weight, head.bias);
          loss_sum += g.loss;
          grad = backward(model, features, g.embeddings);
          grad.push_back({std::move(g.weights), std::move(g.biases)});
        } else {
          auto g = metric_loss_with_grad(emb, labels, config);
          loss_sum += g.loss;
          skipped_sum += static_cast<double>(g.skipped) / static_cast<double>(plan.size());
          grad = backward(model, features, g.gradient);
        }
        optimizer_step(state, params, grad, lr);
        std::copy(params.begin(), params.begin() + static_cast<long>(model_layers), model.layers.begin());
      } catch (const NumericError& e) {
        throw TrainingError(e.what(), epoch, b);
      }
    }

    EpochRecord rec;
    rec.epoch = epoch;
    rec.loss = loss_sum / static_cast<double>(batches.size());
    rec.lr = lr;
    rec.skipped_rate = skipped_sum / static_cast<double>(batches.size());
    const bool last = epoch == config.total_epochs;
    if (held_out && (last || (config.eval_every > 0 && epoch % config.eval_every == 0))) {
      auto report = evaluate(make_retrieval_set(held_out->query, embed(model, held_out->query)),
                             make_retrieval_set(held_out->gallery, embed(model, held_out->gallery)),
                             config.camera_filter);
      rec.rank1 = report.cmc.front();
      rec.map = report.map;
      if (last) result.final_report = std::move(report);
    }
    result.history.push_back(rec);
  }
  return result;
}

std::string history_csv(const std::vector<EpochRecord>& history) {
  std::string out = "epoch,loss,lr,skipped_rate,rank1,mAP\n";
  char buf[256];
  for (const auto& r : history) {
    std::snprintf(buf, sizeof buf, "%d,%.17g,%.17g,%.17g,", r.epoch, r.loss, r.lr, r.skipped_rate);
    out += buf;
    if (r.rank1) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.rank1);
      out += buf;
    }
    out += ',';
    if (r.map) {
      std::snprintf(buf, sizeof buf, "%.17g", *r.map);
      out += buf;
    }
    out += '\n';
  }
  return out;
}

}  // namespace snl
