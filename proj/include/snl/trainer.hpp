#pragma once

#include <cstddef>
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "snl/data_model.hpp"
#include "snl/error.hpp"
#include "snl/evaluation.hpp"
#include "snl/losses.hpp"
#include "snl/model.hpp"

namespace snl {

enum class LossKind { sn, triplet_bh, triplet_ba, softmax };

std::string to_string(LossKind kind);
LossKind parse_loss_kind(const std::string& name);

struct TrainConfig {
  LossKind loss = LossKind::sn;
  SNConfig sn;
  double margin = 0.3;
  OptimizerKind optimizer = OptimizerKind::adam;
  double base_lr = 2e-4;
  int decay_start = 75;
  int total_epochs = 200;
  std::size_t P = 8;
  std::size_t Q = 4;
  std::uint64_t seed = 0;
  int eval_every = 0;  ///< 0: evaluate only after the last epoch (if held-out data is given)
  bool camera_filter = true;

  /// total_epochs = 0 is accepted (training is then a no-op).
  void validate() const;
};

struct EpochRecord {
  int epoch = 0;
  double loss = 0.0;
  double lr = 0.0;
  double skipped_rate = 0.0;
  std::optional<double> rank1;
  std::optional<double> map;

  friend bool operator==(const EpochRecord&, const EpochRecord&) = default;
};

struct TrainResult {
  EmbeddingModel model;
  std::vector<EpochRecord> history;
  std::optional<EvalReport> final_report;
};

struct HeldOut {
  const Dataset& query;
  const Dataset& gallery;
};

// Numeric failure during training, tagged with where it happened.
class TrainingError : public NumericError {
 public:
  TrainingError(const std::string& what, int epoch, std::size_t batch)
      : NumericError("epoch " + std::to_string(epoch) + ", batch " + std::to_string(batch) + ": " + what),
        epoch_(epoch),
        batch_(batch) {}
  int epoch() const { return epoch_; }
  std::size_t batch() const { return batch_; }

 private:
  int epoch_;
  std::size_t batch_;
};

/// Mean loss and dL/d(embeddings) of one PK batch for the non-classifier
/// losses; also reports the skipped-anchor count (SN only).
struct BatchLoss {
  double loss = 0.0;
  Matrix gradient;
  std::size_t skipped = 0;
};
BatchLoss metric_loss_with_grad(const Matrix& embeddings, const std::vector<int>& labels, const TrainConfig& config);

TrainResult train(const Dataset& dataset, const EmbeddingModel& init, const TrainConfig& config,
                  const std::optional<HeldOut>& held_out = std::nullopt);

std::string history_csv(const std::vector<EpochRecord>& history);

}  // namespace snl
