#pragma once

#include <cstddef>
#include <cstdint>
#include <string>
#include <vector>

#include "snl/data_model.hpp"
#include "snl/evaluation.hpp"
#include "snl/model.hpp"
#include "snl/trainer.hpp"

namespace snl {

// Synthetic held-out benchmark: one generator call produces train and test
// identities, the lowest `train_identities` labels train the model and the
// rest are split into query and gallery. Train and test identities are disjoint.
struct BenchmarkSpec {
  SyntheticSpec data{.num_identities = 20};
  std::size_t train_identities = 10;
  double query_fraction = 0.25;

  void validate() const;
};

struct Benchmark {
  Dataset train;
  Dataset query;
  Dataset gallery;
};

Benchmark make_benchmark(const BenchmarkSpec& spec);

/// Harder setting used for parameter sweeps: intra spread 0.5 and camera
/// shift 1.0, so retrieval on untrained features is poor (camera offsets
/// dominate) and the learned projection matters.
BenchmarkSpec sweep_benchmark();

// Everything needed to train and score one model on a benchmark.
struct RunSpec {
  BenchmarkSpec benchmark;
  ModelKind model = ModelKind::mlp2;
  std::size_t hidden_dim = 64;
  std::size_t output_dim = 32;
  TrainConfig train;
};

struct RunOutcome {
  TrainResult result;
  EvalReport report;
};

/// Builds the benchmark, initialises the model from train.seed, trains and
/// evaluates on the held-out split.
RunOutcome run_experiment(const RunSpec& spec);

struct SweepPoint {
  double lambda = 0.0;
  double sigma = 0.0;
  std::size_t K = 0;
};

struct SweepRow {
  SweepPoint point;
  std::vector<double> maps;   ///< one per seed
  std::vector<double> rank1s;
  double map = 0.0;           ///< mean over seeds
  double rank1 = 0.0;
};

// Seed s of a sweep uses benchmark seed base.data.seed + s and training /
// initialisation seed base.train.seed + s, identically for every grid point.
struct SweepSpec {
  RunSpec base;
  std::vector<SweepPoint> points;
  std::size_t seeds = 1;
  std::size_t jobs = 1;  ///< grid points trained concurrently

  void validate() const;
};

std::vector<SweepRow> run_sweep(const SweepSpec& spec);

std::vector<SweepPoint> lambda_grid(const std::vector<double>& lambdas, double sigma, std::size_t K);
std::vector<SweepPoint> k_sigma_grid(const std::vector<std::size_t>& Ks, const std::vector<double>& sigmas,
                                     double lambda);

std::string sweep_csv(const std::vector<SweepRow>& rows);

}  // namespace snl
