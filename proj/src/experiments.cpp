#include "snl/experiments.hpp"

#include <atomic>
#include <cstdio>
#include <exception>
#include <mutex>
#include <thread>

namespace snl {

void BenchmarkSpec::validate() const {
  data.validate();
  if (train_identities == 0 || train_identities >= static_cast<std::size_t>(data.num_identities)) {
    throw ValidationError("train_identities must leave at least one test identity");
  }
  if (!(query_fraction > 0.0 && query_fraction < 1.0)) throw ValidationError("query_fraction must be in (0, 1)");
}

Benchmark make_benchmark(const BenchmarkSpec& spec) {
  spec.validate();
  auto parts = partition_identities(generate_synthetic(spec.data), spec.train_identities);
  auto split = split_query_gallery(parts.second, spec.query_fraction, spec.data.seed);
  return {std::move(parts.first), std::move(split.query), std::move(split.gallery)};
}

BenchmarkSpec sweep_benchmark() {
  BenchmarkSpec spec;
  spec.data.intra_spread = 0.5;
  spec.data.camera_shift = 1.0;
  return spec;
}

RunOutcome run_experiment(const RunSpec& spec) {
  const auto bench = make_benchmark(spec.benchmark);
  const auto init = make_model(spec.model, bench.train.dimension(), spec.output_dim, spec.hidden_dim, spec.train.seed);
  auto result = train(bench.train, init, spec.train, HeldOut{bench.query, bench.gallery});
  auto report = std::move(*result.final_report);
  result.final_report.reset();
  return {std::move(result), std::move(report)};
}

void SweepSpec::validate() const {
  if (points.empty()) throw ValidationError("sweep grid is empty");
  if (seeds == 0) throw ValidationError("sweep needs at least one seed");
  if (jobs == 0) throw ValidationError("jobs must be >= 1");
}

std::vector<SweepRow> run_sweep(const SweepSpec& spec) {
  spec.validate();
  const std::size_t n = spec.points.size();
  std::vector<SweepRow> rows(n);

  auto run_point = [&](std::size_t i) {
    SweepRow& row = rows[i];
    row.point = spec.points[i];
    for (std::size_t s = 0; s < spec.seeds; ++s) {
      RunSpec run = spec.base;
      run.benchmark.data.seed += s;
      run.train.seed += s;
      run.train.sn.lambda = row.point.lambda;
      run.train.sn.sigma = row.point.sigma;
      run.train.sn.K = row.point.K;
      run.train.eval_every = 0;
      const auto out = run_experiment(run);
      row.maps.push_back(out.report.map);
      row.rank1s.push_back(out.report.cmc.front());
    }
    double m = 0.0, r = 0.0;
    for (std::size_t s = 0; s < spec.seeds; ++s) {
      m += row.maps[s];
      r += row.rank1s[s];
    }
    row.map = m / static_cast<double>(spec.seeds);
    row.rank1 = r / static_cast<double>(spec.seeds);
  };

  if (spec.jobs == 1) {
    for (std::size_t i = 0; i < n; ++i) run_point(i);
    return rows;
  }

  std::atomic<std::size_t> next{0};
  std::exception_ptr failure;
  std::mutex failure_mutex;
  std::vector<std::thread> workers;
  for (std::size_t w = 0; w < std::min(spec.jobs, n); ++w) {
    workers.emplace_back([&] {
      for (std::size_t i; (i = next++) < n;) {
        try {
          run_point(i);
        } catch (...) {
          std::lock_guard lock(failure_mutex);
          if (!failure) failure = std::current_exception();
        }
      }
    });
  }
  for (auto& t : workers) t.join();
  if (failure) std::rethrow_exception(failure);
  return rows;
}

std::vector<SweepPoint> lambda_grid(const std::vector<double>& lambdas, double sigma, std::size_t K) {
  std::vector<SweepPoint> out;
  for (double l : lambdas) out.push_back({l, sigma, K});
  return out;
}

std::vector<SweepPoint> k_sigma_grid(const std::vector<std::size_t>& Ks, const std::vector<double>& sigmas,
                                     double lambda) {
  std::vector<SweepPoint> out;
  for (auto k : Ks) {
    for (double s : sigmas) out.push_back({lambda, s, k});
  }
  return out;
}

std::string sweep_csv(const std::vector<SweepRow>& rows) {
  std::string out = "lambda,K,sigma,seeds,map,rank1\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof buf, "%.17g,%zu,%.17g,%zu,%.17g,%.17g\n", r.point.lambda, r.point.K, r.point.sigma,
                  r.maps.size(), r.map, r.rank1);
    out += buf;
  }
  return out;
}

}  // namespace snl
