// Acceptance run: one PASS/FAIL line per criterion, exit status 1 if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <functional>
#include <numeric>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include <json.hpp>

#include "eval_oracle.hpp"
#include "snl/cli.hpp"
#include "snl/evaluation.hpp"
#include "snl/experiments.hpp"
#include "snl/gradients.hpp"
#include "snl/losses.hpp"
#include "support.hpp"

namespace fs = std::filesystem;
using namespace snl;
using snl::test::gaussian;
using snl::test::rel_diff;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
};

std::string fmt(const char* f, auto... args) {
  char buf[512];
  std::snprintf(buf, sizeof buf, f, args...);
  return buf;
}

double seconds_since(std::chrono::steady_clock::time_point t0) {
  return std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();
}

std::string last_error;

int cli(std::vector<std::string> args, std::string* out = nullptr) {
  std::ostringstream o, e;
  const int code = run_cli(args, o, e);
  if (out) *out = o.str();
  if (code != exit_ok) last_error = e.str();
  return code;
}

std::string slurp(const fs::path& p) {
  std::ifstream in(p, std::ios::binary);
  std::stringstream s;
  s << in.rdbuf();
  return s.str();
}

std::size_t jobs() { return std::max(1u, std::min(8u, std::thread::hardware_concurrency())); }

Outcome gradient_correctness() {
  const auto t0 = std::chrono::steady_clock::now();
  std::string json;
  const int code = cli({"gradcheck", "--trials", "100", "--batch", "16", "--dim", "8", "--step", "1e-6", "--tol", "1e-5",
                        "--sigmas", "0.5,5,30,60", "--lambdas", "0,0.1,1"},
                       &json);
  const double err = nlohmann::json::parse(json).at("max_rel_err").get<double>();
  std::string control;
  const int control_code = cli({"gradcheck", "--negate-case2"}, &control);
  const double control_err = nlohmann::json::parse(control).at("max_rel_err").get<double>();
  std::string plain;
  cli({"gradcheck", "--fd-precision", "double"}, &plain);
  const double plain_err = nlohmann::json::parse(plain).at("max_rel_err").get<double>();
  const double secs = seconds_since(t0);
  return {code == exit_ok && err <= 1e-5 && control_code == exit_check_failed && secs < 60.0,
          fmt("max rel err %.3g (exit %d); --negate-case2 %.3g (exit %d); float64 FD oracle %.3g (info); %.1fs", err,
              code, control_err, control_code, plain_err, secs)};
}

Outcome form_equivalence() {
  // Same batch family as the gradient check and the invariants.
  Rng rng(101);
  const double sigmas[] = {0.5, 5.0, 30.0, 60.0};
  double worst = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto batch = tie_free_batch(rng, 16, 8, 4);
    const auto hood = support_neighbors(pairwise_sq_distances(batch.embeddings), batch.labels, 7);
    const double sigma = sigmas[t % 4];
    worst = std::max(worst, rel_diff(separation_loss(batch.embeddings, hood, sigma, SeparationForm::neighborhood_sum).mean,
                                     separation_loss(batch.embeddings, hood, sigma, SeparationForm::split_sum).mean));
  }

  // Wider stress family, reported only: once S_N / S_P is below the float64
  // epsilon the long form rounds the sum to S_P and returns 0.
  Rng stress(102);
  std::uniform_int_distribution<int> ids(2, 6), per(2, 5);
  std::uniform_real_distribution<double> log_sigma(std::log(0.1), std::log(100.0));
  int disagree = 0;
  double largest = 0.0, worst_big_term = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto P = static_cast<std::size_t>(ids(stress)), Q = static_cast<std::size_t>(per(stress));
    const auto labels = snl::test::pk_labels(P, Q);
    const Matrix x = gaussian(stress, P * Q, 8, 0.5);
    const double sigma = std::exp(log_sigma(stress));
    std::uniform_int_distribution<std::size_t> k(1, P * Q - 1);
    const auto hood = support_neighbors(pairwise_sq_distances(x), labels, k(stress));
    const auto a = separation_loss(x, hood, sigma, SeparationForm::neighborhood_sum);
    const auto b = separation_loss(x, hood, sigma, SeparationForm::split_sum);
    if (rel_diff(a.mean, b.mean) > 1e-12) ++disagree, largest = std::max(largest, b.mean);
    for (std::size_t i = 0; i < a.terms.size(); ++i) {
      if (b.terms[i] > 1e-3) worst_big_term = std::max(worst_big_term, rel_diff(a.terms[i], b.terms[i]));
    }
  }
  return {worst <= 1e-12,
          fmt("max relative difference %.3g over 1000 batch losses; stress family (info): %d/1000 disagree, "
              "all with loss <= %.3g, per-anchor terms > 1e-3 agree to %.3g",
              worst, disagree, largest, worst_big_term)};
}

Outcome invariants() {
  Rng rng(202);
  const double sigmas[] = {0.5, 5.0, 30.0, 60.0};
  double neg = 0.0, trans = 0.0, perm = 0.0, sum_rule = 0.0;
  for (int t = 0; t < 1000; ++t) {
    const auto batch = tie_free_batch(rng, 16, 8, 4);
    const SNConfig cfg{sigmas[t % 4], 0.1 * (t % 3), 7};
    const auto base = sn_loss_with_grad(batch.embeddings, batch.labels, cfg);
    for (const auto& a : base.loss.per_anchor) neg = std::min({neg, a.separation, a.squeeze});

    Matrix shifted = batch.embeddings;
    shifted.rowwise() += gaussian(rng, 1, 8, 3.0).row(0);
    trans = std::max(trans, rel_diff(sn_loss(shifted, batch.labels, cfg).total, base.loss.total));

    std::vector<std::size_t> order(16);
    std::iota(order.begin(), order.end(), 0);
    std::shuffle(order.begin(), order.end(), rng);
    std::vector<int> labels(16);
    for (std::size_t i = 0; i < 16; ++i) labels[i] = batch.labels[order[i]];
    const Matrix permuted = snl::test::permute_rows(batch.embeddings, order);
    perm = std::max(perm, rel_diff(sn_loss(permuted, labels, cfg).total, base.loss.total));

    sum_rule = std::max(sum_rule, base.gradient.values.colwise().sum().cwiseAbs().maxCoeff());
  }
  return {neg >= 0.0 && trans <= 1e-9 && perm <= 1e-12 && sum_rule <= 1e-9,
          fmt("min term %.3g, translation %.3g, permutation %.3g, |sum of gradients| %.3g", neg, trans, perm,
              sum_rule)};
}

Outcome baseline_oracle() {
  Rng rng(303);
  double worst = 0.0;
  int batches = 0;
  for (int t = 0; t < 2000; ++t) {
    // 2..4 identities with 2..4 samples each; draws with M > 8 are discarded
    std::uniform_int_distribution<int> np(2, 4), nq(2, 4);
    std::vector<int> labels;
    for (int p = np(rng) - 1; p >= 0; --p)
      for (int q = nq(rng); q > 0; --q) labels.push_back(p);
    if (labels.size() > 8) continue;
    std::shuffle(labels.begin(), labels.end(), rng);
    const Matrix x = gaussian(rng, labels.size(), 4);
    const double margin = std::uniform_real_distribution<double>(0.0, 2.0)(rng);
    double sum = 0.0;
    std::size_t count = 0;
    const auto m = labels.size();
    for (std::size_t i = 0; i < m; ++i)
      for (std::size_t p = 0; p < m; ++p)
        for (std::size_t n = 0; n < m; ++n) {
          if (p == i || labels[p] != labels[i] || labels[n] == labels[i]) continue;
          sum += std::max((x.row(i) - x.row(p)).squaredNorm() - (x.row(i) - x.row(n)).squaredNorm() + margin, 0.0);
          ++count;
        }
    worst = std::max(worst, rel_diff(triplet_batch_all(x, labels, margin), sum / static_cast<double>(count)));
    ++batches;
  }

  bool exact = true;
  for (int classes : {2, 3, 7, 10, 751}) {
    const Matrix x = gaussian(rng, 13, 32);
    std::vector<int> y(13);
    for (std::size_t i = 0; i < y.size(); ++i) y[i] = static_cast<int>(i) % classes;
    exact = exact && softmax_loss(x, y, Matrix::Zero(classes, 32), Vector::Zero(classes)) ==
                         std::log(static_cast<double>(classes));
  }
  return {worst <= 1e-12 && exact,
          fmt("batch all vs enumeration %.3g over %d batches (M <= 8); softmax at zero parameters %s ln(M_cls)", worst,
              batches, exact ? "==" : "!=")};
}

Outcome metric_oracle() {
  Rng rng(404);
  std::uniform_int_distribution<std::size_t> nq(1, 10), ng(1, 20);
  std::uniform_int_distribution<int> id(0, 4), cam(0, 2);
  double worst = 0.0;
  int compared = 0, instances = 0, mismatched_skips = 0;
  while (instances < 200) {
    RetrievalSet q, g;
    const auto a = nq(rng), b = ng(rng);
    for (std::size_t i = 0; i < a; ++i) q.identities.push_back(id(rng)), q.cameras.push_back(cam(rng));
    for (std::size_t i = 0; i < b; ++i) g.identities.push_back(id(rng)), g.cameras.push_back(cam(rng));
    q.embeddings = (gaussian(rng, a, 2) * 2).array().round().matrix();
    g.embeddings = (gaussian(rng, b, 2) * 2).array().round().matrix();
    bool usable = true;
    for (bool filter : {false, true}) usable = usable && snl::test::oracle(q, g, filter).skipped < a;
    if (!usable) continue;
    ++instances;
    for (bool filter : {false, true}) {
      const auto o = snl::test::oracle(q, g, filter);
      const auto r = evaluate(q, g, filter);
      ++compared;
      if (r.skipped_queries != o.skipped) ++mismatched_skips;
      worst = std::max(worst, std::abs(r.map - o.map));
      for (std::size_t n = 0; n < b; ++n) worst = std::max(worst, std::abs(r.cmc[n] - o.cmc[n]));
      for (std::size_t i = 0; i < a; ++i) worst = std::max(worst, std::abs(r.per_query_ap[i] - o.ap[i]));
    }
  }
  return {worst <= 1e-12 && mismatched_skips == 0,
          fmt("max abs difference %.3g over %d instances x {filter off, on}", worst, instances)};
}

RunSpec convergence_spec() {
  RunSpec spec;  // 10 train identities x 8, 2 cameras, D=64 -> mlp2 -> d=32
  spec.train.loss = LossKind::sn;
  spec.train.sn = SNConfig{30.0, 0.1, 8};
  spec.train.P = 8;
  spec.train.Q = 4;
  spec.train.total_epochs = 200;
  return spec;
}

Outcome convergence(EmbeddingModel& trained) {
  const auto t0 = std::chrono::steady_clock::now();
  auto run = run_experiment(convergence_spec());
  const double secs = seconds_since(t0);
  trained = run.result.model;
  const double r1 = run.report.cmc.front(), map = run.report.map;
  return {r1 >= 0.95 && map >= 0.90 && secs < 300.0,
          fmt("rank-1 %.4f, mAP %.4f on %zu held-out queries; %.2fs", r1, map, run.report.per_query_ap.size(), secs)};
}

SweepSpec sweep_spec(std::vector<SweepPoint> points) {
  SweepSpec spec;
  spec.base.benchmark = sweep_benchmark();
  spec.points = std::move(points);
  spec.seeds = 5;
  spec.jobs = jobs();
  return spec;
}

Outcome lambda_effect() {
  const double lambdas[] = {0.0, 0.001, 0.01, 0.1, 1.0, 10.0};
  const auto rows = run_sweep(sweep_spec(lambda_grid({std::begin(lambdas), std::end(lambdas)}, 30.0, 8)));
  std::printf("      lambda    mAP     rank-1   (K=8, sigma=30, 5 seeds)\n");
  for (const auto& r : rows) std::printf("      %-8g  %.4f  %.4f\n", r.point.lambda, r.map, r.rank1);
  const double at0 = rows[0].map, at01 = rows[3].map;
  return {at01 >= at0 - 0.01, fmt("mAP %.4f at lambda=0.1 vs %.4f at lambda=0", at01, at0)};
}

Outcome k_effect() {
  const std::size_t ks[] = {2, 4, 8, 16, 31};
  const auto rows = run_sweep(sweep_spec(k_sigma_grid({std::begin(ks), std::end(ks)}, {10.0, 30.0}, 0.1)));
  std::printf("      K    mAP s=10  mAP s=30   (lambda=0.1, 5 seeds)\n");
  for (std::size_t i = 0; i + 1 < rows.size(); i += 2) {
    std::printf("      %-3zu  %.4f    %.4f\n", rows[i].point.K, rows[i].map, rows[i + 1].map);
  }
  bool pass = true;
  std::string detail;
  for (double sigma : {10.0, 30.0}) {
    double best = -1.0, full = -1.0;
    std::size_t best_k = 0;
    for (const auto& r : rows) {
      if (r.point.sigma != sigma) continue;
      if (r.map > best) best = r.map, best_k = r.point.K;
      if (r.point.K == 31) full = r.map;
    }
    pass = pass && full <= best;
    detail += fmt("%ssigma=%g: K=31 %.4f, best K=%zu %.4f", detail.empty() ? "" : "; ", sigma, full, best_k, best);
  }
  return {pass, detail};
}

Outcome distractors(const EmbeddingModel& trained) {
  const auto t0 = std::chrono::steady_clock::now();
  const auto spec = convergence_spec();
  const auto bench = make_benchmark(spec.benchmark);
  SyntheticSpec pool = spec.benchmark.data;
  pool.identity_offset = pool.num_identities;
  pool.num_identities = 10000 / pool.samples_per_identity;
  const std::size_t counts[] = {0, 1000, 10000};
  const auto reports = gallery_scaling(trained, bench.query, bench.gallery, counts, pool);
  bool pass = true;
  for (std::size_t k = 1; k < reports.size(); ++k) {
    pass = pass && reports[k].map <= reports[k - 1].map;
    for (std::size_t i = 0; i < reports[k].per_query_ap.size(); ++i) {
      pass = pass && reports[k].per_query_ap[i] <= reports[k - 1].per_query_ap[i];
    }
  }
  const double secs = seconds_since(t0);
  return {pass && secs < 120.0, fmt("mAP %.4f -> %.4f -> %.4f (gallery %zu -> %zu -> %zu); %.2fs", reports[0].map,
                                    reports[1].map, reports[2].map, reports[0].gallery_size, reports[1].gallery_size,
                                    reports[2].gallery_size, secs)};
}

Outcome determinism() {
  const fs::path root = fs::temp_directory_path() / "snl_acceptance_determinism";
  fs::remove_all(root);
  std::vector<std::string> stdout_runs;
  for (const char* run : {"a", "b"}) {
    const auto d = (root / run).string();
    // outputs resolve against --out-dir, inputs against the working directory
    auto in = [&](const char* f) { return (root / run / f).string(); };
    std::string out, chunk;
    int rc = 0;
    rc |= cli({"synth", "--out-dir", d, "--out", "train.csv", "--seed", "9"}, &chunk), out += chunk;
    rc |= cli({"synth", "--out-dir", d, "--out", "all.csv", "--ids", "6", "--identity-offset", "10", "--query-out",
               "query.csv", "--gallery-out", "gallery.csv", "--seed", "9"},
              &chunk),
        out += chunk;
    rc |= cli({"train", "--out-dir", d, "--data", in("train.csv"), "--query", in("query.csv"), "--gallery", in("gallery.csv"),
               "--epochs", "40", "--eval-every", "10", "--seed", "3"},
              &chunk),
        out += chunk;
    rc |= cli({"eval", "--out-dir", d, "--checkpoint", in("checkpoint.json"), "--query", in("query.csv"), "--gallery", in("gallery.csv"), "--out", "eval.json"},
              &chunk),
        out += chunk;
    rc |= cli({"eval", "--out-dir", d, "--checkpoint", in("checkpoint.json"), "--query", in("query.csv"), "--gallery", in("gallery.csv"), "--distractors", "0,100,400", "--out", "scaling.csv"},
              &chunk),
        out += chunk;
    rc |= cli({"gradcheck", "--out-dir", d, "--trials", "8", "--seed", "4", "--out", "gradcheck.json"}, &chunk),
        out += chunk;
    rc |= cli({"sweep", "--out-dir", d, "--param", "k-sigma", "--ks", "2,8", "--sigmas", "30", "--seeds", "2",
               "--epochs", "30", "--jobs", "4", "--out", "sweep.csv"},
              &chunk),
        out += chunk;
    if (rc != 0) return {false, fmt("a command failed in run %s: %s", run, last_error.c_str())};
    // progress lines name the run directory
    for (std::size_t at; (at = out.find(d)) != std::string::npos;) out.replace(at, d.size(), "<dir>");
    stdout_runs.push_back(out);
  }
  std::size_t files = 0, differing = 0;
  for (const auto& entry : fs::directory_iterator(root / "a")) {
    ++files;
    const auto other = root / "b" / entry.path().filename();
    if (!fs::exists(other) || slurp(entry.path()) != slurp(other)) ++differing;
  }
  const bool same_stdout = stdout_runs[0] == stdout_runs[1];
  fs::remove_all(root);
  return {files >= 10 && differing == 0 && same_stdout,
          fmt("%zu artifacts from synth/train/eval/gradcheck/sweep, %zu differ; stdout %s", files, differing,
              same_stdout ? "identical" : "differs")};
}

}  // namespace

int main() {
  EmbeddingModel trained;
  const std::vector<std::pair<const char*, std::function<Outcome()>>> criteria{
      {"gradient correctness", gradient_correctness},
      {"loss-form equivalence", form_equivalence},
      {"loss invariants", invariants},
      {"baseline oracle", baseline_oracle},
      {"retrieval-metric oracle", metric_oracle},
      {"end-to-end convergence", [&] { return convergence(trained); }},
      {"lambda effect", lambda_effect},
      {"K effect", k_effect},
      {"distractor monotonicity", [&] { return distractors(trained); }},
      {"determinism", determinism},
  };
  int failed = 0;
  for (std::size_t i = 0; i < criteria.size(); ++i) {
    Outcome o;
    try {
      o = criteria[i].second();
    } catch (const std::exception& e) {
      o = {false, std::string("threw: ") + e.what()};
    }
    failed += !o.pass;
    std::printf("[%s] %zu %s: %s\n", o.pass ? "PASS" : "FAIL", i + 1, criteria[i].first, o.detail.c_str());
    std::fflush(stdout);
  }
  std::printf("%zu/%zu criteria passed\n", criteria.size() - failed, criteria.size());
  return failed == 0 ? 0 : 1;
}
