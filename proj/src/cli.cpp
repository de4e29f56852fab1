#include "snl/cli.hpp"

#include <algorithm>
#include <charconv>
#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <map>
#include <ostream>
#include <set>
#include <sstream>

#include <CLI11.hpp>
#include <json.hpp>

#include "snl/data_model.hpp"
#include "snl/error.hpp"
#include "snl/evaluation.hpp"
#include "snl/experiments.hpp"
#include "snl/gradients.hpp"
#include "snl/trainer.hpp"

namespace snl {

namespace {

namespace fs = std::filesystem;
using json = nlohmann::json;

// Config-file sections each command reads. Keys inside a section are flag
// names without the leading dashes ('_' and '-' both accepted).
const std::map<std::string, std::vector<std::string>> kSections = {
    {"synth", {"data"}},
    {"train", {"data", "train", "sn", "eval"}},
    {"eval", {"data", "eval"}},
    {"gradcheck", {"gradcheck"}},
    {"sweep", {"data", "train", "sn", "sweep"}},
};

struct ModelOptions {
  std::string kind = "mlp2";
  std::size_t hidden = 64;
  std::size_t out_dim = 32;
};

struct TrainOptions {
  std::string loss = "sn";
  std::string optimizer = "adam";
  TrainConfig config;
  bool camera_filter = true;
  CLI::Option* ts = nullptr;
  bool ts_given = false;
};

struct State {
  std::string out_dir = ".";
  bool out_dir_flag = false;
  std::string config;

  // synth
  SyntheticSpec synth;
  std::string synth_out, query_out, gallery_out;
  double query_fraction = 0.25;

  // train
  SyntheticSpec train_data;
  std::size_t train_ids = 10, test_ids = 10;
  std::string data_path, query_path, gallery_path;
  ModelOptions model;
  TrainOptions train;

  // eval
  SyntheticSpec eval_data;
  std::string checkpoint, eval_query, eval_gallery, eval_out, distractors;
  bool eval_camera_filter = true;

  // gradcheck
  GradcheckOptions grad;
  bool negate_case2 = false, drop_neighbor_roles = false;
  std::string fd_precision = "quad", grad_out, grad_sigmas, grad_lambdas;

  // sweep
  BenchmarkSpec sweep_bench = sweep_benchmark();
  std::size_t sweep_train_ids = 10, sweep_test_ids = 10;
  ModelOptions sweep_model;
  TrainOptions sweep_train;
  std::string param, lambdas = "0,0.001,0.01,0.1,1,10", ks = "2,4,8,16,31", sigmas = "10,30", sweep_out;
  std::size_t seeds = 5, jobs = 1;
};

class UsageError : public Error {
 public:
  using Error::Error;
};

template <class T>
std::vector<T> parse_list(const std::string& text, const std::string& flag) {
  std::vector<T> out;
  std::size_t pos = 0;
  while (pos <= text.size() && !text.empty()) {
    const auto end = std::min(text.find(',', pos), text.size());
    const std::string item = text.substr(pos, end - pos);
    T value{};
    const auto [ptr, ec] = std::from_chars(item.data(), item.data() + item.size(), value);
    if (item.empty() || ec != std::errc() || ptr != item.data() + item.size()) {
      throw UsageError(flag + ": '" + item + "' is not a valid number");
    }
    out.push_back(value);
    pos = end + 1;
  }
  if (out.empty()) throw UsageError(flag + ": list is empty");
  return out;
}

std::string config_token(const std::string& key, const json& value) {
  std::string name = key;
  std::replace(name.begin(), name.end(), '_', '-');
  std::string text;
  if (value.is_string()) {
    text = value.get<std::string>();
  } else if (value.is_array()) {
    for (std::size_t i = 0; i < value.size(); ++i) {
      if (i) text += ',';
      text += value[i].is_string() ? value[i].get<std::string>() : value[i].dump();
    }
  } else if (value.is_primitive() && !value.is_null()) {
    text = value.dump();
  } else {
    throw UsageError("config key '" + key + "' must be a scalar or a list");
  }
  return "--" + name + "=" + text;
}

std::vector<std::string> config_tokens(const std::string& path, const std::string& command) {
  std::ifstream in(path);
  if (!in) throw UsageError("cannot open config file " + path);
  json j;
  try {
    j = json::parse(in);
  } catch (const json::exception& e) {
    throw UsageError("config file " + path + ": " + e.what());
  }
  if (!j.is_object()) throw UsageError("config file must hold an object");
  std::set<std::string> known;
  for (const auto& [cmd, secs] : kSections) known.insert(secs.begin(), secs.end());
  const auto& wanted = kSections.at(command);
  std::vector<std::string> tokens;
  for (const auto& [key, value] : j.items()) {
    if (key == "output_dir" || key == "seed") {
      tokens.push_back(config_token(key == "seed" ? key : "out_dir", value));
      continue;
    }
    if (!known.count(key)) throw UsageError("unknown config section '" + key + "'");
    if (!value.is_object()) throw UsageError("config section '" + key + "' must be an object");
    if (std::find(wanted.begin(), wanted.end(), key) == wanted.end()) continue;
    for (const auto& [k, v] : value.items()) tokens.push_back(config_token(k, v));
  }
  return tokens;
}

void add_common(CLI::App* sub, State& st) {
  sub->add_option("--out-dir", st.out_dir, "Directory for relative output paths (flag > SNL_OUTPUT_DIR > config)");
  sub->add_option("--config", st.config, "JSON config file with nested sections; flags override it");
}

void add_data_options(CLI::App* sub, SyntheticSpec& spec, bool with_seed = true) {
  sub->add_option("--per-id", spec.samples_per_identity, "Samples per identity")->capture_default_str();
  sub->add_option("--cams", spec.num_cameras, "Cameras")->capture_default_str();
  sub->add_option("--dim", spec.dimension, "Feature dimension")->capture_default_str();
  sub->add_option("--identity-spread", spec.identity_spread, "Std-dev of identity centres")->capture_default_str();
  sub->add_option("--intra-spread", spec.intra_spread, "Std-dev of per-sample noise")->capture_default_str();
  sub->add_option("--camera-shift", spec.camera_shift, "Std-dev of per-camera offsets")->capture_default_str();
  if (with_seed) sub->add_option("--data-seed", spec.seed, "Data generator seed")->capture_default_str();
}

void add_model_options(CLI::App* sub, ModelOptions& m) {
  sub->add_option("--model", m.kind, "linear or mlp2")->capture_default_str();
  sub->add_option("--hidden", m.hidden, "Hidden width (mlp2)")->capture_default_str();
  sub->add_option("--out-dim", m.out_dim, "Embedding dimension d")->capture_default_str();
}

void add_train_options(CLI::App* sub, TrainOptions& t, bool with_sn_point) {
  auto& c = t.config;
  sub->add_option("--loss", t.loss, "sn, triplet_bh, triplet_ba or softmax")->capture_default_str();
  if (with_sn_point) {
    sub->add_option("--lambda", c.sn.lambda, "Squeeze weight")->capture_default_str();
    sub->add_option("--sigma", c.sn.sigma, "Distance scale")->capture_default_str();
    sub->add_option("--k", c.sn.K, "Support neighbours per anchor")->capture_default_str();
  }
  sub->add_option("--margin", c.margin, "Triplet margin")->capture_default_str();
  sub->add_option("--optimizer", t.optimizer, "adam or sgd")->capture_default_str();
  sub->add_option("--r0", c.base_lr, "Base learning rate")->capture_default_str();
  t.ts = sub->add_option("--ts", c.decay_start, "Epoch after which the rate decays (clamped to --tf unless given)")
             ->capture_default_str();
  sub->add_option("--tf,--epochs", c.total_epochs, "Total epochs")->capture_default_str();
  sub->add_option("--p", c.P, "Identities per batch")->capture_default_str();
  sub->add_option("--q", c.Q, "Samples per identity in a batch")->capture_default_str();
  sub->add_option("--seed", c.seed, "Training and initialisation seed")->capture_default_str();
  sub->add_option("--eval-every", c.eval_every, "Epochs between held-out evaluations (0: last only)")
      ->capture_default_str();
  sub->add_flag("--camera-filter,!--no-camera-filter", t.camera_filter,
                "Drop same-identity same-camera gallery items");
}

TrainConfig finish_train_config(const TrainOptions& t) {
  TrainConfig c = t.config;
  c.loss = parse_loss_kind(t.loss);
  c.optimizer = parse_optimizer_kind(t.optimizer);
  c.camera_filter = t.camera_filter;
  if (!t.ts_given && c.total_epochs < c.decay_start) c.decay_start = std::max(c.total_epochs, 1);
  if (c.total_epochs == 0) c.decay_start = 0;
  c.validate();
  return c;
}

fs::path output_path(const State& st, const std::string& path) {
  fs::path p(path);
  if (p.is_absolute()) return p;
  std::string dir = st.out_dir;
  if (!st.out_dir_flag) {
    if (const char* env = std::getenv("SNL_OUTPUT_DIR"); env && *env) dir = env;
  }
  return fs::path(dir) / p;
}

void write_text(const fs::path& path, const std::string& text) {
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw Error("failed writing " + path.string());
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

int cmd_synth(State& st, std::ostream& out) {
  if (st.synth_out.empty()) throw UsageError("--out is required");
  if (st.query_out.empty() != st.gallery_out.empty()) {
    throw UsageError("--query-out and --gallery-out go together");
  }
  const auto data = generate_synthetic(st.synth);
  const auto path = output_path(st, st.synth_out);
  if (path.has_parent_path()) fs::create_directories(path.parent_path());
  save_features(data, path);
  out << "wrote " << data.size() << " samples (" << data.num_identities() << " identities) to " << path.string()
      << "\n";
  if (!st.query_out.empty()) {
    const auto split = split_query_gallery(data, st.query_fraction, st.synth.seed);
    const auto q = output_path(st, st.query_out);
    const auto g = output_path(st, st.gallery_out);
    for (const auto& p : {q, g}) {
      if (p.has_parent_path()) fs::create_directories(p.parent_path());
    }
    save_features(split.query, q);
    save_features(split.gallery, g);
    out << "query " << split.query.size() << " -> " << q.string() << ", gallery " << split.gallery.size() << " -> "
        << g.string() << "\n";
  }
  return exit_ok;
}

int cmd_train(State& st, std::ostream& out) {
  const auto config = finish_train_config(st.train);
  Dataset data;
  std::optional<Dataset> query, gallery;
  if (!st.data_path.empty()) {
    data = load_features(st.data_path);
    if (st.query_path.empty() != st.gallery_path.empty()) {
      throw UsageError("--query and --gallery go together");
    }
    if (!st.query_path.empty()) {
      query = load_features(st.query_path);
      gallery = load_features(st.gallery_path);
    }
  } else {
    if (!st.query_path.empty() || !st.gallery_path.empty()) {
      throw UsageError("--query/--gallery need --data");
    }
    BenchmarkSpec bench;
    bench.data = st.train_data;
    bench.data.num_identities = static_cast<int>(st.train_ids + st.test_ids);
    bench.train_identities = st.train_ids;
    auto b = make_benchmark(bench);
    data = std::move(b.train);
    query = std::move(b.query);
    gallery = std::move(b.gallery);
  }

  const auto init = make_model(parse_model_kind(st.model.kind), data.dimension(), st.model.out_dim, st.model.hidden,
                               config.seed);
  std::optional<HeldOut> held_out;
  if (query) held_out.emplace(HeldOut{*query, *gallery});
  const auto result = train(data, init, config, held_out);

  write_text(output_path(st, "checkpoint.json"), checkpoint_json(result.model));
  write_text(output_path(st, "history.csv"), history_csv(result.history));
  out << "trained " << result.history.size() << " epochs";
  if (!result.history.empty()) out << ", final loss " << fmt("%.6g", result.history.back().loss);
  out << "\n";
  if (result.final_report) {
    write_text(output_path(st, "report.json"), result.final_report->to_json());
    out << "held-out rank-1 " << fmt("%.4f", result.final_report->cmc.front()) << ", mAP "
        << fmt("%.4f", result.final_report->map) << "\n";
  }
  out << "outputs in " << output_path(st, "").string() << "\n";
  return exit_ok;
}

int cmd_eval(State& st, std::ostream& out) {
  if (st.checkpoint.empty() || st.eval_query.empty() || st.eval_gallery.empty()) {
    throw UsageError("--checkpoint, --query and --gallery are required");
  }
  const auto model = load_checkpoint(st.checkpoint);
  const auto query = load_features(st.eval_query);
  const auto gallery = load_features(st.eval_gallery);
  for (const auto* ds : {&query, &gallery}) {
    if (ds->dimension() != model.input_dim) {
      throw ShapeError("features have dimension " + std::to_string(ds->dimension()) + ", checkpoint expects " +
                       std::to_string(model.input_dim));
    }
  }

  std::string text;
  if (st.distractors.empty()) {
    text = evaluate(make_retrieval_set(query, embed(model, query)), make_retrieval_set(gallery, embed(model, gallery)),
                    st.eval_camera_filter)
               .to_json();
  } else {
    const auto counts = parse_list<std::size_t>(st.distractors, "--distractors");
    const std::size_t max_count = *std::max_element(counts.begin(), counts.end());
    int max_id = 0;
    for (const auto* ds : {&query, &gallery}) {
      if (!ds->empty()) max_id = std::max(max_id, ds->identity_index().rbegin()->first);
    }
    SyntheticSpec spec = st.eval_data;
    spec.dimension = static_cast<int>(model.input_dim);
    spec.identity_offset = max_id + 1;
    const auto per = static_cast<std::size_t>(std::max(spec.samples_per_identity, 1));
    spec.num_identities = static_cast<int>(std::max<std::size_t>(1, (max_count + per - 1) / per));
    const auto reports = gallery_scaling(model, query, gallery, counts, spec, st.eval_camera_filter);
    text = "distractors," + EvalReport::csv_header() + "\n";
    for (std::size_t i = 0; i < counts.size(); ++i) {
      text += std::to_string(counts[i]) + "," + reports[i].csv_row() + "\n";
    }
  }
  if (st.eval_out.empty()) {
    out << text;
  } else {
    write_text(output_path(st, st.eval_out), text);
  }
  return exit_ok;
}

int cmd_gradcheck(State& st, std::ostream& out) {
  GradcheckOptions opt = st.grad;
  if (!st.grad_sigmas.empty()) opt.sigmas = parse_list<double>(st.grad_sigmas, "--sigmas");
  if (!st.grad_lambdas.empty()) opt.lambdas = parse_list<double>(st.grad_lambdas, "--lambdas");
  if (st.negate_case2 && st.drop_neighbor_roles) {
    throw UsageError("choose one of --negate-case2 and --drop-neighbor-roles");
  }
  if (st.negate_case2) opt.ablation = GradientAblation::negate_positive_role;
  if (st.drop_neighbor_roles) opt.ablation = GradientAblation::drop_neighbor_roles;
  if (st.fd_precision == "quad") {
    opt.precision = FdPrecision::binary128;
  } else if (st.fd_precision == "double") {
    opt.precision = FdPrecision::binary64;
  } else {
    throw UsageError("--fd-precision must be quad or double");
  }
  const auto report = gradcheck(opt);
  if (st.grad_out.empty()) {
    out << report.to_json();
  } else {
    write_text(output_path(st, st.grad_out), report.to_json());
    out << report.to_text();
  }
  return report.pass ? exit_ok : exit_check_failed;
}

int cmd_sweep(State& st, std::ostream& out) {
  SweepSpec spec;
  spec.base.benchmark = st.sweep_bench;
  spec.base.benchmark.data.num_identities = static_cast<int>(st.sweep_train_ids + st.sweep_test_ids);
  spec.base.benchmark.train_identities = st.sweep_train_ids;
  spec.base.model = parse_model_kind(st.sweep_model.kind);
  spec.base.hidden_dim = st.sweep_model.hidden;
  spec.base.output_dim = st.sweep_model.out_dim;
  spec.base.train = finish_train_config(st.sweep_train);
  if (spec.base.train.loss != LossKind::sn) throw UsageError("only the sn loss has lambda/K/sigma");
  spec.seeds = st.seeds;
  spec.jobs = st.jobs;
  const auto& sn = spec.base.train.sn;
  if (st.param == "lambda") {
    spec.points = lambda_grid(parse_list<double>(st.lambdas, "--lambdas"), sn.sigma, sn.K);
  } else if (st.param == "k-sigma") {
    spec.points = k_sigma_grid(parse_list<std::size_t>(st.ks, "--ks"), parse_list<double>(st.sigmas, "--sigmas"),
                               sn.lambda);
  } else {
    throw UsageError("--param must be lambda or k-sigma");
  }
  const std::size_t m = spec.base.train.P * spec.base.train.Q;
  for (const auto& p : spec.points) {
    TrainConfig c = spec.base.train;
    c.sn = {p.sigma, p.lambda, p.K};
    if (c.sn.K > m - 1) {
      throw ValidationError("K=" + std::to_string(p.K) + " exceeds batch size - 1 = " + std::to_string(m - 1));
    }
    c.validate();
  }
  const auto text = sweep_csv(run_sweep(spec));
  if (st.sweep_out.empty()) {
    out << text;
  } else {
    write_text(output_path(st, st.sweep_out), text);
  }
  return exit_ok;
}

std::string find_config(const std::vector<std::string>& args) {
  for (std::size_t i = 0; i < args.size(); ++i) {
    if (args[i] == "--config" && i + 1 < args.size()) return args[i + 1];
    if (args[i].rfind("--config=", 0) == 0) return args[i].substr(9);
  }
  return {};
}

}  // namespace

int run_cli(const std::vector<std::string>& args, std::ostream& out, std::ostream& err) {
  State st;
  CLI::App app{"Support-neighbour loss toolkit: synthetic data, training, retrieval evaluation, gradient checks"};
  app.name("snl");
  app.option_defaults()->multi_option_policy(CLI::MultiOptionPolicy::TakeLast);
  app.require_subcommand(1);

  auto* synth = app.add_subcommand("synth", "Write a synthetic feature CSV");
  add_common(synth, st);
  synth->add_option("--ids", st.synth.num_identities, "Identities")->capture_default_str();
  add_data_options(synth, st.synth, false);
  synth->add_option("--seed", st.synth.seed, "Generator seed")->capture_default_str();
  synth->add_option("--identity-offset", st.synth.identity_offset, "Label of the first identity")
      ->capture_default_str();
  synth->add_option("--out", st.synth_out, "Output CSV");
  synth->add_option("--query-out", st.query_out, "Also write a query split here");
  synth->add_option("--gallery-out", st.gallery_out, "Also write the gallery split here");
  synth->add_option("--query-fraction", st.query_fraction, "Per-identity query share")->capture_default_str();

  auto* train_cmd = app.add_subcommand("train", "Train an embedding model; writes checkpoint.json, history.csv "
                                                "and (with held-out data) report.json");
  add_common(train_cmd, st);
  train_cmd->add_option("--data", st.data_path, "Training CSV (default: built-in synthetic benchmark)");
  train_cmd->add_option("--query", st.query_path, "Held-out query CSV");
  train_cmd->add_option("--gallery", st.gallery_path, "Held-out gallery CSV");
  train_cmd->add_option("--train-ids", st.train_ids, "Benchmark training identities")->capture_default_str();
  train_cmd->add_option("--test-ids", st.test_ids, "Benchmark held-out identities")->capture_default_str();
  add_data_options(train_cmd, st.train_data);
  add_model_options(train_cmd, st.model);
  add_train_options(train_cmd, st.train, true);

  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on query/gallery CSVs");
  add_common(eval_cmd, st);
  eval_cmd->add_option("--checkpoint", st.checkpoint, "Checkpoint JSON");
  eval_cmd->add_option("--query", st.eval_query, "Query CSV");
  eval_cmd->add_option("--gallery", st.eval_gallery, "Gallery CSV");
  eval_cmd->add_option("--out", st.eval_out, "Output file (default: stdout)");
  eval_cmd->add_option("--distractors", st.distractors,
                       "Comma-separated distractor counts; prints a gallery-scaling table");
  eval_cmd->add_flag("--camera-filter,!--no-camera-filter", st.eval_camera_filter,
                     "Drop same-identity same-camera gallery items");
  add_data_options(eval_cmd, st.eval_data, false);
  eval_cmd->add_option("--seed", st.eval_data.seed, "Distractor generator seed (match the base data)")
      ->capture_default_str();

  auto* grad_cmd = app.add_subcommand("gradcheck", "Compare the analytic SN gradient with finite differences");
  add_common(grad_cmd, st);
  grad_cmd->add_option("--trials", st.grad.trials)->capture_default_str();
  grad_cmd->add_option("--seed", st.grad.seed)->capture_default_str();
  grad_cmd->add_option("--batch", st.grad.batch_size, "Batch size M")->capture_default_str();
  grad_cmd->add_option("--dim", st.grad.dimension, "Embedding dimension")->capture_default_str();
  grad_cmd->add_option("--ids", st.grad.identities, "Identities per batch")->capture_default_str();
  grad_cmd->add_option("--k", st.grad.K)->capture_default_str();
  grad_cmd->add_option("--step", st.grad.h, "Central-difference step")->capture_default_str();
  grad_cmd->add_option("--tol", st.grad.tolerance)->capture_default_str();
  grad_cmd->add_option("--sigmas", st.grad_sigmas, "Comma-separated sigma cycle (default 0.5,5,30,60)");
  grad_cmd->add_option("--lambdas", st.grad_lambdas, "Comma-separated lambda cycle (default 0,0.1,1)");
  grad_cmd->add_option("--fd-precision", st.fd_precision, "quad or double")->capture_default_str();
  grad_cmd->add_flag("--negate-case2", st.negate_case2, "Test hook: flip the positive-neighbour term");
  grad_cmd->add_flag("--drop-neighbor-roles", st.drop_neighbor_roles, "Test hook: keep only anchor terms");
  grad_cmd->add_option("--out", st.grad_out, "Write the JSON report here and print a summary");

  auto* sweep_cmd = app.add_subcommand("sweep", "Train and evaluate over a lambda or (K, sigma) grid");
  add_common(sweep_cmd, st);
  sweep_cmd->add_option("--param", st.param, "lambda or k-sigma");
  sweep_cmd->add_option("--lambdas", st.lambdas, "Lambda grid")->capture_default_str();
  sweep_cmd->add_option("--ks", st.ks, "K grid")->capture_default_str();
  sweep_cmd->add_option("--sigmas", st.sigmas, "Sigma grid")->capture_default_str();
  sweep_cmd->add_option("--seeds", st.seeds, "Seeds averaged per point")->capture_default_str();
  sweep_cmd->add_option("--jobs", st.jobs, "Grid points trained in parallel")->capture_default_str();
  sweep_cmd->add_option("--out", st.sweep_out, "Output CSV (default: stdout)");
  sweep_cmd->add_option("--train-ids", st.sweep_train_ids)->capture_default_str();
  sweep_cmd->add_option("--test-ids", st.sweep_test_ids)->capture_default_str();
  add_data_options(sweep_cmd, st.sweep_bench.data);
  add_model_options(sweep_cmd, st.sweep_model);
  add_train_options(sweep_cmd, st.sweep_train, true);

  auto parse = [&](std::vector<std::string> tokens) {
    std::reverse(tokens.begin(), tokens.end());
    app.parse(tokens);
    for (auto* t : {&st.train, &st.sweep_train}) t->ts_given = t->ts_given || t->ts->count() > 0;
  };

  const std::string command = args.empty() ? "" : args.front();
  try {
    try {
      const auto config = find_config(args);
      if (!config.empty() && kSections.count(command)) {
        auto tokens = config_tokens(config, command);
        tokens.insert(tokens.begin(), command);
        parse(tokens);
        app.clear();
      }
      parse(args);
      st.out_dir_flag = false;
      for (auto* sub : app.get_subcommands()) {
        if (auto* o = sub->get_option_no_throw("--out-dir"); o && o->count() > 0) st.out_dir_flag = true;
      }
    } catch (const CLI::ParseError& e) {
      const int code = app.exit(e, out, err);
      return code == 0 ? exit_ok : exit_usage;
    }

    if (synth->parsed()) return cmd_synth(st, out);
    if (train_cmd->parsed()) return cmd_train(st, out);
    if (eval_cmd->parsed()) return cmd_eval(st, out);
    if (grad_cmd->parsed()) return cmd_gradcheck(st, out);
    if (sweep_cmd->parsed()) return cmd_sweep(st, out);
    return exit_usage;
  } catch (const std::exception& e) {
    err << "snl " << command << ": " << e.what() << "\n";
    return exit_usage;
  }
}

}  // namespace snl
