#include "sketchclean/cli.hpp"

#include <CLI11.hpp>
#include <spdlog/sinks/stdout_color_sinks.h>
#include <spdlog/spdlog.h>

#include <cstdlib>
#include <fstream>
#include <iostream>
#include <memory>

#include "sketchclean/checkpoint.hpp"
#include "sketchclean/errors.hpp"
#include "sketchclean/retrieval.hpp"
#include "sketchclean/service.hpp"
#include "sketchclean/synth.hpp"
#include "sketchclean/train.hpp"

namespace sketchclean {

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitUsage = 2;

void write_text(const std::filesystem::path& path, const std::string& text) {
  std::ofstream out(path, std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out << text;
  if (!out) throw IoError("write failed for " + path.string());
}

struct SynthArgs {
  std::string out;
  std::size_t n = 100;
  std::size_t size = 64;
  std::uint64_t seed = 0;
  double stroke_width = 1.0;
  DefectProfile profile{2.0, 2, 1.5, 3, 1, 0.0, 0};
};

struct TrainArgs {
  std::string config;
  std::string data;
  std::string checkpoint = "scnet.ckpt";
  std::string history;
  std::string resume;
  std::optional<std::uint64_t> seed;
};

struct EvalArgs {
  std::string checkpoint;
  std::string data;
  std::string config;
  std::string csv;
  std::string json;
  bool test_split = false;
};

struct CleanArgs {
  std::string checkpoint;
  std::string in;
  std::string out;
};

struct IndexArgs {
  std::string data;
  std::string out;
  std::string checkpoint;
};

struct RetrieveArgs {
  std::string index;
  std::string query;
  std::string checkpoint;
  std::size_t k = 10;
};

struct ServeArgs {
  std::string checkpoint;
  std::string index;
  std::string dataset;
  int port = 8787;
  std::size_t threads = 4;
  long timeout_ms = 10000;
};

int run_synth(const SynthArgs& a) {
  const auto pairs = make_dataset(a.n, a.size, a.size, a.profile, a.seed, a.stroke_width);
  write_dataset(pairs, a.out);
  spdlog::info("wrote {} pairs to {}", pairs.size(), a.out);
  return kExitOk;
}

int run_train(const TrainArgs& a) {
  TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  if (a.seed) cfg.seed = *a.seed;
  const auto pairs = read_dataset(a.data);
  if (pairs.empty()) throw ArgumentError("dataset " + a.data + " is empty");
  auto [train_set, test_set] = split_dataset(pairs, cfg.split_ratio, cfg.seed, cfg.benchmark_split);
  spdlog::info("training on {} pairs, {} held out", train_set.size(), test_set.size());
  TrainOptions options;
  options.checkpoint_path = a.checkpoint;
  if (!a.history.empty()) options.history_path = a.history;
  std::optional<Checkpoint> resume;
  if (!a.resume.empty()) {
    resume = load_checkpoint(a.resume);
    options.resume = &*resume;
  }
  options.eval_pairs = test_set;
  const auto result = train(train_set, cfg, options);
  if (!result.history.epochs.empty()) {
    spdlog::info("final epoch loss {:.6f}", result.history.epochs.back().train_loss);
  }
  if (!test_set.empty()) std::cout << metrics_summary_json(evaluate(result.network, test_set, cfg.loss)) << '\n';
  return kExitOk;
}

int run_eval(const EvalArgs& a) {
  const TrainConfig cfg = a.config.empty() ? TrainConfig{} : load_train_config(a.config);
  auto pairs = read_dataset(a.data);
  if (pairs.empty()) throw ArgumentError("dataset " + a.data + " is empty");
  if (a.test_split) pairs = split_dataset(pairs, cfg.split_ratio, cfg.seed, cfg.benchmark_split).second;
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const auto rows = evaluate_pairs(ckpt.network, pairs, cfg.loss);
  std::vector<MetricReport> reports;
  for (const auto& row : rows) reports.push_back(row.report);
  const std::string summary = metrics_summary_json(aggregate(reports));
  if (!a.csv.empty()) write_text(a.csv, metrics_csv(rows));
  if (!a.json.empty()) write_text(a.json, summary + "\n");
  std::cout << summary << '\n';
  return kExitOk;
}

int run_clean(const CleanArgs& a) {
  const Checkpoint ckpt = load_checkpoint(a.checkpoint);
  const SketchRaster input = load_raster(a.in);
  const std::string png = clean_to_png(ckpt.network, input);
  std::ofstream out(a.out, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + a.out + " for writing");
  out.write(png.data(), static_cast<std::streamsize>(png.size()));
  if (!out) throw IoError("write failed for " + a.out);
  return kExitOk;
}

int run_index(const IndexArgs& a) {
  const auto pairs = read_dataset(a.data);
  if (pairs.empty()) throw ArgumentError("dataset " + a.data + " is empty");
  std::optional<Checkpoint> ckpt;
  if (!a.checkpoint.empty()) ckpt = load_checkpoint(a.checkpoint);
  RetrievalIndex index;
  for (const auto& pair : pairs) {
    const SketchRaster source = ckpt ? clean_sketch(ckpt->network, pair.clean) : pair.clean;
    index.add({pair.id, pair.category, embed(source)});
  }
  save_index(index, a.out);
  spdlog::info("indexed {} items into {}", index.size(), a.out);
  return kExitOk;
}

int run_retrieve(const RetrieveArgs& a) {
  const RetrievalIndex index = load_index(a.index);
  SketchRaster q = load_raster(a.query);
  if (!a.checkpoint.empty()) q = clean_sketch(load_checkpoint(a.checkpoint).network, q);
  if (a.k == 0 || a.k > index.size()) throw ArgumentError("--k must lie in [1, index size]");
  for (const auto& hit : query(index, embed(q), a.k)) {
    std::cout << hit.id << ' ' << hit.label << ' ' << hit.similarity << '\n';
  }
  return kExitOk;
}

int run_serve(const ServeArgs& a) {
  auto state = std::make_shared<ServiceState>();
  if (!a.checkpoint.empty()) state->network = load_checkpoint(a.checkpoint).network;
  if (!a.index.empty()) state->index = load_index(a.index);
  ServiceOptions options;
  if (!a.dataset.empty()) options.dataset_root = a.dataset;
  options.worker_threads = a.threads;
  options.max_inflight = 2 * a.threads;
  options.timeout = std::chrono::milliseconds(a.timeout_ms);
  const SketchService service(state, options);
  return service.listen("0.0.0.0", a.port) ? kExitOk : kExitRuntime;
}

}  // namespace

void configure_logging_from_env() {
  const char* level = std::getenv("SKETCHCLEAN_LOG");
  const std::string value = level == nullptr ? "info" : level;
  if (value == "error") {
    spdlog::set_level(spdlog::level::err);
  } else if (value == "debug") {
    spdlog::set_level(spdlog::level::debug);
  } else {
    spdlog::set_level(spdlog::level::info);
  }
}

int cli_dispatch(int argc, const char* const* argv) {
  configure_logging_from_env();
  // Diagnostics go to stderr so stdout carries only results.
  static const auto logger = [] {
    auto l = spdlog::stderr_color_mt("sketchclean");
    spdlog::set_default_logger(l);
    return l;
  }();
  (void)logger;
  configure_logging_from_env();

  CLI::App app{"Sketch cleanup: synthesis, training, evaluation, retrieval and serving"};
  app.require_subcommand(1);

  SynthArgs synth;
  auto* synth_cmd = app.add_subcommand("synth", "Generate (rough, clean) pairs into a dataset directory");
  synth_cmd->add_option("--out", synth.out, "Dataset root")->required();
  synth_cmd->add_option("--n", synth.n, "Number of pairs")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--size", synth.size, "Raster side length")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--seed", synth.seed, "Seed");
  synth_cmd->add_option("--stroke-width", synth.stroke_width, "Stroke width in pixels")->check(CLI::PositiveNumber);
  synth_cmd->add_option("--gap-rate", synth.profile.gap_rate, "Gaps per 100 ink pixels")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--duplicates", synth.profile.duplicate_stroke_count, "Duplicate strokes")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--jitter", synth.profile.duplicate_jitter, "Duplicate jitter (pixels)")
      ->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--mesh", synth.profile.mesh_line_count, "Mesh lines")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--extra", synth.profile.extra_line_count, "Extra lines")->check(CLI::NonNegativeNumber);
  synth_cmd->add_option("--blur", synth.profile.blur_sigma, "Blur sigma (pixels)")->check(CLI::NonNegativeNumber);

  TrainArgs train_args;
  auto* train_cmd = app.add_subcommand("train", "Train from a config file and dataset directory");
  train_cmd->add_option("--config", train_args.config, "Experiment config (JSON)");
  train_cmd->add_option("--data", train_args.data, "Dataset root")->required();
  train_cmd->add_option("--checkpoint", train_args.checkpoint, "Checkpoint output path");
  train_cmd->add_option("--history", train_args.history, "History output (JSON lines)");
  train_cmd->add_option("--resume", train_args.resume, "Resume from checkpoint");
  train_cmd->add_option("--seed", train_args.seed, "Override the config seed");

  EvalArgs eval_args;
  auto* eval_cmd = app.add_subcommand("eval", "Evaluate a checkpoint on a dataset directory");
  eval_cmd->add_option("--checkpoint", eval_args.checkpoint, "Checkpoint")->required();
  eval_cmd->add_option("--data", eval_args.data, "Dataset root")->required();
  eval_cmd->add_option("--config", eval_args.config, "Experiment config (loss settings, split)");
  eval_cmd->add_option("--csv", eval_args.csv, "Per-pair CSV output");
  eval_cmd->add_option("--json", eval_args.json, "Summary JSON output");
  eval_cmd->add_flag("--test-split", eval_args.test_split, "Evaluate only the held-out split");

  CleanArgs clean_args;
  auto* clean_cmd = app.add_subcommand("clean", "Clean one sketch image");
  clean_cmd->add_option("--checkpoint", clean_args.checkpoint, "Checkpoint")->required();
  clean_cmd->add_option("--in", clean_args.in, "Input image")->required();
  clean_cmd->add_option("--out", clean_args.out, "Output PNG")->required();

  IndexArgs index_args;
  auto* index_cmd = app.add_subcommand("index", "Build a retrieval index from a dataset's clean sketches");
  index_cmd->add_option("--data", index_args.data, "Dataset root")->required();
  index_cmd->add_option("--out", index_args.out, "Index output path")->required();
  index_cmd->add_option("--checkpoint", index_args.checkpoint, "Embed items through this cleaner");

  RetrieveArgs retrieve_args;
  auto* retrieve_cmd = app.add_subcommand("retrieve", "Rank indexed items for a query sketch");
  retrieve_cmd->add_option("--index", retrieve_args.index, "Index file")->required();
  retrieve_cmd->add_option("--query", retrieve_args.query, "Query image")->required();
  retrieve_cmd->add_option("--checkpoint", retrieve_args.checkpoint, "Clean the query first");
  retrieve_cmd->add_option("--k", retrieve_args.k, "Results to return");

  ServeArgs serve_args;
  auto* serve_cmd = app.add_subcommand("serve", "Serve /clean, /retrieve, /health and thumbnails over HTTP");
  serve_cmd->add_option("--checkpoint", serve_args.checkpoint, "Checkpoint");
  serve_cmd->add_option("--index", serve_args.index, "Index file");
  serve_cmd->add_option("--dataset", serve_args.dataset, "Dataset root for thumbnails");
  serve_cmd->add_option("--port", serve_args.port, "Port")->check(CLI::Range(1, 65535));
  serve_cmd->add_option("--threads", serve_args.threads, "Worker threads")->check(CLI::PositiveNumber);
  serve_cmd->add_option("--timeout-ms", serve_args.timeout_ms, "Per-request deadline")->check(CLI::PositiveNumber);

  try {
    app.parse(argc, argv);
  } catch (const CLI::CallForHelp& e) {
    std::cout << app.help();
    return kExitOk;
  } catch (const CLI::ParseError& e) {
    std::cerr << e.what() << "\n\n" << app.help();
    return kExitUsage;
  }

  try {
    if (*synth_cmd) return run_synth(synth);
    if (*train_cmd) return run_train(train_args);
    if (*eval_cmd) return run_eval(eval_args);
    if (*clean_cmd) return run_clean(clean_args);
    if (*index_cmd) return run_index(index_args);
    if (*retrieve_cmd) return run_retrieve(retrieve_args);
    if (*serve_cmd) return run_serve(serve_args);
  } catch (const ArgumentError& e) {
    spdlog::error("{}", e.what());
    return kExitUsage;
  } catch (const std::exception& e) {
    spdlog::error("{}", e.what());
    return kExitRuntime;
  }
  std::cerr << app.help();
  return kExitUsage;
}

int cli_dispatch(const std::vector<std::string>& args) {
  std::vector<const char*> argv;
  argv.reserve(args.size() + 1);
  argv.push_back("sketchclean");
  for (const auto& a : args) argv.push_back(a.c_str());
  return cli_dispatch(static_cast<int>(argv.size()), argv.data());
}

}  // namespace sketchclean
