#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <optional>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include <nlohmann/json.hpp>

#include "sketchclean/checkpoint.hpp"
#include "sketchclean/loss.hpp"
#include "sketchclean/metrics.hpp"
#include "sketchclean/model.hpp"
#include "sketchclean/synth.hpp"

namespace sketchclean {

struct TrainConfig {
  std::size_t epochs = 200;
  std::size_t batch_size = 8;
  double learning_rate = 3e-4;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  double split_ratio = 0.8;
  bool benchmark_split = false;  // reproduce the 632/169 split of 801 pairs
  std::uint64_t seed = 0;
  std::uint64_t init_seed = 0;
  std::size_t checkpoint_every = 0;  // epochs; 0 writes only the final checkpoint
  std::size_t eval_every = 0;        // epochs; 0 disables per-epoch test metrics
  LossConfig loss;
  NetConfig net;

  /// Throws ConfigError.
  void validate() const;
};

void to_json(nlohmann::json& j, const LossConfig& cfg);
void from_json(const nlohmann::json& j, LossConfig& cfg);
void to_json(nlohmann::json& j, const NetConfig& cfg);
void from_json(const nlohmann::json& j, NetConfig& cfg);
void to_json(nlohmann::json& j, const TrainConfig& cfg);
void from_json(const nlohmann::json& j, TrainConfig& cfg);

TrainConfig load_train_config(const std::filesystem::path& path);

struct EpochRecord {
  std::size_t epoch = 0;  // 1-based
  double train_loss = 0.0;
  std::optional<MetricReport> test;
  double wall_seconds = 0.0;
};

struct TrainHistory {
  std::vector<EpochRecord> epochs;
};

/// One JSON-lines record (epoch, loss, optional test metrics). Wall-clock time is
/// left out so that identical runs produce identical files.
std::string history_record_json(const EpochRecord& record);

std::size_t train_count(std::size_t n, double ratio, bool benchmark);

/// Seeded shuffle, then the first train_count() items form the training set.
std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_dataset(std::span<const TrainingPair> pairs,
                                                                              double ratio, std::uint64_t seed,
                                                                              bool benchmark = false);

struct AdamConfig {
  double learning_rate = 3e-4;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  std::vector<double> m;
  std::vector<double> v;
};

/// One bias-corrected Adam update; `step` is 1-based. Throws TrainingError on a
/// non-finite gradient.
void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, std::uint64_t step,
               const AdamConfig& cfg);

/// Network input (ink polarity, input_size^2) for a white-background sketch of any size.
FeatureMap prepare_input(const SketchRaster& rough, const NetConfig& cfg);

/// Binary white-background target at the network's output resolution.
SketchRaster prepare_target(const SketchRaster& clean, const NetConfig& cfg, const LossConfig& loss);

/// Forward pass mapped back to a white-background raster at output resolution.
SketchRaster clean_sketch(const Network& net, const SketchRaster& rough);

struct TrainOptions {
  std::optional<std::filesystem::path> checkpoint_path;
  std::optional<std::filesystem::path> history_path;  // JSON lines, truncated at start unless resuming
  const Checkpoint* resume = nullptr;
  std::vector<TrainingPair> eval_pairs;  // used when eval_every > 0
};

struct TrainResult {
  Network network;
  TrainHistory history;
  OptimizerSnapshot optimizer;
};

TrainResult train(std::span<const TrainingPair> pairs, const TrainConfig& cfg, const TrainOptions& options = {});

/// Mean per-pair metrics of cleaned outputs against prepared targets.
MetricReport evaluate(const Network& net, std::span<const TrainingPair> test, const LossConfig& loss_cfg);
std::vector<NamedReport> evaluate_pairs(const Network& net, std::span<const TrainingPair> test,
                                        const LossConfig& loss_cfg);

}  // namespace sketchclean
