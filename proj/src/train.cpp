#include "sketchclean/train.hpp"

#include <chrono>
#include <cmath>
#include <fstream>
#include <numeric>

#include "sketchclean/errors.hpp"
#include "sketchclean/rng.hpp"

namespace sketchclean {

void TrainConfig::validate() const {
  if (batch_size == 0) throw ConfigError("batch_size must be positive");
  if (!(learning_rate > 0.0)) throw ConfigError("learning_rate must be positive");
  if (!(adam_beta1 >= 0.0 && adam_beta1 < 1.0) || !(adam_beta2 >= 0.0 && adam_beta2 < 1.0)) {
    throw ConfigError("Adam betas must lie in [0,1)");
  }
  if (!(adam_eps > 0.0)) throw ConfigError("adam_eps must be positive");
  if (!(split_ratio > 0.0 && split_ratio < 1.0)) throw ConfigError("split_ratio must lie in (0,1)");
  loss.validate();
  net.validate();
}

void to_json(nlohmann::json& j, const LossConfig& cfg) {
  j = {{"lambda_bal", cfg.lambda_bal}, {"pos_threshold", cfg.pos_threshold}, {"num_bins", cfg.num_bins},
       {"kde_sigma", cfg.kde_sigma},   {"lambda1", cfg.lambda1},             {"lambda2", cfg.lambda2},
       {"epsilon", cfg.epsilon}};
}

void from_json(const nlohmann::json& j, LossConfig& cfg) {
  cfg.lambda_bal = j.value("lambda_bal", cfg.lambda_bal);
  cfg.pos_threshold = j.value("pos_threshold", cfg.pos_threshold);
  cfg.num_bins = j.value("num_bins", cfg.num_bins);
  cfg.kde_sigma = j.value("kde_sigma", cfg.kde_sigma);
  cfg.lambda1 = j.value("lambda1", cfg.lambda1);
  cfg.lambda2 = j.value("lambda2", cfg.lambda2);
  cfg.epsilon = j.value("epsilon", cfg.epsilon);
}

void to_json(nlohmann::json& j, const NetConfig& cfg) {
  nlohmann::json skips = nlohmann::json::array();
  for (const auto& s : cfg.skip_wiring) skips.push_back({to_string(s.encoder), to_string(s.decoder)});
  j = {{"input_size", cfg.input_size},
       {"base_width", cfg.base_width},
       {"output_mode", cfg.output_mode == OutputMode::kDouble ? "double" : "same"},
       {"skip_wiring", skips}};
}

void from_json(const nlohmann::json& j, NetConfig& cfg) {
  cfg.input_size = j.value("input_size", cfg.input_size);
  cfg.base_width = j.value("base_width", cfg.base_width);
  if (j.contains("output_mode")) {
    const auto mode = j.at("output_mode").get<std::string>();
    if (mode == "double") {
      cfg.output_mode = OutputMode::kDouble;
    } else if (mode == "same") {
      cfg.output_mode = OutputMode::kSame;
    } else {
      throw ConfigError("output_mode must be \"double\" or \"same\"");
    }
  }
  if (j.contains("skip_wiring")) {
    cfg.skip_wiring.clear();
    for (const auto& s : j.at("skip_wiring")) {
      if (!s.is_array() || s.size() != 2) throw ConfigError("skip_wiring entries are [encoder, decoder] pairs");
      cfg.skip_wiring.push_back({parse_stage(s[0].get<std::string>()), parse_stage(s[1].get<std::string>())});
    }
  }
}

void to_json(nlohmann::json& j, const TrainConfig& cfg) {
  j = {{"epochs", cfg.epochs},
       {"batch_size", cfg.batch_size},
       {"learning_rate", cfg.learning_rate},
       {"adam_beta1", cfg.adam_beta1},
       {"adam_beta2", cfg.adam_beta2},
       {"adam_eps", cfg.adam_eps},
       {"split_ratio", cfg.split_ratio},
       {"benchmark_split", cfg.benchmark_split},
       {"seed", cfg.seed},
       {"init_seed", cfg.init_seed},
       {"checkpoint_every", cfg.checkpoint_every},
       {"eval_every", cfg.eval_every},
       {"loss", cfg.loss},
       {"net", cfg.net}};
}

void from_json(const nlohmann::json& j, TrainConfig& cfg) {
  cfg.epochs = j.value("epochs", cfg.epochs);
  cfg.batch_size = j.value("batch_size", cfg.batch_size);
  cfg.learning_rate = j.value("learning_rate", cfg.learning_rate);
  cfg.adam_beta1 = j.value("adam_beta1", cfg.adam_beta1);
  cfg.adam_beta2 = j.value("adam_beta2", cfg.adam_beta2);
  cfg.adam_eps = j.value("adam_eps", cfg.adam_eps);
  cfg.split_ratio = j.value("split_ratio", cfg.split_ratio);
  cfg.benchmark_split = j.value("benchmark_split", cfg.benchmark_split);
  cfg.seed = j.value("seed", cfg.seed);
  cfg.init_seed = j.value("init_seed", cfg.init_seed);
  cfg.checkpoint_every = j.value("checkpoint_every", cfg.checkpoint_every);
  cfg.eval_every = j.value("eval_every", cfg.eval_every);
  if (j.contains("loss")) j.at("loss").get_to(cfg.loss);
  if (j.contains("net")) j.at("net").get_to(cfg.net);
}

TrainConfig load_train_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw IoError("cannot open config " + path.string());
  TrainConfig cfg;
  try {
    nlohmann::json::parse(in).get_to(cfg);
  } catch (const nlohmann::json::exception& e) {
    throw ConfigError("invalid config " + path.string() + ": " + e.what());
  }
  cfg.validate();
  return cfg;
}

std::string history_record_json(const EpochRecord& record) {
  nlohmann::json j = {{"epoch", record.epoch}, {"train_loss", record.train_loss}};
  if (record.test) j["test"] = nlohmann::json::parse(metrics_summary_json(*record.test));
  return j.dump();
}

std::size_t train_count(std::size_t n, double ratio, bool benchmark) {
  const double effective = benchmark ? 632.0 / 801.0 : ratio;
  const auto count = static_cast<std::size_t>(std::llround(effective * static_cast<double>(n)));
  return std::min(count, n);
}

std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> split_dataset(std::span<const TrainingPair> pairs,
                                                                              double ratio, std::uint64_t seed,
                                                                              bool benchmark) {
  if (pairs.empty()) throw ArgumentError("split_dataset: empty dataset");
  if (!(ratio > 0.0 && ratio < 1.0)) throw ArgumentError("split_dataset: ratio must lie in (0,1)");
  std::vector<std::size_t> order(pairs.size());
  std::iota(order.begin(), order.end(), 0);
  Rng rng(mix_seed(seed));
  portable_shuffle(order.begin(), order.end(), rng);
  const std::size_t n_train = train_count(pairs.size(), ratio, benchmark);
  std::pair<std::vector<TrainingPair>, std::vector<TrainingPair>> out;
  for (std::size_t k = 0; k < order.size(); ++k) {
    (k < n_train ? out.first : out.second).push_back(pairs[order[k]]);
  }
  return out;
}

void adam_step(std::span<double> params, std::span<const double> grads, AdamState& state, std::uint64_t step,
               const AdamConfig& cfg) {
  if (grads.size() != params.size()) throw ArgumentError("adam_step: gradient length mismatch");
  if (state.m.empty() && state.v.empty()) {
    state.m.assign(params.size(), 0.0);
    state.v.assign(params.size(), 0.0);
  }
  if (state.m.size() != params.size() || state.v.size() != params.size()) {
    throw ArgumentError("adam_step: optimizer state length mismatch");
  }
  if (step == 0) throw ArgumentError("adam_step: step index is 1-based");
  for (std::size_t i = 0; i < grads.size(); ++i) {
    if (!std::isfinite(grads[i])) {
      throw TrainingError("non-finite gradient at step " + std::to_string(step) + " (parameter " + std::to_string(i) +
                          ")");
    }
  }
  const double correction1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(step));
  const double correction2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(step));
  for (std::size_t i = 0; i < params.size(); ++i) {
    const double g = grads[i];
    state.m[i] = cfg.beta1 * state.m[i] + (1.0 - cfg.beta1) * g;
    state.v[i] = cfg.beta2 * state.v[i] + (1.0 - cfg.beta2) * g * g;
    const double m_hat = state.m[i] / correction1;
    const double v_hat = state.v[i] / correction2;
    params[i] -= cfg.learning_rate * m_hat / (std::sqrt(v_hat) + cfg.eps);
  }
}

FeatureMap prepare_input(const SketchRaster& rough, const NetConfig& cfg) {
  const SketchRaster sized = resize_bilinear(rough, cfg.input_size, cfg.input_size);
  return to_ink_feature(sized);
}

SketchRaster prepare_target(const SketchRaster& clean, const NetConfig& cfg, const LossConfig& loss) {
  const std::size_t out = cfg.output_size();
  const SketchRaster sized = resize_bilinear(clean, out, out);
  const InkMask mask = to_ink_mask(sized, loss.pos_threshold);
  std::vector<double> values(mask.data.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = mask.data[i] ? 0.0 : 1.0;
  return SketchRaster(out, out, std::move(values));
}

SketchRaster clean_sketch(const Network& net, const SketchRaster& rough) {
  const FeatureMap probs = forward(net, prepare_input(rough, net.config));
  std::vector<double> values(probs.size());
  for (std::size_t i = 0; i < values.size(); ++i) values[i] = 1.0 - probs.values()[i];
  return clamp_to_raster(probs.height(), probs.width(), values);
}

namespace {

void check_dataset(std::span<const TrainingPair> pairs, const NetConfig& cfg) {
  for (const auto& pair : pairs) {
    if (pair.rough.height() != cfg.input_size || pair.rough.width() != cfg.input_size) {
      throw ArgumentError("pair " + pair.id + ": rough sketch must be " + std::to_string(cfg.input_size) + "x" +
                          std::to_string(cfg.input_size));
    }
    const bool at_input = pair.clean.height() == cfg.input_size && pair.clean.width() == cfg.input_size;
    const bool at_output = pair.clean.height() == cfg.output_size() && pair.clean.width() == cfg.output_size();
    if (!at_input && !at_output) {
      throw ArgumentError("pair " + pair.id + ": clean sketch must match the input or output resolution");
    }
  }
}

void round_to_float(std::span<double> values) {
  for (double& v : values) v = static_cast<double>(static_cast<float>(v));
}

}  // namespace

TrainResult train(std::span<const TrainingPair> pairs, const TrainConfig& cfg, const TrainOptions& options) {
  cfg.validate();
  check_dataset(pairs, cfg.net);
  if (pairs.empty() && cfg.epochs > 0) throw ArgumentError("train: empty dataset");

  TrainResult result{build_scnet(cfg.net, cfg.init_seed), {}, {}};
  AdamState adam;
  std::uint64_t step = 0;
  std::size_t start_epoch = 0;
  if (options.resume != nullptr) {
    if (!(options.resume->network.config == cfg.net)) throw ConfigError("resume checkpoint network config differs");
    result.network = options.resume->network;
    if (options.resume->optimizer) {
      step = options.resume->optimizer->step;
      start_epoch = options.resume->optimizer->epochs_completed;
      adam.m = options.resume->optimizer->first_moment;
      adam.v = options.resume->optimizer->second_moment;
    }
  }

  std::vector<FeatureMap> inputs;
  std::vector<FeatureMap> targets;
  for (const auto& pair : pairs) {
    inputs.push_back(prepare_input(pair.rough, cfg.net));
    targets.push_back(to_ink_feature(prepare_target(pair.clean, cfg.net, cfg.loss)));
  }

  std::ofstream history_file;
  if (options.history_path) {
    history_file.open(*options.history_path, options.resume != nullptr ? std::ios::app : std::ios::trunc);
    if (!history_file) throw IoError("cannot open history file " + options.history_path->string());
  }

  const AdamConfig adam_cfg{cfg.learning_rate, cfg.adam_beta1, cfg.adam_beta2, cfg.adam_eps};
  std::vector<double> params = flatten_parameters(result.network);
  std::vector<double> grad_sum(params.size());
  ForwardTrace trace;

  const auto snapshot = [&](std::size_t epochs_done) {
    return OptimizerSnapshot{step, epochs_done, adam.m.empty() ? std::vector<double>(params.size(), 0.0) : adam.m,
                             adam.v.empty() ? std::vector<double>(params.size(), 0.0) : adam.v};
  };

  for (std::size_t epoch = start_epoch + 1; epoch <= cfg.epochs; ++epoch) {
    const auto started = std::chrono::steady_clock::now();
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    Rng rng(mix_seed(cfg.seed ^ mix_seed(static_cast<std::uint64_t>(epoch))));
    portable_shuffle(order.begin(), order.end(), rng);

    double epoch_loss = 0.0;
    for (std::size_t begin = 0; begin < order.size(); begin += cfg.batch_size) {
      const std::size_t end = std::min(begin + cfg.batch_size, order.size());
      std::fill(grad_sum.begin(), grad_sum.end(), 0.0);
      for (std::size_t k = begin; k < end; ++k) {
        const std::size_t idx = order[k];
        const FeatureMap out = forward(result.network, inputs[idx], trace);
        const LossValue loss = combined_loss(out, targets[idx], cfg.loss);
        epoch_loss += loss.value;
        const NetworkGradients grads = backward(result.network, trace, loss.gradient);
        std::size_t offset = 0;
        for (const auto& layer : grads.layers) {
          for (double g : layer.weights) grad_sum[offset++] += g;
          for (double g : layer.bias) grad_sum[offset++] += g;
        }
      }
      const double scale = 1.0 / static_cast<double>(end - begin);
      for (double& g : grad_sum) g *= scale;
      ++step;
      adam_step(params, grad_sum, adam, step, adam_cfg);
      round_to_float(params);
      assign_parameters(result.network, params);
    }

    EpochRecord record;
    record.epoch = epoch;
    record.train_loss = epoch_loss / static_cast<double>(pairs.size());
    if (cfg.eval_every > 0 && epoch % cfg.eval_every == 0 && !options.eval_pairs.empty()) {
      record.test = evaluate(result.network, options.eval_pairs, cfg.loss);
    }
    record.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (history_file.is_open()) {
      history_file << history_record_json(record) << '\n';
      history_file.flush();
    }
    result.history.epochs.push_back(std::move(record));

    if (options.checkpoint_path && cfg.checkpoint_every > 0 && epoch % cfg.checkpoint_every == 0) {
      const OptimizerSnapshot snap = snapshot(epoch);
      save_checkpoint(result.network, *options.checkpoint_path, &snap);
    }
  }

  result.optimizer = snapshot(std::max(start_epoch, cfg.epochs));
  if (options.checkpoint_path) save_checkpoint(result.network, *options.checkpoint_path, &result.optimizer);
  return result;
}

std::vector<NamedReport> evaluate_pairs(const Network& net, std::span<const TrainingPair> test,
                                        const LossConfig& loss_cfg) {
  if (test.empty()) throw ArgumentError("evaluate: empty test set");
  std::vector<NamedReport> rows;
  rows.reserve(test.size());
  for (const auto& pair : test) {
    const SketchRaster prediction = clean_sketch(net, pair.rough);
    const SketchRaster target = prepare_target(pair.clean, net.config, loss_cfg);
    rows.push_back({pair.id, measure_pair(prediction, target, loss_cfg)});
  }
  return rows;
}

MetricReport evaluate(const Network& net, std::span<const TrainingPair> test, const LossConfig& loss_cfg) {
  const auto rows = evaluate_pairs(net, test, loss_cfg);
  std::vector<MetricReport> reports;
  reports.reserve(rows.size());
  for (const auto& row : rows) reports.push_back(row.report);
  return aggregate(reports);
}

}  // namespace sketchclean
