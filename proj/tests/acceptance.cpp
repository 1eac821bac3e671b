#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <map>
#include <sstream>
#include <string>
#include <vector>

#include <spdlog/spdlog.h>

#include "gradcheck.hpp"
#include "sketchclean/checkpoint.hpp"
#include "sketchclean/loss.hpp"
#include "sketchclean/metrics.hpp"
#include "sketchclean/model.hpp"
#include "sketchclean/retrieval.hpp"
#include "sketchclean/synth.hpp"
#include "sketchclean/train.hpp"
#include "support.hpp"

using namespace sketchclean;

namespace {

struct Outcome {
  bool pass = true;
  std::ostringstream detail;

  void require(bool ok, const std::string& what) {
    if (!ok) {
      pass = false;
      detail << "[failed: " << what << "] ";
    }
  }
};

NetConfig net_config(std::size_t size, std::size_t width, OutputMode mode) {
  NetConfig cfg;
  cfg.input_size = size;
  cfg.base_width = width;
  cfg.output_mode = mode;
  return cfg;
}

FeatureMap binary_target(std::size_t side, std::uint64_t seed, double ink_fraction) {
  Rng rng(seed);
  FeatureMap y(1, side, side);
  for (double& v : y.values()) v = rng.uniform() < ink_fraction ? 1.0 : 0.0;
  y.values()[0] = 1.0;
  y.values()[1] = 0.0;
  return y;
}

struct LayerCheck {
  std::size_t checked = 0;
  std::size_t skipped = 0;
  std::size_t failed = 0;
  double worst = 0.0;
};

// Central differences of <act(conv(x)), probe> for one layer of a traced network,
// over its weights, biases and the tensor the convolution saw.
void check_layer(const NetworkLayer& layer, const FeatureMap& conv_input, std::uint64_t seed, std::size_t stride,
                 LayerCheck& total) {
  const auto activate = [&](const FeatureMap& z) {
    FeatureMap a = z;
    for (double& v : a.values()) {
      v = layer.activation == Activation::kRelu ? std::max(0.0, v) : 1.0 / (1.0 + std::exp(-v));
    }
    return a;
  };
  const auto pattern = [](const FeatureMap& z) {
    std::vector<bool> p;
    for (double v : z.values()) p.push_back(v > 0.0);
    return p;
  };
  const bool relu = layer.activation == Activation::kRelu;
  // The traced input of an up layer is already upsampled.
  ConvLayer conv = layer.conv;
  if (conv.kind == LayerKind::kUp) conv.kind = LayerKind::kFlat;
  const FeatureMap z = conv2d_direct(conv_input, conv);
  const FeatureMap out = activate(z);
  const FeatureMap probe = testing::random_map(out.channels(), out.height(), out.width(), seed, -1.0, 1.0);
  FeatureMap grad_z = probe;
  for (std::size_t i = 0; i < grad_z.size(); ++i) {
    const double o = out.values()[i];
    grad_z.values()[i] *= relu ? (z.values()[i] > 0.0 ? 1.0 : 0.0) : o * (1.0 - o);
  }
  LayerGradient grad{std::vector<double>(layer.conv.weights.size()), std::vector<double>(layer.conv.bias.size())};
  FeatureMap grad_in;
  conv2d_backward(conv_input, conv, grad_z, grad, &grad_in);
  const auto base_pattern = pattern(z);

  const double eps = 1e-4;
  const auto compare = [&](double analytic, const std::function<FeatureMap(double)>& eval) {
    const FeatureMap zp = eval(eps);
    const FeatureMap zm = eval(-eps);
    if (relu && (pattern(zp) != base_pattern || pattern(zm) != base_pattern)) {
      ++total.skipped;
      return;
    }
    ++total.checked;
    const double numeric =
        (testing::weighted_sum(activate(zp), probe) - testing::weighted_sum(activate(zm), probe)) / (2.0 * eps);
    const double diff = std::abs(numeric - analytic);
    if (diff <= 1e-8) return;
    const double rel = diff / std::max(std::abs(numeric), std::abs(analytic));
    total.worst = std::max(total.worst, rel);
    if (rel > 1e-3) ++total.failed;
  };

  ConvLayer probe_layer = conv;
  for (std::size_t i = 0; i < layer.conv.weights.size(); i += stride) {
    compare(grad.weights[i], [&](double d) {
      probe_layer.weights[i] = layer.conv.weights[i] + d;
      FeatureMap r = conv2d_direct(conv_input, probe_layer);
      probe_layer.weights[i] = layer.conv.weights[i];
      return r;
    });
  }
  for (std::size_t i = 0; i < layer.conv.bias.size(); ++i) {
    compare(grad.bias[i], [&](double d) {
      probe_layer.bias[i] = layer.conv.bias[i] + d;
      FeatureMap r = conv2d_direct(conv_input, probe_layer);
      probe_layer.bias[i] = layer.conv.bias[i];
      return r;
    });
  }
  FeatureMap probe_input = conv_input;
  for (std::size_t i = 0; i < conv_input.size(); i += stride) {
    compare(grad_in.values()[i], [&](double d) {
      probe_input.values()[i] = conv_input.values()[i] + d;
      FeatureMap r = conv2d_direct(probe_input, conv);
      probe_input.values()[i] = conv_input.values()[i];
      return r;
    });
  }
}

void gradient_suite(Outcome& o) {
  const LossConfig loss_cfg;
  std::size_t loss_checked = 0;
  std::size_t loss_failed = 0;
  double loss_worst = 0.0;
  for (std::size_t side : {8, 16}) {
    for (std::uint64_t seed = 0; seed < 5; ++seed) {
      const auto y = binary_target(side, seed + 30, 0.25);
      const auto yhat = testing::random_map(1, side, side, seed + 40, 0.05, 0.95);
      const auto r = testing::check_loss_gradient([&](const FeatureMap& p) { return combined_loss(p, y, loss_cfg); },
                                                  yhat, 1e-5, 1e-5, 0.0);
      loss_checked += r.checked;
      loss_failed += r.failed;
      loss_worst = std::max(loss_worst, r.worst_relative);
    }
  }
  o.require(loss_failed == 0, "combined loss finite differences");
  o.detail << "loss: " << loss_checked << " entries, worst rel " << loss_worst << "; ";

  LayerCheck layers;
  std::size_t layer_count = 0;
  for (std::size_t side : {8, 16}) {
    for (auto mode : {OutputMode::kDouble, OutputMode::kSame}) {
      auto net = build_scnet(net_config(side, side == 8 ? 1 : 2, mode), 31 + side);
      testing::jitter_biases(net, 32 + side);
      ForwardTrace trace;
      forward(net, testing::random_map(1, side, side, 33 + side), trace);
      for (std::size_t li = 0; li < net.layers.size(); ++li) {
        check_layer(net.layers[li], trace.conv_inputs[li], 100 + li, side == 8 ? 1 : 3, layers);
        ++layer_count;
      }
    }
  }
  o.require(layers.failed == 0, "layer finite differences");
  o.require(layers.skipped * 20 < layers.checked + layers.skipped, "too many entries on a ReLU kink");
  o.detail << "layers: " << layer_count << " layers, " << layers.checked << " entries (" << layers.skipped
           << " on a kink), worst rel " << layers.worst << "; ";

  // End-to-end through activations and skip joins.
  std::size_t net_checked = 0;
  std::size_t net_failed = 0;
  for (bool skips : {true, false}) {
    auto cfg = net_config(8, 1, OutputMode::kDouble);
    if (!skips) cfg.skip_wiring.clear();
    auto net = build_scnet(cfg, 51);
    testing::jitter_biases(net, 52);
    const auto x = testing::random_map(1, 8, 8, 53);
    const auto probe = testing::random_map(1, 16, 16, 54, -1.0, 1.0);
    const auto r = testing::check_network_gradients(net, x, probe, 1e-4, 1e-3, 1e-7);
    net_checked += r.checked;
    net_failed += r.failed;
  }
  o.require(net_failed == 0, "whole network finite differences");
  o.detail << "network: " << net_checked << " parameters";
}

void kde_suite(Outcome& o) {
  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 100; ++seed) {
    LossConfig cfg;
    cfg.num_bins = 2 + seed % 15;
    cfg.kde_sigma = 0.01 + 0.002 * static_cast<double>(seed);
    const std::size_t side = 4 + seed % 9;
    const FeatureMap y = seed % 2 == 0 ? testing::random_map(1, side, side, seed) : binary_target(side, seed, 0.3);
    const auto hist = bin_probabilities(y, cfg);
    double sum = 0.0;
    for (double p : hist) sum += p;
    worst = std::max(worst, std::abs(sum - 1.0));
  }
  o.require(worst <= 1e-6, "histogram sums");
  o.detail << "100 histograms, max |sum-1| " << worst << "; ";

  LossConfig tight;
  tight.kde_sigma = 0.01;
  tight.num_bins = 10;
  const double oracle = std::erf(0.05 / (0.01 * std::sqrt(2.0)));
  const auto centre = pixel_pmax(0.55, 10, 0.01);
  const auto hist = bin_probabilities(FeatureMap(1, 8, 8, 0.55), tight);
  const auto weights = pmax_weights(FeatureMap(1, 8, 8, 0.55), tight);
  o.require(centre.bin == 5 && centre.weight >= 0.99, "concentrated pixel P_max");
  o.require(std::abs(centre.weight - oracle) <= 1e-9, "P_max erf oracle");
  o.require(hist[5] >= 0.99, "concentrated histogram");
  o.require(std::all_of(weights.values().begin(), weights.values().end(), [](double w) { return w >= 0.99; }),
            "concentrated weight map");
  o.detail << "P_max at bin centre " << centre.weight << " (erf oracle " << oracle << "); ";

  const auto tie = pixel_pmax(0.5, 10, 0.01);
  const auto masses = pixel_bin_masses(0.5, 10, 0.01);
  o.require(tie.bin == 4, "boundary tie goes to the lower bin");
  o.require(std::abs(masses[4] - masses[5]) <= 1e-9 && std::abs(tie.weight - masses[4]) <= 1e-12, "tie weight");
  const auto tie_high = pixel_pmax(0.3, 10, 0.02);
  o.require(tie_high.bin == 2, "boundary tie at 0.3");
  o.detail << "tie at 0.5 -> bin " << tie.bin << " weight " << tie.weight;
}

void balance_weights(Outcome& o) {
  LossConfig cfg;
  FeatureMap y(1, 2, 2);
  y.values()[3] = 1.0;
  const auto w = class_balance_weights(y, cfg);
  o.require(std::abs(w.alpha - 0.275) <= 1e-15, "alpha");
  o.require(w.beta == 0.75, "beta");
  const auto white = class_balance_weights(FeatureMap(1, 5, 5), cfg);
  o.require(white.alpha == 0.0 && white.beta == 1.0, "all-white weights");
  o.detail << "alpha " << w.alpha << " beta " << w.beta << "; white alpha " << white.alpha << "; ";

  LossConfig only_balance = cfg;
  only_balance.lambda1 = 1.0;
  only_balance.lambda2 = 0.0;
  std::size_t equal = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto t = binary_target(8 + seed % 9, seed, 0.2);
    const auto p = testing::random_map(1, t.height(), t.width(), seed + 7, 0.01, 0.99);
    const auto a = combined_loss(p, t, only_balance);
    const auto b = bdcn_loss(p, t, only_balance);
    if (a.value == b.value && a.gradient == b.gradient) ++equal;
  }
  o.require(equal == 20, "(1,0) combined loss equals the balanced loss");
  o.detail << "(1,0) equality " << equal << "/20";
}

void architecture(Outcome& o) {
  const std::map<Stage, Shape3> expected{
      {Stage::A, {32, 256, 256}},  {Stage::B, {64, 256, 256}},  {Stage::C, {128, 128, 128}},
      {Stage::D, {256, 64, 64}},   {Stage::E, {512, 32, 32}},   {Stage::F, {512, 64, 64}},
      {Stage::G, {512, 128, 128}}, {Stage::H, {256, 128, 128}}, {Stage::I, {256, 256, 256}},
      {Stage::J, {128, 256, 256}}, {Stage::K, {128, 512, 512}}, {Stage::L, {64, 512, 512}},
      {Stage::M, {32, 512, 512}}};
  const auto full = net_config(256, 32, OutputMode::kDouble);
  std::size_t matched = 0;
  for (const auto& [stage, shape] : activation_shapes(full)) {
    const auto it = expected.find(stage);
    if (it != expected.end() && it->second == shape) ++matched;
  }
  o.require(matched == 13, "A-M dimensions");
  o.detail << matched << "/13 stage shapes; ";

  const auto net = build_scnet(full, 0);
  std::map<LayerKind, int> census;
  for (const auto& layer : net.layers) census[layer.conv.kind] += 1;
  const bool census_ok = net.layers.size() == 14 && census[LayerKind::kDown] == 3 && census[LayerKind::kUp] == 4 &&
                         census[LayerKind::kFlat] == 7;
  o.require(census_ok, "convolution census");
  o.detail << "census down " << census[LayerKind::kDown] << " up " << census[LayerKind::kUp] << " flat "
           << census[LayerKind::kFlat] << "; ";

  auto with = net_config(16, 2, OutputMode::kDouble);
  auto without = with;
  without.skip_wiring.clear();
  const auto a = build_scnet(with, 3);
  const auto b = build_scnet(without, 3);
  std::vector<std::string> differing;
  for (std::size_t i = 0; i < a.layers.size(); ++i) {
    if (a.layers[i].conv.in_channels != b.layers[i].conv.in_channels) differing.push_back(to_string(a.layers[i].stage));
    o.require(a.layers[i].conv.out_channels == b.layers[i].conv.out_channels, "output widths match");
  }
  o.require(differing == std::vector<std::string>{"H", "J"}, "skip toggle changes only the joined stages");

  const auto pairs = make_dataset(4, 16, 16, DefectProfile{0.0, 0, 0.0, 2, 0, 0.0, 3}, 0);
  for (const auto& cfg : {with, without}) {
    TrainConfig tc;
    tc.net = cfg;
    tc.epochs = 3;
    tc.batch_size = 2;
    const auto result = train(pairs, tc);
    const bool moved = flatten_parameters(result.network) != flatten_parameters(build_scnet(cfg, tc.init_seed));
    const bool finite = std::all_of(result.history.epochs.begin(), result.history.epochs.end(),
                                    [](const EpochRecord& r) { return std::isfinite(r.train_loss); });
    o.require(moved && finite, "both skip configurations train");
  }
  o.detail << "skip toggle differs at";
  for (const auto& s : differing) o.detail << ' ' << s;
  o.detail << ", both configs train";
}

void overfit(Outcome& o) {
  const auto pairs = make_dataset(10, 16, 16, DefectProfile{0.0, 0, 0.0, 2, 0, 0.0, 3}, 0);
  TrainConfig cfg;
  cfg.epochs = 300;
  cfg.batch_size = 8;
  cfg.learning_rate = 3e-4;
  cfg.net = net_config(16, 2, OutputMode::kDouble);
  const auto started = std::chrono::steady_clock::now();
  const auto result = train(pairs, cfg);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
  const double first = result.history.epochs.front().train_loss;
  const double last = result.history.epochs.back().train_loss;
  double ssim_sum = 0.0;
  for (const auto& p : pairs) {
    ssim_sum += ssim(clean_sketch(result.network, p.rough), prepare_target(p.clean, cfg.net, cfg.loss));
  }
  const double mean_ssim = ssim_sum / static_cast<double>(pairs.size());
  o.require(last < 0.1 * first, "final loss below 10% of the first epoch");
  o.require(mean_ssim > 0.9, "mean training SSIM above 0.9");
  o.require(seconds < 600.0, "runtime");
  o.detail << "loss " << first << " -> " << last << " (ratio " << last / first << "), mean SSIM " << mean_ssim << ", "
           << seconds << " s";
}

void metric_oracles(Outcome& o) {
  for (double m : {0.01, 0.0025}) o.require(psnr_from_mse(m) == -10.0 * std::log10(m), "psnr identity");
  const SketchRaster half(16, 16, 0.5);
  for (double other : {0.6, 0.55}) {
    const SketchRaster b(16, 16, other);
    o.require(psnr(half, b) == -10.0 * std::log10(mse(half, b)), "psnr of rasters");
  }
  o.require(std::abs(psnr_from_mse(0.01) - 20.0) <= 1e-12, "psnr(0.01) = 20 dB");
  o.detail << "psnr(0.01) " << psnr_from_mse(0.01) << " psnr(0.0025) " << psnr_from_mse(0.0025) << "; ";

  double worst = 0.0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto a = testing::random_raster(11 + seed % 10, 11 + seed % 7, seed);
    worst = std::max(worst, std::abs(ssim(a, a) - 1.0));
  }
  o.require(worst <= 1e-9, "ssim(a,a)");
  o.detail << "max |ssim(a,a)-1| " << worst << "; ";

  const LossConfig cfg;
  std::size_t exact = 0;
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const auto pred = testing::random_raster(12, 12, seed);
    const auto truth = to_ink_mask(testing::random_raster(12, 12, seed + 99), 0.3);
    std::vector<double> t(truth.data.size());
    for (std::size_t i = 0; i < t.size(); ++i) t[i] = truth.data[i] ? 0.0 : 1.0;
    const SketchRaster target(12, 12, t);
    if (bdcn_metric(pred, target, cfg) == bdcn_loss(to_ink_feature(pred), to_ink_feature(target), cfg).value) ++exact;
  }
  o.require(exact == 20, "bdcn metric equals the loss");
  o.detail << "bdcn equality " << exact << "/20";
}

// Independent full sort by (similarity desc, id asc).
std::vector<std::string> brute_force_top(const RetrievalIndex& index, const Descriptor& q, std::size_t k) {
  std::vector<std::pair<double, std::string>> scored;
  double qn = 0.0;
  for (double v : q) qn += v * v;
  for (const auto& item : index.items()) {
    double dot = 0.0, n = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) {
      dot += q[i] * item.descriptor[i];
      n += item.descriptor[i] * item.descriptor[i];
    }
    scored.emplace_back(qn == 0.0 || n == 0.0 ? 0.0 : dot / (std::sqrt(qn) * std::sqrt(n)), item.id);
  }
  std::stable_sort(scored.begin(), scored.end(), [](const auto& a, const auto& b) {
    if (a.first != b.first) return a.first > b.first;
    return a.second < b.second;
  });
  std::vector<std::string> ids;
  for (std::size_t i = 0; i < k; ++i) ids.push_back(scored[i].second);
  return ids;
}

void retrieval_ab(Outcome& o) {
  const auto started = std::chrono::steady_clock::now();
  constexpr std::size_t kSide = 32;
  constexpr std::size_t kTop = 10;

  const auto items = make_dataset(60, kSide, kSide, DefectProfile{}, 1000);
  RetrievalIndex index;
  std::map<std::string, int> per_class;
  for (const auto& p : items) {
    index.add({p.id, p.category, embed(p.clean)});
    per_class[p.category] += 1;
  }
  const bool six_by_ten = per_class.size() == 6 && std::all_of(per_class.begin(), per_class.end(),
                                                              [](const auto& kv) { return kv.second == 10; });
  o.require(six_by_ten, "index is 6 classes x 10 items");

  auto training = make_dataset(24, kSide, kSide, DefectProfile{0.5, 0, 0.0, 8, 0, 0.0, 11}, 4000);
  for (auto p : make_dataset(24, kSide, kSide, DefectProfile{0.5, 0, 0.0, 40, 0, 0.0, 12}, 5000)) {
    p.id = "b" + p.id;
    training.push_back(std::move(p));
  }
  TrainConfig cfg;
  cfg.net = net_config(kSide, 4, OutputMode::kSame);
  cfg.epochs = 20;
  cfg.learning_rate = 1e-3;
  const auto cleaner = train(training, cfg).network;

  const auto mild = make_dataset(20, kSide, kSide, DefectProfile{0.5, 0, 0.0, 4, 0, 0.0, 5}, 2000);
  const auto severe = make_dataset(10, kSide, kSide, DefectProfile{0.0, 0, 0.0, 40, 0, 0.0, 9}, 3000);

  std::size_t oracle_mismatches = 0;
  const auto run = [&](const std::vector<const TrainingPair*>& queries) {
    std::vector<SketchRaster> defective;
    std::vector<SketchRaster> cleaned;
    std::vector<std::string> labels;
    for (const auto* q : queries) {
      defective.push_back(q->rough);
      cleaned.push_back(clean_sketch(cleaner, q->rough));
      labels.push_back(q->category);
    }
    const auto ab = ab_compare(defective, cleaned, labels, index, kTop);
    // Recompute both accuracies from the brute-force ranking.
    for (const auto* side : {&defective, &cleaned}) {
      double hits = 0.0;
      for (std::size_t i = 0; i < side->size(); ++i) {
        const auto d = embed((*side)[i]);
        const auto expected = brute_force_top(index, d, kTop);
        std::vector<std::string> got;
        for (const auto& h : query(index, d, kTop)) got.push_back(h.id);
        if (got != expected) ++oracle_mismatches;
        for (const auto& id : expected) hits += index.find(id)->label == labels[i] ? 1.0 : 0.0;
      }
      const double accuracy = 100.0 * hits / static_cast<double>(kTop * side->size());
      const double reported = side == &defective ? ab.defective.top_k_accuracy : ab.cleaned.top_k_accuracy;
      if (std::abs(accuracy - reported) > 1e-9) ++oracle_mismatches;
    }
    return ab;
  };

  std::vector<const TrainingPair*> all;
  std::vector<const TrainingPair*> severe_only;
  for (const auto& p : mild) all.push_back(&p);
  for (const auto& p : severe) {
    all.push_back(&p);
    severe_only.push_back(&p);
  }
  const auto overall = run(all);
  const auto hard = run(severe_only);
  const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();

  o.require(overall.defective.n_queries == 30, "30 queries");
  o.require(overall.cleaned.top_k_accuracy >= overall.defective.top_k_accuracy, "cleaned >= defective overall");
  o.require(hard.cleaned.top_k_accuracy > hard.defective.top_k_accuracy, "strict gain on the severe subset");
  o.require(oracle_mismatches == 0, "brute-force ranking oracle");
  o.require(seconds < 300.0, "runtime");
  o.detail << "top-" << kTop << " all 30: defective " << overall.defective.top_k_accuracy << "% cleaned "
           << overall.cleaned.top_k_accuracy << "%; severe 10: defective " << hard.defective.top_k_accuracy
           << "% cleaned " << hard.cleaned.top_k_accuracy << "%; oracle mismatches " << oracle_mismatches << ", "
           << seconds << " s";
}

struct PipelineRun {
  std::string history;
  std::string checkpoint;
  std::string metrics;
};

PipelineRun pipeline(const testing::TempDir& dir) {
  write_dataset(make_dataset(12, 16, 16, DefectProfile{1.0, 1, 1.0, 2, 1, 0.0, 6}, 77), dir / "data");
  const auto pairs = read_dataset(dir / "data");
  TrainConfig cfg;
  cfg.net = net_config(16, 2, OutputMode::kDouble);
  cfg.epochs = 6;
  cfg.batch_size = 4;
  cfg.eval_every = 2;
  cfg.checkpoint_every = 3;
  cfg.seed = 5;
  const auto [train_set, test_set] = split_dataset(pairs, cfg.split_ratio, cfg.seed);
  TrainOptions options;
  options.checkpoint_path = dir / "model.ckpt";
  options.history_path = dir / "history.jsonl";
  options.eval_pairs = test_set;
  train(train_set, cfg, options);
  const auto restored = load_checkpoint(dir / "model.ckpt");
  return {testing::read_file(dir / "history.jsonl"), testing::read_file(dir / "model.ckpt"),
          metrics_csv(evaluate_pairs(restored.network, test_set, cfg.loss))};
}

void determinism(Outcome& o) {
  testing::TempDir first("acceptance_a");
  testing::TempDir second("acceptance_b");
  const auto a = pipeline(first);
  const auto b = pipeline(second);
  o.require(!a.history.empty() && a.history == b.history, "history files identical");
  o.require(!a.checkpoint.empty() && a.checkpoint == b.checkpoint, "checkpoints identical");
  o.require(a.metrics == b.metrics, "evaluation identical");
  o.detail << "history " << a.history.size() << " bytes, checkpoint " << a.checkpoint.size() << " bytes, both runs equal";
}

}  // namespace

int main() {
  spdlog::set_level(spdlog::level::err);
  const std::vector<std::pair<std::string, std::function<void(Outcome&)>>> criteria{
      {"gradient suite", gradient_suite},      {"kde suite", kde_suite},
      {"balance weights", balance_weights},    {"architecture", architecture},
      {"overfit smoke test", overfit},         {"metric oracles", metric_oracles},
      {"retrieval a/b", retrieval_ab},         {"determinism", determinism}};
  int failures = 0;
  for (const auto& [name, check] : criteria) {
    Outcome outcome;
    const auto started = std::chrono::steady_clock::now();
    try {
      check(outcome);
    } catch (const std::exception& e) {
      outcome.pass = false;
      outcome.detail << "[exception: " << e.what() << "]";
    }
    const double seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - started).count();
    if (name == "gradient suite" && seconds >= 60.0) {
      outcome.pass = false;
      outcome.detail << " [failed: runtime]";
    }
    failures += outcome.pass ? 0 : 1;
    std::printf("%s %s (%.1f s): %s\n", outcome.pass ? "PASS" : "FAIL", name.c_str(), seconds,
                outcome.detail.str().c_str());
    std::fflush(stdout);
  }
  return failures == 0 ? 0 : 1;
}
