#include <doctest.h>

#include <cmath>
#include <fstream>
#include <limits>
#include <set>
#include <sstream>

#include "sketchclean/errors.hpp"
#include "sketchclean/train.hpp"
#include "support.hpp"

using namespace sketchclean;

namespace {

TrainConfig tiny_config(OutputMode mode = OutputMode::kDouble) {
  TrainConfig cfg;
  cfg.net.input_size = 8;
  cfg.net.base_width = 1;
  cfg.net.output_mode = mode;
  cfg.epochs = 3;
  cfg.batch_size = 2;
  cfg.learning_rate = 1e-3;
  return cfg;
}

std::vector<TrainingPair> tiny_pairs(std::size_t n, std::uint64_t seed = 3) {
  return make_dataset(n, 8, 8, DefectProfile{0.0, 0, 0.0, 1, 0, 0.0, 5}, seed);
}

std::vector<std::string> lines_of(const std::filesystem::path& path) {
  std::ifstream in(path);
  std::vector<std::string> out;
  for (std::string line; std::getline(in, line);) out.push_back(line);
  return out;
}

}  // namespace

TEST_CASE("train_count") {
  CHECK(train_count(801, 0.8, false) == 641);
  CHECK(train_count(801, 0.8, true) == 632);
  CHECK(train_count(10, 0.8, false) == 8);
  CHECK(train_count(1, 0.5, false) <= 1);
}

TEST_CASE("split_dataset") {
  const auto pairs = make_dataset(10, 8, 8, DefectProfile{}, 1);
  const auto [train_a, test_a] = split_dataset(pairs, 0.8, 42);
  CHECK(train_a.size() == 8);
  CHECK(test_a.size() == 2);
  const auto [train_b, test_b] = split_dataset(pairs, 0.8, 42);
  for (std::size_t i = 0; i < train_a.size(); ++i) CHECK(train_a[i].id == train_b[i].id);
  for (std::size_t i = 0; i < test_a.size(); ++i) CHECK(test_a[i].id == test_b[i].id);

  std::multiset<std::string> ids;
  for (const auto& p : train_a) ids.insert(p.id);
  for (const auto& p : test_a) ids.insert(p.id);
  std::multiset<std::string> expected;
  for (const auto& p : pairs) expected.insert(p.id);
  CHECK(ids == expected);

  CHECK_THROWS_AS(split_dataset(std::vector<TrainingPair>{}, 0.8, 0), ArgumentError);
  CHECK_THROWS_AS(split_dataset(pairs, 1.0, 0), ArgumentError);
}

TEST_CASE("property: split is a partition for any size and seed") {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const std::size_t n = 2 + seed % 9;
    std::vector<TrainingPair> pairs(n);
    for (std::size_t i = 0; i < n; ++i) pairs[i].id = std::to_string(i);
    const auto [tr, te] = split_dataset(pairs, 0.7, seed);
    CHECK(tr.size() == train_count(n, 0.7, false));
    CHECK(tr.size() + te.size() == n);
    std::set<std::string> seen;
    for (const auto& p : tr) seen.insert(p.id);
    for (const auto& p : te) seen.insert(p.id);
    CHECK(seen.size() == n);
  }
}

TEST_CASE("adam_step") {
  const AdamConfig cfg;
  std::vector<double> params{0.5, -0.25, 1.0};
  const std::vector<double> zero(3, 0.0);
  AdamState state;
  adam_step(params, zero, state, 1, cfg);
  CHECK(params == std::vector<double>{0.5, -0.25, 1.0});

  AdamState fresh;
  std::vector<double> p2{0.0, 0.0, 0.0};
  const std::vector<double> g{2.0, -3.0, 0.5};
  adam_step(p2, g, fresh, 1, cfg);
  CHECK(p2[0] == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
  CHECK(p2[1] == doctest::Approx(cfg.learning_rate).epsilon(1e-6));
  CHECK(p2[2] == doctest::Approx(-cfg.learning_rate).epsilon(1e-6));
  // A constant gradient keeps the bias-corrected step at lr.
  const double before = p2[0];
  adam_step(p2, g, fresh, 2, cfg);
  CHECK(before - p2[0] == doctest::Approx(cfg.learning_rate).epsilon(1e-6));

  std::vector<double> bad{std::numeric_limits<double>::quiet_NaN(), 0.0, 0.0};
  CHECK_THROWS_AS(adam_step(p2, bad, fresh, 3, cfg), TrainingError);
  bad[0] = std::numeric_limits<double>::infinity();
  CHECK_THROWS_AS(adam_step(p2, bad, fresh, 3, cfg), TrainingError);
  CHECK_THROWS_AS(adam_step(p2, std::vector<double>{1.0}, fresh, 3, cfg), ArgumentError);
}

TEST_CASE("train with zero epochs returns the initial network") {
  auto cfg = tiny_config();
  cfg.epochs = 0;
  const auto result = train(tiny_pairs(4), cfg);
  CHECK(result.history.epochs.empty());
  CHECK(flatten_parameters(result.network) == flatten_parameters(build_scnet(cfg.net, cfg.init_seed)));
}

TEST_CASE("train rejects mismatched pairs and bad configs") {
  auto cfg = tiny_config();
  auto pairs = make_dataset(2, 12, 12, DefectProfile{}, 0);
  CHECK_THROWS_AS(train(pairs, cfg), ArgumentError);
  cfg.learning_rate = 0.0;
  CHECK_THROWS_AS(train(tiny_pairs(2), cfg), ConfigError);
}

TEST_CASE("train records one finite loss per epoch and writes history lines") {
  testing::TempDir dir("train_hist");
  auto cfg = tiny_config();
  cfg.eval_every = 1;
  const auto pairs = tiny_pairs(6);
  TrainOptions options;
  options.history_path = dir / "history.jsonl";
  options.checkpoint_path = dir / "model.ckpt";
  options.eval_pairs = tiny_pairs(2, 99);
  const auto result = train(pairs, cfg, options);
  REQUIRE(result.history.epochs.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    CHECK(result.history.epochs[e].epoch == e + 1);
    CHECK(std::isfinite(result.history.epochs[e].train_loss));
    CHECK(result.history.epochs[e].test.has_value());
  }
  const auto lines = lines_of(dir / "history.jsonl");
  REQUIRE(lines.size() == 3);
  for (std::size_t e = 0; e < 3; ++e) {
    const auto j = nlohmann::json::parse(lines[e]);
    CHECK(j.at("epoch") == e + 1);
    CHECK(j.contains("test"));
    CHECK_FALSE(j.contains("wall_seconds"));
    CHECK(lines[e] == history_record_json(result.history.epochs[e]));
  }
  CHECK(result.optimizer.step == 9);
  CHECK(result.optimizer.epochs_completed == 3);

  const auto ckpt = load_checkpoint(dir / "model.ckpt");
  CHECK(flatten_parameters(ckpt.network) == flatten_parameters(result.network));
  REQUIRE(ckpt.optimizer.has_value());
  CHECK(*ckpt.optimizer == result.optimizer);
  const auto a = evaluate(result.network, pairs, cfg.loss);
  const auto b = evaluate(ckpt.network, pairs, cfg.loss);
  CHECK(a.mse == b.mse);
  CHECK(a.ssim == b.ssim);
}

TEST_CASE("parameters stay on the float grid during training") {
  const auto result = train(tiny_pairs(4), tiny_config(OutputMode::kSame));
  for (double v : flatten_parameters(result.network)) CHECK(v == static_cast<double>(static_cast<float>(v)));
}

TEST_CASE("resumed training matches an uninterrupted run") {
  testing::TempDir dir("train_resume");
  const auto pairs = tiny_pairs(6);
  auto cfg = tiny_config();
  cfg.epochs = 4;
  const auto straight = train(pairs, cfg);

  cfg.epochs = 2;
  TrainOptions first;
  first.checkpoint_path = dir / "half.ckpt";
  first.history_path = dir / "history.jsonl";
  train(pairs, cfg, first);
  const auto half = load_checkpoint(dir / "half.ckpt");
  cfg.epochs = 4;
  TrainOptions second;
  second.resume = &half;
  second.history_path = dir / "history.jsonl";
  const auto resumed = train(pairs, cfg, second);

  CHECK(flatten_parameters(resumed.network) == flatten_parameters(straight.network));
  CHECK(resumed.optimizer == straight.optimizer);
  REQUIRE(resumed.history.epochs.size() == 2);
  CHECK(resumed.history.epochs[0].epoch == 3);
  CHECK(resumed.history.epochs[1].train_loss == straight.history.epochs[3].train_loss);
  CHECK(lines_of(dir / "history.jsonl").size() == 4);

  auto other = cfg;
  other.net.base_width = 2;
  CHECK_THROWS_AS(train(pairs, other, second), ConfigError);
}

TEST_CASE("training is deterministic") {
  const auto pairs = tiny_pairs(5);
  const auto cfg = tiny_config();
  const auto a = train(pairs, cfg);
  const auto b = train(pairs, cfg);
  CHECK(flatten_parameters(a.network) == flatten_parameters(b.network));
  CHECK(serialize_checkpoint(a.network, &a.optimizer) == serialize_checkpoint(b.network, &b.optimizer));
}

TEST_CASE("evaluate a zero-weight network") {
  auto cfg = tiny_config();
  Network net = build_scnet(cfg.net, 0);
  assign_parameters(net, std::vector<double>(net.parameter_count(), 0.0));
  const auto pairs = tiny_pairs(3);
  const auto report = evaluate(net, pairs, cfg.loss);
  // Every output is 0.5 and every target pixel is 0 or 1.
  CHECK(report.mse == doctest::Approx(0.25).epsilon(1e-12));
  CHECK(report.l1 == doctest::Approx(0.5).epsilon(1e-12));
  CHECK(report.n_pairs == 3);
  CHECK(evaluate_pairs(net, pairs, cfg.loss).size() == 3);
  CHECK_THROWS_AS(evaluate(net, std::vector<TrainingPair>{}, cfg.loss), ArgumentError);
}

TEST_CASE("prepare_target is binary at output resolution") {
  const auto cfg = tiny_config();
  const auto pair = tiny_pairs(1)[0];
  const auto target = prepare_target(pair.clean, cfg.net, cfg.loss);
  CHECK(target.height() == 16);
  CHECK(target.width() == 16);
  for (double v : target.values()) CHECK((v == 0.0 || v == 1.0));
  const auto input = prepare_input(SketchRaster(30, 20, 1.0), cfg.net);
  CHECK(input.height() == 8);
  CHECK(input.width() == 8);
  for (double v : input.values()) CHECK(v == 0.0);
}

TEST_CASE("config json round trip") {
  TrainConfig cfg = tiny_config(OutputMode::kSame);
  cfg.loss.lambda1 = 0.6;
  cfg.loss.lambda2 = 0.4;
  cfg.net.skip_wiring = {};
  cfg.benchmark_split = true;
  const nlohmann::json j = cfg;
  const TrainConfig back = j.get<TrainConfig>();
  CHECK(back.net == cfg.net);
  CHECK(back.epochs == cfg.epochs);
  CHECK(back.loss.lambda1 == 0.6);
  CHECK(back.benchmark_split);
  CHECK(nlohmann::json(back) == j);

  testing::TempDir dir("train_cfg");
  {
    std::ofstream(dir / "good.json") << R"({"epochs": 5, "net": {"input_size": 16, "output_mode": "same"}})";
    std::ofstream(dir / "mode.json") << R"({"net": {"output_mode": "triple"}})";
    std::ofstream(dir / "range.json") << R"({"learning_rate": -1})";
    std::ofstream(dir / "syntax.json") << "{ not json";
  }
  const auto loaded = load_train_config(dir / "good.json");
  CHECK(loaded.epochs == 5);
  CHECK(loaded.net.input_size == 16);
  CHECK(loaded.net.output_mode == OutputMode::kSame);
  CHECK(loaded.batch_size == TrainConfig{}.batch_size);
  CHECK_THROWS_AS(load_train_config(dir / "mode.json"), ConfigError);
  CHECK_THROWS_AS(load_train_config(dir / "range.json"), ConfigError);
  CHECK_THROWS_AS(load_train_config(dir / "syntax.json"), ConfigError);
  CHECK_THROWS_AS(load_train_config(dir / "missing.json"), IoError);
}
