#include "sketchclean/checkpoint.hpp"

#include <bit>
#include <cstring>
#include <fstream>
#include <iterator>

#include "sketchclean/errors.hpp"

namespace sketchclean {

namespace {

constexpr char kMagic[4] = {'S', 'C', 'N', '1'};

class Writer {
 public:
  void u8(std::uint8_t v) { bytes_.push_back(v); }
  void u32(std::uint32_t v) { put_le(v, 4); }
  void u64(std::uint64_t v) { put_le(v, 8); }
  void f32(double v) { u32(std::bit_cast<std::uint32_t>(static_cast<float>(v))); }
  void f64(double v) { u64(std::bit_cast<std::uint64_t>(v)); }
  void raw(const char* data, std::size_t n) { bytes_.insert(bytes_.end(), data, data + n); }
  std::vector<std::uint8_t> take() { return std::move(bytes_); }

 private:
  void put_le(std::uint64_t v, int n) {
    for (int i = 0; i < n; ++i) bytes_.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
  }
  std::vector<std::uint8_t> bytes_;
};

class Reader {
 public:
  explicit Reader(const std::vector<std::uint8_t>& bytes) : bytes_(bytes) {}

  std::uint8_t u8() { return static_cast<std::uint8_t>(get_le(1)); }
  std::uint32_t u32() { return static_cast<std::uint32_t>(get_le(4)); }
  std::uint64_t u64() { return get_le(8); }
  double f32() { return static_cast<double>(std::bit_cast<float>(u32())); }
  double f64() { return std::bit_cast<double>(u64()); }
  void expect_magic() {
    need(4);
    if (std::memcmp(bytes_.data(), kMagic, 4) != 0) throw FormatError("checkpoint: bad magic (expected SCN1)");
    pos_ = 4;
  }
  bool at_end() const { return pos_ == bytes_.size(); }

 private:
  void need(std::size_t n) const {
    if (pos_ + n > bytes_.size()) throw FormatError("checkpoint: truncated file");
  }
  std::uint64_t get_le(int n) {
    need(static_cast<std::size_t>(n));
    std::uint64_t v = 0;
    for (int i = 0; i < n; ++i) v |= static_cast<std::uint64_t>(bytes_[pos_ + static_cast<std::size_t>(i)]) << (8 * i);
    pos_ += static_cast<std::size_t>(n);
    return v;
  }
  const std::vector<std::uint8_t>& bytes_;
  std::size_t pos_ = 0;
};

}  // namespace

std::vector<std::uint8_t> serialize_checkpoint(const Network& net, const OptimizerSnapshot* optimizer) {
  Writer w;
  w.raw(kMagic, 4);
  w.u32(static_cast<std::uint32_t>(net.config.input_size));
  w.u32(static_cast<std::uint32_t>(net.config.base_width));
  w.u8(static_cast<std::uint8_t>(net.config.output_mode));
  w.u32(static_cast<std::uint32_t>(net.config.skip_wiring.size()));
  for (const auto& skip : net.config.skip_wiring) {
    w.u8(static_cast<std::uint8_t>(skip.encoder));
    w.u8(static_cast<std::uint8_t>(skip.decoder));
  }
  w.u32(static_cast<std::uint32_t>(net.layers.size()));
  for (const auto& layer : net.layers) {
    w.u8(static_cast<std::uint8_t>(layer.stage));
    w.u8(static_cast<std::uint8_t>(layer.conv.kind));
    w.u32(static_cast<std::uint32_t>(layer.conv.in_channels));
    w.u32(static_cast<std::uint32_t>(layer.conv.out_channels));
    for (double v : layer.conv.weights) w.f32(v);
    for (double v : layer.conv.bias) w.f32(v);
  }
  if (optimizer == nullptr) {
    w.u8(0);
  } else {
    if (optimizer->first_moment.size() != optimizer->second_moment.size()) {
      throw ArgumentError("checkpoint: optimizer moment lengths differ");
    }
    w.u8(1);
    w.u64(optimizer->step);
    w.u64(optimizer->epochs_completed);
    w.u64(optimizer->first_moment.size());
    for (double v : optimizer->first_moment) w.f64(v);
    for (double v : optimizer->second_moment) w.f64(v);
  }
  return w.take();
}

Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes) {
  Reader r(bytes);
  r.expect_magic();
  NetConfig cfg;
  cfg.input_size = r.u32();
  cfg.base_width = r.u32();
  const auto mode = r.u8();
  if (mode > 1) throw FormatError("checkpoint: unknown output mode");
  cfg.output_mode = static_cast<OutputMode>(mode);
  const auto n_skips = r.u32();
  cfg.skip_wiring.clear();
  for (std::uint32_t i = 0; i < n_skips; ++i) {
    const auto enc = r.u8();
    const auto dec = r.u8();
    if (enc > static_cast<std::uint8_t>(Stage::Output) || dec > static_cast<std::uint8_t>(Stage::Output)) {
      throw FormatError("checkpoint: bad skip stage");
    }
    cfg.skip_wiring.push_back({static_cast<Stage>(enc), static_cast<Stage>(dec)});
  }
  Checkpoint ckpt{build_scnet(cfg, 0), std::nullopt};
  const auto n_layers = r.u32();
  if (n_layers != ckpt.network.layers.size()) throw FormatError("checkpoint: layer count does not match config");
  for (auto& layer : ckpt.network.layers) {
    const auto stage = r.u8();
    const auto kind = r.u8();
    const auto in = r.u32();
    const auto out = r.u32();
    if (stage != static_cast<std::uint8_t>(layer.stage) || kind != static_cast<std::uint8_t>(layer.conv.kind) ||
        in != layer.conv.in_channels || out != layer.conv.out_channels) {
      throw FormatError("checkpoint: layer metadata does not match config for stage " + to_string(layer.stage));
    }
    for (double& v : layer.conv.weights) v = r.f32();
    for (double& v : layer.conv.bias) v = r.f32();
  }
  if (r.u8() == 1) {
    OptimizerSnapshot opt;
    opt.step = r.u64();
    opt.epochs_completed = r.u64();
    const auto n = r.u64();
    if (n != ckpt.network.parameter_count()) throw FormatError("checkpoint: optimizer state length mismatch");
    opt.first_moment.resize(n);
    opt.second_moment.resize(n);
    for (double& v : opt.first_moment) v = r.f64();
    for (double& v : opt.second_moment) v = r.f64();
    ckpt.optimizer = std::move(opt);
  }
  if (!r.at_end()) throw FormatError("checkpoint: trailing bytes");
  return ckpt;
}

void save_checkpoint(const Network& net, const std::filesystem::path& path, const OptimizerSnapshot* optimizer) {
  const auto bytes = serialize_checkpoint(net, optimizer);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

Checkpoint load_checkpoint(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open checkpoint " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return deserialize_checkpoint(bytes);
}

}  // namespace sketchclean
