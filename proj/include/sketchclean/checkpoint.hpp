#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <vector>

#include "sketchclean/model.hpp"

namespace sketchclean {

/// Adam state carried in a checkpoint so training can resume exactly.
struct OptimizerSnapshot {
  std::uint64_t step = 0;
  std::uint64_t epochs_completed = 0;
  std::vector<double> first_moment;
  std::vector<double> second_moment;

  bool operator==(const OptimizerSnapshot&) const = default;
};

struct Checkpoint {
  Network network;
  std::optional<OptimizerSnapshot> optimizer;
};

// Layout (little-endian):
//   "SCN1" | u32 input_size | u32 base_width | u8 output_mode | u32 n_skips | n_skips x (u8 enc, u8 dec)
//   u32 n_layers | per layer: u8 stage, u8 kind, u32 in, u32 out, f32 weights[out*in*9], f32 bias[out]
//   u8 has_optimizer | [u64 step, u64 epochs, u64 n, f64 m[n], f64 v[n]]
std::vector<std::uint8_t> serialize_checkpoint(const Network& net, const OptimizerSnapshot* optimizer = nullptr);
Checkpoint deserialize_checkpoint(const std::vector<std::uint8_t>& bytes);

void save_checkpoint(const Network& net, const std::filesystem::path& path,
                     const OptimizerSnapshot* optimizer = nullptr);
Checkpoint load_checkpoint(const std::filesystem::path& path);

}  // namespace sketchclean
