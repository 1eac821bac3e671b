#pragma once

#include <unistd.h>

#include <atomic>
#include <cmath>
#include <algorithm>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <system_error>
#include <vector>

#include "sketchclean/model.hpp"
#include "sketchclean/raster.hpp"
#include "sketchclean/rng.hpp"

namespace testing {

/// Fresh directory under the system temp dir, removed on destruction.
class TempDir {
 public:
  explicit TempDir(const std::string& tag) {
    static std::atomic<int> counter{0};
    path_ = std::filesystem::temp_directory_path() /
            ("sketchclean_" + tag + "_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path_);
    std::filesystem::create_directories(path_);
  }
  ~TempDir() {
    std::error_code ec;
    std::filesystem::remove_all(path_, ec);
  }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;

  const std::filesystem::path& path() const { return path_; }
  std::filesystem::path operator/(const std::string& name) const { return path_ / name; }

 private:
  std::filesystem::path path_;
};

inline sketchclean::SketchRaster random_raster(std::size_t h, std::size_t w, std::uint64_t seed) {
  sketchclean::Rng rng(seed);
  std::vector<double> v(h * w);
  for (double& x : v) x = rng.uniform();
  return sketchclean::SketchRaster(h, w, std::move(v));
}

inline sketchclean::FeatureMap random_map(std::size_t c, std::size_t h, std::size_t w, std::uint64_t seed,
                                          double lo = 0.0, double hi = 1.0) {
  sketchclean::Rng rng(seed);
  sketchclean::FeatureMap m(c, h, w);
  for (double& x : m.values()) x = rng.uniform(lo, hi);
  return m;
}

inline std::string read_file(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

/// Relative error with an absolute floor, as used by gradient checks.
inline bool grad_close(double analytic, double numeric, double rel, double abs_floor) {
  const double diff = std::abs(analytic - numeric);
  if (diff <= abs_floor) return true;
  return diff <= rel * std::max(std::abs(analytic), std::abs(numeric));
}

}  // namespace testing
