#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

namespace sketchclean {

/// Single-channel image with intensities in [0,1], row-major.
///
/// Files use the conventional white-background / dark-ink polarity. Network
/// targets and predictions use the inverse ("ink = 1"); see invert().
class SketchRaster {
 public:
  SketchRaster() = default;
  SketchRaster(std::size_t height, std::size_t width, double fill = 1.0);
  /// Takes ownership of `data`; throws ArgumentError when the size does not
  /// match or any value lies outside [0,1].
  SketchRaster(std::size_t height, std::size_t width, std::vector<double> data);

  std::size_t height() const { return height_; }
  std::size_t width() const { return width_; }
  std::size_t size() const { return data_.size(); }
  bool empty() const { return data_.empty(); }

  double at(std::size_t row, std::size_t col) const { return data_[row * width_ + col]; }
  double& at(std::size_t row, std::size_t col) { return data_[row * width_ + col]; }

  std::span<const double> values() const { return data_; }
  std::span<double> values() { return data_; }

  bool operator==(const SketchRaster&) const = default;

 private:
  std::size_t height_ = 0;
  std::size_t width_ = 0;
  std::vector<double> data_;
};

/// 1 = ink, 0 = background.
struct InkMask {
  std::size_t height = 0;
  std::size_t width = 0;
  std::vector<std::uint8_t> data;

  std::size_t count() const;
};

enum class ImageFormat { kPng, kPgm };

SketchRaster load_raster(const std::filesystem::path& path);
SketchRaster decode_raster(std::span<const std::uint8_t> bytes);

/// Format chosen from the extension (".pgm" -> PGM, otherwise PNG).
void save_raster(const SketchRaster& raster, const std::filesystem::path& path);
std::vector<std::uint8_t> encode_raster(const SketchRaster& raster, ImageFormat format = ImageFormat::kPng);

SketchRaster resize_bilinear(const SketchRaster& raster, std::size_t new_height, std::size_t new_width);

/// Positive (ink) where intensity < threshold; ties go to background.
InkMask to_ink_mask(const SketchRaster& raster, double threshold);

SketchRaster invert(const SketchRaster& raster);

SketchRaster flip_horizontal(const SketchRaster& raster);

/// Clamps to [0,1] and maps non-finite values to 0.
SketchRaster clamp_to_raster(std::size_t height, std::size_t width, std::span<const double> values);

}  // namespace sketchclean
