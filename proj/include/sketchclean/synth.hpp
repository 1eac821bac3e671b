#pragma once

#include <cstddef>
#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "sketchclean/raster.hpp"

namespace sketchclean {

// Coordinates are normalized to the unit square; x runs along columns, y along rows.
struct Point {
  double x = 0.0;
  double y = 0.0;
};

struct Circle {
  Point center;
  double radius = 0.0;
};

struct Rectangle {
  Point min;
  Point max;
};

struct Polyline {
  std::vector<Point> points;
  bool closed = false;
};

/// Angles in radians, counter-clockwise in image coordinates, swept from start to end.
struct Arc {
  Point center;
  double radius = 0.0;
  double start_angle = 0.0;
  double end_angle = 0.0;
};

using Primitive = std::variant<Circle, Rectangle, Polyline, Arc>;

struct ShapeSpec {
  std::vector<Primitive> primitives;
  double stroke_width = 1.0;  // pixels
};

/// Knobs for the four defect classes seen in rough query sketches.
struct DefectProfile {
  double gap_rate = 0.0;  // expected gaps per 100 ink pixels
  int duplicate_stroke_count = 0;
  double duplicate_jitter = 0.0;  // pixels
  int mesh_line_count = 0;
  int extra_line_count = 0;
  double blur_sigma = 0.0;  // pixels
  std::uint64_t seed = 0;

  void validate() const;
};

struct TrainingPair {
  std::string id;
  SketchRaster rough;
  SketchRaster clean;
  std::string category;
};

/// Shape families used as category labels, in generation order.
const std::vector<std::string>& shape_families();

ShapeSpec random_shape(const std::string& family, std::uint64_t seed);

SketchRaster render_clean(const ShapeSpec& spec, std::size_t height, std::size_t width);

/// Separable Gaussian with replicated borders; sigma == 0 returns the input.
SketchRaster gaussian_blur(const SketchRaster& raster, double sigma);

/// Sobel gradients (magnitude scaled so a unit step reads 1), non-maximum
/// suppression and 8-connected double-threshold hysteresis. Result is ink
/// polarity: 1 on edges.
SketchRaster canny_edges(const SketchRaster& raster, double low, double high);

/// w_edge * (edge sketch) + (1 - w_edge) * blur(render), white background.
SketchRaster generate_sketch_from_render(const SketchRaster& render, double canny_low, double canny_high,
                                         double blur_sigma, double w_edge);

SketchRaster inject_defects(const SketchRaster& clean, const DefectProfile& profile);

/// Pair i is generated from seed ^ i; categories cycle through shape_families().
std::vector<TrainingPair> make_dataset(std::size_t n, std::size_t height, std::size_t width,
                                       const DefectProfile& profile, std::uint64_t seed, double stroke_width = 1.0);

/// Draws a straight segment in pixel coordinates, darkening pixels to `intensity`.
void draw_segment(SketchRaster& raster, Point from_px, Point to_px, double width, double intensity);

// <root>/rough/<id>.png, <root>/clean/<id>.png, <root>/labels.csv (id,category)
void write_dataset(const std::vector<TrainingPair>& pairs, const std::filesystem::path& root);
std::vector<TrainingPair> read_dataset(const std::filesystem::path& root);

}  // namespace sketchclean
