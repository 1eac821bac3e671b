#include "sketchclean/synth.hpp"

#include <algorithm>
#include <cmath>
#include <deque>
#include <fstream>
#include <numbers>
#include <sstream>

#include "sketchclean/errors.hpp"
#include "sketchclean/rng.hpp"

namespace sketchclean {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;
constexpr double kMeshIntensity = 0.6;
constexpr double kInkThreshold = 0.5;

double dist_to_segment(Point p, Point a, Point b) {
  const double dx = b.x - a.x;
  const double dy = b.y - a.y;
  const double len2 = dx * dx + dy * dy;
  double t = 0.0;
  if (len2 > 0.0) t = std::clamp(((p.x - a.x) * dx + (p.y - a.y) * dy) / len2, 0.0, 1.0);
  return std::hypot(p.x - (a.x + t * dx), p.y - (a.y + t * dy));
}

double wrap_angle(double a) {
  a = std::fmod(a, kTwoPi);
  return a < 0.0 ? a + kTwoPi : a;
}

struct PixelFrame {
  double height;
  double width;
  double radius_scale;

  Point to_px(Point p) const { return {p.x * width, p.y * height}; }
};

struct Box {
  double x0, y0, x1, y1;
};

// Stamps every pixel whose centre lies within width/2 of the shape.
template <typename Dist>
void stamp(SketchRaster& raster, Box box, double width, double intensity, Dist&& dist) {
  const double half = width / 2.0;
  const auto clamp_idx = [](double v, std::size_t n) {
    return static_cast<std::size_t>(std::clamp(v, 0.0, static_cast<double>(n)));
  };
  const std::size_t r0 = clamp_idx(std::floor(box.y0 - half - 1.0), raster.height());
  const std::size_t r1 = clamp_idx(std::ceil(box.y1 + half + 1.0), raster.height());
  const std::size_t c0 = clamp_idx(std::floor(box.x0 - half - 1.0), raster.width());
  const std::size_t c1 = clamp_idx(std::ceil(box.x1 + half + 1.0), raster.width());
  for (std::size_t r = r0; r < r1; ++r) {
    for (std::size_t c = c0; c < c1; ++c) {
      const Point centre{static_cast<double>(c) + 0.5, static_cast<double>(r) + 0.5};
      if (dist(centre) <= half) raster.at(r, c) = std::min(raster.at(r, c), intensity);
    }
  }
}

void draw_px_segment(SketchRaster& raster, Point a, Point b, double width, double intensity) {
  stamp(raster, {std::min(a.x, b.x), std::min(a.y, b.y), std::max(a.x, b.x), std::max(a.y, b.y)}, width, intensity,
        [&](Point p) { return dist_to_segment(p, a, b); });
}

void check_unit(Point p) {
  if (!(p.x >= 0.0 && p.x <= 1.0 && p.y >= 0.0 && p.y <= 1.0)) {
    throw ArgumentError("shape coordinates must lie within the unit square");
  }
}

void draw_primitive(SketchRaster& raster, const PixelFrame& frame, const Primitive& primitive, double width) {
  std::visit(
      [&](const auto& shape) {
        using T = std::decay_t<decltype(shape)>;
        if constexpr (std::is_same_v<T, Circle>) {
          check_unit(shape.center);
          const Point c = frame.to_px(shape.center);
          const double r = shape.radius * frame.radius_scale;
          stamp(raster, {c.x - r, c.y - r, c.x + r, c.y + r}, width, 0.0,
                [&](Point p) { return std::abs(std::hypot(p.x - c.x, p.y - c.y) - r); });
        } else if constexpr (std::is_same_v<T, Rectangle>) {
          check_unit(shape.min);
          check_unit(shape.max);
          const Point a = frame.to_px(shape.min);
          const Point b = frame.to_px(shape.max);
          const Point corners[4] = {a, {b.x, a.y}, b, {a.x, b.y}};
          for (int i = 0; i < 4; ++i) draw_px_segment(raster, corners[i], corners[(i + 1) % 4], width, 0.0);
        } else if constexpr (std::is_same_v<T, Polyline>) {
          for (const auto& p : shape.points) check_unit(p);
          const std::size_t n = shape.points.size();
          if (n == 1) draw_px_segment(raster, frame.to_px(shape.points[0]), frame.to_px(shape.points[0]), width, 0.0);
          for (std::size_t i = 0; i + 1 < n; ++i) {
            draw_px_segment(raster, frame.to_px(shape.points[i]), frame.to_px(shape.points[i + 1]), width, 0.0);
          }
          if (shape.closed && n > 2) {
            draw_px_segment(raster, frame.to_px(shape.points[n - 1]), frame.to_px(shape.points[0]), width, 0.0);
          }
        } else {
          check_unit(shape.center);
          const Point c = frame.to_px(shape.center);
          const double r = shape.radius * frame.radius_scale;
          const double start = wrap_angle(shape.start_angle);
          double sweep = wrap_angle(shape.end_angle - shape.start_angle);
          if (sweep == 0.0 && shape.end_angle != shape.start_angle) sweep = kTwoPi;
          const Point e0{c.x + r * std::cos(start), c.y + r * std::sin(start)};
          const Point e1{c.x + r * std::cos(start + sweep), c.y + r * std::sin(start + sweep)};
          stamp(raster, {c.x - r, c.y - r, c.x + r, c.y + r}, width, 0.0, [&](Point p) {
            const double theta = wrap_angle(std::atan2(p.y - c.y, p.x - c.x) - start);
            if (theta <= sweep) return std::abs(std::hypot(p.x - c.x, p.y - c.y) - r);
            return std::min(std::hypot(p.x - e0.x, p.y - e0.y), std::hypot(p.x - e1.x, p.y - e1.y));
          });
        }
      },
      primitive);
}

Point polar(Point centre, double radius, double angle) {
  return {centre.x + radius * std::cos(angle), centre.y + radius * std::sin(angle)};
}

Point clamp_unit(Point p) { return {std::clamp(p.x, 0.0, 1.0), std::clamp(p.y, 0.0, 1.0)}; }

std::vector<double> gaussian_kernel(double sigma) {
  const int radius = static_cast<int>(std::ceil(3.0 * sigma));
  std::vector<double> k(static_cast<std::size_t>(2 * radius + 1));
  double sum = 0.0;
  for (int i = -radius; i <= radius; ++i) {
    const double v = std::exp(-(i * i) / (2.0 * sigma * sigma));
    k[static_cast<std::size_t>(i + radius)] = v;
    sum += v;
  }
  for (double& v : k) v /= sum;
  return k;
}

std::vector<std::size_t> ink_pixels(const SketchRaster& raster) {
  std::vector<std::size_t> out;
  const auto values = raster.values();
  for (std::size_t i = 0; i < values.size(); ++i) {
    if (values[i] < kInkThreshold) out.push_back(i);
  }
  return out;
}

}  // namespace

void DefectProfile::validate() const {
  if (!(gap_rate >= 0.0) || duplicate_stroke_count < 0 || !(duplicate_jitter >= 0.0) || mesh_line_count < 0 ||
      extra_line_count < 0 || !(blur_sigma >= 0.0)) {
    throw ArgumentError("defect profile rates and counts must be non-negative");
  }
}

const std::vector<std::string>& shape_families() {
  static const std::vector<std::string> families = {"washer", "plate", "gear", "bracket", "shaft", "nut"};
  return families;
}

ShapeSpec random_shape(const std::string& family, std::uint64_t seed) {
  Rng rng(mix_seed(seed));
  ShapeSpec spec;
  auto& prims = spec.primitives;
  const Point centre{rng.uniform(0.45, 0.55), rng.uniform(0.45, 0.55)};

  if (family == "washer") {
    prims.push_back(Circle{centre, rng.uniform(0.3, 0.4)});
    prims.push_back(Circle{centre, rng.uniform(0.1, 0.18)});
  } else if (family == "plate") {
    const Point lo{rng.uniform(0.1, 0.2), rng.uniform(0.1, 0.25)};
    const Point hi{rng.uniform(0.8, 0.9), rng.uniform(0.75, 0.9)};
    prims.push_back(Rectangle{lo, hi});
    const double hole = rng.uniform(0.04, 0.07);
    const double inset = 0.12;
    for (const Point p : {Point{lo.x + inset, lo.y + inset}, Point{hi.x - inset, lo.y + inset},
                          Point{hi.x - inset, hi.y - inset}, Point{lo.x + inset, hi.y - inset}}) {
      prims.push_back(Circle{p, hole});
    }
  } else if (family == "gear") {
    const double r = rng.uniform(0.24, 0.3);
    const double tooth = rng.uniform(0.08, 0.12);
    const int teeth = static_cast<int>(rng.uniform_int(6, 10));
    const double phase = rng.uniform(0.0, kTwoPi);
    prims.push_back(Circle{centre, r});
    prims.push_back(Circle{centre, rng.uniform(0.05, 0.09)});
    const double half = 0.35 * kTwoPi / teeth / 2.0;
    for (int t = 0; t < teeth; ++t) {
      const double a = phase + t * kTwoPi / teeth;
      prims.push_back(Polyline{{clamp_unit(polar(centre, r, a - half)), clamp_unit(polar(centre, r + tooth, a - half)),
                                clamp_unit(polar(centre, r + tooth, a + half)), clamp_unit(polar(centre, r, a + half))},
                               false});
    }
  } else if (family == "bracket") {
    const double x0 = rng.uniform(0.12, 0.22);
    const double y0 = rng.uniform(0.1, 0.2);
    const double x1 = rng.uniform(0.78, 0.88);
    const double y1 = rng.uniform(0.8, 0.9);
    const double t = rng.uniform(0.18, 0.26);
    prims.push_back(Polyline{{{x0, y0}, {x0, y1}, {x1, y1}, {x1, y1 - t}, {x0 + t, y1 - t}, {x0 + t, y0}}, true});
    prims.push_back(Circle{{x0 + t / 2.0, (y0 + y1 - t) / 2.0}, t / 4.0});
  } else if (family == "shaft") {
    const double x0 = rng.uniform(0.06, 0.12);
    const double x1 = rng.uniform(0.35, 0.42);
    const double x2 = rng.uniform(0.6, 0.68);
    const double x3 = rng.uniform(0.88, 0.94);
    const double cy = centre.y;
    const double h0 = rng.uniform(0.08, 0.12);
    const double h1 = rng.uniform(0.16, 0.22);
    const double h2 = rng.uniform(0.05, 0.09);
    prims.push_back(Polyline{{{x0, cy - h0},
                              {x1, cy - h0},
                              {x1, cy - h1},
                              {x2, cy - h1},
                              {x2, cy - h2},
                              {x3, cy - h2},
                              {x3, cy + h2},
                              {x2, cy + h2},
                              {x2, cy + h1},
                              {x1, cy + h1},
                              {x1, cy + h0},
                              {x0, cy + h0}},
                             true});
  } else if (family == "nut") {
    const double r = rng.uniform(0.32, 0.4);
    const double phase = rng.uniform(0.0, kTwoPi / 6.0);
    Polyline hex{{}, true};
    for (int i = 0; i < 6; ++i) hex.points.push_back(clamp_unit(polar(centre, r, phase + i * kTwoPi / 6.0)));
    prims.push_back(std::move(hex));
    prims.push_back(Circle{centre, rng.uniform(0.14, 0.2)});
    prims.push_back(Arc{centre, r * 0.8, phase, phase + std::numbers::pi});
  } else {
    throw ArgumentError("unknown shape family: " + family);
  }
  return spec;
}

SketchRaster render_clean(const ShapeSpec& spec, std::size_t height, std::size_t width) {
  if (height == 0 || width == 0) throw ArgumentError("render dimensions must be positive");
  if (!(spec.stroke_width > 0.0)) throw ArgumentError("stroke width must be positive");
  SketchRaster raster(height, width, 1.0);
  const PixelFrame frame{static_cast<double>(height), static_cast<double>(width),
                         static_cast<double>(std::min(height, width))};
  for (const auto& primitive : spec.primitives) draw_primitive(raster, frame, primitive, spec.stroke_width);
  return raster;
}

void draw_segment(SketchRaster& raster, Point from_px, Point to_px, double width, double intensity) {
  draw_px_segment(raster, from_px, to_px, width, std::clamp(intensity, 0.0, 1.0));
}

SketchRaster gaussian_blur(const SketchRaster& raster, double sigma) {
  if (!(sigma >= 0.0)) throw ArgumentError("blur sigma must be non-negative");
  if (sigma == 0.0) return raster;
  const auto kernel = gaussian_kernel(sigma);
  const auto radius = static_cast<std::ptrdiff_t>(kernel.size() / 2);
  const auto h = static_cast<std::ptrdiff_t>(raster.height());
  const auto w = static_cast<std::ptrdiff_t>(raster.width());
  std::vector<double> tmp(raster.size());
  std::vector<double> out(raster.size());
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      // Offsets from the centre value keep constant regions exact.
      const double centre = raster.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c));
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const auto cc = std::clamp<std::ptrdiff_t>(c + k, 0, w - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] *
               (raster.at(static_cast<std::size_t>(r), static_cast<std::size_t>(cc)) - centre);
      }
      tmp[static_cast<std::size_t>(r * w + c)] = centre + acc;
    }
  }
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double centre = tmp[static_cast<std::size_t>(r * w + c)];
      double acc = 0.0;
      for (std::ptrdiff_t k = -radius; k <= radius; ++k) {
        const auto rr = std::clamp<std::ptrdiff_t>(r + k, 0, h - 1);
        acc += kernel[static_cast<std::size_t>(k + radius)] * (tmp[static_cast<std::size_t>(rr * w + c)] - centre);
      }
      out[static_cast<std::size_t>(r * w + c)] = centre + acc;
    }
  }
  return clamp_to_raster(raster.height(), raster.width(), out);
}

SketchRaster canny_edges(const SketchRaster& raster, double low, double high) {
  if (!(low < high)) throw ArgumentError("canny_low must be below canny_high");
  const auto h = static_cast<std::ptrdiff_t>(raster.height());
  const auto w = static_cast<std::ptrdiff_t>(raster.width());
  const auto px = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    return raster.at(static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(r, 0, h - 1)),
                     static_cast<std::size_t>(std::clamp<std::ptrdiff_t>(c, 0, w - 1)));
  };
  const auto idx = [w](std::ptrdiff_t r, std::ptrdiff_t c) { return static_cast<std::size_t>(r * w + c); };

  std::vector<double> magnitude(raster.size());
  std::vector<std::uint8_t> direction(raster.size());  // 0: horizontal, 1: 45deg, 2: vertical, 3: 135deg
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double gx = (px(r - 1, c + 1) + 2.0 * px(r, c + 1) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r, c - 1) + px(r + 1, c - 1));
      const double gy = (px(r + 1, c - 1) + 2.0 * px(r + 1, c) + px(r + 1, c + 1)) -
                        (px(r - 1, c - 1) + 2.0 * px(r - 1, c) + px(r - 1, c + 1));
      magnitude[idx(r, c)] = std::hypot(gx, gy) / 4.0;
      double angle = std::atan2(gy, gx) * 180.0 / std::numbers::pi;
      if (angle < 0.0) angle += 180.0;
      std::uint8_t d = 0;
      if (angle >= 22.5 && angle < 67.5) {
        d = 1;
      } else if (angle >= 67.5 && angle < 112.5) {
        d = 2;
      } else if (angle >= 112.5 && angle < 157.5) {
        d = 3;
      }
      direction[idx(r, c)] = d;
    }
  }

  // Non-maximum suppression along the gradient. A plateau of equal maxima is
  // thinned by requiring >= on the negative side and > on the positive side.
  static constexpr std::ptrdiff_t kStep[4][2] = {{0, 1}, {1, 1}, {1, 0}, {1, -1}};
  const auto mag_at = [&](std::ptrdiff_t r, std::ptrdiff_t c) {
    if (r < 0 || r >= h || c < 0 || c >= w) return 0.0;
    return magnitude[idx(r, c)];
  };
  std::vector<double> thin(raster.size(), 0.0);
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      const double m = magnitude[idx(r, c)];
      if (m <= 0.0) continue;
      const auto& s = kStep[direction[idx(r, c)]];
      const double before = mag_at(r - s[0], c - s[1]);
      const double after = mag_at(r + s[0], c + s[1]);
      if (m >= before && m > after) thin[idx(r, c)] = m;
    }
  }

  std::vector<double> edges(raster.size(), 0.0);
  std::deque<std::pair<std::ptrdiff_t, std::ptrdiff_t>> frontier;
  for (std::ptrdiff_t r = 0; r < h; ++r) {
    for (std::ptrdiff_t c = 0; c < w; ++c) {
      if (thin[idx(r, c)] >= high) {
        edges[idx(r, c)] = 1.0;
        frontier.emplace_back(r, c);
      }
    }
  }
  while (!frontier.empty()) {
    const auto [r, c] = frontier.front();
    frontier.pop_front();
    for (std::ptrdiff_t dr = -1; dr <= 1; ++dr) {
      for (std::ptrdiff_t dc = -1; dc <= 1; ++dc) {
        const std::ptrdiff_t rr = r + dr;
        const std::ptrdiff_t cc = c + dc;
        if (rr < 0 || rr >= h || cc < 0 || cc >= w) continue;
        if (edges[idx(rr, cc)] == 0.0 && thin[idx(rr, cc)] >= low) {
          edges[idx(rr, cc)] = 1.0;
          frontier.emplace_back(rr, cc);
        }
      }
    }
  }
  return SketchRaster(raster.height(), raster.width(), std::move(edges));
}

SketchRaster generate_sketch_from_render(const SketchRaster& render, double canny_low, double canny_high,
                                         double blur_sigma, double w_edge) {
  if (!(canny_low < canny_high)) throw ArgumentError("canny_low must be below canny_high");
  if (!(blur_sigma >= 0.0)) throw ArgumentError("blur sigma must be non-negative");
  if (!(w_edge >= 0.0 && w_edge <= 1.0)) throw ArgumentError("edge weight must lie in [0,1]");
  const SketchRaster edges = canny_edges(render, canny_low, canny_high);
  const SketchRaster blurred = gaussian_blur(render, blur_sigma);
  std::vector<double> out(render.size());
  for (std::size_t i = 0; i < out.size(); ++i) {
    out[i] = w_edge * (1.0 - edges.values()[i]) + (1.0 - w_edge) * blurred.values()[i];
  }
  return clamp_to_raster(render.height(), render.width(), out);
}

SketchRaster inject_defects(const SketchRaster& clean, const DefectProfile& profile) {
  profile.validate();
  SketchRaster rough = clean;
  Rng rng(mix_seed(profile.seed));
  const auto h = clean.height();
  const auto w = clean.width();
  const double extent = static_cast<double>(std::min(h, w));
  const auto clean_ink = ink_pixels(clean);

  // Duplicate strokes: offset copies of the ink inside a random window.
  if (profile.duplicate_stroke_count > 0 && !clean_ink.empty()) {
    const double jitter = std::max(profile.duplicate_jitter, 1.0);
    for (int d = 0; d < profile.duplicate_stroke_count; ++d) {
      const std::size_t anchor = clean_ink[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(clean_ink.size()) - 1))];
      const auto ar = static_cast<std::ptrdiff_t>(anchor / w);
      const auto ac = static_cast<std::ptrdiff_t>(anchor % w);
      const auto half = static_cast<std::ptrdiff_t>(std::ceil(extent * rng.uniform(0.12, 0.25)));
      auto dr = static_cast<std::ptrdiff_t>(std::lround(rng.uniform(-jitter, jitter)));
      auto dc = static_cast<std::ptrdiff_t>(std::lround(rng.uniform(-jitter, jitter)));
      if (dr == 0 && dc == 0) dc = 1;
      for (std::ptrdiff_t r = ar - half; r <= ar + half; ++r) {
        for (std::ptrdiff_t c = ac - half; c <= ac + half; ++c) {
          if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(h) || c >= static_cast<std::ptrdiff_t>(w)) continue;
          const std::ptrdiff_t tr = r + dr;
          const std::ptrdiff_t tc = c + dc;
          if (tr < 0 || tc < 0 || tr >= static_cast<std::ptrdiff_t>(h) || tc >= static_cast<std::ptrdiff_t>(w)) continue;
          double& target = rough.at(static_cast<std::size_t>(tr), static_cast<std::size_t>(tc));
          target = std::min(target, clean.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)));
        }
      }
    }
  }

  // Mesh lines: faint straight segments across the shape's bounding box.
  if (profile.mesh_line_count > 0 && !clean_ink.empty()) {
    std::size_t rmin = h, rmax = 0, cmin = w, cmax = 0;
    for (std::size_t i : clean_ink) {
      rmin = std::min(rmin, i / w);
      rmax = std::max(rmax, i / w);
      cmin = std::min(cmin, i % w);
      cmax = std::max(cmax, i % w);
    }
    const auto pick = [&]() {
      return Point{rng.uniform(static_cast<double>(cmin), static_cast<double>(cmax) + 1.0),
                   rng.uniform(static_cast<double>(rmin), static_cast<double>(rmax) + 1.0)};
    };
    for (int m = 0; m < profile.mesh_line_count; ++m) {
      const Point a = pick();
      const Point b = pick();
      draw_px_segment(rough, a, b, 1.0, kMeshIntensity);
    }
  }

  // Extra lines: short dark segments anywhere.
  for (int e = 0; e < profile.extra_line_count; ++e) {
    const Point mid{rng.uniform(0.0, static_cast<double>(w)), rng.uniform(0.0, static_cast<double>(h))};
    const double len = extent * rng.uniform(0.1, 0.3);
    const double angle = rng.uniform(0.0, kTwoPi);
    const Point a{mid.x - 0.5 * len * std::cos(angle), mid.y - 0.5 * len * std::sin(angle)};
    const Point b{mid.x + 0.5 * len * std::cos(angle), mid.y + 0.5 * len * std::sin(angle)};
    draw_px_segment(rough, a, b, 1.0, 0.0);
  }

  // Gaps: erase square windows of 2-6 pixels centred on ink.
  if (profile.gap_rate > 0.0) {
    const auto ink = ink_pixels(rough);
    if (!ink.empty()) {
      const auto gaps = std::max<std::int64_t>(
          1, std::llround(profile.gap_rate * static_cast<double>(clean_ink.size()) / 100.0));
      for (std::int64_t g = 0; g < gaps; ++g) {
        const auto current = ink_pixels(rough);
        if (current.empty()) break;
        const std::size_t seed_px = current[static_cast<std::size_t>(rng.uniform_int(0, static_cast<std::int64_t>(current.size()) - 1))];
        const auto len = static_cast<std::ptrdiff_t>(rng.uniform_int(2, 6));
        const auto r0 = static_cast<std::ptrdiff_t>(seed_px / w) - (len - 1) / 2;
        const auto c0 = static_cast<std::ptrdiff_t>(seed_px % w) - (len - 1) / 2;
        for (std::ptrdiff_t r = r0; r < r0 + len; ++r) {
          for (std::ptrdiff_t c = c0; c < c0 + len; ++c) {
            if (r < 0 || c < 0 || r >= static_cast<std::ptrdiff_t>(h) || c >= static_cast<std::ptrdiff_t>(w)) continue;
            rough.at(static_cast<std::size_t>(r), static_cast<std::size_t>(c)) = 1.0;
          }
        }
      }
    }
  }

  if (profile.blur_sigma > 0.0) rough = gaussian_blur(rough, profile.blur_sigma);
  return rough;
}

std::vector<TrainingPair> make_dataset(std::size_t n, std::size_t height, std::size_t width,
                                       const DefectProfile& profile, std::uint64_t seed, double stroke_width) {
  if (n == 0) throw ArgumentError("dataset size must be positive");
  profile.validate();
  const auto& families = shape_families();
  std::vector<TrainingPair> pairs;
  pairs.reserve(n);
  for (std::size_t i = 0; i < n; ++i) {
    const std::uint64_t pair_seed = seed ^ static_cast<std::uint64_t>(i);
    const std::string& family = families[i % families.size()];
    ShapeSpec spec = random_shape(family, pair_seed);
    spec.stroke_width = stroke_width;
    SketchRaster clean = render_clean(spec, height, width);
    DefectProfile p = profile;
    p.seed = mix_seed(pair_seed ^ mix_seed(profile.seed));
    SketchRaster rough = inject_defects(clean, p);
    std::ostringstream id;
    id.width(6);
    id.fill('0');
    id << i;
    pairs.push_back({id.str(), std::move(rough), std::move(clean), family});
  }
  return pairs;
}

void write_dataset(const std::vector<TrainingPair>& pairs, const std::filesystem::path& root) {
  std::error_code ec;
  std::filesystem::create_directories(root / "rough", ec);
  std::filesystem::create_directories(root / "clean", ec);
  if (ec) throw IoError("cannot create dataset directory " + root.string() + ": " + ec.message());
  std::ofstream labels(root / "labels.csv", std::ios::trunc);
  if (!labels) throw IoError("cannot write " + (root / "labels.csv").string());
  labels << "id,category\n";
  for (const auto& pair : pairs) {
    save_raster(pair.rough, root / "rough" / (pair.id + ".png"));
    save_raster(pair.clean, root / "clean" / (pair.id + ".png"));
    labels << pair.id << ',' << pair.category << '\n';
  }
  if (!labels) throw IoError("write failed for labels.csv");
}

std::vector<TrainingPair> read_dataset(const std::filesystem::path& root) {
  std::ifstream labels(root / "labels.csv");
  if (!labels) throw ArgumentError("no labels.csv under " + root.string());
  std::vector<TrainingPair> pairs;
  std::string line;
  bool header = true;
  while (std::getline(labels, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (line.empty()) continue;
    if (header) {
      header = false;
      if (line.rfind("id,", 0) == 0) continue;
    }
    const auto comma = line.find(',');
    if (comma == std::string::npos) throw FormatError("malformed labels.csv line: " + line);
    TrainingPair pair;
    pair.id = line.substr(0, comma);
    pair.category = line.substr(comma + 1);
    pair.rough = load_raster(root / "rough" / (pair.id + ".png"));
    pair.clean = load_raster(root / "clean" / (pair.id + ".png"));
    pairs.push_back(std::move(pair));
  }
  return pairs;
}

}  // namespace sketchclean
