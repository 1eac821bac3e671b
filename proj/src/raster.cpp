#include "sketchclean/raster.hpp"

#include <png.h>

#include <algorithm>
#include <cmath>
#include <cstring>
#include <fstream>
#include <iterator>
#include <sstream>

#include "sketchclean/errors.hpp"

namespace sketchclean {

SketchRaster::SketchRaster(std::size_t height, std::size_t width, double fill)
    : height_(height), width_(width), data_(height * width, fill) {
  if (height == 0 || width == 0) throw ArgumentError("raster dimensions must be positive");
  if (!(fill >= 0.0 && fill <= 1.0)) throw ArgumentError("raster fill outside [0,1]");
}

SketchRaster::SketchRaster(std::size_t height, std::size_t width, std::vector<double> data)
    : height_(height), width_(width), data_(std::move(data)) {
  if (height == 0 || width == 0) throw ArgumentError("raster dimensions must be positive");
  if (data_.size() != height * width) throw ArgumentError("raster data length does not match shape");
  for (double v : data_) {
    if (!(v >= 0.0 && v <= 1.0)) throw ArgumentError("raster value outside [0,1]");
  }
}

std::size_t InkMask::count() const {
  return static_cast<std::size_t>(std::count(data.begin(), data.end(), std::uint8_t{1}));
}

namespace {

constexpr std::uint8_t kPngSignature[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};

std::uint8_t quantize(double v) { return static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)); }

struct ReadCursor {
  std::span<const std::uint8_t> bytes;
  std::size_t offset = 0;
};

void png_read_from_span(png_structp png, png_bytep out, png_size_t length) {
  auto* cursor = static_cast<ReadCursor*>(png_get_io_ptr(png));
  if (cursor->offset + length > cursor->bytes.size()) png_error(png, "truncated PNG stream");
  std::memcpy(out, cursor->bytes.data() + cursor->offset, length);
  cursor->offset += length;
}

void png_write_to_vector(png_structp png, png_bytep data, png_size_t length) {
  auto* out = static_cast<std::vector<std::uint8_t>*>(png_get_io_ptr(png));
  out->insert(out->end(), data, data + length);
}

void png_flush_noop(png_structp) {}

[[noreturn]] void png_throw(png_structp, png_const_charp message) { throw FormatError(std::string("PNG: ") + message); }

void png_warn_silent(png_structp, png_const_charp) {}

SketchRaster decode_png(std::span<const std::uint8_t> bytes) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_silent);
  if (png == nullptr) throw FormatError("PNG: cannot allocate decoder");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& png;
    png_infop& info;
    ~Guard() { png_destroy_read_struct(&png, &info, nullptr); }
  } guard{png, info};
  if (info == nullptr) throw FormatError("PNG: cannot allocate info");

  ReadCursor cursor{bytes, 0};
  png_set_read_fn(png, &cursor, png_read_from_span);
  png_read_info(png, info);

  const auto width = png_get_image_width(png, info);
  const auto height = png_get_image_height(png, info);
  const int color_type = png_get_color_type(png, info);
  const int bit_depth = png_get_bit_depth(png, info);

  if (bit_depth == 16) png_set_strip_16(png);
  if (color_type == PNG_COLOR_TYPE_PALETTE) png_set_palette_to_rgb(png);
  if (color_type == PNG_COLOR_TYPE_GRAY && bit_depth < 8) png_set_expand_gray_1_2_4_to_8(png);
  if (png_get_valid(png, info, PNG_INFO_tRNS)) png_set_tRNS_to_alpha(png);
  if (color_type == PNG_COLOR_TYPE_RGB || color_type == PNG_COLOR_TYPE_RGB_ALPHA ||
      color_type == PNG_COLOR_TYPE_PALETTE) {
    // Rec. 709 luminance weights.
    png_set_rgb_to_gray_fixed(png, 1, 21268, 71514);
  }
  png_set_strip_alpha(png);
  png_read_update_info(png, info);

  const std::size_t rowbytes = png_get_rowbytes(png, info);
  if (rowbytes != width) throw FormatError("PNG: unsupported channel layout");
  std::vector<std::uint8_t> pixels(static_cast<std::size_t>(height) * rowbytes);
  std::vector<png_bytep> rows(height);
  for (std::size_t r = 0; r < height; ++r) rows[r] = pixels.data() + r * rowbytes;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);

  std::vector<double> data(pixels.size());
  std::transform(pixels.begin(), pixels.end(), data.begin(), [](std::uint8_t v) { return v / 255.0; });
  return SketchRaster(height, width, std::move(data));
}

std::vector<std::uint8_t> encode_png(const SketchRaster& raster) {
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, png_throw, png_warn_silent);
  if (png == nullptr) throw FormatError("PNG: cannot allocate encoder");
  png_infop info = png_create_info_struct(png);
  struct Guard {
    png_structp& png;
    png_infop& info;
    ~Guard() { png_destroy_write_struct(&png, &info); }
  } guard{png, info};
  if (info == nullptr) throw FormatError("PNG: cannot allocate info");

  std::vector<std::uint8_t> out;
  png_set_write_fn(png, &out, png_write_to_vector, png_flush_noop);
  png_set_IHDR(png, info, static_cast<png_uint_32>(raster.width()), static_cast<png_uint_32>(raster.height()), 8,
               PNG_COLOR_TYPE_GRAY, PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  std::vector<std::uint8_t> row(raster.width());
  for (std::size_t r = 0; r < raster.height(); ++r) {
    for (std::size_t c = 0; c < raster.width(); ++c) row[c] = quantize(raster.at(r, c));
    png_write_row(png, row.data());
  }
  png_write_end(png, nullptr);
  return out;
}

// Binary PGM (P5), maxval <= 255.
SketchRaster decode_pgm(std::span<const std::uint8_t> bytes) {
  std::size_t pos = 2;
  auto next_token = [&]() -> long {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    long value = 0;
    bool any = false;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) {
      value = value * 10 + (bytes[pos] - '0');
      if (value > (1L << 24)) throw FormatError("PGM: header value too large");
      any = true;
      ++pos;
    }
    if (!any) throw FormatError("PGM: malformed header");
    return value;
  };
  const long width = next_token();
  const long height = next_token();
  const long maxval = next_token();
  if (width <= 0 || height <= 0) throw FormatError("PGM: non-positive dimensions");
  if (maxval <= 0 || maxval > 255) throw FormatError("PGM: only 8-bit maxval is supported");
  ++pos;  // single whitespace before the raster
  const std::size_t count = static_cast<std::size_t>(width) * static_cast<std::size_t>(height);
  if (pos + count > bytes.size()) throw FormatError("PGM: truncated pixel data");
  std::vector<double> data(count);
  for (std::size_t i = 0; i < count; ++i) {
    data[i] = std::min(1.0, static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval));
  }
  return SketchRaster(static_cast<std::size_t>(height), static_cast<std::size_t>(width), std::move(data));
}

std::vector<std::uint8_t> encode_pgm(const SketchRaster& raster) {
  std::ostringstream header;
  header << "P5\n" << raster.width() << ' ' << raster.height() << "\n255\n";
  const std::string h = header.str();
  std::vector<std::uint8_t> out(h.begin(), h.end());
  out.reserve(out.size() + raster.size());
  for (double v : raster.values()) out.push_back(quantize(v));
  return out;
}

}  // namespace

SketchRaster decode_raster(std::span<const std::uint8_t> bytes) {
  if (bytes.size() >= 8 && std::equal(std::begin(kPngSignature), std::end(kPngSignature), bytes.begin())) {
    return decode_png(bytes);
  }
  if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') return decode_pgm(bytes);
  throw FormatError("unsupported image format");
}

SketchRaster load_raster(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string());
  std::vector<std::uint8_t> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  if (in.bad()) throw IoError("cannot read " + path.string());
  return decode_raster(bytes);
}

std::vector<std::uint8_t> encode_raster(const SketchRaster& raster, ImageFormat format) {
  if (raster.empty()) throw ArgumentError("cannot encode an empty raster");
  return format == ImageFormat::kPgm ? encode_pgm(raster) : encode_png(raster);
}

void save_raster(const SketchRaster& raster, const std::filesystem::path& path) {
  const auto format = path.extension() == ".pgm" ? ImageFormat::kPgm : ImageFormat::kPng;
  const auto bytes = encode_raster(raster, format);
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

SketchRaster resize_bilinear(const SketchRaster& raster, std::size_t new_height, std::size_t new_width) {
  if (new_height == 0 || new_width == 0) throw ArgumentError("resize target dimensions must be positive");
  if (raster.empty()) throw ArgumentError("cannot resize an empty raster");
  if (new_height == raster.height() && new_width == raster.width()) return raster;

  const double sy = static_cast<double>(raster.height()) / static_cast<double>(new_height);
  const double sx = static_cast<double>(raster.width()) / static_cast<double>(new_width);
  const double max_y = static_cast<double>(raster.height() - 1);
  const double max_x = static_cast<double>(raster.width() - 1);

  // Half-pixel-centre sampling; source coordinates clamped to the border.
  std::vector<double> out(new_height * new_width);
  for (std::size_t r = 0; r < new_height; ++r) {
    const double y = std::clamp((static_cast<double>(r) + 0.5) * sy - 0.5, 0.0, max_y);
    const auto y0 = static_cast<std::size_t>(y);
    const std::size_t y1 = std::min(y0 + 1, raster.height() - 1);
    const double fy = y - static_cast<double>(y0);
    for (std::size_t c = 0; c < new_width; ++c) {
      const double x = std::clamp((static_cast<double>(c) + 0.5) * sx - 0.5, 0.0, max_x);
      const auto x0 = static_cast<std::size_t>(x);
      const std::size_t x1 = std::min(x0 + 1, raster.width() - 1);
      const double fx = x - static_cast<double>(x0);
      const double top = raster.at(y0, x0) + fx * (raster.at(y0, x1) - raster.at(y0, x0));
      const double bottom = raster.at(y1, x0) + fx * (raster.at(y1, x1) - raster.at(y1, x0));
      out[r * new_width + c] = std::clamp(top + fy * (bottom - top), 0.0, 1.0);
    }
  }
  return SketchRaster(new_height, new_width, std::move(out));
}

InkMask to_ink_mask(const SketchRaster& raster, double threshold) {
  InkMask mask{raster.height(), raster.width(), std::vector<std::uint8_t>(raster.size())};
  const auto values = raster.values();
  for (std::size_t i = 0; i < values.size(); ++i) mask.data[i] = values[i] < threshold ? 1 : 0;
  return mask;
}

SketchRaster invert(const SketchRaster& raster) {
  std::vector<double> out(raster.values().begin(), raster.values().end());
  for (double& v : out) v = 1.0 - v;
  return SketchRaster(raster.height(), raster.width(), std::move(out));
}

SketchRaster flip_horizontal(const SketchRaster& raster) {
  SketchRaster out = raster;
  for (std::size_t r = 0; r < raster.height(); ++r) {
    for (std::size_t c = 0; c < raster.width(); ++c) out.at(r, c) = raster.at(r, raster.width() - 1 - c);
  }
  return out;
}

SketchRaster clamp_to_raster(std::size_t height, std::size_t width, std::span<const double> values) {
  std::vector<double> out(values.begin(), values.end());
  for (double& v : out) v = std::isfinite(v) ? std::clamp(v, 0.0, 1.0) : 0.0;
  return SketchRaster(height, width, std::move(out));
}

}  // namespace sketchclean
