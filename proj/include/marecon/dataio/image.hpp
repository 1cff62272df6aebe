#pragma once

#include <png.h>

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstddef>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <iterator>
#include <memory>
#include <optional>
#include <string>
#include <vector>

#include "marecon/diffcore/tensor.hpp"
#include "marecon/errors.hpp"

namespace marecon::dataio {

/// Single-channel image with values in [0, 1], shape (1, H, W).
struct ImageSample {
  Tensor pixels;
  std::string source_id;

  std::size_t height() const { return pixels.dim(1); }
  std::size_t width() const { return pixels.dim(2); }
};

/// Bilinear resampling of a (1,H,W) image to (1,out_h,out_w), pixel-center aligned.
inline Tensor resize_bilinear(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  if (image.rank() != 3 || image.dim(0) != 1) throw ShapeError("resize expects (1,H,W), got " + shape_string(image.shape()));
  const std::size_t h = image.dim(1), w = image.dim(2);
  Tensor out({1, out_h, out_w});
  const double sy = static_cast<double>(h) / static_cast<double>(out_h);
  const double sx = static_cast<double>(w) / static_cast<double>(out_w);
  for (std::size_t y = 0; y < out_h; ++y) {
    const double fy = std::clamp((static_cast<double>(y) + 0.5) * sy - 0.5, 0.0, static_cast<double>(h - 1));
    const auto y0 = static_cast<std::size_t>(fy);
    const std::size_t y1 = std::min(y0 + 1, h - 1);
    const double ty = fy - static_cast<double>(y0);
    for (std::size_t x = 0; x < out_w; ++x) {
      const double fx = std::clamp((static_cast<double>(x) + 0.5) * sx - 0.5, 0.0, static_cast<double>(w - 1));
      const auto x0 = static_cast<std::size_t>(fx);
      const std::size_t x1 = std::min(x0 + 1, w - 1);
      const double tx = fx - static_cast<double>(x0);
      const double top = (1.0 - tx) * image[y0 * w + x0] + tx * image[y0 * w + x1];
      const double bottom = (1.0 - tx) * image[y1 * w + x0] + tx * image[y1 * w + x1];
      out[y * out_w + x] = (1.0 - ty) * top + ty * bottom;
    }
  }
  return out;
}

/// Largest centered square crop of a (1,H,W) image.
inline Tensor center_crop_square(const Tensor& image) {
  const std::size_t h = image.dim(1), w = image.dim(2), side = std::min(h, w);
  const std::size_t oy = (h - side) / 2, ox = (w - side) / 2;
  Tensor out({1, side, side});
  for (std::size_t y = 0; y < side; ++y)
    for (std::size_t x = 0; x < side; ++x) out[y * side + x] = image[(y + oy) * w + x + ox];
  return out;
}

/// Zero border around a (1,H,W) image, e.g. 28x28 -> 32x32 for FFT sizes.
inline Tensor pad_to(const Tensor& image, std::size_t out_h, std::size_t out_w) {
  const std::size_t h = image.dim(1), w = image.dim(2);
  if (out_h < h || out_w < w) throw ShapeError("pad_to target is smaller than the image");
  Tensor out({1, out_h, out_w});
  const std::size_t oy = (out_h - h) / 2, ox = (out_w - w) / 2;
  for (std::size_t y = 0; y < h; ++y)
    for (std::size_t x = 0; x < w; ++x) out[(y + oy) * out_w + x + ox] = image[y * w + x];
  return out;
}

namespace detail {

inline std::vector<unsigned char> read_all(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  return {std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>()};
}

inline Tensor from_bytes(const unsigned char* data, std::size_t h, std::size_t w) {
  Tensor t({1, h, w});
  for (std::size_t i = 0; i < h * w; ++i) t[i] = static_cast<double>(data[i]) / 255.0;
  return t;
}

inline Tensor decode_pgm(const std::vector<unsigned char>& bytes, const std::string& path) {
  std::size_t pos = 2;
  auto next_number = [&]() -> std::size_t {
    while (pos < bytes.size()) {
      if (bytes[pos] == '#') {
        while (pos < bytes.size() && bytes[pos] != '\n') ++pos;
      } else if (std::isspace(bytes[pos])) {
        ++pos;
      } else {
        break;
      }
    }
    if (pos >= bytes.size() || !std::isdigit(bytes[pos])) {
      throw FormatError(path + ": malformed PGM header at byte offset " + std::to_string(pos));
    }
    std::size_t value = 0;
    while (pos < bytes.size() && std::isdigit(bytes[pos])) value = value * 10 + (bytes[pos++] - '0');
    return value;
  };
  const std::size_t w = next_number(), h = next_number(), maxval = next_number();
  if (maxval == 0 || maxval > 255) throw FormatError(path + ": only 8-bit PGM is supported (maxval " + std::to_string(maxval) + ")");
  ++pos;  // single whitespace before raster
  if (bytes.size() < pos + w * h) {
    throw FormatError(path + ": truncated PGM raster at byte offset " + std::to_string(bytes.size()));
  }
  Tensor t({1, h, w});
  for (std::size_t i = 0; i < w * h; ++i) t[i] = static_cast<double>(bytes[pos + i]) / static_cast<double>(maxval);
  return t;
}

struct PngReadState {
  const std::vector<unsigned char>* bytes;
  std::size_t offset;
};

inline Tensor decode_png(const std::vector<unsigned char>& bytes, const std::string& path) {
  png_structp png = png_create_read_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  if (!png) throw IoError("libpng initialisation failed");
  png_infop info = png_create_info_struct(png);
  if (!info) {
    png_destroy_read_struct(&png, nullptr, nullptr);
    throw IoError("libpng initialisation failed");
  }
  // Everything touched after setjmp is declared before it.
  std::vector<unsigned char> raster;
  std::vector<png_bytep> rows;
  std::size_t h = 0, w = 0;
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path + ": corrupt or truncated PNG");
  }
  PngReadState state{&bytes, 0};
  png_set_read_fn(png, &state, [](png_structp p, png_bytep out, png_size_t len) {
    auto* s = static_cast<PngReadState*>(png_get_io_ptr(p));
    if (s->offset + len > s->bytes->size()) png_error(p, "unexpected end of file");
    std::memcpy(out, s->bytes->data() + s->offset, len);
    s->offset += len;
  });
  png_read_info(png, info);
  const int color = png_get_color_type(png, info);
  const int depth = png_get_bit_depth(png, info);
  if (color != PNG_COLOR_TYPE_GRAY || depth != 8) {
    png_destroy_read_struct(&png, &info, nullptr);
    throw FormatError(path + ": only 8-bit grayscale PNG is supported (color type " + std::to_string(color) +
                      ", bit depth " + std::to_string(depth) + ")");
  }
  h = png_get_image_height(png, info);
  w = png_get_image_width(png, info);
  raster.resize(h * w);
  rows.resize(h);
  for (std::size_t y = 0; y < h; ++y) rows[y] = raster.data() + y * w;
  png_read_image(png, rows.data());
  png_read_end(png, nullptr);
  png_destroy_read_struct(&png, &info, nullptr);
  return from_bytes(raster.data(), h, w);
}

}  // namespace detail

struct LoadOptions {
  /// Center-crop to a square and resample to size x size when set.
  std::optional<std::size_t> size;
};

/// Load an 8-bit grayscale PNG or binary PGM (P5) into [0, 1].
inline ImageSample load_grayscale_image(const std::string& path, const LoadOptions& options = {}) {
  const auto bytes = detail::read_all(path);
  static constexpr unsigned char kPngSig[8] = {0x89, 'P', 'N', 'G', '\r', '\n', 0x1a, '\n'};
  Tensor pixels;
  if (bytes.size() >= 8 && std::memcmp(bytes.data(), kPngSig, 8) == 0) {
    pixels = detail::decode_png(bytes, path);
  } else if (bytes.size() >= 2 && bytes[0] == 'P' && bytes[1] == '5') {
    pixels = detail::decode_pgm(bytes, path);
  } else {
    throw FormatError(path + ": not a PNG or binary PGM file");
  }
  if (options.size) {
    pixels = resize_bilinear(center_crop_square(pixels), *options.size, *options.size);
  }
  return {std::move(pixels), path};
}

inline std::vector<unsigned char> quantize(const Tensor& image) {
  std::vector<unsigned char> bytes(image.size());
  for (std::size_t i = 0; i < image.size(); ++i) {
    bytes[i] = static_cast<unsigned char>(std::lround(std::clamp(image[i], 0.0, 1.0) * 255.0));
  }
  return bytes;
}

/// Write an (H,W) or (1,H,W) image as an 8-bit grayscale PNG.
inline void save_png(const Tensor& image, const std::string& path) {
  if (!(image.rank() == 2 || (image.rank() == 3 && image.dim(0) == 1))) {
    throw ShapeError("save_png expects a single-channel image, got " + shape_string(image.shape()));
  }
  const std::size_t h = image.dim(image.rank() - 2), w = image.dim(image.rank() - 1);
  std::vector<unsigned char> bytes = quantize(image);

  std::unique_ptr<std::FILE, int (*)(std::FILE*)> file(std::fopen(path.c_str(), "wb"), &std::fclose);
  if (!file) throw IoError("cannot write " + path);
  png_structp png = png_create_write_struct(PNG_LIBPNG_VER_STRING, nullptr, nullptr, nullptr);
  png_infop info = png ? png_create_info_struct(png) : nullptr;
  if (!png || !info) {
    png_destroy_write_struct(&png, nullptr);
    throw IoError("libpng initialisation failed");
  }
  if (setjmp(png_jmpbuf(png))) {
    png_destroy_write_struct(&png, &info);
    throw IoError("failed while writing " + path);
  }
  png_init_io(png, file.get());
  png_set_IHDR(png, info, static_cast<png_uint_32>(w), static_cast<png_uint_32>(h), 8, PNG_COLOR_TYPE_GRAY,
               PNG_INTERLACE_NONE, PNG_COMPRESSION_TYPE_DEFAULT, PNG_FILTER_TYPE_DEFAULT);
  png_write_info(png, info);
  for (std::size_t y = 0; y < h; ++y) png_write_row(png, bytes.data() + y * w);
  png_write_end(png, nullptr);
  png_destroy_write_struct(&png, &info);
}

/// Binary PGM (P5) writer; handy for fixtures.
inline void save_pgm(const Tensor& image, const std::string& path) {
  const std::size_t h = image.dim(image.rank() - 2), w = image.dim(image.rank() - 1);
  std::ofstream out(path, std::ios::binary);
  if (!out) throw IoError("cannot write " + path);
  out << "P5\n" << w << ' ' << h << "\n255\n";
  const auto bytes = quantize(image);
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("failed while writing " + path);
}

}  // namespace marecon::dataio
