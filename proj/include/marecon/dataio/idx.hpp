#pragma once

#include <cstddef>
#include <cstdint>
#include <fstream>
#include <iterator>
#include <string>
#include <vector>

#include "marecon/dataio/image.hpp"
#include "marecon/errors.hpp"

namespace marecon::dataio {

inline constexpr std::uint32_t kIdxUnsignedByte3d = 0x00000803;

namespace detail {

inline std::uint32_t read_be32(const std::vector<unsigned char>& bytes, std::size_t offset, const std::string& path) {
  if (offset + 4 > bytes.size()) {
    throw FormatError(path + ": truncated IDX header at byte offset " + std::to_string(offset));
  }
  return (std::uint32_t{bytes[offset]} << 24) | (std::uint32_t{bytes[offset + 1]} << 16) |
         (std::uint32_t{bytes[offset + 2]} << 8) | std::uint32_t{bytes[offset + 3]};
}

}  // namespace detail

/// Read an unsigned-byte 3-D IDX file (MNIST image layout) into [0,1] images.
inline std::vector<ImageSample> load_idx(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path);
  const std::vector<unsigned char> bytes((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());

  const std::uint32_t magic = detail::read_be32(bytes, 0, path);
  if (magic != kIdxUnsignedByte3d) {
    throw FormatError(path + ": bad IDX magic at byte offset 0 (expected 0x00000803, got " + std::to_string(magic) +
                      ")");
  }
  const std::size_t count = detail::read_be32(bytes, 4, path);
  const std::size_t rows = detail::read_be32(bytes, 8, path);
  const std::size_t cols = detail::read_be32(bytes, 12, path);
  const std::size_t header = 16, per_image = rows * cols;
  const std::size_t needed = header + count * per_image;
  if (bytes.size() < needed) {
    throw FormatError(path + ": truncated IDX payload, file ends at byte offset " + std::to_string(bytes.size()) +
                      " but " + std::to_string(needed) + " bytes are required");
  }

  std::vector<ImageSample> images;
  images.reserve(count);
  for (std::size_t k = 0; k < count; ++k) {
    Tensor pixels({1, rows, cols});
    const unsigned char* src = bytes.data() + header + k * per_image;
    for (std::size_t i = 0; i < per_image; ++i) pixels[i] = static_cast<double>(src[i]) / 255.0;
    images.push_back({std::move(pixels), path + "#" + std::to_string(k)});
  }
  return images;
}

}  // namespace marecon::dataio
