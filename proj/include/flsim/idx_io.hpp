#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <string>
#include <vector>

#include "flsim/dataset.hpp"
#include "flsim/errors.hpp"

namespace flsim {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

namespace detail {

inline std::uint32_t read_be_u32(std::istream& in, const std::string& what) {
  unsigned char buf[4];
  if (!in.read(reinterpret_cast<char*>(buf), 4))
    throw IdxReadError("truncated IDX file while reading " + what);
  return (std::uint32_t{buf[0]} << 24) | (std::uint32_t{buf[1]} << 16) |
         (std::uint32_t{buf[2]} << 8) | std::uint32_t{buf[3]};
}

inline void write_be_u32(std::ostream& out, std::uint32_t v) {
  const unsigned char buf[4] = {static_cast<unsigned char>(v >> 24),
                                static_cast<unsigned char>(v >> 16),
                                static_cast<unsigned char>(v >> 8),
                                static_cast<unsigned char>(v)};
  out.write(reinterpret_cast<const char*>(buf), 4);
}

}  // namespace detail

// Reads an IDX image/label file pair (big-endian magic, big-endian dimension
// sizes, row-major unsigned byte payload). Pixels are scaled to [0, 1];
// images are flattened to rows*cols features.
inline Dataset load_idx(const std::filesystem::path& images_path,
                        const std::filesystem::path& labels_path) {
  std::ifstream images(images_path, std::ios::binary);
  if (!images) throw IdxReadError("cannot open IDX image file: " + images_path.string());
  std::ifstream labels(labels_path, std::ios::binary);
  if (!labels) throw IdxReadError("cannot open IDX label file: " + labels_path.string());

  const auto image_magic = detail::read_be_u32(images, "image magic");
  if (image_magic != kIdxImagesMagic)
    throw IdxFormatError("bad IDX image magic: expected 0x00000803");
  const auto label_magic = detail::read_be_u32(labels, "label magic");
  if (label_magic != kIdxLabelsMagic)
    throw IdxFormatError("bad IDX label magic: expected 0x00000801");

  const auto image_count = detail::read_be_u32(images, "image count");
  const auto rows = detail::read_be_u32(images, "image rows");
  const auto cols = detail::read_be_u32(images, "image cols");
  const auto label_count = detail::read_be_u32(labels, "label count");
  if (image_count != label_count)
    throw IdxConsistencyError("IDX image count differs from label count");
  if (rows == 0 || cols == 0) throw IdxFormatError("IDX image dimensions must be positive");

  const std::size_t pixels = std::size_t{rows} * cols;
  std::vector<unsigned char> image_buf(pixels);
  Dataset out;
  out.dim = pixels;
  out.features.reserve(std::size_t{image_count} * pixels);
  out.labels.reserve(image_count);
  for (std::uint32_t i = 0; i < image_count; ++i) {
    if (!images.read(reinterpret_cast<char*>(image_buf.data()),
                     static_cast<std::streamsize>(pixels)))
      throw IdxReadError("truncated IDX image payload");
    unsigned char y = 0;
    if (!labels.read(reinterpret_cast<char*>(&y), 1))
      throw IdxReadError("truncated IDX label payload");
    for (unsigned char px : image_buf) out.features.push_back(px / 255.0);
    out.labels.push_back(static_cast<int>(y));
  }
  return out;
}

// Writes a dataset as an IDX pair. Features are mapped back to bytes with
// round(v * 255); loading the written files reproduces the dataset exactly
// when every feature lies on the 1/255 grid.
inline void save_idx(const Dataset& data, const std::filesystem::path& images_path,
                     const std::filesystem::path& labels_path, std::uint32_t rows,
                     std::uint32_t cols) {
  if (std::size_t{rows} * cols != data.dim)
    throw std::invalid_argument("save_idx: rows*cols must equal the feature dimension");
  for (int y : data.labels) {
    if (y < 0 || y > 255) throw std::invalid_argument("save_idx: labels must fit in a byte");
  }
  std::ofstream images(images_path, std::ios::binary);
  if (!images) throw IdxReadError("cannot open IDX image file for writing");
  std::ofstream labels(labels_path, std::ios::binary);
  if (!labels) throw IdxReadError("cannot open IDX label file for writing");

  detail::write_be_u32(images, kIdxImagesMagic);
  detail::write_be_u32(images, static_cast<std::uint32_t>(data.n()));
  detail::write_be_u32(images, rows);
  detail::write_be_u32(images, cols);
  detail::write_be_u32(labels, kIdxLabelsMagic);
  detail::write_be_u32(labels, static_cast<std::uint32_t>(data.n()));
  for (std::size_t i = 0; i < data.n(); ++i) {
    for (double v : data.row(i)) {
      const long byte = std::lround(std::clamp(v, 0.0, 1.0) * 255.0);
      const unsigned char px = static_cast<unsigned char>(byte);
      images.write(reinterpret_cast<const char*>(&px), 1);
    }
    const unsigned char y = static_cast<unsigned char>(data.labels[i]);
    labels.write(reinterpret_cast<const char*>(&y), 1);
  }
}

}  // namespace flsim
