#ifndef ADVBATCH_IDX_HPP
#define ADVBATCH_IDX_HPP

// IDX (MNIST-style) files: big-endian u32 header, unsigned byte payload.
//   images: 0x00000803 | count | rows | cols | count*rows*cols bytes
//   labels: 0x00000801 | count | count bytes

#include <algorithm>
#include <cstdint>
#include <cstdio>
#include <filesystem>
#include <span>
#include <string>
#include <vector>

#include "advbatch/dataset.hpp"
#include "advbatch/error.hpp"
#include "advbatch/weights_io.hpp"

namespace advbatch {

inline constexpr std::uint32_t kIdxImagesMagic = 0x00000803;
inline constexpr std::uint32_t kIdxLabelsMagic = 0x00000801;

struct IdxImages {
  std::size_t count = 0, rows = 0, cols = 0;
  std::vector<std::uint8_t> pixels;
};

namespace detail {

inline std::uint32_t read_be32(std::span<const std::uint8_t> b, std::size_t at, const char* file) {
  if (b.size() < at + 4)
    throw LengthError(std::string(file) + ": truncated header (" + std::to_string(b.size()) + " bytes)");
  return (std::uint32_t{b[at]} << 24) | (std::uint32_t{b[at + 1]} << 16) | (std::uint32_t{b[at + 2]} << 8) |
         std::uint32_t{b[at + 3]};
}

inline void expect_magic(std::span<const std::uint8_t> b, std::uint32_t magic, const char* file) {
  const std::uint32_t got = read_be32(b, 0, file);
  if (got != magic) {
    char buf[64];
    std::snprintf(buf, sizeof buf, "%s: magic 0x%08x, expected 0x%08x", file, got, magic);
    throw FormatError(buf, 0);
  }
}

}  // namespace detail

inline IdxImages parse_idx_images(std::span<const std::uint8_t> b) {
  detail::expect_magic(b, kIdxImagesMagic, "idx images");
  IdxImages img;
  img.count = detail::read_be32(b, 4, "idx images");
  img.rows = detail::read_be32(b, 8, "idx images");
  img.cols = detail::read_be32(b, 12, "idx images");
  const std::size_t available = b.size() - 16;
  const std::uint64_t per_image = std::uint64_t{img.rows} * img.cols;
  if (per_image != 0 && img.count > available / per_image)
    throw LengthError("idx images: payload has " + std::to_string(available) + " bytes, header declares " +
                      std::to_string(img.count) + " images of " + std::to_string(img.rows) + "x" +
                      std::to_string(img.cols));
  const std::size_t need = img.count * per_image;
  img.pixels.assign(b.begin() + 16, b.begin() + 16 + static_cast<std::ptrdiff_t>(need));
  return img;
}

inline std::vector<std::uint8_t> parse_idx_labels(std::span<const std::uint8_t> b) {
  detail::expect_magic(b, kIdxLabelsMagic, "idx labels");
  const std::size_t count = detail::read_be32(b, 4, "idx labels");
  if (b.size() - 8 < count)
    throw LengthError("idx labels: payload has " + std::to_string(b.size() - 8) + " bytes, header declares " +
                      std::to_string(count));
  return {b.begin() + 8, b.begin() + 8 + static_cast<std::ptrdiff_t>(count)};
}

/// Pixels are scaled to [0,1] by /255. The class count is 1 + the largest label.
inline EvalSet idx_to_eval_set(const IdxImages& images, std::span<const std::uint8_t> labels) {
  if (images.count != labels.size())
    throw IntegrityError("idx: " + std::to_string(images.count) + " images but " + std::to_string(labels.size()) +
                         " labels");
  if (images.count == 0) throw IntegrityError("idx: no samples");
  const std::size_t dim = images.rows * images.cols;
  std::vector<double> x(images.pixels.size());
  for (std::size_t i = 0; i < x.size(); ++i) x[i] = static_cast<double>(images.pixels[i]) / 255.0;
  std::vector<int> y(labels.begin(), labels.end());
  const std::size_t classes = static_cast<std::size_t>(*std::max_element(y.begin(), y.end())) + 1;
  return EvalSet{{Tensor(Shape{images.count, dim}, std::move(x)), std::move(y), 0}, Provenance::Idx, classes,
                 images.rows, images.cols};
}

inline EvalSet load_idx(const std::filesystem::path& images_path, const std::filesystem::path& labels_path) {
  const auto img = parse_idx_images(read_file_bytes(images_path));
  const auto lab = parse_idx_labels(read_file_bytes(labels_path));
  return idx_to_eval_set(img, lab);
}

}  // namespace advbatch

#endif  // ADVBATCH_IDX_HPP
