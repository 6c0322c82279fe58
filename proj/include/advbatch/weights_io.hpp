#ifndef ADVBATCH_WEIGHTS_IO_HPP
#define ADVBATCH_WEIGHTS_IO_HPP

// ADVW weight files, little-endian throughout:
//   "ADVW" | version u32 (=1) | layer count u32 |
//   per layer: rows u32 | cols u32 | rows*cols f32 (W, row-major) | cols f32 (b)

#include <bit>
#include <cstdint>
#include <cstring>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <span>
#include <string>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/model.hpp"

namespace advbatch {

inline constexpr char kWeightsMagic[4] = {'A', 'D', 'V', 'W'};
inline constexpr std::uint32_t kWeightsVersion = 1;

namespace detail {

inline void put_u32(std::vector<std::uint8_t>& out, std::uint32_t v) {
  for (int i = 0; i < 4; ++i) out.push_back(static_cast<std::uint8_t>(v >> (8 * i)));
}

inline void put_f32(std::vector<std::uint8_t>& out, double v) {
  put_u32(out, std::bit_cast<std::uint32_t>(static_cast<float>(v)));
}

class ByteReader {
 public:
  explicit ByteReader(std::span<const std::uint8_t> bytes) : bytes_(bytes) {}
  std::size_t offset() const noexcept { return pos_; }
  std::size_t remaining() const noexcept { return bytes_.size() - pos_; }

  std::uint32_t u32(const char* what) {
    if (remaining() < 4)
      throw IntegrityError(std::string("weights truncated while reading ") + what + " at byte offset " +
                           std::to_string(pos_));
    std::uint32_t v = 0;
    for (int i = 0; i < 4; ++i) v |= static_cast<std::uint32_t>(bytes_[pos_ + i]) << (8 * i);
    pos_ += 4;
    return v;
  }
  double f32(const char* what) { return static_cast<double>(std::bit_cast<float>(u32(what))); }

 private:
  std::span<const std::uint8_t> bytes_;
  std::size_t pos_ = 0;
};

}  // namespace detail

inline std::vector<std::uint8_t> encode_weights(const ModelParams& params) {
  std::vector<std::uint8_t> out(std::begin(kWeightsMagic), std::end(kWeightsMagic));
  detail::put_u32(out, kWeightsVersion);
  detail::put_u32(out, static_cast<std::uint32_t>(params.layers.size()));
  for (const auto& l : params.layers) {
    detail::put_u32(out, static_cast<std::uint32_t>(l.weight.shape()[0]));
    detail::put_u32(out, static_cast<std::uint32_t>(l.weight.shape()[1]));
    for (double v : l.weight.values()) detail::put_f32(out, v);
    for (double v : l.bias.values()) detail::put_f32(out, v);
  }
  return out;
}

/// Parses an ADVW image. Bad magic/version/trailing bytes raise FormatError;
/// truncation or inconsistent layer dimensions raise IntegrityError.
inline ModelParams decode_weights(std::span<const std::uint8_t> bytes) {
  if (bytes.size() < 4 || std::memcmp(bytes.data(), kWeightsMagic, 4) != 0)
    throw FormatError("weights: expected magic \"ADVW\"", 0);
  detail::ByteReader r(bytes.subspan(4));
  const std::uint32_t version = r.u32("version");
  if (version != kWeightsVersion)
    throw FormatError("weights: unsupported version " + std::to_string(version) + " (expected 1)", 4);
  const std::uint32_t count = r.u32("layer count");
  if (count == 0) throw IntegrityError("weights: layer count is zero");
  ModelParams params;
  for (std::uint32_t l = 0; l < count; ++l) {
    const std::uint32_t rows = r.u32("layer rows");
    const std::uint32_t cols = r.u32("layer cols");
    if (rows == 0 || cols == 0) throw IntegrityError("weights: layer " + std::to_string(l) + " has a zero extent");
    if (!params.layers.empty() && params.layers.back().weight.shape()[1] != rows)
      throw IntegrityError("weights: layer " + std::to_string(l) + " has " + std::to_string(rows) +
                           " rows but previous layer has " +
                           std::to_string(params.layers.back().weight.shape()[1]) + " outputs");
    const std::uint64_t need = (static_cast<std::uint64_t>(rows) * cols + cols) * 4;
    if (r.remaining() < need)
      throw IntegrityError("weights: layer " + std::to_string(l) + " declares " + std::to_string(rows) + "x" +
                           std::to_string(cols) + " but only " + std::to_string(r.remaining()) +
                           " bytes remain");
    std::vector<double> w(static_cast<std::size_t>(rows) * cols), b(cols);
    for (double& v : w) v = r.f32("weight");
    for (double& v : b) v = r.f32("bias");
    params.layers.push_back({Tensor(Shape{rows, cols}, std::move(w)), Tensor(Shape{cols}, std::move(b))});
  }
  if (r.remaining() != 0) throw FormatError("weights: trailing bytes after last layer", 4 + r.offset());
  return params;
}

inline std::vector<std::uint8_t> read_file_bytes(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw IoError("cannot open " + path.string() + " for reading");
  return std::vector<std::uint8_t>(std::istreambuf_iterator<char>(in), std::istreambuf_iterator<char>());
}

inline void write_file_bytes(const std::filesystem::path& path, std::span<const std::uint8_t> bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw IoError("cannot open " + path.string() + " for writing");
  out.write(reinterpret_cast<const char*>(bytes.data()), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw IoError("write failed for " + path.string());
}

inline void save_weights(const ModelParams& params, const std::filesystem::path& path) {
  write_file_bytes(path, encode_weights(params));
}

inline ModelParams load_weights(const std::filesystem::path& path) { return decode_weights(read_file_bytes(path)); }

}  // namespace advbatch

#endif  // ADVBATCH_WEIGHTS_IO_HPP
