#ifndef ADVBATCH_TENSOR_HPP
#define ADVBATCH_TENSOR_HPP

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <initializer_list>
#include <memory>
#include <span>
#include <string>
#include <utility>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/half.hpp"

namespace advbatch {

/// Storage/compute precision policy.
///
/// Full32 rounds every stored value to IEEE binary32. Emulated16 performs the
/// arithmetic of a primitive at binary32 and then rounds the result to binary16.
/// Full64 does not round at all; it exists for reference oracles (finite
/// differences) and is never used by the attacks.
enum class Precision { Full32, Emulated16, Full64 };

inline const char* to_string(Precision p) {
  switch (p) {
    case Precision::Full32: return "fp32";
    case Precision::Emulated16: return "fp16";
    case Precision::Full64: return "fp64";
  }
  return "?";
}

/// Rounds one value according to the policy.
inline double round_to(Precision p, double v) noexcept {
  switch (p) {
    case Precision::Full32: return static_cast<double>(static_cast<float>(v));
    case Precision::Emulated16: return half::round(static_cast<double>(static_cast<float>(v)));
    case Precision::Full64: return v;
  }
  return v;
}

inline void round_in_place(Precision p, std::span<double> values) noexcept {
  if (p == Precision::Full64) return;
  for (double& v : values) v = round_to(p, v);
}

/// Row-major shape with at most four axes, stored inline.
class Shape {
 public:
  static constexpr std::size_t kMaxRank = 4;

  Shape() = default;
  Shape(std::initializer_list<std::size_t> dims) {
    if (dims.size() > kMaxRank) throw ContractError("Shape: rank exceeds 4");
    std::copy(dims.begin(), dims.end(), dims_.begin());
    rank_ = dims.size();
  }
  explicit Shape(std::span<const std::size_t> dims) {
    if (dims.size() > kMaxRank) throw ContractError("Shape: rank exceeds 4");
    std::copy(dims.begin(), dims.end(), dims_.begin());
    rank_ = dims.size();
  }

  std::size_t rank() const noexcept { return rank_; }
  std::size_t operator[](std::size_t axis) const { return dims_.at(axis); }
  std::span<const std::size_t> dims() const noexcept { return {dims_.data(), rank_}; }

  std::size_t numel() const noexcept {
    std::size_t n = 1;
    for (std::size_t i = 0; i < rank_; ++i) n *= dims_[i];
    return n;
  }

  /// Shape with `axis` removed.
  Shape without(std::size_t axis) const {
    if (axis >= rank_) throw ContractError("Shape::without: axis out of range");
    Shape s;
    for (std::size_t i = 0; i < rank_; ++i)
      if (i != axis) s.dims_[s.rank_++] = dims_[i];
    return s;
  }

  /// Shape with a new axis of `extent` inserted at position `axis`.
  Shape with(std::size_t axis, std::size_t extent) const {
    if (axis > rank_ || rank_ == kMaxRank) throw ContractError("Shape::with: axis out of range");
    Shape s;
    for (std::size_t i = 0; i < axis; ++i) s.dims_[s.rank_++] = dims_[i];
    s.dims_[s.rank_++] = extent;
    for (std::size_t i = axis; i < rank_; ++i) s.dims_[s.rank_++] = dims_[i];
    return s;
  }

  friend bool operator==(const Shape& a, const Shape& b) noexcept {
    return a.rank_ == b.rank_ && std::equal(a.dims_.begin(), a.dims_.begin() + a.rank_, b.dims_.begin());
  }

  std::string str() const {
    std::string s = "[";
    for (std::size_t i = 0; i < rank_; ++i) {
      if (i) s += ",";
      s += std::to_string(dims_[i]);
    }
    return s + "]";
  }

 private:
  std::array<std::size_t, kMaxRank> dims_{};
  std::size_t rank_ = 0;
};

/// Immutable dense tensor. Values are rounded to the precision tag on construction,
/// so a tensor tagged Emulated16 only ever holds binary16-representable values.
/// Copies share the underlying storage.
class Tensor {
 public:
  Tensor() = default;

  Tensor(Shape shape, std::vector<double> values, Precision precision = Precision::Full32)
      : shape_(shape), precision_(precision) {
    if (values.size() != shape_.numel())
      throw ConformanceError("Tensor: shape " + shape_.str() + " needs " + std::to_string(shape_.numel()) +
                             " values, got " + std::to_string(values.size()));
    round_in_place(precision_, values);
    values_ = std::make_shared<const std::vector<double>>(std::move(values));
  }

  static Tensor filled(Shape shape, double v, Precision precision = Precision::Full32) {
    return Tensor(shape, std::vector<double>(shape.numel(), v), precision);
  }
  static Tensor scalar(double v, Precision precision = Precision::Full32) {
    return Tensor(Shape{}, {v}, precision);
  }

  const Shape& shape() const noexcept { return shape_; }
  std::span<const double> values() const noexcept { return values_ ? std::span<const double>(*values_) : std::span<const double>(); }
  Precision precision() const noexcept { return precision_; }
  std::size_t numel() const noexcept { return values_ ? values_->size() : 0; }

  double operator[](std::size_t i) const { return (*values_)[i]; }
  double at(std::size_t row, std::size_t col) const { return (*values_)[row * shape_[1] + col]; }
  double item() const {
    if (numel() != 1) throw ContractError("Tensor::item on tensor of shape " + shape_.str());
    return (*values_)[0];
  }

  /// Same values re-rounded to another precision.
  Tensor to(Precision p) const {
    if (p == precision_) return *this;
    const auto v = values();
    return Tensor(shape_, std::vector<double>(v.begin(), v.end()), p);
  }

  /// Rows [begin, end) of a rank-2 tensor.
  Tensor rows(std::size_t begin, std::size_t end) const {
    if (shape_.rank() != 2 || begin > end || end > shape_[0])
      throw ContractError("Tensor::rows: bad range for shape " + shape_.str());
    const std::size_t cols = shape_[1];
    const auto all = values();
    std::vector<double> v(all.begin() + static_cast<std::ptrdiff_t>(begin * cols),
                          all.begin() + static_cast<std::ptrdiff_t>(end * cols));
    return Tensor(Shape{end - begin, cols}, std::move(v), precision_);
  }

  std::span<const double> row(std::size_t r) const {
    const std::size_t cols = shape_[1];
    return values().subspan(r * cols, cols);
  }

  friend bool operator==(const Tensor& a, const Tensor& b) noexcept {
    const auto av = a.values();
    const auto bv = b.values();
    return a.shape_ == b.shape_ && a.precision_ == b.precision_ && std::equal(av.begin(), av.end(), bv.begin(), bv.end());
  }

 private:
  Shape shape_;
  std::shared_ptr<const std::vector<double>> values_;
  Precision precision_ = Precision::Full32;
};

/// Row-wise concatenation of rank-2 tensors with equal column counts.
inline Tensor concat_rows(std::span<const Tensor> parts) {
  if (parts.empty()) throw ContractError("concat_rows: no parts");
  const std::size_t cols = parts[0].shape()[1];
  std::size_t rows = 0;
  std::vector<double> v;
  for (const auto& p : parts) {
    if (p.shape().rank() != 2 || p.shape()[1] != cols)
      throw ConformanceError("concat_rows: part of shape " + p.shape().str() + " does not have " +
                             std::to_string(cols) + " columns");
    rows += p.shape()[0];
    v.insert(v.end(), p.values().begin(), p.values().end());
  }
  return Tensor(Shape{rows, cols}, std::move(v), parts[0].precision());
}

}  // namespace advbatch

#endif  // ADVBATCH_TENSOR_HPP
