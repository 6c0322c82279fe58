#ifndef ADVBATCH_LOSS_HPP
#define ADVBATCH_LOSS_HPP

#include <cstddef>
#include <span>
#include <string>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/tape.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

/// How per-sample cross-entropy terms combine into the batch loss.
/// Mean divides the total by the batch size N; Sum keeps the total.
enum class Reduction { Mean, Sum };

inline const char* to_string(Reduction r) { return r == Reduction::Mean ? "mean" : "sum"; }

/// Rows of features with one hard label each. `offset` is the index of the first
/// row within the evaluation set it was sliced from.
struct LabeledBatch {
  Tensor inputs;            // [N, D]
  std::vector<int> labels;  // N entries
  std::size_t offset = 0;

  std::size_t size() const noexcept { return labels.size(); }
  std::size_t dim() const { return inputs.shape()[1]; }

  void validate(std::size_t n_classes) const {
    if (inputs.shape().rank() != 2) throw ConformanceError("batch inputs must be [N, D], got " + inputs.shape().str());
    if (labels.empty()) throw ContractError("batch must hold at least one sample");
    if (inputs.shape()[0] != labels.size())
      throw ConformanceError("batch has " + std::to_string(inputs.shape()[0]) + " rows but " +
                             std::to_string(labels.size()) + " labels");
    for (int l : labels)
      if (l < 0 || static_cast<std::size_t>(l) >= n_classes)
        throw ContractError("label " + std::to_string(l) + " outside [0, " + std::to_string(n_classes) + ")");
    for (double v : inputs.values())
      if (!std::isfinite(v)) throw ContractError("batch inputs must be finite");
  }
};

/// Row-wise log-softmax of [N, C] logits with max-shift.
inline NodeId log_softmax(Tape& tape, NodeId logits) {
  const Shape& s = tape.value(logits).shape();
  if (s.rank() != 2) throw ConformanceError("log_softmax: logits must be [N, C], got " + s.str());
  const std::size_t classes = s[1];
  const NodeId shifted = tape.sub(logits, tape.broadcast(tape.reduce_max(logits, 1), 1, classes));
  const NodeId log_norm = tape.log(tape.reduce_sum(tape.exp(shifted), 1));
  return tape.sub(shifted, tape.broadcast(log_norm, 1, classes));
}

inline Tensor log_softmax(const Tensor& logits) {
  Tape tape(logits.precision());
  return tape.value(log_softmax(tape, tape.constant(logits)));
}

/// Scalar softmax cross-entropy. Sum: -sum_n log p(label_n | x_n). Mean: that over N.
inline NodeId cross_entropy(Tape& tape, NodeId logits, std::span<const int> labels, Reduction reduction) {
  const Shape& s = tape.value(logits).shape();
  if (s.rank() != 2) throw ConformanceError("cross_entropy: logits must be [N, C], got " + s.str());
  const std::size_t rows = s[0], classes = s[1];
  if (labels.size() != rows)
    throw ConformanceError("cross_entropy: " + std::to_string(rows) + " rows but " + std::to_string(labels.size()) +
                           " labels");
  std::vector<double> mask(rows * classes, 0.0);
  for (std::size_t n = 0; n < rows; ++n) {
    if (labels[n] < 0 || static_cast<std::size_t>(labels[n]) >= classes)
      throw ContractError("cross_entropy: label " + std::to_string(labels[n]) + " outside [0, " +
                          std::to_string(classes) + ")");
    mask[n * classes + static_cast<std::size_t>(labels[n])] = 1.0;
  }
  const NodeId one_hot = tape.constant(Tensor(s, std::move(mask), tape.precision()));
  const NodeId picked = tape.reduce_sum(tape.mul(log_softmax(tape, logits), one_hot), 1);
  const NodeId total = tape.reduce_sum(picked, 0);
  const double factor = reduction == Reduction::Mean ? -1.0 / static_cast<double>(rows) : -1.0;
  return tape.scale(total, factor);
}

inline double cross_entropy(const Tensor& logits, std::span<const int> labels, Reduction reduction) {
  Tape tape(logits.precision());
  return tape.value(cross_entropy(tape, tape.constant(logits), labels, reduction)).item();
}

}  // namespace advbatch

#endif  // ADVBATCH_LOSS_HPP
