#ifndef ADVBATCH_GRADCHECK_HPP
#define ADVBATCH_GRADCHECK_HPP

#include <algorithm>
#include <cmath>
#include <concepts>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

/// Central-difference gradient of a tensor-to-scalar function.
///
/// Perturbed points are passed to `f` as Full64 tensors; `f` should evaluate at
/// Full64 as well (for a tape-based function: build the tape with
/// Precision::Full64). Costs 2 * numel(x) evaluations.
template <class F>
  requires std::invocable<F&, const Tensor&>
Tensor finite_difference_gradient(F&& f, const Tensor& x, double h) {
  if (!(h > 0.0)) throw ContractError("finite_difference_gradient: step must be positive");
  const auto base = x.values();
  std::vector<double> point(base.begin(), base.end());
  std::vector<double> grad(point.size());
  for (std::size_t i = 0; i < point.size(); ++i) {
    const double xi = point[i];
    point[i] = xi + h;
    const double up = static_cast<double>(f(Tensor(x.shape(), point, Precision::Full64)));
    point[i] = xi - h;
    const double down = static_cast<double>(f(Tensor(x.shape(), point, Precision::Full64)));
    point[i] = xi;
    grad[i] = (up - down) / (2.0 * h);
  }
  return Tensor(x.shape(), std::move(grad), Precision::Full64);
}

/// max_i |a_i - b_i| / max(max_i |b_i|, floor): error relative to the reference's scale.
inline double max_relative_error(const Tensor& a, const Tensor& reference, double floor = 1e-30) {
  if (!(a.shape() == reference.shape()))
    throw ConformanceError("max_relative_error: shapes " + a.shape().str() + " and " + reference.shape().str());
  double diff = 0.0, scale = floor;
  for (std::size_t i = 0; i < a.numel(); ++i) {
    diff = std::max(diff, std::fabs(a[i] - reference[i]));
    scale = std::max(scale, std::fabs(reference[i]));
  }
  return diff / scale;
}

}  // namespace advbatch

#endif  // ADVBATCH_GRADCHECK_HPP
