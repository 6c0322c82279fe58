#ifndef ADVBATCH_DATASET_HPP
#define ADVBATCH_DATASET_HPP

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/loss.hpp"
#include "advbatch/random.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

/// Gaussian clusters in [0,1]^D.
///
/// Class means sit at distance `mean_radius` from the centre of the cube in
/// seeded random directions (clamped to the cube) and are redrawn until every
/// pair is at least 4 * spread apart. Samples are clamp(mean + spread * z, 0, 1)
/// with z standard normal, emitted interleaved (sample i has label i mod C).
struct SyntheticSpec {
  std::size_t n_classes = 10;
  std::size_t dim = 64;
  std::size_t n_per_class = 300;
  double spread = 0.1;
  std::uint64_t seed = 1;
  double mean_radius = 0.7;
};

enum class Provenance { Synthetic, Idx };

struct EvalSet {
  LabeledBatch batch;
  Provenance provenance = Provenance::Synthetic;
  std::size_t n_classes = 0;
  std::size_t image_rows = 0;  // known image geometry (IDX); 0 when unknown
  std::size_t image_cols = 0;

  std::size_t size() const noexcept { return batch.size(); }
  std::size_t dim() const { return batch.dim(); }
};

inline constexpr int kMeanPlacementAttempts = 1000;

namespace detail {

inline void check_spec(const SyntheticSpec& spec) {
  if (spec.n_classes < 2) throw ContractError("synthetic: need at least 2 classes");
  if (spec.dim < 2) throw ContractError("synthetic: need at least 2 features");
  if (spec.n_per_class < 1) throw ContractError("synthetic: need at least 1 sample per class");
  if (!(spec.spread >= 0.0) || !(spec.mean_radius >= 0.0))
    throw ContractError("synthetic: spread and mean radius must be non-negative");
}

inline std::vector<std::vector<double>> place_means(const SyntheticSpec& spec, Rng& rng) {
  const double min_gap = 4.0 * spec.spread;
  std::vector<std::vector<double>> means;
  for (std::size_t c = 0; c < spec.n_classes; ++c) {
    bool placed = false;
    for (int attempt = 0; attempt < kMeanPlacementAttempts && !placed; ++attempt) {
      std::vector<double> dir(spec.dim);
      double norm = 0.0;
      for (double& v : dir) {
        v = rng.gaussian();
        norm += v * v;
      }
      norm = std::sqrt(norm);
      std::vector<double> mu(spec.dim);
      for (std::size_t d = 0; d < spec.dim; ++d)
        mu[d] = std::clamp(0.5 + spec.mean_radius * dir[d] / norm, 0.0, 1.0);
      placed = std::all_of(means.begin(), means.end(), [&](const std::vector<double>& other) {
        double d2 = 0.0;
        for (std::size_t d = 0; d < spec.dim; ++d) d2 += (mu[d] - other[d]) * (mu[d] - other[d]);
        return std::sqrt(d2) >= min_gap && d2 > 0.0;
      });
      if (placed) means.push_back(std::move(mu));
    }
    if (!placed)
      throw CapacityError("synthetic: cannot place " + std::to_string(spec.n_classes) + " means " +
                          std::to_string(min_gap) + " apart in " + std::to_string(spec.dim) +
                          " dimensions at radius " + std::to_string(spec.mean_radius));
  }
  return means;
}

}  // namespace detail

/// Class centres used by generate_synthetic for the same spec.
inline std::vector<std::vector<double>> class_means(const SyntheticSpec& spec) {
  detail::check_spec(spec);
  Rng rng(spec.seed);
  return detail::place_means(spec, rng);
}

inline EvalSet generate_synthetic(const SyntheticSpec& spec) {
  detail::check_spec(spec);
  Rng rng(spec.seed);
  const auto means = detail::place_means(spec, rng);

  const std::size_t total = spec.n_classes * spec.n_per_class;
  std::vector<double> x;
  x.reserve(total * spec.dim);
  std::vector<int> labels;
  labels.reserve(total);
  for (std::size_t i = 0; i < total; ++i) {
    const std::size_t c = i % spec.n_classes;
    for (std::size_t d = 0; d < spec.dim; ++d)
      x.push_back(std::clamp(means[c][d] + spec.spread * rng.gaussian(), 0.0, 1.0));
    labels.push_back(static_cast<int>(c));
  }
  return EvalSet{{Tensor(Shape{total, spec.dim}, std::move(x)), std::move(labels), 0}, Provenance::Synthetic,
                 spec.n_classes};
}

/// Contiguous, unshuffled slices of `batch_size` rows; the last one may be shorter.
inline std::vector<LabeledBatch> batches(const EvalSet& set, std::size_t batch_size) {
  if (batch_size < 1) throw ContractError("batches: batch size must be >= 1");
  std::vector<LabeledBatch> out;
  const std::size_t n = set.size();
  for (std::size_t start = 0; start < n; start += batch_size) {
    const std::size_t stop = std::min(n, start + batch_size);
    out.push_back({set.batch.inputs.rows(start, stop),
                   std::vector<int>(set.batch.labels.begin() + static_cast<std::ptrdiff_t>(start),
                                    set.batch.labels.begin() + static_cast<std::ptrdiff_t>(stop)),
                   set.batch.offset + start});
  }
  return out;
}

/// First `count` samples and the rest.
inline std::pair<EvalSet, EvalSet> split(const EvalSet& set, std::size_t count) {
  if (count == 0 || count >= set.size())
    throw ContractError("split: count must be in [1, " + std::to_string(set.size()) + ")");
  auto part = [&](std::size_t begin, std::size_t end) {
    return EvalSet{{set.batch.inputs.rows(begin, end),
                    std::vector<int>(set.batch.labels.begin() + static_cast<std::ptrdiff_t>(begin),
                                     set.batch.labels.begin() + static_cast<std::ptrdiff_t>(end)),
                    0},
                   set.provenance, set.n_classes, set.image_rows, set.image_cols};
  };
  return {part(0, count), part(count, set.size())};
}

}  // namespace advbatch

#endif  // ADVBATCH_DATASET_HPP
