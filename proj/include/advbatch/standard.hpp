#ifndef ADVBATCH_STANDARD_HPP
#define ADVBATCH_STANDARD_HPP

// The standard desk-scale task: 10 Gaussian clusters in [0,1]^64 (8x8 "images"),
// the first 1000 samples held out for evaluation and the remaining 2000 used to
// train a 64-32-32-10 ReLU MLP to saturation.

#include <cstdint>

#include "advbatch/dataset.hpp"
#include "advbatch/model.hpp"

namespace advbatch::standard {

inline constexpr std::size_t kEvalCount = 1000;

inline SyntheticSpec data_spec() {
  return SyntheticSpec{.n_classes = 10, .dim = 64, .n_per_class = 300, .spread = 0.1, .seed = 1, .mean_radius = 0.7};
}

inline ModelSpec model_spec() { return ModelSpec{{64, 32, 32, 10}, 7}; }

inline TrainConfig train_config() { return TrainConfig{.epochs = 400, .lr = 0.1, .batch_size = 32, .target_accuracy = 0.99}; }

struct Task {
  EvalSet eval;
  EvalSet train;
};

inline Task make_task(const SyntheticSpec& spec = data_spec(), std::size_t eval_count = kEvalCount) {
  auto [eval, train] = split(generate_synthetic(spec), eval_count);
  return {std::move(eval), std::move(train)};
}

}  // namespace advbatch::standard

#endif  // ADVBATCH_STANDARD_HPP
