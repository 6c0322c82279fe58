#include <gtest/gtest.h>

#include <cmath>
#include <cstring>
#include <filesystem>
#include <random>
#include <vector>

#include "advbatch/dataset.hpp"
#include "advbatch/model.hpp"
#include "advbatch/standard.hpp"
#include "advbatch/weights_io.hpp"

namespace {

using namespace advbatch;
namespace fs = std::filesystem;

ModelParams single_layer(const std::vector<double>& w, const std::vector<double>& b, std::size_t in,
                         std::size_t out) {
  return ModelParams{{Layer{Tensor(Shape{in, out}, w), Tensor(Shape{out}, b)}}};
}

TEST(InitParams, DeterministicGlorotWithZeroBias) {
  const ModelSpec spec{{64, 32, 32, 10}, 42};
  const ModelParams a = init_params(spec);
  EXPECT_EQ(a, init_params(spec));
  EXPECT_FALSE(a == init_params(ModelSpec{{64, 32, 32, 10}, 43}));
  EXPECT_NEAR(glorot_bound(64, 32), 0.25, 1e-12);
  ASSERT_EQ(a.layers.size(), 3u);
  for (std::size_t l = 0; l < 3; ++l) {
    const double bound = glorot_bound(spec.layer_dims[l], spec.layer_dims[l + 1]);
    double peak = 0.0;
    for (double v : a.layers[l].weight.values()) peak = std::max(peak, std::fabs(v));
    EXPECT_LE(peak, bound);
    EXPECT_GT(peak, 0.8 * bound);
    for (double v : a.layers[l].bias.values()) EXPECT_EQ(v, 0.0);
  }
  EXPECT_EQ(a.input_dim(), 64u);
  EXPECT_EQ(a.num_classes(), 10u);
  EXPECT_THROW(init_params(ModelSpec{{4, 2}, 0}), ContractError);
  EXPECT_THROW(init_params(ModelSpec{{4, 0, 2}, 0}), ContractError);
}

TEST(Logits, ZeroWeightsGiveBiases) {
  ModelParams p = init_params(ModelSpec{{3, 4, 2}, 1});
  p.layers[0].weight = Tensor::filled(Shape{3, 4}, 0.0);
  p.layers[1].weight = Tensor::filled(Shape{4, 2}, 0.0);
  p.layers[1].bias = Tensor(Shape{2}, {0.5, -1.5});
  const Tensor z = logits(p, Tensor(Shape{2, 3}, {0.1, 0.2, 0.3, 0.9, 0.8, 0.7}));
  for (std::size_t r = 0; r < 2; ++r) {
    EXPECT_EQ(z.at(r, 0), 0.5);
    EXPECT_EQ(z.at(r, 1), -1.5);
  }
}

TEST(Logits, SingleLinearLayerMatchesMatrixOracle) {
  std::mt19937_64 gen(8);
  std::uniform_real_distribution<double> u(-1, 1);
  const std::size_t n = 5, d = 7, c = 3;
  std::vector<double> w(d * c), b(c), x(n * d);
  for (double& v : w) v = static_cast<float>(u(gen));
  for (double& v : b) v = static_cast<float>(u(gen));
  for (double& v : x) v = static_cast<float>(u(gen) * 0.5 + 0.5);
  const Tensor z = logits(single_layer(w, b, d, c), Tensor(Shape{n, d}, x));
  for (std::size_t r = 0; r < n; ++r)
    for (std::size_t k = 0; k < c; ++k) {
      double want = b[k];
      for (std::size_t j = 0; j < d; ++j) want += x[r * d + j] * w[j * c + k];
      EXPECT_NEAR(z.at(r, k), want, 1e-6);
    }
  EXPECT_THROW(logits(single_layer(w, b, d, c), Tensor(Shape{n, d + 1}, std::vector<double>(n * (d + 1)))),
               ConformanceError);
  EXPECT_THROW(logits(single_layer(w, b, d, c), Tensor(Shape{n * d}, x)), ConformanceError);
}

TEST(Logits, BatchedRowsEqualSingleSampleRows) {
  const ModelParams p = init_params(ModelSpec{{16, 12, 8, 4}, 3});
  std::mt19937_64 gen(9);
  std::uniform_real_distribution<double> u(0, 1);
  std::vector<double> x(32 * 16);
  for (double& v : x) v = u(gen);
  const Tensor xs(Shape{32, 16}, x);
  const Tensor batched = logits(p, xs);
  for (std::size_t r = 0; r < 32; ++r) {
    const Tensor single = logits(p, xs.rows(r, r + 1));
    for (std::size_t k = 0; k < 4; ++k)
      EXPECT_LE(std::fabs(batched.at(r, k) - single.at(0, k)), 1e-6 * std::fabs(single.at(0, k)));
  }
}

TEST(Logits, Emulated16QuantizesActivations) {
  const ModelParams p = init_params(ModelSpec{{16, 12, 4}, 3});
  const Tensor x = Tensor::filled(Shape{2, 16}, 0.3);
  const Tensor z = logits(p, x, Precision::Emulated16);
  for (double v : z.values()) EXPECT_EQ(half::round(v), v);
  EXPECT_EQ(predict(p, x).size(), 2u);
}

EvalSet blobs() {
  return generate_synthetic(SyntheticSpec{.n_classes = 2, .dim = 2, .n_per_class = 100, .spread = 0.05, .seed = 3,
                                          .mean_radius = 0.4});
}

TEST(TrainSgd, SeparableBlobsReachFullAccuracy) {
  const EvalSet data = blobs();
  const TrainResult r = train_sgd(ModelSpec{{2, 8, 2}, 1}, data.batch, TrainConfig{.epochs = 100, .lr = 0.2,
                                                                                    .batch_size = 16});
  EXPECT_EQ(r.train.accuracy, 1.0);
  EXPECT_TRUE(r.reached_target);
}

TEST(TrainSgd, ZeroLearningRateKeepsInitialParams) {
  const ModelSpec spec{{2, 8, 2}, 1};
  const TrainResult r = train_sgd(spec, blobs().batch, TrainConfig{.epochs = 2, .lr = 0.0});
  EXPECT_EQ(r.params, init_params(spec));
}

TEST(TrainSgd, DeterministicAndValidated) {
  const ModelSpec spec{{2, 8, 2}, 5};
  const EvalSet data = blobs();
  const TrainConfig cfg{.epochs = 5, .lr = 0.1, .batch_size = 8};
  EXPECT_EQ(encode_weights(train_sgd(spec, data.batch, cfg).params),
            encode_weights(train_sgd(spec, data.batch, cfg).params));
  EXPECT_THROW(train_sgd(spec, data.batch, TrainConfig{.epochs = 0}), ContractError);
  EXPECT_THROW(train_sgd(spec, data.batch, TrainConfig{.epochs = 1, .lr = -1.0}), ContractError);
  EXPECT_THROW(train_sgd(ModelSpec{{3, 8, 2}, 5}, data.batch, cfg), ConformanceError);
}

TEST(TrainSgd, UnreachableTargetIsReportedNotThrown) {
  const TrainResult r =
      train_sgd(ModelSpec{{2, 8, 2}, 1}, blobs().batch, TrainConfig{.epochs = 1, .lr = 0.0, .target_accuracy = 1.1});
  EXPECT_FALSE(r.reached_target);
  EXPECT_GE(r.train.accuracy, 0.0);
}

TEST(StandardVictim, IsSaturated) {
  const standard::Task task = standard::make_task();
  const TrainResult r = train_sgd(standard::model_spec(), task.train.batch, standard::train_config());
  EXPECT_TRUE(r.reached_target);
  EXPECT_GE(r.train.accuracy, 0.99);
  EXPECT_GE(r.train.mean_confidence, 0.99);
  const Evaluation held_out = evaluate(r.params, task.eval.batch);
  EXPECT_GE(held_out.accuracy, 0.99);
}

// --- weight files

std::vector<std::uint8_t> tiny_file() {
  // Hand-assembled: one 1x2 layer, W = [1.0, -2.0], b = [0.5, 0.0].
  return {'A',  'D',  'V',  'W',  1, 0, 0, 0, 1, 0, 0, 0, 1, 0, 0, 0, 2, 0,    0,    0,
          0,    0,    0x80, 0x3f, 0, 0, 0, 0xc0, 0,    0,    0,    0x3f, 0,    0, 0, 0};
}

TEST(Weights, DecodesHandAssembledFile) {
  const ModelParams p = decode_weights(tiny_file());
  ASSERT_EQ(p.layers.size(), 1u);
  EXPECT_EQ(p.layers[0].weight.shape(), (Shape{1, 2}));
  EXPECT_EQ(p.layers[0].weight[0], 1.0);
  EXPECT_EQ(p.layers[0].weight[1], -2.0);
  EXPECT_EQ(p.layers[0].bias[0], 0.5);
  EXPECT_EQ(encode_weights(p), tiny_file());
}

TEST(Weights, SaveLoadRoundTripIsBitExact) {
  const ModelParams p = init_params(ModelSpec{{64, 32, 32, 10}, 11});
  const fs::path path = fs::temp_directory_path() / "advbatch_test_roundtrip.advw";
  save_weights(p, path);
  EXPECT_EQ(load_weights(path), p);
  EXPECT_EQ(fs::file_size(path), 12u + 3 * 8 + 4 * (64 * 32 + 32 + 32 * 32 + 32 + 32 * 10 + 10));
  fs::remove(path);
  EXPECT_THROW(load_weights(path), IoError);
}

TEST(Weights, TruncationIsIntegrityError) {
  const auto full = encode_weights(init_params(ModelSpec{{4, 3, 2}, 1}));
  for (std::size_t keep : {6ul, 10ul, 14ul, 30ul, full.size() - 1}) {
    const std::vector<std::uint8_t> cut(full.begin(), full.begin() + static_cast<std::ptrdiff_t>(keep));
    EXPECT_THROW(decode_weights(cut), IntegrityError) << keep;
  }
}

TEST(Weights, CorruptMagicNamesExpectedMagic) {
  auto bytes = tiny_file();
  bytes[1] = 'X';
  try {
    decode_weights(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_NE(std::string(e.what()).find("ADVW"), std::string::npos);
    EXPECT_EQ(e.offset(), 0u);
  }
  EXPECT_THROW(decode_weights(std::vector<std::uint8_t>{'A', 'D'}), FormatError);
}

TEST(Weights, OtherMalformations) {
  auto bytes = tiny_file();
  bytes[4] = 2;
  try {
    decode_weights(bytes);
    FAIL();
  } catch (const FormatError& e) {
    EXPECT_EQ(e.offset(), 4u);
  }

  bytes = tiny_file();
  bytes.push_back(0);
  EXPECT_THROW(decode_weights(bytes), FormatError);

  // second layer claims 3 input rows after a layer with 2 outputs
  auto chain = encode_weights(ModelParams{{Layer{Tensor::filled(Shape{1, 2}, 1.0), Tensor::filled(Shape{2}, 0.0)},
                                           Layer{Tensor::filled(Shape{2, 1}, 1.0), Tensor::filled(Shape{1}, 0.0)}}});
  const std::size_t second_rows = 12 + 8 + 4 * (2 + 2);
  chain[second_rows] = 3;
  EXPECT_THROW(decode_weights(chain), IntegrityError);

  bytes = tiny_file();
  bytes[8] = 0;  // zero layers
  EXPECT_THROW(decode_weights(std::vector<std::uint8_t>(bytes.begin(), bytes.begin() + 12)), IntegrityError);
}

}  // namespace
