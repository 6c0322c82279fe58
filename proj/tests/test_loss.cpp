#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "advbatch/loss.hpp"
#include "advbatch/tape.hpp"

namespace {

using namespace advbatch;

// Direct long-double evaluation of log-softmax for one row.
std::vector<long double> oracle_log_softmax(const std::vector<double>& row) {
  long double m = row[0];
  for (double v : row) m = std::max<long double>(m, v);
  long double s = 0;
  for (double v : row) s += std::exp(static_cast<long double>(v) - m);
  std::vector<long double> out;
  for (double v : row) out.push_back(static_cast<long double>(v) - m - std::log(s));
  return out;
}

Tensor random_logits(std::mt19937_64& gen, std::size_t n, std::size_t c, double scale) {
  std::normal_distribution<double> dist(0.0, scale);
  std::vector<double> v(n * c);
  for (double& x : v) x = dist(gen);
  return Tensor(Shape{n, c}, std::move(v));
}

std::vector<int> random_labels(std::mt19937_64& gen, std::size_t n, std::size_t c) {
  std::vector<int> labels(n);
  for (int& l : labels) l = static_cast<int>(gen() % c);
  return labels;
}

TEST(LogSoftmax, UniformRow) {
  const Tensor out = log_softmax(Tensor(Shape{1, 2}, {0, 0}));
  EXPECT_NEAR(out[0], -std::numbers::ln2, 1e-7);
  EXPECT_NEAR(out[1], -std::numbers::ln2, 1e-7);
}

TEST(LogSoftmax, LargeLogitsDoNotOverflow) {
  for (Precision p : {Precision::Full32, Precision::Emulated16}) {
    const Tensor out = log_softmax(Tensor(Shape{1, 2}, {1000, 0}, p));
    EXPECT_EQ(out[0], 0.0);
    EXPECT_EQ(out[1], -1000.0);
  }
}

TEST(LogSoftmax, MatchesHighPrecisionOracle) {
  const Tensor out = log_softmax(Tensor(Shape{1, 3}, {1, 2, 3}));
  const auto ref = oracle_log_softmax({1, 2, 3});
  for (std::size_t i = 0; i < 3; ++i) EXPECT_NEAR(out[i], static_cast<double>(ref[i]), 1e-6);
  EXPECT_NEAR(out[0], -2.4076, 1e-4);
  EXPECT_NEAR(out[1], -1.4076, 1e-4);
  EXPECT_NEAR(out[2], -0.4076, 1e-4);

  std::mt19937_64 gen(3);
  for (int trial = 0; trial < 50; ++trial) {
    const Tensor logits = random_logits(gen, 4, 7, 5.0);
    const Tensor lsm = log_softmax(logits);
    for (std::size_t r = 0; r < 4; ++r) {
      const auto row = logits.row(r);
      const auto want = oracle_log_softmax({row.begin(), row.end()});
      double total = 0.0;
      for (std::size_t k = 0; k < 7; ++k) {
        EXPECT_NEAR(lsm.at(r, k), static_cast<double>(want[k]), 1e-5);
        total += std::exp(lsm.at(r, k));
      }
      EXPECT_NEAR(total, 1.0, 1e-6);
    }
  }
}

TEST(CrossEntropy, SingleRowMeanEqualsSumExactly) {
  std::mt19937_64 gen(1);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor logits = random_logits(gen, 1, 5, 3.0);
    const std::vector<int> labels = random_labels(gen, 1, 5);
    EXPECT_EQ(cross_entropy(logits, labels, Reduction::Mean), cross_entropy(logits, labels, Reduction::Sum));
  }
}

TEST(CrossEntropy, UniformRows) {
  const Tensor logits = Tensor::filled(Shape{2, 4}, 0.25);
  const std::vector<int> labels{0, 3};
  EXPECT_NEAR(cross_entropy(logits, labels, Reduction::Sum), 2.0 * std::log(4.0), 1e-6);
  EXPECT_NEAR(cross_entropy(logits, labels, Reduction::Mean), std::log(4.0), 1e-6);
}

TEST(CrossEntropy, MeanIsSumOverN) {
  std::mt19937_64 gen(2);
  for (int trial = 0; trial < 20; ++trial) {
    const Tensor logits = random_logits(gen, 4, 6, 2.0);
    const std::vector<int> labels = random_labels(gen, 4, 6);
    const double mean = cross_entropy(logits, labels, Reduction::Mean);
    const double sum = cross_entropy(logits, labels, Reduction::Sum);
    EXPECT_NEAR(mean, sum / 4.0, 1e-6 * std::fabs(sum / 4.0));

    long double want = 0;
    for (std::size_t r = 0; r < 4; ++r) {
      const auto row = logits.row(r);
      want -= oracle_log_softmax({row.begin(), row.end()})[static_cast<std::size_t>(labels[r])];
    }
    EXPECT_NEAR(sum, static_cast<double>(want), 1e-5 * static_cast<double>(want));
  }
}

TEST(CrossEntropy, RejectsBadLabels) {
  const Tensor logits = Tensor::filled(Shape{2, 3}, 0.0);
  EXPECT_THROW(cross_entropy(logits, std::vector<int>{0, 3}, Reduction::Sum), ContractError);
  EXPECT_THROW(cross_entropy(logits, std::vector<int>{-1, 0}, Reduction::Mean), ContractError);
  EXPECT_THROW(cross_entropy(logits, std::vector<int>{0}, Reduction::Mean), ConformanceError);
}

TEST(CrossEntropy, GradientIsSoftmaxMinusOneHot) {
  std::mt19937_64 gen(4);
  for (int trial = 0; trial < 20; ++trial) {
    const std::size_t n = 1 + gen() % 8, c = 2 + gen() % 8;
    const Tensor logits = random_logits(gen, n, c, 2.0);
    const std::vector<int> labels = random_labels(gen, n, c);
    Tape tape;
    const NodeId z = tape.input(logits);
    const Tensor g = tape.gradient(cross_entropy(tape, z, labels, Reduction::Sum), std::vector{z})[0];
    for (std::size_t r = 0; r < n; ++r) {
      const auto row = logits.row(r);
      const auto lsm = oracle_log_softmax({row.begin(), row.end()});
      for (std::size_t k = 0; k < c; ++k) {
        const double want = std::exp(static_cast<double>(lsm[k])) - (static_cast<int>(k) == labels[r] ? 1.0 : 0.0);
        EXPECT_NEAR(g.at(r, k), want, 1e-6);
      }
    }
  }
}

TEST(CrossEntropy, MeanGradientIsSumGradientOverN) {
  std::mt19937_64 gen(5);
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 32u, 64u, 128u}) {
    const Tensor logits = random_logits(gen, n, 10, 3.0);
    const std::vector<int> labels = random_labels(gen, n, 10);
    Tape tape;
    const NodeId z = tape.input(logits);
    const Tensor gm = tape.gradient(cross_entropy(tape, z, labels, Reduction::Mean), std::vector{z})[0];
    const Tensor gs = tape.gradient(cross_entropy(tape, z, labels, Reduction::Sum), std::vector{z})[0];
    for (std::size_t i = 0; i < gm.numel(); ++i) {
      const double want = gs[i] / static_cast<double>(n);
      EXPECT_LE(std::fabs(gm[i] - want), 1e-6 * std::fabs(want)) << n << " " << i;
    }
  }
}

TEST(LabeledBatch, Validate) {
  LabeledBatch b{Tensor(Shape{2, 2}, {0, 1, 0.5, 0.5}), {0, 1}, 0};
  EXPECT_NO_THROW(b.validate(2));
  EXPECT_THROW(b.validate(1), ContractError);
  b.labels = {0};
  EXPECT_THROW(b.validate(2), ConformanceError);
  b.labels = {};
  EXPECT_THROW(b.validate(2), ContractError);
}

}  // namespace
