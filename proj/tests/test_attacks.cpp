#include <gtest/gtest.h>

#include <bit>
#include <cmath>
#include <random>
#include <vector>

#include "advbatch/attacks.hpp"
#include "advbatch/dataset.hpp"
#include "advbatch/gradcheck.hpp"
#include "advbatch/standard.hpp"

namespace {

using namespace advbatch;

struct Victim {
  ModelParams params;
  EvalSet eval;
};

const Victim& standard_victim() {
  static const Victim v = [] {
    const standard::Task task = standard::make_task();
    return Victim{train_sgd(standard::model_spec(), task.train.batch, standard::train_config()).params, task.eval};
  }();
  return v;
}

LabeledBatch head(const EvalSet& set, std::size_t n) {
  return {set.batch.inputs.rows(0, n), std::vector<int>(set.batch.labels.begin(), set.batch.labels.begin() + n), 0};
}

// Two-class model with logits [0, w x + b]; for label 0 the loss gradient has the sign of w.
ModelParams logistic(double w, double b) {
  return ModelParams{{Layer{Tensor(Shape{1, 2}, {0.0, w}), Tensor(Shape{2}, {0.0, b})}}};
}

Tensor rows(std::vector<double> v, std::size_t n, std::size_t d) { return Tensor(Shape{n, d}, std::move(v)); }

bool bit_identical(const Tensor& a, const Tensor& b) {
  if (!(a.shape() == b.shape())) return false;
  for (std::size_t i = 0; i < a.numel(); ++i)
    if (std::bit_cast<std::uint64_t>(a[i]) != std::bit_cast<std::uint64_t>(b[i])) return false;
  return true;
}

void expect_rows_close(const Tensor& got, const Tensor& want, double rel) {
  ASSERT_EQ(got.shape(), want.shape());
  for (std::size_t i = 0; i < got.numel(); ++i)
    EXPECT_LE(std::fabs(got[i] - want[i]), rel * std::max(std::fabs(want[i]), 1.0)) << i;
}

TEST(AttackConfig, StandardDefaults) {
  const auto linf = AttackConfig::defaults(AttackKind::Pgd, Norm::LInf);
  EXPECT_EQ(linf.epsilon, 0.03125);
  EXPECT_EQ(linf.steps, 32);
  EXPECT_EQ(linf.step_size, 2.0 * 0.03125 / 32.0);
  EXPECT_NEAR(linf.step_size, 0.001953, 1e-6);
  const auto l2 = AttackConfig::defaults(AttackKind::Fgm, Norm::L2);
  EXPECT_EQ(l2.epsilon, 0.5);
  EXPECT_EQ(l2.steps, 1);
  EXPECT_EQ(l2.step_size, 0.5);
  EXPECT_EQ(AttackConfig::defaults(AttackKind::Fgm, Norm::LInf).epsilon, 0.03125);
  EXPECT_EQ(kDefaultL2Scope, L2Scope::PerSample);
}

TEST(AttackConfig, Validation) {
  auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::LInf);
  EXPECT_NO_THROW(c.validate());
  c.steps = 2;
  EXPECT_THROW(c.validate(), ContractError);
  c = AttackConfig::defaults(AttackKind::Fgm, Norm::LInf);
  c.step_size = 0.01;
  EXPECT_THROW(c.validate(), ContractError);
  c = AttackConfig::defaults(AttackKind::Pgd, Norm::L2);
  c.epsilon = -1;
  EXPECT_THROW(c.validate(), ContractError);
  c = AttackConfig::defaults(AttackKind::Pgd, Norm::L2);
  c.steps = 0;
  EXPECT_THROW(c.validate(), ContractError);
  c = AttackConfig::defaults(AttackKind::Pgd, Norm::L2);
  c.precision = Precision::Full64;
  EXPECT_THROW(c.validate(), ContractError);
}

TEST(FgmStep, ZeroGradientLeavesInputInPlace) {
  const Tensor x = rows({0.2, 0.4, 0.6, 0.8}, 2, 2);
  const Tensor g = Tensor::filled(Shape{2, 2}, 0.0);
  for (Norm n : {Norm::L2, Norm::LInf}) {
    auto c = AttackConfig::defaults(AttackKind::Fgm, n);
    EXPECT_TRUE(bit_identical(fgm_step(x, g, c), x));
  }
}

TEST(FgmStep, SignAndNormalisation) {
  auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::LInf);
  const Tensor y = fgm_step(rows({0.5, 0.5}, 1, 2), rows({0.2, -0.01}, 1, 2), c);
  EXPECT_EQ(y[0], 0.53125);
  EXPECT_EQ(y[1], 0.46875);

  c = AttackConfig::defaults(AttackKind::Fgm, Norm::L2);
  const Tensor z = fgm_step(rows({0.1, 0.1, 0.5, 0.5}, 2, 2), rows({3, 4, 0, 0}, 2, 2), c);
  EXPECT_NEAR(z[0], 0.4, 1e-7);
  EXPECT_NEAR(z[1], 0.5, 1e-7);
  EXPECT_EQ(z[2], 0.5);  // zero row untouched
  EXPECT_EQ(z[3], 0.5);

  const Tensor clamped = fgm_step(rows({0.99, 0.01}, 1, 2), rows({1, -1}, 1, 2),
                                  AttackConfig::defaults(AttackKind::Fgm, Norm::LInf));
  EXPECT_EQ(clamped[0], 1.0);
  EXPECT_EQ(clamped[1], 0.0);
  EXPECT_THROW(fgm_step(rows({0.5}, 1, 1), rows({1, 1}, 1, 2), c), ConformanceError);
}

TEST(FgmStep, BatchGlobalScopeNormalisesOverTheWholeBatch) {
  auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::L2);
  c.l2_scope = L2Scope::BatchGlobal;
  const Tensor z = fgm_step(rows({0.1, 0.1, 0.1, 0.1}, 2, 2), rows({3, 0, 0, 4}, 2, 2), c);
  EXPECT_NEAR(z[0], 0.1 + 0.5 * 3 / 5, 1e-7);
  EXPECT_NEAR(z[3], 0.1 + 0.5 * 4 / 5, 1e-7);
}

TEST(Project, Examples) {
  const double eps = 0.25;
  const Tensor orig = rows({0.5, 0.5}, 1, 2);
  const Tensor inside = rows({0.6, 0.45}, 1, 2);
  EXPECT_TRUE(bit_identical(project(inside, orig, Norm::L2, eps), inside));
  EXPECT_TRUE(bit_identical(project(inside, orig, Norm::LInf, eps), inside));

  const Tensor far = rows({0.5 + 0.3, 0.5 + 0.4}, 1, 2);  // delta norm 0.5 = 2 eps
  const Tensor p = project(far, orig, Norm::L2, eps);
  EXPECT_NEAR(std::hypot(p[0] - 0.5, p[1] - 0.5), eps, 1e-6);
  EXPECT_NEAR((p[0] - 0.5) / (p[1] - 0.5), 0.75, 1e-6);

  const Tensor box = project(rows({0.5 + 2 * eps, 0.5 - eps / 2}, 1, 2), orig, Norm::LInf, eps);
  EXPECT_EQ(box[0], 0.5 + eps);
  EXPECT_EQ(box[1], 0.5 - eps / 2);

  const Tensor edge = project(rows({1.2, -0.1}, 1, 2), rows({0.95, 0.05}, 1, 2), Norm::LInf, eps);
  EXPECT_EQ(edge[0], 1.0);
  EXPECT_EQ(edge[1], 0.0);
}

TEST(InitNoise, InsideTheBallAndIndexDependent) {
  for (Norm n : {Norm::L2, Norm::LInf})
    for (std::size_t i = 0; i < 200; ++i) {
      const auto u = init_noise(77, i, n, 0.5, 16);
      EXPECT_LE(row_norm(u, n), 0.5 + 1e-12);
      EXPECT_EQ(u, init_noise(77, i, n, 0.5, 16));
      EXPECT_NE(u, init_noise(77, i + 1, n, 0.5, 16));
    }
}

TEST(Fgm, ZeroBudgetChangesNothing) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 200);
  auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::LInf);
  c.epsilon = c.step_size = 0.0;
  const AttackResult r = fgm(v.params, b, c);
  EXPECT_TRUE(bit_identical(r.adversarial, b.inputs));
  std::size_t clean_errors = 0;
  for (std::size_t i = 0; i < b.size(); ++i) clean_errors += r.clean_pred[i] != b.labels[i];
  EXPECT_EQ(r.n_fooled(), clean_errors);
}

TEST(Fgm, LogisticClosedForm) {
  for (double w : {2.0, -3.0})
    for (double x0 : {0.2, 0.5, 0.99}) {
      const LabeledBatch b{rows({x0}, 1, 1), {0}, 0};
      auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::LInf);
      const AttackResult r = fgm(logistic(w, -0.5), b, c);
      const double want = std::clamp(static_cast<double>(static_cast<float>(x0)) + c.epsilon * (w > 0 ? 1 : -1), 0.0, 1.0);
      EXPECT_NEAR(r.adversarial[0], want, 1e-7) << w << " " << x0;
    }
}

TEST(Pgd, LogisticConvergesToTheBoundary) {
  for (double w : {2.0, -3.0})
    for (double x0 : {0.2, 0.5, 0.99}) {
      const LabeledBatch b{rows({x0}, 1, 1), {0}, 3};
      auto c = AttackConfig::defaults(AttackKind::Pgd, Norm::LInf);
      c.noise_seed = 5;
      const AttackResult r = pgd(logistic(w, -0.5), b, c);
      const double want = std::clamp(static_cast<double>(static_cast<float>(x0)) + c.epsilon * (w > 0 ? 1 : -1), 0.0, 1.0);
      EXPECT_NEAR(r.adversarial[0], want, 1e-6) << w << " " << x0;
    }
}

TEST(Pgd, SingleNoiselessStepIsFgm) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 64);
  for (Norm n : {Norm::L2, Norm::LInf})
    for (Precision p : {Precision::Full32, Precision::Emulated16}) {
      auto f = AttackConfig::defaults(AttackKind::Fgm, n);
      f.precision = p;
      auto g = f;
      g.kind = AttackKind::Pgd;
      g.random_init = false;
      EXPECT_TRUE(bit_identical(pgd(v.params, b, g).adversarial, fgm(v.params, b, f).adversarial));
    }
}

TEST(Pgd, NoiseIsIndependentOfBatching) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 32);
  for (Norm n : {Norm::L2, Norm::LInf}) {
    auto c = AttackConfig::defaults(AttackKind::Pgd, n);
    c.step_size = 0.0;  // the result is the projected random start
    c.steps = 1;
    c.noise_seed = 1234;
    const AttackResult whole = pgd(v.params, b, c);
    EXPECT_TRUE(bit_identical(whole.adversarial, attack_individually(v.params, b, c).adversarial));
    for (std::size_t k : {3u, 8u}) {
      std::vector<AttackResult> parts;
      for (const auto& part : batches(EvalSet{b, Provenance::Synthetic, 10}, k)) parts.push_back(pgd(v.params, part, c));
      EXPECT_TRUE(bit_identical(merge(parts).adversarial, whole.adversarial));
    }
  }
}

TEST(InputGradient, MeanIsSumOverN) {
  const Victim& v = standard_victim();
  for (std::size_t n : {1u, 2u, 4u, 8u, 16u, 32u, 64u, 128u}) {
    const LabeledBatch b = head(v.eval, n);
    const Tensor mean = input_gradient(v.params, b, Reduction::Mean, Precision::Full32);
    const Tensor sum = input_gradient(v.params, b, Reduction::Sum, Precision::Full32);
    if (n == 1) {
      EXPECT_TRUE(bit_identical(mean, sum));
    }
    for (std::size_t i = 0; i < mean.numel(); ++i) {
      const double want = sum[i] / static_cast<double>(n);
      EXPECT_LE(std::fabs(mean[i] - want), 1e-6 * std::fabs(want)) << n << " " << i;
    }
  }
}

TEST(InputGradient, SumRowsAreSeparable) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 16);
  const Tensor batched = input_gradient(v.params, b, Reduction::Sum, Precision::Full32);
  for (std::size_t r = 0; r < b.size(); ++r) {
    const Tensor single =
        input_gradient(v.params, {b.inputs.rows(r, r + 1), {b.labels[r]}, r}, Reduction::Sum, Precision::Full32);
    for (std::size_t c = 0; c < b.dim(); ++c)
      EXPECT_LE(std::fabs(batched.at(r, c) - single[c]), 1e-5 * std::fabs(single[c])) << r << " " << c;
  }
}

TEST(InputGradient, MatchesFiniteDifferencesOnOneSample) {
  const ModelParams p = init_params(ModelSpec{{6, 5, 3}, 21});
  const LabeledBatch b{rows({0.1, 0.9, 0.3, 0.5, 0.7, 0.2}, 1, 6), {2}, 0};
  const Tensor g = input_gradient(p, b, Reduction::Mean, Precision::Full32);
  const ModelParams wide = p.to(Precision::Full64);
  const Tensor fd = finite_difference_gradient(
      [&](const Tensor& x) {
        Tape t(Precision::Full64);
        const BoundParams bound = bind(t, wide);
        return t.value(cross_entropy(t, logits(t, bound, t.constant(x)), b.labels, Reduction::Mean)).item();
      },
      b.inputs, 1e-3);
  EXPECT_LT(max_relative_error(g, fd), 1e-4);
}

TEST(Attacks, SumReductionBatchesMatchIndividualRuns) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 128);
  for (AttackKind kind : {AttackKind::Fgm, AttackKind::Pgd})
    for (Norm n : {Norm::L2, Norm::LInf}) {
      auto c = AttackConfig::defaults(kind, n);
      c.reduction = Reduction::Sum;
      c.noise_seed = 99;
      const AttackResult ref = attack_individually(v.params, b, c);
      for (std::size_t k : {2u, 16u, 128u}) {
        std::vector<AttackResult> parts;
        for (const auto& part : batches(EvalSet{b, Provenance::Synthetic, 10}, k))
          parts.push_back(run_attack(v.params, part, c));
        expect_rows_close(merge(parts).adversarial, ref.adversarial, 1e-5);
      }
    }
}

TEST(Attacks, MeanAndSumFgmAgreeAtFull32) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 128);
  for (Norm n : {Norm::L2, Norm::LInf}) {
    auto mean = AttackConfig::defaults(AttackKind::Fgm, n);
    auto sum = mean;
    sum.reduction = Reduction::Sum;
    expect_rows_close(fgm(v.params, b, mean).adversarial, fgm(v.params, b, sum).adversarial, 1e-5);
  }
}

TEST(Attacks, BudgetAndDomainHold) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 64);
  for (AttackKind kind : {AttackKind::Fgm, AttackKind::Pgd})
    for (Norm n : {Norm::L2, Norm::LInf})
      for (Precision p : {Precision::Full32, Precision::Emulated16})
        for (Reduction red : {Reduction::Mean, Reduction::Sum}) {
          auto c = AttackConfig::defaults(kind, n);
          c.precision = p;
          c.reduction = red;
          const AttackResult r = run_attack(v.params, b, c);
          ASSERT_EQ(r.size(), b.size());
          for (std::size_t i = 0; i < r.size(); ++i) {
            EXPECT_LE(r.perturbation_norms[i], c.epsilon + kBudgetTolerance);
            for (double x : r.adversarial.row(i)) {
              EXPECT_GE(x, 0.0);
              EXPECT_LE(x, 1.0);
            }
          }
        }
}

TEST(Attacks, Emulated16MeanLosesStrengthAtLargeBatch) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 128);
  auto c = AttackConfig::defaults(AttackKind::Pgd, Norm::L2);
  c.precision = Precision::Emulated16;
  c.noise_seed = 3;
  const AttackResult batched = pgd(v.params, b, c);
  const AttackResult single = attack_individually(v.params, b, c);
  EXPECT_LT(batched.success_rate(), single.success_rate());
  EXPECT_GT(batched.grad_zero_fraction(), single.grad_zero_fraction());
}

TEST(Attacks, SingleSampleBatchEqualsIndividualRun) {
  const Victim& v = standard_victim();
  const LabeledBatch b = head(v.eval, 1);
  const auto c = AttackConfig::defaults(AttackKind::Fgm, Norm::L2);
  const AttackResult a = fgm(v.params, b, c), i = attack_individually(v.params, b, c);
  EXPECT_TRUE(bit_identical(a.adversarial, i.adversarial));
  EXPECT_EQ(a.fooled, i.fooled);
  EXPECT_THROW(fgm(v.params, b, AttackConfig::defaults(AttackKind::Pgd, Norm::L2)), ContractError);
  EXPECT_THROW(pgd(v.params, b, c), ContractError);
}

}  // namespace
