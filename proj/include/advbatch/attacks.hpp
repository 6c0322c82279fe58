#ifndef ADVBATCH_ATTACKS_HPP
#define ADVBATCH_ATTACKS_HPP

// Untargeted FGM and PGD in the L2 and Linf norms.
//
// The loss reduction (mean / sum over the batch) and the precision policy of the
// gradient computation are explicit configuration. The adversarial state itself
// is always kept at Full32 and success is judged by Full32 inference, so only
// gradient generation is affected by the precision policy.

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <string>
#include <vector>

#include "advbatch/error.hpp"
#include "advbatch/loss.hpp"
#include "advbatch/model.hpp"
#include "advbatch/random.hpp"
#include "advbatch/tape.hpp"
#include "advbatch/tensor.hpp"

namespace advbatch {

enum class AttackKind { Fgm, Pgd };
enum class Norm { L2, LInf };

inline const char* to_string(AttackKind k) { return k == AttackKind::Fgm ? "fgm" : "pgd"; }
inline const char* to_string(Norm n) { return n == Norm::L2 ? "l2" : "linf"; }

/// Scope of the L2 gradient normalisation. PerSample divides each row by its own
/// norm (the default); BatchGlobal divides the whole [N, D] gradient by one norm,
/// under which mean and sum reduction give identical steps.
enum class L2Scope { PerSample, BatchGlobal };

inline constexpr double kDefaultL2Epsilon = 128.0 / 256.0;
inline constexpr double kDefaultLInfEpsilon = 8.0 / 256.0;
inline constexpr int kDefaultPgdSteps = 32;
inline constexpr L2Scope kDefaultL2Scope = L2Scope::PerSample;
/// Slack allowed on the perturbation budget for Full32 storage rounding.
inline constexpr double kBudgetTolerance = 1e-6;

struct AttackConfig {
  AttackKind kind = AttackKind::Fgm;
  Norm norm = Norm::LInf;
  double epsilon = kDefaultLInfEpsilon;
  int steps = 1;
  double step_size = kDefaultLInfEpsilon;
  Reduction reduction = Reduction::Mean;
  Precision precision = Precision::Full32;
  std::uint64_t noise_seed = 0;
  bool random_init = true;  // PGD only; false starts from the clean input
  L2Scope l2_scope = kDefaultL2Scope;

  /// Standard parameters: eps 128/256 (L2) or 8/256 (Linf); FGM takes a single
  /// step of eps, PGD takes 32 steps of 2*eps/32.
  static AttackConfig defaults(AttackKind kind, Norm norm) {
    AttackConfig c;
    c.kind = kind;
    c.norm = norm;
    c.epsilon = norm == Norm::L2 ? kDefaultL2Epsilon : kDefaultLInfEpsilon;
    c.steps = kind == AttackKind::Fgm ? 1 : kDefaultPgdSteps;
    c.step_size = kind == AttackKind::Fgm ? c.epsilon : 2.0 * c.epsilon / kDefaultPgdSteps;
    return c;
  }

  void validate() const {
    if (!(epsilon >= 0.0) || !std::isfinite(epsilon)) throw ContractError("attack: epsilon must be >= 0");
    if (steps < 1) throw ContractError("attack: steps must be >= 1");
    if (!(step_size >= 0.0) || !std::isfinite(step_size)) throw ContractError("attack: step size must be >= 0");
    if (precision == Precision::Full64) throw ContractError("attack: precision must be fp32 or fp16");
    if (kind == AttackKind::Fgm && (steps != 1 || step_size != epsilon))
      throw ContractError("attack: FGM takes exactly one step of size epsilon");
  }
};

struct AttackResult {
  Tensor adversarial;                       // [N, D], Full32
  std::vector<double> perturbation_norms;  // in the configured norm
  std::vector<int> clean_pred;
  std::vector<int> adv_pred;
  std::vector<bool> fooled;  // adv_pred != label
  std::size_t grad_components = 0;
  std::size_t grad_zeros = 0;

  std::size_t size() const noexcept { return fooled.size(); }
  std::size_t n_fooled() const { return static_cast<std::size_t>(std::count(fooled.begin(), fooled.end(), true)); }
  double success_rate() const { return fooled.empty() ? 0.0 : static_cast<double>(n_fooled()) / fooled.size(); }
  /// Fraction of exactly-zero input-gradient components over every step taken.
  double grad_zero_fraction() const {
    return grad_components == 0 ? 0.0 : static_cast<double>(grad_zeros) / static_cast<double>(grad_components);
  }
};

/// d CE(f(x), y) / dx on a fresh tape under `precision`.
inline Tensor input_gradient(const ModelParams& params, const LabeledBatch& batch, Reduction reduction,
                             Precision precision) {
  batch.validate(params.num_classes());
  if (batch.dim() != params.input_dim())
    throw ConformanceError("input_gradient: batch has " + std::to_string(batch.dim()) + " features, model expects " +
                           std::to_string(params.input_dim()));
  Tape tape(precision);
  const BoundParams bound = bind(tape, params);
  const NodeId x = tape.input(batch.inputs);
  const NodeId loss = cross_entropy(tape, logits(tape, bound, x), batch.labels, reduction);
  const NodeId wrt[] = {x};
  return std::move(tape.gradient(loss, wrt).front());
}

inline double row_norm(std::span<const double> v, Norm norm) {
  double acc = 0.0;
  if (norm == Norm::L2) {
    for (double x : v) acc += x * x;
    return std::sqrt(acc);
  }
  for (double x : v) acc = std::max(acc, std::fabs(x));
  return acc;
}

/// One signed (Linf) or normalised (L2) gradient step, clamped to [0,1].
/// sign(0) = 0 and all-zero L2 rows are left in place.
inline Tensor fgm_step(const Tensor& x, const Tensor& g, const AttackConfig& config) {
  if (!(x.shape() == g.shape()) || x.shape().rank() != 2)
    throw ConformanceError("fgm_step: shapes " + x.shape().str() + " and " + g.shape().str());
  const std::size_t rows = x.shape()[0], cols = x.shape()[1];
  std::vector<double> out(x.values().begin(), x.values().end());
  if (config.norm == Norm::LInf) {
    for (std::size_t i = 0; i < out.size(); ++i) {
      const double s = g[i] > 0.0 ? 1.0 : (g[i] < 0.0 ? -1.0 : 0.0);
      out[i] += config.step_size * s;
    }
  } else {
    const double global = config.l2_scope == L2Scope::BatchGlobal ? row_norm(g.values(), Norm::L2) : 0.0;
    for (std::size_t r = 0; r < rows; ++r) {
      const double n = config.l2_scope == L2Scope::BatchGlobal ? global : row_norm(g.row(r), Norm::L2);
      if (n == 0.0 || !std::isfinite(n)) continue;
      for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] += config.step_size * g.at(r, c) / n;
    }
  }
  for (double& v : out) v = std::clamp(v, 0.0, 1.0);
  return Tensor(x.shape(), std::move(out), Precision::Full32);
}

/// Projects onto the eps-ball around `x_orig` (per sample), then onto [0,1].
inline Tensor project(const Tensor& x_adv, const Tensor& x_orig, Norm norm, double epsilon) {
  if (!(x_adv.shape() == x_orig.shape()) || x_adv.shape().rank() != 2)
    throw ConformanceError("project: shapes " + x_adv.shape().str() + " and " + x_orig.shape().str());
  const std::size_t rows = x_adv.shape()[0], cols = x_adv.shape()[1];
  std::vector<double> out(x_adv.numel());
  std::vector<double> delta(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) delta[c] = x_adv.at(r, c) - x_orig.at(r, c);
    if (norm == Norm::LInf) {
      for (double& d : delta) d = std::clamp(d, -epsilon, epsilon);
    } else {
      const double n = row_norm(delta, Norm::L2);
      if (n > epsilon)
        for (double& d : delta) d *= epsilon / n;
    }
    for (std::size_t c = 0; c < cols; ++c) out[r * cols + c] = std::clamp(x_orig.at(r, c) + delta[c], 0.0, 1.0);
  }
  return Tensor(x_adv.shape(), std::move(out), Precision::Full32);
}

/// Uniform draw from the eps-ball for the sample with set-wide index `index`.
/// Depends only on (seed, index, norm, eps, dim), never on the batch layout.
inline std::vector<double> init_noise(std::uint64_t seed, std::size_t index, Norm norm, double epsilon,
                                      std::size_t dim) {
  Rng rng(seed ^ static_cast<std::uint64_t>(index));
  std::vector<double> u(dim);
  if (norm == Norm::LInf) {
    for (double& v : u) v = rng.uniform(-epsilon, epsilon);
    return u;
  }
  double n = 0.0;
  for (double& v : u) {
    v = rng.gaussian();
    n += v * v;
  }
  n = std::sqrt(n);
  const double radius = epsilon * std::pow(rng.uniform01(), 1.0 / static_cast<double>(dim));
  for (double& v : u) v = n > 0.0 ? v * radius / n : 0.0;
  return u;
}

namespace detail {

inline std::size_t count_zeros(const Tensor& g) {
  return static_cast<std::size_t>(std::count(g.values().begin(), g.values().end(), 0.0));
}

inline AttackResult finish(const ModelParams& full_params, const LabeledBatch& batch, Tensor adversarial,
                           Norm norm, std::size_t components, std::size_t zeros) {
  AttackResult res;
  res.clean_pred = predict(full_params, batch.inputs);
  res.adv_pred = predict(full_params, adversarial);
  const std::size_t rows = batch.size(), cols = batch.dim();
  std::vector<double> delta(cols);
  for (std::size_t r = 0; r < rows; ++r) {
    for (std::size_t c = 0; c < cols; ++c) delta[c] = adversarial.at(r, c) - batch.inputs.at(r, c);
    res.perturbation_norms.push_back(row_norm(delta, norm));
    res.fooled.push_back(res.adv_pred[r] != batch.labels[r]);
  }
  res.adversarial = std::move(adversarial);
  res.grad_components = components;
  res.grad_zeros = zeros;
  return res;
}

/// Shared body of FGM and PGD: `steps` rounds of gradient, step, projection from `start`.
inline AttackResult iterate(const ModelParams& params, const LabeledBatch& batch, const AttackConfig& config,
                            Tensor start) {
  const ModelParams gen_params = params.to(config.precision);
  Tensor x = std::move(start);
  std::size_t components = 0, zeros = 0;
  for (int t = 0; t < config.steps; ++t) {
    const Tensor g = input_gradient(gen_params, {x, batch.labels, batch.offset}, config.reduction, config.precision);
    components += g.numel();
    zeros += count_zeros(g);
    x = project(fgm_step(x, g, config), batch.inputs, config.norm, config.epsilon);
  }
  return finish(params, batch, std::move(x), config.norm, components, zeros);
}

}  // namespace detail

inline AttackResult fgm(const ModelParams& params, const LabeledBatch& batch, const AttackConfig& config) {
  config.validate();
  if (config.kind != AttackKind::Fgm) throw ContractError("fgm: config is not an FGM config");
  batch.validate(params.num_classes());
  return detail::iterate(params, batch, config, batch.inputs);
}

/// Random start inside the eps-ball (unless disabled), then `steps` FGM steps
/// with projection after each one.
inline AttackResult pgd(const ModelParams& params, const LabeledBatch& batch, const AttackConfig& config) {
  config.validate();
  if (config.kind != AttackKind::Pgd) throw ContractError("pgd: config is not a PGD config");
  batch.validate(params.num_classes());
  Tensor start = batch.inputs;
  if (config.random_init) {
    const std::size_t rows = batch.size(), cols = batch.dim();
    std::vector<double> noisy(batch.inputs.values().begin(), batch.inputs.values().end());
    for (std::size_t r = 0; r < rows; ++r) {
      const auto u = init_noise(config.noise_seed, batch.offset + r, config.norm, config.epsilon, cols);
      for (std::size_t c = 0; c < cols; ++c) noisy[r * cols + c] += u[c];
    }
    start = project(Tensor(batch.inputs.shape(), std::move(noisy)), batch.inputs, config.norm, config.epsilon);
  }
  return detail::iterate(params, batch, config, std::move(start));
}

inline AttackResult run_attack(const ModelParams& params, const LabeledBatch& batch, const AttackConfig& config) {
  return config.kind == AttackKind::Fgm ? fgm(params, batch, config) : pgd(params, batch, config);
}

/// Concatenation of per-sample results, in batch order.
inline AttackResult merge(std::span<const AttackResult> parts) {
  AttackResult out;
  std::vector<Tensor> advs;
  for (const auto& p : parts) {
    advs.push_back(p.adversarial);
    out.perturbation_norms.insert(out.perturbation_norms.end(), p.perturbation_norms.begin(),
                                  p.perturbation_norms.end());
    out.clean_pred.insert(out.clean_pred.end(), p.clean_pred.begin(), p.clean_pred.end());
    out.adv_pred.insert(out.adv_pred.end(), p.adv_pred.begin(), p.adv_pred.end());
    out.fooled.insert(out.fooled.end(), p.fooled.begin(), p.fooled.end());
    out.grad_components += p.grad_components;
    out.grad_zeros += p.grad_zeros;
  }
  out.adversarial = concat_rows(advs);
  return out;
}

/// Runs the attack on one sample at a time; the batch-size-1 reference.
inline AttackResult attack_individually(const ModelParams& params, const LabeledBatch& batch,
                                        const AttackConfig& config) {
  batch.validate(params.num_classes());
  std::vector<AttackResult> parts;
  parts.reserve(batch.size());
  for (std::size_t r = 0; r < batch.size(); ++r)
    parts.push_back(run_attack(params, {batch.inputs.rows(r, r + 1), {batch.labels[r]}, batch.offset + r}, config));
  return merge(parts);
}

}  // namespace advbatch

#endif  // ADVBATCH_ATTACKS_HPP
