#ifndef ADVBATCH_HARNESS_HPP
#define ADVBATCH_HARNESS_HPP

// Batch-size sweep over experiment families.
//
// A cell is (family, attack template, batch size). Every cell partitions the same
// evaluation set into contiguous batches and attacks each batch with the family's
// reduction and precision. Each repeat emits one SweepRecord; FGM has no
// randomness, so it is computed once per cell and its record is replicated.
//
// PGD noise seeds hash only (attack kind, norm, repeat) into base_seed, so every
// family and batch size of a repeat sees exactly the same per-sample start noise.

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdint>
#include <exception>
#include <map>
#include <mutex>
#include <optional>
#include <string>
#include <thread>
#include <tuple>
#include <vector>

#include "advbatch/attacks.hpp"
#include "advbatch/dataset.hpp"
#include "advbatch/error.hpp"
#include "advbatch/model.hpp"
#include "advbatch/random.hpp"

namespace advbatch {

enum class Family { Baseline, BatchCorrected, MixedPrecision, BatchCorrectedMixedPrecision };

inline constexpr Family kAllFamilies[] = {Family::Baseline, Family::BatchCorrected, Family::MixedPrecision,
                                          Family::BatchCorrectedMixedPrecision};

inline const char* to_string(Family f) {
  switch (f) {
    case Family::Baseline: return "baseline";
    case Family::BatchCorrected: return "batch_corrected";
    case Family::MixedPrecision: return "mixed_precision";
    case Family::BatchCorrectedMixedPrecision: return "batch_corrected_mixed_precision";
  }
  return "?";
}

inline Reduction reduction_of(Family f) {
  return f == Family::Baseline || f == Family::MixedPrecision ? Reduction::Mean : Reduction::Sum;
}
inline Precision precision_of(Family f) {
  return f == Family::Baseline || f == Family::BatchCorrected ? Precision::Full32 : Precision::Emulated16;
}

struct ExperimentGrid {
  std::vector<Family> families{std::begin(kAllFamilies), std::end(kAllFamilies)};
  std::vector<std::size_t> batch_sizes{1, 2, 4, 8, 16, 32, 64, 128};
  std::vector<AttackConfig> attacks{
      AttackConfig::defaults(AttackKind::Fgm, Norm::L2), AttackConfig::defaults(AttackKind::Fgm, Norm::LInf),
      AttackConfig::defaults(AttackKind::Pgd, Norm::L2), AttackConfig::defaults(AttackKind::Pgd, Norm::LInf)};
  std::size_t repeats = 5;
  std::uint64_t base_seed = 0;
  std::size_t workers = 1;

  std::size_t expected_records() const { return families.size() * attacks.size() * batch_sizes.size() * repeats; }
};

struct SweepRecord {
  Family family = Family::Baseline;
  AttackKind attack = AttackKind::Fgm;
  Norm norm = Norm::L2;
  std::size_t batch_size = 1;
  std::size_t repeat = 0;
  std::size_t n_images = 0;
  std::size_t n_fooled = 0;
  double success_rate = 0.0;
  double mean_grad_zero_fraction = 0.0;
  double wall_time_ms = 0.0;
  // In-memory only: samples outside the eps-ball (+tolerance) or outside [0,1].
  std::size_t budget_violations = 0;

  auto key() const { return std::tuple(family, attack, norm, batch_size, repeat); }
};

/// Seed for PGD repeat `repeat` of an attack template.
inline std::uint64_t cell_noise_seed(std::uint64_t base_seed, AttackKind kind, Norm norm, std::size_t repeat) {
  std::uint64_t h = hash_combine(0x616476626174ULL, static_cast<std::uint64_t>(kind));
  h = hash_combine(h, static_cast<std::uint64_t>(norm));
  h = hash_combine(h, repeat);
  return base_seed ^ h;
}

inline std::size_t count_budget_violations(const AttackResult& r, const LabeledBatch& batch, double epsilon) {
  std::size_t bad = 0;
  for (std::size_t i = 0; i < r.size(); ++i) {
    bool ok = r.perturbation_norms[i] <= epsilon + kBudgetTolerance;
    for (double v : r.adversarial.row(i)) ok = ok && v >= 0.0 && v <= 1.0;
    if (!ok) ++bad;
  }
  (void)batch;
  return bad;
}

/// Attacks every batch of `set` and summarises the cell.
inline SweepRecord run_cell(const ModelParams& params, const EvalSet& set, Family family, const AttackConfig& base,
                            std::size_t batch_size, std::size_t repeat, std::uint64_t base_seed) {
  AttackConfig cfg = base;
  cfg.reduction = reduction_of(family);
  cfg.precision = precision_of(family);
  cfg.noise_seed = cell_noise_seed(base_seed, cfg.kind, cfg.norm, repeat);

  SweepRecord rec{family, cfg.kind, cfg.norm, batch_size, repeat};
  std::size_t zeros = 0, components = 0;
  const auto start = std::chrono::steady_clock::now();
  for (const LabeledBatch& b : batches(set, batch_size)) {
    const AttackResult r = run_attack(params, b, cfg);
    rec.n_images += r.size();
    rec.n_fooled += r.n_fooled();
    zeros += r.grad_zeros;
    components += r.grad_components;
    rec.budget_violations += count_budget_violations(r, b, cfg.epsilon);
  }
  rec.wall_time_ms = std::chrono::duration<double, std::milli>(std::chrono::steady_clock::now() - start).count();
  rec.success_rate = static_cast<double>(rec.n_fooled) / static_cast<double>(rec.n_images);
  rec.mean_grad_zero_fraction = components == 0 ? 0.0 : static_cast<double>(zeros) / static_cast<double>(components);
  return rec;
}

inline void sort_records(std::vector<SweepRecord>& records) {
  std::sort(records.begin(), records.end(), [](const SweepRecord& a, const SweepRecord& b) { return a.key() < b.key(); });
}

/// Runs every (family x attack x batch size x repeat) record, sorted by that key.
/// A failing cell aborts the sweep with an Error naming its coordinates.
inline std::vector<SweepRecord> run_sweep(const ExperimentGrid& grid, const ModelParams& params, const EvalSet& set) {
  if (set.size() == 0) throw ContractError("run_sweep: empty evaluation set");
  if (set.dim() != params.input_dim() || set.n_classes > params.num_classes())
    throw ConformanceError("run_sweep: evaluation set does not match the victim (" + std::to_string(set.dim()) +
                           " features / " + std::to_string(set.n_classes) + " classes vs " +
                           std::to_string(params.input_dim()) + " / " + std::to_string(params.num_classes()) + ")");
  if (grid.repeats < 1) throw ContractError("run_sweep: repeats must be >= 1");
  for (std::size_t b : grid.batch_sizes)
    if (b < 1) throw ContractError("run_sweep: batch sizes must be >= 1");
  for (const auto& a : grid.attacks) a.validate();

  struct Task {
    Family family;
    std::size_t attack;
    std::size_t batch_size;
    std::size_t repeat;
    bool replicate;  // deterministic attack: emit the record for every repeat
  };
  // Families of one (attack, batch size, repeat) run back to back, in alternating order.
  std::vector<Task> tasks;
  std::size_t group = 0;
  for (std::size_t a = 0; a < grid.attacks.size(); ++a)
    for (std::size_t b : grid.batch_sizes) {
      const bool deterministic = grid.attacks[a].kind == AttackKind::Fgm || !grid.attacks[a].random_init;
      for (std::size_t r = 0; r < (deterministic ? 1 : grid.repeats); ++r, ++group)
        for (std::size_t k = 0; k < grid.families.size(); ++k) {
          const std::size_t f = group % 2 == 0 ? k : grid.families.size() - 1 - k;
          tasks.push_back({grid.families[f], a, b, r, deterministic});
        }
    }

  std::vector<SweepRecord> records;
  std::mutex mu;
  std::atomic<std::size_t> next{0};
  std::atomic<bool> failed{false};
  std::exception_ptr error;

  auto worker = [&] {
    for (;;) {
      const std::size_t i = next.fetch_add(1);
      if (i >= tasks.size() || failed.load()) return;
      const Task& t = tasks[i];
      const AttackConfig& a = grid.attacks[t.attack];
      try {
        const SweepRecord rec = run_cell(params, set, t.family, a, t.batch_size, t.repeat, grid.base_seed);
        std::lock_guard lock(mu);
        if (t.replicate) {
          for (std::size_t r = 0; r < grid.repeats; ++r) {
            records.push_back(rec);
            records.back().repeat = r;
          }
        } else {
          records.push_back(rec);
        }
      } catch (const std::exception& e) {
        std::lock_guard lock(mu);
        if (!failed.exchange(true))
          error = std::make_exception_ptr(Error(std::string("sweep cell (") + to_string(t.family) + ", " +
                                                to_string(a.kind) + ", " + to_string(a.norm) + ", batch " +
                                                std::to_string(t.batch_size) + ", repeat " + std::to_string(t.repeat) +
                                                ") failed: " + e.what()));
      }
    }
  };

  const std::size_t n_workers = std::max<std::size_t>(1, std::min(grid.workers, tasks.size()));
  if (n_workers == 1) {
    worker();
  } else {
    std::vector<std::jthread> pool;
    for (std::size_t w = 0; w < n_workers; ++w) pool.emplace_back(worker);
  }
  if (error) std::rethrow_exception(error);
  sort_records(records);
  return records;
}

struct AggregateRow {
  Family family = Family::Baseline;
  AttackKind attack = AttackKind::Fgm;
  Norm norm = Norm::L2;
  std::size_t batch_size = 1;
  std::size_t repeats = 0;
  double mean_success_rate = 0.0;
  double sd_success_rate = 0.0;  // sample standard deviation, 0 for one repeat
  double mean_grad_zero_fraction = 0.0;
  double mean_wall_time_ms = 0.0;
};

/// One row per (family, attack, norm, batch size), averaging over repeats.
/// Every cell must carry repeats 0..R-1 exactly once, with the same R everywhere.
inline std::vector<AggregateRow> aggregate(const std::vector<SweepRecord>& records) {
  using Key = std::tuple<Family, AttackKind, Norm, std::size_t>;
  std::map<Key, std::vector<const SweepRecord*>> cells;
  for (const auto& r : records) cells[Key(r.family, r.attack, r.norm, r.batch_size)].push_back(&r);

  std::size_t expected = 0;
  for (const auto& [key, recs] : cells) expected = std::max(expected, recs.size());

  std::vector<AggregateRow> rows;
  for (const auto& [key, recs] : cells) {
    std::vector<bool> seen(expected, false);
    for (const SweepRecord* r : recs) {
      if (r->repeat >= expected || seen[r->repeat])
        throw IntegrityError(std::string("aggregate: cell (") + to_string(r->family) + ", " + to_string(r->attack) +
                             ", " + to_string(r->norm) + ", batch " + std::to_string(r->batch_size) +
                             ") has a duplicate or out-of-range repeat " + std::to_string(r->repeat));
      seen[r->repeat] = true;
    }
    if (recs.size() != expected) {
      const SweepRecord& r = *recs.front();
      throw IntegrityError(std::string("aggregate: cell (") + to_string(r.family) + ", " + to_string(r.attack) + ", " +
                           to_string(r.norm) + ", batch " + std::to_string(r.batch_size) + ") has " +
                           std::to_string(recs.size()) + " of " + std::to_string(expected) + " repeats");
    }
    AggregateRow row{std::get<0>(key), std::get<1>(key), std::get<2>(key), std::get<3>(key), recs.size()};
    for (const SweepRecord* r : recs) {
      row.mean_success_rate += r->success_rate;
      row.mean_grad_zero_fraction += r->mean_grad_zero_fraction;
      row.mean_wall_time_ms += r->wall_time_ms;
    }
    const double n = static_cast<double>(recs.size());
    row.mean_success_rate /= n;
    row.mean_grad_zero_fraction /= n;
    row.mean_wall_time_ms /= n;
    if (recs.size() > 1) {
      double ss = 0.0;
      for (const SweepRecord* r : recs) ss += (r->success_rate - row.mean_success_rate) * (r->success_rate - row.mean_success_rate);
      row.sd_success_rate = std::sqrt(ss / (n - 1.0));
    }
    rows.push_back(row);
  }
  return rows;
}

}  // namespace advbatch

#endif  // ADVBATCH_HARNESS_HPP
