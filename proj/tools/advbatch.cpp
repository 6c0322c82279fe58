// advbatch: train a victim, run attacks, run the batch-size sweep, write a demo.
//
// Exit codes: 0 success, 1 runtime failure, 2 usage error.

#include <openssl/evp.h>

#include <algorithm>
#include <cmath>
#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>
#include <map>
#include <sstream>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "advbatch/advbatch.hpp"
#include "json.hpp"

namespace fs = std::filesystem;
using nlohmann::json;

namespace advbatch::cli {

inline constexpr const char* kToolVersion = "1.0.0";

struct UsageError : Error {
  using Error::Error;
};

/// Flat JSON objects whose keys are long flag names, e.g. {"epochs": 10, "layers": [64, 32, 10]}.
/// Keys apply to whichever subcommand was selected on the command line.
class JsonConfig : public CLI::Config {
 public:
  explicit JsonConfig(const CLI::App* root) : root_(root) {}

  std::string to_config(const CLI::App*, bool, bool, std::string) const override { return "{}"; }

  std::vector<CLI::ConfigItem> from_config(std::istream& input) const override {
    json j;
    try {
      input >> j;
    } catch (const json::exception& e) {
      throw CLI::ConversionError(std::string("config file is not valid JSON: ") + e.what());
    }
    if (!j.is_object()) throw CLI::ConversionError("config file must hold a JSON object");
    std::vector<std::string> parents;
    for (const CLI::App* sub : root_->get_subcommands()) parents.push_back(sub->get_name());
    std::vector<CLI::ConfigItem> items;
    for (auto it = j.begin(); it != j.end(); ++it) {
      CLI::ConfigItem item;
      item.parents = parents;
      item.name = it.key();
      const auto scalar = [](const json& v) { return v.is_string() ? v.get<std::string>() : v.dump(); };
      if (it->is_array()) {
        for (const auto& v : *it) item.inputs.push_back(scalar(v));
      } else if (it->is_object() || it->is_null()) {
        throw CLI::ConversionError("config key '" + it.key() + "' must be a scalar or an array");
      } else {
        item.inputs.push_back(scalar(*it));
      }
      items.push_back(std::move(item));
    }
    return items;
  }

 private:
  const CLI::App* root_;
};

std::string sha256_hex(std::span<const std::uint8_t> bytes) {
  unsigned char md[EVP_MAX_MD_SIZE];
  unsigned int len = 0;
  if (EVP_Digest(bytes.data(), bytes.size(), md, &len, EVP_sha256(), nullptr) != 1)
    throw Error("sha256 digest failed");
  std::string hex;
  char buf[3];
  for (unsigned int i = 0; i < len; ++i) {
    std::snprintf(buf, sizeof buf, "%02x", md[i]);
    hex += buf;
  }
  return hex;
}

std::string sha256_hex(const std::string& text) {
  return sha256_hex(std::span(reinterpret_cast<const std::uint8_t*>(text.data()), text.size()));
}

std::string file_digest(const fs::path& p) { return sha256_hex(read_file_bytes(p)); }

// ---------------------------------------------------------------------------
// Shared options

struct DataOptions {
  SyntheticSpec spec = standard::data_spec();
  std::size_t eval_count = standard::kEvalCount;
  std::string idx_images;
  std::string idx_labels;

  void add_to(CLI::App& app) {
    app.add_option("--data-seed", spec.seed, "Seed of the synthetic task")->capture_default_str();
    app.add_option("--classes", spec.n_classes, "Synthetic class count")->capture_default_str();
    app.add_option("--dim", spec.dim, "Synthetic feature count")->capture_default_str();
    app.add_option("--per-class", spec.n_per_class, "Synthetic samples per class")->capture_default_str();
    app.add_option("--spread", spec.spread, "Synthetic cluster standard deviation")->capture_default_str();
    app.add_option("--mean-radius", spec.mean_radius, "Distance of class means from the cube centre")
        ->capture_default_str();
    app.add_option("--eval-count", eval_count, "Samples held out for evaluation")->capture_default_str();
    app.add_option("--idx-images", idx_images, "IDX image file (replaces the synthetic set)");
    app.add_option("--idx-labels", idx_labels, "IDX label file (replaces the synthetic set)");
  }

  bool uses_idx() const { return !idx_images.empty() || !idx_labels.empty(); }

  void check() const {
    if (idx_images.empty() != idx_labels.empty())
      throw UsageError("--idx-images and --idx-labels must be given together");
  }

  EvalSet eval_set() const {
    if (uses_idx()) return load_idx(idx_images, idx_labels);
    return standard::make_task(spec, eval_count).eval;
  }
  EvalSet train_set() const {
    if (uses_idx()) return load_idx(idx_images, idx_labels);
    return standard::make_task(spec, eval_count).train;
  }

  json to_json() const {
    if (uses_idx()) return {{"idx_images", idx_images}, {"idx_labels", idx_labels}};
    return {{"classes", spec.n_classes}, {"dim", spec.dim},       {"per_class", spec.n_per_class},
            {"spread", spec.spread},     {"seed", spec.seed},     {"mean_radius", spec.mean_radius},
            {"eval_count", eval_count}};
  }
};

struct AttackOptions {
  std::string attack = "fgm";
  std::string norm = "linf";
  std::string reduction = "mean";
  std::string precision = "fp32";
  std::size_t batch_size = 1;
  double epsilon = 0.0;
  int steps = 0;
  double step_size = 0.0;
  std::uint64_t seed = 0;
  bool no_random_init = false;
  CLI::Option* epsilon_opt = nullptr;
  CLI::Option* steps_opt = nullptr;
  CLI::Option* step_size_opt = nullptr;

  void add_to(CLI::App& app) {
    app.add_option("--attack", attack, "fgm or pgd")->check(CLI::IsMember({"fgm", "pgd"}))->capture_default_str();
    app.add_option("--norm", norm, "l2 or linf")->check(CLI::IsMember({"l2", "linf"}))->capture_default_str();
    app.add_option("--reduction", reduction, "mean or sum")->check(CLI::IsMember({"mean", "sum"}))->capture_default_str();
    app.add_option("--precision", precision, "fp32 or fp16")->check(CLI::IsMember({"fp32", "fp16"}))->capture_default_str();
    app.add_option("--batch-size", batch_size, "Attack mini-batch size")->check(CLI::PositiveNumber)->capture_default_str();
    epsilon_opt = app.add_option("--epsilon", epsilon, "Budget (default 0.5 for l2, 0.03125 for linf)")
                      ->check(CLI::NonNegativeNumber);
    steps_opt = app.add_option("--steps", steps, "Iterations (default 1 for fgm, 32 for pgd)")->check(CLI::PositiveNumber);
    step_size_opt = app.add_option("--step-size", step_size, "Step size (default eps for fgm, 2*eps/32 for pgd)")
                        ->check(CLI::NonNegativeNumber);
    app.add_option("--seed", seed, "PGD noise seed")->capture_default_str();
    app.add_flag("--no-random-init", no_random_init, "Start PGD from the clean input (testing aid)");
  }

  AttackConfig config() const {
    const AttackKind kind = parse_attack(attack);
    AttackConfig c = AttackConfig::defaults(kind, parse_norm(norm));
    if (epsilon_opt->count()) {
      c.epsilon = epsilon;
      c.step_size = kind == AttackKind::Fgm ? epsilon : 2.0 * epsilon / kDefaultPgdSteps;
    }
    if (steps_opt->count()) {
      if (kind == AttackKind::Fgm && steps != 1) throw UsageError("fgm takes exactly one step; drop --steps");
      c.steps = steps;
    }
    if (step_size_opt->count()) {
      if (kind == AttackKind::Fgm && step_size != c.epsilon)
        throw UsageError("fgm steps by exactly epsilon; drop --step-size");
      c.step_size = step_size;
    }
    c.reduction = reduction == "mean" ? Reduction::Mean : Reduction::Sum;
    c.precision = precision == "fp32" ? Precision::Full32 : Precision::Emulated16;
    c.noise_seed = seed;
    c.random_init = !no_random_init;
    return c;
  }

  json to_json(const AttackConfig& c) const {
    return {{"attack", attack},       {"norm", norm},       {"reduction", reduction}, {"precision", precision},
            {"batch_size", batch_size}, {"epsilon", c.epsilon}, {"steps", c.steps},     {"step_size", c.step_size},
            {"seed", seed},           {"random_init", c.random_init}};
  }
};

void check_compatible(const ModelParams& params, const EvalSet& set) {
  if (set.dim() != params.input_dim() || set.n_classes > params.num_classes())
    throw Error("evaluation set (" + std::to_string(set.dim()) + " features, " + std::to_string(set.n_classes) +
                " classes) does not fit the victim (" + std::to_string(params.input_dim()) + " inputs, " +
                std::to_string(params.num_classes()) + " outputs)");
}

std::string fmt(const char* f, double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, v);
  return buf;
}

// ---------------------------------------------------------------------------
// train

struct TrainCommand {
  std::uint64_t seed = standard::model_spec().seed;
  std::vector<std::size_t> layers = standard::model_spec().layer_dims;
  TrainConfig train = standard::train_config();
  std::string out = "victim.advw";
  DataOptions data;

  void add_to(CLI::App& app) {
    app.add_option("--seed", seed, "Weight initialisation and shuffling seed")->capture_default_str();
    app.add_option("--layers", layers, "Layer widths D,h1,...,C")->delimiter(',')->capture_default_str();
    app.add_option("--epochs", train.epochs, "Training epochs")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--lr", train.lr, "SGD learning rate")->check(CLI::NonNegativeNumber)->capture_default_str();
    app.add_option("--batch-size", train.batch_size, "Training mini-batch size")
        ->check(CLI::PositiveNumber)
        ->capture_default_str();
    app.add_option("--out", out, "Output weight file")->capture_default_str();
    data.add_to(app);
  }

  int run() const {
    data.check();
    const ModelSpec spec{layers, seed};
    const EvalSet set = data.train_set();
    const TrainResult res = train_sgd(spec, set.batch, train);
    std::ostringstream report;
    report << "layers:          ";
    for (std::size_t i = 0; i < layers.size(); ++i) report << (i ? "," : "") << layers[i];
    report << "\nseed:            " << seed << "\nepochs:          " << train.epochs
           << "\nlr:              " << train.lr << "\nbatch size:      " << train.batch_size
           << "\ntrain samples:   " << set.size() << "\ntrain accuracy:  " << fmt("%.6f", res.train.accuracy)
           << "\nmean confidence: " << fmt("%.6f", res.train.mean_confidence)
           << "\nstatus:          " << (res.reached_target ? "ok" : "FAILED (accuracy below target)") << "\n";
    std::cout << report.str();
    if (!res.reached_target) {
      std::cerr << "error: training failed: train accuracy " << fmt("%.4f", res.train.accuracy) << " < "
                << train.target_accuracy << "\n";
      return 1;
    }
    const fs::path path(out);
    if (path.has_parent_path()) fs::create_directories(path.parent_path());
    save_weights(res.params, path);
    write_text(path.string() + ".report.txt", report.str());
    std::cout << "wrote " << path.string() << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// attack

struct AttackCommand {
  std::string weights;
  std::string out_dir = ".";
  AttackOptions attack;
  DataOptions data;

  void add_to(CLI::App& app) {
    app.add_option("--weights", weights, "Victim weight file")->required();
    app.add_option("--out-dir", out_dir, "Directory for attack.csv")->capture_default_str();
    attack.add_to(app);
    data.add_to(app);
  }

  int run() const {
    data.check();
    const AttackConfig cfg = attack.config();
    const ModelParams params = load_weights(weights);
    const EvalSet set = data.eval_set();
    check_compatible(params, set);

    std::vector<AttackResult> parts;
    for (const LabeledBatch& b : batches(set, attack.batch_size)) parts.push_back(run_attack(params, b, cfg));
    const AttackResult res = merge(parts);

    std::string csv = "index,label,clean_pred,adv_pred,fooled,perturbation_norm\n";
    std::size_t clean_errors = 0;
    for (std::size_t i = 0; i < res.size(); ++i) {
      clean_errors += res.clean_pred[i] != set.batch.labels[i];
      csv += std::to_string(i) + ',' + std::to_string(set.batch.labels[i]) + ',' + std::to_string(res.clean_pred[i]) +
             ',' + std::to_string(res.adv_pred[i]) + ',' + (res.fooled[i] ? "1" : "0") + ',' +
             fmt("%.9f", res.perturbation_norms[i]) + '\n';
    }
    fs::create_directories(out_dir);
    write_text(fs::path(out_dir) / "attack.csv", csv);
    std::cout << to_string(cfg.kind) << '-' << to_string(cfg.norm) << " eps=" << fmt("%.6f", cfg.epsilon)
              << " steps=" << cfg.steps << " step_size=" << fmt("%.6f", cfg.step_size)
              << " reduction=" << to_string(cfg.reduction) << " precision=" << to_string(cfg.precision)
              << " batch_size=" << attack.batch_size << "\n"
              << "clean error rate: " << fmt("%.6f", static_cast<double>(clean_errors) / res.size()) << "\n"
              << "success rate: " << fmt("%.6f", res.success_rate()) << "\n"
              << "grad zero fraction: " << fmt("%.6f", res.grad_zero_fraction()) << "\n";
    return 0;
  }
};

// ---------------------------------------------------------------------------
// sweep

struct SweepCommand {
  std::string weights;
  std::string out_dir;
  std::vector<std::string> families;
  std::vector<std::string> attacks;
  std::vector<std::size_t> batch_sizes{1, 2, 4, 8, 16, 32, 64, 128};
  std::size_t repeats = 5;
  std::size_t workers = std::max(1u, std::thread::hardware_concurrency());
  std::uint64_t seed = 0;
  bool timing = false;
  DataOptions data;

  void add_to(CLI::App& app) {
    app.add_option("--weights", weights, "Victim weight file")->required();
    app.add_option("--out-dir", out_dir, "Output directory")->required();
    app.add_option("--families", families,
                   "Comma list of baseline,batch_corrected,mixed_precision,batch_corrected_mixed_precision (default all)")
        ->delimiter(',');
    app.add_option("--attacks", attacks, "Comma list of fgm-l2,fgm-linf,pgd-l2,pgd-linf (default all)")->delimiter(',');
    app.add_option("--batch-sizes", batch_sizes, "Comma list of batch sizes")->delimiter(',')->capture_default_str();
    app.add_option("--repeats", repeats, "Repeats per cell")->check(CLI::PositiveNumber)->capture_default_str();
    app.add_option("--workers", workers, "Parallel cells")->check(CLI::PositiveNumber);
    app.add_option("--seed", seed, "Base seed for PGD noise")->capture_default_str();
    app.add_flag("--timing", timing, "Write measured wall times (otherwise 0, keeping files reproducible)");
    data.add_to(app);
  }

  ExperimentGrid grid() const {
    ExperimentGrid g;
    if (!families.empty()) {
      g.families.clear();
      for (const auto& f : families) g.families.push_back(parse_family(f));
    }
    if (!attacks.empty()) {
      g.attacks.clear();
      for (const auto& a : attacks) {
        const auto dash = a.find('-');
        if (dash == std::string::npos) throw UsageError("attack '" + a + "' must look like pgd-l2");
        g.attacks.push_back(AttackConfig::defaults(parse_attack(a.substr(0, dash)), parse_norm(a.substr(dash + 1))));
      }
    }
    for (std::size_t b : batch_sizes)
      if (b == 0) throw UsageError("batch sizes must be positive");
    g.batch_sizes = batch_sizes;
    g.repeats = repeats;
    g.base_seed = seed;
    g.workers = workers;
    return g;
  }

  int run() const {
    data.check();
    ExperimentGrid g;
    try {
      g = grid();
    } catch (const ContractError& e) {
      throw UsageError(e.what());
    }
    const ModelParams params = load_weights(weights);
    const EvalSet set = data.eval_set();
    check_compatible(params, set);

    const auto records = run_sweep(g, params, set);
    const auto rows = aggregate(records);
    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_csv(records, dir / "records.csv", timing);
    write_aggregate_csv(rows, dir / "aggregate.csv", timing);
    const auto plots = render_plot(rows, dir);

    json config;
    config["families"] = json::array();
    for (Family f : g.families) config["families"].push_back(to_string(f));
    config["attacks"] = json::array();
    for (const auto& a : g.attacks)
      config["attacks"].push_back({{"kind", to_string(a.kind)},
                                   {"norm", to_string(a.norm)},
                                   {"epsilon", a.epsilon},
                                   {"steps", a.steps},
                                   {"step_size", a.step_size}});
    config["batch_sizes"] = g.batch_sizes;
    config["repeats"] = g.repeats;
    config["timing"] = timing;
    config["data"] = data.to_json();
    json manifest;
    manifest["tool"] = "advbatch";
    manifest["tool_version"] = kToolVersion;
    manifest["config"] = config;
    manifest["config_digest"] = sha256_hex(config.dump());
    manifest["seeds"] = {{"base_seed", g.base_seed}, {"data_seed", data.spec.seed}};
    manifest["weights"] = {{"path", weights}, {"sha256", file_digest(weights)}};
    json artifacts = json::object();
    artifacts["records.csv"] = file_digest(dir / "records.csv");
    artifacts["aggregate.csv"] = file_digest(dir / "aggregate.csv");
    for (const auto& p : plots) artifacts[p.filename().string()] = file_digest(p);
    manifest["artifacts"] = artifacts;
    write_text(dir / "manifest.json", manifest.dump(2) + "\n");

    std::cout << records.size() << " records, " << rows.size() << " aggregate rows, " << plots.size()
              << " plots in " << dir.string() << "\n";
    print_headline(rows, g);
    if (timing) print_overhead(records, g);
    return 0;
  }

  static void print_headline(const std::vector<AggregateRow>& rows, const ExperimentGrid& g) {
    const std::size_t lo = *std::min_element(g.batch_sizes.begin(), g.batch_sizes.end());
    const std::size_t hi = *std::max_element(g.batch_sizes.begin(), g.batch_sizes.end());
    std::cout << "success rate at batch " << lo << " -> batch " << hi << ":\n";
    for (Family f : g.families)
      for (const auto& a : g.attacks) {
        double at_lo = NAN, at_hi = NAN;
        for (const auto& r : rows)
          if (r.family == f && r.attack == a.kind && r.norm == a.norm) {
            if (r.batch_size == lo) at_lo = r.mean_success_rate;
            if (r.batch_size == hi) at_hi = r.mean_success_rate;
          }
        std::printf("  %-32s %s-%-5s %.4f -> %.4f (%+.2f points)\n", to_string(f), to_string(a.kind),
                    to_string(a.norm), at_lo, at_hi, 100.0 * (at_hi - at_lo));
      }
  }

  static void print_overhead(const std::vector<SweepRecord>& records, const ExperimentGrid& g) {
    std::map<std::pair<Family, std::size_t>, std::pair<double, std::size_t>> t;
    for (const auto& r : records) {
      auto& e = t[{r.family, r.batch_size}];
      e.first += r.wall_time_ms;
      e.second += 1;
    }
    std::cout << "mean cell wall time, batch_corrected / baseline:\n";
    for (std::size_t b : g.batch_sizes) {
      const auto base = t.find({Family::Baseline, b});
      const auto corr = t.find({Family::BatchCorrected, b});
      if (base == t.end() || corr == t.end()) continue;
      const double mb = base->second.first / base->second.second;
      const double mc = corr->second.first / corr->second.second;
      std::printf("  batch %-4zu %.1f ms / %.1f ms = %.3f\n", b, mc, mb, mc / mb);
    }
  }
};

// ---------------------------------------------------------------------------
// demo

std::vector<std::uint8_t> pgm(std::size_t w, std::size_t h, const std::vector<double>& pixels) {
  const std::string header = "P5\n" + std::to_string(w) + " " + std::to_string(h) + "\n255\n";
  std::vector<std::uint8_t> out(header.begin(), header.end());
  for (double v : pixels) out.push_back(static_cast<std::uint8_t>(std::lround(std::clamp(v, 0.0, 1.0) * 255.0)));
  return out;
}

struct DemoCommand {
  std::string weights;
  std::string out_dir = ".";
  std::size_t index = 0;
  AttackOptions attack;
  DataOptions data;

  void add_to(CLI::App& app) {
    app.add_option("--weights", weights, "Victim weight file")->required();
    app.add_option("--out-dir", out_dir, "Directory for clean.pgm, perturbation.pgm, adversarial.pgm")
        ->capture_default_str();
    app.add_option("--index", index, "Evaluation sample to attack")->capture_default_str();
    attack.add_to(app);
    data.add_to(app);
  }

  int run() const {
    data.check();
    const AttackConfig cfg = attack.config();
    const ModelParams params = load_weights(weights);
    const EvalSet set = data.eval_set();
    check_compatible(params, set);
    if (index >= set.size())
      throw UsageError("--index " + std::to_string(index) + " out of range (set has " + std::to_string(set.size()) +
                       " samples)");
    std::size_t w = set.image_cols, h = set.image_rows;
    if (w == 0 || h == 0) {
      const auto side = static_cast<std::size_t>(std::llround(std::sqrt(static_cast<double>(set.dim()))));
      if (side * side != set.dim())
        throw Error("unsupported shape: " + std::to_string(set.dim()) +
                    " features are not a square image; use an IDX source");
      w = h = side;
    }
    const LabeledBatch one{set.batch.inputs.rows(index, index + 1), {set.batch.labels[index]}, index};
    const AttackResult res = run_attack(params, one, cfg);

    const auto clean = one.inputs.values();
    const auto adv = res.adversarial.values();
    std::vector<double> delta(clean.size()), amplified(clean.size());
    double peak = 0.0;
    for (std::size_t i = 0; i < clean.size(); ++i) {
      delta[i] = adv[i] - clean[i];
      peak = std::max(peak, std::fabs(delta[i]));
    }
    for (std::size_t i = 0; i < clean.size(); ++i) amplified[i] = peak > 0.0 ? 0.5 + 0.5 * delta[i] / peak : 0.5;

    const fs::path dir(out_dir);
    fs::create_directories(dir);
    write_file_bytes(dir / "clean.pgm", pgm(w, h, {clean.begin(), clean.end()}));
    write_file_bytes(dir / "perturbation.pgm", pgm(w, h, amplified));
    write_file_bytes(dir / "adversarial.pgm", pgm(w, h, {adv.begin(), adv.end()}));
    std::cout << "label: " << one.labels[0] << "\n"
              << "clean prediction: " << res.clean_pred[0] << "\n"
              << "adversarial prediction: " << res.adv_pred[0] << "\n"
              << "perturbation norm (" << to_string(cfg.norm) << "): " << fmt("%.6f", res.perturbation_norms[0])
              << " of eps " << fmt("%.6f", cfg.epsilon) << "\n"
              << "max |delta|: " << fmt("%.6f", peak) << " (" << fmt("%.2f", peak * 255.0) << " of 255 levels)\n";
    return 0;
  }
};

int run(int argc, char** argv) {
  CLI::App app{"Batch-size effects on FGM/PGD adversarial attacks"};
  app.require_subcommand(1);
  app.set_version_flag("--version", kToolVersion);
  app.set_config("--config", "", "JSON config file with flag names as keys");
  app.config_formatter(std::make_shared<JsonConfig>(&app));
  app.allow_config_extras(CLI::config_extras_mode::error);

  TrainCommand train;
  AttackCommand attack;
  SweepCommand sweep;
  DemoCommand demo;
  auto setup = [&](const char* name, const char* help, auto& cmd) {
    CLI::App* sub = app.add_subcommand(name, help);
    sub->fallthrough();
    cmd.add_to(*sub);
    return sub;
  };
  CLI::App* train_app = setup("train", "Train a victim MLP and write its weights", train);
  CLI::App* attack_app = setup("attack", "Attack the evaluation set once, write per-sample CSV", attack);
  CLI::App* sweep_app = setup("sweep", "Run the family x attack x batch-size sweep", sweep);
  CLI::App* demo_app = setup("demo", "Write clean/perturbation/adversarial PGM images for one sample", demo);

  try {
    app.parse(argc, argv);
  } catch (const CLI::Success& e) {
    return app.exit(e);
  } catch (const CLI::ParseError& e) {
    app.exit(e);
    return 2;
  }

  try {
    if (train_app->parsed()) return train.run();
    if (attack_app->parsed()) return attack.run();
    if (sweep_app->parsed()) return sweep.run();
    if (demo_app->parsed()) return demo.run();
  } catch (const UsageError& e) {
    std::cerr << "usage error: " << e.what() << "\n";
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 2;
}

}  // namespace advbatch::cli

int main(int argc, char** argv) { return advbatch::cli::run(argc, argv); }
