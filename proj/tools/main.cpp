#include "relugeo/harness.hpp"
#include "relugeo/model_io.hpp"
#include "relugeo/rng.hpp"

#include <CLI11.hpp>

#include <cstdio>
#include <filesystem>
#include <fstream>
#include <iostream>

namespace fs = std::filesystem;
using namespace relugeo;

namespace {

constexpr int kExitOk = 0;
constexpr int kExitRuntime = 1;
constexpr int kExitValidation = 2;

struct GlobalArgs {
  std::string config_path;
  std::string out_dir;
  std::uint64_t seed = 0;
  bool seed_set = false;
  bool force = false;
  int jobs = 1;
};

ExperimentConfig load_config(const GlobalArgs& args, ExperimentKind expected) {
  if (args.config_path.empty()) throw ConfigError("--config is required");
  ExperimentConfig cfg = ExperimentConfig::load_file(args.config_path);
  if (cfg.kind != expected)
    throw ConfigError("config kind is '" + to_string(cfg.kind) + "' but this command runs '" +
                      to_string(expected) + "'");
  if (!args.out_dir.empty()) cfg.out_dir = args.out_dir;
  if (args.seed_set) cfg.master_seed = args.seed;
  return cfg;
}

void print_summary(const std::vector<RunRecord>& records) {
  int failed = 0;
  for (const auto& r : records)
    if (r.failed) ++failed;
  std::printf("completed %zu runs (%d failed)\n", records.size(), failed);
  for (const auto& r : records) {
    if (r.failed) {
      std::printf("  seed %03d FAILED: %s\n", r.seed_index, r.error.c_str());
    } else if (!r.trace.empty()) {
      std::printf("  seed %03d: regions %ld -> %ld, final test loss %g\n", r.seed_index,
                  r.trace.front().region_count, r.trace.back().region_count,
                  r.final_test_loss);
    }
  }
}

/// Per-seed (or per-model) region report on the configured manifold.
int run_count(const GlobalArgs& args, const std::string& model_path, bool distances) {
  ExperimentConfig cfg = load_config(args, ExperimentKind::toy_regression);
  fs::create_directories(cfg.out_dir);
  const CountConfig cc = cfg.counting.to_count_config();

  auto report_one = [&](const Network& net, const std::string& stem, std::uint64_t seed) {
    Curve curve = manifold_curve(cfg.manifold, net.input_dim(), seed);
    RegionReport report = count_regions(net, curve, cc);
    std::ofstream out(fs::path(cfg.out_dir) / (stem + "_boundaries.csv"));
    write_boundary_csv(report, out);
    std::ofstream rpt(fs::path(cfg.out_dir) / (stem + "_report.txt"));
    write_region_report(report, rpt);
    std::printf("%s: regions %ld, crossings %ld, density %.6g", stem.c_str(),
                report.region_count, report.crossings_total, report.density_per_arclength);
    if (distances) {
      DistanceStats stats = distance_statistics(report, curve, cfg.counting.distance_samples,
                                                derive_seed(seed, "cli-distances"), true);
      std::printf(", mean distance %.6g (normalized %.6g)%s", stats.mean,
                  stats.normalized_mean, stats.endpoint_fallback ? " [no boundaries]" : "");
    }
    std::printf("\n");
  };

  if (!model_path.empty()) {
    Network net = load_model_file(model_path);
    report_one(net, fs::path(model_path).stem().string(), cfg.master_seed);
    return kExitOk;
  }
  const auto seeds = cfg.resolved_seeds();
  for (std::size_t i = 0; i < seeds.size(); ++i) {
    char stem[16];
    std::snprintf(stem, sizeof(stem), "seed%03zu", i);
    Network net = Network::init_random(cfg.arch, seeds[i]);
    report_one(net, stem, seeds[i]);
  }
  return kExitOk;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Linear-region profiler for ReLU networks on 1-D data manifolds"};
  app.require_subcommand(1);

  GlobalArgs args;
  app.add_option("--config", args.config_path, "Experiment config file (INI)");
  app.add_option("--out", args.out_dir, "Override the config's output directory");
  auto* seed_opt = app.add_option("--seed", args.seed, "Override the config's master seed");
  app.add_flag("--force", args.force, "Recompute completed (config, seed) runs");
  app.add_option("--jobs", args.jobs, "Worker threads across seeds/pairs")
      ->check(CLI::Range(1, 256));

  std::string model_path;
  auto* cmd_train = app.add_subcommand("train", "Toy regression with region tracking");
  auto* cmd_count = app.add_subcommand("count", "Count linear regions along the manifold");
  cmd_count->add_option("--model", model_path, "Count a saved model instead of fresh inits");
  auto* cmd_distance =
      app.add_subcommand("distance", "Count plus on-manifold distance statistics");
  cmd_distance->add_option("--model", model_path, "Use a saved model");
  auto* cmd_dim = app.add_subcommand("dim-sweep", "Vary the ambient input dimension");
  auto* cmd_arch = app.add_subcommand("arch-sweep", "Vary the architecture");
  auto* cmd_theory =
      app.add_subcommand("theory-sweep", "Supremum sweep of the simplified polynomial");
  auto* cmd_compare =
      app.add_subcommand("manifold-compare", "On/off-manifold region density comparison");
  auto* cmd_validate = app.add_subcommand("validate", "Parse and validate a config file");
  for (auto* cmd : {cmd_train, cmd_count, cmd_distance, cmd_dim, cmd_arch, cmd_theory,
                    cmd_compare, cmd_validate})
    cmd->fallthrough();  // global flags may follow the subcommand

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e) == 0 ? kExitOk : kExitValidation;
  }
  args.seed_set = seed_opt->count() > 0;
  HarnessOptions opts{args.force, args.jobs};

  try {
    if (cmd_validate->parsed()) {
      if (args.config_path.empty()) throw ConfigError("--config is required");
      ExperimentConfig cfg = ExperimentConfig::load_file(args.config_path);
      std::printf("OK: %s experiment, %d seeds, out_dir %s\n", to_string(cfg.kind).c_str(),
                  static_cast<int>(cfg.resolved_seeds().size()), cfg.out_dir.c_str());
      return kExitOk;
    }
    if (cmd_train->parsed()) {
      auto records = run_toy_regression(load_config(args, ExperimentKind::toy_regression), opts);
      print_summary(records);
      return kExitOk;
    }
    if (cmd_count->parsed()) return run_count(args, model_path, false);
    if (cmd_distance->parsed()) return run_count(args, model_path, true);
    if (cmd_dim->parsed()) {
      auto records = run_dim_sweep(load_config(args, ExperimentKind::dim_sweep), opts);
      print_summary(records);
      return kExitOk;
    }
    if (cmd_arch->parsed()) {
      auto records = run_arch_sweep(load_config(args, ExperimentKind::arch_sweep), opts);
      print_summary(records);
      return kExitOk;
    }
    if (cmd_theory->parsed()) {
      ExperimentConfig cfg = load_config(args, ExperimentKind::theory_sweep);
      auto rows = run_theory_sweep(cfg);
      std::printf("wrote %zu rows to %s/theory_sweep.csv\n", rows.size(), cfg.out_dir.c_str());
      if (!sweep_is_monotone(rows)) {
        std::fprintf(stderr, "monotonicity violated in the sweep\n");
        return kExitRuntime;
      }
      std::printf("monotonicity holds: p* decreases in m, increases in n_in\n");
      return kExitOk;
    }
    if (cmd_compare->parsed()) {
      auto result =
          run_manifold_compare(load_config(args, ExperimentKind::manifold_compare), opts);
      std::printf("train accuracy %.4f; %d/%d pairs with lower on-manifold density\n",
                  result.final_train_accuracy, result.on_lower, result.unflagged);
      std::printf("mean log density on %.4f vs off %.4f (sign test p = %.4f)\n",
                  result.mean_log_on, result.mean_log_off, result.sign_test_p);
      return kExitOk;
    }
  } catch (const ConfigError& e) {
    std::fprintf(stderr, "config error: %s\n", e.what());
    return kExitValidation;
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return kExitRuntime;
  }
  return kExitOk;
}
