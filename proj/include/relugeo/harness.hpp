#pragma once

#include "relugeo/config.hpp"
#include "relugeo/geometry.hpp"
#include "relugeo/synth_manifold.hpp"

#include <filesystem>
#include <string>
#include <vector>

namespace relugeo {

struct HarnessOptions {
  bool force = false;  // recompute completed (config, seed) pairs
  int jobs = 1;        // worker threads across seeds / pairs
};

struct EpochSnapshot {
  int epoch = 0;
  long region_count = 0;
  long crossings_total = 0;
  double density_per_arclength = 0.0;
  double mean_distance = 0.0;
  double mean_distance_normalized = 0.0;
};

/// One (config, seed) execution. Everything except wall_seconds is a pure
/// function of (config, seed, code version); wall time lives only in the
/// manifest, never in CSV output.
struct RunRecord {
  int seed_index = 0;
  std::uint64_t seed = 0;
  int dim = 0;                // dim_sweep: ambient dimension
  std::string manifold;       // toy / arch_sweep
  std::string arch_label;     // arch_sweep: "8-8-8"
  long neurons = 0;
  std::vector<EpochSnapshot> trace;
  double final_train_loss = 0.0;
  double final_test_loss = 0.0;
  double wall_seconds = 0.0;
  bool failed = false;
  std::string error;

  std::string key() const;
};

struct RunManifest {
  std::string config_hash;
  std::vector<RunRecord> records;

  const RunRecord* find(const std::string& key) const;
  void upsert(RunRecord record);
  static RunManifest load(const std::filesystem::path& path);  // empty when missing
  void save_atomic(const std::filesystem::path& path) const;
};

std::vector<RunRecord> run_toy_regression(const ExperimentConfig& cfg,
                                          const HarnessOptions& opt = {});
std::vector<RunRecord> run_dim_sweep(const ExperimentConfig& cfg,
                                     const HarnessOptions& opt = {});
std::vector<RunRecord> run_arch_sweep(const ExperimentConfig& cfg,
                                      const HarnessOptions& opt = {});

/// Writes theory_sweep.csv and returns the rows.
std::vector<SweepRow> run_theory_sweep(const ExperimentConfig& cfg);

struct PairComparison {
  int pair_index = 0;
  std::uint64_t pair_seed = 0;
  DensityComparison baseline;  // untrained classifier, control condition
  DensityComparison trained;
};

struct ManifoldCompareResult {
  std::vector<PairComparison> pairs;
  int unflagged = 0;       // trained pairs entering the means
  int on_lower = 0;        // trained pairs with density lower on-manifold
  double mean_log_on = 0.0;
  double mean_log_off = 0.0;
  double sign_test_p = 1.0;  // P(X >= on_lower), X ~ Binomial(unflagged, 1/2)
  double final_train_accuracy = 0.0;
};

ManifoldCompareResult run_manifold_compare(const ExperimentConfig& cfg,
                                           const HarnessOptions& opt = {});

/// The configured 1-D manifold; embedded_circle draws its basis from seed.
Curve manifold_curve(const std::string& manifold, int ambient_dim, std::uint64_t seed);

/// Tail probability P(X >= successes) for X ~ Binomial(trials, 1/2).
double binomial_sign_test_p(int successes, int trials);

}  // namespace relugeo
