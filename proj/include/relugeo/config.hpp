#pragma once

#include "relugeo/regions.hpp"
#include "relugeo/train.hpp"

#include <cstdint>
#include <iosfwd>
#include <map>
#include <stdexcept>
#include <string>
#include <vector>

namespace relugeo {

struct ConfigError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Flat INI text: [section] headers, key = value lines, '#' comments.
/// Duplicate keys within a section are errors.
struct IniFile {
  std::map<std::string, std::map<std::string, std::string>> sections;
  static IniFile parse(std::istream& in);
  static IniFile parse_file(const std::string& path);
};

enum class ExperimentKind {
  toy_regression,
  dim_sweep,
  arch_sweep,
  theory_sweep,
  manifold_compare
};

std::string to_string(ExperimentKind kind);
ExperimentKind experiment_kind_from_string(const std::string& name);

struct CountingOptions {
  double grid_per_unit = 4096.0;
  int grid_n = 0;  // explicit override; 0 = auto from grid_per_unit
  double refine_tol = 1e-10;
  double merge_tol = 1e-8;
  int distance_samples = 512;

  CountConfig to_count_config() const;
};

/// One experiment, fully specified. Unknown keys in the source file are
/// rejected so every run is reproducible from its file alone.
struct ExperimentConfig {
  ExperimentKind kind = ExperimentKind::toy_regression;
  std::string out_dir = "out";
  std::uint64_t master_seed = 1;
  int num_seeds = 20;
  std::vector<std::uint64_t> explicit_seeds;  // overrides derivation when nonempty
  int log_interval = 10;

  // task (toy_regression, dim_sweep, arch_sweep)
  std::string manifold = "circle";  // circle | tractrix | embedded_circle
  std::vector<int> arch = {2, 10, 16, 1};
  int epochs = 200;
  int n_points = 1000;
  double amplitude = 1.0;
  double frequency = 0.0;  // 0 = manifold default (3 for circle, pi for tractrix)
  double noise_sigma = 0.1;
  bool save_checkpoints = false;

  OptimizerConfig optimizer;
  CountingOptions counting;

  // dim_sweep
  std::vector<int> dims = {2, 7, 12, 17, 22, 27, 32, 37, 42, 47, 52};
  std::vector<int> hidden = {10, 16};

  // arch_sweep
  std::vector<std::vector<int>> archs = {{8, 8, 8}, {10, 16, 8}, {16, 16, 16}, {32, 16, 8}};
  std::vector<std::string> manifolds = {"circle", "tractrix"};

  // theory_sweep
  int n_lo = 2;
  int n_hi = 30;

  // manifold_compare
  int latent_dim = 4;
  int ambient_dim = 32;
  std::vector<int> decoder_hidden = {64, 64};
  std::vector<int> classifier_hidden = {256, 64};
  int n_pairs = 10;
  int segments = 100;
  int n_train_points = 256;
  bool export_curves = true;

  /// Seed list: explicit_seeds if given, otherwise num_seeds children
  /// derived from master_seed.
  std::vector<std::uint64_t> resolved_seeds() const;
  double resolved_frequency(const std::string& manifold_name) const;

  /// Canonical key=value serialization; independent of out_dir so moving
  /// outputs does not invalidate completed runs.
  std::string canonical_text() const;
  std::uint64_t config_hash() const;

  static ExperimentConfig from_ini(const IniFile& ini);
  static ExperimentConfig load_file(const std::string& path);
};

}  // namespace relugeo
