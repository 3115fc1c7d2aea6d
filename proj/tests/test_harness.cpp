#include "relugeo/harness.hpp"

#include "relugeo/model_io.hpp"
#include "relugeo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <filesystem>
#include <fstream>
#include <sstream>

using namespace relugeo;
using testing::random_point;

namespace fs = std::filesystem;

namespace {

std::string slurp(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  REQUIRE(in);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

fs::path fresh_dir(const std::string& name) {
  fs::path dir = fs::temp_directory_path() / ("relugeo_test_" + name);
  fs::remove_all(dir);
  fs::create_directories(dir);
  return dir;
}

ExperimentConfig tiny_toy_config(const std::string& out_dir) {
  std::istringstream ini(R"(
[experiment]
kind = toy_regression
master_seed = 7
num_seeds = 2
log_interval = 2

[task]
manifold = circle
arch = 2,6,6,1
epochs = 4
n_points = 120

[counting]
grid_per_unit = 256
distance_samples = 64
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  cfg.out_dir = out_dir;
  return cfg;
}

}  // namespace

TEST_CASE("model save/load round trip is bit-exact") {
  Network net = Network::init_random({3, 10, 16, 1}, 12345);
  std::stringstream ss;
  save_model(net, ss);
  Network loaded = load_model(ss);
  CHECK(loaded == net);
  REQUIRE(loaded.init_meta().has_value());
  CHECK(loaded.init_meta()->seed == 12345);

  Rng rng(5);
  for (int i = 0; i < 1000; ++i) {
    Eigen::VectorXd x = random_point(rng, 3, 2.0);
    CHECK(net.forward(x)(0) == loaded.forward(x)(0));
  }
}

TEST_CASE("model io: hand-built network without init metadata") {
  Eigen::MatrixXd w1(2, 1), w2(1, 2);
  w1 << 1.0, -1.0;
  w2 << 0.5, 0.5;
  Eigen::VectorXd ob(1);
  ob << -0.125;
  Network net({1, 2, 1}, {w1, w2}, {Eigen::VectorXd::Zero(2)}, ob);
  std::stringstream ss;
  save_model(net, ss);
  Network loaded = load_model(ss);
  CHECK(loaded == net);
  CHECK_FALSE(loaded.init_meta().has_value());
}

TEST_CASE("model io: truncation and version mismatch are structured errors") {
  Network net = Network::init_random({2, 4, 1}, 9);
  std::stringstream ss;
  save_model(net, ss);
  std::string text = ss.str();

  std::istringstream truncated(text.substr(0, text.size() / 2));
  try {
    load_model(truncated);
    FAIL("expected ModelParseError");
  } catch (const ModelParseError& e) {
    CHECK(e.byte_offset > 0);
    CHECK(std::string(e.what()).find("byte offset") != std::string::npos);
  }

  std::string wrong = text;
  wrong.replace(wrong.find("v1"), 2, "v9");
  std::istringstream bad(wrong);
  CHECK_THROWS_WITH_AS(load_model(bad),
                       doctest::Contains("unsupported model version"), ModelParseError);

  std::istringstream garbage("not a model at all");
  CHECK_THROWS_AS(load_model(garbage), ModelParseError);
}

TEST_CASE("ini parsing: sections, comments, duplicate and unknown keys") {
  std::istringstream good(R"(
# comment
[experiment]
kind = theory_sweep   # trailing comment
out_dir = somewhere

[theory_sweep]
n_lo = 2
n_hi = 5
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(good));
  CHECK(cfg.kind == ExperimentKind::theory_sweep);
  CHECK(cfg.out_dir == "somewhere");
  CHECK(cfg.n_hi == 5);

  std::istringstream dup("[a]\nx = 1\nx = 2\n");
  CHECK_THROWS_AS(IniFile::parse(dup), ConfigError);

  std::istringstream unknown_key(R"(
[experiment]
kind = theory_sweep
typo_key = 1
)");
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_ini(IniFile::parse(unknown_key)),
                       doctest::Contains("unknown key"), ConfigError);

  std::istringstream unknown_section(R"(
[experiment]
kind = theory_sweep
[mystery]
x = 1
)");
  CHECK_THROWS_WITH_AS(ExperimentConfig::from_ini(IniFile::parse(unknown_section)),
                       doctest::Contains("unknown config section"), ConfigError);

  std::istringstream missing_kind("[experiment]\nout_dir = x\n");
  CHECK_THROWS_AS(ExperimentConfig::from_ini(IniFile::parse(missing_kind)), ConfigError);
}

TEST_CASE("config: seed resolution and hashing") {
  std::istringstream ini(R"(
[experiment]
kind = toy_regression
master_seed = 3
num_seeds = 4
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  auto seeds = cfg.resolved_seeds();
  CHECK(seeds.size() == 4);
  CHECK(seeds == cfg.resolved_seeds());  // stable
  ExperimentConfig other = cfg;
  other.master_seed = 4;
  CHECK(seeds != other.resolved_seeds());
  CHECK(cfg.config_hash() != other.config_hash());

  // out_dir does not participate in the hash.
  ExperimentConfig moved = cfg;
  moved.out_dir = "elsewhere";
  CHECK(cfg.config_hash() == moved.config_hash());

  cfg.explicit_seeds = {10, 11};
  CHECK(cfg.resolved_seeds() == std::vector<std::uint64_t>{10, 11});
}

TEST_CASE("toy regression harness: files, determinism, idempotence") {
  fs::path dir_a = fresh_dir("toy_a");
  fs::path dir_b = fresh_dir("toy_b");

  ExperimentConfig cfg_a = tiny_toy_config(dir_a.string());
  auto records_a = run_toy_regression(cfg_a);
  REQUIRE(records_a.size() == 2);
  for (const auto& r : records_a) {
    CHECK_FALSE(r.failed);
    REQUIRE(!r.trace.empty());
    CHECK(r.trace.front().epoch == 0);
    CHECK(r.trace.back().epoch == 4);
    CHECK(r.neurons == 12);
  }
  CHECK(fs::exists(dir_a / "runs.json"));
  CHECK(fs::exists(dir_a / "seed000_regions.csv"));
  CHECK(fs::exists(dir_a / "seed001_train.csv"));
  CHECK(fs::exists(dir_a / "seed000_model.txt"));
  CHECK(fs::exists(dir_a / "aggregate_regions.csv"));

  // Same config into a fresh directory: byte-identical CSVs.
  ExperimentConfig cfg_b = tiny_toy_config(dir_b.string());
  run_toy_regression(cfg_b);
  for (const char* name :
       {"seed000_regions.csv", "seed001_regions.csv", "aggregate_regions.csv",
        "seed000_train.csv", "seed001_train.csv", "seed000_model.txt"})
    CHECK(slurp(dir_a / name) == slurp(dir_b / name));

  // A rerun without --force reuses the manifest records (wall times stay
  // identical, which recomputation would not reproduce).
  std::string manifest_before = slurp(dir_a / "runs.json");
  auto records_again = run_toy_regression(cfg_a);
  CHECK(slurp(dir_a / "runs.json") == manifest_before);
  REQUIRE(records_again.size() == records_a.size());
  for (std::size_t i = 0; i < records_a.size(); ++i) {
    CHECK(records_again[i].wall_seconds == records_a[i].wall_seconds);
    CHECK(records_again[i].trace.size() == records_a[i].trace.size());
  }

  // Loading the saved model reproduces the network exactly.
  Network loaded = load_model_file((dir_a / "seed000_model.txt").string());
  Rng rng(3);
  ForwardTrace trace;
  Curve circle = Curve::circle();
  RegionReport from_loaded = count_regions(loaded, circle, cfg_a.counting.to_count_config());
  CHECK(from_loaded.region_count == records_a[0].trace.back().region_count);
}

TEST_CASE("toy regression harness: parallel workers produce identical output") {
  fs::path dir_serial = fresh_dir("toy_serial");
  fs::path dir_parallel = fresh_dir("toy_parallel");
  auto cfg_serial = tiny_toy_config(dir_serial.string());
  auto cfg_parallel = tiny_toy_config(dir_parallel.string());
  run_toy_regression(cfg_serial, {false, 1});
  run_toy_regression(cfg_parallel, {false, 2});
  for (const char* name : {"seed000_regions.csv", "seed001_regions.csv",
                           "aggregate_regions.csv", "seed000_model.txt"})
    CHECK(slurp(dir_serial / name) == slurp(dir_parallel / name));
}

TEST_CASE("dim sweep harness: degenerate single-dim init-only run") {
  fs::path dir = fresh_dir("dim");
  std::istringstream ini(R"(
[experiment]
kind = dim_sweep
master_seed = 5
num_seeds = 2

[task]
epochs = 0

[counting]
grid_per_unit = 256
distance_samples = 64

[dim_sweep]
dims = 2,7
hidden = 6,6
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  cfg.out_dir = dir.string();
  auto records = run_dim_sweep(cfg);
  REQUIRE(records.size() == 4);  // 2 dims x 2 seeds
  for (const auto& r : records) {
    CHECK_FALSE(r.failed);
    REQUIRE(r.trace.size() == 1);  // epoch 0 only
    CHECK(r.trace[0].epoch == 0);
    CHECK((r.dim == 2 || r.dim == 7));
  }
  CHECK(fs::exists(dir / "dim_sweep.csv"));
  CHECK(fs::exists(dir / "dim_aggregate.csv"));
}

TEST_CASE("dim sweep: parallel and serial runs write identical per-run files") {
  auto make = [](const std::string& out) {
    std::istringstream ini(R"(
[experiment]
kind = dim_sweep
master_seed = 9
num_seeds = 2

[task]
epochs = 2
n_points = 80

[counting]
grid_per_unit = 256
distance_samples = 32

[dim_sweep]
dims = 2,7
hidden = 5,5
)");
    ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
    cfg.out_dir = out;
    cfg.log_interval = 1;
    return cfg;
  };
  fs::path serial = fresh_dir("dim_serial");
  fs::path parallel = fresh_dir("dim_parallel");
  run_dim_sweep(make(serial.string()), {false, 1});
  run_dim_sweep(make(parallel.string()), {false, 2});
  for (const char* name :
       {"dim_sweep.csv", "dim_aggregate.csv", "dim002_seed000_model.txt",
        "dim002_seed001_train.csv", "dim007_seed000_model.txt", "dim007_seed001_train.csv"})
    CHECK(slurp(serial / name) == slurp(parallel / name));
}

TEST_CASE("theory sweep harness writes a deterministic csv") {
  fs::path dir = fresh_dir("theory");
  std::istringstream ini(R"(
[experiment]
kind = theory_sweep

[theory_sweep]
n_lo = 2
n_hi = 6
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  cfg.out_dir = dir.string();
  auto rows = run_theory_sweep(cfg);
  CHECK(rows.size() == 1 + 2 + 3 + 4 + 5);
  std::string first = slurp(dir / "theory_sweep.csv");
  run_theory_sweep(cfg);
  CHECK(slurp(dir / "theory_sweep.csv") == first);
}

TEST_CASE("arch sweep harness: count-per-neuron ratios at init") {
  fs::path dir = fresh_dir("arch");
  std::istringstream ini(R"(
[experiment]
kind = arch_sweep
master_seed = 11
num_seeds = 3

[task]
epochs = 0

[counting]
grid_per_unit = 512
distance_samples = 32

[arch_sweep]
archs = 6,6 | 8,10,6
manifolds = circle,tractrix
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  cfg.out_dir = dir.string();
  auto records = run_arch_sweep(cfg, {false, 2});
  REQUIRE(records.size() == 12);  // 2 archs x 2 manifolds x 3 seeds
  for (const auto& r : records) {
    CHECK_FALSE(r.failed);
    CHECK((r.neurons == 12 || r.neurons == 24));
    REQUIRE(!r.trace.empty());
    double ratio = static_cast<double>(r.trace[0].region_count) /
                   static_cast<double>(r.neurons);
    CHECK(ratio > 0.05);
    CHECK(ratio < 10.0);
  }
  CHECK(fs::exists(dir / "arch_sweep.csv"));
  {
    std::ifstream in(dir / "arch_sweep.csv");
    std::string header;
    std::getline(in, header);
    CHECK(header == "manifold,arch,neurons,seed_index,epoch,region_count,count_per_neuron");
  }

  // A single-arch single-manifold list degenerates to the toy setup shape.
  std::istringstream one(R"(
[experiment]
kind = arch_sweep
master_seed = 11
num_seeds = 1

[task]
epochs = 0

[counting]
grid_per_unit = 512
distance_samples = 32

[arch_sweep]
archs = 10,16
manifolds = circle
)");
  ExperimentConfig single = ExperimentConfig::from_ini(IniFile::parse(one));
  single.out_dir = fresh_dir("arch_single").string();
  auto singles = run_arch_sweep(single, {});
  REQUIRE(singles.size() == 1);
  CHECK(singles[0].neurons == 26);
  CHECK(singles[0].arch_label == "2-10-16-1");
}

TEST_CASE("manifold compare harness: files, flags, determinism") {
  fs::path dir = fresh_dir("compare");
  std::istringstream ini(R"(
[experiment]
kind = manifold_compare
master_seed = 13

[task]
epochs = 20

[counting]
grid_per_unit = 1024

[manifold_compare]
n_pairs = 3
segments = 25
n_train_points = 64
decoder_hidden = 32,32
classifier_hidden = 48,16
)");
  ExperimentConfig cfg = ExperimentConfig::from_ini(IniFile::parse(ini));
  cfg.out_dir = dir.string();
  ManifoldCompareResult a = run_manifold_compare(cfg, {false, 2});
  REQUIRE(a.pairs.size() == 3);
  CHECK(a.unflagged + (3 - a.unflagged) == 3);
  CHECK(fs::exists(dir / "pairs.csv"));
  CHECK(fs::exists(dir / "compare_manifest.json"));
  CHECK(fs::exists(dir / "pair000_on.curve"));
  CHECK(fs::exists(dir / "pair002_off.curve"));

  // Exported curves parse back with the declared shape.
  std::ifstream curve_in(dir / "pair000_on.curve");
  Curve on = Curve::read_polyline(curve_in);
  CHECK(on.segment_count() == 25);
  CHECK(on.ambient_dim() == 32);

  ManifoldCompareResult b = run_manifold_compare(cfg, {false, 1});
  for (std::size_t i = 0; i < a.pairs.size(); ++i) {
    CHECK(a.pairs[i].trained.log_density_on == b.pairs[i].trained.log_density_on);
    CHECK(a.pairs[i].trained.log_density_off == b.pairs[i].trained.log_density_off);
  }
  CHECK(a.sign_test_p == b.sign_test_p);
}

TEST_CASE("region report structured text carries summary fields") {
  Network net = Network::init_random({2, 6, 1}, 3);
  RegionReport report = count_regions(net, Curve::circle(), {1024});
  std::ostringstream out;
  write_region_report(report, out);
  std::string text = out.str();
  CHECK(text.find("# region_count " + std::to_string(report.region_count)) !=
        std::string::npos);
  CHECK(text.find("# crossings_total") != std::string::npos);
  CHECK(text.find("t_star,layer,index,residual") != std::string::npos);
}

TEST_CASE("sign test tail probabilities") {
  CHECK(binomial_sign_test_p(0, 10) == doctest::Approx(1.0));
  CHECK(binomial_sign_test_p(10, 10) == doctest::Approx(1.0 / 1024.0));
  CHECK(binomial_sign_test_p(8, 10) == doctest::Approx(56.0 / 1024.0));
  CHECK(binomial_sign_test_p(7, 10) == doctest::Approx(176.0 / 1024.0));
}

TEST_CASE("manifold_curve dispatch") {
  CHECK(manifold_curve("circle", 2, 1).kind() == CurveKind::circle);
  CHECK(manifold_curve("tractrix", 2, 1).kind() == CurveKind::tractrix);
  Curve e = manifold_curve("embedded_circle", 9, 1);
  CHECK(e.kind() == CurveKind::embedded_circle);
  CHECK(e.ambient_dim() == 9);
  CHECK_THROWS_AS(manifold_curve("torus", 3, 1), ConfigError);
}
