#include "relugeo/config.hpp"

#include "relugeo/csv.hpp"
#include "relugeo/rng.hpp"

#include <algorithm>
#include <cstdlib>
#include <fstream>
#include <istream>
#include <set>
#include <sstream>

namespace relugeo {

namespace {

std::string trim(const std::string& s) {
  std::size_t b = s.find_first_not_of(" \t\r\n");
  if (b == std::string::npos) return "";
  std::size_t e = s.find_last_not_of(" \t\r\n");
  return s.substr(b, e - b + 1);
}

long to_long(const std::string& key, const std::string& v) {
  char* end = nullptr;
  long x = std::strtol(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected integer, got '" + v + "'");
  return x;
}

std::uint64_t to_u64(const std::string& key, const std::string& v) {
  char* end = nullptr;
  std::uint64_t x = std::strtoull(v.c_str(), &end, 10);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected unsigned integer, got '" + v + "'");
  return x;
}

double to_double(const std::string& key, const std::string& v) {
  char* end = nullptr;
  double x = std::strtod(v.c_str(), &end);
  if (end != v.c_str() + v.size() || v.empty())
    throw ConfigError("key '" + key + "': expected number, got '" + v + "'");
  return x;
}

bool to_bool(const std::string& key, const std::string& v) {
  if (v == "true" || v == "1" || v == "yes") return true;
  if (v == "false" || v == "0" || v == "no") return false;
  throw ConfigError("key '" + key + "': expected boolean, got '" + v + "'");
}

std::vector<int> to_int_list(const std::string& key, const std::string& v) {
  std::vector<int> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(static_cast<int>(to_long(key, trim(tok))));
  if (out.empty()) throw ConfigError("key '" + key + "': empty list");
  return out;
}

std::vector<std::uint64_t> to_u64_list(const std::string& key, const std::string& v) {
  std::vector<std::uint64_t> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(to_u64(key, trim(tok)));
  return out;
}

std::vector<std::string> to_string_list(const std::string& v) {
  std::vector<std::string> out;
  std::stringstream ss(v);
  std::string tok;
  while (std::getline(ss, tok, ',')) out.push_back(trim(tok));
  return out;
}

// "8,8,8 | 10,16,8" -> {{8,8,8},{10,16,8}}
std::vector<std::vector<int>> to_arch_list(const std::string& key, const std::string& v) {
  std::vector<std::vector<int>> out;
  std::stringstream ss(v);
  std::string group;
  while (std::getline(ss, group, '|')) out.push_back(to_int_list(key, trim(group)));
  if (out.empty()) throw ConfigError("key '" + key + "': empty architecture list");
  return out;
}

}  // namespace

IniFile IniFile::parse(std::istream& in) {
  IniFile ini;
  std::string line;
  std::string section;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    if (auto hash = line.find('#'); hash != std::string::npos) line.resize(hash);
    line = trim(line);
    if (line.empty()) continue;
    if (line.front() == '[') {
      if (line.back() != ']')
        throw ConfigError("line " + std::to_string(lineno) + ": unterminated section header");
      section = trim(line.substr(1, line.size() - 2));
      if (section.empty())
        throw ConfigError("line " + std::to_string(lineno) + ": empty section name");
      ini.sections[section];
      continue;
    }
    auto eq = line.find('=');
    if (eq == std::string::npos)
      throw ConfigError("line " + std::to_string(lineno) + ": expected key = value");
    std::string key = trim(line.substr(0, eq));
    std::string value = trim(line.substr(eq + 1));
    if (key.empty()) throw ConfigError("line " + std::to_string(lineno) + ": empty key");
    if (section.empty())
      throw ConfigError("line " + std::to_string(lineno) + ": key outside any section");
    auto [it, inserted] = ini.sections[section].emplace(key, value);
    if (!inserted)
      throw ConfigError("line " + std::to_string(lineno) + ": duplicate key '" + key + "'");
  }
  return ini;
}

IniFile IniFile::parse_file(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config file: " + path);
  return parse(in);
}

std::string to_string(ExperimentKind kind) {
  switch (kind) {
    case ExperimentKind::toy_regression: return "toy_regression";
    case ExperimentKind::dim_sweep: return "dim_sweep";
    case ExperimentKind::arch_sweep: return "arch_sweep";
    case ExperimentKind::theory_sweep: return "theory_sweep";
    case ExperimentKind::manifold_compare: return "manifold_compare";
  }
  return "?";
}

ExperimentKind experiment_kind_from_string(const std::string& name) {
  if (name == "toy_regression") return ExperimentKind::toy_regression;
  if (name == "dim_sweep") return ExperimentKind::dim_sweep;
  if (name == "arch_sweep") return ExperimentKind::arch_sweep;
  if (name == "theory_sweep") return ExperimentKind::theory_sweep;
  if (name == "manifold_compare") return ExperimentKind::manifold_compare;
  throw ConfigError("unknown experiment kind: '" + name + "'");
}

CountConfig CountingOptions::to_count_config() const {
  CountConfig cfg;
  cfg.grid_n = grid_n;
  cfg.grid_per_unit = grid_per_unit;
  cfg.refine_tol = refine_tol;
  cfg.merge_tol = merge_tol;
  return cfg;
}

std::vector<std::uint64_t> ExperimentConfig::resolved_seeds() const {
  if (!explicit_seeds.empty()) return explicit_seeds;
  std::vector<std::uint64_t> seeds;
  seeds.reserve(static_cast<std::size_t>(num_seeds));
  for (int i = 0; i < num_seeds; ++i)
    seeds.push_back(derive_seed(master_seed, "run-seed/" + std::to_string(i)));
  return seeds;
}

double ExperimentConfig::resolved_frequency(const std::string& manifold_name) const {
  if (frequency != 0.0) return frequency;
  return manifold_name == "tractrix" ? 3.14159265358979323846 : 3.0;
}

namespace {

using Schema = std::map<std::string, std::set<std::string>>;

Schema schema_for(ExperimentKind kind) {
  Schema s;
  s["experiment"] = {"kind", "out_dir", "master_seed", "num_seeds", "seeds", "log_interval"};
  switch (kind) {
    case ExperimentKind::toy_regression:
      s["task"] = {"manifold", "arch",        "epochs",          "n_points",
                   "amplitude", "frequency", "noise_sigma", "save_checkpoints"};
      s["optimizer"] = {"kind", "learning_rate", "momentum", "beta1",
                        "beta2", "epsilon",      "batch_size"};
      s["counting"] = {"grid_per_unit", "grid_n", "refine_tol", "merge_tol",
                       "distance_samples"};
      break;
    case ExperimentKind::dim_sweep:
      s["task"] = {"epochs", "n_points", "amplitude", "frequency", "noise_sigma"};
      s["optimizer"] = {"kind", "learning_rate", "momentum", "beta1",
                        "beta2", "epsilon",      "batch_size"};
      s["counting"] = {"grid_per_unit", "grid_n", "refine_tol", "merge_tol",
                       "distance_samples"};
      s["dim_sweep"] = {"dims", "hidden"};
      break;
    case ExperimentKind::arch_sweep:
      s["task"] = {"epochs", "n_points", "amplitude", "frequency", "noise_sigma"};
      s["optimizer"] = {"kind", "learning_rate", "momentum", "beta1",
                        "beta2", "epsilon",      "batch_size"};
      s["counting"] = {"grid_per_unit", "grid_n", "refine_tol", "merge_tol",
                       "distance_samples"};
      s["arch_sweep"] = {"archs", "manifolds"};
      break;
    case ExperimentKind::theory_sweep:
      s["theory_sweep"] = {"n_lo", "n_hi"};
      break;
    case ExperimentKind::manifold_compare:
      s["task"] = {"epochs"};
      s["optimizer"] = {"kind", "learning_rate", "momentum", "beta1",
                        "beta2", "epsilon",      "batch_size"};
      s["counting"] = {"grid_per_unit", "grid_n", "refine_tol", "merge_tol",
                       "distance_samples"};
      s["manifold_compare"] = {"latent_dim",  "ambient_dim",    "decoder_hidden",
                               "classifier_hidden", "n_pairs", "segments",
                               "n_train_points",    "export_curves"};
      break;
  }
  return s;
}

void check_unknown(const IniFile& ini, const Schema& schema) {
  for (const auto& [section, kvs] : ini.sections) {
    auto it = schema.find(section);
    if (it == schema.end()) throw ConfigError("unknown config section '[" + section + "]'");
    for (const auto& [key, value] : kvs)
      if (!it->second.count(key))
        throw ConfigError("unknown key '" + key + "' in section '[" + section + "]'");
  }
}

const std::string* find(const IniFile& ini, const std::string& section,
                        const std::string& key) {
  auto sit = ini.sections.find(section);
  if (sit == ini.sections.end()) return nullptr;
  auto kit = sit->second.find(key);
  return kit == sit->second.end() ? nullptr : &kit->second;
}

}  // namespace

ExperimentConfig ExperimentConfig::from_ini(const IniFile& ini) {
  const std::string* kind_text = find(ini, "experiment", "kind");
  if (!kind_text) throw ConfigError("missing [experiment] kind");
  ExperimentConfig cfg;
  cfg.kind = experiment_kind_from_string(*kind_text);

  // Per-kind defaults, then file overrides.
  switch (cfg.kind) {
    case ExperimentKind::toy_regression:
      cfg.num_seeds = 20;
      cfg.optimizer = OptimizerConfig::adam(0.01, 200);
      break;
    case ExperimentKind::dim_sweep:
      cfg.num_seeds = 10;
      cfg.optimizer = OptimizerConfig::adam(0.01, 200);
      break;
    case ExperimentKind::arch_sweep:
      cfg.num_seeds = 30;
      cfg.optimizer = OptimizerConfig::adam(0.01, 200);
      break;
    case ExperimentKind::manifold_compare:
      cfg.num_seeds = 1;
      cfg.epochs = 500;
      cfg.optimizer = OptimizerConfig::sgd_momentum_default(0.01, 0.5, 32, 500);
      break;
    case ExperimentKind::theory_sweep:
      cfg.num_seeds = 1;
      break;
  }

  check_unknown(ini, schema_for(cfg.kind));

  auto get = [&](const char* section, const char* key) { return find(ini, section, key); };

  if (const auto* v = get("experiment", "out_dir")) cfg.out_dir = *v;
  if (const auto* v = get("experiment", "master_seed")) cfg.master_seed = to_u64("master_seed", *v);
  if (const auto* v = get("experiment", "num_seeds")) {
    cfg.num_seeds = static_cast<int>(to_long("num_seeds", *v));
    if (cfg.num_seeds < 1) throw ConfigError("num_seeds must be >= 1");
  }
  if (const auto* v = get("experiment", "seeds")) cfg.explicit_seeds = to_u64_list("seeds", *v);
  if (const auto* v = get("experiment", "log_interval")) {
    cfg.log_interval = static_cast<int>(to_long("log_interval", *v));
    if (cfg.log_interval < 1) throw ConfigError("log_interval must be >= 1");
  }

  if (const auto* v = get("task", "manifold")) {
    cfg.manifold = *v;
    if (cfg.manifold != "circle" && cfg.manifold != "tractrix" &&
        cfg.manifold != "embedded_circle")
      throw ConfigError("manifold must be circle, tractrix or embedded_circle");
  }
  if (const auto* v = get("task", "arch")) {
    cfg.arch = to_int_list("arch", *v);
    if (cfg.arch.size() < 2) throw ConfigError("arch needs input and output widths");
  }
  if (const auto* v = get("task", "epochs")) {
    cfg.epochs = static_cast<int>(to_long("epochs", *v));
    if (cfg.epochs < 0) throw ConfigError("epochs must be >= 0");
  }
  if (const auto* v = get("task", "n_points")) {
    cfg.n_points = static_cast<int>(to_long("n_points", *v));
    if (cfg.n_points < 1) throw ConfigError("n_points must be >= 1");
  }
  if (const auto* v = get("task", "amplitude")) cfg.amplitude = to_double("amplitude", *v);
  if (const auto* v = get("task", "frequency")) cfg.frequency = to_double("frequency", *v);
  if (const auto* v = get("task", "noise_sigma")) {
    cfg.noise_sigma = to_double("noise_sigma", *v);
    if (cfg.noise_sigma < 0.0) throw ConfigError("noise_sigma must be >= 0");
  }
  if (const auto* v = get("task", "save_checkpoints"))
    cfg.save_checkpoints = to_bool("save_checkpoints", *v);

  if (const auto* v = get("optimizer", "kind")) {
    if (*v == "adam")
      cfg.optimizer.kind = OptimizerConfig::Kind::adam;
    else if (*v == "sgd_momentum")
      cfg.optimizer.kind = OptimizerConfig::Kind::sgd_momentum;
    else
      throw ConfigError("optimizer kind must be adam or sgd_momentum");
  }
  if (const auto* v = get("optimizer", "learning_rate"))
    cfg.optimizer.learning_rate = to_double("learning_rate", *v);
  if (const auto* v = get("optimizer", "momentum"))
    cfg.optimizer.momentum = to_double("momentum", *v);
  if (const auto* v = get("optimizer", "beta1")) cfg.optimizer.beta1 = to_double("beta1", *v);
  if (const auto* v = get("optimizer", "beta2")) cfg.optimizer.beta2 = to_double("beta2", *v);
  if (const auto* v = get("optimizer", "epsilon"))
    cfg.optimizer.epsilon = to_double("epsilon", *v);
  if (const auto* v = get("optimizer", "batch_size")) {
    cfg.optimizer.batch_size = static_cast<int>(to_long("batch_size", *v));
    if (cfg.optimizer.batch_size < 0) throw ConfigError("batch_size must be >= 0");
  }
  cfg.optimizer.epochs = cfg.epochs;

  if (const auto* v = get("counting", "grid_per_unit")) {
    cfg.counting.grid_per_unit = to_double("grid_per_unit", *v);
    if (cfg.counting.grid_per_unit <= 0.0) throw ConfigError("grid_per_unit must be > 0");
  }
  if (const auto* v = get("counting", "grid_n"))
    cfg.counting.grid_n = static_cast<int>(to_long("grid_n", *v));
  if (const auto* v = get("counting", "refine_tol"))
    cfg.counting.refine_tol = to_double("refine_tol", *v);
  if (const auto* v = get("counting", "merge_tol"))
    cfg.counting.merge_tol = to_double("merge_tol", *v);
  if (const auto* v = get("counting", "distance_samples")) {
    cfg.counting.distance_samples = static_cast<int>(to_long("distance_samples", *v));
    if (cfg.counting.distance_samples < 1) throw ConfigError("distance_samples must be >= 1");
  }
  if (cfg.counting.refine_tol <= 0.0 || cfg.counting.merge_tol <= cfg.counting.refine_tol)
    throw ConfigError("need merge_tol > refine_tol > 0");

  if (const auto* v = get("dim_sweep", "dims")) {
    cfg.dims = to_int_list("dims", *v);
    for (int d : cfg.dims)
      if (d < 2) throw ConfigError("dims entries must be >= 2");
  }
  if (const auto* v = get("dim_sweep", "hidden")) cfg.hidden = to_int_list("hidden", *v);

  if (const auto* v = get("arch_sweep", "archs")) cfg.archs = to_arch_list("archs", *v);
  if (const auto* v = get("arch_sweep", "manifolds")) {
    cfg.manifolds = to_string_list(*v);
    for (const auto& m : cfg.manifolds)
      if (m != "circle" && m != "tractrix")
        throw ConfigError("arch_sweep manifolds must be circle or tractrix");
  }

  if (const auto* v = get("theory_sweep", "n_lo"))
    cfg.n_lo = static_cast<int>(to_long("n_lo", *v));
  if (const auto* v = get("theory_sweep", "n_hi"))
    cfg.n_hi = static_cast<int>(to_long("n_hi", *v));
  if (cfg.kind == ExperimentKind::theory_sweep && (cfg.n_lo < 2 || cfg.n_hi < cfg.n_lo))
    throw ConfigError("theory sweep needs 2 <= n_lo <= n_hi");

  if (const auto* v = get("manifold_compare", "latent_dim"))
    cfg.latent_dim = static_cast<int>(to_long("latent_dim", *v));
  if (const auto* v = get("manifold_compare", "ambient_dim"))
    cfg.ambient_dim = static_cast<int>(to_long("ambient_dim", *v));
  if (const auto* v = get("manifold_compare", "decoder_hidden"))
    cfg.decoder_hidden = to_int_list("decoder_hidden", *v);
  if (const auto* v = get("manifold_compare", "classifier_hidden"))
    cfg.classifier_hidden = to_int_list("classifier_hidden", *v);
  if (const auto* v = get("manifold_compare", "n_pairs")) {
    cfg.n_pairs = static_cast<int>(to_long("n_pairs", *v));
    if (cfg.n_pairs < 1) throw ConfigError("n_pairs must be >= 1");
  }
  if (const auto* v = get("manifold_compare", "segments")) {
    cfg.segments = static_cast<int>(to_long("segments", *v));
    if (cfg.segments < 1) throw ConfigError("segments must be >= 1");
  }
  if (const auto* v = get("manifold_compare", "n_train_points")) {
    cfg.n_train_points = static_cast<int>(to_long("n_train_points", *v));
    if (cfg.n_train_points < 1) throw ConfigError("n_train_points must be >= 1");
  }
  if (const auto* v = get("manifold_compare", "export_curves"))
    cfg.export_curves = to_bool("export_curves", *v);
  if (cfg.kind == ExperimentKind::manifold_compare && cfg.latent_dim >= cfg.ambient_dim)
    throw ConfigError("manifold_compare needs latent_dim < ambient_dim");

  cfg.optimizer.validate();
  return cfg;
}

ExperimentConfig ExperimentConfig::load_file(const std::string& path) {
  return from_ini(IniFile::parse_file(path));
}

std::string ExperimentConfig::canonical_text() const {
  std::ostringstream out;
  out << "kind=" << to_string(kind) << '\n';
  out << "master_seed=" << master_seed << '\n';
  out << "num_seeds=" << num_seeds << '\n';
  out << "seeds=";
  for (std::size_t i = 0; i < explicit_seeds.size(); ++i)
    out << (i ? "," : "") << explicit_seeds[i];
  out << '\n';
  out << "log_interval=" << log_interval << '\n';
  out << "manifold=" << manifold << '\n';
  out << "arch=";
  for (std::size_t i = 0; i < arch.size(); ++i) out << (i ? "," : "") << arch[i];
  out << '\n';
  out << "epochs=" << epochs << '\n';
  out << "n_points=" << n_points << '\n';
  out << "amplitude=" << format_double(amplitude) << '\n';
  out << "frequency=" << format_double(frequency) << '\n';
  out << "noise_sigma=" << format_double(noise_sigma) << '\n';
  out << "optimizer="
      << (optimizer.kind == OptimizerConfig::Kind::adam ? "adam" : "sgd_momentum") << ','
      << format_double(optimizer.learning_rate) << ',' << format_double(optimizer.momentum)
      << ',' << format_double(optimizer.beta1) << ',' << format_double(optimizer.beta2) << ','
      << format_double(optimizer.epsilon) << ',' << optimizer.batch_size << '\n';
  out << "counting=" << format_double(counting.grid_per_unit) << ',' << counting.grid_n << ','
      << format_double(counting.refine_tol) << ',' << format_double(counting.merge_tol) << ','
      << counting.distance_samples << '\n';
  out << "dims=";
  for (std::size_t i = 0; i < dims.size(); ++i) out << (i ? "," : "") << dims[i];
  out << '\n';
  out << "hidden=";
  for (std::size_t i = 0; i < hidden.size(); ++i) out << (i ? "," : "") << hidden[i];
  out << '\n';
  out << "archs=";
  for (std::size_t a = 0; a < archs.size(); ++a) {
    if (a) out << '|';
    for (std::size_t i = 0; i < archs[a].size(); ++i) out << (i ? "," : "") << archs[a][i];
  }
  out << '\n';
  out << "manifolds=";
  for (std::size_t i = 0; i < manifolds.size(); ++i) out << (i ? "," : "") << manifolds[i];
  out << '\n';
  out << "theory=" << n_lo << ',' << n_hi << '\n';
  out << "compare=" << latent_dim << ',' << ambient_dim << ',';
  for (std::size_t i = 0; i < decoder_hidden.size(); ++i)
    out << (i ? ";" : "") << decoder_hidden[i];
  out << ',';
  for (std::size_t i = 0; i < classifier_hidden.size(); ++i)
    out << (i ? ";" : "") << classifier_hidden[i];
  out << ',' << n_pairs << ',' << segments << ',' << n_train_points << '\n';
  return out.str();
}

std::uint64_t ExperimentConfig::config_hash() const { return fnv1a64(canonical_text()); }

}  // namespace relugeo
