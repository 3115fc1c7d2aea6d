#include "relugeo/harness.hpp"

#include "relugeo/csv.hpp"
#include "relugeo/model_io.hpp"
#include "relugeo/rng.hpp"

#include <json.hpp>

#include <algorithm>
#include <atomic>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <mutex>
#include <optional>
#include <sstream>
#include <thread>

namespace relugeo {

namespace fs = std::filesystem;
using nlohmann::json;

namespace {

void parallel_for(int jobs, int n, const std::function<void(int)>& fn) {
  if (jobs <= 1 || n <= 1) {
    for (int i = 0; i < n; ++i) fn(i);
    return;
  }
  std::atomic<int> next{0};
  std::exception_ptr first_error;
  std::mutex error_mutex;
  auto worker = [&] {
    for (;;) {
      int i = next.fetch_add(1);
      if (i >= n) return;
      try {
        fn(i);
      } catch (...) {
        std::lock_guard<std::mutex> lock(error_mutex);
        if (!first_error) first_error = std::current_exception();
      }
    }
  };
  std::vector<std::thread> pool;
  const int workers = std::min(jobs, n);
  pool.reserve(static_cast<std::size_t>(workers));
  for (int w = 0; w < workers; ++w) pool.emplace_back(worker);
  for (auto& t : pool) t.join();
  if (first_error) std::rethrow_exception(first_error);
}

std::string seed_tag(int index) {
  char buf[16];
  std::snprintf(buf, sizeof(buf), "seed%03d", index);
  return buf;
}

std::ofstream open_out(const fs::path& path) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot open for writing: " + path.string());
  return out;
}

json snapshot_to_json(const EpochSnapshot& s) {
  return json{{"epoch", s.epoch},
              {"region_count", s.region_count},
              {"crossings_total", s.crossings_total},
              {"density_per_arclength", s.density_per_arclength},
              {"mean_distance", s.mean_distance},
              {"mean_distance_normalized", s.mean_distance_normalized}};
}

EpochSnapshot snapshot_from_json(const json& j) {
  EpochSnapshot s;
  s.epoch = j.at("epoch").get<int>();
  s.region_count = j.at("region_count").get<long>();
  s.crossings_total = j.at("crossings_total").get<long>();
  s.density_per_arclength = j.at("density_per_arclength").get<double>();
  s.mean_distance = j.at("mean_distance").get<double>();
  s.mean_distance_normalized = j.at("mean_distance_normalized").get<double>();
  return s;
}

json record_to_json(const RunRecord& r) {
  json trace = json::array();
  for (const auto& s : r.trace) trace.push_back(snapshot_to_json(s));
  return json{{"seed_index", r.seed_index},
              {"seed", std::to_string(r.seed)},
              {"dim", r.dim},
              {"manifold", r.manifold},
              {"arch_label", r.arch_label},
              {"neurons", r.neurons},
              {"trace", std::move(trace)},
              {"final_train_loss", r.final_train_loss},
              {"final_test_loss", r.final_test_loss},
              {"wall_seconds", r.wall_seconds},
              {"failed", r.failed},
              {"error", r.error}};
}

RunRecord record_from_json(const json& j) {
  RunRecord r;
  r.seed_index = j.at("seed_index").get<int>();
  r.seed = std::stoull(j.at("seed").get<std::string>());
  r.dim = j.at("dim").get<int>();
  r.manifold = j.at("manifold").get<std::string>();
  r.arch_label = j.at("arch_label").get<std::string>();
  r.neurons = j.at("neurons").get<long>();
  for (const auto& s : j.at("trace")) r.trace.push_back(snapshot_from_json(s));
  r.final_train_loss = j.at("final_train_loss").get<double>();
  r.final_test_loss = j.at("final_test_loss").get<double>();
  r.wall_seconds = j.at("wall_seconds").get<double>();
  r.failed = j.at("failed").get<bool>();
  r.error = j.at("error").get<std::string>();
  return r;
}

std::string arch_label_of(const std::vector<int>& widths) {
  std::string label;
  for (std::size_t i = 0; i < widths.size(); ++i) {
    if (i) label += '-';
    label += std::to_string(widths[i]);
  }
  return label;
}

long hidden_neurons_of(const std::vector<int>& widths) {
  long n = 0;
  for (std::size_t i = 1; i + 1 < widths.size(); ++i) n += widths[i];
  return n;
}

/// Epochs at which regions/distances are measured: 0, every log_interval,
/// and the final epoch.
bool is_logged_epoch(int epoch, int epochs, int interval) {
  return epoch % interval == 0 || epoch == epochs;
}

/// Trains one network on one task while measuring the region profile at
/// every logged epoch. `stem` names this run's files; sweeps make it unique
/// per (dim | arch | manifold, seed).
RunRecord run_tracked(Network net, const RegressionTask& task, const ExperimentConfig& cfg,
                      int seed_index, std::uint64_t seed, const std::string& stem) {
  RunRecord rec;
  rec.seed_index = seed_index;
  rec.seed = seed;
  rec.neurons = net.hidden_neuron_count();

  const CountConfig cc = cfg.counting.to_count_config();
  const Curve& curve = task.curve;
  auto t0 = std::chrono::steady_clock::now();

  auto measure = [&](int epoch, const Network& n) {
    if (!is_logged_epoch(epoch, cfg.epochs, cfg.log_interval)) return;
    RegionReport report = count_regions(n, curve, cc);
    DistanceStats stats =
        distance_statistics(report, curve, cfg.counting.distance_samples,
                            derive_seed(seed, "distances/" + std::to_string(epoch)), true);
    rec.trace.push_back({epoch, report.region_count, report.crossings_total,
                         report.density_per_arclength, stats.mean, stats.normalized_mean});
  };

  OptimizerConfig opt = cfg.optimizer;
  opt.epochs = cfg.epochs;
  opt.seed = seed;

  fs::path dir(cfg.out_dir);
  auto hook = [&](int epoch, const Network& n) {
    measure(epoch, n);
    if (cfg.save_checkpoints && is_logged_epoch(epoch, cfg.epochs, cfg.log_interval)) {
      char name[96];
      std::snprintf(name, sizeof(name), "%s_epoch%05d_model.txt", stem.c_str(), epoch);
      save_model_file(n, (dir / name).string());
    }
  };

  TrainResult result = train_regression(std::move(net), task, cfg.n_points, opt, hook);
  rec.final_train_loss =
      result.log.train_loss.empty() ? result.log.initial_train_loss : result.log.train_loss.back();
  rec.final_test_loss =
      result.log.test_loss.empty() ? result.log.initial_test_loss : result.log.test_loss.back();
  rec.wall_seconds =
      std::chrono::duration<double>(std::chrono::steady_clock::now() - t0).count();

  save_model_file(result.net, (dir / (stem + "_model.txt")).string());
  auto train_csv = open_out(dir / (stem + "_train.csv"));
  write_train_csv(result.log, train_csv);
  return rec;
}

void write_region_trace_csv(const RunRecord& rec, std::ostream& out) {
  out << "epoch,region_count,crossings_total,density_per_arclength,mean_distance,"
         "mean_distance_normalized\n";
  for (const auto& s : rec.trace)
    out << s.epoch << ',' << s.region_count << ',' << s.crossings_total << ','
        << format_double(s.density_per_arclength) << ',' << format_double(s.mean_distance)
        << ',' << format_double(s.mean_distance_normalized) << '\n';
}

/// Mean/stddev of the per-seed traces at each logged epoch, over records
/// that share the epoch.
void write_aggregate_csv(const std::vector<RunRecord>& records, std::ostream& out) {
  out << "epoch,n_seeds,mean_region_count,std_region_count,mean_distance,std_distance,"
         "mean_distance_normalized,std_distance_normalized\n";
  if (records.empty()) return;
  std::size_t max_len = 0;
  for (const auto& r : records)
    if (!r.failed) max_len = std::max(max_len, r.trace.size());
  for (std::size_t k = 0; k < max_len; ++k) {
    int epoch = -1;
    std::vector<double> counts, dists, norms;
    for (const auto& r : records) {
      if (r.failed || k >= r.trace.size()) continue;
      epoch = r.trace[k].epoch;
      counts.push_back(static_cast<double>(r.trace[k].region_count));
      dists.push_back(r.trace[k].mean_distance);
      norms.push_back(r.trace[k].mean_distance_normalized);
    }
    if (counts.empty()) continue;
    auto mean_std = [](const std::vector<double>& v) {
      double mean = 0.0;
      for (double x : v) mean += x;
      mean /= static_cast<double>(v.size());
      double ss = 0.0;
      for (double x : v) ss += (x - mean) * (x - mean);
      double sd = v.size() > 1 ? std::sqrt(ss / static_cast<double>(v.size() - 1)) : 0.0;
      return std::pair<double, double>{mean, sd};
    };
    auto [cm, cs] = mean_std(counts);
    auto [dm, ds] = mean_std(dists);
    auto [nm, ns] = mean_std(norms);
    out << epoch << ',' << counts.size() << ',' << format_double(cm) << ',' << format_double(cs)
        << ',' << format_double(dm) << ',' << format_double(ds) << ',' << format_double(nm)
        << ',' << format_double(ns) << '\n';
  }
}

struct ManifestIo {
  fs::path path;
  RunManifest manifest;
  std::mutex mutex;

  ManifestIo(const ExperimentConfig& cfg) : path(fs::path(cfg.out_dir) / "runs.json") {
    manifest = RunManifest::load(path);
    std::string hash = std::to_string(cfg.config_hash());
    if (manifest.config_hash != hash) {
      manifest = RunManifest{};  // config changed: stale records dropped
      manifest.config_hash = hash;
    }
  }

  // Workers look up and store concurrently; records are returned by value
  // because store() may reallocate the backing vector.
  std::optional<RunRecord> completed(const std::string& key, bool force) {
    if (force) return std::nullopt;
    std::lock_guard<std::mutex> lock(mutex);
    const RunRecord* r = manifest.find(key);
    if (r && !r->failed) return *r;
    return std::nullopt;
  }

  void store(RunRecord rec) {
    std::lock_guard<std::mutex> lock(mutex);
    manifest.upsert(std::move(rec));
    manifest.save_atomic(path);
  }
};

}  // namespace

std::string RunRecord::key() const {
  std::ostringstream k;
  k << seed_index << '/' << dim << '/' << manifold << '/' << arch_label;
  return k.str();
}

const RunRecord* RunManifest::find(const std::string& key) const {
  for (const auto& r : records)
    if (r.key() == key) return &r;
  return nullptr;
}

void RunManifest::upsert(RunRecord record) {
  for (auto& r : records)
    if (r.key() == record.key()) {
      r = std::move(record);
      return;
    }
  records.push_back(std::move(record));
}

RunManifest RunManifest::load(const fs::path& path) {
  RunManifest m;
  std::ifstream in(path);
  if (!in) return m;
  try {
    json j = json::parse(in);
    m.config_hash = j.at("config_hash").get<std::string>();
    for (const auto& r : j.at("records")) m.records.push_back(record_from_json(r));
  } catch (const std::exception&) {
    return RunManifest{};  // unreadable manifest: treat as absent
  }
  return m;
}

void RunManifest::save_atomic(const fs::path& path) const {
  json j;
  j["config_hash"] = config_hash;
  json records_json = json::array();
  // Stable order keeps the file deterministic regardless of worker timing.
  std::vector<const RunRecord*> sorted;
  for (const auto& r : records) sorted.push_back(&r);
  std::sort(sorted.begin(), sorted.end(),
            [](const RunRecord* a, const RunRecord* b) { return a->key() < b->key(); });
  for (const RunRecord* r : sorted) records_json.push_back(record_to_json(*r));
  j["records"] = std::move(records_json);

  fs::path tmp = path;
  tmp += ".tmp";
  {
    auto out = open_out(tmp);
    out << j.dump(1) << '\n';
  }
  fs::rename(tmp, path);
}

Curve manifold_curve(const std::string& manifold, int ambient_dim, std::uint64_t seed) {
  if (manifold == "circle") return Curve::circle();
  if (manifold == "tractrix") return Curve::tractrix();
  if (manifold == "embedded_circle")
    return Curve::random_embedded_circle(ambient_dim, derive_seed(seed, "manifold-basis"));
  throw ConfigError("unknown manifold: " + manifold);
}

double binomial_sign_test_p(int successes, int trials) {
  if (trials <= 0) return 1.0;
  // Exact tail sum; trials are small (tens of pairs).
  double p = 0.0;
  for (int i = successes; i <= trials; ++i) {
    double log_c = std::lgamma(trials + 1.0) - std::lgamma(i + 1.0) -
                   std::lgamma(trials - i + 1.0);
    p += std::exp(log_c - trials * std::log(2.0));
  }
  return std::min(1.0, p);
}

std::vector<RunRecord> run_toy_regression(const ExperimentConfig& cfg,
                                          const HarnessOptions& opt) {
  if (cfg.manifold != "circle" && cfg.manifold != "tractrix")
    throw ConfigError("toy regression runs on circle or tractrix");
  fs::create_directories(cfg.out_dir);
  ManifestIo io(cfg);

  const std::vector<std::uint64_t> seeds = cfg.resolved_seeds();
  std::vector<RunRecord> results(seeds.size());

  parallel_for(opt.jobs, static_cast<int>(seeds.size()), [&](int i) {
    RunRecord probe;
    probe.seed_index = i;
    probe.seed = seeds[static_cast<std::size_t>(i)];
    probe.manifold = cfg.manifold;
    if (auto done = io.completed(probe.key(), opt.force)) {
      results[static_cast<std::size_t>(i)] = std::move(*done);
      return;
    }
    RegressionTask task = cfg.manifold == "circle" ? circle_task(cfg.noise_sigma)
                                                   : tractrix_task(cfg.noise_sigma);
    task.amplitude = cfg.amplitude;
    task.frequency = cfg.resolved_frequency(cfg.manifold);
    RunRecord rec;
    try {
      Network net = Network::init_random(cfg.arch, probe.seed);
      rec = run_tracked(std::move(net), task, cfg, i, probe.seed, seed_tag(i));
    } catch (const std::exception& e) {
      rec.seed_index = i;
      rec.seed = probe.seed;
      rec.failed = true;
      rec.error = e.what();
    }
    rec.manifold = cfg.manifold;
    io.store(rec);
    results[static_cast<std::size_t>(i)] = std::move(rec);
  });

  for (const auto& rec : results) {
    if (rec.failed) continue;
    auto out = open_out(fs::path(cfg.out_dir) / (seed_tag(rec.seed_index) + "_regions.csv"));
    write_region_trace_csv(rec, out);
  }
  auto agg = open_out(fs::path(cfg.out_dir) / "aggregate_regions.csv");
  write_aggregate_csv(results, agg);
  return results;
}

std::vector<RunRecord> run_dim_sweep(const ExperimentConfig& cfg, const HarnessOptions& opt) {
  fs::create_directories(cfg.out_dir);
  ManifestIo io(cfg);
  const std::vector<std::uint64_t> seeds = cfg.resolved_seeds();

  struct Job {
    int dim;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (int dim : cfg.dims)
    for (std::size_t i = 0; i < seeds.size(); ++i) jobs.push_back({dim, static_cast<int>(i)});
  std::vector<RunRecord> results(jobs.size());

  parallel_for(opt.jobs, static_cast<int>(jobs.size()), [&](int j) {
    const Job job = jobs[static_cast<std::size_t>(j)];
    const std::uint64_t seed = seeds[static_cast<std::size_t>(job.seed_index)];
    RunRecord probe;
    probe.seed_index = job.seed_index;
    probe.seed = seed;
    probe.dim = job.dim;
    probe.manifold = "embedded_circle";
    if (auto done = io.completed(probe.key(), opt.force)) {
      results[static_cast<std::size_t>(j)] = std::move(*done);
      return;
    }
    RunRecord rec;
    try {
      // Same target as the circle task, embedded in R^dim under a random
      // orthonormal basis; architecture keeps the hidden stack fixed.
      RegressionTask task;
      task.curve = manifold_curve("embedded_circle", job.dim,
                                  derive_seed(seed, "dim/" + std::to_string(job.dim)));
      task.amplitude = cfg.amplitude;
      task.frequency = cfg.resolved_frequency("circle");
      task.noise_sigma = cfg.noise_sigma;
      std::vector<int> arch;
      arch.push_back(job.dim);
      arch.insert(arch.end(), cfg.hidden.begin(), cfg.hidden.end());
      arch.push_back(1);
      Network net = Network::init_random(arch, seed);
      char stem[48];
      std::snprintf(stem, sizeof(stem), "dim%03d_%s", job.dim,
                    seed_tag(job.seed_index).c_str());
      rec = run_tracked(std::move(net), task, cfg, job.seed_index, seed, stem);
    } catch (const std::exception& e) {
      rec.seed_index = job.seed_index;
      rec.seed = seed;
      rec.failed = true;
      rec.error = e.what();
    }
    rec.dim = job.dim;
    rec.manifold = "embedded_circle";
    io.store(rec);
    results[static_cast<std::size_t>(j)] = std::move(rec);
  });

  auto out = open_out(fs::path(cfg.out_dir) / "dim_sweep.csv");
  out << "n_in,seed_index,epoch,region_count,mean_distance,mean_distance_normalized\n";
  for (const auto& rec : results) {
    if (rec.failed) continue;
    for (const auto& s : rec.trace)
      out << rec.dim << ',' << rec.seed_index << ',' << s.epoch << ',' << s.region_count << ','
          << format_double(s.mean_distance) << ',' << format_double(s.mean_distance_normalized)
          << '\n';
  }

  auto agg = open_out(fs::path(cfg.out_dir) / "dim_aggregate.csv");
  agg << "n_in,n_seeds,mean_region_count,mean_distance\n";
  for (int dim : cfg.dims) {
    double counts = 0.0, dists = 0.0;
    int n = 0;
    for (const auto& rec : results) {
      if (rec.failed || rec.dim != dim || rec.trace.empty()) continue;
      counts += static_cast<double>(rec.trace.back().region_count);
      dists += rec.trace.back().mean_distance;
      ++n;
    }
    if (n == 0) continue;
    agg << dim << ',' << n << ',' << format_double(counts / n) << ','
        << format_double(dists / n) << '\n';
  }
  return results;
}

std::vector<RunRecord> run_arch_sweep(const ExperimentConfig& cfg, const HarnessOptions& opt) {
  fs::create_directories(cfg.out_dir);
  ManifestIo io(cfg);
  const std::vector<std::uint64_t> seeds = cfg.resolved_seeds();

  struct Job {
    std::vector<int> arch;  // full widths
    std::string manifold;
    int seed_index;
  };
  std::vector<Job> jobs;
  for (const auto& hidden : cfg.archs)
    for (const auto& manifold : cfg.manifolds)
      for (std::size_t i = 0; i < seeds.size(); ++i) {
        std::vector<int> arch;
        arch.push_back(2);
        arch.insert(arch.end(), hidden.begin(), hidden.end());
        arch.push_back(1);
        jobs.push_back({std::move(arch), manifold, static_cast<int>(i)});
      }
  std::vector<RunRecord> results(jobs.size());

  parallel_for(opt.jobs, static_cast<int>(jobs.size()), [&](int j) {
    const Job& job = jobs[static_cast<std::size_t>(j)];
    const std::uint64_t seed = seeds[static_cast<std::size_t>(job.seed_index)];
    RunRecord probe;
    probe.seed_index = job.seed_index;
    probe.seed = seed;
    probe.manifold = job.manifold;
    probe.arch_label = arch_label_of(job.arch);
    if (auto done = io.completed(probe.key(), opt.force)) {
      results[static_cast<std::size_t>(j)] = std::move(*done);
      return;
    }
    RunRecord rec;
    try {
      RegressionTask task = job.manifold == "circle" ? circle_task(cfg.noise_sigma)
                                                     : tractrix_task(cfg.noise_sigma);
      task.amplitude = cfg.amplitude;
      task.frequency = cfg.resolved_frequency(job.manifold);
      Network net = Network::init_random(job.arch, seed);
      rec = run_tracked(std::move(net), task, cfg, job.seed_index, seed,
                        probe.manifold + "_" + probe.arch_label + "_" +
                            seed_tag(job.seed_index));
    } catch (const std::exception& e) {
      rec.seed_index = job.seed_index;
      rec.seed = seed;
      rec.failed = true;
      rec.error = e.what();
    }
    rec.manifold = job.manifold;
    rec.arch_label = probe.arch_label;
    rec.neurons = hidden_neurons_of(job.arch);
    io.store(rec);
    results[static_cast<std::size_t>(j)] = std::move(rec);
  });

  auto out = open_out(fs::path(cfg.out_dir) / "arch_sweep.csv");
  out << "manifold,arch,neurons,seed_index,epoch,region_count,count_per_neuron\n";
  for (const auto& rec : results) {
    if (rec.failed) continue;
    for (const auto& s : rec.trace)
      out << rec.manifold << ',' << rec.arch_label << ',' << rec.neurons << ','
          << rec.seed_index << ',' << s.epoch << ',' << s.region_count << ','
          << format_double(static_cast<double>(s.region_count) /
                           static_cast<double>(rec.neurons))
          << '\n';
  }
  return results;
}

std::vector<SweepRow> run_theory_sweep(const ExperimentConfig& cfg) {
  fs::create_directories(cfg.out_dir);
  std::vector<SweepRow> rows = supremum_sweep(cfg.n_lo, cfg.n_hi);
  auto out = open_out(fs::path(cfg.out_dir) / "theory_sweep.csv");
  write_sweep_csv(rows, out);
  return rows;
}

ManifoldCompareResult run_manifold_compare(const ExperimentConfig& cfg,
                                           const HarnessOptions& opt) {
  fs::create_directories(cfg.out_dir);
  const std::uint64_t master = cfg.master_seed;

  Decoder decoder = make_decoder(cfg.latent_dim, cfg.ambient_dim, cfg.decoder_hidden,
                                 derive_seed(master, "decoder"));

  // Training set: decoded standard-normal latents, standardized per
  // coordinate. The classifier sees the normalized space, so curves are
  // built there too.
  Rng latents(derive_seed(master, "train-latents"));
  std::vector<Eigen::VectorXd> raw;
  raw.reserve(static_cast<std::size_t>(cfg.n_train_points));
  for (int i = 0; i < cfg.n_train_points; ++i) {
    Eigen::VectorXd z(cfg.latent_dim);
    for (int k = 0; k < cfg.latent_dim; ++k) z(k) = latents.normal();
    raw.push_back(decoder.decode(z));
  }
  Normalizer norm = Normalizer::fit(raw);
  std::vector<Eigen::VectorXd> inputs;
  inputs.reserve(raw.size());
  for (const auto& x : raw) inputs.push_back(norm.apply(x));

  std::vector<int> classifier_arch;
  classifier_arch.push_back(cfg.ambient_dim);
  classifier_arch.insert(classifier_arch.end(), cfg.classifier_hidden.begin(),
                         cfg.classifier_hidden.end());
  classifier_arch.push_back(1);
  Network initial = Network::init_random(classifier_arch, derive_seed(master, "classifier"));

  OptimizerConfig topt = cfg.optimizer;
  topt.epochs = cfg.epochs;
  topt.seed = derive_seed(master, "classifier-train");
  TrainResult trained =
      train_classifier_random_labels(initial, inputs, derive_seed(master, "labels"), topt);

  ManifoldCompareResult result;
  result.final_train_accuracy =
      trained.log.train_acc.empty() ? trained.log.initial_train_acc
                                    : trained.log.train_acc.back();

  const CountConfig cc = cfg.counting.to_count_config();
  result.pairs.resize(static_cast<std::size_t>(cfg.n_pairs));
  parallel_for(opt.jobs, cfg.n_pairs, [&](int i) {
    std::uint64_t pair_seed = derive_seed(master, "pair/" + std::to_string(i));
    CurvePair pair = make_curve_pair(decoder, pair_seed, cfg.segments, &norm);
    PairComparison cmp;
    cmp.pair_index = i;
    cmp.pair_seed = pair_seed;
    cmp.baseline = compare_density(initial, pair, cc);
    cmp.trained = compare_density(trained.net, pair, cc);
    result.pairs[static_cast<std::size_t>(i)] = std::move(cmp);

    if (cfg.export_curves) {
      char name[64];
      std::snprintf(name, sizeof(name), "pair%03d_on.curve", i);
      auto on = open_out(fs::path(cfg.out_dir) / name);
      pair.on_manifold.write_polyline(on);
      std::snprintf(name, sizeof(name), "pair%03d_off.curve", i);
      auto off = open_out(fs::path(cfg.out_dir) / name);
      pair.off_manifold.write_polyline(off);
    }
  });

  double sum_on = 0.0, sum_off = 0.0;
  for (const auto& p : result.pairs) {
    if (p.trained.flagged) continue;
    ++result.unflagged;
    sum_on += p.trained.log_density_on;
    sum_off += p.trained.log_density_off;
    if (p.trained.log_density_on < p.trained.log_density_off) ++result.on_lower;
  }
  if (result.unflagged > 0) {
    result.mean_log_on = sum_on / result.unflagged;
    result.mean_log_off = sum_off / result.unflagged;
  }
  result.sign_test_p = binomial_sign_test_p(result.on_lower, result.unflagged);

  auto out = open_out(fs::path(cfg.out_dir) / "pairs.csv");
  out << "pair,phase,log_density_on,log_density_off,regions_on,regions_off,arclength_on,"
         "arclength_off,flagged\n";
  for (const auto& p : result.pairs) {
    auto row = [&](const char* phase, const DensityComparison& d) {
      out << p.pair_index << ',' << phase << ',' << format_double(d.log_density_on) << ','
          << format_double(d.log_density_off) << ',' << d.regions_on << ',' << d.regions_off
          << ',' << format_double(d.arclength_on) << ',' << format_double(d.arclength_off)
          << ',' << (d.flagged ? 1 : 0) << '\n';
    };
    row("init", p.baseline);
    row("trained", p.trained);
  }

  json manifest;
  manifest["master_seed"] = std::to_string(master);
  manifest["decoder_seed"] = std::to_string(derive_seed(master, "decoder"));
  manifest["label_seed"] = std::to_string(derive_seed(master, "labels"));
  json pair_seeds = json::array();
  for (const auto& p : result.pairs) pair_seeds.push_back(std::to_string(p.pair_seed));
  manifest["pair_seeds"] = std::move(pair_seeds);
  manifest["final_train_accuracy"] = result.final_train_accuracy;
  auto mf = open_out(fs::path(cfg.out_dir) / "compare_manifest.json");
  mf << manifest.dump(1) << '\n';

  return result;
}

}  // namespace relugeo
