#include "relugeo/regions.hpp"

#include "relugeo/csv.hpp"
#include "relugeo/numerics.hpp"
#include "relugeo/rng.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>
#include <stdexcept>

namespace relugeo {

namespace {

/// g(t) = preactivation(eval(t)) - bias for one neuron, with reusable
/// forward scratch.
struct NeuronGap {
  const Network& net;
  const Curve& curve;
  NeuronId z;
  double b;
  ForwardTrace trace;

  double operator()(double t) {
    net.forward_trace(curve.eval(t), trace, z.layer);
    return trace.preact[static_cast<std::size_t>(z.layer - 1)](z.index) - b;
  }
};

std::vector<double> make_grid(const Curve& curve, int n) {
  std::vector<double> ts(static_cast<std::size_t>(n));
  const double lo = curve.t_lo();
  const double step = curve.domain_length() / static_cast<double>(n - 1);
  for (int i = 0; i < n; ++i) ts[static_cast<std::size_t>(i)] = lo + step * i;
  ts.back() = curve.t_hi();
  return ts;
}

/// Scans grid values of g for exact zeros and sign changes; refines each
/// bracket by bisection on `gap`. Roots are appended in ascending order.
/// An exact grid hit counts only when isolated: a plateau of zeros (e.g. a
/// neuron whose gap function vanishes identically) kinks nothing.
void scan_and_refine(const std::vector<double>& ts, const double* g, NeuronGap& gap,
                     double refine_tol, std::vector<BoundaryPoint>& out) {
  const std::size_t n = ts.size();
  for (std::size_t i = 0; i < n; ++i) {
    if (g[i] == 0.0) {
      bool left_zero = i > 0 && g[i - 1] == 0.0;
      bool right_zero = i + 1 < n && g[i + 1] == 0.0;
      if (!left_zero && !right_zero) out.push_back({ts[i], gap.z, 0.0});
      continue;
    }
    if (i + 1 < n && g[i + 1] != 0.0 && (g[i] < 0.0) != (g[i + 1] < 0.0)) {
      double root = bisect_refine(gap, ts[i], g[i], ts[i + 1], g[i + 1], refine_tol);
      out.push_back({root, gap.z, std::abs(gap(root))});
    }
  }
}

}  // namespace

int CountConfig::resolved_grid(const Curve& curve) const {
  if (grid_n > 0) {
    if (grid_n < 2) throw std::invalid_argument("grid_n must be >= 2");
    return grid_n;
  }
  double n = std::ceil(grid_per_unit * curve.domain_length());
  return std::max(2, static_cast<int>(n));
}

std::vector<double> neuron_boundaries(const Network& net, const Curve& curve, NeuronId z,
                                      const CountConfig& cfg) {
  if (curve.ambient_dim() != net.input_dim())
    throw std::invalid_argument("curve ambient dimension does not match network input");
  if (cfg.refine_tol <= 0.0) throw std::invalid_argument("refine_tol must be positive");
  const int n = cfg.resolved_grid(curve);
  const std::vector<double> ts = make_grid(curve, n);

  NeuronGap gap{net, curve, z, net.neuron_bias(z), {}};
  std::vector<double> g(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) g[static_cast<std::size_t>(i)] = gap(ts[static_cast<std::size_t>(i)]);

  std::vector<BoundaryPoint> points;
  scan_and_refine(ts, g.data(), gap, cfg.refine_tol, points);
  std::vector<double> roots;
  roots.reserve(points.size());
  for (const auto& p : points) roots.push_back(p.t_star);
  return roots;
}

RegionReport count_regions(const Network& net, const Curve& curve, const CountConfig& cfg) {
  if (curve.ambient_dim() != net.input_dim())
    throw std::invalid_argument("curve ambient dimension does not match network input");
  if (cfg.refine_tol <= 0.0 || cfg.merge_tol <= cfg.refine_tol)
    throw std::invalid_argument("need merge_tol > refine_tol > 0");
  const int n = cfg.resolved_grid(curve);
  const int neurons = net.hidden_neuron_count();
  const int hl = net.hidden_layer_count();
  const std::vector<double> ts = make_grid(curve, n);

  // One forward pass per grid point fills the gap values of every neuron.
  std::vector<double> values(static_cast<std::size_t>(neurons) * static_cast<std::size_t>(n));
  ForwardTrace trace;
  for (int i = 0; i < n; ++i) {
    net.forward_trace(curve.eval(ts[static_cast<std::size_t>(i)]), trace, hl);
    std::size_t flat = 0;
    for (int l = 1; l <= hl; ++l) {
      const auto& pre = trace.preact[static_cast<std::size_t>(l - 1)];
      const auto& b = net.bias(l);
      for (int j = 0; j < pre.size(); ++j, ++flat)
        values[flat * static_cast<std::size_t>(n) + static_cast<std::size_t>(i)] =
            pre(j) - b(j);
    }
  }

  RegionReport report;
  report.per_neuron_crossings.assign(static_cast<std::size_t>(neurons), 0);
  for (int flat = 0; flat < neurons; ++flat) {
    NeuronId z = net.neuron_at(flat);
    NeuronGap gap{net, curve, z, net.neuron_bias(z), {}};
    std::size_t before = report.boundary_points.size();
    scan_and_refine(ts, values.data() + static_cast<std::size_t>(flat) * static_cast<std::size_t>(n),
                    gap, cfg.refine_tol, report.boundary_points);
    report.per_neuron_crossings[static_cast<std::size_t>(flat)] =
        static_cast<long>(report.boundary_points.size() - before);
  }

  std::stable_sort(report.boundary_points.begin(), report.boundary_points.end(),
                   [](const BoundaryPoint& a, const BoundaryPoint& b) {
                     return a.t_star < b.t_star;
                   });
  report.crossings_total = static_cast<long>(report.boundary_points.size());

  // Chain-merge crossings within merge_tol into one cut; a region boundary
  // is one point of gradient discontinuity however many neurons kink there.
  std::size_t i = 0;
  while (i < report.boundary_points.size()) {
    std::size_t j = i + 1;
    double sum = report.boundary_points[i].t_star;
    while (j < report.boundary_points.size() &&
           report.boundary_points[j].t_star - report.boundary_points[j - 1].t_star <=
               cfg.merge_tol) {
      sum += report.boundary_points[j].t_star;
      ++j;
    }
    report.cuts.push_back(sum / static_cast<double>(j - i));
    i = j;
  }

  report.region_count = static_cast<long>(report.cuts.size()) + 1;
  report.curve_arclength = curve.arclength(curve.t_lo(), curve.t_hi());
  report.density_per_arclength =
      static_cast<double>(report.region_count - 1) / report.curve_arclength;
  return report;
}

long brute_force_count(const Network& net, const Curve& curve, long sample_n) {
  if (sample_n < 2) throw std::invalid_argument("brute_force_count: sample_n >= 2 required");
  if (curve.ambient_dim() != net.input_dim())
    throw std::invalid_argument("curve ambient dimension does not match network input");
  const double lo = curve.t_lo();
  const double step = curve.domain_length() / static_cast<double>(sample_n - 1);
  ForwardTrace trace;
  ActivationPattern prev, cur;
  long regions = 1;
  for (long i = 0; i < sample_n; ++i) {
    double t = (i + 1 == sample_n) ? curve.t_hi() : lo + step * static_cast<double>(i);
    net.activation_pattern(curve.eval(t), trace, cur);
    if (i > 0 && !(cur == prev)) ++regions;
    std::swap(prev, cur);
  }
  return regions;
}

double boundary_distance_ambient(const Network& net, const Eigen::VectorXd& x) {
  double best = std::numeric_limits<double>::infinity();
  for (int flat = 0; flat < net.hidden_neuron_count(); ++flat) {
    NeuronId z = net.neuron_at(flat);
    double gap = net.preactivation(x, z) - net.neuron_bias(z);
    double norm = net.input_gradient(x, z).grad.norm();
    if (norm == 0.0) continue;  // flat neuron bounds no nearby region
    best = std::min(best, std::abs(gap) / norm);
  }
  return best;
}

double boundary_distance_on_curve(const RegionReport& report, const Curve& curve, double t) {
  const auto& cuts = report.cuts;
  if (cuts.empty()) {
    return std::min(curve.arclength(curve.t_lo(), t), curve.arclength(t, curve.t_hi()));
  }
  auto it = std::lower_bound(cuts.begin(), cuts.end(), t);
  double best = std::numeric_limits<double>::infinity();
  if (it != cuts.end()) best = std::min(best, curve.arclength(t, std::max(t, *it)));
  if (it != cuts.begin()) {
    double left = *(it - 1);
    best = std::min(best, curve.arclength(std::min(t, left), t));
  }
  return best;
}

DistanceStats distance_statistics(const RegionReport& report, const Curve& curve,
                                  int sample_n, std::uint64_t seed, bool normalize) {
  if (sample_n < 1) throw std::invalid_argument("distance_statistics: sample_n >= 1 required");
  Rng rng(derive_seed(seed, "distance-samples"));
  std::vector<double> d(static_cast<std::size_t>(sample_n));
  for (auto& di : d) {
    double t = rng.uniform(curve.t_lo(), curve.t_hi());
    di = boundary_distance_on_curve(report, curve, t);
  }
  DistanceStats stats;
  stats.sample_n = sample_n;
  stats.endpoint_fallback = report.cuts.empty();
  double sum = 0.0, max = 0.0;
  for (double di : d) {
    sum += di;
    max = std::max(max, di);
  }
  stats.mean = sum / static_cast<double>(sample_n);
  stats.max_distance = max;
  double ss = 0.0;
  for (double di : d) ss += (di - stats.mean) * (di - stats.mean);
  stats.stddev = sample_n > 1 ? std::sqrt(ss / static_cast<double>(sample_n - 1)) : 0.0;
  if (normalize) stats.normalized_mean = max > 0.0 ? stats.mean / max : 0.0;
  return stats;
}

void write_boundary_csv(const RegionReport& report, std::ostream& out) {
  out << "t_star,layer,index,residual\n";
  for (const auto& p : report.boundary_points)
    out << format_double(p.t_star) << ',' << p.neuron.layer << ',' << p.neuron.index << ','
        << format_double(p.residual) << '\n';
}

void write_region_report(const RegionReport& report, std::ostream& out) {
  out << "# linear region report\n";
  out << "# region_count " << report.region_count << '\n';
  out << "# crossings_total " << report.crossings_total << '\n';
  out << "# curve_arclength " << format_double(report.curve_arclength) << '\n';
  out << "# density_per_arclength " << format_double(report.density_per_arclength) << '\n';
  write_boundary_csv(report, out);
}

}  // namespace relugeo
