#pragma once

#include "relugeo/curve.hpp"
#include "relugeo/network.hpp"

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace relugeo {

struct CountConfig {
  /// Number of grid points; 0 means auto: grid_per_unit scaled by the
  /// domain length, minimum 2.
  int grid_n = 0;
  double grid_per_unit = 4096.0;
  /// Bisection stops when the bracket width is <= refine_tol.
  double refine_tol = 1e-10;
  /// Boundary points within merge_tol of each other count as one region cut.
  double merge_tol = 1e-8;

  int resolved_grid(const Curve& curve) const;
};

/// A parameter value where some neuron's preactivation equals its bias.
struct BoundaryPoint {
  double t_star = 0.0;
  NeuronId neuron;
  double residual = 0.0;  // |preactivation - bias| at convergence
};

struct RegionReport {
  std::vector<BoundaryPoint> boundary_points;  // sorted by t_star
  std::vector<double> cuts;                    // distinct merged t* values, sorted
  long crossings_total = 0;
  long region_count = 1;
  double curve_arclength = 0.0;
  double density_per_arclength = 0.0;  // (region_count - 1) / curve_arclength
  std::vector<long> per_neuron_crossings;  // flat neuron order
};

/// All solutions of preactivation(eval(t)) == bias for one neuron: sign
/// changes of g on a uniform grid are bracketed and refined by bisection.
/// Tangential contacts that do not change sign are not detected; under a
/// bias density that is a probability-zero event.
std::vector<double> neuron_boundaries(const Network& net, const Curve& curve, NeuronId z,
                                      const CountConfig& cfg = {});

/// Boundary crossings of every hidden neuron, merged into region cuts.
/// Coincident crossings of different neurons count once toward
/// region_count but each appears in crossings_total.
RegionReport count_regions(const Network& net, const Curve& curve,
                           const CountConfig& cfg = {});

/// Independent oracle: activation patterns at sample_n uniform parameters;
/// 1 + number of adjacent pattern changes.
long brute_force_count(const Network& net, const Curve& curve, long sample_n);

/// min over hidden neurons of |preactivation - bias| / ||grad||. Neurons
/// with zero gradient norm are skipped; +inf when every gradient vanishes.
double boundary_distance_ambient(const Network& net, const Eigen::VectorXd& x);

/// Arclength from t to the nearest region cut; with no cuts, arclength to
/// the nearer domain endpoint.
double boundary_distance_on_curve(const RegionReport& report, const Curve& curve, double t);

struct DistanceStats {
  double mean = 0.0;
  double stddev = 0.0;
  double normalized_mean = 0.0;  // mean of d / max(d) over the sample batch
  double max_distance = 0.0;
  int sample_n = 0;
  bool endpoint_fallback = false;  // report had no cuts
};

DistanceStats distance_statistics(const RegionReport& report, const Curve& curve,
                                  int sample_n, std::uint64_t seed, bool normalize = true);

/// Pure CSV export: columns t_star,layer,index,residual.
void write_boundary_csv(const RegionReport& report, std::ostream& out);

/// Structured text document: '#'-prefixed summary fields followed by the
/// sorted boundary rows.
void write_region_report(const RegionReport& report, std::ostream& out);

}  // namespace relugeo
