#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <iosfwd>
#include <vector>

namespace relugeo {

enum class CurveKind { circle, tractrix, embedded_circle, polyline, chord };

/// Parametric 1-D curve embedded in R^n. Immutable value object; all
/// operations are pure and reentrant.
///
/// Parametrizations:
///   circle            t in (-pi, pi)  -> (cos t, sin t)
///   tractrix          t in (-3, 3)    -> (t - tanh t, sech t)
///   embedded_circle   t in (-pi, pi)  -> cos(t) u + sin(t) v, u,v orthonormal
///   polyline          t in [0, 1], K segments, i = floor(K t) clamped
///   chord             t in [0, 1]     -> (1-t) p + t q
class Curve {
 public:
  /// Default-constructed curves are the unit circle.
  Curve() = default;

  static Curve circle();
  static Curve tractrix();
  static Curve embedded_circle(Eigen::VectorXd u, Eigen::VectorXd v);
  /// Two i.i.d. standard normal draws, Gram-Schmidt orthonormalized;
  /// numerically parallel draws are redrawn.
  static Curve random_embedded_circle(int ambient_dim, std::uint64_t seed);
  static Curve polyline(std::vector<Eigen::VectorXd> vertices);
  static Curve chord(Eigen::VectorXd p, Eigen::VectorXd q);

  CurveKind kind() const { return kind_; }
  int ambient_dim() const { return ambient_dim_; }
  double t_lo() const { return t_lo_; }
  double t_hi() const { return t_hi_; }
  double domain_length() const { return t_hi_ - t_lo_; }
  /// Polyline: K; chord: 1; analytic curves: 0.
  int segment_count() const;

  Eigen::VectorXd eval(double t) const;

  struct Velocity {
    Eigen::VectorXd v;
    /// Polyline only: t was a vertex parameter, so v is the right-hand
    /// derivative.
    bool at_vertex = false;
  };
  Velocity velocity(double t) const;

  /// Arclength between parameters (t0 <= t1). Polylines and chords are
  /// summed exactly segment-wise; analytic curves use adaptive quadrature
  /// of the speed to absolute tolerance 1e-10.
  double arclength(double t0, double t1) const;

  const std::vector<Eigen::VectorXd>& vertices() const { return vertices_; }
  const Eigen::VectorXd& basis_u() const { return u_; }
  const Eigen::VectorXd& basis_v() const { return v_; }

  /// Polyline text format: optional first line "dim=<n>,K=<segments>",
  /// then one comma-separated vertex per line.
  static Curve read_polyline(std::istream& in);
  void write_polyline(std::ostream& out) const;  // polyline or chord

 private:
  void check_domain(double t) const;

  CurveKind kind_ = CurveKind::circle;
  int ambient_dim_ = 2;
  double t_lo_ = -3.14159265358979323846, t_hi_ = 3.14159265358979323846;
  Eigen::VectorXd u_, v_;                  // embedded_circle basis
  std::vector<Eigen::VectorXd> vertices_;  // polyline (chord stores 2)
  std::vector<double> seg_lengths_;        // polyline cumulative helper
};

/// Regression target a*sin(nu*t) on a 1-D curve, observed with additive
/// Gaussian noise.
struct RegressionTask {
  Curve curve;
  double amplitude = 1.0;
  double frequency = 3.0;
  double noise_sigma = 0.1;

  double target(double t) const;
};

/// nu = 3 on (-pi, pi): three peaks and three troughs.
RegressionTask circle_task(double noise_sigma = 0.1);
/// nu = pi on (-3, 3): also six extrema, matching the circle task.
RegressionTask tractrix_task(double noise_sigma = 0.1);

struct Dataset {
  std::vector<Eigen::VectorXd> x;
  std::vector<double> y;
  std::size_t size() const { return x.size(); }
};

/// n_points uniform parameter draws; y = target(t) + N(0, sigma^2).
Dataset sample_dataset(const RegressionTask& task, int n_points, std::uint64_t seed);

}  // namespace relugeo
