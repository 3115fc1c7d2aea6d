#pragma once

#include "relugeo/curve.hpp"

#include <Eigen/Dense>

#include <iosfwd>
#include <vector>

namespace relugeo {

/// Orthonormal frame of a 1-D manifold at a point: a single unit tangent.
struct TangentFrame {
  Eigen::VectorXd point;
  Eigen::VectorXd unit_tangent;
};

/// Frame at parameter t; throws std::domain_error where the curve has zero
/// speed (the tractrix cusp at t = 0).
TangentFrame tangent_frame(const Curve& curve, double t);

struct TangentProjection {
  double component = 0.0;        // signed coordinate along the tangent
  Eigen::VectorXd projection;    // component * unit_tangent
};

TangentProjection tangent_project(const TangentFrame& frame, const Eigen::VectorXd& v);

/// sqrt(det(Gram(v_1, ..., v_k))): the volume distortion of the map whose
/// tangent-projected gradients are v_i. Tiny negative determinants (down to
/// -1e-12) are clamped to zero; anything lower throws.
double gram_jacobian(const std::vector<Eigen::VectorXd>& vectors);

/// p(zeta) = zeta * (1 - sum_{k=n_in-m}^{n_in} zeta^k) on (0, 1).
struct PolynomialSpec {
  int n_in = 2;
  int m = 1;
};

double simplified_polynomial(const PolynomialSpec& spec, double zeta);
double simplified_polynomial_derivative(const PolynomialSpec& spec, double zeta);

struct SupremumResult {
  double zeta_star = 0.0;
  double value = 0.0;
};

/// Maximizes the simplified polynomial over (0, 1). A Brent bounded search
/// finds the neighborhood; because the stationarity condition has all
/// positive coefficients the interior maximizer is unique, and a bisection
/// on the analytic derivative pins it to machine precision.
SupremumResult polynomial_supremum(const PolynomialSpec& spec);

struct SweepRow {
  int n_in = 0;
  int m = 0;
  double zeta_star = 0.0;
  double p_star = 0.0;
};

/// Full (n_in, m) grid with n_in in [n_lo, n_hi] and m in [1, n_in - 1],
/// in deterministic (n_in, m) order.
std::vector<SweepRow> supremum_sweep(int n_lo, int n_hi);

/// Checks the sweep's two monotonicity laws: p* strictly decreases in m at
/// fixed n_in and strictly increases in n_in at fixed m.
bool sweep_is_monotone(const std::vector<SweepRow>& rows);

/// CSV columns n_in,m,zeta_star,p_star.
void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out);

}  // namespace relugeo
