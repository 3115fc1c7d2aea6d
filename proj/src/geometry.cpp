#include "relugeo/geometry.hpp"

#include "relugeo/csv.hpp"
#include "relugeo/numerics.hpp"

#include <cmath>
#include <map>
#include <ostream>
#include <stdexcept>

namespace relugeo {

TangentFrame tangent_frame(const Curve& curve, double t) {
  Eigen::VectorXd v = curve.velocity(t).v;
  double speed = v.norm();
  if (speed < 1e-14)
    throw std::domain_error("tangent_frame: curve has zero speed at this parameter");
  return {curve.eval(t), v / speed};
}

TangentProjection tangent_project(const TangentFrame& frame, const Eigen::VectorXd& v) {
  if (v.size() != frame.unit_tangent.size())
    throw std::invalid_argument("tangent_project: dimension mismatch");
  TangentProjection out;
  out.component = frame.unit_tangent.dot(v);
  out.projection = out.component * frame.unit_tangent;
  return out;
}

double gram_jacobian(const std::vector<Eigen::VectorXd>& vectors) {
  if (vectors.empty()) throw std::invalid_argument("gram_jacobian: need at least one vector");
  const auto k = static_cast<Eigen::Index>(vectors.size());
  const auto dim = vectors.front().size();
  for (const auto& v : vectors)
    if (v.size() != dim) throw std::invalid_argument("gram_jacobian: mixed dimensions");
  Eigen::MatrixXd gram(k, k);
  for (Eigen::Index i = 0; i < k; ++i)
    for (Eigen::Index j = i; j < k; ++j)
      gram(i, j) = gram(j, i) = vectors[static_cast<std::size_t>(i)].dot(
          vectors[static_cast<std::size_t>(j)]);
  double det = k == 1 ? gram(0, 0) : gram.determinant();
  if (det < 0.0) {
    if (det < -1e-12) throw std::runtime_error("gram_jacobian: determinant below -1e-12");
    det = 0.0;
  }
  return std::sqrt(det);
}

namespace {

void check_spec(const PolynomialSpec& spec) {
  if (spec.n_in < 2 || spec.m < 1 || spec.m > spec.n_in - 1)
    throw std::invalid_argument("polynomial spec requires n_in >= 2 and 1 <= m <= n_in - 1");
}

}  // namespace

double simplified_polynomial(const PolynomialSpec& spec, double zeta) {
  check_spec(spec);
  double sum = 0.0;
  double pw = std::pow(zeta, spec.n_in - spec.m);
  for (int k = spec.n_in - spec.m; k <= spec.n_in; ++k) {
    sum += pw;
    pw *= zeta;
  }
  return zeta * (1.0 - sum);
}

double simplified_polynomial_derivative(const PolynomialSpec& spec, double zeta) {
  check_spec(spec);
  // p(z) = z - sum z^{k+1}  =>  p'(z) = 1 - sum (k+1) z^k
  double sum = 0.0;
  double pw = std::pow(zeta, spec.n_in - spec.m);
  for (int k = spec.n_in - spec.m; k <= spec.n_in; ++k) {
    sum += static_cast<double>(k + 1) * pw;
    pw *= zeta;
  }
  return 1.0 - sum;
}

SupremumResult polynomial_supremum(const PolynomialSpec& spec) {
  check_spec(spec);
  const double lo = 1e-12, hi = 1.0 - 1e-12;
  auto neg = [&](double z) { return -simplified_polynomial(spec, z); };
  BrentMinResult brent = brent_min(neg, lo, hi, 1e-10);

  // Polish: p' is strictly decreasing with p'(0+) = 1 and p'(1-) < 0, so
  // bisecting the derivative around the Brent estimate recovers the
  // quadratic digits a value-only search cannot resolve.
  auto dp = [&](double z) { return simplified_polynomial_derivative(spec, z); };
  double a = std::max(lo, brent.x - 1e-6);
  double b = std::min(hi, brent.x + 1e-6);
  if (!(dp(a) > 0.0 && dp(b) < 0.0)) {
    a = lo;
    b = hi;
  }
  double zs = bisect_refine(dp, a, dp(a), b, dp(b), 1e-15);
  return {zs, simplified_polynomial(spec, zs)};
}

std::vector<SweepRow> supremum_sweep(int n_lo, int n_hi) {
  if (n_lo < 2 || n_hi < n_lo) throw std::invalid_argument("supremum_sweep: bad range");
  std::vector<SweepRow> rows;
  for (int n = n_lo; n <= n_hi; ++n)
    for (int m = 1; m <= n - 1; ++m) {
      SupremumResult r = polynomial_supremum({n, m});
      rows.push_back({n, m, r.zeta_star, r.value});
    }
  return rows;
}

bool sweep_is_monotone(const std::vector<SweepRow>& rows) {
  std::map<std::pair<int, int>, double> table;
  for (const auto& r : rows) table[{r.n_in, r.m}] = r.p_star;
  for (const auto& [key, p] : table) {
    auto [n, m] = key;
    if (auto it = table.find({n, m + 1}); it != table.end() && !(it->second < p)) return false;
    if (auto it = table.find({n + 1, m}); it != table.end() && !(it->second > p)) return false;
  }
  return true;
}

void write_sweep_csv(const std::vector<SweepRow>& rows, std::ostream& out) {
  out << "n_in,m,zeta_star,p_star\n";
  for (const auto& r : rows)
    out << r.n_in << ',' << r.m << ',' << format_double(r.zeta_star) << ','
        << format_double(r.p_star) << '\n';
}

}  // namespace relugeo
