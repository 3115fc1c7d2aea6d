#include "relugeo/curve.hpp"

#include "relugeo/numerics.hpp"
#include "relugeo/rng.hpp"

#include <cmath>
#include <cstdio>
#include <istream>
#include <ostream>
#include <sstream>
#include <stdexcept>

namespace relugeo {

namespace {
constexpr double kPi = 3.14159265358979323846;
}

Curve Curve::circle() {
  Curve c;
  c.kind_ = CurveKind::circle;
  c.ambient_dim_ = 2;
  c.t_lo_ = -kPi;
  c.t_hi_ = kPi;
  return c;
}

Curve Curve::tractrix() {
  Curve c;
  c.kind_ = CurveKind::tractrix;
  c.ambient_dim_ = 2;
  c.t_lo_ = -3.0;
  c.t_hi_ = 3.0;
  return c;
}

Curve Curve::embedded_circle(Eigen::VectorXd u, Eigen::VectorXd v) {
  if (u.size() != v.size() || u.size() < 2)
    throw std::invalid_argument("embedded_circle: basis vectors must share dimension >= 2");
  const double tol = 1e-12;
  if (std::abs(u.norm() - 1.0) > tol || std::abs(v.norm() - 1.0) > tol ||
      std::abs(u.dot(v)) > tol)
    throw std::invalid_argument("embedded_circle: basis must be orthonormal to 1e-12");
  Curve c;
  c.kind_ = CurveKind::embedded_circle;
  c.ambient_dim_ = static_cast<int>(u.size());
  c.t_lo_ = -kPi;
  c.t_hi_ = kPi;
  c.u_ = std::move(u);
  c.v_ = std::move(v);
  return c;
}

Curve Curve::random_embedded_circle(int ambient_dim, std::uint64_t seed) {
  if (ambient_dim < 2) throw std::invalid_argument("embedded circle needs ambient_dim >= 2");
  Rng rng(derive_seed(seed, "embedded-circle-basis"));
  for (int attempt = 0; attempt < 64; ++attempt) {
    Eigen::VectorXd a(ambient_dim), b(ambient_dim);
    for (int i = 0; i < ambient_dim; ++i) a(i) = rng.normal();
    for (int i = 0; i < ambient_dim; ++i) b(i) = rng.normal();
    if (a.norm() < 1e-12) continue;
    a.normalize();
    b -= a.dot(b) * a;
    if (b.norm() < 1e-12) continue;  // numerically parallel, redraw
    b.normalize();
    return embedded_circle(std::move(a), std::move(b));
  }
  throw std::runtime_error("random_embedded_circle: could not draw an orthonormal basis");
}

Curve Curve::polyline(std::vector<Eigen::VectorXd> vertices) {
  if (vertices.size() < 2) throw std::invalid_argument("polyline needs at least 2 vertices");
  const auto dim = vertices.front().size();
  if (dim < 1) throw std::invalid_argument("polyline vertices must be nonempty");
  for (const auto& p : vertices) {
    if (p.size() != dim) throw std::invalid_argument("polyline vertices must share dimension");
    if (!p.allFinite()) throw std::invalid_argument("polyline vertex not finite");
  }
  Curve c;
  c.kind_ = CurveKind::polyline;
  c.ambient_dim_ = static_cast<int>(dim);
  c.t_lo_ = 0.0;
  c.t_hi_ = 1.0;
  c.seg_lengths_.reserve(vertices.size() - 1);
  for (std::size_t i = 0; i + 1 < vertices.size(); ++i)
    c.seg_lengths_.push_back((vertices[i + 1] - vertices[i]).norm());
  c.vertices_ = std::move(vertices);
  return c;
}

Curve Curve::chord(Eigen::VectorXd p, Eigen::VectorXd q) {
  if (p.size() != q.size() || p.size() < 1)
    throw std::invalid_argument("chord endpoints must share dimension");
  Curve c;
  c.kind_ = CurveKind::chord;
  c.ambient_dim_ = static_cast<int>(p.size());
  c.t_lo_ = 0.0;
  c.t_hi_ = 1.0;
  c.seg_lengths_.push_back((q - p).norm());
  c.vertices_ = {std::move(p), std::move(q)};
  return c;
}

int Curve::segment_count() const {
  switch (kind_) {
    case CurveKind::polyline:
      return static_cast<int>(vertices_.size()) - 1;
    case CurveKind::chord:
      return 1;
    default:
      return 0;
  }
}

void Curve::check_domain(double t) const {
  if (!(t >= t_lo_ && t <= t_hi_))
    throw std::domain_error("curve parameter outside domain");
}

Eigen::VectorXd Curve::eval(double t) const {
  check_domain(t);
  switch (kind_) {
    case CurveKind::circle: {
      Eigen::VectorXd p(2);
      p << std::cos(t), std::sin(t);
      return p;
    }
    case CurveKind::tractrix: {
      Eigen::VectorXd p(2);
      p << t - std::tanh(t), 1.0 / std::cosh(t);
      return p;
    }
    case CurveKind::embedded_circle:
      return std::cos(t) * u_ + std::sin(t) * v_;
    case CurveKind::chord:
      return (1.0 - t) * vertices_[0] + t * vertices_[1];
    case CurveKind::polyline: {
      const int K = segment_count();
      int i = static_cast<int>(std::floor(static_cast<double>(K) * t));
      if (i >= K) i = K - 1;  // clamp at t = 1
      double s = static_cast<double>(K) * t - static_cast<double>(i);
      return (1.0 - s) * vertices_[static_cast<std::size_t>(i)] +
             s * vertices_[static_cast<std::size_t>(i) + 1];
    }
  }
  throw std::logic_error("unreachable");
}

Curve::Velocity Curve::velocity(double t) const {
  check_domain(t);
  Velocity out;
  switch (kind_) {
    case CurveKind::circle: {
      out.v.resize(2);
      out.v << -std::sin(t), std::cos(t);
      return out;
    }
    case CurveKind::tractrix: {
      const double th = std::tanh(t);
      const double sech = 1.0 / std::cosh(t);
      out.v.resize(2);
      out.v << th * th, -sech * th;
      return out;
    }
    case CurveKind::embedded_circle:
      out.v = -std::sin(t) * u_ + std::cos(t) * v_;
      return out;
    case CurveKind::chord:
      out.v = vertices_[1] - vertices_[0];
      return out;
    case CurveKind::polyline: {
      const int K = segment_count();
      const double scaled = static_cast<double>(K) * t;
      int i = static_cast<int>(std::floor(scaled));
      if (i >= K) {
        i = K - 1;
        out.at_vertex = true;  // t = 1: no right-hand segment, use the last
      } else if (scaled == std::floor(scaled)) {
        out.at_vertex = true;  // vertex parameter: right-hand derivative
      }
      out.v = static_cast<double>(K) * (vertices_[static_cast<std::size_t>(i) + 1] -
                                        vertices_[static_cast<std::size_t>(i)]);
      return out;
    }
  }
  throw std::logic_error("unreachable");
}

double Curve::arclength(double t0, double t1) const {
  check_domain(t0);
  check_domain(t1);
  if (t0 > t1) throw std::invalid_argument("arclength: t0 must be <= t1");
  if (t0 == t1) return 0.0;

  if (kind_ == CurveKind::chord) return seg_lengths_[0] * (t1 - t0);
  if (kind_ == CurveKind::polyline) {
    // Exact segment-wise sum.
    const int K = segment_count();
    const double a = static_cast<double>(K) * t0;
    const double b = static_cast<double>(K) * t1;
    int ia = std::min(static_cast<int>(std::floor(a)), K - 1);
    int ib = std::min(static_cast<int>(std::floor(b)), K - 1);
    if (ia == ib) return seg_lengths_[static_cast<std::size_t>(ia)] * (b - a);
    double len = seg_lengths_[static_cast<std::size_t>(ia)] * (static_cast<double>(ia) + 1.0 - a);
    for (int i = ia + 1; i < ib; ++i) len += seg_lengths_[static_cast<std::size_t>(i)];
    len += seg_lengths_[static_cast<std::size_t>(ib)] * (b - static_cast<double>(ib));
    return len;
  }
  return adaptive_simpson([this](double t) { return velocity(t).v.norm(); }, t0, t1, 1e-10);
}

Curve Curve::read_polyline(std::istream& in) {
  std::vector<Eigen::VectorXd> vertices;
  std::string line;
  long declared_dim = -1, declared_segments = -1;
  bool first = true;
  while (std::getline(in, line)) {
    if (line.empty()) continue;
    if (first && line.rfind("dim=", 0) == 0) {
      first = false;
      if (std::sscanf(line.c_str(), "dim=%ld,K=%ld", &declared_dim, &declared_segments) != 2)
        throw std::runtime_error("polyline file: malformed header: " + line);
      continue;
    }
    first = false;
    std::vector<double> coords;
    std::stringstream ss(line);
    std::string tok;
    while (std::getline(ss, tok, ',')) {
      std::size_t pos = 0;
      double v = std::stod(tok, &pos);
      coords.push_back(v);
    }
    Eigen::VectorXd p(static_cast<Eigen::Index>(coords.size()));
    for (std::size_t i = 0; i < coords.size(); ++i) p(static_cast<Eigen::Index>(i)) = coords[i];
    vertices.push_back(std::move(p));
  }
  if (vertices.size() < 2) throw std::runtime_error("polyline file: fewer than 2 vertices");
  if (declared_dim >= 0 && declared_dim != vertices.front().size())
    throw std::runtime_error("polyline file: header dim does not match vertices");
  if (declared_segments >= 0 &&
      declared_segments != static_cast<long>(vertices.size()) - 1)
    throw std::runtime_error("polyline file: header K does not match vertex count");
  return polyline(std::move(vertices));
}

void Curve::write_polyline(std::ostream& out) const {
  if (kind_ != CurveKind::polyline && kind_ != CurveKind::chord)
    throw std::invalid_argument("write_polyline: curve has no vertex representation");
  out << "dim=" << ambient_dim_ << ",K=" << segment_count() << "\n";
  char buf[32];
  for (const auto& p : vertices_) {
    for (Eigen::Index i = 0; i < p.size(); ++i) {
      std::snprintf(buf, sizeof(buf), "%.17g", p(i));
      out << (i ? "," : "") << buf;
    }
    out << "\n";
  }
}

double RegressionTask::target(double t) const { return amplitude * std::sin(frequency * t); }

RegressionTask circle_task(double noise_sigma) {
  return {Curve::circle(), 1.0, 3.0, noise_sigma};
}

RegressionTask tractrix_task(double noise_sigma) {
  return {Curve::tractrix(), 1.0, kPi, noise_sigma};
}

Dataset sample_dataset(const RegressionTask& task, int n_points, std::uint64_t seed) {
  if (n_points < 1) throw std::invalid_argument("sample_dataset: n_points >= 1 required");
  Rng rng(derive_seed(seed, "dataset"));
  Dataset ds;
  ds.x.reserve(static_cast<std::size_t>(n_points));
  ds.y.reserve(static_cast<std::size_t>(n_points));
  for (int i = 0; i < n_points; ++i) {
    double t = rng.uniform(task.curve.t_lo(), task.curve.t_hi());
    ds.x.push_back(task.curve.eval(t));
    double noise = task.noise_sigma > 0.0 ? rng.normal(0.0, task.noise_sigma) : 0.0;
    ds.y.push_back(task.target(t) + noise);
  }
  return ds;
}

}  // namespace relugeo
