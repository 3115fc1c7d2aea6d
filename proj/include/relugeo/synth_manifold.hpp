#pragma once

#include "relugeo/curve.hpp"
#include "relugeo/network.hpp"
#include "relugeo/regions.hpp"

#include <cstdint>
#include <vector>

namespace relugeo {

/// Per-coordinate affine standardization fit on a point set. Zero-variance
/// coordinates keep unit scale.
struct Normalizer {
  Eigen::VectorXd mean;
  Eigen::VectorXd inv_std;

  Eigen::VectorXd apply(const Eigen::VectorXd& x) const;
  static Normalizer fit(const std::vector<Eigen::VectorXd>& points);
};

/// Frozen random ReLU decoder R^k -> R^n (k < n): its image is an
/// at-most-k-dimensional piecewise-linear set standing in for a generative
/// model's data manifold.
class Decoder {
 public:
  Decoder(Network net, int latent_dim);

  int latent_dim() const { return latent_dim_; }
  int ambient_dim() const { return net_.output_dim(); }
  const Network& net() const { return net_; }
  Eigen::VectorXd decode(const Eigen::VectorXd& z) const { return net_.forward(z); }

 private:
  Network net_;
  int latent_dim_;
};

Decoder make_decoder(int latent_dim, int ambient_dim, const std::vector<int>& hidden_widths,
                     std::uint64_t seed);

/// Two curves between the same pair of decoded endpoints: a polyline that
/// follows the decoder image through evenly spaced latent interpolates, and
/// the straight ambient chord. eval(0) and eval(1) agree bit-exactly.
struct CurvePair {
  Curve on_manifold;
  Curve off_manifold;
  Eigen::VectorXd z1, z2;
};

/// z1, z2 ~ N(0, I_k); `segments` latent steps (the reference construction
/// uses 100). When `input_norm` is given every decoded point is mapped into
/// the normalized input space the classifier was trained in; being affine,
/// this preserves both constructions exactly.
CurvePair make_curve_pair(const Decoder& dec, std::uint64_t seed, int segments = 100,
                          const Normalizer* input_norm = nullptr);

struct DensityComparison {
  double log_density_on = 0.0;   // ln((region_count - 1) / arclength)
  double log_density_off = 0.0;
  long regions_on = 0, regions_off = 0;
  long crossings_on = 0, crossings_off = 0;
  double arclength_on = 0.0, arclength_off = 0.0;
  bool flagged = false;  // a curve had zero crossings; log density is -inf
};

DensityComparison compare_density(const Network& net, const CurvePair& pair,
                                  const CountConfig& cfg = {});

}  // namespace relugeo
