#include "relugeo/synth_manifold.hpp"

#include "relugeo/rng.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace relugeo {

Eigen::VectorXd Normalizer::apply(const Eigen::VectorXd& x) const {
  if (x.size() != mean.size()) throw std::invalid_argument("normalizer: dimension mismatch");
  return (x - mean).cwiseProduct(inv_std);
}

Normalizer Normalizer::fit(const std::vector<Eigen::VectorXd>& points) {
  if (points.empty()) throw std::invalid_argument("normalizer: empty point set");
  const auto dim = points.front().size();
  Eigen::VectorXd mean = Eigen::VectorXd::Zero(dim);
  for (const auto& p : points) mean += p;
  mean /= static_cast<double>(points.size());
  Eigen::VectorXd var = Eigen::VectorXd::Zero(dim);
  for (const auto& p : points) var += (p - mean).cwiseAbs2();
  var /= static_cast<double>(points.size());
  Normalizer norm;
  norm.mean = std::move(mean);
  norm.inv_std.resize(dim);
  for (Eigen::Index i = 0; i < dim; ++i)
    norm.inv_std(i) = var(i) > 0.0 ? 1.0 / std::sqrt(var(i)) : 1.0;
  return norm;
}

Decoder::Decoder(Network net, int latent_dim) : net_(std::move(net)), latent_dim_(latent_dim) {
  if (latent_dim < 1) throw std::invalid_argument("decoder: latent_dim >= 1 required");
  if (net_.input_dim() != latent_dim)
    throw std::invalid_argument("decoder: network input does not match latent_dim");
  if (net_.output_dim() <= latent_dim)
    throw std::invalid_argument("decoder: ambient dimension must exceed latent_dim");
}

Decoder make_decoder(int latent_dim, int ambient_dim, const std::vector<int>& hidden_widths,
                     std::uint64_t seed) {
  if (latent_dim < 1) throw std::invalid_argument("make_decoder: latent_dim >= 1 required");
  if (ambient_dim <= latent_dim)
    throw std::invalid_argument("make_decoder: ambient_dim must exceed latent_dim");
  std::vector<int> widths;
  widths.push_back(latent_dim);
  widths.insert(widths.end(), hidden_widths.begin(), hidden_widths.end());
  widths.push_back(ambient_dim);
  return Decoder(Network::init_random(widths, seed), latent_dim);
}

CurvePair make_curve_pair(const Decoder& dec, std::uint64_t seed, int segments,
                          const Normalizer* input_norm) {
  if (segments < 1) throw std::invalid_argument("make_curve_pair: segments >= 1 required");
  Rng rng(derive_seed(seed, "curve-pair-latents"));
  const int k = dec.latent_dim();
  Eigen::VectorXd z1(k), z2(k);
  for (int i = 0; i < k; ++i) z1(i) = rng.normal();
  for (int i = 0; i < k; ++i) z2(i) = rng.normal();

  auto decode = [&](const Eigen::VectorXd& z) {
    Eigen::VectorXd x = dec.decode(z);
    return input_norm ? input_norm->apply(x) : x;
  };

  const int S = segments;
  std::vector<Eigen::VectorXd> vertices;
  vertices.reserve(static_cast<std::size_t>(S) + 1);
  for (int i = 0; i <= S; ++i) {
    // Endpoints use z1/z2 directly so both curves share them bit-exactly.
    Eigen::VectorXd z = i == 0   ? z1
                        : i == S ? z2
                                 : ((static_cast<double>(S - i) * z1 +
                                     static_cast<double>(i) * z2) /
                                    static_cast<double>(S));
    vertices.push_back(decode(z));
  }

  CurvePair pair;
  pair.off_manifold = Curve::chord(vertices.front(), vertices.back());
  pair.on_manifold = Curve::polyline(std::move(vertices));
  pair.z1 = std::move(z1);
  pair.z2 = std::move(z2);
  return pair;
}

DensityComparison compare_density(const Network& net, const CurvePair& pair,
                                  const CountConfig& cfg) {
  if (net.input_dim() != pair.on_manifold.ambient_dim())
    throw std::invalid_argument("compare_density: network input does not match curve dimension");
  RegionReport on = count_regions(net, pair.on_manifold, cfg);
  RegionReport off = count_regions(net, pair.off_manifold, cfg);

  auto log_density = [](const RegionReport& r) {
    long cuts = r.region_count - 1;
    if (cuts <= 0) return -std::numeric_limits<double>::infinity();
    return std::log(static_cast<double>(cuts) / r.curve_arclength);
  };

  DensityComparison cmp;
  cmp.log_density_on = log_density(on);
  cmp.log_density_off = log_density(off);
  cmp.regions_on = on.region_count;
  cmp.regions_off = off.region_count;
  cmp.crossings_on = on.crossings_total;
  cmp.crossings_off = off.crossings_total;
  cmp.arclength_on = on.curve_arclength;
  cmp.arclength_off = off.curve_arclength;
  cmp.flagged = on.region_count <= 1 || off.region_count <= 1;
  return cmp;
}

}  // namespace relugeo
