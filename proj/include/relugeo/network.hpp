#pragma once

#include <Eigen/Dense>

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

namespace relugeo {

/// Identifies a hidden neuron: `layer` is 1-based (1..L-1 where L is the
/// number of affine maps), `index` is 0-based within the layer.
struct NeuronId {
  int layer = 1;
  int index = 0;
  friend bool operator==(const NeuronId&, const NeuronId&) = default;
};

/// On/off state of every hidden neuron at one input, ordered (layer, index)
/// lexicographically. Constant exactly on one linear region.
struct ActivationPattern {
  std::vector<std::uint8_t> bits;
  friend bool operator==(const ActivationPattern&, const ActivationPattern&) = default;
};

struct WeightScheme {
  enum class Kind { he_normal, uniform, uniform_fan_in };
  Kind kind = Kind::uniform_fan_in;
  double lo = 0.0;
  double hi = 0.0;

  static WeightScheme he_normal() { return {Kind::he_normal, 0.0, 0.0}; }
  static WeightScheme uniform(double lo, double hi) { return {Kind::uniform, lo, hi}; }
  /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)) per layer; keeps the
  /// preactivation-to-bias scale ratio independent of the input dimension.
  static WeightScheme uniform_fan_in() { return {Kind::uniform_fan_in, 0.0, 0.0}; }
  std::string to_string() const;
  static WeightScheme parse(const std::string& text);
  friend bool operator==(const WeightScheme&, const WeightScheme&) = default;
};

struct BiasScheme {
  enum class Kind { uniform_symmetric, normal, uniform_fan_in };
  Kind kind = Kind::uniform_fan_in;
  double spread = 0.0;  // uniform(-spread, spread) or normal(0, spread)

  static BiasScheme uniform(double half_width) { return {Kind::uniform_symmetric, half_width}; }
  static BiasScheme normal(double sd) { return {Kind::normal, sd}; }
  /// uniform(-1/sqrt(fan_in), +1/sqrt(fan_in)), the layer's weight scale.
  static BiasScheme uniform_fan_in() { return {Kind::uniform_fan_in, 0.0}; }
  std::string to_string() const;
  static BiasScheme parse(const std::string& text);
  friend bool operator==(const BiasScheme&, const BiasScheme&) = default;
};

/// Provenance of a randomly initialized network, carried through
/// serialization so an experiment can be reproduced from the model file.
struct InitMeta {
  std::uint64_t seed = 0;
  WeightScheme weights;
  BiasScheme biases;
};

struct GradientResult {
  Eigen::VectorXd grad;
  /// True when some neuron in an earlier layer sat exactly at its kink, so
  /// the active-set linearization used the sigma'(0) = 0 convention.
  bool on_boundary = false;
};

/// Reusable scratch for forward evaluation; avoids per-call allocation in
/// the counting hot loop.
struct ForwardTrace {
  /// preact[l-1] = W_l * h_{l-1}, the affine output of hidden layer l with
  /// the layer's bias excluded.
  std::vector<Eigen::VectorXd> preact;
  /// hidden[l-1] = relu(preact[l-1] - b_l).
  std::vector<Eigen::VectorXd> hidden;
  Eigen::VectorXd output;
};

/// Feed-forward ReLU network. The hidden activation convention is
/// h_l = relu(W_l h_{l-1} - b_l): a neuron's preactivation is the affine
/// value before its own bias is applied, and the neuron kinks exactly where
/// preactivation == bias. The output layer is affine with no activation and
/// (by default) no bias. Networks are immutable in normal use; every const
/// member is safe to call concurrently. The optimizer owns its network
/// exclusively and is the only writer through the *_mut accessors.
class Network {
 public:
  Network() = default;
  Network(std::vector<int> layer_widths, std::vector<Eigen::MatrixXd> weights,
          std::vector<Eigen::VectorXd> biases,
          std::optional<Eigen::VectorXd> output_bias = std::nullopt);

  /// Random initialization, deterministic per seed. Bias schemes with zero
  /// spread are rejected: boundary counting relies on biases having a
  /// density.
  static Network init_random(const std::vector<int>& layer_widths, std::uint64_t seed,
                             const WeightScheme& ws = WeightScheme::uniform_fan_in(),
                             const BiasScheme& bs = BiasScheme::uniform_fan_in());

  int input_dim() const { return widths_.front(); }
  int output_dim() const { return widths_.back(); }
  /// Number of affine maps L (hidden layers plus the output map).
  int affine_layers() const { return static_cast<int>(weights_.size()); }
  int hidden_layer_count() const { return affine_layers() - 1; }
  int layer_width(int l) const { return widths_[static_cast<std::size_t>(l)]; }
  int hidden_neuron_count() const { return hidden_count_; }
  const std::vector<int>& layer_widths() const { return widths_; }

  const Eigen::MatrixXd& weight(int l) const;  // 1-based, l in [1, L]
  const Eigen::VectorXd& bias(int l) const;    // 1-based, l in [1, L-1]
  const std::optional<Eigen::VectorXd>& output_bias() const { return output_bias_; }
  double neuron_bias(NeuronId z) const { return bias(z.layer)(z.index); }

  Eigen::MatrixXd& weight_mut(int l);
  Eigen::VectorXd& bias_mut(int l);
  std::optional<Eigen::VectorXd>& output_bias_mut() { return output_bias_; }

  /// Flat neuron order is (layer, index) lexicographic.
  NeuronId neuron_at(int flat_index) const;
  int flat_index(NeuronId z) const;

  Eigen::VectorXd forward(const Eigen::VectorXd& x) const;

  /// Runs the forward pass into `trace`. If until_hidden_layer > 0, stops
  /// after the preactivation of that hidden layer has been written (its
  /// activation and all later layers are left stale).
  void forward_trace(const Eigen::VectorXd& x, ForwardTrace& trace,
                     int until_hidden_layer = 0) const;

  /// Affine output of neuron z before its own bias; the boundary condition
  /// along a curve is preactivation(x(t)) == bias(z).
  double preactivation(const Eigen::VectorXd& x, NeuronId z) const;

  /// Gradient of preactivation(., z) at x through the active-set
  /// linearization (reverse accumulation).
  GradientResult input_gradient(const Eigen::VectorXd& x, NeuronId z) const;

  /// True iff a path of neurons from z to the output exists whose every
  /// intermediate neuron strictly after z is active at x and whose every
  /// edge weight is nonzero. z's own activation state is not required.
  bool is_good(const Eigen::VectorXd& x, NeuronId z) const;

  ActivationPattern activation_pattern(const Eigen::VectorXd& x) const;
  /// Same, writing into a caller-owned trace and pattern (no allocation
  /// when capacities match).
  void activation_pattern(const Eigen::VectorXd& x, ForwardTrace& trace,
                          ActivationPattern& out) const;

  const std::optional<InitMeta>& init_meta() const { return meta_; }
  void set_init_meta(InitMeta m) { meta_ = std::move(m); }

  friend bool operator==(const Network& a, const Network& b);

 private:
  void validate() const;
  void check_neuron(NeuronId z) const;

  std::vector<int> widths_;
  std::vector<Eigen::MatrixXd> weights_;  // weights_[i] = W_{i+1}
  std::vector<Eigen::VectorXd> biases_;   // biases_[i] = b_{i+1}, hidden layers only
  std::optional<Eigen::VectorXd> output_bias_;
  std::optional<InitMeta> meta_;
  int hidden_count_ = 0;
};

}  // namespace relugeo
