#include "relugeo/network.hpp"

#include "relugeo/rng.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

namespace relugeo {

std::string WeightScheme::to_string() const {
  if (kind == Kind::he_normal) return "he_normal";
  if (kind == Kind::uniform_fan_in) return "uniform_fan_in";
  char buf[96];
  std::snprintf(buf, sizeof(buf), "uniform:%.17g:%.17g", lo, hi);
  return buf;
}

WeightScheme WeightScheme::parse(const std::string& text) {
  if (text == "he_normal") return he_normal();
  if (text == "uniform_fan_in") return uniform_fan_in();
  double lo = 0.0, hi = 0.0;
  if (std::sscanf(text.c_str(), "uniform:%lf:%lf", &lo, &hi) == 2) return uniform(lo, hi);
  throw std::invalid_argument("unknown weight scheme: " + text);
}

std::string BiasScheme::to_string() const {
  if (kind == Kind::uniform_fan_in) return "uniform_fan_in";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%s:%.17g",
                kind == Kind::uniform_symmetric ? "uniform" : "normal", spread);
  return buf;
}

BiasScheme BiasScheme::parse(const std::string& text) {
  if (text == "uniform_fan_in") return uniform_fan_in();
  double s = 0.0;
  if (std::sscanf(text.c_str(), "uniform:%lf", &s) == 1) return uniform(s);
  if (std::sscanf(text.c_str(), "normal:%lf", &s) == 1) return normal(s);
  throw std::invalid_argument("unknown bias scheme: " + text);
}

Network::Network(std::vector<int> layer_widths, std::vector<Eigen::MatrixXd> weights,
                 std::vector<Eigen::VectorXd> biases,
                 std::optional<Eigen::VectorXd> output_bias)
    : widths_(std::move(layer_widths)),
      weights_(std::move(weights)),
      biases_(std::move(biases)),
      output_bias_(std::move(output_bias)) {
  validate();
  hidden_count_ = 0;
  for (int l = 1; l < affine_layers(); ++l) hidden_count_ += widths_[static_cast<std::size_t>(l)];
}

void Network::validate() const {
  if (widths_.size() < 2) throw std::invalid_argument("network needs at least one affine layer");
  for (int w : widths_)
    if (w <= 0) throw std::invalid_argument("layer widths must be positive");
  if (weights_.size() != widths_.size() - 1)
    throw std::invalid_argument("weight count does not match layer widths");
  if (biases_.size() != weights_.size() - 1)
    throw std::invalid_argument("expected one bias vector per hidden layer");
  for (std::size_t i = 0; i < weights_.size(); ++i) {
    const auto& W = weights_[i];
    if (W.rows() != widths_[i + 1] || W.cols() != widths_[i])
      throw std::invalid_argument("weight matrix shape mismatch at layer " +
                                  std::to_string(i + 1));
    if (!W.allFinite()) throw std::invalid_argument("non-finite weight entries");
  }
  for (std::size_t i = 0; i < biases_.size(); ++i) {
    if (biases_[i].size() != widths_[i + 1])
      throw std::invalid_argument("bias length mismatch at layer " + std::to_string(i + 1));
    if (!biases_[i].allFinite()) throw std::invalid_argument("non-finite bias entries");
  }
  if (output_bias_) {
    if (output_bias_->size() != widths_.back())
      throw std::invalid_argument("output bias length mismatch");
    if (!output_bias_->allFinite()) throw std::invalid_argument("non-finite output bias");
  }
}

Network Network::init_random(const std::vector<int>& layer_widths, std::uint64_t seed,
                             const WeightScheme& ws, const BiasScheme& bs) {
  if (layer_widths.size() < 2)
    throw std::invalid_argument("init_random: need input and output widths");
  if (bs.kind != BiasScheme::Kind::uniform_fan_in && bs.spread <= 0.0)
    throw std::invalid_argument("init_random: bias scheme must have strictly positive spread");
  if (ws.kind == WeightScheme::Kind::uniform && !(ws.lo < ws.hi))
    throw std::invalid_argument("init_random: empty uniform weight range");

  Rng rng(derive_seed(seed, "network-init"));
  const std::size_t layers = layer_widths.size() - 1;
  std::vector<Eigen::MatrixXd> weights(layers);
  std::vector<Eigen::VectorXd> biases(layers - 1);
  for (std::size_t l = 0; l < layers; ++l) {
    const int rows = layer_widths[l + 1];
    const int cols = layer_widths[l];
    const double fan_bound = 1.0 / std::sqrt(static_cast<double>(cols));
    Eigen::MatrixXd W(rows, cols);
    if (ws.kind == WeightScheme::Kind::he_normal) {
      const double sd = std::sqrt(2.0 / static_cast<double>(cols));
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) W(r, c) = rng.normal(0.0, sd);
    } else if (ws.kind == WeightScheme::Kind::uniform_fan_in) {
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) W(r, c) = rng.uniform(-fan_bound, fan_bound);
    } else {
      for (int r = 0; r < rows; ++r)
        for (int c = 0; c < cols; ++c) W(r, c) = rng.uniform(ws.lo, ws.hi);
    }
    weights[l] = std::move(W);
    if (l + 1 < layers) {
      Eigen::VectorXd b(rows);
      for (int r = 0; r < rows; ++r) {
        switch (bs.kind) {
          case BiasScheme::Kind::uniform_symmetric:
            b(r) = rng.uniform(-bs.spread, bs.spread);
            break;
          case BiasScheme::Kind::normal:
            b(r) = rng.normal(0.0, bs.spread);
            break;
          case BiasScheme::Kind::uniform_fan_in:
            b(r) = rng.uniform(-fan_bound, fan_bound);
            break;
        }
      }
      biases[l] = std::move(b);
    }
  }
  Network net(layer_widths, std::move(weights), std::move(biases));
  net.set_init_meta({seed, ws, bs});
  return net;
}

const Eigen::MatrixXd& Network::weight(int l) const {
  if (l < 1 || l > affine_layers()) throw std::out_of_range("weight layer index");
  return weights_[static_cast<std::size_t>(l - 1)];
}

const Eigen::VectorXd& Network::bias(int l) const {
  if (l < 1 || l > hidden_layer_count()) throw std::out_of_range("bias layer index");
  return biases_[static_cast<std::size_t>(l - 1)];
}

Eigen::MatrixXd& Network::weight_mut(int l) {
  if (l < 1 || l > affine_layers()) throw std::out_of_range("weight layer index");
  return weights_[static_cast<std::size_t>(l - 1)];
}

Eigen::VectorXd& Network::bias_mut(int l) {
  if (l < 1 || l > hidden_layer_count()) throw std::out_of_range("bias layer index");
  return biases_[static_cast<std::size_t>(l - 1)];
}

NeuronId Network::neuron_at(int flat_index) const {
  if (flat_index < 0 || flat_index >= hidden_count_)
    throw std::out_of_range("flat neuron index");
  int l = 1;
  while (flat_index >= layer_width(l)) {
    flat_index -= layer_width(l);
    ++l;
  }
  return {l, flat_index};
}

int Network::flat_index(NeuronId z) const {
  check_neuron(z);
  int base = 0;
  for (int l = 1; l < z.layer; ++l) base += layer_width(l);
  return base + z.index;
}

void Network::check_neuron(NeuronId z) const {
  if (z.layer < 1 || z.layer > hidden_layer_count() || z.index < 0 ||
      z.index >= layer_width(z.layer))
    throw std::out_of_range("invalid neuron id");
}

void Network::forward_trace(const Eigen::VectorXd& x, ForwardTrace& trace,
                            int until_hidden_layer) const {
  if (x.size() != input_dim()) throw std::invalid_argument("forward: input dimension mismatch");
  const int hl = hidden_layer_count();
  if (static_cast<int>(trace.preact.size()) != hl) {
    trace.preact.resize(static_cast<std::size_t>(hl));
    trace.hidden.resize(static_cast<std::size_t>(hl));
  }
  const Eigen::VectorXd* prev = &x;
  for (int l = 1; l <= hl; ++l) {
    auto& pre = trace.preact[static_cast<std::size_t>(l - 1)];
    pre.noalias() = weights_[static_cast<std::size_t>(l - 1)] * (*prev);
    if (l == until_hidden_layer) return;
    auto& h = trace.hidden[static_cast<std::size_t>(l - 1)];
    h = (pre - biases_[static_cast<std::size_t>(l - 1)]).cwiseMax(0.0);
    prev = &h;
  }
  trace.output.noalias() = weights_.back() * (*prev);
  if (output_bias_) trace.output += *output_bias_;
}

Eigen::VectorXd Network::forward(const Eigen::VectorXd& x) const {
  ForwardTrace trace;
  forward_trace(x, trace);
  return trace.output;
}

double Network::preactivation(const Eigen::VectorXd& x, NeuronId z) const {
  check_neuron(z);
  ForwardTrace trace;
  forward_trace(x, trace, z.layer);
  return trace.preact[static_cast<std::size_t>(z.layer - 1)](z.index);
}

GradientResult Network::input_gradient(const Eigen::VectorXd& x, NeuronId z) const {
  check_neuron(z);
  ForwardTrace trace;
  forward_trace(x, trace);

  GradientResult result;
  // v holds the gradient of the preactivation w.r.t. layer l's activation.
  Eigen::VectorXd v = weight(z.layer).row(z.index).transpose();
  for (int l = z.layer - 1; l >= 1; --l) {
    const auto& pre = trace.preact[static_cast<std::size_t>(l - 1)];
    const auto& b = biases_[static_cast<std::size_t>(l - 1)];
    for (int j = 0; j < v.size(); ++j) {
      double arg = pre(j) - b(j);
      if (arg == 0.0) result.on_boundary = true;
      if (arg <= 0.0) v(j) = 0.0;  // sigma'(0) = 0
    }
    v = weight(l).transpose() * v;
  }
  result.grad = std::move(v);
  return result;
}

bool Network::is_good(const Eigen::VectorXd& x, NeuronId z) const {
  check_neuron(z);
  ForwardTrace trace;
  forward_trace(x, trace);
  const int hl = hidden_layer_count();

  // reach(v) for the deepest hidden layer: any nonzero output edge.
  Eigen::Array<bool, Eigen::Dynamic, 1> reach =
      weight(hl + 1).cwiseAbs().colwise().maxCoeff().transpose().array() > 0.0;
  // Walk back to z's layer; a neuron in layer l reaches the output iff some
  // active, reachable neuron in layer l+1 receives it with nonzero weight.
  for (int l = hl - 1; l >= z.layer; --l) {
    const auto& W = weight(l + 1);
    const auto& pre = trace.preact[static_cast<std::size_t>(l)];
    const auto& b = biases_[static_cast<std::size_t>(l)];
    Eigen::Array<bool, Eigen::Dynamic, 1> next(W.cols());
    for (int v = 0; v < W.cols(); ++v) {
      bool ok = false;
      for (int u = 0; u < W.rows() && !ok; ++u)
        ok = reach(u) && W(u, v) != 0.0 && (pre(u) - b(u)) > 0.0;
      next(v) = ok;
    }
    reach.swap(next);
  }
  return reach(z.index);
}

ActivationPattern Network::activation_pattern(const Eigen::VectorXd& x) const {
  ForwardTrace trace;
  ActivationPattern pattern;
  activation_pattern(x, trace, pattern);
  return pattern;
}

void Network::activation_pattern(const Eigen::VectorXd& x, ForwardTrace& trace,
                                 ActivationPattern& out) const {
  forward_trace(x, trace, hidden_layer_count());
  // The deepest hidden layer's activation is not needed for the bits, so the
  // trace stops at its preactivation.
  out.bits.resize(static_cast<std::size_t>(hidden_count_));
  std::size_t k = 0;
  for (int l = 1; l <= hidden_layer_count(); ++l) {
    const auto& pre = trace.preact[static_cast<std::size_t>(l - 1)];
    const auto& b = biases_[static_cast<std::size_t>(l - 1)];
    for (int j = 0; j < pre.size(); ++j) out.bits[k++] = (pre(j) - b(j)) > 0.0 ? 1 : 0;
  }
}

bool operator==(const Network& a, const Network& b) {
  if (a.widths_ != b.widths_) return false;
  for (std::size_t i = 0; i < a.weights_.size(); ++i)
    if (a.weights_[i] != b.weights_[i]) return false;
  for (std::size_t i = 0; i < a.biases_.size(); ++i)
    if (a.biases_[i] != b.biases_[i]) return false;
  if (a.output_bias_.has_value() != b.output_bias_.has_value()) return false;
  if (a.output_bias_ && *a.output_bias_ != *b.output_bias_) return false;
  return true;
}

}  // namespace relugeo
