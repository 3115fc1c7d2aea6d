#include "relugeo/train.hpp"

#include "relugeo/csv.hpp"
#include "relugeo/rng.hpp"

#include <chrono>
#include <cmath>
#include <numeric>
#include <ostream>

namespace relugeo {

OptimizerConfig OptimizerConfig::adam(double lr, int epochs) {
  OptimizerConfig c;
  c.kind = Kind::adam;
  c.learning_rate = lr;
  c.epochs = epochs;
  return c;
}

OptimizerConfig OptimizerConfig::sgd_momentum_default(double lr, double momentum,
                                                      int batch_size, int epochs) {
  OptimizerConfig c;
  c.kind = Kind::sgd_momentum;
  c.learning_rate = lr;
  c.momentum = momentum;
  c.batch_size = batch_size;
  c.epochs = epochs;
  return c;
}

void OptimizerConfig::validate() const {
  if (learning_rate <= 0.0) throw std::invalid_argument("learning_rate must be > 0");
  if (momentum < 0.0 || momentum >= 1.0) throw std::invalid_argument("momentum must be in [0,1)");
  if (batch_size < 0) throw std::invalid_argument("batch_size must be >= 1 (or 0 = full batch)");
  if (epochs < 0) throw std::invalid_argument("epochs must be >= 0");
  if (kind == Kind::adam && (beta1 <= 0.0 || beta1 >= 1.0 || beta2 <= 0.0 || beta2 >= 1.0 ||
                             epsilon <= 0.0))
    throw std::invalid_argument("bad adam constants");
}

namespace {

double sample_loss(double out, double y, LossKind loss) {
  if (loss == LossKind::mse) {
    double r = out - y;
    return r * r;
  }
  // Stable bce with logits: max(s,0) - s*y + log(1 + exp(-|s|)).
  double s = out;
  return std::max(s, 0.0) - s * y + std::log1p(std::exp(-std::abs(s)));
}

double sample_dloss(double out, double y, LossKind loss) {
  if (loss == LossKind::mse) return 2.0 * (out - y);
  return 1.0 / (1.0 + std::exp(-out)) - y;  // sigmoid(s) - y
}

struct GradWorkspace {
  ForwardTrace trace;
  std::vector<Eigen::VectorXd> delta;  // per hidden layer
  Eigen::VectorXd dout;
};

void accumulate_gradient(const Network& net, const Eigen::VectorXd& x, double y,
                         LossKind loss, double inv_batch, ParamGradient& grad,
                         GradWorkspace& ws) {
  const int L = net.affine_layers();
  const int hl = net.hidden_layer_count();
  net.forward_trace(x, ws.trace);

  ws.dout.resize(net.output_dim());
  for (int k = 0; k < net.output_dim(); ++k)
    ws.dout(k) = sample_dloss(ws.trace.output(k), y, loss) * inv_batch;

  const Eigen::VectorXd& h_last = hl > 0 ? ws.trace.hidden[static_cast<std::size_t>(hl - 1)] : x;
  grad.dw[static_cast<std::size_t>(L - 1)].noalias() += ws.dout * h_last.transpose();
  if (grad.d_output_bias) *grad.d_output_bias += ws.dout;

  if (hl == 0) return;
  ws.delta.resize(static_cast<std::size_t>(hl));
  ws.delta[static_cast<std::size_t>(hl - 1)].noalias() =
      net.weight(L).transpose() * ws.dout;
  for (int l = hl; l >= 1; --l) {
    Eigen::VectorXd& d = ws.delta[static_cast<std::size_t>(l - 1)];
    const auto& pre = ws.trace.preact[static_cast<std::size_t>(l - 1)];
    const auto& b = net.bias(l);
    for (int j = 0; j < d.size(); ++j)
      if (!((pre(j) - b(j)) > 0.0)) d(j) = 0.0;  // relu mask, sigma'(0) = 0
    const Eigen::VectorXd& h_prev =
        l > 1 ? ws.trace.hidden[static_cast<std::size_t>(l - 2)] : x;
    grad.dw[static_cast<std::size_t>(l - 1)].noalias() += d * h_prev.transpose();
    // Forward computes relu(W h - b), so the bias gradient is -delta.
    grad.db[static_cast<std::size_t>(l - 1)] -= d;
    if (l > 1)
      ws.delta[static_cast<std::size_t>(l - 2)].noalias() = net.weight(l).transpose() * d;
  }
}

TrainResult train_loop(Network net, const Dataset& train, const Dataset* test,
                       LossKind loss, const OptimizerConfig& opt,
                       const EpochCallback& hook) {
  opt.validate();
  TrainLog log;
  log.classification = loss == LossKind::bce_logits;
  log.initial_train_loss = batch_loss(net, train, loss);
  if (test) log.initial_test_loss = batch_loss(net, *test, loss);
  if (loss == LossKind::bce_logits) log.initial_train_acc = classification_accuracy(net, train);
  if (hook) hook(0, net);

  Optimizer optimizer(net, opt);
  Rng order_rng(derive_seed(opt.seed, "batch-order"));
  std::vector<std::size_t> indices(train.size());
  std::iota(indices.begin(), indices.end(), std::size_t{0});
  const std::size_t batch =
      opt.batch_size == 0 ? train.size()
                          : std::min<std::size_t>(static_cast<std::size_t>(opt.batch_size),
                                                  train.size());
  GradWorkspace ws;

  for (int epoch = 1; epoch <= opt.epochs; ++epoch) {
    auto start = std::chrono::steady_clock::now();
    if (batch < train.size()) order_rng.shuffle(indices.begin(), indices.end());
    for (std::size_t off = 0; off < train.size(); off += batch) {
      std::size_t count = std::min(batch, train.size() - off);
      ParamGradient g = zero_gradient(net);
      double inv = 1.0 / static_cast<double>(count);
      for (std::size_t i = 0; i < count; ++i) {
        std::size_t idx = indices[off + i];
        accumulate_gradient(net, train.x[idx], train.y[idx], loss, inv, g, ws);
      }
      optimizer.step(net, g);
    }

    double tl = batch_loss(net, train, loss);
    if (!std::isfinite(tl) || tl > 1e6)
      throw TrainingDivergence("training diverged at epoch " + std::to_string(epoch) +
                               " (loss " + format_double(tl) + ")");
    log.train_loss.push_back(tl);
    if (test) log.test_loss.push_back(batch_loss(net, *test, loss));
    if (loss == LossKind::bce_logits)
      log.train_acc.push_back(classification_accuracy(net, train));
    log.epoch_seconds.push_back(
        std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count());
    if (hook) hook(epoch, net);
  }
  return {std::move(net), std::move(log)};
}

}  // namespace

ParamGradient zero_gradient(const Network& net) {
  ParamGradient g;
  const int L = net.affine_layers();
  g.dw.resize(static_cast<std::size_t>(L));
  g.db.resize(static_cast<std::size_t>(L - 1));
  for (int l = 1; l <= L; ++l)
    g.dw[static_cast<std::size_t>(l - 1)] =
        Eigen::MatrixXd::Zero(net.layer_width(l), net.layer_width(l - 1));
  for (int l = 1; l < L; ++l)
    g.db[static_cast<std::size_t>(l - 1)] = Eigen::VectorXd::Zero(net.layer_width(l));
  if (net.output_bias())
    g.d_output_bias = Eigen::VectorXd::Zero(net.output_dim());
  return g;
}

Optimizer::Optimizer(const Network& net, const OptimizerConfig& cfg) : cfg_(cfg) {
  m_ = zero_gradient(net);
  if (cfg.kind == OptimizerConfig::Kind::adam) v_ = zero_gradient(net);
}

template <class T>
void Optimizer::update(T& param, const T& g, T& m, T* v) {
  if (cfg_.kind == OptimizerConfig::Kind::sgd_momentum) {
    m = cfg_.momentum * m + g;
    param -= cfg_.learning_rate * m;
    return;
  }
  m = cfg_.beta1 * m + (1.0 - cfg_.beta1) * g;
  *v = cfg_.beta2 * (*v) + (1.0 - cfg_.beta2) * g.cwiseProduct(g);
  const double c1 = 1.0 - std::pow(cfg_.beta1, t_);
  const double c2 = 1.0 - std::pow(cfg_.beta2, t_);
  param.array() -=
      cfg_.learning_rate * (m.array() / c1) / ((v->array() / c2).sqrt() + cfg_.epsilon);
}

void Optimizer::step(Network& net, const ParamGradient& gradient) {
  ++t_;
  const int L = net.affine_layers();
  for (int l = 1; l <= L; ++l)
    update(net.weight_mut(l), gradient.dw[static_cast<std::size_t>(l - 1)],
           m_.dw[static_cast<std::size_t>(l - 1)],
           v_ ? &v_->dw[static_cast<std::size_t>(l - 1)] : nullptr);
  for (int l = 1; l < L; ++l)
    update(net.bias_mut(l), gradient.db[static_cast<std::size_t>(l - 1)],
           m_.db[static_cast<std::size_t>(l - 1)],
           v_ ? &v_->db[static_cast<std::size_t>(l - 1)] : nullptr);
  if (net.output_bias_mut() && gradient.d_output_bias)
    update(*net.output_bias_mut(), *gradient.d_output_bias, *m_.d_output_bias,
           v_ ? &*v_->d_output_bias : nullptr);
}

ParamGradient grad_params(const Network& net, const Dataset& data,
                          const std::vector<std::size_t>& batch_indices, LossKind loss) {
  if (batch_indices.empty()) throw std::invalid_argument("grad_params: empty batch");
  ParamGradient g = zero_gradient(net);
  GradWorkspace ws;
  double inv = 1.0 / static_cast<double>(batch_indices.size());
  for (std::size_t idx : batch_indices) {
    double l = sample_loss(net.forward(data.x[idx])(0), data.y[idx], loss);
    if (!std::isfinite(l)) throw TrainingDivergence("grad_params: non-finite loss");
    accumulate_gradient(net, data.x[idx], data.y[idx], loss, inv, g, ws);
  }
  return g;
}

ParamGradient grad_params(const Network& net, const Dataset& data, LossKind loss) {
  std::vector<std::size_t> all(data.size());
  std::iota(all.begin(), all.end(), std::size_t{0});
  return grad_params(net, data, all, loss);
}

double batch_loss(const Network& net, const Dataset& data, LossKind loss) {
  if (data.size() == 0) throw std::invalid_argument("batch_loss: empty dataset");
  ForwardTrace trace;
  double sum = 0.0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    net.forward_trace(data.x[i], trace);
    for (int k = 0; k < net.output_dim(); ++k)
      sum += sample_loss(trace.output(k), data.y[i], loss);
  }
  return sum / static_cast<double>(data.size());
}

double classification_accuracy(const Network& net, const Dataset& data) {
  if (data.size() == 0) throw std::invalid_argument("classification_accuracy: empty dataset");
  ForwardTrace trace;
  long hits = 0;
  for (std::size_t i = 0; i < data.size(); ++i) {
    net.forward_trace(data.x[i], trace);
    bool predicted = trace.output(0) > 0.0;
    if (predicted == (data.y[i] > 0.5)) ++hits;
  }
  return static_cast<double>(hits) / static_cast<double>(data.size());
}

TrainResult train_regression(Network net, const RegressionTask& task, int n_points,
                             const OptimizerConfig& opt, const EpochCallback& hook) {
  if (n_points < 1) throw std::invalid_argument("train_regression: n_points >= 1");
  Dataset train = sample_dataset(task, n_points, derive_seed(opt.seed, "train-set"));
  Dataset test =
      sample_dataset(task, std::max(1, n_points / 5), derive_seed(opt.seed, "test-set"));
  return train_loop(std::move(net), train, &test, LossKind::mse, opt, hook);
}

TrainResult train_classifier_random_labels(Network net,
                                           const std::vector<Eigen::VectorXd>& inputs,
                                           std::uint64_t label_seed,
                                           const OptimizerConfig& opt,
                                           const EpochCallback& hook) {
  if (inputs.empty()) throw std::invalid_argument("train_classifier_random_labels: no inputs");
  if (net.output_dim() != 1)
    throw std::invalid_argument("train_classifier_random_labels: network must emit one logit");
  Dataset data;
  data.x = inputs;
  data.y.resize(inputs.size());
  Rng rng(derive_seed(label_seed, "random-labels"));
  for (auto& y : data.y) y = rng.uniform() < 0.5 ? 0.0 : 1.0;
  return train_loop(std::move(net), data, nullptr, LossKind::bce_logits, opt, hook);
}

void write_train_csv(const TrainLog& log, std::ostream& out) {
  if (log.classification) {
    out << "epoch,train_loss,train_acc\n";
    out << "0," << format_double(log.initial_train_loss) << ','
        << format_double(log.initial_train_acc) << '\n';
    for (std::size_t e = 0; e < log.train_loss.size(); ++e)
      out << (e + 1) << ',' << format_double(log.train_loss[e]) << ','
          << format_double(log.train_acc[e]) << '\n';
  } else {
    out << "epoch,train_loss,test_loss\n";
    out << "0," << format_double(log.initial_train_loss) << ','
        << format_double(log.initial_test_loss) << '\n';
    for (std::size_t e = 0; e < log.train_loss.size(); ++e)
      out << (e + 1) << ',' << format_double(log.train_loss[e]) << ','
          << format_double(log.test_loss[e]) << '\n';
  }
}

}  // namespace relugeo
