#pragma once

#include "relugeo/curve.hpp"
#include "relugeo/network.hpp"

#include <cstdint>
#include <functional>
#include <iosfwd>
#include <optional>
#include <stdexcept>
#include <vector>

namespace relugeo {

enum class LossKind { mse, bce_logits };

struct OptimizerConfig {
  enum class Kind { adam, sgd_momentum };
  Kind kind = Kind::adam;
  double learning_rate = 0.01;
  double momentum = 0.5;  // sgd_momentum only
  double beta1 = 0.9;     // adam
  double beta2 = 0.999;
  double epsilon = 1e-8;
  /// 0 means full batch.
  int batch_size = 0;
  int epochs = 200;
  std::uint64_t seed = 1;

  static OptimizerConfig adam(double lr = 0.01, int epochs = 200);
  static OptimizerConfig sgd_momentum_default(double lr = 0.01, double momentum = 0.5,
                                              int batch_size = 32, int epochs = 500);
  void validate() const;
};

struct TrainingDivergence : std::runtime_error {
  using std::runtime_error::runtime_error;
};

/// Gradient of the mean batch loss w.r.t. every parameter, same shapes as
/// the network's weights and biases.
struct ParamGradient {
  std::vector<Eigen::MatrixXd> dw;
  std::vector<Eigen::VectorXd> db;
  std::optional<Eigen::VectorXd> d_output_bias;
};

ParamGradient grad_params(const Network& net, const Dataset& data,
                          const std::vector<std::size_t>& batch_indices, LossKind loss);
ParamGradient grad_params(const Network& net, const Dataset& data, LossKind loss);

/// Zero-filled gradient with the network's parameter shapes.
ParamGradient zero_gradient(const Network& net);

/// Stateful parameter updater (Adam moments or momentum buffers). A step
/// with an all-zero gradient leaves Adam parameters exactly unchanged.
class Optimizer {
 public:
  Optimizer(const Network& net, const OptimizerConfig& cfg);
  void step(Network& net, const ParamGradient& gradient);

 private:
  template <class T>
  void update(T& param, const T& g, T& m, T* v);

  OptimizerConfig cfg_;
  ParamGradient m_;
  std::optional<ParamGradient> v_;
  int t_ = 0;
};

double batch_loss(const Network& net, const Dataset& data, LossKind loss);
/// Fraction of samples whose logit sign matches the 0/1 label.
double classification_accuracy(const Network& net, const Dataset& data);

struct TrainLog {
  bool classification = false;
  double initial_train_loss = 0.0;
  double initial_test_loss = 0.0;
  double initial_train_acc = 0.0;
  std::vector<double> train_loss;  // one entry per completed epoch
  std::vector<double> test_loss;   // regression only
  std::vector<double> train_acc;   // classification only
  std::vector<double> epoch_seconds;
};

/// Called with epoch 0 before any update, then after each epoch.
using EpochCallback = std::function<void(int epoch, const Network& net)>;

struct TrainResult {
  Network net;
  TrainLog log;
};

/// Regression on a sampled dataset with a fresh held-out test set of
/// n_points/5 drawn under a derived seed. Deterministic given the config
/// seed: single-threaded, fixed reduction order.
TrainResult train_regression(Network net, const RegressionTask& task, int n_points,
                             const OptimizerConfig& opt, const EpochCallback& hook = {});

/// Binary cross-entropy on logits against i.i.d. uniform {0,1} labels drawn
/// per label_seed. The memorization curve is reported as per-epoch train
/// accuracy.
TrainResult train_classifier_random_labels(Network net,
                                           const std::vector<Eigen::VectorXd>& inputs,
                                           std::uint64_t label_seed,
                                           const OptimizerConfig& opt,
                                           const EpochCallback& hook = {});

/// CSV "epoch,train_loss,test_loss" (regression) or
/// "epoch,train_loss,train_acc" (classification), including an epoch-0 row
/// for the initial model. Wall times stay out of the file so reruns are
/// byte-identical.
void write_train_csv(const TrainLog& log, std::ostream& out);

}  // namespace relugeo
