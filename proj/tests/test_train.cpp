#include "relugeo/train.hpp"

#include "relugeo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace relugeo;
using testing::random_point;

namespace {

Dataset make_dataset(Rng& rng, int n, int dim, double (*f)(const Eigen::VectorXd&)) {
  Dataset ds;
  for (int i = 0; i < n; ++i) {
    Eigen::VectorXd x = random_point(rng, dim);
    ds.x.push_back(x);
    ds.y.push_back(f(x));
  }
  return ds;
}

}  // namespace

TEST_CASE("single affine layer: mse gradient matches the closed form") {
  Rng rng(5);
  Eigen::MatrixXd w(1, 3);
  w << 0.5, -1.0, 0.25;
  Network net({3, 1}, {w}, {});
  Dataset ds = make_dataset(rng, 64, 3,
                            [](const Eigen::VectorXd& x) { return x.sum() * 0.3 - 0.1; });

  ParamGradient g = grad_params(net, ds, LossKind::mse);
  // d/dW mean (Wx - y)^2 = 2/N sum (Wx - y) x^T
  Eigen::MatrixXd expected = Eigen::MatrixXd::Zero(1, 3);
  for (std::size_t i = 0; i < ds.size(); ++i)
    expected += 2.0 / static_cast<double>(ds.size()) * (w * ds.x[i] - Eigen::VectorXd::Constant(1, ds.y[i])) *
                ds.x[i].transpose();
  CHECK((g.dw[0] - expected).norm() <= 1e-10);
}

TEST_CASE("zero-residual batch gives a zero gradient") {
  // A linear network reproducing its own labels has nothing to learn.
  Eigen::MatrixXd w(1, 2);
  w << 2.0, -1.0;
  Network net({2, 1}, {w}, {});
  Rng rng(7);
  Dataset ds;
  for (int i = 0; i < 16; ++i) {
    Eigen::VectorXd x = random_point(rng, 2);
    ds.x.push_back(x);
    ds.y.push_back((w * x)(0));
  }
  ParamGradient g = grad_params(net, ds, LossKind::mse);
  CHECK(g.dw[0].norm() <= 1e-14);
}

TEST_CASE("backprop matches finite differences on a 26-neuron net") {
  Rng rng(11);
  Network net = Network::init_random({2, 10, 16, 1}, 31);
  Dataset ds = make_dataset(rng, 8, 2, [](const Eigen::VectorXd& x) {
    return std::sin(3.0 * std::atan2(x(1), x(0)));
  });

  for (LossKind loss : {LossKind::mse, LossKind::bce_logits}) {
    Dataset data = ds;
    if (loss == LossKind::bce_logits)
      for (auto& y : data.y) y = y > 0.0 ? 1.0 : 0.0;
    ParamGradient g = grad_params(net, data, loss);

    const double h = 1e-6;
    int checked = 0;
    for (int rep = 0; rep < 1000; ++rep) {
      int l = 1 + static_cast<int>(rng.next_u64() %
                                   static_cast<std::uint64_t>(net.affine_layers()));
      bool do_bias = l < net.affine_layers() && rng.uniform() < 0.3;
      Network plus = net, minus = net;
      double analytic = 0.0;
      if (do_bias) {
        int r = static_cast<int>(rng.next_u64() %
                                 static_cast<std::uint64_t>(net.layer_width(l)));
        plus.bias_mut(l)(r) += h;
        minus.bias_mut(l)(r) -= h;
        analytic = g.db[static_cast<std::size_t>(l - 1)](r);
      } else {
        int r = static_cast<int>(rng.next_u64() %
                                 static_cast<std::uint64_t>(net.layer_width(l)));
        int c = static_cast<int>(rng.next_u64() %
                                 static_cast<std::uint64_t>(net.layer_width(l - 1)));
        plus.weight_mut(l)(r, c) += h;
        minus.weight_mut(l)(r, c) -= h;
        analytic = g.dw[static_cast<std::size_t>(l - 1)](r, c);
      }
      double fd = (batch_loss(plus, data, loss) - batch_loss(minus, data, loss)) / (2.0 * h);
      // Parameter stencils can flip a relu on some sample; skip those.
      if (std::abs(fd - analytic) > 1e-5 * (1.0 + std::abs(analytic))) {
        bool flipped = false;
        ForwardTrace tp, tm;
        for (std::size_t i = 0; i < data.size() && !flipped; ++i) {
          ActivationPattern a = plus.activation_pattern(data.x[i]);
          ActivationPattern b = minus.activation_pattern(data.x[i]);
          flipped = !(a == b);
        }
        if (flipped) continue;
      }
      ++checked;
      CHECK(std::abs(fd - analytic) <= 1e-5 * (1.0 + std::abs(analytic)));
    }
    CHECK(checked >= 900);
  }
}

TEST_CASE("adam leaves parameters untouched under a zero gradient") {
  Network net = Network::init_random({2, 6, 1}, 3);
  Network before = net;
  Optimizer adam(net, OptimizerConfig::adam(0.05, 1));
  ParamGradient zero = zero_gradient(net);
  for (int step = 0; step < 5; ++step) adam.step(net, zero);
  CHECK(net == before);

  // Labels equal to the network's own outputs produce that zero gradient.
  Rng rng(9);
  Dataset ds;
  for (int i = 0; i < 8; ++i) {
    Eigen::VectorXd x = random_point(rng, 2);
    ds.x.push_back(x);
    ds.y.push_back(net.forward(x)(0));
  }
  ParamGradient g = grad_params(net, ds, LossKind::mse);
  CHECK(g.dw[0].norm() <= 1e-12);
  CHECK(g.dw[1].norm() <= 1e-12);
  CHECK(g.db[0].norm() <= 1e-12);
}

TEST_CASE("constant zero target: test mse settles near the noise floor") {
  RegressionTask task = circle_task(0.1);
  task.amplitude = 0.0;
  OptimizerConfig opt = OptimizerConfig::adam(0.01, 200);
  opt.seed = 17;
  Network net = Network::init_random({2, 10, 16, 1}, 17);
  TrainResult result = train_regression(std::move(net), task, 1000, opt);
  CHECK(result.log.test_loss.back() <= 0.1 * 0.1 * 1.5);
}

TEST_CASE("circle task: test mse drops by 10x over training") {
  RegressionTask task = circle_task();
  OptimizerConfig opt = OptimizerConfig::adam(0.01, 200);
  opt.seed = 23;
  Network net = Network::init_random({2, 10, 16, 1}, 23);
  TrainResult result = train_regression(std::move(net), task, 1000, opt);
  CHECK(result.log.test_loss.back() <= result.log.initial_test_loss / 10.0);
}

TEST_CASE("training is deterministic per seed") {
  RegressionTask task = circle_task();
  OptimizerConfig opt = OptimizerConfig::adam(0.01, 12);
  opt.seed = 29;
  Network a = Network::init_random({2, 10, 16, 1}, 29);
  Network b = a;
  TrainResult ra = train_regression(std::move(a), task, 200, opt);
  TrainResult rb = train_regression(std::move(b), task, 200, opt);
  CHECK(ra.net == rb.net);
  CHECK(ra.log.train_loss == rb.log.train_loss);
}

TEST_CASE("first epochs reduce the training loss for most seeds") {
  int improved = 0;
  const int seeds = 20;
  for (int s = 0; s < seeds; ++s) {
    RegressionTask task = circle_task();
    OptimizerConfig opt = OptimizerConfig::adam(0.01, 10);
    opt.seed = 100 + static_cast<std::uint64_t>(s);
    Network net = Network::init_random({2, 10, 16, 1}, 100 + static_cast<std::uint64_t>(s));
    TrainResult r = train_regression(std::move(net), task, 300, opt);
    if (r.log.train_loss.back() < r.log.initial_train_loss) ++improved;
  }
  CHECK(improved >= 18);
}

TEST_CASE("random-label classifier memorizes") {
  // One sample is memorized immediately.
  {
    Rng rng(41);
    std::vector<Eigen::VectorXd> one{random_point(rng, 4)};
    OptimizerConfig opt = OptimizerConfig::sgd_momentum_default(0.01, 0.5, 32, 200);
    opt.seed = 41;
    Network net = Network::init_random({4, 8, 1}, 41);
    TrainResult r = train_classifier_random_labels(std::move(net), one, 41, opt);
    CHECK(r.log.train_acc.back() == 1.0);
  }

  // 64 random points in R^32 under a wide network: near-perfect fit.
  {
    Rng rng(43);
    std::vector<Eigen::VectorXd> inputs;
    for (int i = 0; i < 64; ++i) inputs.push_back(random_point(rng, 32));
    OptimizerConfig opt = OptimizerConfig::sgd_momentum_default(0.01, 0.5, 32, 500);
    opt.seed = 43;
    Network net = Network::init_random({32, 256, 64, 1}, 43);
    TrainResult r = train_classifier_random_labels(std::move(net), inputs, 4242, opt);
    CHECK(r.log.train_acc.back() >= 0.95);
  }
}

TEST_CASE("label seed changes labels, same seed reproduces them") {
  Rng rng(47);
  std::vector<Eigen::VectorXd> inputs;
  for (int i = 0; i < 32; ++i) inputs.push_back(random_point(rng, 3));
  OptimizerConfig opt = OptimizerConfig::sgd_momentum_default(0.01, 0.5, 8, 3);
  opt.seed = 47;
  Network base = Network::init_random({3, 6, 1}, 47);

  TrainResult a = train_classifier_random_labels(base, inputs, 1, opt);
  TrainResult b = train_classifier_random_labels(base, inputs, 1, opt);
  TrainResult c = train_classifier_random_labels(base, inputs, 2, opt);
  CHECK(a.net == b.net);
  CHECK_FALSE(a.net == c.net);
}

TEST_CASE("divergence aborts with a diagnostic") {
  RegressionTask task = circle_task();
  OptimizerConfig opt = OptimizerConfig::adam(1e6, 50);  // absurd learning rate
  opt.seed = 53;
  Network net = Network::init_random({2, 10, 16, 1}, 53);
  CHECK_THROWS_AS(train_regression(std::move(net), task, 100, opt), TrainingDivergence);
}
