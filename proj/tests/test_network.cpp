#include "relugeo/network.hpp"

#include "relugeo/rng.hpp"
#include "test_helpers.hpp"

#include <doctest.h>

#include <cmath>

using namespace relugeo;
using testing::abs_net;
using testing::central_difference;
using testing::random_point;

TEST_CASE("hidden neuron count and flat ordering") {
  Network net = Network::init_random({2, 10, 16, 1}, 7);
  CHECK(net.hidden_neuron_count() == 26);
  CHECK(net.neuron_at(0) == NeuronId{1, 0});
  CHECK(net.neuron_at(9) == NeuronId{1, 9});
  CHECK(net.neuron_at(10) == NeuronId{2, 0});
  CHECK(net.neuron_at(25) == NeuronId{2, 15});
  CHECK(net.flat_index({2, 15}) == 25);
  CHECK_THROWS_AS(net.neuron_at(26), std::out_of_range);
  CHECK_THROWS_AS((void)net.preactivation(Eigen::Vector2d(0, 0), {3, 0}), std::out_of_range);
}

TEST_CASE("init_random is deterministic per seed") {
  Network a = Network::init_random({1, 1, 1}, 42);
  Network b = Network::init_random({1, 1, 1}, 42);
  CHECK(a == b);
  Network c = Network::init_random({1, 1, 1}, 43);
  CHECK_FALSE(a == c);
}

TEST_CASE("init_random rejects degenerate schemes") {
  CHECK_THROWS_AS(Network::init_random({2, 4, 1}, 1, WeightScheme::he_normal(),
                                       BiasScheme::uniform(0.0)),
                  std::invalid_argument);
  CHECK_THROWS_AS(Network::init_random({}, 1), std::invalid_argument);
  CHECK_THROWS_AS(Network::init_random({5}, 1), std::invalid_argument);
}

TEST_CASE("he_normal first-layer variance approximately 2/fan_in") {
  // 4 inputs -> variance 0.5; one wide layer gives 10^5 draws.
  Network net = Network::init_random({4, 25000, 1}, 99, WeightScheme::he_normal(),
                                     BiasScheme::uniform(0.5));
  const auto& w = net.weight(1);
  double mean = w.mean();
  double var = (w.array() - mean).square().sum() / static_cast<double>(w.size() - 1);
  CHECK(var == doctest::Approx(0.5).epsilon(0.05));

  // Fan-in-scaled default: uniform(-1/2, 1/2) at fan-in 4 has variance 1/12.
  Network fan = Network::init_random({4, 25000, 1}, 99);
  const auto& wf = fan.weight(1);
  double mf = wf.mean();
  double vf = (wf.array() - mf).square().sum() / static_cast<double>(wf.size() - 1);
  CHECK(vf == doctest::Approx(0.25 / 12.0 * 4.0).epsilon(0.05));
}

TEST_CASE("forward: zero map, absolute value, identity") {
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Zero(3, 2);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Zero(1, 3);
  Network zero({2, 3, 1}, {w1, w2}, {Eigen::VectorXd::Zero(3)});
  CHECK(zero.forward(Eigen::Vector2d(4.0, -1.0))(0) == 0.0);

  Network net = abs_net();
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(net.forward(x)(0) == 2.0);
  x << -3.0;
  CHECK(net.forward(x)(0) == 3.0);

  // Single affine layer: no activation on the output.
  Network identity({2, 2}, {Eigen::MatrixXd::Identity(2, 2)}, {});
  Eigen::Vector2d p(-1.5, 2.5);
  CHECK(identity.forward(p) == p);
}

TEST_CASE("forward rejects dimension mismatch and bad shapes") {
  Network net = abs_net();
  CHECK_THROWS_AS(net.forward(Eigen::Vector2d(1, 2)), std::invalid_argument);
  CHECK_THROWS_AS(Network({2, 3, 1}, {Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Zero(1, 3)},
                          {Eigen::VectorXd::Zero(3)}),
                  std::invalid_argument);
}

TEST_CASE("preactivation excludes the neuron's own bias") {
  // Layer-1 neuron is exactly its weight row applied to x.
  Rng rng(3);
  Network net = Network::init_random({3, 5, 4, 1}, 11);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXd x = random_point(rng, 3);
    for (int j = 0; j < 5; ++j)
      CHECK(net.preactivation(x, {1, j}) == doctest::Approx(net.weight(1).row(j).dot(x)));
  }

  Network an = abs_net();
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(an.preactivation(x, {1, 0}) == 2.0);
  CHECK(an.preactivation(x, {1, 1}) == -2.0);

  // Zero input, zero biases: every preactivation vanishes.
  Eigen::VectorXd zero3 = Eigen::VectorXd::Zero(3);
  Eigen::MatrixXd w1 = Eigen::MatrixXd::Random(4, 3);
  Eigen::MatrixXd w2 = Eigen::MatrixXd::Random(2, 4);
  Eigen::MatrixXd w3 = Eigen::MatrixXd::Random(1, 2);
  Network zb({3, 4, 2, 1}, {w1, w2, w3}, {Eigen::VectorXd::Zero(4), Eigen::VectorXd::Zero(2)});
  for (int flat = 0; flat < zb.hidden_neuron_count(); ++flat)
    CHECK(zb.preactivation(zero3, zb.neuron_at(flat)) == 0.0);
}

TEST_CASE("preactivation agrees with forward's internal values") {
  Rng rng(5);
  Network net = Network::init_random({2, 6, 5, 1}, 21);
  ForwardTrace trace;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x = random_point(rng, 2);
    net.forward_trace(x, trace);
    for (int flat = 0; flat < net.hidden_neuron_count(); ++flat) {
      NeuronId z = net.neuron_at(flat);
      CHECK(net.preactivation(x, z) ==
            trace.preact[static_cast<std::size_t>(z.layer - 1)](z.index));
    }
  }
}

TEST_CASE("input_gradient: layer-1 row, absolute-value net, boundary flag") {
  Network net = Network::init_random({3, 4, 2, 1}, 13);
  Rng rng(7);
  Eigen::VectorXd x = random_point(rng, 3);
  for (int j = 0; j < 4; ++j) {
    GradientResult g = net.input_gradient(x, {1, j});
    CHECK(g.grad == net.weight(1).row(j).transpose());
    CHECK_FALSE(g.on_boundary);
  }

  Network an = abs_net();
  Eigen::VectorXd p(1);
  p << 5.0;
  CHECK(an.input_gradient(p, {1, 0}).grad(0) == 1.0);
  p << -5.0;
  CHECK(an.input_gradient(p, {1, 0}).grad(0) == 1.0);

  // x = 0 puts both layer-1 neurons exactly on their kink; a layer-2 probe
  // sees the ambiguity.
  Eigen::MatrixXd w1(2, 1), w2(1, 2), w3(1, 1);
  w1 << 1.0, -1.0;
  w2 << 1.0, 1.0;
  w3 << 1.0;
  Network deep({1, 2, 1, 1}, {w1, w2, w3},
               {Eigen::VectorXd::Zero(2), Eigen::VectorXd::Zero(1)});
  p << 0.0;
  CHECK(deep.input_gradient(p, {2, 0}).on_boundary);
}

TEST_CASE("input_gradient matches central differences at interior points") {
  Rng rng(17);
  Network net = Network::init_random({4, 10, 16, 1}, 303);
  int checked = 0;
  for (int trial = 0; trial < 2000 && checked < 1000; ++trial) {
    Eigen::VectorXd x = random_point(rng, 4);
    NeuronId z = net.neuron_at(static_cast<int>(rng.next_u64() %
                                                static_cast<std::uint64_t>(
                                                    net.hidden_neuron_count())));
    // Keep the stencil inside one linear cell.
    const double h = 1e-6;
    bool clean = true;
    ActivationPattern base = net.activation_pattern(x);
    for (int i = 0; i < 4 && clean; ++i) {
      Eigen::VectorXd xp = x, xm = x;
      xp(i) += h;
      xm(i) -= h;
      clean = net.activation_pattern(xp) == base && net.activation_pattern(xm) == base;
    }
    if (!clean) continue;
    ++checked;
    Eigen::VectorXd fd = central_difference(
        [&](const Eigen::VectorXd& p) { return net.preactivation(p, z); }, x, h);
    Eigen::VectorXd an = net.input_gradient(x, z).grad;
    double scale = std::max(1.0, an.norm());
    CHECK((fd - an).norm() / scale <= 1e-6);
  }
  CHECK(checked >= 1000);
}

TEST_CASE("is_good: direct edges, zero output weight, blocked layer") {
  // Single hidden layer with a nonzero output weight: always good.
  Rng rng(23);
  Network single = Network::init_random({2, 6, 1}, 31);
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd x = random_point(rng, 2);
    for (int j = 0; j < 6; ++j) CHECK(single.is_good(x, {1, j}));
  }

  // Zero outgoing weight: never good.
  Network an = abs_net(1.0, 0.0);
  Eigen::VectorXd x(1);
  x << 0.7;
  CHECK(an.is_good(x, {1, 0}));
  CHECK_FALSE(an.is_good(x, {1, 1}));

  // Huge layer-2 biases keep layer 2 inactive, blocking every layer-1 path.
  Network net = Network::init_random({2, 4, 3, 1}, 77);
  net.bias_mut(2).array() = 1e9;
  for (int trial = 0; trial < 10; ++trial) {
    Eigen::VectorXd p = random_point(rng, 2);
    for (int j = 0; j < 4; ++j) CHECK_FALSE(net.is_good(p, {1, j}));
    for (int j = 0; j < 3; ++j) CHECK(net.is_good(p, {2, j}) == (net.weight(3)(0, j) != 0.0));
  }
}

TEST_CASE("activation_pattern on the absolute-value net") {
  Network an = abs_net();
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(an.activation_pattern(x).bits == std::vector<std::uint8_t>{1, 0});
  x << -2.0;
  CHECK(an.activation_pattern(x).bits == std::vector<std::uint8_t>{0, 1});

  Eigen::MatrixXd zw1 = Eigen::MatrixXd::Zero(2, 1);
  Eigen::MatrixXd zw2 = Eigen::MatrixXd::Zero(1, 2);
  Network zero({1, 2, 1}, {zw1, zw2}, {Eigen::VectorXd::Zero(2)});
  x << 3.0;
  CHECK(zero.activation_pattern(x).bits == std::vector<std::uint8_t>{0, 0});
}

TEST_CASE("forward is piecewise linear: secant agreement within one region") {
  Rng rng(41);
  Network net = Network::init_random({3, 8, 8, 1}, 101);
  int segments_checked = 0;
  for (int trial = 0; trial < 400 && segments_checked < 40; ++trial) {
    Eigen::VectorXd a = random_point(rng, 3);
    Eigen::VectorXd dir = random_point(rng, 3, 0.05);
    Eigen::VectorXd b = a + dir;
    ActivationPattern pa = net.activation_pattern(a);
    bool same = net.activation_pattern(b) == pa;
    for (int k = 1; k < 64 && same; ++k) {
      double s = static_cast<double>(k) / 64.0;
      same = net.activation_pattern(a + s * (b - a)) == pa;
    }
    if (!same) continue;
    ++segments_checked;
    double fa = net.forward(a)(0);
    double fb = net.forward(b)(0);
    for (int k = 1; k < 8; ++k) {
      double s = static_cast<double>(k) / 8.0;
      double f = net.forward(a + s * (b - a))(0);
      double secant = fa + s * (fb - fa);
      CHECK(std::abs(f - secant) <= 1e-9 * (1.0 + std::abs(secant)));
    }
  }
  CHECK(segments_checked >= 40);
}

TEST_CASE("output bias participates in forward when present") {
  Eigen::MatrixXd w1(2, 1), w2(1, 2);
  w1 << 1.0, -1.0;
  w2 << 1.0, 1.0;
  Eigen::VectorXd ob(1);
  ob << 0.25;
  Network net({1, 2, 1}, {w1, w2}, {Eigen::VectorXd::Zero(2)}, ob);
  Eigen::VectorXd x(1);
  x << 2.0;
  CHECK(net.forward(x)(0) == 2.25);
}
