#pragma once

#include "relugeo/network.hpp"
#include "relugeo/rng.hpp"

#include <Eigen/Dense>

namespace relugeo::testing {

/// relu(x) + relu(-x) = |x|: the classic two-neuron absolute-value network.
inline Network abs_net(double w2_0 = 1.0, double w2_1 = 1.0) {
  Eigen::MatrixXd w1(2, 1);
  w1 << 1.0, -1.0;
  Eigen::VectorXd b1 = Eigen::VectorXd::Zero(2);
  Eigen::MatrixXd w2(1, 2);
  w2 << w2_0, w2_1;
  return Network({1, 2, 1}, {w1, w2}, {b1});
}

/// Single hidden neuron w, bias b, unit output weight. Input dim from w.
inline Network one_neuron_net(const Eigen::VectorXd& w, double b) {
  Eigen::MatrixXd w1 = w.transpose();
  Eigen::VectorXd b1(1);
  b1 << b;
  Eigen::MatrixXd w2(1, 1);
  w2 << 1.0;
  return Network({static_cast<int>(w.size()), 1, 1}, {w1, w2}, {b1});
}

inline Eigen::VectorXd random_point(Rng& rng, int dim, double scale = 1.0) {
  Eigen::VectorXd x(dim);
  for (int i = 0; i < dim; ++i) x(i) = rng.normal(0.0, scale);
  return x;
}

/// Central finite difference of a scalar function of a vector argument.
template <class F>
Eigen::VectorXd central_difference(F&& f, const Eigen::VectorXd& x, double h = 1e-6) {
  Eigen::VectorXd g(x.size());
  Eigen::VectorXd xp = x, xm = x;
  for (int i = 0; i < x.size(); ++i) {
    xp(i) = x(i) + h;
    xm(i) = x(i) - h;
    g(i) = (f(xp) - f(xm)) / (2.0 * h);
    xp(i) = x(i);
    xm(i) = x(i);
  }
  return g;
}

}  // namespace relugeo::testing
