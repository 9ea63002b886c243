#pragma once

#include <Eigen/Dense>
#include <cmath>

#include "dhb/error.hpp"

namespace dhb::nn {

struct AdamConfig {
    double lr = 1e-3;
    double beta1 = 0.9;
    double beta2 = 0.999;
    double eps = 1e-8;
};

struct AdamState {
    Eigen::VectorXd m, v;
    long step = 0;

    explicit AdamState(Eigen::Index n = 0) : m(Eigen::VectorXd::Zero(n)), v(Eigen::VectorXd::Zero(n)) {}
};

inline void adam_step(Eigen::VectorXd& theta, const Eigen::VectorXd& grad, AdamState& s, const AdamConfig& c) {
    DHB_REQUIRE(grad.size() == theta.size() && s.m.size() == theta.size() && s.v.size() == theta.size(),
                InvalidArgument, "adam_step: shape mismatch");
    ++s.step;
    s.m = c.beta1 * s.m + (1.0 - c.beta1) * grad;
    s.v = c.beta2 * s.v + (1.0 - c.beta2) * grad.cwiseProduct(grad);
    const double bc1 = 1.0 - std::pow(c.beta1, static_cast<double>(s.step));
    const double bc2 = 1.0 - std::pow(c.beta2, static_cast<double>(s.step));
    theta.array() -= c.lr * (s.m.array() / bc1) / ((s.v.array() / bc2).sqrt() + c.eps);
}

}  // namespace dhb::nn
