#pragma once

#include <cmath>
#include <string>

#include <Eigen/Dense>

#include "legs/error.hpp"

namespace legs {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  long step = 0;

  static AdamState zeros(Eigen::Index n) { return AdamState{Eigen::VectorXd::Zero(n), Eigen::VectorXd::Zero(n), 0}; }
};

/// One bias-corrected Adam update, in place.
inline void adam_step(Eigen::VectorXd& params, const Eigen::VectorXd& grads, AdamState& state, double lr,
                      const AdamConfig& cfg = {}) {
  require(grads.size() == params.size() && state.m.size() == params.size() && state.v.size() == params.size(),
          ErrorCode::ShapeMismatch,
          "adam: params " + std::to_string(params.size()) + ", grads " + std::to_string(grads.size()) + ", state " +
              std::to_string(state.m.size()));
  require(grads.allFinite(), ErrorCode::NonFiniteGradient, "adam: gradient has non-finite entries");
  ++state.step;
  state.m = cfg.beta1 * state.m + (1.0 - cfg.beta1) * grads;
  state.v = cfg.beta2 * state.v + (1.0 - cfg.beta2) * grads.cwiseAbs2();
  const double c1 = 1.0 - std::pow(cfg.beta1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(cfg.beta2, static_cast<double>(state.step));
  params.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.eps);
}

}  // namespace legs
