/* Copyright 2026 The dpmix Authors
 *
 * Licensed under the Apache License, Version 2.0 (the "License");
 * you may not use this file except in compliance with the License.
 * You may obtain a copy of the License at
 *
 *     http://www.apache.org/licenses/LICENSE-2.0
 *
 * Unless required by applicable law or agreed to in writing, software
 * distributed under the License is distributed on an "AS IS" BASIS,
 * WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
 * See the License for the specific language governing permissions and
 * limitations under the License. */

#include "dpmix/optimizers.hpp"

#include <stdexcept>

namespace dpmix {

namespace {

void check_grad_shapes(const ModelState& state, const GradientBatch& grads) {
  if (grads.g_mu.rows() != state.mu.rows() || grads.g_mu.cols() != state.mu.cols() ||
      grads.g_v.size() != state.v.size()) {
    throw std::invalid_argument("gradient shapes do not match the state");
  }
}

}  // namespace

OptimizerState make_optimizer_state(const ModelState& state, double epsilon) {
  OptimizerState opt;
  opt.gamma_mu = Eigen::MatrixXd::Zero(state.mu.rows(), state.mu.cols());
  opt.gamma_v = Eigen::VectorXd::Zero(state.v.size());
  opt.epsilon = epsilon;
  return opt;
}

ModelState step_constant(const ModelState& state, const GradientBatch& grads,
                         const Hyperparams& hp) {
  check_grad_shapes(state, grads);
  ModelState next;
  next.mu = state.mu + hp.eta * grads.g_mu;
  next.v = clamp_sticks(state.v + hp.eta * grads.g_v);
  next.k_active = state.k_active;
  return next;
}

ModelState step_momentum(const ModelState& state, const GradientBatch& grads,
                         OptimizerState& opt, const Hyperparams& hp) {
  check_grad_shapes(state, grads);
  if (opt.gamma_mu.rows() != state.mu.rows() || opt.gamma_v.size() != state.v.size()) {
    throw std::invalid_argument("momentum buffers do not match the state");
  }
  opt.gamma_mu = hp.alpha * opt.gamma_mu + hp.eta * grads.g_mu;
  opt.gamma_v = hp.alpha * opt.gamma_v + hp.eta * grads.g_v;
  ModelState next;
  next.mu = state.mu + opt.gamma_mu;
  next.v = clamp_sticks(state.v + opt.gamma_v);
  next.k_active = state.k_active;
  return next;
}

ModelState step_fisher(const ModelState& state, const GradientBatch& grads,
                       const OptimizerState& opt, const Hyperparams& hp) {
  check_grad_shapes(state, grads);
  ModelState next;
  next.mu.resize(state.mu.rows(), state.mu.cols());
  for (Eigen::Index k = 0; k < state.mu.rows(); ++k) {
    for (Eigen::Index d = 0; d < state.mu.cols(); ++d) {
      const double denom = grads.per_sample_sq_mu(k, d) + opt.epsilon;
      // A vanishing mean square forces a vanishing mean gradient, so the
      // removable singularity is filled with a null update.
      const double u = denom == 0.0 ? 0.0 : hp.eta * grads.g_mu(k, d) / denom;
      next.mu(k, d) = state.mu(k, d) + u;
    }
  }
  Eigen::VectorXd v_next(state.v.size());
  for (Eigen::Index k = 0; k < state.v.size(); ++k) {
    const double denom = grads.per_sample_sq_v[k] + opt.epsilon;
    const double u = denom == 0.0 ? 0.0 : hp.eta * grads.g_v[k] / denom;
    v_next[k] = state.v[k] + u;
  }
  next.v = clamp_sticks(std::move(v_next));
  next.k_active = state.k_active;
  return next;
}

std::optional<double> bb_stepsize(const Eigen::VectorXd& prev_x, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& prev_g, const Eigen::VectorXd& g) {
  if (prev_x.size() != x.size() || prev_g.size() != g.size() || x.size() != g.size() ||
      x.size() == 0) {
    return std::nullopt;
  }
  const Eigen::VectorXd s = x - prev_x;
  const Eigen::VectorXd y = g - prev_g;
  const double ss = s.squaredNorm();
  const double sy = s.dot(y);
  if (ss == 0.0 || sy == 0.0) return std::nullopt;
  return ss / sy;
}

}  // namespace dpmix
