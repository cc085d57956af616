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

#ifndef DPMIX_OPTIMIZERS_HPP
#define DPMIX_OPTIMIZERS_HPP

#include <Eigen/Dense>
#include <optional>

#include "dpmix/gradients.hpp"
#include "dpmix/model.hpp"

namespace dpmix {

// Mutable companion of a ModelState: momentum buffers, the Fisher damping
// constant, and the previous iterate/gradient kept for the Barzilai-Borwein
// step-size diagnostic. Rows stay aligned with the state's clusters through
// prune and reorder.
struct OptimizerState {
  Eigen::MatrixXd gamma_mu;  // momentum accumulator, k_active x D
  Eigen::VectorXd gamma_v;   // k_active
  double epsilon = 1e-8;

  struct Snapshot {
    Eigen::MatrixXd mu;
    Eigen::VectorXd v;
    Eigen::MatrixXd g_mu;
    Eigen::VectorXd g_v;
  };
  std::optional<Snapshot> prev;
};

OptimizerState make_optimizer_state(const ModelState& state, double epsilon = 1e-8);

// Plain ascent: theta' = theta + eta * g. Sticks are clamped after the step.
ModelState step_constant(const ModelState& state, const GradientBatch& grads,
                         const Hyperparams& hp);

// Heavy-ball ascent: gamma' = alpha * gamma + eta * g; theta' = theta + gamma'.
// The buffers in opt are replaced by gamma'. alpha = 0 reproduces
// step_constant exactly.
ModelState step_momentum(const ModelState& state, const GradientBatch& grads,
                         OptimizerState& opt, const Hyperparams& hp);

// Fisher-preconditioned ascent: theta' = theta + eta * g / (F + epsilon),
// elementwise, where F is the minibatch mean of squared per-sample
// gradients, recomputed fresh each call. A zero denominator routes the
// update through component zero: theta' = theta (the gradient is zero too).
ModelState step_fisher(const ModelState& state, const GradientBatch& grads,
                       const OptimizerState& opt, const Hyperparams& hp);

/* Barzilai-Borwein ratio |s|^2 / (s.y) with s = x - x_prev and
 * y = g - g_prev, over one flattened parameter block. Returns nullopt when
 * the ratio is undefined: mismatched shapes, |s| = 0, or s.y = 0. The raw
 * signed value is returned; under ascent on a concave objective it is
 * negative, and its magnitude is the curvature-matched step length. */
std::optional<double> bb_stepsize(const Eigen::VectorXd& prev_x, const Eigen::VectorXd& x,
                                  const Eigen::VectorXd& prev_g, const Eigen::VectorXd& g);

}  // namespace dpmix

#endif  // DPMIX_OPTIMIZERS_HPP
