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

#ifndef DPMIX_MODEL_HPP
#define DPMIX_MODEL_HPP

#include <Eigen/Dense>
#include <string>
#include <vector>

namespace dpmix {

// Stick proportions live in the open unit interval; every write path clamps
// to [eps, 1 - eps] so logs and the 1/(1-v) factors stay finite.
inline constexpr double kStickClampEps = 1e-6;

/* Fixed hyperparameters of the truncated stick-breaking Gaussian mixture.
 * sigma is the shared isotropic observation scale, (lambda0, m0) the
 * Gaussian prior precision scale and mean on each cluster location, and a0
 * the Beta(1, a0) concentration on the stick proportions. The remaining
 * fields configure the optimizer rather than the model. */
struct Hyperparams {
  double sigma = 1.0;
  double lambda0 = 1e-2;
  Eigen::VectorXd m0;  // prior mean, length D
  double a0 = 1.0;
  int trunc_k = 50;       // truncation level of the stick-breaking weights
  double thr = 1e-3;      // prune clusters whose stick proportion drops below
  double eta = 0.1;       // gradient step size
  double alpha = 0.9;     // momentum decay
  int minibatch_m = 100;  // samples per stochastic gradient estimate
};

// Variational point estimates: one location row per retained cluster plus
// its stick proportion. k_active == mu.rows() == v.size() at all times.
struct ModelState {
  Eigen::MatrixXd mu;  // k_active x D
  Eigen::VectorXd v;   // k_active, each in (0, 1)
  Eigen::Index k_active = 0;
};

// Hard responsibilities for one batch, positional with the batch rows.
struct AssignmentBatch {
  Eigen::VectorXi labels;       // each in [0, k_active)
  Eigen::Index k_active = 0;    // cluster count the labels refer to
};

double clamp_stick(double v);
Eigen::VectorXd clamp_sticks(Eigen::VectorXd v);

// Mixture weights pi_k = v_k * prod_{l<k} (1 - v_l). Throws
// std::invalid_argument if any v_k lies outside (0, 1).
Eigen::VectorXd stick_weights(const Eigen::VectorXd& v);

// Human-readable list of violated hyperparameter constraints; empty means
// valid. dim is the data dimensionality m0 must match.
std::vector<std::string> validate_hyperparams(const Hyperparams& hp, Eigen::Index dim);

// Shape/range audit of a state against hyperparameters. Non-throwing.
std::vector<std::string> validate_state(const ModelState& state, const Hyperparams& hp);

// Convenient default hyperparameters for D-dimensional data (m0 = 0).
Hyperparams default_hyperparams(Eigen::Index dim);

}  // namespace dpmix

#endif  // DPMIX_MODEL_HPP
