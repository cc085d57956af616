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

#include "dpmix/model.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace dpmix {

double clamp_stick(double v) {
  return std::clamp(v, kStickClampEps, 1.0 - kStickClampEps);
}

Eigen::VectorXd clamp_sticks(Eigen::VectorXd v) {
  for (Eigen::Index k = 0; k < v.size(); ++k) v[k] = clamp_stick(v[k]);
  return v;
}

Eigen::VectorXd stick_weights(const Eigen::VectorXd& v) {
  Eigen::VectorXd pi(v.size());
  double remaining = 1.0;  // prod_{l<k} (1 - v_l)
  for (Eigen::Index k = 0; k < v.size(); ++k) {
    if (!(v[k] > 0.0 && v[k] < 1.0)) {
      throw std::invalid_argument("stick_weights: proportions must lie in (0, 1)");
    }
    pi[k] = v[k] * remaining;
    remaining *= 1.0 - v[k];
  }
  return pi;
}

std::vector<std::string> validate_hyperparams(const Hyperparams& hp, Eigen::Index dim) {
  std::vector<std::string> errs;
  if (!(hp.sigma > 0.0)) errs.push_back("sigma must be positive");
  if (!(hp.lambda0 >= 0.0)) errs.push_back("lambda0 must be non-negative");
  if (!(hp.a0 >= 1.0)) errs.push_back("a0 must be at least 1");
  if (hp.m0.size() != dim) errs.push_back("m0 length must match the data dimension");
  if (hp.trunc_k < 1) errs.push_back("trunc_k must be at least 1");
  if (!(hp.thr > 0.0 && hp.thr < 1.0)) errs.push_back("thr must lie in (0, 1)");
  if (!(hp.eta > 0.0)) errs.push_back("eta must be positive");
  if (!(hp.alpha >= 0.0 && hp.alpha < 1.0)) errs.push_back("alpha must lie in [0, 1)");
  if (hp.minibatch_m < 1) errs.push_back("minibatch size must be at least 1");
  for (Eigen::Index d = 0; d < hp.m0.size(); ++d) {
    if (!std::isfinite(hp.m0[d])) {
      errs.push_back("m0 must be finite");
      break;
    }
  }
  return errs;
}

std::vector<std::string> validate_state(const ModelState& state, const Hyperparams& hp) {
  std::vector<std::string> errs;
  if (state.k_active != state.mu.rows()) errs.push_back("k_active does not match mu rows");
  if (state.k_active != state.v.size()) errs.push_back("k_active does not match v length");
  if (state.k_active < 1) errs.push_back("at least one cluster must remain active");
  if (state.mu.rows() > 0 && hp.m0.size() > 0 && state.mu.cols() != hp.m0.size()) {
    errs.push_back("mu column count does not match m0 length");
  }
  if (!state.mu.allFinite()) errs.push_back("mu contains non-finite entries");
  for (Eigen::Index k = 0; k < state.v.size(); ++k) {
    if (!(state.v[k] > 0.0 && state.v[k] < 1.0)) {
      errs.push_back("v contains entries outside (0, 1)");
      break;
    }
  }
  return errs;
}

Hyperparams default_hyperparams(Eigen::Index dim) {
  Hyperparams hp;
  hp.m0 = Eigen::VectorXd::Zero(dim);
  return hp;
}

}  // namespace dpmix
