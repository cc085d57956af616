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

#include "dpmix/elbo.hpp"

#include <cmath>
#include <stdexcept>

namespace dpmix {

ElboBreakdown elbo(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                   const AssignmentBatch& assignments, const ModelState& state,
                   const Hyperparams& hp) {
  if (batch.rows() == 0) throw std::invalid_argument("elbo: empty batch");
  if (assignments.labels.size() != batch.rows()) {
    throw std::invalid_argument("elbo: assignments do not match the batch length");
  }
  if (assignments.k_active != state.k_active) {
    throw std::invalid_argument("elbo: assignments refer to a different cluster count");
  }
  if (batch.cols() != state.mu.cols()) {
    throw std::invalid_argument("elbo: batch dimension does not match the state");
  }

  const Eigen::Index M = batch.rows();
  const Eigen::Index K = state.k_active;

  // ln pi_k under clamped sticks, shared by every term that needs it.
  Eigen::VectorXd log_pi(K);
  Eigen::VectorXd log_one_minus(K);
  {
    double acc = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      const double vk = clamp_stick(state.v[k]);
      log_pi[k] = std::log(vk) + acc;
      log_one_minus[k] = std::log(1.0 - vk);
      acc += log_one_minus[k];
    }
  }

  Eigen::VectorXd sq(M);  // |x_n - mu_{j(n)}|^2
  for (Eigen::Index n = 0; n < M; ++n) {
    const Eigen::Index j = assignments.labels[n];
    if (j < 0 || j >= K) throw std::invalid_argument("elbo: label out of range");
    sq[n] = (batch.row(n) - state.mu.row(j)).squaredNorm();
  }

  ElboBreakdown out;

  for (Eigen::Index n = 0; n < M; ++n) out.lp_x += -0.5 * sq[n];
  for (Eigen::Index k = 0; k < K; ++k) {
    out.lp_mu += -0.5 * hp.lambda0 * (state.mu.row(k) - hp.m0.transpose()).squaredNorm();
  }
  for (Eigen::Index n = 0; n < M; ++n) out.lp_zv += log_pi[assignments.labels[n]];
  for (Eigen::Index k = 0; k < K; ++k) out.lp_v += (hp.a0 - 1.0) * log_one_minus[k];

  // Entropy terms of the collapsed point-mass family, accumulated from
  // scratch rather than recombined from the lp_* values above.
  for (Eigen::Index n = 0; n < M; ++n) {
    out.lq_z += -0.5 * sq[n] + log_pi[assignments.labels[n]];
  }
  for (Eigen::Index n = 0; n < M; ++n) out.lq_v += log_pi[assignments.labels[n]];
  for (Eigen::Index k = 0; k < K; ++k) out.lq_v += (hp.a0 - 1.0) * log_one_minus[k];
  for (Eigen::Index n = 0; n < M; ++n) out.lq_mu += -0.5 * sq[n];
  for (Eigen::Index k = 0; k < K; ++k) {
    out.lq_mu += -0.5 * hp.lambda0 * (state.mu.row(k) - hp.m0.transpose()).squaredNorm();
  }

  out.total = (out.lp_x + out.lp_mu + out.lp_zv + out.lp_v) -
              (out.lq_z + out.lq_v + out.lq_mu);
  return out;
}

}  // namespace dpmix
