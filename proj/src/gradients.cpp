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

#include "dpmix/gradients.hpp"

#include <cmath>
#include <limits>
#include <stdexcept>

namespace dpmix {

namespace {

void check_batch_inputs(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                        const AssignmentBatch& z, const ModelState& state) {
  if (batch.rows() == 0) throw std::invalid_argument("empty batch");
  if (z.labels.size() != batch.rows()) {
    throw std::invalid_argument("assignments do not match the batch length");
  }
  if (z.k_active != state.k_active) {
    throw std::invalid_argument("assignments refer to a different cluster count");
  }
  if (batch.cols() != state.mu.cols()) {
    throw std::invalid_argument("batch dimension does not match the state");
  }
  for (Eigen::Index n = 0; n < z.labels.size(); ++n) {
    if (z.labels[n] < 0 || z.labels[n] >= state.k_active) {
      throw std::invalid_argument("assignment label out of range");
    }
  }
}

}  // namespace

Eigen::VectorXd grad_mu_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& mu_k,
                               double z_nk, const Hyperparams& hp) {
  const double inv_s2 = 1.0 / (hp.sigma * hp.sigma);
  return (x - mu_k) * (z_nk * inv_s2) - hp.lambda0 * inv_s2 * (mu_k - hp.m0);
}

double grad_v_sample(Eigen::Index assigned, Eigen::Index k, double v_k,
                     const Hyperparams& hp) {
  const double z = assigned == k ? 1.0 : 0.0;
  const double gt = assigned > k ? 1.0 : 0.0;
  return z / v_k - (gt + hp.a0 - 1.0) / (1.0 - v_k);
}

double hessian_mu(double z_nk, const Hyperparams& hp) {
  const double inv_s2 = 1.0 / (hp.sigma * hp.sigma);
  return -z_nk * inv_s2 - hp.lambda0 * inv_s2;
}

double hessian_v(Eigen::Index assigned, Eigen::Index k, double v_k,
                 const Hyperparams& hp) {
  const double z = assigned == k ? 1.0 : 0.0;
  const double gt = assigned > k ? 1.0 : 0.0;
  return -z / (v_k * v_k) - (gt + hp.a0 - 1.0) / ((1.0 - v_k) * (1.0 - v_k));
}

GradientBatch average_gradients(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                const AssignmentBatch& assignments,
                                const ModelState& state, const Hyperparams& hp) {
  check_batch_inputs(batch, assignments, state);

  const Eigen::Index M = batch.rows();
  const Eigen::Index K = state.k_active;
  const Eigen::Index D = batch.cols();
  const double inv_s2 = 1.0 / (hp.sigma * hp.sigma);
  const double inv_m = 1.0 / static_cast<double>(M);

  // Group sums: with hard labels the data term of each sample touches a
  // single cluster, so one pass over the batch suffices.
  Eigen::MatrixXd sum_dev = Eigen::MatrixXd::Zero(K, D);    // sum of (x - mu_k)/s^2
  Eigen::MatrixXd sumsq_dev = Eigen::MatrixXd::Zero(K, D);  // elementwise squares
  Eigen::VectorXd n_in = Eigen::VectorXd::Zero(K);
  for (Eigen::Index n = 0; n < M; ++n) {
    const Eigen::Index k = assignments.labels[n];
    const Eigen::RowVectorXd dev = (batch.row(n) - state.mu.row(k)) * inv_s2;
    sum_dev.row(k) += dev;
    sumsq_dev.row(k) += dev.cwiseProduct(dev);
    n_in[k] += 1.0;
  }
  Eigen::VectorXd n_gt = Eigen::VectorXd::Zero(K);  // samples assigned past k
  {
    double tail = 0.0;
    for (Eigen::Index k = K - 1; k >= 0; --k) {
      n_gt[k] = tail;
      tail += n_in[k];
    }
  }

  GradientBatch out;
  out.g_mu.resize(K, D);
  out.per_sample_sq_mu.resize(K, D);
  out.g_v.resize(K);
  out.per_sample_sq_v.resize(K);

  for (Eigen::Index k = 0; k < K; ++k) {
    // The prior pull is identical in every per-sample gradient, so the mean
    // keeps it at full strength while the data term is averaged.
    const Eigen::RowVectorXd prior =
        -hp.lambda0 * inv_s2 * (state.mu.row(k) - hp.m0.transpose());
    out.g_mu.row(k) = sum_dev.row(k) * inv_m + prior;
    // sum_n (dev_n + prior)^2 = sum dev^2 + 2 prior sum dev + M prior^2
    out.per_sample_sq_mu.row(k) =
        (sumsq_dev.row(k) + 2.0 * prior.cwiseProduct(sum_dev.row(k)) +
         static_cast<double>(M) * prior.cwiseProduct(prior)) *
        inv_m;

    const double vk = state.v[k];
    const double g_in = 1.0 / vk - (hp.a0 - 1.0) / (1.0 - vk);
    const double g_gt = -hp.a0 / (1.0 - vk);
    const double g_other = -(hp.a0 - 1.0) / (1.0 - vk);
    const double n_other = static_cast<double>(M) - n_in[k] - n_gt[k];
    out.g_v[k] = (n_in[k] * g_in + n_gt[k] * g_gt + n_other * g_other) * inv_m;
    out.per_sample_sq_v[k] = (n_in[k] * g_in * g_in + n_gt[k] * g_gt * g_gt +
                              n_other * g_other * g_other) *
                             inv_m;
  }
  return out;
}

Eigen::VectorXd assignment_scores(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                  const ModelState& state, const Hyperparams& hp) {
  if (x.size() != state.mu.cols()) {
    throw std::invalid_argument("sample dimension does not match the state");
  }
  const Eigen::Index K = state.k_active;
  const double inv_2s2 = 1.0 / (2.0 * hp.sigma * hp.sigma);
  const double dim_term = static_cast<double>(x.size()) * std::log(1.0 / hp.sigma);
  Eigen::VectorXd scores(K);
  double log_remaining = 0.0;  // sum_{l<k} ln(1 - v_l)
  for (Eigen::Index k = 0; k < K; ++k) {
    const double vk = clamp_stick(state.v[k]);
    const double sq = (x - state.mu.row(k)).squaredNorm();
    scores[k] = std::log(vk) + log_remaining + dim_term - sq * inv_2s2;
    log_remaining += std::log(1.0 - vk);
  }
  return scores;
}

Eigen::Index map_assign(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        const ModelState& state, const Hyperparams& hp) {
  const Eigen::VectorXd scores = assignment_scores(x, state, hp);
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < scores.size(); ++k) {
    if (scores[k] > scores[best]) best = k;  // ties keep the lowest index
  }
  return best;
}

AssignmentBatch map_assign_batch(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const ModelState& state, const Hyperparams& hp) {
  AssignmentBatch out;
  out.k_active = state.k_active;
  out.labels.resize(batch.rows());
  for (Eigen::Index n = 0; n < batch.rows(); ++n) {
    out.labels[n] = static_cast<int>(map_assign(batch.row(n), state, hp));
  }
  return out;
}

ConcavityReport concavity_report(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const AssignmentBatch& assignments,
                                 const ModelState& state, const Hyperparams& hp) {
  check_batch_inputs(batch, assignments, state);
  const Eigen::Index K = state.k_active;
  ConcavityReport rep;
  rep.max_hessian_mu = Eigen::VectorXd::Constant(K, -std::numeric_limits<double>::infinity());
  rep.max_hessian_v = Eigen::VectorXd::Constant(K, -std::numeric_limits<double>::infinity());
  for (Eigen::Index n = 0; n < batch.rows(); ++n) {
    const Eigen::Index a = assignments.labels[n];
    for (Eigen::Index k = 0; k < K; ++k) {
      const double hm = hessian_mu(a == k ? 1.0 : 0.0, hp);
      const double hv = hessian_v(a, k, state.v[k], hp);
      if (hm > rep.max_hessian_mu[k]) rep.max_hessian_mu[k] = hm;
      if (hv > rep.max_hessian_v[k]) rep.max_hessian_v[k] = hv;
    }
  }
  rep.mu_concave = (rep.max_hessian_mu.array() < 0.0).all();
  rep.v_concave = (rep.max_hessian_v.array() <= 0.0).all();
  return rep;
}

}  // namespace dpmix
