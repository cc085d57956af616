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

#include "dpmix/baseline_mm.hpp"

#include <stdexcept>

namespace dpmix {

SufficientStats accumulate_stats(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const AssignmentBatch& assignments) {
  if (batch.rows() == 0) throw std::invalid_argument("accumulate_stats: empty batch");
  if (assignments.labels.size() != batch.rows()) {
    throw std::invalid_argument("accumulate_stats: assignments do not match the batch");
  }
  const Eigen::Index K = assignments.k_active;
  SufficientStats stats;
  stats.n_k = Eigen::VectorXd::Zero(K);
  stats.sum_x = Eigen::MatrixXd::Zero(K, batch.cols());
  stats.n_gt = Eigen::VectorXd::Zero(K);
  for (Eigen::Index n = 0; n < batch.rows(); ++n) {
    const Eigen::Index k = assignments.labels[n];
    if (k < 0 || k >= K) throw std::invalid_argument("accumulate_stats: label out of range");
    stats.n_k[k] += 1.0;
    stats.sum_x.row(k) += batch.row(n);
  }
  double tail = 0.0;
  for (Eigen::Index k = K - 1; k >= 0; --k) {
    stats.n_gt[k] = tail;
    tail += stats.n_k[k];
  }
  return stats;
}

Eigen::MatrixXd mm_update_mu(const SufficientStats& stats, const Eigen::MatrixXd& prev_mu,
                             const Hyperparams& hp, std::vector<Eigen::Index>* flagged) {
  const Eigen::Index K = stats.n_k.size();
  if (prev_mu.rows() != K || prev_mu.cols() != stats.sum_x.cols()) {
    throw std::invalid_argument("mm_update_mu: previous locations have the wrong shape");
  }
  Eigen::MatrixXd mu(K, prev_mu.cols());
  for (Eigen::Index k = 0; k < K; ++k) {
    const double denom = stats.n_k[k] + hp.lambda0;
    if (denom == 0.0) {
      mu.row(k) = prev_mu.row(k);
      if (flagged) flagged->push_back(k);
      continue;
    }
    mu.row(k) = (stats.sum_x.row(k) + hp.lambda0 * hp.m0.transpose()) / denom;
  }
  return mu;
}

Eigen::VectorXd mm_update_v(const SufficientStats& stats, const Hyperparams& hp,
                            std::vector<Eigen::Index>* flagged) {
  const Eigen::Index K = stats.n_k.size();
  Eigen::VectorXd v(K);
  for (Eigen::Index k = 0; k < K; ++k) {
    const double denom = stats.n_k[k] + stats.n_gt[k] + hp.a0 - 1.0;
    if (denom == 0.0) {
      v[k] = 0.5;
      if (flagged) flagged->push_back(k);
      continue;
    }
    v[k] = clamp_stick(stats.n_k[k] / denom);
  }
  return v;
}

TrainResult mm_train(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
                     TrainConfig cfg) {
  cfg.optimizer = Optimizer::mm;
  return train(data, hp, cfg);
}

}  // namespace dpmix
