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

#ifndef DPMIX_BASELINE_MM_HPP
#define DPMIX_BASELINE_MM_HPP

#include <Eigen/Dense>
#include <vector>

#include "dpmix/model.hpp"
#include "dpmix/trainer.hpp"

namespace dpmix {

// Per-cluster sufficient statistics of one batch under hard assignments.
struct SufficientStats {
  Eigen::VectorXd n_k;    // members per cluster
  Eigen::MatrixXd sum_x;  // per-cluster feature sums, K x D
  Eigen::VectorXd n_gt;   // members assigned to any later cluster
};

SufficientStats accumulate_stats(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const AssignmentBatch& assignments);

/* Closed-form location update mu_k = (sum_x_k + lambda0 m0) / (n_k + lambda0),
 * the stationary point of the batch objective (summed data terms plus the
 * prior once). A cluster with n_k + lambda0 = 0 has no information at all;
 * it keeps its previous location and its index is appended to *flagged when
 * given. */
Eigen::MatrixXd mm_update_mu(const SufficientStats& stats, const Eigen::MatrixXd& prev_mu,
                             const Hyperparams& hp,
                             std::vector<Eigen::Index>* flagged = nullptr);

/* Closed-form stick update v_k = n_k / (n_k + n_gt_k + a0 - 1), clamped to
 * the usual open interval. A zero denominator yields the clamp midpoint
 * substitute v_k = 0.5 and flags the index. */
Eigen::VectorXd mm_update_v(const SufficientStats& stats, const Hyperparams& hp,
                            std::vector<Eigen::Index>* flagged = nullptr);

// Same contract as train() with cfg.optimizer forced to Optimizer::mm.
TrainResult mm_train(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
                     TrainConfig cfg);

}  // namespace dpmix

#endif  // DPMIX_BASELINE_MM_HPP
