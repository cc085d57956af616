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

#ifndef DPMIX_GRADIENTS_HPP
#define DPMIX_GRADIENTS_HPP

#include <Eigen/Dense>

#include "dpmix/model.hpp"

namespace dpmix {

// Minibatch-averaged gradients plus the per-sample squared gradients that
// feed the diagonal empirical Fisher scaling.
struct GradientBatch {
  Eigen::MatrixXd g_mu;              // k_active x D
  Eigen::VectorXd g_v;               // k_active
  Eigen::MatrixXd per_sample_sq_mu;  // k_active x D, mean of squared grads
  Eigen::VectorXd per_sample_sq_v;   // k_active
};

/* Single-sample gradient of the log posterior in one cluster location:
 * ((x - mu_k) / sigma^2) * z_nk - lambda0 * (mu_k - m0) / sigma^2.
 * The prior term is present whether or not the sample is assigned here. */
Eigen::VectorXd grad_mu_sample(const Eigen::VectorXd& x, const Eigen::VectorXd& mu_k,
                               double z_nk, const Hyperparams& hp);

/* Single-sample gradient in one stick proportion. assigned is the hard
 * label of the sample; the gradient in v_k sees z_nk = [assigned == k] and
 * the pass-through indicator [assigned > k]:
 * z_nk / v_k - ([assigned > k] + a0 - 1) / (1 - v_k). */
double grad_v_sample(Eigen::Index assigned, Eigen::Index k, double v_k,
                     const Hyperparams& hp);

// Second derivatives of the same per-sample objectives (diagonal terms).
double hessian_mu(double z_nk, const Hyperparams& hp);
double hessian_v(Eigen::Index assigned, Eigen::Index k, double v_k,
                 const Hyperparams& hp);

// Minibatch average of the per-sample gradients over every active cluster,
// together with the averaged elementwise squares. Throws on an empty batch
// or when assignments do not match the batch or the state.
GradientBatch average_gradients(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                const AssignmentBatch& assignments,
                                const ModelState& state, const Hyperparams& hp);

// Unnormalised log posterior score of x under each cluster:
// ln v_k + sum_{l<k} ln(1 - v_l) + D ln(1/sigma) - |x - mu_k|^2 / (2 sigma^2).
Eigen::VectorXd assignment_scores(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                                  const ModelState& state, const Hyperparams& hp);

// Hard MAP label for one sample; ties resolve to the lowest index.
Eigen::Index map_assign(const Eigen::Ref<const Eigen::RowVectorXd>& x,
                        const ModelState& state, const Hyperparams& hp);

// MAP labels for a whole batch.
AssignmentBatch map_assign_batch(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const ModelState& state, const Hyperparams& hp);

// Worst-case (largest) per-sample second derivatives seen on a batch, per
// cluster. The step-size theory wants these non-positive.
struct ConcavityReport {
  Eigen::VectorXd max_hessian_mu;  // per cluster
  Eigen::VectorXd max_hessian_v;
  bool mu_concave = false;  // every mu Hessian entry strictly negative
  bool v_concave = false;   // every v Hessian entry non-positive
  bool all_concave() const { return mu_concave && v_concave; }
};

ConcavityReport concavity_report(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                                 const AssignmentBatch& assignments,
                                 const ModelState& state, const Hyperparams& hp);

}  // namespace dpmix

#endif  // DPMIX_GRADIENTS_HPP
