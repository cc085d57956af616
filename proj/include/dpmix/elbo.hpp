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

#ifndef DPMIX_ELBO_HPP
#define DPMIX_ELBO_HPP

#include <Eigen/Dense>

#include "dpmix/model.hpp"

namespace dpmix {

/* Evidence lower bound of a batch under hard assignments, split into the
 * four model terms (lp_*) and the three entropy terms of the degenerate
 * variational family (lq_*). total = sum(lp) - sum(lq). Under point-mass
 * posteriors most terms cancel, which leaves total = -(lp_x + lp_zv); the
 * seven terms are still accumulated independently so that cancellation can
 * be checked rather than assumed. */
struct ElboBreakdown {
  double lp_x = 0.0;   // data fit: sum_n -0.5 |x_n - mu_{j(n)}|^2
  double lp_mu = 0.0;  // location prior: sum_k -(lambda0/2) |mu_k - m0|^2
  double lp_zv = 0.0;  // assignment likelihood: sum_n ln pi_{j(n)}
  double lp_v = 0.0;   // stick prior: sum_k (a0 - 1) ln(1 - v_k)
  double lq_z = 0.0;
  double lq_v = 0.0;
  double lq_mu = 0.0;
  double total = 0.0;
};

// Computes every term on the given batch. Stick logs clamp v away from the
// boundary first. Throws on an empty batch or mismatched assignments.
ElboBreakdown elbo(const Eigen::Ref<const Eigen::MatrixXd>& batch,
                   const AssignmentBatch& assignments, const ModelState& state,
                   const Hyperparams& hp);

}  // namespace dpmix

#endif  // DPMIX_ELBO_HPP
