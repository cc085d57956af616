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

#ifndef DPMIX_TRAINER_HPP
#define DPMIX_TRAINER_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "dpmix/elbo.hpp"
#include "dpmix/model.hpp"
#include "dpmix/optimizers.hpp"
#include "dpmix/rng.hpp"

namespace dpmix {

enum class Optimizer { sga, momentum, fisher, mm };

Optimizer optimizer_from_string(const std::string& name);
std::string to_string(Optimizer opt);

// Training stops early once the relative change of the logged bound stays
// below kConvergenceRelTol for kConvergencePatience consecutive iterations.
inline constexpr double kConvergenceRelTol = 1e-5;
inline constexpr int kConvergencePatience = 5;

struct TrainConfig {
  int max_iters = 60;
  Optimizer optimizer = Optimizer::fisher;
  std::uint64_t seed = 0;
  int full_elbo_every = 0;   // evaluate the bound on the full dataset every
                             // this many iterations; 0 logs the batch bound
  bool reorder = true;       // keep sticks sorted descending after each step
  int mm_subset_cap = 5000;  // closed-form baseline trains on at most this
                             // many rows, drawn once up front
  bool record_wall_time = false;  // stamp trace rows with wall-clock times
  double epsilon = 1e-8;          // Fisher damping
};

struct TraceRow {
  int iter = 0;
  ElboBreakdown elbo;
  Eigen::Index k_active = 0;
  double time_ms = 0.0;
  double bb_eta = 0.0;  // NaN whenever the diagnostic is undefined
};

using TrainingTrace = std::vector<TraceRow>;

struct TrainResult {
  ModelState state;
  TrainingTrace trace;
  Eigen::VectorXi assignments;  // MAP labels of the full dataset, final state
  int iters_run = 0;
  double total_time_ms = 0.0;
};

// Best-of-ten k-means++ restarts, each refined by Lloyd sweeps until the
// relative inertia change drops below 1e-4 or 25 center updates have run.
// Returns a k x D center matrix. Throws when k < 1 or k > data.rows().
Eigen::MatrixXd kmeans_init(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                            std::uint64_t seed);

// Initial state: k-means centers for the locations, hard assignments under
// uniform provisional sticks v = 1/(K+1), then closed-form sticks from the
// assignment counts. The truncation level is capped at data.rows().
std::pair<ModelState, AssignmentBatch> init_state(
    const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
    const TrainConfig& cfg);

// m distinct row indices uniform over [0, n).
std::vector<int> sample_minibatch(Eigen::Index n, int m, Rng& rng);

// min(n, 20 * expected_classes): a batch large enough to see every class
// about twenty times on balanced data.
int default_minibatch_size(Eigen::Index n, int expected_classes);

// Drops every cluster whose stick proportion fell below hp.thr, always
// retaining the largest-v cluster (lowest index on ties). Rows of the
// momentum buffers follow; the step-size snapshot is reset when anything
// was dropped, so the next diagnostic reads NaN instead of comparing
// incompatible shapes.
void prune(ModelState& state, OptimizerState& opt, const Hyperparams& hp);

// Stable sort of clusters by descending stick proportion. Locations,
// momentum buffers and the diagnostic snapshot are permuted along.
void reorder(ModelState& state, OptimizerState& opt);

// Full training loop: init, per-iteration hard assignment, gradient or
// closed-form update, bound evaluation, prune and reorder, convergence
// check. Deterministic for a fixed (data, hp, cfg).
TrainResult train(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
                  const TrainConfig& cfg);

}  // namespace dpmix

#endif  // DPMIX_TRAINER_HPP
