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

#include <doctest.h>

#include <cmath>

#include "dpmix/baseline_mm.hpp"
#include "dpmix/gradients.hpp"
#include "dpmix/model.hpp"
#include "dpmix/rng.hpp"

using namespace dpmix;

namespace {

// Random batch in which every cluster receives at least one sample, so the
// closed-form stick update stays strictly inside (0, 1).
void random_covering_batch(Rng& rng, Eigen::Index K, Eigen::Index D, Eigen::Index M,
                           Eigen::MatrixXd& batch, AssignmentBatch& z) {
  REQUIRE(M >= K);
  batch.resize(M, D);
  z.k_active = K;
  z.labels.resize(M);
  for (Eigen::Index n = 0; n < M; ++n) {
    z.labels[n] = n < K ? static_cast<int>(n)
                        : static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    for (Eigen::Index d = 0; d < D; ++d) batch(n, d) = 3.0 * rng.normal();
  }
}

}  // namespace

TEST_CASE("sufficient statistics count members and pass-throughs") {
  Eigen::MatrixXd batch(4, 2);
  batch << 1.0, 2.0, 3.0, 4.0, 5.0, 6.0, 7.0, 8.0;
  AssignmentBatch z;
  z.k_active = 3;
  z.labels.resize(4);
  z.labels << 0, 2, 0, 1;
  const SufficientStats stats = accumulate_stats(batch, z);
  CHECK(stats.n_k[0] == 2.0);
  CHECK(stats.n_k[1] == 1.0);
  CHECK(stats.n_k[2] == 1.0);
  CHECK(stats.sum_x(0, 0) == 6.0);
  CHECK(stats.sum_x(0, 1) == 8.0);
  CHECK(stats.sum_x(2, 0) == 3.0);
  CHECK(stats.n_gt[0] == 2.0);  // one in cluster 1, one in cluster 2
  CHECK(stats.n_gt[1] == 1.0);
  CHECK(stats.n_gt[2] == 0.0);
}

TEST_CASE("closed-form location is the prior-blended mean") {
  Hyperparams hp = default_hyperparams(1);
  hp.lambda0 = 2.0;
  hp.m0 << 10.0;
  SufficientStats stats;
  stats.n_k = Eigen::VectorXd::Constant(1, 4.0);
  stats.sum_x = Eigen::MatrixXd::Constant(1, 1, 8.0);
  stats.n_gt = Eigen::VectorXd::Zero(1);
  const Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(1, 1);
  const Eigen::MatrixXd mu = mm_update_mu(stats, prev, hp);
  // (8 + 2 * 10) / (4 + 2)
  CHECK(mu(0, 0) == doctest::Approx(28.0 / 6.0).epsilon(1e-15));
}

TEST_CASE("an informationless cluster keeps its location and is flagged") {
  Hyperparams hp = default_hyperparams(1);
  hp.lambda0 = 0.0;
  SufficientStats stats;
  stats.n_k = Eigen::VectorXd::Zero(1);
  stats.sum_x = Eigen::MatrixXd::Zero(1, 1);
  stats.n_gt = Eigen::VectorXd::Zero(1);
  Eigen::MatrixXd prev = Eigen::MatrixXd::Constant(1, 1, 7.5);
  std::vector<Eigen::Index> flagged;
  const Eigen::MatrixXd mu = mm_update_mu(stats, prev, hp, &flagged);
  CHECK(mu(0, 0) == 7.5);
  REQUIRE(flagged.size() == 1);
  CHECK(flagged[0] == 0);
}

TEST_CASE("closed-form sticks follow the count ratio and clamp at zero counts") {
  Hyperparams hp = default_hyperparams(1);
  hp.a0 = 2.0;
  SufficientStats stats;
  stats.n_k.resize(3);
  stats.n_k << 5.0, 0.0, 4.0;
  stats.n_gt.resize(3);
  stats.n_gt << 4.0, 4.0, 0.0;
  stats.sum_x = Eigen::MatrixXd::Zero(3, 1);
  const Eigen::VectorXd v = mm_update_v(stats, hp);
  CHECK(v[0] == doctest::Approx(0.5).epsilon(1e-15));          // 5 / (5+4+1)
  CHECK(v[1] == kStickClampEps);                               // 0 / 5 clamped up
  CHECK(v[2] == doctest::Approx(0.8).epsilon(1e-15));          // 4 / (4+0+1)

  // Degenerate empty tail with a flat prior: flagged midpoint substitute.
  Hyperparams flat = default_hyperparams(1);
  flat.a0 = 1.0;
  SufficientStats none;
  none.n_k = Eigen::VectorXd::Zero(1);
  none.n_gt = Eigen::VectorXd::Zero(1);
  none.sum_x = Eigen::MatrixXd::Zero(1, 1);
  std::vector<Eigen::Index> flagged;
  const Eigen::VectorXd sub = mm_update_v(none, flat, &flagged);
  CHECK(sub[0] == 0.5);
  REQUIRE(flagged.size() == 1);
}

TEST_CASE("batch-summed gradients vanish at the closed-form outputs") {
  // Stationarity of the batch objective: data terms summed over the batch
  // plus one prior term, evaluated pre-clamp.
  Rng rng(909);
  for (int trial = 0; trial < 50; ++trial) {
    const Eigen::Index K = 2 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index D = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index M = K + static_cast<Eigen::Index>(rng.below(40));
    Hyperparams hp = default_hyperparams(D);
    hp.sigma = 0.5 + rng.next_double();
    hp.lambda0 = 0.1 + rng.next_double();
    hp.a0 = 1.5 + 3.0 * rng.next_double();
    for (Eigen::Index d = 0; d < D; ++d) hp.m0[d] = rng.normal();

    Eigen::MatrixXd batch;
    AssignmentBatch z;
    random_covering_batch(rng, K, D, M, batch, z);
    const SufficientStats stats = accumulate_stats(batch, z);

    const Eigen::MatrixXd prev = Eigen::MatrixXd::Zero(K, D);
    const Eigen::MatrixXd mu_star = mm_update_mu(stats, prev, hp);
    // Pre-clamp stick optimum straight from the statistics.
    Eigen::VectorXd v_star(K);
    for (Eigen::Index k = 0; k < K; ++k) {
      v_star[k] = stats.n_k[k] / (stats.n_k[k] + stats.n_gt[k] + hp.a0 - 1.0);
      REQUIRE(v_star[k] > 0.0);
      REQUIRE(v_star[k] < 1.0);
    }

    const double inv_s2 = 1.0 / (hp.sigma * hp.sigma);
    double worst = 0.0;
    for (Eigen::Index k = 0; k < K; ++k) {
      Eigen::VectorXd g_mu =
          -hp.lambda0 * inv_s2 * (mu_star.row(k).transpose() - hp.m0);  // prior, once
      double g_v = -(stats.n_gt[k] + hp.a0 - 1.0) / (1.0 - v_star[k]);
      for (Eigen::Index n = 0; n < M; ++n) {
        if (z.labels[n] == k) {
          g_mu += (batch.row(n).transpose() - mu_star.row(k).transpose()) * inv_s2;
          g_v += 1.0 / v_star[k];
        }
      }
      worst = std::max(worst, g_mu.cwiseAbs().maxCoeff());
      worst = std::max(worst, std::abs(g_v));
    }
    CHECK(worst <= 1e-10);
  }
}

TEST_CASE("averaged per-sample gradients also vanish under flat priors") {
  // With lambda0 = 0 and a0 = 1 the per-sample prior terms disappear, so
  // the minibatch average is stationary at the closed forms as well.
  Rng rng(1010);
  Hyperparams hp = default_hyperparams(2);
  hp.lambda0 = 0.0;
  hp.a0 = 1.0;
  const Eigen::Index K = 3, D = 2, M = 24;
  Eigen::MatrixXd batch;
  AssignmentBatch z;
  random_covering_batch(rng, K, D, M, batch, z);
  const SufficientStats stats = accumulate_stats(batch, z);
  ModelState st;
  st.mu = mm_update_mu(stats, Eigen::MatrixXd::Zero(K, D), hp);
  st.v.resize(K);
  // The last stick has no pass-through mass and peaks only at the
  // boundary, so it gets a placeholder and is excluded from the check.
  for (Eigen::Index k = 0; k + 1 < K; ++k) {
    st.v[k] = stats.n_k[k] / (stats.n_k[k] + stats.n_gt[k]);
    REQUIRE(st.v[k] > 0.0);
    REQUIRE(st.v[k] < 1.0);
  }
  st.v[K - 1] = 0.5;
  st.k_active = K;
  const GradientBatch g = average_gradients(batch, z, st, hp);
  CHECK(g.g_mu.cwiseAbs().maxCoeff() <= 1e-10);
  CHECK(g.g_v.head(K - 1).cwiseAbs().maxCoeff() <= 1e-10);
}

TEST_CASE("one closed-form iteration equals one trainer iteration") {
  Rng rng(1111);
  const Eigen::Index N = 60, D = 2;
  Eigen::MatrixXd data(N, D);
  for (Eigen::Index n = 0; n < N; ++n) {
    for (Eigen::Index d = 0; d < D; ++d) {
      data(n, d) = rng.normal() + (n % 3 == 0 ? 6.0 : n % 3 == 1 ? -6.0 : 0.0);
    }
  }
  Hyperparams hp = default_hyperparams(D);
  hp.trunc_k = 4;
  hp.a0 = static_cast<double>(N);
  TrainConfig cfg;
  cfg.optimizer = Optimizer::mm;
  cfg.max_iters = 1;
  cfg.seed = 5;

  const TrainResult got = mm_train(data, hp, cfg);

  // Manual replay: init, one update sweep, prune, reorder.
  auto init = init_state(data, hp, cfg);
  ModelState st = std::move(init.first);
  const SufficientStats stats = accumulate_stats(data, init.second);
  st.mu = mm_update_mu(stats, st.mu, hp);
  st.v = mm_update_v(stats, hp);
  OptimizerState opt = make_optimizer_state(st);
  prune(st, opt, hp);
  reorder(st, opt);

  REQUIRE(got.state.k_active == st.k_active);
  CHECK((got.state.mu - st.mu).cwiseAbs().maxCoeff() == 0.0);
  CHECK((got.state.v - st.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(got.iters_run == 1);
  REQUIRE(got.trace.size() == 1);
}

TEST_CASE("the mm wrapper overrides the configured optimizer") {
  Rng rng(1212);
  Eigen::MatrixXd data(20, 1);
  for (Eigen::Index n = 0; n < 20; ++n) data(n, 0) = rng.normal();
  Hyperparams hp = default_hyperparams(1);
  hp.trunc_k = 2;
  hp.minibatch_m = 10;
  TrainConfig cfg;
  cfg.optimizer = Optimizer::sga;  // wrapper must ignore this
  cfg.max_iters = 3;
  const TrainResult a = mm_train(data, hp, cfg);
  cfg.optimizer = Optimizer::mm;
  const TrainResult b = train(data, hp, cfg);
  REQUIRE(a.trace.size() == b.trace.size());
  REQUIRE(a.state.v.size() == b.state.v.size());
  CHECK((a.state.v - b.state.v).cwiseAbs().maxCoeff() == 0.0);
  CHECK(a.trace.back().elbo.total == b.trace.back().elbo.total);
}
