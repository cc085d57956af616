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

#include "dpmix/gradients.hpp"
#include "dpmix/model.hpp"
#include "dpmix/rng.hpp"

using namespace dpmix;

namespace {

// Per-sample objective in one location, the function grad_mu_sample should
// differentiate: -z |x-mu|^2 / (2 s^2) - l0 |mu-m0|^2 / (2 s^2).
double mu_objective(const Eigen::VectorXd& x, const Eigen::VectorXd& mu, double z,
                    const Hyperparams& hp) {
  const double s2 = hp.sigma * hp.sigma;
  return -z * (x - mu).squaredNorm() / (2.0 * s2) -
         hp.lambda0 * (mu - hp.m0).squaredNorm() / (2.0 * s2);
}

// Per-sample objective in one stick proportion.
double v_objective(Eigen::Index assigned, Eigen::Index k, double v, const Hyperparams& hp) {
  const double z = assigned == k ? 1.0 : 0.0;
  const double gt = assigned > k ? 1.0 : 0.0;
  return z * std::log(v) + gt * std::log(1.0 - v) + (hp.a0 - 1.0) * std::log(1.0 - v);
}

ModelState random_state(Rng& rng, Eigen::Index K, Eigen::Index D) {
  ModelState st;
  st.mu.resize(K, D);
  for (Eigen::Index k = 0; k < K; ++k) {
    for (Eigen::Index d = 0; d < D; ++d) st.mu(k, d) = 2.0 * rng.normal();
  }
  st.v.resize(K);
  for (Eigen::Index k = 0; k < K; ++k) st.v[k] = 0.05 + 0.9 * rng.next_double();
  st.k_active = K;
  return st;
}

}  // namespace

TEST_CASE("location gradient matches the worked one-dimensional example") {
  Hyperparams hp = default_hyperparams(1);
  hp.sigma = 1.0;
  hp.lambda0 = 0.1;
  Eigen::VectorXd x(1), mu(1);
  x << 2.0;
  mu << 1.0;
  const Eigen::VectorXd g = grad_mu_sample(x, mu, 1.0, hp);
  CHECK(g[0] == doctest::Approx(0.9).epsilon(1e-15));
}

TEST_CASE("location gradient agrees with central differences") {
  Rng rng(101);
  const double h = 1e-6;
  for (int trial = 0; trial < 60; ++trial) {
    const Eigen::Index D = 1 + static_cast<Eigen::Index>(rng.below(5));
    Hyperparams hp = default_hyperparams(D);
    hp.sigma = 0.5 + 1.5 * rng.next_double();
    hp.lambda0 = rng.next_double();
    for (Eigen::Index d = 0; d < D; ++d) hp.m0[d] = rng.normal();
    Eigen::VectorXd x(D), mu(D);
    for (Eigen::Index d = 0; d < D; ++d) {
      x[d] = 2.0 * rng.normal();
      mu[d] = 2.0 * rng.normal();
    }
    const double z = rng.below(2) ? 1.0 : 0.0;
    const Eigen::VectorXd g = grad_mu_sample(x, mu, z, hp);
    for (Eigen::Index d = 0; d < D; ++d) {
      Eigen::VectorXd hi = mu, lo = mu;
      hi[d] += h;
      lo[d] -= h;
      const double fd = (mu_objective(x, hi, z, hp) - mu_objective(x, lo, z, hp)) / (2.0 * h);
      CHECK(std::abs(fd - g[d]) <= 1e-5 * std::max(1.0, std::abs(g[d])));
    }
  }
}

TEST_CASE("stick gradient matches the worked examples") {
  Hyperparams hp = default_hyperparams(1);
  hp.a0 = 1.0;
  // Assigned to the cluster itself: 1/v with no competing terms.
  CHECK(grad_v_sample(0, 0, 0.5, hp) == doctest::Approx(2.0).epsilon(1e-15));
  // Assigned past the cluster: -1/(1-v).
  CHECK(grad_v_sample(2, 0, 0.5, hp) == doctest::Approx(-2.0).epsilon(1e-15));
  // Assigned before the cluster with a flat prior: no signal at all.
  CHECK(grad_v_sample(0, 1, 0.5, hp) == doctest::Approx(0.0).epsilon(1e-15));
}

TEST_CASE("stick gradient agrees with central differences") {
  Rng rng(202);
  const double h = 1e-6;
  for (int trial = 0; trial < 100; ++trial) {
    Hyperparams hp = default_hyperparams(1);
    hp.a0 = 1.0 + 4.0 * rng.next_double();
    const auto assigned = static_cast<Eigen::Index>(rng.below(5));
    const auto k = static_cast<Eigen::Index>(rng.below(5));
    const double v = 0.05 + 0.9 * rng.next_double();
    const double g = grad_v_sample(assigned, k, v, hp);
    const double fd =
        (v_objective(assigned, k, v + h, hp) - v_objective(assigned, k, v - h, hp)) / (2.0 * h);
    CHECK(std::abs(fd - g) <= 1e-5 * std::max(1.0, std::abs(g)));
  }
}

TEST_CASE("second derivatives match the worked examples and differences") {
  Hyperparams hp = default_hyperparams(1);
  hp.sigma = 2.0;
  hp.lambda0 = 1.0;
  CHECK(hessian_mu(1.0, hp) == doctest::Approx(-0.5).epsilon(1e-15));

  Hyperparams hv = default_hyperparams(1);
  hv.a0 = 1.0;
  CHECK(hessian_v(0, 0, 0.5, hv) == doctest::Approx(-4.0).epsilon(1e-15));
  // A sub-flat prior (a0 < 1) can flip the curvature positive.
  hv.a0 = 0.5;
  CHECK(hessian_v(0, 1, 0.5, hv) == doctest::Approx(2.0).epsilon(1e-15));

  Rng rng(303);
  const double h = 1e-4;
  for (int trial = 0; trial < 30; ++trial) {
    Hyperparams hp2 = default_hyperparams(1);
    hp2.a0 = 1.0 + 3.0 * rng.next_double();
    const auto assigned = static_cast<Eigen::Index>(rng.below(4));
    const auto k = static_cast<Eigen::Index>(rng.below(4));
    const double v = 0.15 + 0.7 * rng.next_double();
    const double fd = (v_objective(assigned, k, v + h, hp2) -
                       2.0 * v_objective(assigned, k, v, hp2) +
                       v_objective(assigned, k, v - h, hp2)) /
                      (h * h);
    const double hess = hessian_v(assigned, k, v, hp2);
    CHECK(std::abs(fd - hess) <= 1e-4 * std::max(1.0, std::abs(hess)));
  }
}

TEST_CASE("batch averaging equals the literal per-sample loop") {
  Rng rng(404);
  for (int trial = 0; trial < 20; ++trial) {
    const Eigen::Index K = 2 + static_cast<Eigen::Index>(rng.below(4));
    const Eigen::Index D = 1 + static_cast<Eigen::Index>(rng.below(3));
    const Eigen::Index M = 1 + static_cast<Eigen::Index>(rng.below(30));
    Hyperparams hp = default_hyperparams(D);
    hp.sigma = 0.5 + rng.next_double();
    hp.lambda0 = rng.next_double();
    hp.a0 = 1.0 + 3.0 * rng.next_double();
    ModelState st = random_state(rng, K, D);
    Eigen::MatrixXd batch(M, D);
    AssignmentBatch z;
    z.k_active = K;
    z.labels.resize(M);
    for (Eigen::Index n = 0; n < M; ++n) {
      for (Eigen::Index d = 0; d < D; ++d) batch(n, d) = 3.0 * rng.normal();
      z.labels[n] = static_cast<int>(rng.below(static_cast<std::uint64_t>(K)));
    }

    const GradientBatch fast = average_gradients(batch, z, st, hp);

    // Oracle: accumulate every per-sample gradient one by one.
    Eigen::MatrixXd g_mu = Eigen::MatrixXd::Zero(K, D);
    Eigen::MatrixXd sq_mu = Eigen::MatrixXd::Zero(K, D);
    Eigen::VectorXd g_v = Eigen::VectorXd::Zero(K);
    Eigen::VectorXd sq_v = Eigen::VectorXd::Zero(K);
    for (Eigen::Index n = 0; n < M; ++n) {
      for (Eigen::Index k = 0; k < K; ++k) {
        const double zk = z.labels[n] == k ? 1.0 : 0.0;
        const Eigen::VectorXd gm =
            grad_mu_sample(batch.row(n).transpose(), st.mu.row(k).transpose(), zk, hp);
        g_mu.row(k) += gm.transpose();
        sq_mu.row(k) += gm.cwiseProduct(gm).transpose();
        const double gv = grad_v_sample(z.labels[n], k, st.v[k], hp);
        g_v[k] += gv;
        sq_v[k] += gv * gv;
      }
    }
    const double inv_m = 1.0 / static_cast<double>(M);
    CHECK((fast.g_mu - g_mu * inv_m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fast.per_sample_sq_mu - sq_mu * inv_m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fast.g_v - g_v * inv_m).cwiseAbs().maxCoeff() < 1e-12);
    CHECK((fast.per_sample_sq_v - sq_v * inv_m).cwiseAbs().maxCoeff() < 1e-12);
  }
}

TEST_CASE("batch averaging rejects malformed inputs") {
  Hyperparams hp = default_hyperparams(2);
  ModelState st;
  st.mu = Eigen::MatrixXd::Zero(2, 2);
  st.v = Eigen::VectorXd::Constant(2, 0.5);
  st.k_active = 2;
  Eigen::MatrixXd batch = Eigen::MatrixXd::Zero(3, 2);
  AssignmentBatch z;
  z.k_active = 2;
  z.labels = Eigen::VectorXi::Zero(3);

  Eigen::MatrixXd empty(0, 2);
  AssignmentBatch znone;
  znone.k_active = 2;
  znone.labels = Eigen::VectorXi::Zero(0);
  CHECK_THROWS_AS(average_gradients(empty, znone, st, hp), std::invalid_argument);

  AssignmentBatch zshort = z;
  zshort.labels = Eigen::VectorXi::Zero(2);
  CHECK_THROWS_AS(average_gradients(batch, zshort, st, hp), std::invalid_argument);

  AssignmentBatch zbad = z;
  zbad.labels[1] = 5;
  CHECK_THROWS_AS(average_gradients(batch, zbad, st, hp), std::invalid_argument);

  AssignmentBatch zk = z;
  zk.k_active = 3;
  CHECK_THROWS_AS(average_gradients(batch, zk, st, hp), std::invalid_argument);
}

TEST_CASE("assignment scores follow the explicit weight formula") {
  Rng rng(505);
  for (int trial = 0; trial < 25; ++trial) {
    const Eigen::Index K = 1 + static_cast<Eigen::Index>(rng.below(6));
    const Eigen::Index D = 1 + static_cast<Eigen::Index>(rng.below(4));
    Hyperparams hp = default_hyperparams(D);
    hp.sigma = 0.5 + 1.5 * rng.next_double();
    ModelState st = random_state(rng, K, D);
    Eigen::RowVectorXd x(D);
    for (Eigen::Index d = 0; d < D; ++d) x[d] = 3.0 * rng.normal();

    const Eigen::VectorXd scores = assignment_scores(x, st, hp);
    const Eigen::VectorXd pi = stick_weights(st.v);  // oracle via the product form
    for (Eigen::Index k = 0; k < K; ++k) {
      const double expected = std::log(pi[k]) +
                              static_cast<double>(D) * std::log(1.0 / hp.sigma) -
                              (x - st.mu.row(k)).squaredNorm() / (2.0 * hp.sigma * hp.sigma);
      CHECK(scores[k] == doctest::Approx(expected).epsilon(1e-12));
    }
  }
}

TEST_CASE("hard assignment prefers weight when distances tie, and index when all ties") {
  Hyperparams hp = default_hyperparams(1);
  ModelState st;
  st.mu.resize(2, 1);
  st.mu << 0.0, 1.0;
  st.v.resize(2);
  st.v << 0.5, 0.5;
  st.k_active = 2;

  Eigen::RowVectorXd mid(1);
  mid << 0.5;  // equidistant, pi = (0.5, 0.25): the earlier cluster wins
  CHECK(map_assign(mid, st, hp) == 0);

  // Higher mixture weight can beat a smaller distance.
  st.v << 0.9, 0.5;  // pi = (0.9, 0.05)
  Eigen::RowVectorXd closer_to_1(1);
  closer_to_1 << 0.55;
  CHECK(map_assign(closer_to_1, st, hp) == 0);

  // With sigma != 1 the dimension term is shared by every cluster, so the
  // winner is unchanged.
  Hyperparams wide = hp;
  wide.sigma = 3.0;
  CHECK(map_assign(closer_to_1, st, wide) == 0);
}

TEST_CASE("batch assignment matches the single-sample rule") {
  Rng rng(606);
  const Eigen::Index K = 4, D = 3, M = 40;
  Hyperparams hp = default_hyperparams(D);
  ModelState st = random_state(rng, K, D);
  Eigen::MatrixXd batch(M, D);
  for (Eigen::Index n = 0; n < M; ++n) {
    for (Eigen::Index d = 0; d < D; ++d) batch(n, d) = 3.0 * rng.normal();
  }
  const AssignmentBatch z = map_assign_batch(batch, st, hp);
  REQUIRE(z.labels.size() == M);
  CHECK(z.k_active == K);
  for (Eigen::Index n = 0; n < M; ++n) {
    CHECK(z.labels[n] == static_cast<int>(map_assign(batch.row(n), st, hp)));
  }
}

TEST_CASE("curvature report is negative with a proper prior") {
  Rng rng(707);
  const Eigen::Index K = 3, D = 2, M = 25;
  Hyperparams hp = default_hyperparams(D);
  hp.lambda0 = 0.05;
  hp.a0 = 2.0;
  ModelState st = random_state(rng, K, D);
  Eigen::MatrixXd batch(M, D);
  AssignmentBatch z;
  z.k_active = K;
  z.labels.resize(M);
  for (Eigen::Index n = 0; n < M; ++n) {
    for (Eigen::Index d = 0; d < D; ++d) batch(n, d) = rng.normal();
    z.labels[n] = static_cast<int>(rng.below(K));
  }
  const ConcavityReport rep = concavity_report(batch, z, st, hp);
  CHECK(rep.all_concave());
  CHECK((rep.max_hessian_mu.array() < 0.0).all());

  // Without the location prior the unassigned-cluster entries sit at zero,
  // which fails the strict test.
  hp.lambda0 = 0.0;
  const ConcavityReport flat = concavity_report(batch, z, st, hp);
  CHECK_FALSE(flat.mu_concave);
}
