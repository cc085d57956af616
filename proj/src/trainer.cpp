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

#include "dpmix/trainer.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <limits>
#include <numeric>
#include <stdexcept>

#include "dpmix/baseline_mm.hpp"
#include "dpmix/gradients.hpp"

namespace dpmix {

namespace {

using Clock = std::chrono::steady_clock;

double ms_since(Clock::time_point t0) {
  return std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
}

Eigen::MatrixXd take_rows(const Eigen::Ref<const Eigen::MatrixXd>& src,
                          const std::vector<int>& rows) {
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), src.cols());
  for (std::size_t i = 0; i < rows.size(); ++i) {
    out.row(static_cast<Eigen::Index>(i)) = src.row(rows[i]);
  }
  return out;
}

Eigen::VectorXd flatten(const Eigen::MatrixXd& m, const Eigen::VectorXd& v) {
  Eigen::VectorXd out(m.size() + v.size());
  out.head(m.size()) = Eigen::Map<const Eigen::VectorXd>(m.data(), m.size());
  out.tail(v.size()) = v;
  return out;
}

std::string join_errors(const std::vector<std::string>& errs) {
  std::string msg;
  for (const auto& e : errs) {
    if (!msg.empty()) msg += "; ";
    msg += e;
  }
  return msg;
}

}  // namespace

Optimizer optimizer_from_string(const std::string& name) {
  if (name == "sga") return Optimizer::sga;
  if (name == "momentum") return Optimizer::momentum;
  if (name == "fisher") return Optimizer::fisher;
  if (name == "mm") return Optimizer::mm;
  throw std::invalid_argument("unknown optimizer: " + name);
}

std::string to_string(Optimizer opt) {
  switch (opt) {
    case Optimizer::sga: return "sga";
    case Optimizer::momentum: return "momentum";
    case Optimizer::fisher: return "fisher";
    case Optimizer::mm: return "mm";
  }
  throw std::invalid_argument("unknown optimizer value");
}

namespace {

// One k-means++ seeding followed by Lloyd refinement, capped at 25 center
// updates or a relative inertia change below 1e-4. Returns the inertia of
// the centers it leaves behind.
double kmeans_single(const Eigen::Ref<const Eigen::MatrixXd>& data, int k, Rng& rng,
                     Eigen::MatrixXd& centers) {
  const Eigen::Index N = data.rows();

  // k-means++ seeding: each new center is drawn with probability
  // proportional to the squared distance from the chosen set.
  centers.row(0) = data.row(static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N))));
  Eigen::VectorXd d2 =
      (data.rowwise() - centers.row(0)).rowwise().squaredNorm();
  for (int c = 1; c < k; ++c) {
    const double total = d2.sum();
    Eigen::Index pick;
    if (total > 0.0) {
      const double u = rng.next_double() * total;
      double acc = 0.0;
      pick = N - 1;
      for (Eigen::Index n = 0; n < N; ++n) {
        acc += d2[n];
        if (u < acc) {
          pick = n;
          break;
        }
      }
    } else {
      // Every point already coincides with a center; any choice works.
      pick = static_cast<Eigen::Index>(rng.below(static_cast<std::uint64_t>(N)));
    }
    centers.row(c) = data.row(pick);
    d2 = d2.cwiseMin((data.rowwise() - centers.row(c)).rowwise().squaredNorm());
  }

  Eigen::VectorXi assign(N);
  double prev = std::numeric_limits<double>::infinity();
  for (int sweep = 0;; ++sweep) {
    double inertia = 0.0;
    for (Eigen::Index n = 0; n < N; ++n) {
      int best = 0;
      double best_d = (data.row(n) - centers.row(0)).squaredNorm();
      for (int c = 1; c < k; ++c) {
        const double d = (data.row(n) - centers.row(c)).squaredNorm();
        if (d < best_d) {
          best_d = d;
          best = c;
        }
      }
      assign[n] = best;
      inertia += best_d;
    }
    const bool settled =
        prev == 0.0 ||
        (std::isfinite(prev) && std::abs(prev - inertia) / prev < 1e-4);
    if (sweep >= 25 || settled) return inertia;
    prev = inertia;

    Eigen::MatrixXd sums = Eigen::MatrixXd::Zero(k, data.cols());
    Eigen::VectorXd counts = Eigen::VectorXd::Zero(k);
    for (Eigen::Index n = 0; n < N; ++n) {
      sums.row(assign[n]) += data.row(n);
      counts[assign[n]] += 1.0;
    }
    for (int c = 0; c < k; ++c) {
      if (counts[c] > 0.0) centers.row(c) = sums.row(c) / counts[c];
      // An empty cluster keeps its center; it may pick up points later.
    }
  }
}

}  // namespace

Eigen::MatrixXd kmeans_init(const Eigen::Ref<const Eigen::MatrixXd>& data, int k,
                            std::uint64_t seed) {
  const Eigen::Index N = data.rows();
  const Eigen::Index D = data.cols();
  if (N == 0) throw std::invalid_argument("kmeans_init: empty dataset");
  if (k < 1 || k > N) throw std::invalid_argument("kmeans_init: need 1 <= k <= N");

  // Best of ten restarts by inertia. Seeding misses a well-separated group
  // often enough that a single shot is unreliable; Lloyd cannot recover
  // because no center ever crosses the empty space between groups.
  constexpr int kRestarts = 10;
  Rng rng(seed);
  Eigen::MatrixXd centers(k, D);
  Eigen::MatrixXd best_centers(k, D);
  double best_inertia = std::numeric_limits<double>::infinity();
  for (int r = 0; r < kRestarts; ++r) {
    const double inertia = kmeans_single(data, k, rng, centers);
    if (inertia < best_inertia) {
      best_inertia = inertia;
      best_centers = centers;
    }
  }
  return best_centers;
}

std::pair<ModelState, AssignmentBatch> init_state(
    const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
    const TrainConfig& cfg) {
  if (data.rows() == 0) throw std::invalid_argument("init_state: empty dataset");
  const auto errs = validate_hyperparams(hp, data.cols());
  if (!errs.empty()) {
    throw std::invalid_argument("init_state: invalid hyperparameters: " + join_errors(errs));
  }

  const auto K = std::min<Eigen::Index>(hp.trunc_k, data.rows());
  Rng root(cfg.seed);
  const std::uint64_t kmeans_seed = root.fork();

  ModelState state;
  state.mu = kmeans_init(data, static_cast<int>(K), kmeans_seed);
  state.k_active = K;

  // Uniform provisional sticks for the very first hard assignment; the
  // resulting weights decay only mildly with the cluster index, so the
  // assignment is close to the nearest-center rule.
  state.v = clamp_sticks(
      Eigen::VectorXd::Constant(K, 1.0 / static_cast<double>(K + 1)));

  AssignmentBatch z = map_assign_batch(data, state, hp);
  state.v = mm_update_v(accumulate_stats(data, z), hp);
  return {std::move(state), std::move(z)};
}

std::vector<int> sample_minibatch(Eigen::Index n, int m, Rng& rng) {
  if (n < 1) throw std::invalid_argument("sample_minibatch: empty population");
  return rng.sample_without_replacement(static_cast<int>(n), m);
}

int default_minibatch_size(Eigen::Index n, int expected_classes) {
  if (expected_classes < 1) {
    throw std::invalid_argument("default_minibatch_size: expected_classes must be positive");
  }
  const long long want = 20LL * expected_classes;
  return static_cast<int>(std::min<long long>(n, want));
}

void prune(ModelState& state, OptimizerState& opt, const Hyperparams& hp) {
  const Eigen::Index K = state.k_active;
  Eigen::Index best = 0;
  for (Eigen::Index k = 1; k < K; ++k) {
    if (state.v[k] > state.v[best]) best = k;
  }
  std::vector<Eigen::Index> keep;
  keep.reserve(static_cast<std::size_t>(K));
  for (Eigen::Index k = 0; k < K; ++k) {
    if (state.v[k] >= hp.thr || k == best) keep.push_back(k);
  }
  if (static_cast<Eigen::Index>(keep.size()) == K) return;

  const auto Kn = static_cast<Eigen::Index>(keep.size());
  Eigen::MatrixXd mu(Kn, state.mu.cols());
  Eigen::VectorXd v(Kn);
  Eigen::MatrixXd gm(Kn, opt.gamma_mu.cols());
  Eigen::VectorXd gv(Kn);
  for (Eigen::Index i = 0; i < Kn; ++i) {
    mu.row(i) = state.mu.row(keep[static_cast<std::size_t>(i)]);
    v[i] = state.v[keep[static_cast<std::size_t>(i)]];
    gm.row(i) = opt.gamma_mu.row(keep[static_cast<std::size_t>(i)]);
    gv[i] = opt.gamma_v[keep[static_cast<std::size_t>(i)]];
  }
  state.mu = std::move(mu);
  state.v = std::move(v);
  state.k_active = Kn;
  opt.gamma_mu = std::move(gm);
  opt.gamma_v = std::move(gv);
  // The previous iterate no longer matches the parameter shape.
  opt.prev.reset();
}

void reorder(ModelState& state, OptimizerState& opt) {
  const Eigen::Index K = state.k_active;
  std::vector<Eigen::Index> order(static_cast<std::size_t>(K));
  std::iota(order.begin(), order.end(), Eigen::Index{0});
  std::stable_sort(order.begin(), order.end(), [&state](Eigen::Index a, Eigen::Index b) {
    return state.v[a] > state.v[b];
  });
  bool identity = true;
  for (Eigen::Index i = 0; i < K; ++i) {
    if (order[static_cast<std::size_t>(i)] != i) {
      identity = false;
      break;
    }
  }
  if (identity) return;

  auto permute_rows = [&order, K](const Eigen::MatrixXd& m) {
    Eigen::MatrixXd out(K, m.cols());
    for (Eigen::Index i = 0; i < K; ++i) out.row(i) = m.row(order[static_cast<std::size_t>(i)]);
    return out;
  };
  auto permute_vec = [&order, K](const Eigen::VectorXd& v) {
    Eigen::VectorXd out(K);
    for (Eigen::Index i = 0; i < K; ++i) out[i] = v[order[static_cast<std::size_t>(i)]];
    return out;
  };

  state.mu = permute_rows(state.mu);
  state.v = permute_vec(state.v);
  opt.gamma_mu = permute_rows(opt.gamma_mu);
  opt.gamma_v = permute_vec(opt.gamma_v);
  if (opt.prev) {
    if (opt.prev->mu.rows() == K && opt.prev->v.size() == K) {
      opt.prev->mu = permute_rows(opt.prev->mu);
      opt.prev->v = permute_vec(opt.prev->v);
      opt.prev->g_mu = permute_rows(opt.prev->g_mu);
      opt.prev->g_v = permute_vec(opt.prev->g_v);
    } else {
      opt.prev.reset();
    }
  }
}

TrainResult train(const Eigen::Ref<const Eigen::MatrixXd>& data, const Hyperparams& hp,
                  const TrainConfig& cfg) {
  const Eigen::Index N = data.rows();
  if (N < 1) throw std::invalid_argument("train: empty dataset");
  const auto errs = validate_hyperparams(hp, data.cols());
  if (!errs.empty()) {
    throw std::invalid_argument("train: invalid hyperparameters: " + join_errors(errs));
  }
  if (cfg.max_iters < 1) throw std::invalid_argument("train: max_iters must be at least 1");

  const bool is_mm = cfg.optimizer == Optimizer::mm;
  const auto t_start = Clock::now();

  Rng root(cfg.seed);
  (void)root.fork();  // the k-means seed, re-derived inside init_state
  Rng batch_rng(root.fork());

  // The closed-form baseline works on a fixed subset drawn once; the
  // stochastic optimizers resample a minibatch every iteration.
  Eigen::MatrixXd view_storage;
  const bool use_subset = is_mm && N > cfg.mm_subset_cap;
  if (use_subset) {
    view_storage = take_rows(data, sample_minibatch(N, cfg.mm_subset_cap, batch_rng));
  }
  const Eigen::Ref<const Eigen::MatrixXd> view =
      use_subset ? Eigen::Ref<const Eigen::MatrixXd>(view_storage) : data;
  const Eigen::Index vN = view.rows();
  if (!is_mm && hp.minibatch_m > vN) {
    throw std::invalid_argument("train: minibatch size exceeds the dataset size");
  }

  auto init = init_state(view, hp, cfg);
  ModelState state = std::move(init.first);
  const AssignmentBatch init_z = std::move(init.second);
  OptimizerState opt = make_optimizer_state(state, cfg.epsilon);

  TrainResult res;
  constexpr double kNan = std::numeric_limits<double>::quiet_NaN();
  int streak = 0;
  double prev_total = 0.0;

  for (int t = 1; t <= cfg.max_iters; ++t) {
    const auto t0 = Clock::now();

    Eigen::MatrixXd batch_storage;
    std::vector<int> indices;
    if (!is_mm) {
      indices = sample_minibatch(vN, hp.minibatch_m, batch_rng);
      batch_storage = take_rows(view, indices);
    }
    const Eigen::Ref<const Eigen::MatrixXd> batch =
        is_mm ? view : Eigen::Ref<const Eigen::MatrixXd>(batch_storage);

    // Hard assignment under the pre-step parameters. The first iteration
    // reuses the labels computed during initialisation.
    AssignmentBatch z;
    if (t == 1) {
      if (is_mm) {
        z = init_z;
      } else {
        z.k_active = init_z.k_active;
        z.labels.resize(static_cast<Eigen::Index>(indices.size()));
        for (std::size_t i = 0; i < indices.size(); ++i) {
          z.labels[static_cast<Eigen::Index>(i)] = init_z.labels[indices[i]];
        }
      }
    } else {
      z = map_assign_batch(batch, state, hp);
    }

    double bb = kNan;
    if (is_mm) {
      const SufficientStats stats = accumulate_stats(batch, z);
      state.mu = mm_update_mu(stats, state.mu, hp);
      state.v = mm_update_v(stats, hp);
    } else {
      const GradientBatch grads = average_gradients(batch, z, state, hp);
      if (opt.prev) {
        const auto ratio =
            bb_stepsize(flatten(opt.prev->mu, opt.prev->v), flatten(state.mu, state.v),
                        flatten(opt.prev->g_mu, opt.prev->g_v), flatten(grads.g_mu, grads.g_v));
        if (ratio) bb = *ratio;
      }
      opt.prev = OptimizerState::Snapshot{state.mu, state.v, grads.g_mu, grads.g_v};
      switch (cfg.optimizer) {
        case Optimizer::sga:
          state = step_constant(state, grads, hp);
          break;
        case Optimizer::momentum:
          state = step_momentum(state, grads, opt, hp);
          break;
        case Optimizer::fisher:
          state = step_fisher(state, grads, opt, hp);
          break;
        case Optimizer::mm:
          break;  // unreachable
      }
    }

    // Bound under the fresh parameters; assignments stay pre-step unless a
    // full-dataset evaluation was requested.
    ElboBreakdown bd;
    if (cfg.full_elbo_every > 0 && t % cfg.full_elbo_every == 0) {
      const AssignmentBatch fz = map_assign_batch(data, state, hp);
      bd = elbo(data, fz, state, hp);
    } else {
      bd = elbo(batch, z, state, hp);
    }

    if (t > 1) {
      const double rel =
          std::abs(bd.total - prev_total) / std::max(std::abs(prev_total), 1e-12);
      streak = rel < kConvergenceRelTol ? streak + 1 : 0;
    }
    prev_total = bd.total;

    prune(state, opt, hp);
    if (cfg.reorder) reorder(state, opt);

    TraceRow row;
    row.iter = t;
    row.elbo = bd;
    row.k_active = state.k_active;
    row.bb_eta = bb;
    row.time_ms = cfg.record_wall_time ? ms_since(t0) : 0.0;
    res.trace.push_back(row);
    res.iters_run = t;

    if (streak >= kConvergencePatience) break;
  }

  res.state = std::move(state);
  res.assignments = map_assign_batch(data, res.state, hp).labels;
  res.total_time_ms = cfg.record_wall_time ? ms_since(t_start) : 0.0;
  return res;
}

}  // namespace dpmix
