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

#include "dpmix/eval.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>
#include <stdexcept>
#include <vector>

namespace dpmix {

namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

// Dense contingency table of two labelings; labels are remapped to
// consecutive indices in sorted order.
Eigen::MatrixXd contingency(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  std::map<int, int> ia, ib;
  for (Eigen::Index n = 0; n < a.size(); ++n) ia.emplace(a[n], 0);
  for (Eigen::Index n = 0; n < b.size(); ++n) ib.emplace(b[n], 0);
  int next = 0;
  for (auto& kv : ia) kv.second = next++;
  next = 0;
  for (auto& kv : ib) kv.second = next++;
  Eigen::MatrixXd counts = Eigen::MatrixXd::Zero(static_cast<Eigen::Index>(ia.size()),
                                                 static_cast<Eigen::Index>(ib.size()));
  for (Eigen::Index n = 0; n < a.size(); ++n) {
    counts(ia.at(a[n]), ib.at(b[n])) += 1.0;
  }
  return counts;
}

double entropy(const Eigen::VectorXd& counts, double total) {
  double h = 0.0;
  for (Eigen::Index i = 0; i < counts.size(); ++i) {
    if (counts[i] > 0.0) {
      const double p = counts[i] / total;
      h -= p * std::log(p);
    }
  }
  return h;
}

/* Jonker-Volgenant style shortest augmenting path solver on a square
 * matrix. Returns the matched column per row along with the dual
 * potentials, which certify optimality: every optimal assignment uses only
 * edges with zero reduced cost. */
void solve_square(const Eigen::MatrixXd& a, std::vector<int>& row_to_col,
                  std::vector<double>& u, std::vector<double>& v) {
  const int s = static_cast<int>(a.rows());
  u.assign(static_cast<std::size_t>(s) + 1, 0.0);
  v.assign(static_cast<std::size_t>(s) + 1, 0.0);
  std::vector<int> p(static_cast<std::size_t>(s) + 1, 0);
  std::vector<int> way(static_cast<std::size_t>(s) + 1, 0);
  for (int i = 1; i <= s; ++i) {
    p[0] = i;
    int j0 = 0;
    std::vector<double> minv(static_cast<std::size_t>(s) + 1, kInf);
    std::vector<char> used(static_cast<std::size_t>(s) + 1, 0);
    do {
      used[static_cast<std::size_t>(j0)] = 1;
      const int i0 = p[static_cast<std::size_t>(j0)];
      int j1 = -1;
      double delta = kInf;
      for (int j = 1; j <= s; ++j) {
        if (used[static_cast<std::size_t>(j)]) continue;
        const double cur = a(i0 - 1, j - 1) - u[static_cast<std::size_t>(i0)] -
                           v[static_cast<std::size_t>(j)];
        if (cur < minv[static_cast<std::size_t>(j)]) {
          minv[static_cast<std::size_t>(j)] = cur;
          way[static_cast<std::size_t>(j)] = j0;
        }
        if (minv[static_cast<std::size_t>(j)] < delta) {
          delta = minv[static_cast<std::size_t>(j)];
          j1 = j;
        }
      }
      for (int j = 0; j <= s; ++j) {
        if (used[static_cast<std::size_t>(j)]) {
          u[static_cast<std::size_t>(p[static_cast<std::size_t>(j)])] += delta;
          v[static_cast<std::size_t>(j)] -= delta;
        } else {
          minv[static_cast<std::size_t>(j)] -= delta;
        }
      }
      j0 = j1;
    } while (p[static_cast<std::size_t>(j0)] != 0);
    do {
      const int j1 = way[static_cast<std::size_t>(j0)];
      p[static_cast<std::size_t>(j0)] = p[static_cast<std::size_t>(j1)];
      j0 = j1;
    } while (j0);
  }
  row_to_col.assign(static_cast<std::size_t>(s), -1);
  for (int j = 1; j <= s; ++j) {
    row_to_col[static_cast<std::size_t>(p[static_cast<std::size_t>(j)]) - 1] = j - 1;
  }
}

// Kuhn augmenting search over an adjacency list, used for feasibility
// checks during the lexicographic tie-break.
bool try_augment(int row, const std::vector<std::vector<int>>& adj,
                 std::vector<char>& visited, std::vector<int>& col_to_row) {
  for (const int c : adj[static_cast<std::size_t>(row)]) {
    if (visited[static_cast<std::size_t>(c)]) continue;
    visited[static_cast<std::size_t>(c)] = 1;
    if (col_to_row[static_cast<std::size_t>(c)] < 0 ||
        try_augment(col_to_row[static_cast<std::size_t>(c)], adj, visited, col_to_row)) {
      col_to_row[static_cast<std::size_t>(c)] = row;
      return true;
    }
  }
  return false;
}

// Whether rows `from..s-1` can be perfectly matched into the unused columns
// through tight edges only.
bool feasible(const std::vector<std::vector<int>>& tight, int from, int s,
              const std::vector<char>& col_taken) {
  std::vector<int> col_to_row(static_cast<std::size_t>(s), -1);
  for (int r = from; r < s; ++r) {
    std::vector<char> visited = col_taken;  // taken columns stay off-limits
    if (!try_augment(r, tight, visited, col_to_row)) return false;
  }
  return true;
}

}  // namespace

double nmi(const Eigen::VectorXi& a, const Eigen::VectorXi& b) {
  if (a.size() == 0) throw std::invalid_argument("nmi: empty labelings");
  if (a.size() != b.size()) throw std::invalid_argument("nmi: labelings differ in length");

  const Eigen::MatrixXd counts = contingency(a, b);
  const double total = static_cast<double>(a.size());
  const Eigen::VectorXd row_sums = counts.rowwise().sum();
  const Eigen::VectorXd col_sums = counts.colwise().sum();
  const double ha = entropy(row_sums, total);
  const double hb = entropy(col_sums, total);

  if (ha == 0.0 && hb == 0.0) return 1.0;
  if (ha == 0.0 || hb == 0.0) return 0.0;

  double mi = 0.0;
  for (Eigen::Index i = 0; i < counts.rows(); ++i) {
    for (Eigen::Index j = 0; j < counts.cols(); ++j) {
      if (counts(i, j) > 0.0) {
        const double pij = counts(i, j) / total;
        mi += pij * std::log(pij * total * total / (row_sums[i] * col_sums[j]));
      }
    }
  }
  return std::clamp(mi / std::max(ha, hb), 0.0, 1.0);
}

HungarianResult hungarian(const Eigen::MatrixXd& cost) {
  const Eigen::Index m = cost.rows();
  const Eigen::Index n = cost.cols();
  if (m == 0 || n == 0) throw std::invalid_argument("hungarian: empty cost matrix");
  if (!cost.allFinite()) throw std::invalid_argument("hungarian: costs must be finite");

  const Eigen::Index s = std::max(m, n);
  Eigen::MatrixXd a = Eigen::MatrixXd::Zero(s, s);  // zero padding to square
  a.topLeftCorner(m, n) = cost;

  std::vector<int> base;
  std::vector<double> u, v;
  solve_square(a, base, u, v);

  // Tight-edge graph under the optimal potentials: any perfect matching in
  // it attains the optimum, so the lexicographically smallest one can be
  // built row by row with feasibility checks.
  const double tol = 1e-9 * (1.0 + a.cwiseAbs().maxCoeff());
  const int si = static_cast<int>(s);
  std::vector<std::vector<int>> tight(static_cast<std::size_t>(si));
  for (int r = 0; r < si; ++r) {
    for (int c = 0; c < si; ++c) {
      if (a(r, c) - u[static_cast<std::size_t>(r) + 1] - v[static_cast<std::size_t>(c) + 1] <=
          tol) {
        tight[static_cast<std::size_t>(r)].push_back(c);
      }
    }
  }

  std::vector<int> perm(static_cast<std::size_t>(si), -1);
  std::vector<char> col_taken(static_cast<std::size_t>(si), 0);
  for (int r = 0; r < si; ++r) {
    for (const int c : tight[static_cast<std::size_t>(r)]) {  // ascending by build order
      if (col_taken[static_cast<std::size_t>(c)]) continue;
      col_taken[static_cast<std::size_t>(c)] = 1;
      if (feasible(tight, r + 1, si, col_taken)) {
        perm[static_cast<std::size_t>(r)] = c;
        break;
      }
      col_taken[static_cast<std::size_t>(c)] = 0;
    }
    if (perm[static_cast<std::size_t>(r)] < 0) {
      // The solver's own matching certifies feasibility, so this cannot
      // happen with a sane tolerance.
      perm[static_cast<std::size_t>(r)] = base[static_cast<std::size_t>(r)];
      col_taken[static_cast<std::size_t>(perm[static_cast<std::size_t>(r)])] = 1;
    }
  }

  HungarianResult out;
  out.row_to_col.assign(static_cast<std::size_t>(m), -1);
  for (Eigen::Index r = 0; r < m; ++r) {
    const int c = perm[static_cast<std::size_t>(r)];
    if (c < n) {
      out.row_to_col[static_cast<std::size_t>(r)] = c;
      out.cost += cost(r, c);
    }
  }
  return out;
}

double accuracy(const Eigen::VectorXi& reference, const Eigen::VectorXi& predicted) {
  if (reference.size() == 0) throw std::invalid_argument("accuracy: empty labelings");
  if (reference.size() != predicted.size()) {
    throw std::invalid_argument("accuracy: labelings differ in length");
  }
  // Rows are predicted clusters, columns reference classes; minimising
  // (max - count) maximises the total matched count.
  const Eigen::MatrixXd counts = contingency(predicted, reference);
  const double top = counts.maxCoeff();
  const HungarianResult res = hungarian((-counts).array() + top);
  double matched = 0.0;
  for (Eigen::Index r = 0; r < counts.rows(); ++r) {
    const int c = res.row_to_col[static_cast<std::size_t>(r)];
    if (c >= 0) matched += counts(r, c);
  }
  return matched / static_cast<double>(reference.size());
}

}  // namespace dpmix
