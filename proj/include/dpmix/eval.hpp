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

#ifndef DPMIX_EVAL_HPP
#define DPMIX_EVAL_HPP

#include <Eigen/Dense>
#include <vector>

namespace dpmix {

/* Normalised mutual information between two labelings of the same points,
 * MI / max(H(a), H(b)) with natural logs. Degenerate conventions: both
 * labelings constant -> 1, exactly one constant -> 0. Result clamped to
 * [0, 1] against rounding. Throws on empty or mismatched inputs. */
double nmi(const Eigen::VectorXi& a, const Eigen::VectorXi& b);

struct HungarianResult {
  std::vector<int> row_to_col;  // -1 marks a row left unmatched (rows > cols)
  double cost = 0.0;            // sum of the matched entries
};

/* Minimum-cost one-to-one assignment of rows to columns, rectangular
 * matrices allowed (the short side is matched completely). Among all
 * minimum-cost assignments the lexicographically smallest row_to_col
 * vector is returned (unmatched counting as larger than any column), so
 * ties resolve deterministically. */
HungarianResult hungarian(const Eigen::MatrixXd& cost);

/* Clustering accuracy: the best one-to-one matching of predicted clusters
 * onto reference classes, matched sample fraction. Extra predicted clusters
 * stay unmatched and earn nothing. */
double accuracy(const Eigen::VectorXi& reference, const Eigen::VectorXi& predicted);

}  // namespace dpmix

#endif  // DPMIX_EVAL_HPP
