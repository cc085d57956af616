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

#ifndef DPMIX_DATA_IO_HPP
#define DPMIX_DATA_IO_HPP

#include <Eigen/Dense>
#include <cstdint>
#include <string>

#include "dpmix/trainer.hpp"

namespace dpmix {

// Comma-separated numeric matrix, one sample per line. Blank lines are
// skipped; ragged rows or unparsable fields raise std::runtime_error with
// the offending line number.
Eigen::MatrixXd load_csv(const std::string& path);

// One integer class label per line.
Eigen::VectorXi load_labels(const std::string& path);

/* Packed little-endian matrix file: the magic bytes "DPMF", then two
 * uint32 dimensions (rows, cols), then rows*cols float64 values in
 * row-major order. */
Eigen::MatrixXd load_binary(const std::string& path);
void save_binary(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& data);

// Per-column standardisation. Constant columns are centred but not scaled.
struct Standardized {
  Eigen::MatrixXd data;
  Eigen::VectorXd mean;
  Eigen::VectorXd sd;  // 1 where the column was constant
};
Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& data);

// Isotropic Gaussian blobs with centers at least `sep` apart.
struct SynthData {
  Eigen::MatrixXd x;        // n x d
  Eigen::VectorXi labels;   // n
  Eigen::MatrixXd centers;  // k x d
};
SynthData make_blobs(int k, int d, int n, double sep, double spread, std::uint64_t seed);

// "k=5,d=8,n=2000,sep=10,spread=1"; sep and spread may be omitted.
struct SynthSpec {
  int k = 0;
  int d = 0;
  int n = 0;
  double sep = 10.0;
  double spread = 1.0;
};
SynthSpec parse_synth_spec(const std::string& text);

// Trace CSV with a fixed header; floating-point fields are written with
// round-trip precision so identical runs produce identical bytes.
void save_trace_csv(const std::string& path, const TrainingTrace& trace);

}  // namespace dpmix

#endif  // DPMIX_DATA_IO_HPP
