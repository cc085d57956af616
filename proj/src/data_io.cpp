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

#include "dpmix/data_io.hpp"

#include <cerrno>
#include <charconv>
#include <cmath>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <stdexcept>
#include <string_view>
#include <vector>

#include "dpmix/rng.hpp"

namespace dpmix {

namespace {

std::string_view trim(std::string_view s) {
  const char* ws = " \t\r";
  const auto b = s.find_first_not_of(ws);
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(ws);
  return s.substr(b, e - b + 1);
}

double parse_double(std::string_view field, std::size_t line_no) {
  double value = 0.0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad numeric field '" +
                             std::string(field) + "'");
  }
  return value;
}

long parse_int(std::string_view field, std::size_t line_no) {
  long value = 0;
  const auto [ptr, ec] = std::from_chars(field.data(), field.data() + field.size(), value);
  if (ec != std::errc{} || ptr != field.data() + field.size()) {
    throw std::runtime_error("line " + std::to_string(line_no) + ": bad integer field '" +
                             std::string(field) + "'");
  }
  return value;
}

std::uint32_t read_u32_le(std::istream& in) {
  unsigned char b[4];
  in.read(reinterpret_cast<char*>(b), 4);
  return static_cast<std::uint32_t>(b[0]) | (static_cast<std::uint32_t>(b[1]) << 8) |
         (static_cast<std::uint32_t>(b[2]) << 16) | (static_cast<std::uint32_t>(b[3]) << 24);
}

void write_u32_le(std::ostream& out, std::uint32_t x) {
  const unsigned char b[4] = {static_cast<unsigned char>(x & 0xff),
                              static_cast<unsigned char>((x >> 8) & 0xff),
                              static_cast<unsigned char>((x >> 16) & 0xff),
                              static_cast<unsigned char>((x >> 24) & 0xff)};
  out.write(reinterpret_cast<const char*>(b), 4);
}

// Round-trip exact decimal rendering; NaN is always spelled "nan".
std::string fmt_double(double x) {
  if (std::isnan(x)) return "nan";
  char buf[64];
  std::snprintf(buf, sizeof(buf), "%.17g", x);
  return buf;
}

}  // namespace

Eigen::MatrixXd load_csv(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<std::vector<double>> rows;
  std::string line;
  std::size_t line_no = 0;
  Eigen::Index width = -1;
  while (std::getline(in, line)) {
    ++line_no;
    if (trim(line).empty()) continue;
    std::vector<double> row;
    std::string_view rest = line;
    while (true) {
      const auto comma = rest.find(',');
      row.push_back(parse_double(trim(rest.substr(0, comma)), line_no));
      if (comma == std::string_view::npos) break;
      rest = rest.substr(comma + 1);
    }
    if (width < 0) {
      width = static_cast<Eigen::Index>(row.size());
    } else if (static_cast<Eigen::Index>(row.size()) != width) {
      throw std::runtime_error("line " + std::to_string(line_no) + ": expected " +
                               std::to_string(width) + " fields, got " +
                               std::to_string(row.size()));
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("'" + path + "' holds no samples");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows.size()), width);
  for (std::size_t i = 0; i < rows.size(); ++i) {
    for (Eigen::Index j = 0; j < width; ++j) {
      out(static_cast<Eigen::Index>(i), j) = rows[i][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

Eigen::VectorXi load_labels(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  std::vector<int> labels;
  std::string line;
  std::size_t line_no = 0;
  while (std::getline(in, line)) {
    ++line_no;
    const auto field = trim(line);
    if (field.empty()) continue;
    labels.push_back(static_cast<int>(parse_int(field, line_no)));
  }
  if (labels.empty()) throw std::runtime_error("'" + path + "' holds no labels");
  Eigen::VectorXi out(static_cast<Eigen::Index>(labels.size()));
  for (std::size_t i = 0; i < labels.size(); ++i) out[static_cast<Eigen::Index>(i)] = labels[i];
  return out;
}

Eigen::MatrixXd load_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw std::runtime_error("cannot open '" + path + "'");
  char magic[4];
  in.read(magic, 4);
  if (!in || std::memcmp(magic, "DPMF", 4) != 0) {
    throw std::runtime_error("'" + path + "' is not a DPMF matrix file");
  }
  const std::uint32_t rows = read_u32_le(in);
  const std::uint32_t cols = read_u32_le(in);
  if (!in) throw std::runtime_error("'" + path + "' is truncated");
  Eigen::MatrixXd out(static_cast<Eigen::Index>(rows), static_cast<Eigen::Index>(cols));
  for (std::uint32_t r = 0; r < rows; ++r) {
    for (std::uint32_t c = 0; c < cols; ++c) {
      unsigned char b[8];
      in.read(reinterpret_cast<char*>(b), 8);
      if (!in) throw std::runtime_error("'" + path + "' is truncated");
      std::uint64_t bits = 0;
      for (int i = 7; i >= 0; --i) bits = (bits << 8) | b[i];
      double value;
      std::memcpy(&value, &bits, 8);
      out(static_cast<Eigen::Index>(r), static_cast<Eigen::Index>(c)) = value;
    }
  }
  return out;
}

void save_binary(const std::string& path, const Eigen::Ref<const Eigen::MatrixXd>& data) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out.write("DPMF", 4);
  write_u32_le(out, static_cast<std::uint32_t>(data.rows()));
  write_u32_le(out, static_cast<std::uint32_t>(data.cols()));
  for (Eigen::Index r = 0; r < data.rows(); ++r) {
    for (Eigen::Index c = 0; c < data.cols(); ++c) {
      std::uint64_t bits;
      const double value = data(r, c);
      std::memcpy(&bits, &value, 8);
      unsigned char b[8];
      for (int i = 0; i < 8; ++i) b[i] = static_cast<unsigned char>((bits >> (8 * i)) & 0xff);
      out.write(reinterpret_cast<const char*>(b), 8);
    }
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

Standardized standardize(const Eigen::Ref<const Eigen::MatrixXd>& data) {
  if (data.rows() == 0) throw std::invalid_argument("standardize: empty dataset");
  Standardized out;
  out.mean = data.colwise().mean();
  out.sd.resize(data.cols());
  const double n = static_cast<double>(data.rows());
  for (Eigen::Index c = 0; c < data.cols(); ++c) {
    const double var = (data.col(c).array() - out.mean[c]).square().sum() / n;
    const double sd = std::sqrt(var);
    out.sd[c] = sd > 0.0 ? sd : 1.0;
  }
  out.data = (data.rowwise() - out.mean.transpose()).array().rowwise() /
             out.sd.transpose().array();
  return out;
}

SynthData make_blobs(int k, int d, int n, double sep, double spread, std::uint64_t seed) {
  if (k < 1 || d < 1 || n < k) {
    throw std::invalid_argument("make_blobs: need k >= 1, d >= 1, n >= k");
  }
  if (!(sep > 0.0) || !(spread > 0.0)) {
    throw std::invalid_argument("make_blobs: sep and spread must be positive");
  }
  Rng rng(seed);

  // Rejection-sample centers inside a ball, growing it whenever placement
  // stalls, so every pair ends up at least `sep` apart.
  Eigen::MatrixXd centers(k, d);
  double radius = sep * std::pow(static_cast<double>(k), 1.0 / static_cast<double>(d));
  int placed = 0;
  int stall = 0;
  while (placed < k) {
    Eigen::VectorXd dir(d);
    for (int i = 0; i < d; ++i) dir[i] = rng.normal();
    const double norm = dir.norm();
    if (norm == 0.0) continue;
    const double r =
        radius * std::pow(rng.next_double(), 1.0 / static_cast<double>(d));
    const Eigen::VectorXd cand = dir * (r / norm);
    bool ok = true;
    for (int j = 0; j < placed; ++j) {
      if ((centers.row(j).transpose() - cand).norm() < sep) {
        ok = false;
        break;
      }
    }
    if (ok) {
      centers.row(placed++) = cand;
      stall = 0;
    } else if (++stall >= 200) {
      radius *= 1.3;
      stall = 0;
    }
  }

  // Balanced labels: the first n % k clusters get one extra point.
  SynthData out;
  out.centers = centers;
  out.labels.resize(n);
  out.x.resize(n, d);
  int idx = 0;
  for (int c = 0; c < k; ++c) {
    const int count = n / k + (c < n % k ? 1 : 0);
    for (int i = 0; i < count; ++i, ++idx) out.labels[idx] = c;
  }
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j < d; ++j) {
      out.x(i, j) = centers(out.labels[i], j) + spread * rng.normal();
    }
  }
  return out;
}

SynthSpec parse_synth_spec(const std::string& text) {
  SynthSpec spec;
  bool saw_k = false, saw_d = false, saw_n = false;
  std::string_view rest = text;
  std::size_t field_no = 0;
  while (!rest.empty()) {
    ++field_no;
    const auto comma = rest.find(',');
    const auto item = trim(rest.substr(0, comma));
    rest = comma == std::string_view::npos ? std::string_view{} : rest.substr(comma + 1);
    if (item.empty()) continue;
    const auto eq = item.find('=');
    if (eq == std::string_view::npos) {
      throw std::runtime_error("synth spec: expected key=value, got '" + std::string(item) + "'");
    }
    const auto key = trim(item.substr(0, eq));
    const auto value = trim(item.substr(eq + 1));
    if (key == "k") {
      spec.k = static_cast<int>(parse_int(value, field_no));
      saw_k = true;
    } else if (key == "d") {
      spec.d = static_cast<int>(parse_int(value, field_no));
      saw_d = true;
    } else if (key == "n") {
      spec.n = static_cast<int>(parse_int(value, field_no));
      saw_n = true;
    } else if (key == "sep") {
      spec.sep = parse_double(value, field_no);
    } else if (key == "spread") {
      spec.spread = parse_double(value, field_no);
    } else {
      throw std::runtime_error("synth spec: unknown key '" + std::string(key) + "'");
    }
  }
  if (!saw_k || !saw_d || !saw_n) {
    throw std::runtime_error("synth spec: k, d and n are required");
  }
  return spec;
}

void save_trace_csv(const std::string& path, const TrainingTrace& trace) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write '" + path + "'");
  out << "iter,elbo,lp_x,lp_mu,lp_zv,lp_v,lq_z,lq_v,lq_mu,k_active,time_ms,bb_eta\n";
  for (const TraceRow& row : trace) {
    out << row.iter << ',' << fmt_double(row.elbo.total) << ',' << fmt_double(row.elbo.lp_x)
        << ',' << fmt_double(row.elbo.lp_mu) << ',' << fmt_double(row.elbo.lp_zv) << ','
        << fmt_double(row.elbo.lp_v) << ',' << fmt_double(row.elbo.lq_z) << ','
        << fmt_double(row.elbo.lq_v) << ',' << fmt_double(row.elbo.lq_mu) << ','
        << row.k_active << ',' << fmt_double(row.time_ms) << ',' << fmt_double(row.bb_eta)
        << '\n';
  }
  if (!out) throw std::runtime_error("failed writing '" + path + "'");
}

}  // namespace dpmix
