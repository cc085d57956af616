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

// Command-line front end: load or synthesise data, fit the stick-breaking
// mixture with the chosen optimizer, report clustering metrics, and
// optionally dump a per-iteration trace CSV and a summary JSON.

#include <CLI11.hpp>
#include <algorithm>
#include <cstdint>
#include <fstream>
#include <iostream>
#include <json.hpp>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dpmix/data_io.hpp"
#include "dpmix/eval.hpp"
#include "dpmix/model.hpp"
#include "dpmix/trainer.hpp"

namespace {

using nlohmann::ordered_json;

bool looks_binary(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  char magic[4] = {0, 0, 0, 0};
  in.read(magic, 4);
  return in && std::string_view(magic, 4) == "DPMF";
}

double median(std::vector<double> xs) {
  std::sort(xs.begin(), xs.end());
  const std::size_t n = xs.size();
  return n % 2 == 1 ? xs[n / 2] : 0.5 * (xs[n / 2 - 1] + xs[n / 2]);
}

// "trace.csv" -> "trace-r3.csv" for repeat index 3.
std::string repeat_path(const std::string& path, int repeat) {
  const auto dot = path.rfind('.');
  const auto slash = path.find_last_of("/\\");
  const std::string tag = "-r" + std::to_string(repeat);
  if (dot == std::string::npos || (slash != std::string::npos && dot < slash)) {
    return path + tag;
  }
  return path.substr(0, dot) + tag + path.substr(dot);
}

struct RunOutcome {
  std::uint64_t seed = 0;
  Eigen::Index k_est = 0;
  std::optional<double> nmi_value;
  std::optional<double> acc_value;
  int iters_run = 0;
  double total_time_ms = 0.0;
};

ordered_json outcome_json(const RunOutcome& r);

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Stick-breaking Gaussian mixture clustering via stochastic"
               " variational point estimates"};

  std::string features_path, synth_spec_text, labels_path;
  std::string optimizer_name = "fisher";
  std::string a0_text = "N";
  std::string timing = "wall";
  std::string trace_out, summary_out;
  int trunc_k = 50;
  double eta = 0.1, alpha = 0.9, sigma = 1.0, lambda0 = 1e-2, thr = 1e-3;
  int minibatch = 0;  // 0 = derive from the class count
  int iters = 60;
  std::uint64_t seed = 0;
  int repeats = 1;
  bool do_standardize = false;

  app.add_option("--features", features_path,
                 "feature matrix, CSV or packed binary (auto-detected)");
  app.add_option("--synth", synth_spec_text,
                 "synthetic blobs, e.g. k=5,d=8,n=2000,sep=10,spread=1");
  app.add_option("--labels", labels_path, "reference labels for scoring, one per line");
  app.add_option("--optimizer", optimizer_name, "sga | momentum | fisher | mm")
      ->check(CLI::IsMember({"sga", "momentum", "fisher", "mm"}));
  app.add_option("--trunc-k", trunc_k, "stick-breaking truncation level");
  app.add_option("--eta", eta, "gradient step size");
  app.add_option("--alpha", alpha, "momentum decay");
  app.add_option("--sigma", sigma, "observation scale");
  app.add_option("--lambda0", lambda0, "location prior precision scale");
  app.add_option("--a0", a0_text, "stick prior concentration, a number or N");
  app.add_option("--thr", thr, "pruning threshold on stick proportions");
  app.add_option("--minibatch", minibatch, "samples per gradient step");
  app.add_option("--iters", iters, "maximum training iterations");
  app.add_option("--seed", seed, "random seed");
  app.add_flag("--standardize", do_standardize, "standardise columns before fitting");
  app.add_option("--repeats", repeats, "independent runs with seeds seed, seed+1, ...");
  app.add_option("--trace-out", trace_out, "per-iteration trace CSV path");
  app.add_option("--summary-out", summary_out, "summary JSON path");
  app.add_option("--timing", timing, "wall | none (none zeroes logged times)")
      ->check(CLI::IsMember({"wall", "none"}));

  CLI11_PARSE(app, argc, argv);

  try {
    if (features_path.empty() == synth_spec_text.empty()) {
      throw std::runtime_error("exactly one of --features or --synth is required");
    }
    if (!synth_spec_text.empty() && !labels_path.empty()) {
      throw std::runtime_error("--labels cannot be combined with --synth");
    }
    if (repeats < 1) throw std::runtime_error("--repeats must be at least 1");

    Eigen::MatrixXd data;
    std::optional<Eigen::VectorXi> labels;
    if (!synth_spec_text.empty()) {
      const dpmix::SynthSpec spec = dpmix::parse_synth_spec(synth_spec_text);
      dpmix::SynthData synth =
          dpmix::make_blobs(spec.k, spec.d, spec.n, spec.sep, spec.spread, seed);
      data = std::move(synth.x);
      labels = std::move(synth.labels);
    } else {
      data = looks_binary(features_path) ? dpmix::load_binary(features_path)
                                         : dpmix::load_csv(features_path);
      if (!labels_path.empty()) {
        labels = dpmix::load_labels(labels_path);
        if (labels->size() != data.rows()) {
          throw std::runtime_error("label count does not match the sample count");
        }
      }
    }
    if (do_standardize) data = dpmix::standardize(data).data;

    dpmix::Hyperparams hp = dpmix::default_hyperparams(data.cols());
    hp.sigma = sigma;
    hp.lambda0 = lambda0;
    hp.trunc_k = trunc_k;
    hp.thr = thr;
    hp.eta = eta;
    hp.alpha = alpha;
    hp.a0 = a0_text == "N" ? static_cast<double>(data.rows()) : std::stod(a0_text);
    if (minibatch > 0) {
      hp.minibatch_m = minibatch;
    } else {
      int classes = trunc_k;
      if (labels) {
        std::set<int> distinct(labels->begin(), labels->end());
        classes = static_cast<int>(distinct.size());
      }
      hp.minibatch_m = dpmix::default_minibatch_size(data.rows(), classes);
    }

    dpmix::TrainConfig cfg;
    cfg.max_iters = iters;
    cfg.optimizer = dpmix::optimizer_from_string(optimizer_name);
    cfg.record_wall_time = timing == "wall";

    std::vector<RunOutcome> runs;
    for (int r = 0; r < repeats; ++r) {
      cfg.seed = seed + static_cast<std::uint64_t>(r);
      const dpmix::TrainResult result = dpmix::train(data, hp, cfg);

      RunOutcome outcome;
      outcome.seed = cfg.seed;
      // Estimated cluster count: clusters that actually hold data in the
      // final assignment. Retained-but-empty sticks are not part of the
      // clustering the tool reports.
      {
        const std::set<int> used(result.assignments.begin(), result.assignments.end());
        outcome.k_est = static_cast<Eigen::Index>(used.size());
      }
      outcome.iters_run = result.iters_run;
      outcome.total_time_ms = result.total_time_ms;
      if (labels) {
        outcome.nmi_value = dpmix::nmi(*labels, result.assignments);
        outcome.acc_value = dpmix::accuracy(*labels, result.assignments);
      }
      runs.push_back(outcome);

      if (!trace_out.empty()) {
        const std::string path = repeats == 1 ? trace_out : repeat_path(trace_out, r);
        dpmix::save_trace_csv(path, result.trace);
      }
    }

    ordered_json summary;
    summary["optimizer"] = optimizer_name;
    summary["seed"] = seed;
    if (repeats == 1) {
      const RunOutcome& r = runs.front();
      summary["k_est"] = static_cast<int>(r.k_est);
      summary["nmi"] = r.nmi_value ? ordered_json(*r.nmi_value) : ordered_json(nullptr);
      summary["acc"] = r.acc_value ? ordered_json(*r.acc_value) : ordered_json(nullptr);
      summary["iters_run"] = r.iters_run;
      summary["total_time_ms"] = r.total_time_ms;
    } else {
      std::vector<double> ks, nmis, accs, its, times;
      for (const RunOutcome& r : runs) {
        ks.push_back(static_cast<double>(r.k_est));
        if (r.nmi_value) nmis.push_back(*r.nmi_value);
        if (r.acc_value) accs.push_back(*r.acc_value);
        its.push_back(r.iters_run);
        times.push_back(r.total_time_ms);
      }
      summary["k_est"] = median(ks);
      summary["nmi"] = nmis.empty() ? ordered_json(nullptr) : ordered_json(median(nmis));
      summary["acc"] = accs.empty() ? ordered_json(nullptr) : ordered_json(median(accs));
      summary["iters_run"] = median(its);
      summary["total_time_ms"] = median(times);
      summary["repeats"] = ordered_json::array();
      for (const RunOutcome& r : runs) summary["repeats"].push_back(outcome_json(r));
    }

    const std::string text = summary.dump(2) + "\n";
    std::cout << text;
    if (!summary_out.empty()) {
      std::ofstream out(summary_out);
      if (!out) throw std::runtime_error("cannot write '" + summary_out + "'");
      out << text;
    }
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << "\n";
    return 1;
  }
  return 0;
}

namespace {

ordered_json outcome_json(const RunOutcome& r) {
  ordered_json j;
  j["seed"] = r.seed;
  j["k_est"] = static_cast<int>(r.k_est);
  j["nmi"] = r.nmi_value ? ordered_json(*r.nmi_value) : ordered_json(nullptr);
  j["acc"] = r.acc_value ? ordered_json(*r.acc_value) : ordered_json(nullptr);
  j["iters_run"] = r.iters_run;
  j["total_time_ms"] = r.total_time_ms;
  return j;
}

}  // namespace
