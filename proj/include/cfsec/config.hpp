// cfsec - secure cell-free massive MIMO downlink simulator and optimizer
// Copyright (c) 2026 cfsec contributors
//
// Licensed under the Apache License, Version 2.0 (the "License");
// you may not use this file except in compliance with the License.
// You may obtain a copy of the License at
//
//     http://www.apache.org/licenses/LICENSE-2.0
//
// Unless required by applicable law or agreed to in writing, software
// distributed under the License is distributed on an "AS IS" BASIS,
// WITHOUT WARRANTIES OR CONDITIONS OF ANY KIND, either express or implied.
// See the License for the specific language governing permissions and
// limitations under the License.

#pragma once

#include <string>
#include <vector>

#include "cfsec/experiment.hpp"
#include "cfsec/optimizer.hpp"
#include "cfsec/scenario.hpp"

namespace cfsec {

struct ExperimentConfig {
  int n_realizations = 100;
  std::vector<double> re_sweep_m{50.0, 100.0, 150.0, 200.0};
  std::string out_dir = "out";
  int threads = 0;  // 0: CFSEC_THREADS env var, then hardware concurrency
};

// Full campaign configuration. Every field has a default; unknown keys in
// the file are rejected.
struct RunConfig {
  NetworkConfig network;
  std::vector<SchemeSpec> schemes{{SchemeKind::kEpaRandom, 0.2},
                                  {SchemeKind::kOpaRandom, 0.2},
                                  {SchemeKind::kJoint, 0.2}};
  ApgParams optimizer;
  PenaltyWeights penalties;
  ExperimentConfig experiment;

  int resolve_threads() const;
};

RunConfig run_config_from_json_text(const std::string& text);
RunConfig load_run_config(const std::string& path);
std::string run_config_to_json_text(const RunConfig& cfg);

// Writes via a temp file plus rename so readers never observe partial
// output.
void write_file_atomic(const std::string& path, const std::string& contents);

}  // namespace cfsec
