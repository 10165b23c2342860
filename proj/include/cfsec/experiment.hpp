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

#include "cfsec/channel.hpp"
#include "cfsec/optimizer.hpp"
#include "cfsec/scenario.hpp"

namespace cfsec {

enum class SchemeKind { kEpaRandom, kOpaRandom, kJoint };

const char* to_string(SchemeKind kind);
SchemeKind scheme_kind_from_string(const std::string& name);

struct SchemeSpec {
  SchemeKind kind = SchemeKind::kJoint;
  double ap_fraction = 0.2;  // fraction of APs per user for random selection
};

struct SchemeOutcome {
  PowerMatrix theta;
  Eigen::ArrayXXd assoc;     // binary association actually used
  Eigen::ArrayXd user_se;    // K achievable SEs for the QoS audit
  double sse = 0.0;
  double eve_se = 0.0;
  double min_user_se = 0.0;
  bool qos_ok = false;
  bool solver_feasible = true;  // penalty feasibility (solver schemes)
  int solver_iterations = 0;
  double z_round_error = 0.0;   // max |z^2 - round(z^2)| at termination (joint)
};

// Each user picks ceil(fraction * L) distinct APs uniformly at random
// (always at least one).
Eigen::ArrayXXd random_association(int num_aps, int num_users, double fraction,
                                   std::uint64_t seed);

// Runs one scheme on a fixed realization. The random association derives
// from realization_seed only, so schemes with equal ap_fraction share the
// same draw (common random numbers).
SchemeOutcome run_scheme(const Scenario& scn, const ChannelStats& stats,
                         const SchemeSpec& spec, const ApgParams& apg,
                         const PenaltyWeights& weights,
                         std::uint64_t realization_seed);

// Empirical CDF: sorted (value, i/n) pairs. Throws on empty input.
std::vector<std::pair<double, double>> ecdf(const std::vector<double>& samples);

// Lower empirical quantile: smallest sample at which the ECDF reaches p.
double quantile(std::vector<double> samples, double p);

struct RealizationRow {
  int realization = 0;
  std::uint64_t seed = 0;
  SchemeKind scheme = SchemeKind::kJoint;
  double sse = 0.0;
  double user1_se = 0.0;
  double eve_se = 0.0;
  double min_user_se = 0.0;
  bool qos_ok = false;
  bool solver_feasible = true;
  int solver_iterations = 0;
  double z_round_error = 0.0;
};

struct CampaignResult {
  std::vector<SchemeSpec> schemes;
  std::vector<RealizationRow> rows;  // realization-major, scheme-minor order

  std::vector<double> sse_samples(SchemeKind kind) const;
  std::string to_csv() const;
  std::string summary_json(const NetworkConfig& cfg) const;
};

// n paired realizations of every scheme; realizations run in parallel and
// merge in index order.
CampaignResult run_campaign(const NetworkConfig& base,
                            const std::vector<SchemeSpec>& schemes,
                            const ApgParams& apg, const PenaltyWeights& weights,
                            int n_realizations, int threads);

struct SweepPoint {
  double re_m = 0.0;
  SchemeKind scheme = SchemeKind::kJoint;
  int n = 0;
  double mean_sse = 0.0;
  double stderr_sse = 0.0;
  double median_sse = 0.0;
};

struct SweepResult {
  std::vector<SweepPoint> points;  // re-major, scheme-minor order
  std::string to_csv() const;
  std::string summary_json(const NetworkConfig& cfg) const;
};

// Average SSE versus the eavesdropper placement radius. Every radius uses
// fresh realizations; schemes share realizations (common random numbers).
SweepResult sweep_re(const NetworkConfig& base, const std::vector<SchemeSpec>& schemes,
                     const ApgParams& apg, const PenaltyWeights& weights,
                     const std::vector<double>& re_list_m, int n_realizations,
                     int threads);

}  // namespace cfsec
