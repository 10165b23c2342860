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

#include <Eigen/Core>
#include <cmath>
#include <vector>

#include "cfsec/scenario.hpp"

namespace cfsec {

// L x K matrix of nonnegative power-control coefficients theta. Feasibility
// means theta >= 0 and per-AP row power sum_k theta(l,k)^2 <= 1.
using PowerMatrix = Eigen::ArrayXXd;

// Closed-form channel statistics under the pilot-spoofing attack, plus the
// per-AP user grouping the hybrid ZF/MRT precoder commits to. Immutable after
// construction; every rate evaluation below is pure.
struct ChannelStats {
  int num_aps = 0;
  int antennas_per_ap = 0;
  int num_users = 0;
  int attacked_user = 0;
  int pilot_length = 0;
  double qos_se = 0.0;

  double rho_u = 0.0, rho_e = 0.0, rho_d = 0.0;
  Eigen::ArrayXXd beta;     // L x K, copied from the scenario
  Eigen::ArrayXd beta_eve;  // L

  Eigen::ArrayXXd gamma;    // L x K estimation gains
  Eigen::ArrayXd alpha;     // L, (rho_e beta_eve^2) / (rho_u beta_att^2)
  Eigen::ArrayXd gamma_eve; // L, alpha * gamma(:, attacked)

  std::vector<std::vector<int>> strong_sets;  // per-AP S_l (sorted user ids)
  std::vector<std::vector<int>> weak_sets;    // per-AP W_l
  Eigen::ArrayXXd delta;                      // L x K, 1 iff k in S_l
  Eigen::ArrayXi zf_count;                    // per-AP |S_l|

  // Precomputed coefficients of the deterministic-equivalent rates:
  //   coh(l,k)  = sqrt(rho_d (M - |S_l|) gamma(l,k))    coherent gain
  //   leak(l,k) = rho_d (beta(l,k) - delta(l,k) gamma(l,k))  residual power
  // and the same pair seen by the eavesdropper.
  Eigen::ArrayXXd coh;
  Eigen::ArrayXXd leak;
  Eigen::ArrayXd coh_eve;
  Eigen::ArrayXd leak_eve;
};

// Splits one AP's users into a strong (zero-forced) and weak (protected MRT)
// group: the strong set keeps the largest gains within `threshold` of the
// row maximum, capped at M-1 so a ZF null space remains. Ties break toward
// the lower user index.
std::pair<std::vector<int>, std::vector<int>> group_users(
    const Eigen::ArrayXd& beta_row, int antennas_per_ap, double threshold);

ChannelStats estimate_gains(const Scenario& scn, int attacked_user = 0);

double sinr_user(const ChannelStats& stats, const PowerMatrix& theta, int k);
double sinr_eve(const ChannelStats& stats, const PowerMatrix& theta);

inline double se_from_sinr(double sinr) { return std::log2(1.0 + sinr); }

double se_user(const ChannelStats& stats, const PowerMatrix& theta, int k);
double eve_rate(const ChannelStats& stats, const PowerMatrix& theta);

// [SE of the attacked user - SE of Eve]^+
double secrecy_se(const ChannelStats& stats, const PowerMatrix& theta);

bool power_feasible(const PowerMatrix& theta, double tol = 1e-9);

std::string channel_stats_to_json(const ChannelStats& stats);

}  // namespace cfsec
