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
#include <array>
#include <cstdint>
#include <string>
#include <vector>

namespace cfsec {

using Vec2 = std::array<double, 2>;

// Static description of one network deployment. All powers are in watts and
// are converted to noise-normalized SNRs when a Scenario is generated.
struct NetworkConfig {
  int num_aps = 40;          // L
  int antennas_per_ap = 4;   // M
  int num_users = 8;         // K
  double side_m = 1000.0;    // square service area side
  double eve_radius_m = 100.0;
  double user_power_w = 0.1;
  double eve_power_w = 0.1;
  double ap_power_w = 1.0;
  double noise_dbm = -92.0;
  int pilot_length = 0;      // tau_p; 0 means "equal to num_users"
  double qos_se = 0.2;       // per-user SE target (bits/s/Hz)
  double grouping_threshold = 0.01;  // relative gain cutoff for the strong set
  std::uint64_t seed = 1;

  int pilot_length_or_default() const {
    return pilot_length > 0 ? pilot_length : num_users;
  }

  // Throws std::invalid_argument with a descriptive message on bad input.
  void validate() const;
};

// One large-scale network realization: geometry plus linear channel gains.
// Immutable after generation; safe to share across threads.
struct Scenario {
  // Configuration echo needed by downstream modules.
  int num_aps = 0;
  int antennas_per_ap = 0;
  int num_users = 0;
  double side_m = 0.0;
  int pilot_length = 0;
  double qos_se = 0.0;
  double grouping_threshold = 0.01;
  std::uint64_t seed = 0;

  std::vector<Vec2> ap_pos;    // L positions (m)
  std::vector<Vec2> user_pos;  // K positions (m)
  Vec2 eve_pos{0.0, 0.0};

  Eigen::ArrayXXd beta;    // L x K large-scale gains (linear)
  Eigen::ArrayXd beta_eve; // L gains AP -> Eve (linear)

  // Noise-normalized transmit SNRs (P / N0).
  double rho_u = 0.0;
  double rho_e = 0.0;
  double rho_d = 0.0;
};

// Minimum-distance floor applied before the path-loss model, which is not
// defined below its 1 m reference distance.
inline constexpr double kMinPathlossDistanceM = 1.0;

// Torus metric on the square: minimum over the nine periodic images.
double wrap_distance(const Vec2& p, const Vec2& q, double side_m);

// Distance-dependent path loss in dB: -30.5 - 36.7 log10(d / 1 m).
double pathloss_db(double d_m);

// Per-AP rows of spatially correlated log-normal shadowing (dB). Each row is
// a zero-mean Gaussian vector over the given positions with covariance
// 16 * 2^(-dist/9 m); rows are independent across APs. `positions` normally
// holds the K user positions plus Eve as a trailing entry.
Eigen::ArrayXXd correlated_shadowing_db(const std::vector<Vec2>& positions,
                                        int num_aps, double side_m,
                                        std::uint64_t seed);

Scenario generate_scenario(const NetworkConfig& cfg);

// Structured-file replay: positions in meters, gains in dB.
std::string scenario_to_json(const Scenario& scn);
Scenario scenario_from_json(const std::string& text);

}  // namespace cfsec
