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
//
// Independent cross-checks of the closed forms and solver primitives. Each
// check recomputes its reference by a different route than the code under
// test (central differences, active-set enumeration, link-level sampling),
// so the two sides can only agree by being right.

#pragma once

#include <Eigen/Core>
#include <cstdint>
#include <random>
#include <string>
#include <vector>

#include "cfsec/channel.hpp"
#include "cfsec/optimizer.hpp"

namespace cfsec {

enum class CheckStatus { kPass, kInconclusive, kFail };

struct CheckReport {
  std::string name;
  CheckStatus status = CheckStatus::kFail;
  double measured = 0.0;   // worst observed error
  double tolerance = 0.0;
  std::string detail;
};

const char* to_string(CheckStatus status);

// Central-difference gradient of the penalized objective at one point:
// max_i |g_i - fd_i| / max(1, ||g||_inf).
double gradient_fd_error(const DecisionVars& point, const ChannelStats& stats,
                         const PenaltyWeights& w, const SolveMode& mode,
                         double h = 1e-6);

// Exhaustive active-set / KKT solution of min ||x - r|| over the unit ball
// intersected with the nonnegative orthant. Candidate zero sets are the
// prefixes of r sorted ascending (the optimal zero set is always such a
// prefix), each paired with ball-active and ball-inactive multipliers and
// kept only if its KKT certificate verifies.
Eigen::VectorXd project_ball_orthant_oracle(const Eigen::VectorXd& r);

// A small scenario used by several checks.
NetworkConfig validation_network(int num_aps, int num_users, int antennas,
                                 std::uint64_t seed);

// Random interior-ish feasible point and a random feasible power matrix.
DecisionVars random_feasible_point(int num_aps, int num_users, std::mt19937_64& rng);
PowerMatrix random_feasible_power(int num_aps, int num_users, std::mt19937_64& rng);

CheckReport check_gradient(std::uint64_t seed, int points = 100, int num_aps = 10,
                           int num_users = 4, int antennas = 4);
CheckReport check_projection(std::uint64_t seed, int instances = 1000, int dim = 20);
std::vector<CheckReport> check_sinr_vs_montecarlo(std::uint64_t seed, int draws = 10000,
                                                  int n_power_matrices = 5,
                                                  int threads = 1);
std::vector<CheckReport> check_precoders(std::uint64_t seed, int draws = 10000);

}  // namespace cfsec
