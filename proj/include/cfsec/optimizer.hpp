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
#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "cfsec/channel.hpp"

namespace cfsec {

// Stacked iterate v = [theta; z]: power coefficients plus the relaxed
// association variables (z^2 stands in for the binary a). Both are L x K.
struct DecisionVars {
  Eigen::ArrayXXd theta;
  Eigen::ArrayXXd z;
};

struct PenaltyWeights {
  double mu1 = 1.0;       // QoS shortfall
  double mu2 = 1.0;       // binarity of z^2
  double mu3 = 1.0;       // coverage and theta^2 <= z^2 coupling
  double rho_pen = 1.0;   // current continuation weight
  double varsigma = 10.0; // continuation multiplier (> 1)
};

struct ApgParams {
  double alpha_v = 0.0;     // correction step size; 0 = derive from J_est
  double alpha_vbar = 0.0;  // extrapolated step size; 0 = derive from J_est
  double zeta = 0.5;        // non-monotonicity degree, in [0, 1)
  double eps = 1e-4;        // inner relative-change stopping tolerance
  int max_inner = 2000;
  int max_outer = 8;
  double penalty_tol = 1e-6;  // outer stop: Psi1+Psi2+Psi3 below this
  double j_est = 0.0;         // gradient Lipschitz estimate; 0 = sample it
  int lipschitz_pairs = 20;
  double lipschitz_safety = 2.0;
  double init_jitter = 0.01;  // symmetric jitter on the undecided z start
  int polish_max_inner = 500;
  double round_threshold = 0.5;   // a = 1 where z^2 >= this
  double round_keep_power = 1e-4; // ... or where theta^2 >= this (see below)
  int restarts = 4;               // joint solves per instance (varied jitter)
  std::uint64_t seed = 0;         // jitter / Lipschitz sampling substreams
};

// Selects which parts of the iterate the solver may move. Joint mode
// optimizes theta and z with all three penalties. Power-only mode freezes z
// (association given by `mask`), drops the association penalties and pins
// masked theta entries to zero.
struct SolveMode {
  bool optimize_z = true;
  std::optional<Eigen::ArrayXXd> mask;  // L x K in {0,1}; entries 0 force theta=0
};

struct PenaltyTerms {
  double qos = 0.0;       // Psi_1
  double binarity = 0.0;  // Psi_2
  double assoc = 0.0;     // Psi_3
  double total() const { return qos + binarity + assoc; }
};

enum class StepKind : std::uint8_t { kAccepted, kCorrectedTilde, kCorrectedHat };

struct TraceRow {
  int outer = 0;
  int inner = 0;
  double rho_pen = 0.0;
  double f = 0.0;       // penalized objective at the new iterate
  double eve_se = 0.0;  // R_E component
  double psi1 = 0.0, psi2 = 0.0, psi3 = 0.0;
  double c_before = 0.0;  // non-monotone reference the acceptance tested against
  StepKind step = StepKind::kAccepted;
};

struct SolverTrace {
  std::vector<TraceRow> rows;
  double relaxed_eve_se = 0.0;  // R_E at the relaxed solution
  double rounded_eve_se = 0.0;  // R_E after rounding and polish (when run)
  std::string to_csv() const;
};

struct SolveResult {
  DecisionVars v;
  double f = 0.0;
  double eve_se = 0.0;
  PenaltyTerms penalties;
  bool penalty_feasible = false;
  int total_inner_iterations = 0;
  PenaltyWeights final_weights;  // rho_pen as evolved by continuation
  SolverTrace trace;
};

const char* to_string(StepKind kind);

// Scalar recursions of the accelerated scheme: the extrapolation weight q,
// the averaging weight b and the non-monotone acceptance reference c (a
// zeta-discounted average of past objective values).
inline double apg_q_update(double q) {
  return (1.0 + std::sqrt(4.0 * q * q + 1.0)) / 2.0;
}
inline double apg_b_update(double b, double zeta) { return zeta * b + 1.0; }
inline double apg_c_update(double c, double b, double b_next, double f_new,
                           double zeta) {
  return (zeta * b * c + f_new) / b_next;
}

// Penalized objective f(v) = log2(1 + U_E/V_E) + rho [mu1 Psi1 + mu2 Psi2
// + mu3 Psi3] and its pieces. In power-only mode Psi2/Psi3 are dropped.
PenaltyTerms penalties(const DecisionVars& v, const ChannelStats& stats,
                       const SolveMode& mode = {});
double objective(const DecisionVars& v, const ChannelStats& stats,
                 const PenaltyWeights& w, const SolveMode& mode = {});

// Analytic gradient of `objective` (stacked like DecisionVars). Masked or
// frozen coordinates come back zero.
DecisionVars gradient(const DecisionVars& v, const ChannelStats& stats,
                      const PenaltyWeights& w, const SolveMode& mode = {});

// Exact Euclidean projection onto the feasible box/ball set: per-AP rows of
// theta onto the unit ball intersected with the nonnegative orthant, z
// clamped to [0,1]. Masked theta entries are pinned to zero first.
Eigen::ArrayXXd project_theta(const Eigen::ArrayXXd& raw,
                              const std::optional<Eigen::ArrayXXd>& mask = {});
DecisionVars project(const DecisionVars& raw, const SolveMode& mode = {});

// Max secant ratio ||grad(a)-grad(b)|| / ||a-b|| over sampled feasible pairs
// near `center`, times the safety factor.
double estimate_lipschitz(const ChannelStats& stats, const PenaltyWeights& w,
                          const SolveMode& mode, const ApgParams& params,
                          const DecisionVars& center, std::uint64_t seed);

// Feasible, association-neutral starting point: equal power 1/sqrt(K) and
// z at the undecided 1/sqrt(2), plus a small seeded jitter on z (the exact
// undecided point is a stationary point of the binarity penalty, so an
// unjittered start never commits).
DecisionVars initial_point(const ChannelStats& stats, const ApgParams& params,
                           const SolveMode& mode = {});

// Accelerated projected gradient with non-monotone acceptance, wrapped in
// penalty continuation over rho_pen. Returns the best penalized iterate.
SolveResult apg_solve(const ChannelStats& stats, const ApgParams& params,
                      const PenaltyWeights& w, const DecisionVars& v0,
                      const SolveMode& mode = {});

struct RoundedSolution {
  Eigen::ArrayXXd theta;
  Eigen::ArrayXXd assoc;  // binary a, L x K
  double eve_se = 0.0;
  bool qos_ok = false;        // min_k R_k >= qos target - 0.01
  double min_user_se = 0.0;
};

// Decodes the relaxed iterate into a binary association and re-optimizes
// the power on that fixed support with a short power-only run. An entry is
// selected when z^2 rounds up or when theta still carries non-negligible
// power there: the quadratic penalties cannot distinguish z=0 from z=1 at
// tiny theta, yet dropping such coherently-combined crumbs can break the
// QoS of the user they serve. Users left uncovered get their strongest-z AP
// forced on.
RoundedSolution round_and_polish(const DecisionVars& v, const ChannelStats& stats,
                                 const ApgParams& params, const PenaltyWeights& w);

struct JointSolution {
  RoundedSolution rounded;
  double z_round_error = 0.0;  // max |z^2 - round(z^2)| of the winning run
  bool penalty_feasible = false;
  int total_inner_iterations = 0;  // summed over restarts
};

// Full joint pipeline with deterministic multi-start: `restarts` runs of
// apg_solve + round_and_polish under derived jitter seeds, keeping the best
// outcome (QoS status first, then eavesdropper rate).
JointSolution solve_joint(const ChannelStats& stats, const ApgParams& params,
                          const PenaltyWeights& weights);

}  // namespace cfsec
