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

#include <Eigen/Dense>
#include <cstdint>
#include <utility>
#include <vector>

#include "cfsec/channel.hpp"

namespace cfsec {

// One small-scale fading realization. Channels are stored per AP: h[l] is
// M x K with column k the AP l -> user k channel.
struct SmallScaleDraw {
  std::vector<Eigen::MatrixXcd> h;            // per AP, M x K
  std::vector<Eigen::VectorXcd> h_eve;        // per AP, M
  std::vector<Eigen::MatrixXcd> pilot_noise;  // per AP, M x K projected noise
};

// Per-AP linear MMSE channel estimates, M x K.
using ChannelEstimates = std::vector<Eigen::MatrixXcd>;

// Explicit hybrid precoders: w[l] column k is the precoding vector for user
// k at AP l; b[l] is the projector onto the orthogonal complement of the
// strong users' estimated subspace.
struct PrecoderSet {
  std::vector<Eigen::MatrixXcd> w;  // per AP, M x K
  std::vector<Eigen::MatrixXcd> b;  // per AP, M x M
};

// Draws channels, forms the contaminated pilot observations and the LMMSE
// estimates whose per-antenna variances reproduce the closed-form gains.
std::pair<SmallScaleDraw, ChannelEstimates> draw_estimates(
    const ChannelStats& stats, std::uint64_t seed);

// Builds the zero-forcing / protected-MRT precoders from the estimates.
// Throws if a Gram matrix is singular (a probability-zero event; callers
// that loop over draws simply redraw).
PrecoderSet build_precoders(const ChannelEstimates& est, const ChannelStats& stats);

struct EmpiricalSinr {
  Eigen::ArrayXd sinr_users;    // K
  Eigen::ArrayXd stderr_users;  // batch-means standard error per user
  double sinr_eve = 0.0;
  double stderr_eve = 0.0;
  int n_draws = 0;
  int n_batches = 0;
};

// Link-level estimate of the hardening-bound SINRs: sample means of the
// desired-signal coefficient, its variance and the cross-user interference
// powers, assembled exactly like the closed forms. Draw batches run in
// parallel with per-draw substreams and merge in fixed batch order, so the
// result does not depend on the thread count.
EmpiricalSinr empirical_sinr(const ChannelStats& stats, const PowerMatrix& theta,
                             int n_draws, std::uint64_t seed, int threads = 1);

}  // namespace cfsec
