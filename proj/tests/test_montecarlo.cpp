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

#include <doctest.h>

#include <cmath>
#include <complex>

#include "cfsec/montecarlo.hpp"
#include "cfsec/rng.hpp"
#include "cfsec/validation.hpp"

using namespace cfsec;

namespace {

ChannelStats small_stats(std::uint64_t seed, int num_aps = 2, int num_users = 3,
                         int antennas = 4) {
  const NetworkConfig cfg = validation_network(num_aps, num_users, antennas, seed);
  return estimate_gains(generate_scenario(cfg));
}

}  // namespace

TEST_CASE("estimate variance matches the closed-form gains") {
  const ChannelStats st = small_stats(3);
  const int draws = 100000;
  Eigen::ArrayXXd power_sum = Eigen::ArrayXXd::Zero(st.num_aps, st.num_users);
  for (int d = 0; d < draws; ++d) {
    const auto [draw, est] = draw_estimates(st, derive_seed(100, d));
    for (int l = 0; l < st.num_aps; ++l)
      for (int k = 0; k < st.num_users; ++k)
        power_sum(l, k) += est[l].col(k).squaredNorm();
  }
  for (int l = 0; l < st.num_aps; ++l) {
    for (int k = 0; k < st.num_users; ++k) {
      const double var = power_sum(l, k) / draws / st.antennas_per_ap;
      CHECK(var == doctest::Approx(st.gamma(l, k)).epsilon(0.02));
    }
  }
}

TEST_CASE("the implied eavesdropper estimate scales exactly with the attacked user's") {
  const ChannelStats st = small_stats(5);
  const int draws = 20000;
  // Eve's estimate is sqrt(alpha) times the attacked user's estimate; its
  // alignment with Eve's true channel must therefore average to gamma_eve.
  Eigen::ArrayXd align_sum = Eigen::ArrayXd::Zero(st.num_aps);
  Eigen::ArrayXd power_sum = Eigen::ArrayXd::Zero(st.num_aps);
  for (int d = 0; d < draws; ++d) {
    const auto [draw, est] = draw_estimates(st, derive_seed(200, d));
    for (int l = 0; l < st.num_aps; ++l) {
      const Eigen::VectorXcd eve_est =
          std::sqrt(st.alpha(l)) * est[l].col(st.attacked_user);
      align_sum(l) += (eve_est.dot(draw.h_eve[l])).real() / st.antennas_per_ap;
      power_sum(l) += eve_est.squaredNorm() / st.antennas_per_ap;
    }
  }
  for (int l = 0; l < st.num_aps; ++l) {
    CHECK(power_sum(l) / draws == doctest::Approx(st.gamma_eve(l)).epsilon(0.03));
    CHECK(align_sum(l) / draws == doctest::Approx(st.gamma_eve(l)).epsilon(0.03));
  }
}

TEST_CASE("no attack means a zero implied eavesdropper estimate") {
  NetworkConfig cfg = validation_network(2, 3, 4, 8);
  cfg.eve_power_w = 1e-300;  // effectively zero while staying valid
  const ChannelStats st = estimate_gains(generate_scenario(cfg));
  CHECK(st.alpha.maxCoeff() < 1e-250);
  const auto [draw, est] = draw_estimates(st, 9);
  for (int l = 0; l < st.num_aps; ++l) {
    const Eigen::VectorXcd eve_est =
        std::sqrt(st.alpha(l)) * est[l].col(st.attacked_user);
    CHECK(eve_est.norm() < 1e-100);
  }
}

TEST_CASE("MMSE estimates are uncorrelated with their errors") {
  const ChannelStats st = small_stats(4);
  const int draws = 50000;
  Eigen::ArrayXXd cross_sum = Eigen::ArrayXXd::Zero(st.num_aps, st.num_users);
  for (int d = 0; d < draws; ++d) {
    const auto [draw, est] = draw_estimates(st, derive_seed(300, d));
    for (int l = 0; l < st.num_aps; ++l)
      for (int k = 0; k < st.num_users; ++k)
        cross_sum(l, k) += (est[l].col(k).dot(draw.h[l].col(k) - est[l].col(k))).real() /
                           st.antennas_per_ap;
  }
  for (int l = 0; l < st.num_aps; ++l) {
    for (int k = 0; k < st.num_users; ++k) {
      // Per-draw spread of the cross term is about gamma * sqrt(beta/gamma);
      // demand the mean stays within three standard errors of zero.
      const double scale =
          st.gamma(l, k) * std::sqrt(st.beta(l, k) / st.gamma(l, k));
      const double se = scale / std::sqrt(static_cast<double>(draws));
      CHECK(std::abs(cross_sum(l, k) / draws) < 3.0 * se);
    }
  }
}

TEST_CASE("precoder structure: zero-forcing, projector, normalization") {
  const std::vector<CheckReport> reports = check_precoders(17, 10000);
  for (const auto& rep : reports) {
    INFO(rep.name, ": ", rep.detail);
    CHECK(rep.status == CheckStatus::kPass);
  }
}

TEST_CASE("per-draw zero-forcing identities") {
  const ChannelStats st = small_stats(6, 3, 5, 6);
  const auto [draw, est] = draw_estimates(st, 77);
  const PrecoderSet prec = build_precoders(est, st);
  for (int l = 0; l < st.num_aps; ++l) {
    const auto& strong = st.strong_sets[l];
    const double spare = st.antennas_per_ap - static_cast<double>(strong.size());
    for (int a : strong) {
      // Own-channel response is the deterministic coherent amplitude.
      const std::complex<double> own = est[l].col(a).dot(prec.w[l].col(a));
      CHECK(own.real() == doctest::Approx(std::sqrt(spare * st.gamma(l, a))).epsilon(1e-10));
      CHECK(std::abs(own.imag()) < 1e-12);
      for (int b : strong)
        if (a != b) CHECK(std::abs(est[l].col(a).dot(prec.w[l].col(b))) < 1e-10);
      CHECK((prec.b[l] * est[l].col(a)).norm() < 1e-10);
    }
    CHECK((prec.b[l] * prec.b[l] - prec.b[l]).cwiseAbs().maxCoeff() < 1e-10);
    CHECK((prec.b[l] - prec.b[l].adjoint()).cwiseAbs().maxCoeff() < 1e-10);
  }
}

TEST_CASE("empirical SINR is zero without transmission") {
  const ChannelStats st = small_stats(12);
  const PowerMatrix theta = PowerMatrix::Zero(st.num_aps, st.num_users);
  const EmpiricalSinr emp = empirical_sinr(st, theta, 1000, 5);
  CHECK(emp.sinr_users.abs().maxCoeff() == 0.0);
  CHECK(emp.sinr_eve == 0.0);
}

TEST_CASE("closed-form SINRs agree with the link-level estimate") {
  const NetworkConfig cfg = validation_network(20, 8, 8, 123);
  const ChannelStats st = estimate_gains(generate_scenario(cfg));
  std::mt19937_64 rng(55);
  const PowerMatrix theta = random_feasible_power(cfg.num_aps, cfg.num_users, rng);

  const EmpiricalSinr emp = empirical_sinr(st, theta, 4000, 71, 2);
  for (int k = 0; k < cfg.num_users; ++k) {
    const double closed = sinr_user(st, theta, k);
    CHECK(emp.sinr_users(k) == doctest::Approx(closed).epsilon(0.05));
    CHECK(std::abs(emp.sinr_users(k) - closed) <= 3.0 * emp.stderr_users(k));
  }
  const double closed_eve = sinr_eve(st, theta);
  CHECK(emp.sinr_eve == doctest::Approx(closed_eve).epsilon(0.05));
  CHECK(std::abs(emp.sinr_eve - closed_eve) <= 3.0 * emp.stderr_eve);
}

TEST_CASE("the estimator is deterministic and thread-count independent") {
  const ChannelStats st = small_stats(31, 4, 4, 5);
  std::mt19937_64 rng(9);
  const PowerMatrix theta = random_feasible_power(4, 4, rng);

  const EmpiricalSinr a = empirical_sinr(st, theta, 1500, 42, 1);
  const EmpiricalSinr b = empirical_sinr(st, theta, 1500, 42, 2);
  const EmpiricalSinr c = empirical_sinr(st, theta, 1500, 42, 1);
  CHECK((a.sinr_users == b.sinr_users).all());
  CHECK(a.sinr_eve == b.sinr_eve);
  CHECK((a.sinr_users == c.sinr_users).all());
  CHECK(a.stderr_eve == b.stderr_eve);
}
