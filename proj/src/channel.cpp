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

#include "cfsec/channel.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <stdexcept>

#include <json.hpp>

namespace cfsec {

std::pair<std::vector<int>, std::vector<int>> group_users(
    const Eigen::ArrayXd& beta_row, int antennas_per_ap, double threshold) {
  if (antennas_per_ap < 2)
    throw std::invalid_argument("group_users needs at least two antennas");
  const int k_total = static_cast<int>(beta_row.size());

  const double cutoff = threshold * beta_row.maxCoeff();
  int qualified = 0;
  for (int k = 0; k < k_total; ++k)
    if (beta_row(k) >= cutoff) ++qualified;
  const int strong_size = std::min(antennas_per_ap - 1, qualified);

  std::vector<int> order(k_total);
  std::iota(order.begin(), order.end(), 0);
  std::sort(order.begin(), order.end(), [&](int a, int b) {
    if (beta_row(a) != beta_row(b)) return beta_row(a) > beta_row(b);
    return a < b;
  });

  std::vector<int> strong(order.begin(), order.begin() + strong_size);
  std::vector<int> weak(order.begin() + strong_size, order.end());
  std::sort(strong.begin(), strong.end());
  std::sort(weak.begin(), weak.end());
  return {std::move(strong), std::move(weak)};
}

ChannelStats estimate_gains(const Scenario& scn, int attacked_user) {
  if (attacked_user < 0 || attacked_user >= scn.num_users)
    throw std::invalid_argument("attacked_user out of range");

  ChannelStats st;
  st.num_aps = scn.num_aps;
  st.antennas_per_ap = scn.antennas_per_ap;
  st.num_users = scn.num_users;
  st.attacked_user = attacked_user;
  st.pilot_length = scn.pilot_length;
  st.qos_se = scn.qos_se;
  st.rho_u = scn.rho_u;
  st.rho_e = scn.rho_e;
  st.rho_d = scn.rho_d;
  st.beta = scn.beta;
  st.beta_eve = scn.beta_eve;

  const int L = scn.num_aps;
  const int K = scn.num_users;
  const double tp = static_cast<double>(scn.pilot_length);

  st.gamma.resize(L, K);
  st.alpha.resize(L);
  st.gamma_eve.resize(L);
  for (int l = 0; l < L; ++l) {
    for (int k = 0; k < K; ++k) {
      const double b = st.beta(l, k);
      if (k == attacked_user) {
        // Eve's pilot power leaks into the denominator of the MMSE gain.
        st.gamma(l, k) = tp * st.rho_u * b * b /
                         (tp * st.rho_u * b + tp * st.rho_e * st.beta_eve(l) + 1.0);
      } else {
        st.gamma(l, k) = tp * st.rho_u * b * b / (tp * st.rho_u * b + 1.0);
      }
    }
    const double b1 = st.beta(l, attacked_user);
    st.alpha(l) = st.rho_e * st.beta_eve(l) * st.beta_eve(l) / (st.rho_u * b1 * b1);
    st.gamma_eve(l) = st.alpha(l) * st.gamma(l, attacked_user);
  }

  st.strong_sets.resize(L);
  st.weak_sets.resize(L);
  st.delta = Eigen::ArrayXXd::Zero(L, K);
  st.zf_count.resize(L);
  for (int l = 0; l < L; ++l) {
    auto [strong, weak] =
        group_users(st.beta.row(l).transpose(), scn.antennas_per_ap, scn.grouping_threshold);
    for (int k : strong) st.delta(l, k) = 1.0;
    st.zf_count(l) = static_cast<int>(strong.size());
    st.strong_sets[l] = std::move(strong);
    st.weak_sets[l] = std::move(weak);
  }

  const Eigen::ArrayXd spare =
      (static_cast<double>(scn.antennas_per_ap) - st.zf_count.cast<double>());
  st.coh = ((st.gamma.colwise() * spare) * st.rho_d).sqrt();
  st.leak = st.rho_d * (st.beta - st.delta * st.gamma);
  st.coh_eve = (st.rho_d * spare * st.gamma_eve).sqrt();
  st.leak_eve =
      st.rho_d * (st.beta_eve - st.delta.col(attacked_user) * st.gamma_eve);
  return st;
}

double sinr_user(const ChannelStats& stats, const PowerMatrix& theta, int k) {
  const double amp = (stats.coh.col(k) * theta.col(k)).sum();
  const Eigen::ArrayXd row_power = theta.square().rowwise().sum();
  const double den = (stats.leak.col(k) * row_power).sum() + 1.0;
  return amp * amp / den;
}

double sinr_eve(const ChannelStats& stats, const PowerMatrix& theta) {
  const int att = stats.attacked_user;
  const Eigen::ArrayXd theta_att = theta.col(att);
  const double amp = (stats.coh_eve * theta_att).sum();
  const double self_leak = (stats.leak_eve * theta_att.square()).sum();
  const Eigen::ArrayXd other_power =
      theta.square().rowwise().sum() - theta_att.square();
  const double den = (stats.leak_eve * other_power).sum() + 1.0;
  return (amp * amp + self_leak) / den;
}

double se_user(const ChannelStats& stats, const PowerMatrix& theta, int k) {
  return se_from_sinr(sinr_user(stats, theta, k));
}

double eve_rate(const ChannelStats& stats, const PowerMatrix& theta) {
  return se_from_sinr(sinr_eve(stats, theta));
}

double secrecy_se(const ChannelStats& stats, const PowerMatrix& theta) {
  return std::max(0.0, se_user(stats, theta, stats.attacked_user) -
                           eve_rate(stats, theta));
}

bool power_feasible(const PowerMatrix& theta, double tol) {
  if ((theta < 0.0).any()) return false;
  return (theta.square().rowwise().sum() <= 1.0 + tol).all();
}

std::string channel_stats_to_json(const ChannelStats& st) {
  nlohmann::json j;
  j["num_aps"] = st.num_aps;
  j["antennas_per_ap"] = st.antennas_per_ap;
  j["num_users"] = st.num_users;
  j["attacked_user"] = st.attacked_user;
  j["pilot_length"] = st.pilot_length;
  j["rho_u"] = st.rho_u;
  j["rho_e"] = st.rho_e;
  j["rho_d"] = st.rho_d;
  auto matrix_rows = [](const Eigen::ArrayXXd& m) {
    nlohmann::json rows = nlohmann::json::array();
    for (Eigen::Index l = 0; l < m.rows(); ++l) {
      nlohmann::json row = nlohmann::json::array();
      for (Eigen::Index k = 0; k < m.cols(); ++k) row.push_back(m(l, k));
      rows.push_back(std::move(row));
    }
    return rows;
  };
  j["gamma"] = matrix_rows(st.gamma);
  j["delta"] = matrix_rows(st.delta);
  j["alpha"] = std::vector<double>(st.alpha.data(), st.alpha.data() + st.alpha.size());
  j["gamma_eve"] =
      std::vector<double>(st.gamma_eve.data(), st.gamma_eve.data() + st.gamma_eve.size());
  j["strong_sets"] = st.strong_sets;
  return j.dump(2);
}

}  // namespace cfsec
