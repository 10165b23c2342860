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

#include "cfsec/scenario.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfsec/rng.hpp"

namespace cfsec {

namespace {

double noise_power_w(double noise_dbm) {
  return std::pow(10.0, (noise_dbm - 30.0) / 10.0);
}

double wrap_coord(double x, double side) {
  double r = std::fmod(x, side);
  if (r < 0.0) r += side;
  return r;
}

}  // namespace

void NetworkConfig::validate() const {
  std::ostringstream err;
  if (num_aps < 1 || num_users < 1)
    err << "need at least one AP and one user";
  else if (antennas_per_ap < 2)
    err << "antennas_per_ap must be >= 2 (partial zero-forcing needs a spare dimension)";
  else if (static_cast<long>(num_aps) * antennas_per_ap <= num_users)
    err << "total antenna count num_aps*antennas_per_ap must exceed num_users";
  else if (side_m <= 0.0)
    err << "side_m must be positive";
  else if (eve_radius_m < 0.0 || eve_radius_m >= side_m)
    err << "eve_radius_m must lie in [0, side_m)";
  else if (user_power_w <= 0.0 || eve_power_w <= 0.0 || ap_power_w <= 0.0)
    err << "all transmit powers must be positive";
  else if (pilot_length_or_default() < num_users)
    err << "pilot_length must be >= num_users for orthogonal pilots";
  else if (qos_se < 0.0)
    err << "qos_se must be nonnegative";
  else if (grouping_threshold <= 0.0 || grouping_threshold > 1.0)
    err << "grouping_threshold must lie in (0, 1]";
  else
    return;
  throw std::invalid_argument("invalid network config: " + err.str());
}

double wrap_distance(const Vec2& p, const Vec2& q, double side_m) {
  double best = std::numeric_limits<double>::infinity();
  for (int ix = -1; ix <= 1; ++ix) {
    for (int iy = -1; iy <= 1; ++iy) {
      const double dx = p[0] - q[0] + ix * side_m;
      const double dy = p[1] - q[1] + iy * side_m;
      best = std::min(best, dx * dx + dy * dy);
    }
  }
  return std::sqrt(best);
}

double pathloss_db(double d_m) {
  return -30.5 - 36.7 * std::log10(d_m);
}

Eigen::ArrayXXd correlated_shadowing_db(const std::vector<Vec2>& positions,
                                        int num_aps, double side_m,
                                        std::uint64_t seed) {
  const int n = static_cast<int>(positions.size());
  Eigen::MatrixXd cov(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = 0; j <= i; ++j) {
      const double dist = wrap_distance(positions[i], positions[j], side_m);
      const double c = 16.0 * std::pow(2.0, -dist / 9.0);
      cov(i, j) = c;
      cov(j, i) = c;
    }
  }

  Eigen::LLT<Eigen::MatrixXd> llt(cov);
  if (llt.info() != Eigen::Success) {
    // Coincident positions make cov singular; a tiny diagonal jitter restores
    // positive definiteness without changing the statistics measurably.
    cov.diagonal().array() += 1e-9;
    llt.compute(cov);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("shadowing covariance is not positive semi-definite");
  }
  const Eigen::MatrixXd chol = llt.matrixL();

  std::mt19937_64 rng = make_engine(seed, stream::kShadowing);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Eigen::ArrayXXd shadow(num_aps, n);
  Eigen::VectorXd iid(n);
  for (int l = 0; l < num_aps; ++l) {
    for (int i = 0; i < n; ++i) iid(i) = gauss(rng);
    shadow.row(l) = (chol * iid).transpose().array();
  }
  return shadow;
}

Scenario generate_scenario(const NetworkConfig& cfg) {
  cfg.validate();

  Scenario scn;
  scn.num_aps = cfg.num_aps;
  scn.antennas_per_ap = cfg.antennas_per_ap;
  scn.num_users = cfg.num_users;
  scn.side_m = cfg.side_m;
  scn.pilot_length = cfg.pilot_length_or_default();
  scn.qos_se = cfg.qos_se;
  scn.grouping_threshold = cfg.grouping_threshold;
  scn.seed = cfg.seed;

  const double n0 = noise_power_w(cfg.noise_dbm);
  scn.rho_u = cfg.user_power_w / n0;
  scn.rho_e = cfg.eve_power_w / n0;
  scn.rho_d = cfg.ap_power_w / n0;

  std::uniform_real_distribution<double> unif(0.0, cfg.side_m);

  {
    std::mt19937_64 rng = make_engine(cfg.seed, stream::kApPositions);
    scn.ap_pos.resize(cfg.num_aps);
    for (auto& p : scn.ap_pos) {
      p[0] = unif(rng);
      p[1] = unif(rng);
    }
  }
  {
    std::mt19937_64 rng = make_engine(cfg.seed, stream::kUserPositions);
    scn.user_pos.resize(cfg.num_users);
    for (auto& p : scn.user_pos) {
      p[0] = unif(rng);
      p[1] = unif(rng);
    }
  }
  {
    // Eve lands uniformly on the disk of radius eve_radius_m around the
    // attacked user (user 0), wrapped back into the square.
    std::mt19937_64 rng = make_engine(cfg.seed, stream::kEvePosition);
    std::uniform_real_distribution<double> u01(0.0, 1.0);
    const double radius = cfg.eve_radius_m * std::sqrt(u01(rng));
    const double angle = 2.0 * M_PI * u01(rng);
    scn.eve_pos[0] = wrap_coord(scn.user_pos[0][0] + radius * std::cos(angle), cfg.side_m);
    scn.eve_pos[1] = wrap_coord(scn.user_pos[0][1] + radius * std::sin(angle), cfg.side_m);
  }

  // Shadowing treats Eve as an extra column so her row correlation against
  // nearby users follows the same model as user-user correlation.
  std::vector<Vec2> rx_positions = scn.user_pos;
  rx_positions.push_back(scn.eve_pos);
  const Eigen::ArrayXXd shadow =
      correlated_shadowing_db(rx_positions, cfg.num_aps, cfg.side_m, cfg.seed);

  scn.beta.resize(cfg.num_aps, cfg.num_users);
  scn.beta_eve.resize(cfg.num_aps);
  for (int l = 0; l < cfg.num_aps; ++l) {
    for (int k = 0; k < cfg.num_users; ++k) {
      const double d = std::max(
          wrap_distance(scn.ap_pos[l], scn.user_pos[k], cfg.side_m), kMinPathlossDistanceM);
      scn.beta(l, k) = std::pow(10.0, (pathloss_db(d) + shadow(l, k)) / 10.0);
    }
    const double d_e = std::max(
        wrap_distance(scn.ap_pos[l], scn.eve_pos, cfg.side_m), kMinPathlossDistanceM);
    scn.beta_eve(l) = std::pow(10.0, (pathloss_db(d_e) + shadow(l, cfg.num_users)) / 10.0);
  }
  return scn;
}

namespace {

nlohmann::json pos_to_json(const Vec2& p) { return nlohmann::json{p[0], p[1]}; }

Vec2 pos_from_json(const nlohmann::json& j) {
  return Vec2{j.at(0).get<double>(), j.at(1).get<double>()};
}

double to_db(double linear) { return 10.0 * std::log10(linear); }
double from_db(double db) { return std::pow(10.0, db / 10.0); }

}  // namespace

std::string scenario_to_json(const Scenario& scn) {
  nlohmann::json j;
  j["num_aps"] = scn.num_aps;
  j["antennas_per_ap"] = scn.antennas_per_ap;
  j["num_users"] = scn.num_users;
  j["side_m"] = scn.side_m;
  j["pilot_length"] = scn.pilot_length;
  j["qos_se"] = scn.qos_se;
  j["grouping_threshold"] = scn.grouping_threshold;
  j["seed"] = scn.seed;
  j["rho_u"] = scn.rho_u;
  j["rho_e"] = scn.rho_e;
  j["rho_d"] = scn.rho_d;

  nlohmann::json aps = nlohmann::json::array();
  for (const auto& p : scn.ap_pos) aps.push_back(pos_to_json(p));
  j["ap_pos_m"] = std::move(aps);
  nlohmann::json users = nlohmann::json::array();
  for (const auto& p : scn.user_pos) users.push_back(pos_to_json(p));
  j["user_pos_m"] = std::move(users);
  j["eve_pos_m"] = pos_to_json(scn.eve_pos);

  nlohmann::json beta_db = nlohmann::json::array();
  for (int l = 0; l < scn.num_aps; ++l) {
    nlohmann::json row = nlohmann::json::array();
    for (int k = 0; k < scn.num_users; ++k) row.push_back(to_db(scn.beta(l, k)));
    beta_db.push_back(std::move(row));
  }
  j["beta_db"] = std::move(beta_db);
  nlohmann::json beta_e_db = nlohmann::json::array();
  for (int l = 0; l < scn.num_aps; ++l) beta_e_db.push_back(to_db(scn.beta_eve(l)));
  j["beta_eve_db"] = std::move(beta_e_db);
  return j.dump(2);
}

Scenario scenario_from_json(const std::string& text) {
  const nlohmann::json j = nlohmann::json::parse(text);
  Scenario scn;
  scn.num_aps = j.at("num_aps").get<int>();
  scn.antennas_per_ap = j.at("antennas_per_ap").get<int>();
  scn.num_users = j.at("num_users").get<int>();
  scn.side_m = j.at("side_m").get<double>();
  scn.pilot_length = j.at("pilot_length").get<int>();
  scn.qos_se = j.at("qos_se").get<double>();
  scn.grouping_threshold = j.at("grouping_threshold").get<double>();
  scn.seed = j.at("seed").get<std::uint64_t>();
  scn.rho_u = j.at("rho_u").get<double>();
  scn.rho_e = j.at("rho_e").get<double>();
  scn.rho_d = j.at("rho_d").get<double>();

  for (const auto& p : j.at("ap_pos_m")) scn.ap_pos.push_back(pos_from_json(p));
  for (const auto& p : j.at("user_pos_m")) scn.user_pos.push_back(pos_from_json(p));
  scn.eve_pos = pos_from_json(j.at("eve_pos_m"));

  scn.beta.resize(scn.num_aps, scn.num_users);
  const auto& beta_db = j.at("beta_db");
  for (int l = 0; l < scn.num_aps; ++l)
    for (int k = 0; k < scn.num_users; ++k)
      scn.beta(l, k) = from_db(beta_db.at(l).at(k).get<double>());
  scn.beta_eve.resize(scn.num_aps);
  const auto& beta_e_db = j.at("beta_eve_db");
  for (int l = 0; l < scn.num_aps; ++l) scn.beta_eve(l) = from_db(beta_e_db.at(l).get<double>());
  return scn;
}

}  // namespace cfsec
