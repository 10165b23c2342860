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

#include "cfsec/config.hpp"

#include <cstdlib>
#include <filesystem>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfsec/parallel.hpp"

namespace cfsec {

namespace {

using nlohmann::json;

void reject_unknown_keys(const json& j, const std::vector<std::string>& known,
                         const std::string& section) {
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (std::find(known.begin(), known.end(), it.key()) == known.end())
      throw std::invalid_argument("unknown key '" + it.key() + "' in config section '" +
                                  section + "'");
  }
}

template <typename T>
void read_field(const json& j, const char* key, T& out) {
  if (j.contains(key)) out = j.at(key).get<T>();
}

void parse_network(const json& j, NetworkConfig& cfg) {
  reject_unknown_keys(j,
                      {"num_aps", "antennas_per_ap", "num_users", "side_m",
                       "eve_radius_m", "user_power_w", "eve_power_w", "ap_power_w",
                       "noise_dbm", "pilot_length", "qos_se", "grouping_threshold",
                       "seed"},
                      "network");
  read_field(j, "num_aps", cfg.num_aps);
  read_field(j, "antennas_per_ap", cfg.antennas_per_ap);
  read_field(j, "num_users", cfg.num_users);
  read_field(j, "side_m", cfg.side_m);
  read_field(j, "eve_radius_m", cfg.eve_radius_m);
  read_field(j, "user_power_w", cfg.user_power_w);
  read_field(j, "eve_power_w", cfg.eve_power_w);
  read_field(j, "ap_power_w", cfg.ap_power_w);
  read_field(j, "noise_dbm", cfg.noise_dbm);
  read_field(j, "pilot_length", cfg.pilot_length);
  read_field(j, "qos_se", cfg.qos_se);
  read_field(j, "grouping_threshold", cfg.grouping_threshold);
  read_field(j, "seed", cfg.seed);
}

void parse_optimizer(const json& j, ApgParams& apg, PenaltyWeights& w) {
  reject_unknown_keys(j,
                      {"mu1", "mu2", "mu3", "rho0", "varsigma", "alpha_v",
                       "alpha_vbar", "zeta", "eps", "max_inner", "max_outer",
                       "penalty_tol", "j_est", "lipschitz_pairs", "lipschitz_safety",
                       "init_jitter", "polish_max_inner", "round_threshold",
                       "round_keep_power", "restarts", "seed"},
                      "optimizer");
  read_field(j, "mu1", w.mu1);
  read_field(j, "mu2", w.mu2);
  read_field(j, "mu3", w.mu3);
  read_field(j, "rho0", w.rho_pen);
  read_field(j, "varsigma", w.varsigma);
  read_field(j, "alpha_v", apg.alpha_v);
  read_field(j, "alpha_vbar", apg.alpha_vbar);
  read_field(j, "zeta", apg.zeta);
  read_field(j, "eps", apg.eps);
  read_field(j, "max_inner", apg.max_inner);
  read_field(j, "max_outer", apg.max_outer);
  read_field(j, "penalty_tol", apg.penalty_tol);
  read_field(j, "j_est", apg.j_est);
  read_field(j, "lipschitz_pairs", apg.lipschitz_pairs);
  read_field(j, "lipschitz_safety", apg.lipschitz_safety);
  read_field(j, "init_jitter", apg.init_jitter);
  read_field(j, "polish_max_inner", apg.polish_max_inner);
  read_field(j, "round_threshold", apg.round_threshold);
  read_field(j, "round_keep_power", apg.round_keep_power);
  read_field(j, "restarts", apg.restarts);
  read_field(j, "seed", apg.seed);
}

void parse_experiment(const json& j, ExperimentConfig& cfg) {
  reject_unknown_keys(j, {"n_realizations", "re_sweep_m", "out_dir", "threads"},
                      "experiment");
  read_field(j, "n_realizations", cfg.n_realizations);
  if (j.contains("re_sweep_m"))
    cfg.re_sweep_m = j.at("re_sweep_m").get<std::vector<double>>();
  read_field(j, "out_dir", cfg.out_dir);
  read_field(j, "threads", cfg.threads);
}

std::vector<SchemeSpec> parse_schemes(const json& j) {
  std::vector<SchemeSpec> schemes;
  for (const auto& item : j) {
    reject_unknown_keys(item, {"kind", "ap_fraction"}, "schemes[]");
    SchemeSpec spec;
    spec.kind = scheme_kind_from_string(item.at("kind").get<std::string>());
    read_field(item, "ap_fraction", spec.ap_fraction);
    schemes.push_back(spec);
  }
  if (schemes.empty()) throw std::invalid_argument("schemes list must not be empty");
  return schemes;
}

}  // namespace

int RunConfig::resolve_threads() const {
  if (experiment.threads > 0) return experiment.threads;
  if (const char* env = std::getenv("CFSEC_THREADS")) {
    const int n = std::atoi(env);
    if (n > 0) return n;
  }
  return default_thread_count();
}

RunConfig run_config_from_json_text(const std::string& text) {
  json j;
  try {
    j = json::parse(text);
  } catch (const json::parse_error& e) {
    throw std::invalid_argument(std::string("config is not valid JSON: ") + e.what());
  }

  reject_unknown_keys(j, {"network", "schemes", "optimizer", "experiment"}, "top level");
  RunConfig cfg;
  if (j.contains("network")) parse_network(j.at("network"), cfg.network);
  if (j.contains("schemes")) cfg.schemes = parse_schemes(j.at("schemes"));
  if (j.contains("optimizer")) parse_optimizer(j.at("optimizer"), cfg.optimizer, cfg.penalties);
  if (j.contains("experiment")) parse_experiment(j.at("experiment"), cfg.experiment);

  cfg.network.validate();
  if (cfg.experiment.n_realizations < 1)
    throw std::invalid_argument("n_realizations must be positive");
  return cfg;
}

RunConfig load_run_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::invalid_argument("cannot open config file: " + path);
  std::ostringstream buffer;
  buffer << in.rdbuf();
  return run_config_from_json_text(buffer.str());
}

std::string run_config_to_json_text(const RunConfig& cfg) {
  json j;
  j["network"] = {{"num_aps", cfg.network.num_aps},
                  {"antennas_per_ap", cfg.network.antennas_per_ap},
                  {"num_users", cfg.network.num_users},
                  {"side_m", cfg.network.side_m},
                  {"eve_radius_m", cfg.network.eve_radius_m},
                  {"user_power_w", cfg.network.user_power_w},
                  {"eve_power_w", cfg.network.eve_power_w},
                  {"ap_power_w", cfg.network.ap_power_w},
                  {"noise_dbm", cfg.network.noise_dbm},
                  {"pilot_length", cfg.network.pilot_length},
                  {"qos_se", cfg.network.qos_se},
                  {"grouping_threshold", cfg.network.grouping_threshold},
                  {"seed", cfg.network.seed}};
  json schemes = json::array();
  for (const auto& s : cfg.schemes)
    schemes.push_back({{"kind", to_string(s.kind)}, {"ap_fraction", s.ap_fraction}});
  j["schemes"] = std::move(schemes);
  j["optimizer"] = {{"mu1", cfg.penalties.mu1},
                    {"mu2", cfg.penalties.mu2},
                    {"mu3", cfg.penalties.mu3},
                    {"rho0", cfg.penalties.rho_pen},
                    {"varsigma", cfg.penalties.varsigma},
                    {"alpha_v", cfg.optimizer.alpha_v},
                    {"alpha_vbar", cfg.optimizer.alpha_vbar},
                    {"zeta", cfg.optimizer.zeta},
                    {"eps", cfg.optimizer.eps},
                    {"max_inner", cfg.optimizer.max_inner},
                    {"max_outer", cfg.optimizer.max_outer},
                    {"penalty_tol", cfg.optimizer.penalty_tol},
                    {"j_est", cfg.optimizer.j_est},
                    {"lipschitz_pairs", cfg.optimizer.lipschitz_pairs},
                    {"lipschitz_safety", cfg.optimizer.lipschitz_safety},
                    {"init_jitter", cfg.optimizer.init_jitter},
                    {"polish_max_inner", cfg.optimizer.polish_max_inner},
                    {"round_threshold", cfg.optimizer.round_threshold},
                    {"round_keep_power", cfg.optimizer.round_keep_power},
                    {"restarts", cfg.optimizer.restarts},
                    {"seed", cfg.optimizer.seed}};
  j["experiment"] = {{"n_realizations", cfg.experiment.n_realizations},
                     {"re_sweep_m", cfg.experiment.re_sweep_m},
                     {"out_dir", cfg.experiment.out_dir},
                     {"threads", cfg.experiment.threads}};
  return j.dump(2);
}

void write_file_atomic(const std::string& path, const std::string& contents) {
  namespace fs = std::filesystem;
  const fs::path target(path);
  if (target.has_parent_path()) fs::create_directories(target.parent_path());
  const fs::path tmp = target.string() + ".tmp";
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw std::runtime_error("cannot write output file: " + tmp.string());
    out << contents;
    if (!out.flush()) throw std::runtime_error("failed writing: " + tmp.string());
  }
  fs::rename(tmp, target);
}

}  // namespace cfsec
