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

#include "cfsec/experiment.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <stdexcept>

#include <json.hpp>

#include "cfsec/parallel.hpp"
#include "cfsec/rng.hpp"

namespace cfsec {

const char* to_string(SchemeKind kind) {
  switch (kind) {
    case SchemeKind::kEpaRandom: return "epa_random";
    case SchemeKind::kOpaRandom: return "opa_random";
    case SchemeKind::kJoint: return "joint";
  }
  return "unknown";
}

SchemeKind scheme_kind_from_string(const std::string& name) {
  if (name == "epa_random") return SchemeKind::kEpaRandom;
  if (name == "opa_random") return SchemeKind::kOpaRandom;
  if (name == "joint") return SchemeKind::kJoint;
  throw std::invalid_argument("unknown scheme kind: " + name);
}

Eigen::ArrayXXd random_association(int num_aps, int num_users, double fraction,
                                   std::uint64_t seed) {
  if (fraction <= 0.0 || fraction > 1.0)
    throw std::invalid_argument("ap_fraction must lie in (0, 1]");
  const int per_user = std::max(
      1, static_cast<int>(std::ceil(fraction * static_cast<double>(num_aps))));
  std::mt19937_64 rng = make_engine(seed, stream::kRandomSelection);

  Eigen::ArrayXXd assoc = Eigen::ArrayXXd::Zero(num_aps, num_users);
  std::vector<int> pool(num_aps);
  for (int k = 0; k < num_users; ++k) {
    std::iota(pool.begin(), pool.end(), 0);
    // Partial Fisher-Yates: the first per_user entries are a uniform sample
    // without replacement.
    for (int i = 0; i < per_user; ++i) {
      std::uniform_int_distribution<int> pick(i, num_aps - 1);
      std::swap(pool[i], pool[pick(rng)]);
      assoc(pool[i], k) = 1.0;
    }
  }
  return assoc;
}

namespace {

PowerMatrix equal_power_on_support(const Eigen::ArrayXXd& assoc) {
  const Eigen::ArrayXd served = assoc.rowwise().sum();
  PowerMatrix theta = assoc;
  for (Eigen::Index l = 0; l < assoc.rows(); ++l) {
    if (served(l) > 0.0) theta.row(l) /= std::sqrt(served(l));
  }
  return theta;
}

void fill_rates(const ChannelStats& stats, SchemeOutcome& out) {
  const int K = stats.num_users;
  out.user_se.resize(K);
  for (int k = 0; k < K; ++k) out.user_se(k) = se_user(stats, out.theta, k);
  out.eve_se = eve_rate(stats, out.theta);
  out.sse = std::max(0.0, out.user_se(stats.attacked_user) - out.eve_se);
  out.min_user_se = out.user_se.minCoeff();
  out.qos_ok = out.min_user_se >= stats.qos_se - 0.01;
}

}  // namespace

SchemeOutcome run_scheme(const Scenario& scn, const ChannelStats& stats,
                         const SchemeSpec& spec, const ApgParams& apg,
                         const PenaltyWeights& weights,
                         std::uint64_t realization_seed) {
  SchemeOutcome out;
  ApgParams solver_params = apg;
  solver_params.seed = realization_seed;

  switch (spec.kind) {
    case SchemeKind::kEpaRandom: {
      out.assoc = random_association(scn.num_aps, scn.num_users, spec.ap_fraction,
                                     realization_seed);
      out.theta = equal_power_on_support(out.assoc);
      break;
    }
    case SchemeKind::kOpaRandom: {
      out.assoc = random_association(scn.num_aps, scn.num_users, spec.ap_fraction,
                                     realization_seed);
      SolveMode mode;
      mode.optimize_z = false;
      mode.mask = out.assoc;
      DecisionVars v0;
      v0.theta = equal_power_on_support(out.assoc);
      v0.z = out.assoc.sqrt();
      const SolveResult res = apg_solve(stats, solver_params, weights, v0, mode);
      out.theta = res.v.theta;
      out.solver_feasible = res.penalty_feasible;
      out.solver_iterations = res.total_inner_iterations;
      break;
    }
    case SchemeKind::kJoint: {
      const JointSolution sol = solve_joint(stats, solver_params, weights);
      out.theta = sol.rounded.theta;
      out.assoc = sol.rounded.assoc;
      out.z_round_error = sol.z_round_error;
      out.solver_feasible = sol.penalty_feasible;
      out.solver_iterations = sol.total_inner_iterations;
      break;
    }
  }

  fill_rates(stats, out);
  return out;
}

std::vector<std::pair<double, double>> ecdf(const std::vector<double>& samples) {
  if (samples.empty()) throw std::invalid_argument("ecdf needs at least one sample");
  std::vector<double> sorted = samples;
  std::sort(sorted.begin(), sorted.end());
  std::vector<std::pair<double, double>> out;
  out.reserve(sorted.size());
  const double n = static_cast<double>(sorted.size());
  for (std::size_t i = 0; i < sorted.size(); ++i)
    out.emplace_back(sorted[i], static_cast<double>(i + 1) / n);
  return out;
}

double quantile(std::vector<double> samples, double p) {
  if (samples.empty()) throw std::invalid_argument("quantile needs samples");
  if (p < 0.0 || p > 1.0) throw std::invalid_argument("quantile level in [0,1]");
  std::sort(samples.begin(), samples.end());
  const std::size_t n = samples.size();
  const std::size_t idx = std::min(
      n - 1, static_cast<std::size_t>(
                 std::max(1.0, std::ceil(p * static_cast<double>(n)))) -
                 1);
  return samples[idx];
}

namespace {

RealizationRow to_row(int index, std::uint64_t seed, SchemeKind kind,
                      const ChannelStats& stats, const SchemeOutcome& oc) {
  RealizationRow row;
  row.realization = index;
  row.seed = seed;
  row.scheme = kind;
  row.sse = oc.sse;
  row.user1_se = oc.user_se(stats.attacked_user);
  row.eve_se = oc.eve_se;
  row.min_user_se = oc.min_user_se;
  row.qos_ok = oc.qos_ok;
  row.solver_feasible = oc.solver_feasible;
  row.solver_iterations = oc.solver_iterations;
  row.z_round_error = oc.z_round_error;
  return row;
}

void append_row_csv(std::ostringstream& os, const RealizationRow& r) {
  char buf[384];
  std::snprintf(buf, sizeof(buf),
                "%d,%s,%llu,%.9g,%.9g,%.9g,%.9g,%d,%d,%d,%.9g\n", r.realization,
                to_string(r.scheme), static_cast<unsigned long long>(r.seed),
                r.sse, r.user1_se, r.eve_se, r.min_user_se, r.qos_ok ? 1 : 0,
                r.solver_feasible ? 1 : 0, r.solver_iterations, r.z_round_error);
  os << buf;
}

double mean_of(const std::vector<double>& xs) {
  return std::accumulate(xs.begin(), xs.end(), 0.0) / static_cast<double>(xs.size());
}

double stderr_of(const std::vector<double>& xs) {
  if (xs.size() < 2) return 0.0;
  const double m = mean_of(xs);
  double ss = 0.0;
  for (double x : xs) ss += (x - m) * (x - m);
  return std::sqrt(ss / (static_cast<double>(xs.size() - 1) * static_cast<double>(xs.size())));
}

}  // namespace

std::vector<double> CampaignResult::sse_samples(SchemeKind kind) const {
  std::vector<double> out;
  for (const auto& r : rows)
    if (r.scheme == kind) out.push_back(r.sse);
  return out;
}

std::string CampaignResult::to_csv() const {
  std::ostringstream os;
  os << "realization,scheme,seed,sse,user1_se,eve_se,min_user_se,qos_ok,"
        "solver_feasible,solver_iterations,z_round_error\n";
  for (const auto& r : rows) append_row_csv(os, r);
  return os.str();
}

std::string CampaignResult::summary_json(const NetworkConfig& cfg) const {
  nlohmann::json j;
  j["network"] = {{"num_aps", cfg.num_aps},
                  {"antennas_per_ap", cfg.antennas_per_ap},
                  {"num_users", cfg.num_users},
                  {"eve_radius_m", cfg.eve_radius_m},
                  {"qos_se", cfg.qos_se},
                  {"seed", cfg.seed}};
  nlohmann::json per_scheme;
  std::vector<double> medians;
  std::vector<std::string> names;
  for (const auto& spec : schemes) {
    const auto sse = sse_samples(spec.kind);
    if (sse.empty()) continue;
    int qos_bad = 0, infeasible = 0;
    for (const auto& r : rows) {
      if (r.scheme != spec.kind) continue;
      if (!r.qos_ok) ++qos_bad;
      if (!r.solver_feasible) ++infeasible;
    }
    const double n = static_cast<double>(sse.size());
    nlohmann::json s;
    s["n"] = sse.size();
    s["median_sse"] = quantile(sse, 0.5);
    s["mean_sse"] = mean_of(sse);
    s["stderr_sse"] = stderr_of(sse);
    s["qos_violation_fraction"] = qos_bad / n;
    s["solver_infeasible_fraction"] = infeasible / n;
    per_scheme[to_string(spec.kind)] = std::move(s);
    medians.push_back(quantile(sse, 0.5));
    names.push_back(to_string(spec.kind));
  }
  j["schemes"] = std::move(per_scheme);

  nlohmann::json gains;
  for (std::size_t a = 0; a < names.size(); ++a) {
    for (std::size_t b = 0; b < names.size(); ++b) {
      if (a == b) continue;
      if (medians[b] > 0.0)
        gains[names[a] + "_vs_" + names[b] + "_median_pct"] =
            100.0 * (medians[a] - medians[b]) / medians[b];
    }
  }
  j["gains"] = std::move(gains);
  return j.dump(2);
}

CampaignResult run_campaign(const NetworkConfig& base,
                            const std::vector<SchemeSpec>& schemes,
                            const ApgParams& apg, const PenaltyWeights& weights,
                            int n_realizations, int threads) {
  if (n_realizations < 1)
    throw std::invalid_argument("n_realizations must be positive");
  base.validate();

  CampaignResult result;
  result.schemes = schemes;
  result.rows.resize(static_cast<std::size_t>(n_realizations) * schemes.size());

  parallel_for(n_realizations, threads, [&](int i) {
    NetworkConfig cfg = base;
    cfg.seed = derive_seed(base.seed, stream::kRealizationBase + i);
    const Scenario scn = generate_scenario(cfg);
    const ChannelStats stats = estimate_gains(scn);
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      const SchemeOutcome oc =
          run_scheme(scn, stats, schemes[s], apg, weights, cfg.seed);
      result.rows[i * schemes.size() + s] =
          to_row(i, cfg.seed, schemes[s].kind, stats, oc);
    }
  });
  return result;
}

std::string SweepResult::to_csv() const {
  std::ostringstream os;
  os << "re_m,scheme,n,mean_sse,stderr_sse,median_sse\n";
  char buf[256];
  for (const auto& p : points) {
    std::snprintf(buf, sizeof(buf), "%.9g,%s,%d,%.9g,%.9g,%.9g\n", p.re_m,
                  to_string(p.scheme), p.n, p.mean_sse, p.stderr_sse, p.median_sse);
    os << buf;
  }
  return os.str();
}

std::string SweepResult::summary_json(const NetworkConfig& cfg) const {
  nlohmann::json j;
  j["network"] = {{"num_aps", cfg.num_aps},
                  {"antennas_per_ap", cfg.antennas_per_ap},
                  {"num_users", cfg.num_users},
                  {"qos_se", cfg.qos_se},
                  {"seed", cfg.seed}};
  nlohmann::json pts = nlohmann::json::array();
  for (const auto& p : points) {
    pts.push_back({{"re_m", p.re_m},
                   {"scheme", to_string(p.scheme)},
                   {"n", p.n},
                   {"mean_sse", p.mean_sse},
                   {"stderr_sse", p.stderr_sse},
                   {"median_sse", p.median_sse}});
  }
  j["points"] = std::move(pts);
  return j.dump(2);
}

SweepResult sweep_re(const NetworkConfig& base, const std::vector<SchemeSpec>& schemes,
                     const ApgParams& apg, const PenaltyWeights& weights,
                     const std::vector<double>& re_list_m, int n_realizations,
                     int threads) {
  for (double re : re_list_m)
    if (re <= 0.0) throw std::invalid_argument("sweep radii must be positive");

  const int n_re = static_cast<int>(re_list_m.size());

  // One flat task list over (radius, realization); each task owns one
  // realization of every scheme.
  std::vector<std::vector<RealizationRow>> rows(
      static_cast<std::size_t>(n_re) * n_realizations);
  parallel_for(n_re * n_realizations, threads, [&](int task) {
    const int re_idx = task / n_realizations;
    const int i = task % n_realizations;
    NetworkConfig cfg = base;
    cfg.eve_radius_m = re_list_m[re_idx];
    const std::uint64_t radius_master =
        derive_seed(base.seed, 7000 + static_cast<std::uint64_t>(re_idx));
    cfg.seed = derive_seed(radius_master, stream::kRealizationBase + i);
    const Scenario scn = generate_scenario(cfg);
    const ChannelStats stats = estimate_gains(scn);
    std::vector<RealizationRow>& slot = rows[task];
    for (const auto& spec : schemes) {
      const SchemeOutcome oc = run_scheme(scn, stats, spec, apg, weights, cfg.seed);
      slot.push_back(to_row(i, cfg.seed, spec.kind, stats, oc));
    }
  });

  SweepResult out;
  for (int re_idx = 0; re_idx < n_re; ++re_idx) {
    for (std::size_t s = 0; s < schemes.size(); ++s) {
      std::vector<double> sse;
      sse.reserve(n_realizations);
      for (int i = 0; i < n_realizations; ++i)
        sse.push_back(rows[re_idx * n_realizations + i][s].sse);
      SweepPoint p;
      p.re_m = re_list_m[re_idx];
      p.scheme = schemes[s].kind;
      p.n = n_realizations;
      p.mean_sse = mean_of(sse);
      p.stderr_sse = stderr_of(sse);
      p.median_sse = quantile(sse, 0.5);
      out.points.push_back(p);
    }
  }
  return out;
}

}  // namespace cfsec
