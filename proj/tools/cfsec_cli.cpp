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

#include <cstdio>
#include <filesystem>
#include <iostream>
#include <string>
#include <vector>

#include <CLI11.hpp>

#include "cfsec/config.hpp"
#include "cfsec/experiment.hpp"
#include "cfsec/rng.hpp"
#include "cfsec/validation.hpp"

namespace {

using namespace cfsec;

struct Overrides {
  std::string out_dir;
  int threads = 0;
  int realizations = 0;
  std::uint64_t seed = 0;
  bool seed_set = false;
};

void apply_overrides(RunConfig& cfg, const Overrides& ov) {
  if (!ov.out_dir.empty()) cfg.experiment.out_dir = ov.out_dir;
  if (ov.threads > 0) cfg.experiment.threads = ov.threads;
  if (ov.realizations > 0) cfg.experiment.n_realizations = ov.realizations;
  if (ov.seed_set) cfg.network.seed = ov.seed;
}

void print_scheme_table(const CampaignResult& result) {
  std::printf("%-12s %8s %12s %12s %10s\n", "scheme", "n", "median_sse",
              "mean_sse", "qos_viol");
  std::vector<std::pair<std::string, double>> medians;
  for (const auto& spec : result.schemes) {
    const auto sse = result.sse_samples(spec.kind);
    if (sse.empty()) continue;
    int qos_bad = 0;
    for (const auto& r : result.rows)
      if (r.scheme == spec.kind && !r.qos_ok) ++qos_bad;
    const double med = quantile(sse, 0.5);
    medians.emplace_back(to_string(spec.kind), med);
    double mean = 0.0;
    for (double v : sse) mean += v;
    mean /= static_cast<double>(sse.size());
    std::printf("%-12s %8zu %12.4f %12.4f %9.1f%%\n", to_string(spec.kind),
                sse.size(), med, mean,
                100.0 * qos_bad / static_cast<double>(sse.size()));
  }
  for (std::size_t a = 0; a < medians.size(); ++a) {
    for (std::size_t b = 0; b < medians.size(); ++b) {
      if (a == b || medians[b].second <= 0.0) continue;
      std::printf("gain %s vs %s: %+.1f%%\n", medians[a].first.c_str(),
                  medians[b].first.c_str(),
                  100.0 * (medians[a].second - medians[b].second) / medians[b].second);
    }
  }
}

int cmd_run(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply_overrides(cfg, ov);
  const int threads = cfg.resolve_threads();

  const CampaignResult result =
      run_campaign(cfg.network, cfg.schemes, cfg.optimizer, cfg.penalties,
                   cfg.experiment.n_realizations, threads);

  namespace fs = std::filesystem;
  const fs::path out(cfg.experiment.out_dir);
  write_file_atomic((out / "sse_samples.csv").string(), result.to_csv());
  write_file_atomic((out / "summary.json").string(), result.summary_json(cfg.network));

  std::printf("campaign: %d realizations, %zu schemes, %d threads\n",
              cfg.experiment.n_realizations, cfg.schemes.size(), threads);
  print_scheme_table(result);
  std::printf("wrote %s and %s\n", (out / "sse_samples.csv").c_str(),
              (out / "summary.json").c_str());
  return 0;
}

int cmd_sweep(const std::string& config_path, const Overrides& ov) {
  RunConfig cfg = load_run_config(config_path);
  apply_overrides(cfg, ov);
  const int threads = cfg.resolve_threads();

  const SweepResult result =
      sweep_re(cfg.network, cfg.schemes, cfg.optimizer, cfg.penalties,
               cfg.experiment.re_sweep_m, cfg.experiment.n_realizations, threads);

  namespace fs = std::filesystem;
  const fs::path out(cfg.experiment.out_dir);
  write_file_atomic((out / "sweep.csv").string(), result.to_csv());
  write_file_atomic((out / "sweep_summary.json").string(),
                    result.summary_json(cfg.network));

  std::printf("%-8s %-12s %12s %12s\n", "re_m", "scheme", "mean_sse", "stderr");
  for (const auto& p : result.points)
    std::printf("%-8.0f %-12s %12.4f %12.4f\n", p.re_m, to_string(p.scheme),
                p.mean_sse, p.stderr_sse);
  std::printf("wrote %s and %s\n", (out / "sweep.csv").c_str(),
              (out / "sweep_summary.json").c_str());
  return 0;
}

int cmd_trace(const std::string& config_path, const Overrides& ov, int realization) {
  RunConfig cfg = load_run_config(config_path);
  apply_overrides(cfg, ov);

  NetworkConfig net = cfg.network;
  net.seed = derive_seed(cfg.network.seed, stream::kRealizationBase + realization);
  const Scenario scn = generate_scenario(net);
  const ChannelStats stats = estimate_gains(scn);

  ApgParams params = cfg.optimizer;
  params.seed = net.seed;
  const DecisionVars v0 = initial_point(stats, params);
  SolveResult res = apg_solve(stats, params, cfg.penalties, v0);
  const RoundedSolution rounded =
      round_and_polish(res.v, stats, params, res.final_weights);
  res.trace.rounded_eve_se = rounded.eve_se;

  namespace fs = std::filesystem;
  const fs::path out(cfg.experiment.out_dir);
  write_file_atomic((out / "trace.csv").string(), res.trace.to_csv());

  std::printf("realization %d: %d inner iterations, penalty %s\n", realization,
              res.total_inner_iterations,
              res.penalty_feasible ? "feasible" : "NOT feasible");
  std::printf("relaxed eve SE %.6g, rounded+polished eve SE %.6g\n",
              res.trace.relaxed_eve_se, res.trace.rounded_eve_se);
  std::printf("secrecy SE %.6g (min user SE %.6g, qos %s)\n",
              std::max(0.0, se_user(stats, rounded.theta, stats.attacked_user) -
                                rounded.eve_se),
              rounded.min_user_se, rounded.qos_ok ? "ok" : "VIOLATED");
  std::printf("wrote %s\n", (out / "trace.csv").c_str());
  return 0;
}

int cmd_validate(std::uint64_t seed, int draws, const std::vector<std::string>& checks,
                 int threads) {
  auto wanted = [&](const std::string& name) {
    if (checks.empty()) return true;
    for (const auto& c : checks)
      if (c == name || c == "all") return true;
    return false;
  };

  std::vector<CheckReport> reports;
  if (wanted("gradient")) reports.push_back(check_gradient(seed));
  if (wanted("projection")) reports.push_back(check_projection(seed));
  if (wanted("precoder")) {
    auto more = check_precoders(seed, std::min(draws, 20000));
    reports.insert(reports.end(), more.begin(), more.end());
  }
  if (wanted("sinr")) {
    auto more = check_sinr_vs_montecarlo(seed, draws, 5, threads);
    reports.insert(reports.end(), more.begin(), more.end());
  }

  bool any_fail = false;
  for (const auto& rep : reports) {
    if (rep.status == CheckStatus::kFail) any_fail = true;
    std::printf("[%-12s] %-42s measured %.3e (tolerance %.3e) %s\n",
                to_string(rep.status), rep.name.c_str(), rep.measured,
                rep.tolerance, rep.detail.c_str());
  }
  if (reports.empty()) {
    std::fprintf(stderr, "no checks selected\n");
    return 2;
  }
  return any_fail ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"secure cell-free massive MIMO downlink simulator and optimizer"};
  app.require_subcommand(1);

  std::string config_path;
  Overrides ov;
  int realization = 0;

  auto add_common = [&](CLI::App* cmd, bool need_config) {
    if (need_config)
      cmd->add_option("--config", config_path, "JSON config file")->required();
    cmd->add_option("--out", ov.out_dir, "output directory override");
    cmd->add_option("--threads", ov.threads, "worker thread count override");
  };

  CLI::App* run = app.add_subcommand("run", "run the CDF campaign at fixed radius");
  add_common(run, true);
  run->add_option("--realizations", ov.realizations, "realization count override");
  run->add_option("--seed", ov.seed, "master seed override")
      ->each([&](const std::string&) { ov.seed_set = true; });

  CLI::App* sweep = app.add_subcommand("sweep", "average SSE vs eavesdropper radius");
  add_common(sweep, true);
  sweep->add_option("--realizations", ov.realizations, "realization count override");
  sweep->add_option("--seed", ov.seed, "master seed override")
      ->each([&](const std::string&) { ov.seed_set = true; });

  CLI::App* trace = app.add_subcommand("trace", "dump solver convergence for one realization");
  add_common(trace, true);
  trace->add_option("--realization", realization, "realization index");

  std::uint64_t validate_seed = 1;
  int validate_draws = 10000;
  int validate_threads = 0;
  std::vector<std::string> validate_checks;
  CLI::App* validate = app.add_subcommand(
      "validate", "run the oracle suite (closed forms, gradient, projection)");
  validate->add_option("--seed", validate_seed, "oracle seed");
  validate->add_option("--draws", validate_draws, "Monte-Carlo draw count");
  validate->add_option("--threads", validate_threads, "worker thread count");
  validate->add_option("--check", validate_checks,
                       "subset of checks: gradient projection precoder sinr all");

  CLI11_PARSE(app, argc, argv);

  try {
    if (run->parsed()) return cmd_run(config_path, ov);
    if (sweep->parsed()) return cmd_sweep(config_path, ov);
    if (trace->parsed()) return cmd_trace(config_path, ov, realization);
    if (validate->parsed()) {
      int threads = validate_threads;
      if (threads <= 0) {
        RunConfig defaults;
        threads = defaults.resolve_threads();
      }
      return cmd_validate(validate_seed, validate_draws, validate_checks, threads);
    }
  } catch (const std::exception& e) {
    std::fprintf(stderr, "error: %s\n", e.what());
    return 1;
  }
  return 0;
}
