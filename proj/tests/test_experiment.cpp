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
#include <set>

#include "cfsec/experiment.hpp"
#include "cfsec/rng.hpp"

using namespace cfsec;

namespace {

NetworkConfig tiny_network(std::uint64_t seed) {
  NetworkConfig cfg;
  cfg.num_aps = 12;
  cfg.antennas_per_ap = 4;
  cfg.num_users = 3;
  cfg.seed = seed;
  return cfg;
}

ApgParams quick_solver() {
  ApgParams p;
  p.max_inner = 250;
  p.max_outer = 4;
  p.polish_max_inner = 100;
  return p;
}

}  // namespace

TEST_CASE("empirical CDF") {
  SUBCASE("all-equal samples jump straight to one") {
    const auto cdf = ecdf({0.0, 0.0, 0.0});
    CHECK(cdf.size() == 3);
    CHECK(cdf.back().first == 0.0);
    CHECK(cdf.back().second == doctest::Approx(1.0));
    CHECK(cdf.front().second == doctest::Approx(1.0 / 3.0));
  }
  SUBCASE("the p=0.5 crossing of {1,2,3} is 2") {
    CHECK(quantile({1.0, 2.0, 3.0}, 0.5) == 2.0);
    const auto cdf = ecdf({3.0, 1.0, 2.0});
    CHECK(cdf[0].first == 1.0);
    CHECK(cdf[0].second == doctest::Approx(1.0 / 3.0));
    CHECK(cdf[1].first == 2.0);
  }
  SUBCASE("merged halves equal the weighted merge of half-CDFs") {
    const std::vector<double> a{0.1, 0.7, 0.3, 0.9};
    const std::vector<double> b{0.2, 0.5};
    std::vector<double> merged = a;
    merged.insert(merged.end(), b.begin(), b.end());
    const auto cdf_m = ecdf(merged);
    auto eval = [](const std::vector<std::pair<double, double>>& cdf, double x) {
      double p = 0.0;
      for (const auto& [v, q] : cdf)
        if (v <= x) p = q;
      return p;
    };
    const auto cdf_a = ecdf(a);
    const auto cdf_b = ecdf(b);
    for (double x : merged) {
      const double lhs = eval(cdf_m, x);
      const double rhs = (4.0 * eval(cdf_a, x) + 2.0 * eval(cdf_b, x)) / 6.0;
      CHECK(lhs == doctest::Approx(rhs));
    }
  }
  SUBCASE("empty input is rejected") {
    CHECK_THROWS_AS(ecdf({}), std::invalid_argument);
  }
}

TEST_CASE("random association picks the configured AP count per user") {
  const Eigen::ArrayXXd a = random_association(20, 5, 0.2, 99);
  for (int k = 0; k < 5; ++k) CHECK(a.col(k).sum() == doctest::Approx(4.0));
  CHECK(((a == 0.0) || (a == 1.0)).all());

  // ceil and the at-least-one floor
  const Eigen::ArrayXXd b = random_association(7, 2, 0.2, 99);
  for (int k = 0; k < 2; ++k) CHECK(b.col(k).sum() == doctest::Approx(2.0));
  const Eigen::ArrayXXd c = random_association(7, 2, 0.01, 99);
  for (int k = 0; k < 2; ++k) CHECK(c.col(k).sum() == doctest::Approx(1.0));

  // deterministic in the seed
  const Eigen::ArrayXXd d = random_association(20, 5, 0.2, 99);
  CHECK((a == d).all());
  CHECK_THROWS_AS(random_association(20, 5, 0.0, 1), std::invalid_argument);
}

TEST_CASE("equal power allocation with full association is uniform") {
  const NetworkConfig cfg = tiny_network(3);
  const Scenario scn = generate_scenario(cfg);
  const ChannelStats stats = estimate_gains(scn);
  SchemeSpec spec;
  spec.kind = SchemeKind::kEpaRandom;
  spec.ap_fraction = 1.0;
  const SchemeOutcome oc =
      run_scheme(scn, stats, spec, quick_solver(), PenaltyWeights{}, 55);
  CHECK((oc.assoc == 1.0).all());
  const double expected = 1.0 / std::sqrt(static_cast<double>(cfg.num_users));
  CHECK((oc.theta - expected).abs().maxCoeff() < 1e-12);
  CHECK(power_feasible(oc.theta));
}

TEST_CASE("equal and optimized power share the same random association") {
  const NetworkConfig cfg = tiny_network(7);
  const Scenario scn = generate_scenario(cfg);
  const ChannelStats stats = estimate_gains(scn);
  SchemeSpec epa{SchemeKind::kEpaRandom, 0.25};
  SchemeSpec opa{SchemeKind::kOpaRandom, 0.25};
  const ApgParams solver = quick_solver();
  const SchemeOutcome a = run_scheme(scn, stats, epa, solver, PenaltyWeights{}, 123);
  const SchemeOutcome b = run_scheme(scn, stats, opa, solver, PenaltyWeights{}, 123);
  CHECK((a.assoc == b.assoc).all());
  // Optimized power keeps the support of the association.
  CHECK((b.theta * (1.0 - b.assoc) == 0.0).all());
  CHECK(power_feasible(b.theta));
  // And pushes the eavesdropper below the equal-power baseline.
  CHECK(b.eve_se <= a.eve_se + 1e-9);
}

TEST_CASE("joint scheme returns a binary association covering every user") {
  const NetworkConfig cfg = tiny_network(11);
  const Scenario scn = generate_scenario(cfg);
  const ChannelStats stats = estimate_gains(scn);
  SchemeSpec joint{SchemeKind::kJoint, 0.2};
  const SchemeOutcome oc =
      run_scheme(scn, stats, joint, quick_solver(), PenaltyWeights{}, 31);
  CHECK(((oc.assoc == 0.0) || (oc.assoc == 1.0)).all());
  for (int k = 0; k < cfg.num_users; ++k) CHECK(oc.assoc.col(k).sum() >= 1.0);
  CHECK(power_feasible(oc.theta));
  CHECK(oc.sse == doctest::Approx(std::max(
                      0.0, oc.user_se(stats.attacked_user) - oc.eve_se)));
}

TEST_CASE("campaign rows are paired, complete and deterministic") {
  const NetworkConfig cfg = tiny_network(17);
  const std::vector<SchemeSpec> schemes{{SchemeKind::kEpaRandom, 0.25},
                                        {SchemeKind::kOpaRandom, 0.25},
                                        {SchemeKind::kJoint, 0.25}};
  const ApgParams solver = quick_solver();
  const CampaignResult r1 = run_campaign(cfg, schemes, solver, PenaltyWeights{}, 6, 1);
  CHECK(r1.rows.size() == 18);

  for (int i = 0; i < 6; ++i) {
    const std::uint64_t seed = r1.rows[3 * i].seed;
    CHECK(r1.rows[3 * i + 1].seed == seed);  // common random numbers
    CHECK(r1.rows[3 * i + 2].seed == seed);
    CHECK(r1.rows[3 * i].realization == i);
  }

  const CampaignResult r2 = run_campaign(cfg, schemes, solver, PenaltyWeights{}, 6, 2);
  CHECK(r1.to_csv() == r2.to_csv());  // byte-identical across thread counts

  const auto sse = r1.sse_samples(SchemeKind::kJoint);
  CHECK(sse.size() == 6);
  const std::string summary = r1.summary_json(cfg);
  CHECK(summary.find("\"joint\"") != std::string::npos);
  CHECK(summary.find("qos_violation_fraction") != std::string::npos);
}

TEST_CASE("radius sweep shapes, pairing and determinism") {
  const NetworkConfig cfg = tiny_network(23);
  const std::vector<SchemeSpec> schemes{{SchemeKind::kEpaRandom, 0.25},
                                        {SchemeKind::kJoint, 0.25}};
  const std::vector<double> radii{50.0, 150.0};
  const ApgParams solver = quick_solver();
  const SweepResult s1 = sweep_re(cfg, schemes, solver, PenaltyWeights{}, radii, 3, 2);
  CHECK(s1.points.size() == 4);  // radius-major, scheme-minor
  CHECK(s1.points[0].re_m == 50.0);
  CHECK(s1.points[0].scheme == SchemeKind::kEpaRandom);
  CHECK(s1.points[3].re_m == 150.0);
  CHECK(s1.points[3].scheme == SchemeKind::kJoint);
  for (const auto& p : s1.points) CHECK(p.n == 3);

  const SweepResult s2 = sweep_re(cfg, schemes, solver, PenaltyWeights{}, radii, 3, 1);
  CHECK(s1.to_csv() == s2.to_csv());
  CHECK_THROWS_AS(sweep_re(cfg, schemes, solver, PenaltyWeights{}, {-5.0}, 3, 1),
                  std::invalid_argument);
}

TEST_CASE("scheme names round-trip") {
  for (SchemeKind kind :
       {SchemeKind::kEpaRandom, SchemeKind::kOpaRandom, SchemeKind::kJoint})
    CHECK(scheme_kind_from_string(to_string(kind)) == kind);
  CHECK_THROWS_AS(scheme_kind_from_string("bogus"), std::invalid_argument);
}
