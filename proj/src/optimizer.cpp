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

#include "cfsec/optimizer.hpp"

#include <cmath>
#include <limits>
#include <sstream>
#include <stdexcept>

#include "cfsec/rng.hpp"

namespace cfsec {

namespace {

constexpr double kInvLn2 = 1.4426950408889634;  // 1/ln(2)

// Shared per-point evaluation of the rate model. Everything downstream
// (objective, penalties, gradient, trace) reads from here so the closed forms
// are computed exactly once per point.
struct RateEval {
  Eigen::ArrayXd amp;        // K coherent amplitudes
  Eigen::ArrayXd u;          // K signal powers
  Eigen::ArrayXd v;          // K interference-plus-noise powers
  Eigen::ArrayXd rate;       // K achievable SEs
  Eigen::ArrayXd row_power;  // L per-AP transmit powers
  double amp_e = 0.0, u_e = 0.0, v_e = 0.0, rate_e = 0.0;
};

RateEval evaluate_rates(const Eigen::ArrayXXd& theta, const ChannelStats& st) {
  RateEval ev;
  ev.row_power = theta.square().rowwise().sum();
  ev.amp = (st.coh * theta).colwise().sum().transpose();
  ev.u = ev.amp.square();
  ev.v = ((st.leak.colwise() * ev.row_power).colwise().sum() + 1.0).transpose();
  ev.rate = (1.0 + ev.u / ev.v).log() * kInvLn2;

  const int att = st.attacked_user;
  const Eigen::ArrayXd theta_att = theta.col(att);
  ev.amp_e = (st.coh_eve * theta_att).sum();
  ev.u_e = ev.amp_e * ev.amp_e + (st.leak_eve * theta_att.square()).sum();
  ev.v_e = (st.leak_eve * (ev.row_power - theta_att.square())).sum() + 1.0;
  ev.rate_e = std::log2(1.0 + ev.u_e / ev.v_e);
  return ev;
}

PenaltyTerms penalty_terms(const DecisionVars& v, const ChannelStats& st,
                           const SolveMode& mode, const RateEval& ev) {
  PenaltyTerms p;
  p.qos = (st.qos_se - ev.rate).max(0.0).square().sum();
  if (mode.optimize_z) {
    const Eigen::ArrayXXd z2 = v.z.square();
    p.binarity = (z2 - z2.square()).sum();
    const Eigen::ArrayXd cover = (1.0 - z2.colwise().sum().transpose()).max(0.0);
    p.assoc = cover.square().sum() +
              (v.theta.square() - z2).max(0.0).square().sum();
  }
  return p;
}

double combine(const PenaltyTerms& p, const PenaltyWeights& w, double rate_e) {
  return rate_e + w.rho_pen * (w.mu1 * p.qos + w.mu2 * p.binarity + w.mu3 * p.assoc);
}

struct ObjectiveEval {
  double f = 0.0;
  double rate_e = 0.0;
  PenaltyTerms pen;
};

ObjectiveEval evaluate_objective(const DecisionVars& v, const ChannelStats& st,
                                 const PenaltyWeights& w, const SolveMode& mode) {
  const RateEval ev = evaluate_rates(v.theta, st);
  ObjectiveEval out;
  out.pen = penalty_terms(v, st, mode, ev);
  out.rate_e = ev.rate_e;
  out.f = combine(out.pen, w, ev.rate_e);
  return out;
}

double stacked_dist2(const DecisionVars& a, const DecisionVars& b) {
  return (a.theta - b.theta).square().sum() + (a.z - b.z).square().sum();
}

}  // namespace

PenaltyTerms penalties(const DecisionVars& v, const ChannelStats& stats,
                       const SolveMode& mode) {
  return penalty_terms(v, stats, mode, evaluate_rates(v.theta, stats));
}

double objective(const DecisionVars& v, const ChannelStats& stats,
                 const PenaltyWeights& w, const SolveMode& mode) {
  return evaluate_objective(v, stats, w, mode).f;
}

DecisionVars gradient(const DecisionVars& v, const ChannelStats& stats,
                      const PenaltyWeights& w, const SolveMode& mode) {
  const int L = stats.num_aps;
  const int K = stats.num_users;
  const int att = stats.attacked_user;
  const RateEval ev = evaluate_rates(v.theta, stats);

  DecisionVars g;
  g.theta = Eigen::ArrayXXd::Zero(L, K);
  g.z = Eigen::ArrayXXd::Zero(L, K);

  // Eavesdropper rate: only theta enters. The attacked user's column moves
  // both the coherent amplitude and the self-leakage; every other column
  // only adds interference at Eve.
  const double inv_uv_e = 1.0 / (ev.u_e + ev.v_e);
  const double inv_v_e = 1.0 / ev.v_e;
  for (int k = 0; k < K; ++k) {
    if (k == att) {
      g.theta.col(k) += kInvLn2 * inv_uv_e *
                        (2.0 * ev.amp_e * stats.coh_eve +
                         2.0 * stats.leak_eve * v.theta.col(k));
    } else {
      g.theta.col(k) += kInvLn2 * (inv_uv_e - inv_v_e) * 2.0 *
                        (stats.leak_eve * v.theta.col(k));
    }
  }

  // QoS shortfall penalty. The cross-user interference part collapses to one
  // per-AP coefficient, keeping the whole gradient O(LK).
  const Eigen::ArrayXd shortfall = (stats.qos_se - ev.rate).max(0.0);
  if ((shortfall > 0.0).any()) {
    const Eigen::ArrayXd kcoef =
        shortfall * (1.0 / (ev.u + ev.v) - 1.0 / ev.v);
    const Eigen::ArrayXd apcoef =
        (stats.leak.rowwise() * kcoef.transpose()).rowwise().sum();
    Eigen::ArrayXXd dqos = (v.theta.colwise() * apcoef);
    for (int k = 0; k < K; ++k) {
      dqos.col(k) += shortfall(k) * ev.amp(k) / (ev.u(k) + ev.v(k)) * stats.coh.col(k);
    }
    g.theta += w.rho_pen * w.mu1 * (-4.0 * kInvLn2) * dqos;
  }

  if (mode.optimize_z) {
    const Eigen::ArrayXXd z2 = v.z.square();
    const Eigen::ArrayXXd coupling = (v.theta.square() - z2).max(0.0);
    g.theta += w.rho_pen * w.mu3 * 4.0 * coupling * v.theta;

    const Eigen::ArrayXd cover = (1.0 - z2.colwise().sum().transpose()).max(0.0);
    g.z = w.rho_pen *
          (w.mu2 * (2.0 * v.z - 4.0 * v.z.cube()) -
           w.mu3 * 4.0 * coupling * v.z -
           w.mu3 * 4.0 * (v.z.rowwise() * cover.transpose()));
  }

  if (mode.mask) g.theta *= *mode.mask;
  return g;
}

Eigen::ArrayXXd project_theta(const Eigen::ArrayXXd& raw,
                              const std::optional<Eigen::ArrayXXd>& mask) {
  Eigen::ArrayXXd th = raw.max(0.0);
  if (mask) th *= *mask;
  // Clipping to the orthant then radially scaling is the exact projection
  // onto the intersection of the orthant (a cone) and the unit ball.
  for (Eigen::Index l = 0; l < th.rows(); ++l) {
    const double norm = std::sqrt(th.row(l).square().sum());
    if (norm > 1.0) th.row(l) /= norm;
  }
  return th;
}

DecisionVars project(const DecisionVars& raw, const SolveMode& mode) {
  DecisionVars out;
  out.theta = project_theta(raw.theta, mode.mask);
  out.z = mode.optimize_z ? raw.z.min(1.0).max(0.0).eval() : raw.z;
  return out;
}

double estimate_lipschitz(const ChannelStats& stats, const PenaltyWeights& w,
                          const SolveMode& mode, const ApgParams& params,
                          const DecisionVars& center, std::uint64_t seed) {
  const int L = stats.num_aps;
  const int K = stats.num_users;
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  std::uniform_real_distribution<double> u01(0.0, 1.0);

  auto random_point = [&](double scale, double power_scale) {
    DecisionVars p = center;
    p.theta *= power_scale;
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) p.theta(l, k) += scale * gauss(rng);
    if (mode.optimize_z)
      for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) p.z(l, k) += scale * gauss(rng);
    return project(p, mode);
  };

  double max_ratio = 0.0;
  const int pairs = std::max(1, params.lipschitz_pairs);
  for (int i = 0; i < pairs; ++i) {
    // Mix of local and wide secants around the current iterate. Half the
    // pairs damp the transmit power so the curvature of the rate-shortfall
    // penalty, inactive at a well-served center, is sampled as well.
    const double scale = (i % 2 == 0) ? 0.02 : 0.2 + 0.8 * u01(rng);
    const double power_scale = (i % 4 < 2) ? 1.0 : u01(rng);
    const DecisionVars a = random_point(scale, power_scale);
    DecisionVars b = a;
    const double step = 0.01 * scale;
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) b.theta(l, k) += step * gauss(rng);
    if (mode.optimize_z)
      for (int l = 0; l < L; ++l)
        for (int k = 0; k < K; ++k) b.z(l, k) += step * gauss(rng);
    b = project(b, mode);

    const double dist2 = stacked_dist2(a, b);
    if (dist2 < 1e-18) continue;
    const DecisionVars ga = gradient(a, stats, w, mode);
    const DecisionVars gb = gradient(b, stats, w, mode);
    const double ratio = std::sqrt(stacked_dist2(ga, gb) / dist2);
    max_ratio = std::max(max_ratio, ratio);
  }
  if (max_ratio <= 0.0) max_ratio = 1.0;
  return params.lipschitz_safety * max_ratio;
}

DecisionVars initial_point(const ChannelStats& stats, const ApgParams& params,
                           const SolveMode& mode) {
  const int L = stats.num_aps;
  const int K = stats.num_users;
  DecisionVars v;
  v.theta = Eigen::ArrayXXd::Constant(L, K, 1.0 / std::sqrt(static_cast<double>(K)));
  v.z = Eigen::ArrayXXd::Constant(L, K, 1.0 / std::sqrt(2.0));
  if (mode.optimize_z && params.init_jitter > 0.0) {
    std::mt19937_64 rng = make_engine(params.seed, stream::kSolverInit);
    std::uniform_real_distribution<double> jit(-params.init_jitter, params.init_jitter);
    for (int l = 0; l < L; ++l)
      for (int k = 0; k < K; ++k) v.z(l, k) += jit(rng);
  }
  return project(v, mode);
}

const char* to_string(StepKind kind) {
  switch (kind) {
    case StepKind::kAccepted: return "accepted";
    case StepKind::kCorrectedTilde: return "corrected_tilde";
    case StepKind::kCorrectedHat: return "corrected_hat";
  }
  return "unknown";
}

std::string SolverTrace::to_csv() const {
  std::ostringstream os;
  os << "outer,inner,rho_pen,f,eve_se,psi1,psi2,psi3,c_before,step\n";
  char buf[256];
  for (const auto& r : rows) {
    std::snprintf(buf, sizeof(buf), "%d,%d,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%.9g,%s\n",
                  r.outer, r.inner, r.rho_pen, r.f, r.eve_se, r.psi1, r.psi2,
                  r.psi3, r.c_before, to_string(r.step));
    os << buf;
  }
  return os.str();
}

SolveResult apg_solve(const ChannelStats& stats, const ApgParams& params,
                      const PenaltyWeights& w0, const DecisionVars& v0,
                      const SolveMode& mode) {
  if (params.zeta < 0.0 || params.zeta >= 1.0)
    throw std::invalid_argument("zeta must lie in [0, 1)");
  if (w0.varsigma <= 1.0)
    throw std::invalid_argument("penalty multiplier varsigma must exceed 1");

  PenaltyWeights w = w0;
  SolveResult res;
  DecisionVars v = project(v0, mode);

  auto check_finite = [&](double f, const char* where) {
    if (!std::isfinite(f)) {
      std::ostringstream os;
      os << "solver aborted: non-finite objective (" << f << ") during " << where
         << " at rho_pen=" << w.rho_pen;
      throw std::runtime_error(os.str());
    }
  };

  // Relative-change stopping over a 10-iteration window.
  constexpr int kWindow = 10;

  for (int outer = 0; outer < params.max_outer; ++outer) {
    double j_est = params.j_est;
    if (j_est <= 0.0)
      j_est = estimate_lipschitz(stats, w, mode, params, v,
                                 derive_seed(params.seed, stream::kLipschitz + outer));
    double alpha_vbar = params.alpha_vbar > 0.0 ? params.alpha_vbar : 1.0 / j_est;
    double alpha_v = params.alpha_v > 0.0 ? params.alpha_v : 1.0 / j_est;

    DecisionVars v_prev = v;
    DecisionVars v_tilde = v;
    double q_prev = 0.0, q = 1.0;
    double b = 1.0;
    ObjectiveEval cur = evaluate_objective(v, stats, w, mode);
    check_finite(cur.f, "stage initialization");
    double c = cur.f;
    double f_v = cur.f;

    DecisionVars v_best = v;
    double f_best = cur.f;
    std::vector<double> recent{cur.f};

    for (int inner = 1; inner <= params.max_inner; ++inner) {
      const double w_tilde = q_prev / q;
      const double w_momentum = (q_prev - 1.0) / q;
      DecisionVars v_bar;
      v_bar.theta = v.theta + w_tilde * (v_tilde.theta - v.theta) +
                    w_momentum * (v.theta - v_prev.theta);
      v_bar.z = v.z + w_tilde * (v_tilde.z - v.z) + w_momentum * (v.z - v_prev.z);

      const DecisionVars g_bar = gradient(v_bar, stats, w, mode);
      DecisionVars v_tilde_next;
      v_tilde_next.theta = v_bar.theta - alpha_vbar * g_bar.theta;
      v_tilde_next.z = v_bar.z - alpha_vbar * g_bar.z;
      v_tilde_next = project(v_tilde_next, mode);
      const ObjectiveEval f_tilde = evaluate_objective(v_tilde_next, stats, w, mode);
      check_finite(f_tilde.f, "extrapolated step");

      const double dist2 = stacked_dist2(v_tilde_next, v_bar);
      DecisionVars v_next;
      ObjectiveEval f_next;
      StepKind kind;
      if (f_tilde.f <= c - params.zeta * dist2) {
        v_next = v_tilde_next;
        f_next = f_tilde;
        kind = StepKind::kAccepted;
      } else {
        // Correction step from the un-extrapolated iterate. A projected
        // gradient step with alpha <= 1/J cannot increase the objective, so
        // an increase certifies that J was underestimated: shrink the step
        // sizes and retry before comparing.
        const DecisionVars g_v = gradient(v, stats, w, mode);
        DecisionVars v_hat;
        ObjectiveEval f_hat;
        const double descent_margin = 1e-12 * std::max(1.0, std::abs(f_v));
        for (int backoff = 0;; ++backoff) {
          v_hat.theta = v.theta - alpha_v * g_v.theta;
          v_hat.z = v.z - alpha_v * g_v.z;
          v_hat = project(v_hat, mode);
          f_hat = evaluate_objective(v_hat, stats, w, mode);
          check_finite(f_hat.f, "correction step");
          if (f_hat.f <= f_v + descent_margin || backoff >= 60) break;
          j_est *= 2.0;
          alpha_v *= 0.5;
          alpha_vbar *= 0.5;
        }
        if (f_tilde.f <= f_hat.f) {
          v_next = v_tilde_next;
          f_next = f_tilde;
          kind = StepKind::kCorrectedTilde;
        } else {
          v_next = v_hat;
          f_next = f_hat;
          kind = StepKind::kCorrectedHat;
        }
      }

      res.trace.rows.push_back(TraceRow{outer, inner, w.rho_pen, f_next.f,
                                        f_next.rate_e, f_next.pen.qos,
                                        f_next.pen.binarity, f_next.pen.assoc, c,
                                        kind});

      const double q_next = apg_q_update(q);
      const double b_next = apg_b_update(b, params.zeta);
      c = apg_c_update(c, b, b_next, f_next.f, params.zeta);
      b = b_next;
      q_prev = q;
      q = q_next;
      v_prev = v;
      v = v_next;
      f_v = f_next.f;
      v_tilde = v_tilde_next;
      ++res.total_inner_iterations;

      if (f_next.f < f_best) {
        f_best = f_next.f;
        v_best = v;
      }

      recent.push_back(f_next.f);
      if (static_cast<int>(recent.size()) > kWindow + 1)
        recent.erase(recent.begin());
      if (static_cast<int>(recent.size()) == kWindow + 1) {
        const double newest = recent.back();
        const double oldest = recent.front();
        const double rel = std::abs(newest - oldest) /
                           std::max(std::abs(newest), 1e-12);
        if (rel <= params.eps) break;
      }
    }

    v = v_best;
    if (mode.optimize_z) {
      // Commit sweep: raising z to 1 wherever theta^2 > z^2 lowers (or
      // leaves) every penalty term and cannot change the eavesdropper rate,
      // but plain descent can never find the move because the coupling
      // force on z vanishes at z = 0.
      const Eigen::ArrayXXd lift =
          (v.theta.square() > v.z.square()).cast<double>();
      if ((lift > 0.0).any()) v.z = v.z.max(lift);
    }

    // Rescue sweep: the rate-shortfall gradient scales with the user's
    // coherent amplitude, so a fully shut-down user feels no restoring
    // force no matter how large rho grows. Re-seed such users with half
    // the headroom of their best usable AP and let the next stage settle.
    {
      const RateEval ev = evaluate_rates(v.theta, stats);
      const Eigen::ArrayXd headroom =
          (1.0 - v.theta.square().rowwise().sum()).max(0.0).sqrt();
      for (int k = 0; k < stats.num_users; ++k) {
        if (ev.rate(k) >= stats.qos_se || ev.u(k) >= 1e-8) continue;
        int best_l = -1;
        double best_gain = 0.0;
        for (int l = 0; l < stats.num_aps; ++l) {
          if (mode.mask && (*mode.mask)(l, k) == 0.0) continue;
          const double gain = stats.coh(l, k) * headroom(l);
          if (gain > best_gain) {
            best_gain = gain;
            best_l = l;
          }
        }
        if (best_l < 0 || best_gain <= 0.0) continue;
        v.theta(best_l, k) = std::max(v.theta(best_l, k), 0.5 * headroom(best_l));
        if (mode.optimize_z) v.z(best_l, k) = 1.0;
      }
    }

    res.f = evaluate_objective(v, stats, w, mode).f;
    res.penalties = penalties(v, stats, mode);
    if (res.penalties.total() < params.penalty_tol) break;
    if (outer + 1 < params.max_outer) w.rho_pen *= w.varsigma;
  }

  res.v = v;
  res.eve_se = eve_rate(stats, v.theta);
  res.penalty_feasible = res.penalties.total() < params.penalty_tol;
  res.trace.relaxed_eve_se = res.eve_se;
  res.final_weights = w;
  return res;
}

RoundedSolution round_and_polish(const DecisionVars& v, const ChannelStats& stats,
                                 const ApgParams& params, const PenaltyWeights& w) {
  const int L = stats.num_aps;
  const int K = stats.num_users;

  Eigen::ArrayXXd assoc = ((v.z.square() >= params.round_threshold) ||
                           (v.theta.square() >= params.round_keep_power))
                              .cast<double>();
  for (int k = 0; k < K; ++k) {
    if (assoc.col(k).sum() > 0.0) continue;
    // Every user keeps at least one serving AP: force the strongest z on.
    int best_l = 0;
    for (int l = 1; l < L; ++l)
      if (v.z(l, k) > v.z(best_l, k)) best_l = l;
    assoc(best_l, k) = 1.0;
  }

  SolveMode mode;
  mode.optimize_z = false;
  mode.mask = assoc;

  DecisionVars start;
  start.theta = project_theta(v.theta * assoc, mode.mask);
  start.z = assoc.sqrt();

  ApgParams polish = params;
  polish.max_inner = params.polish_max_inner;
  polish.max_outer = 1;

  const SolveResult polished = apg_solve(stats, polish, w, start, mode);

  auto min_user_se_of = [&](const Eigen::ArrayXXd& theta) {
    double min_se = std::numeric_limits<double>::infinity();
    for (int k = 0; k < K; ++k) min_se = std::min(min_se, se_user(stats, theta, k));
    return min_se;
  };
  const double qos_floor = stats.qos_se - 0.01;

  // QoS first, eavesdropper rate second: keep the pre-polish point unless
  // the polish run matches its QoS status with a lower leaked rate or
  // repairs a QoS break that rounding introduced.
  const double pre_min_se = min_user_se_of(start.theta);
  const double pre_eve = eve_rate(stats, start.theta);
  const bool pre_qos = pre_min_se >= qos_floor;
  const double cand_min_se = min_user_se_of(polished.v.theta);
  const double cand_eve = polished.eve_se;
  const bool cand_qos = cand_min_se >= qos_floor;

  RoundedSolution out;
  out.assoc = assoc;
  bool take_cand;
  if (cand_qos != pre_qos)
    take_cand = cand_qos;
  else if (!cand_qos && cand_min_se != pre_min_se)
    take_cand = cand_min_se > pre_min_se;  // both short: closer to the floor wins
  else
    take_cand = cand_eve <= pre_eve;
  if (take_cand) {
    out.theta = polished.v.theta;
    out.eve_se = cand_eve;
    out.min_user_se = cand_min_se;
    out.qos_ok = cand_qos;
  } else {
    out.theta = start.theta;
    out.eve_se = pre_eve;
    out.min_user_se = pre_min_se;
    out.qos_ok = pre_qos;
  }
  return out;
}

JointSolution solve_joint(const ChannelStats& stats, const ApgParams& params,
                          const PenaltyWeights& weights) {
  JointSolution best;
  const int runs = std::max(1, params.restarts);
  for (int r = 0; r < runs; ++r) {
    ApgParams attempt = params;
    attempt.seed = derive_seed(params.seed, 9000 + static_cast<std::uint64_t>(r));
    // Later restarts widen the association jitter so they can reach basins
    // the near-undecided start never visits.
    attempt.init_jitter =
        std::min(0.7, params.init_jitter * static_cast<double>(1 << (2 * r)));
    const DecisionVars v0 = initial_point(stats, attempt);
    const SolveResult res = apg_solve(stats, attempt, weights, v0);
    const RoundedSolution rounded =
        round_and_polish(res.v, stats, attempt, res.final_weights);
    best.total_inner_iterations += res.total_inner_iterations;

    const bool better =
        r == 0 ||
        (rounded.qos_ok != best.rounded.qos_ok
             ? rounded.qos_ok
             : rounded.eve_se < best.rounded.eve_se);
    if (better) {
      const Eigen::ArrayXXd z2 = res.v.z.square();
      best.rounded = rounded;
      best.z_round_error = (z2 - z2.round()).abs().maxCoeff();
      best.penalty_feasible = res.penalty_feasible;
    }
  }
  return best;
}

}  // namespace cfsec
