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

#include "cfsec/montecarlo.hpp"

#include <Eigen/Cholesky>
#include <cmath>
#include <complex>
#include <stdexcept>
#include <thread>

#include "cfsec/rng.hpp"

namespace cfsec {

namespace {

using Cplx = std::complex<double>;

struct GaussianSource {
  std::mt19937_64 rng;
  std::normal_distribution<double> dist{0.0, M_SQRT1_2};  // CN(0,1) components

  explicit GaussianSource(std::uint64_t seed) : rng(seed) {}

  Cplx operator()() { return Cplx(dist(rng), dist(rng)); }

  void fill(Eigen::MatrixXcd& m) {
    for (Eigen::Index j = 0; j < m.cols(); ++j)
      for (Eigen::Index i = 0; i < m.rows(); ++i) m(i, j) = (*this)();
  }
  void fill(Eigen::VectorXcd& v) {
    for (Eigen::Index i = 0; i < v.size(); ++i) v(i) = (*this)();
  }
};

// LMMSE scalar applied to the pilot projection. For the attacked user the
// projection also contains Eve's channel, which both inflates the
// denominator and makes the estimate collinear with Eve's channel.
double mmse_scalar(const ChannelStats& st, int l, int k) {
  const double tp = static_cast<double>(st.pilot_length);
  const double num = std::sqrt(tp * st.rho_u) * st.beta(l, k);
  if (k == st.attacked_user)
    return num / (tp * st.rho_u * st.beta(l, k) + tp * st.rho_e * st.beta_eve(l) + 1.0);
  return num / (tp * st.rho_u * st.beta(l, k) + 1.0);
}

void draw_into(const ChannelStats& st, std::uint64_t seed, SmallScaleDraw& draw,
               ChannelEstimates& est) {
  const int L = st.num_aps;
  const int M = st.antennas_per_ap;
  const int K = st.num_users;
  const int att = st.attacked_user;
  const double tp = static_cast<double>(st.pilot_length);
  const double pilot_amp_u = std::sqrt(tp * st.rho_u);
  const double pilot_amp_e = std::sqrt(tp * st.rho_e);

  draw.h.resize(L);
  draw.h_eve.resize(L);
  draw.pilot_noise.resize(L);
  est.resize(L);

  GaussianSource gauss(seed);
  for (int l = 0; l < L; ++l) {
    draw.h[l].resize(M, K);
    gauss.fill(draw.h[l]);
    for (int k = 0; k < K; ++k) draw.h[l].col(k) *= std::sqrt(st.beta(l, k));

    draw.h_eve[l].resize(M);
    gauss.fill(draw.h_eve[l]);
    draw.h_eve[l] *= std::sqrt(st.beta_eve(l));

    draw.pilot_noise[l].resize(M, K);
    gauss.fill(draw.pilot_noise[l]);

    est[l].resize(M, K);
    for (int k = 0; k < K; ++k) {
      Eigen::VectorXcd obs = pilot_amp_u * draw.h[l].col(k) + draw.pilot_noise[l].col(k);
      if (k == att) obs += pilot_amp_e * draw.h_eve[l];
      est[l].col(k) = mmse_scalar(st, l, k) * obs;
    }
  }
}

}  // namespace

std::pair<SmallScaleDraw, ChannelEstimates> draw_estimates(
    const ChannelStats& stats, std::uint64_t seed) {
  SmallScaleDraw draw;
  ChannelEstimates est;
  draw_into(stats, seed, draw, est);
  return {std::move(draw), std::move(est)};
}

PrecoderSet build_precoders(const ChannelEstimates& est, const ChannelStats& stats) {
  const int L = stats.num_aps;
  const int M = stats.antennas_per_ap;
  const int K = stats.num_users;

  PrecoderSet set;
  set.w.resize(L);
  set.b.resize(L);
  for (int l = 0; l < L; ++l) {
    const auto& strong = stats.strong_sets[l];
    const int s = static_cast<int>(strong.size());
    const double spare = static_cast<double>(M - s);

    Eigen::MatrixXcd a(M, s);
    for (int j = 0; j < s; ++j) a.col(j) = est[l].col(strong[j]);

    const Eigen::MatrixXcd gram = a.adjoint() * a;
    Eigen::LLT<Eigen::MatrixXcd> llt(gram);
    if (llt.info() != Eigen::Success)
      throw std::runtime_error("singular Gram matrix while building precoders");
    // a_pinv_t = A (A^H A)^{-1}; its columns are the zero-forcing directions.
    const Eigen::MatrixXcd a_pinv_t = llt.solve(a.adjoint()).adjoint();

    set.b[l] = Eigen::MatrixXcd::Identity(M, M) - a_pinv_t * a.adjoint();

    set.w[l].resize(M, K);
    for (int j = 0; j < s; ++j) {
      const int k = strong[j];
      set.w[l].col(k) = std::sqrt(spare * stats.gamma(l, k)) * a_pinv_t.col(j);
    }
    for (int k : stats.weak_sets[l]) {
      set.w[l].col(k) =
          set.b[l] * est[l].col(k) / std::sqrt(spare * stats.gamma(l, k));
    }
  }
  return set;
}

namespace {

// Per-batch moment sums; merged in batch order for thread-count-independent
// results.
struct BatchSums {
  Eigen::ArrayXcd signal;        // sum of desired-signal coefficients, K
  Eigen::ArrayXd signal_sq;      // sum |coefficient|^2, K
  Eigen::ArrayXd interference;   // sum over draws of sum_{t != k} power, K
  double eve_signal_sq = 0.0;    // sum |Eve's coefficient on the attacked symbol|^2
  double eve_interference = 0.0;
  int draws = 0;

  void init(int k) {
    signal = Eigen::ArrayXcd::Zero(k);
    signal_sq = Eigen::ArrayXd::Zero(k);
    interference = Eigen::ArrayXd::Zero(k);
  }

  void accumulate(const BatchSums& other) {
    signal += other.signal;
    signal_sq += other.signal_sq;
    interference += other.interference;
    eve_signal_sq += other.eve_signal_sq;
    eve_interference += other.eve_interference;
    draws += other.draws;
  }
};

struct SinrFromSums {
  Eigen::ArrayXd users;
  double eve = 0.0;
};

SinrFromSums assemble(const BatchSums& s) {
  const double n = static_cast<double>(s.draws);
  SinrFromSums out;
  const Eigen::ArrayXcd mean = s.signal / n;
  const Eigen::ArrayXd mean_power = mean.abs2();
  const Eigen::ArrayXd variance = (s.signal_sq / n - mean_power).max(0.0);
  out.users = mean_power / (variance + s.interference / n + 1.0);
  out.eve = (s.eve_signal_sq / n) / (s.eve_interference / n + 1.0);
  return out;
}

void run_batch(const ChannelStats& st, const PowerMatrix& theta,
               std::uint64_t seed, int first_draw, int draws, BatchSums& sums) {
  const int L = st.num_aps;
  const int K = st.num_users;
  const int att = st.attacked_user;
  const double sqrt_rho_d = std::sqrt(st.rho_d);

  sums.init(K);
  SmallScaleDraw draw;
  ChannelEstimates est;
  Eigen::MatrixXcd coupled(K, K);  // coupled(k,t) = sum_l sqrt(rho_d) theta(l,t) h_{l,k}^H w_{l,t}
  Eigen::RowVectorXcd coupled_eve(K);

  for (int d = 0; d < draws; ++d) {
    const std::uint64_t draw_seed = derive_seed(seed, first_draw + d);
    PrecoderSet prec;
    for (std::uint64_t attempt = 0;; ++attempt) {
      draw_into(st, derive_seed(draw_seed, attempt), draw, est);
      try {
        prec = build_precoders(est, st);
        break;
      } catch (const std::runtime_error&) {
        if (attempt > 4) throw;  // singular Gram five times in a row: broken input
      }
    }

    coupled.setZero();
    coupled_eve.setZero();
    for (int l = 0; l < L; ++l) {
      const Eigen::MatrixXcd cross = draw.h[l].adjoint() * prec.w[l];  // K x K
      const Eigen::RowVectorXcd cross_eve = draw.h_eve[l].adjoint() * prec.w[l];
      for (int t = 0; t < K; ++t) {
        const double scale = sqrt_rho_d * theta(l, t);
        coupled.col(t) += scale * cross.col(t);
        coupled_eve(t) += scale * cross_eve(t);
      }
    }

    for (int k = 0; k < K; ++k) {
      const Cplx own = coupled(k, k);
      sums.signal(k) += own;
      sums.signal_sq(k) += std::norm(own);
      double inter = 0.0;
      for (int t = 0; t < K; ++t)
        if (t != k) inter += std::norm(coupled(k, t));
      sums.interference(k) += inter;
    }
    sums.eve_signal_sq += std::norm(coupled_eve(att));
    for (int t = 0; t < K; ++t)
      if (t != att) sums.eve_interference += std::norm(coupled_eve(t));
    ++sums.draws;
  }
}

}  // namespace

EmpiricalSinr empirical_sinr(const ChannelStats& stats, const PowerMatrix& theta,
                             int n_draws, std::uint64_t seed, int threads) {
  if (n_draws < 1) throw std::invalid_argument("empirical_sinr needs n_draws >= 1");
  constexpr int kBatchSize = 250;
  const int n_batches = (n_draws + kBatchSize - 1) / kBatchSize;
  std::vector<BatchSums> batches(n_batches);

  const std::uint64_t stream_seed = derive_seed(seed, stream::kMonteCarlo);
  auto work = [&](int b) {
    const int first = b * kBatchSize;
    const int count = std::min(kBatchSize, n_draws - first);
    run_batch(stats, theta, stream_seed, first, count, batches[b]);
  };

  threads = std::max(1, std::min(threads, n_batches));
  if (threads == 1) {
    for (int b = 0; b < n_batches; ++b) work(b);
  } else {
    std::atomic<int> next{0};
    std::vector<std::thread> pool;
    pool.reserve(threads);
    for (int t = 0; t < threads; ++t) {
      pool.emplace_back([&] {
        for (int b = next.fetch_add(1); b < n_batches; b = next.fetch_add(1)) work(b);
      });
    }
    for (auto& th : pool) th.join();
  }

  BatchSums total;
  total.init(stats.num_users);
  for (const auto& b : batches) total.accumulate(b);
  const SinrFromSums overall = assemble(total);

  EmpiricalSinr out;
  out.sinr_users = overall.users;
  out.sinr_eve = overall.eve;
  out.n_draws = n_draws;
  out.n_batches = n_batches;

  // Batch-means standard errors for the nonlinear SINR functional.
  out.stderr_users = Eigen::ArrayXd::Zero(stats.num_users);
  out.stderr_eve = 0.0;
  if (n_batches > 1) {
    Eigen::ArrayXXd user_est(n_batches, stats.num_users);
    Eigen::ArrayXd eve_est(n_batches);
    for (int b = 0; b < n_batches; ++b) {
      const SinrFromSums s = assemble(batches[b]);
      user_est.row(b) = s.users.transpose();
      eve_est(b) = s.eve;
    }
    const double nb = static_cast<double>(n_batches);
    for (int k = 0; k < stats.num_users; ++k) {
      const double m = user_est.col(k).mean();
      const double var = (user_est.col(k) - m).square().sum() / (nb - 1.0);
      out.stderr_users(k) = std::sqrt(var / nb);
    }
    const double me = eve_est.mean();
    const double var_e = (eve_est - me).square().sum() / (nb - 1.0);
    out.stderr_eve = std::sqrt(var_e / nb);
  }
  return out;
}

}  // namespace cfsec
