#pragma once
// Self-similar tail analysis for a_n = b_n = n. The tails C_k = sum_{n>=k} c_n
// obey d_t C_k = L C_k + G_k with L = d^-(k d^+ .) and Neumann condition at
// k = 0; rescaled as t*C_{floor(t x)+1}(t s) they approach (rho-1/kappa)/s *
// exp(-x/s). This header builds the rescalings, the profile distances, the
// discrete fundamental solution phi(t,k,l), the Duhamel reconstruction and the
// weak pairings used to shadow the weak* limit.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <functional>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdlab/compensated.hpp"
#include "bdlab/integrator.hpp"
#include "bdlab/tridiag.hpp"

namespace bdlab {

// ---------------------------------------------------------------------------
// Homogeneous tail equation d_t C_k = (k-1)(C_{k-1}-C_k) - k(C_k-C_{k+1}),
// k = 1..N, flux cut at the truncation (k(C_k - C_{k+1})|_{k=N} := 0). The
// matrix is symmetric and columns sum to zero, so the zeroth moment sum_k C_k
// is conserved exactly.
// ---------------------------------------------------------------------------
class TailSystem {
 public:
  explicit TailSystem(std::size_t n) : n_(n) {
    if (n < 2) throw std::invalid_argument("TailSystem: need N >= 2");
  }

  std::size_t dim() const { return n_; }

  void eval_rhs(double, std::span<const double> y, std::span<double> dy) const {
    const std::size_t n = n_;
    // k = 1: (k-1)-term vanishes, Neumann at 0 is automatic
    dy[0] = -(y[0] - y[1]);
    for (std::size_t k = 2; k < n; ++k)
      dy[k - 1] = static_cast<double>(k - 1) * (y[k - 2] - y[k - 1]) -
                  static_cast<double>(k) * (y[k - 1] - y[k]);
    dy[n - 1] = static_cast<double>(n - 1) * (y[n - 2] - y[n - 1]);
  }

  bool solve_stage(double, double h, std::span<const double> base, std::span<const double>,
                   std::span<double> y_out, StageScratch& ws, IntegrationStats& st) const {
    const std::size_t n = n_;
    ws.cp.resize(n);
    auto row = [&](std::size_t i) -> TriRow {
      const double k = static_cast<double>(i + 1);
      if (i == 0) return TriRow{0.0, -1.0, 1.0};
      if (i + 1 == n) return TriRow{k - 1.0, -(k - 1.0), 0.0};
      return TriRow{k - 1.0, -(2.0 * k - 1.0), k};
    };
    solve_identity_minus_tridiag(h, n, row, base, y_out, ws.cp);
    st.stage_solves++;
    return true;
  }

  double conserved(std::span<const double> y) const { return compensated_sum(y); }

  // phi may legitimately carry tiny negative dust; nothing to ledger here
  double clip_negatives(std::span<double>) const { return 0.0; }

 private:
  std::size_t n_;
};

// Advances tail/phi vectors through the homogeneous equation; shared by the
// fundamental solution and the Duhamel reconstruction.
class TailPropagator {
 public:
  TailPropagator(std::size_t n, IntegratorConfig cfg) : sys_(n), cfg_(cfg) {
    cfg_.validate();
  }

  std::size_t size() const { return sys_.dim(); }

  // column(t) for each t in `times` (strictly increasing, >= t0 = 0)
  template <class Observer>
  IntegrationStats propagate(std::span<const double> v0, std::span<const double> times,
                             Observer&& obs) const {
    return integrate_observe(sys_, v0, 0.0, cfg_, Method::Imex, times,
                             [&](double t, std::span<const double> y, double) { obs(t, y); });
  }

 private:
  TailSystem sys_;
  IntegratorConfig cfg_;
};

struct PhiColumn {
  std::size_t l = 0;  // source index
  double t = 0.0;
  std::vector<double> values;  // phi(t, k, l), k = 1..N
};

// Columns of the fundamental solution: start from the delta at l, sample at
// the given times. phi >= 0, sum_k phi = 1 up to integrator tolerance.
inline std::vector<PhiColumn> fundamental_solution(std::size_t l, std::span<const double> t_list,
                                                   std::size_t n, const IntegratorConfig& cfg) {
  if (l < 1 || l > n) throw std::invalid_argument("fundamental_solution: require 1 <= l <= N");
  std::vector<double> delta(n, 0.0);
  delta[l - 1] = 1.0;
  std::vector<PhiColumn> out;
  TailPropagator prop(n, cfg);
  prop.propagate(delta, t_list, [&](double t, std::span<const double> y) {
    PhiColumn col;
    col.l = l;
    col.t = t;
    col.values.assign(y.begin(), y.end());
    out.push_back(std::move(col));
  });
  return out;
}

// ---------------------------------------------------------------------------
// Rescaling and profile distances.
// ---------------------------------------------------------------------------
struct RescaledProfile {
  double t = 0.0;
  double s = 1.0;
  std::vector<double> x;       // grid, increasing, nonnegative
  std::vector<double> values;  // t * C_{floor(t x)+1}(t s)
};

// Exact index map k = floor(t*x) + 1; the tail vector must be taken at time t*s.
inline RescaledProfile rescale(std::span<const double> tail_at_ts, double t, double s,
                               std::span<const double> x_grid) {
  if (!(t > 0.0) || !(s > 0.0)) throw std::invalid_argument("rescale: need t > 0 and s > 0");
  RescaledProfile p;
  p.t = t;
  p.s = s;
  p.x.assign(x_grid.begin(), x_grid.end());
  p.values.resize(x_grid.size());
  const std::size_t n = tail_at_ts.size();
  for (std::size_t i = 0; i < x_grid.size(); ++i) {
    const std::size_t k = static_cast<std::size_t>(std::floor(t * x_grid[i])) + 1;
    if (k > n)
      throw std::invalid_argument("rescale: x = " + std::to_string(x_grid[i]) +
                                  " maps to k = " + std::to_string(k) +
                                  " beyond the truncation N = " + std::to_string(n));
    p.values[i] = t * tail_at_ts[k - 1];
  }
  return p;
}

// Uniform grid on [0, M] with spacing min(0.01, 1/(2t)): resolves both the
// target profile and the rescaling cell width 1/t.
inline std::vector<double> default_x_grid(double t, double m_end) {
  const double h = std::min(0.01, 1.0 / (2.0 * t));
  const std::size_t cells = static_cast<std::size_t>(std::ceil(m_end / h));
  std::vector<double> x(cells + 1);
  for (std::size_t i = 0; i <= cells; ++i)
    x[i] = m_end * static_cast<double>(i) / static_cast<double>(cells);
  return x;
}

enum class ProfileNorm { Sup, L1, L2, Lp };

inline const char* to_string(ProfileNorm n) {
  switch (n) {
    case ProfileNorm::Sup: return "sup";
    case ProfileNorm::L1: return "L1";
    case ProfileNorm::L2: return "L2";
    case ProfileNorm::Lp: return "Lp";
  }
  return "?";
}

// Distance between the rescaled profile and (rho-1/kappa)*(1/s)*exp(-x/s) on
// [0, M]; Lp norms by composite trapezoid on the profile grid.
inline double profile_error(const RescaledProfile& p, double rho, double kappa,
                            ProfileNorm norm, double m_end, double lp_p = 2.0) {
  if (p.x.empty()) throw std::invalid_argument("profile_error: empty profile");
  const double amp = std::max(rho - 1.0 / kappa, 0.0);
  double pw = lp_p;
  if (norm == ProfileNorm::L1) pw = 1.0;
  if (norm == ProfileNorm::L2) pw = 2.0;
  double sup = 0.0;
  NeumaierSum integ;
  double prev_x = 0.0, prev_d = 0.0;
  bool have_prev = false;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (p.x[i] > m_end * (1.0 + 1e-12)) break;
    const double target = amp / p.s * std::exp(-p.x[i] / p.s);
    const double d = std::abs(p.values[i] - target);
    sup = std::max(sup, d);
    const double dp = std::pow(d, pw);
    if (have_prev) integ.add(0.5 * (p.x[i] - prev_x) * (dp + prev_d));
    prev_x = p.x[i];
    prev_d = dp;
    have_prev = true;
  }
  if (norm == ProfileNorm::Sup) return sup;
  return std::pow(integ.value(), 1.0 / pw);
}

// ---------------------------------------------------------------------------
// Duhamel reconstruction C_k(t) = sum_l phi(t,k,l) C_l(0)
//                                + int_0^t sum_l phi(t-s,k,l) G_l(s) ds.
// ---------------------------------------------------------------------------
struct TailHistory {
  std::vector<double> times;                // increasing, [0, t]
  std::vector<std::vector<double>> values;  // one vector per time
};

// phi(t,k,l) = phi(t,l,k) (L is symmetric), so row k of the propagator is the
// column from the delta at k. For each k one forward sweep of the homogeneous
// equation visits all quadrature nodes tau = t - s, accumulating the trapezoid
// rule over the sampled G history. O(N^2 * steps) -- a validation tool for
// modest N, as intended.
inline std::vector<double> duhamel_reconstruct(const TailPropagator& prop,
                                               std::span<const double> tails0,
                                               const TailHistory& g_history, double t) {
  const std::size_t n = prop.size();
  if (tails0.size() != n) throw std::invalid_argument("duhamel_reconstruct: tails0 size");
  if (g_history.times.size() < 2)
    throw std::invalid_argument("duhamel_reconstruct: history needs at least two samples");
  if (std::abs(g_history.times.front()) > 1e-12 ||
      std::abs(g_history.times.back() - t) > 1e-9 * std::max(1.0, t))
    throw std::invalid_argument("duhamel_reconstruct: history must span [0, t]");
  const std::size_t m = g_history.times.size();
  // trapezoid weights over the (possibly nonuniform) history grid
  std::vector<double> w(m, 0.0);
  for (std::size_t j = 0; j + 1 < m; ++j) {
    const double h = g_history.times[j + 1] - g_history.times[j];
    if (!(h > 0.0)) throw std::invalid_argument("duhamel_reconstruct: history times must increase");
    w[j] += 0.5 * h;
    w[j + 1] += 0.5 * h;
  }
  // tau grid for the propagator: tau_i = t - s_{m-1-i}, ascending from 0
  std::vector<double> tau(m);
  for (std::size_t i = 0; i < m; ++i) tau[i] = t - g_history.times[m - 1 - i];
  tau.front() = 0.0;

  std::vector<double> recon(n, 0.0);
  std::vector<double> delta(n, 0.0);
  for (std::size_t k = 1; k <= n; ++k) {
    std::fill(delta.begin(), delta.end(), 0.0);
    delta[k - 1] = 1.0;
    NeumaierSum acc;
    std::size_t i = 0;
    prop.propagate(delta, tau, [&](double, std::span<const double> y) {
      const std::size_t j = m - 1 - i;  // history index paired with this tau
      NeumaierSum dot;
      const auto& g = g_history.values[j];
      for (std::size_t idx = 0; idx < n; ++idx) dot.add(y[idx] * g[idx]);
      acc.add(w[j] * dot.value());
      if (i + 1 == m) {  // tau = t: homogeneous part <phi(t,.,k), C(0)>
        NeumaierSum hom;
        for (std::size_t idx = 0; idx < n; ++idx) hom.add(y[idx] * tails0[idx]);
        acc.add(hom.value());
      }
      ++i;
    });
    recon[k - 1] = acc.value();
  }
  return recon;
}

// ---------------------------------------------------------------------------
// Weak pairings: int t*C_{floor(tx)+1}(t) u(x) dx computed exactly as
// t * sum_k C_k * int_{(k-1)/t}^{k/t} u, with two-point Gauss per cell. The
// Gauss nodes are interior, so test functions constant on half-open cells
// (indicators aligned to the grid) integrate exactly.
// ---------------------------------------------------------------------------
inline double weak_pairing(std::span<const double> tail_at_t, double t,
                           const std::function<double(double)>& u) {
  if (!(t > 0.0)) throw std::invalid_argument("weak_pairing: need t > 0");
  static const double kGaussOff = 0.5 / std::sqrt(3.0);
  NeumaierSum acc;
  const double h = 1.0 / t;
  for (std::size_t k = 1; k <= tail_at_t.size(); ++k) {
    const double ck = tail_at_t[k - 1];
    if (ck == 0.0) continue;  // tails are nonincreasing; zero stays zero
    const double mid = (static_cast<double>(k) - 0.5) / t;
    const double cell = 0.5 * h * (u(mid - kGaussOff * h) + u(mid + kGaussOff * h));
    acc.add(ck * cell);
  }
  return t * acc.value();
}

}  // namespace bdlab
