#pragma once
// The pure-diffusion auxiliary system: the full dynamics with the kappa*f
// coupling replaced by 1 and no monomer pool, J~_n = a_n c~_n - b_{n+1} c~_{n+1}
// with c~_0 = 0. Started from the same cluster data with f(0) <= 1/kappa it is
// a supersolution in the tails, E_k = C_k - C~_k <= 0.
//
// The stepping code is shared with the full system (same Stepper template), so
// a solver bug hits both sides of the comparison symmetrically.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <vector>

#include "bdlab/diagnostics.hpp"
#include "bdlab/integrator.hpp"
#include "bdlab/model.hpp"

namespace bdlab {

struct DiffusionState {
  double t = 0.0;
  std::vector<double> c;  // c[i] = c~_{i+1}
  double leaked_mass = 0.0;
};

// dc~_n = J~_{n-1} - J~_n with the policy closure from diffusion_fluxes.
inline Derivative diffusion_rhs(const RateModel& m, const DiffusionState& s,
                                TruncationPolicy policy = TruncationPolicy::Reflecting) {
  if (s.c.empty()) throw std::invalid_argument("diffusion_rhs: empty state");
  if (s.c.size() > m.n_max())
    throw std::invalid_argument("diffusion_rhs: state larger than model cache");
  const std::size_t N = s.c.size();
  std::vector<double> J(N + 1);
  diffusion_fluxes(m, s.c, policy, J);
  Derivative d;
  d.dc.resize(N);
  for (std::size_t n = 1; n <= N; ++n) d.dc[n - 1] = J[n - 1] - J[n];
  d.df = 0.0;
  d.dleaked = policy == TruncationPolicy::Absorbing ? static_cast<double>(N + 1) * J[N] : 0.0;
  return d;
}

// Flat layout [c~_1..c~_N, leaked]; linear, so the implicit stage is a single
// tridiagonal solve.
class DiffusionSystem {
 public:
  DiffusionSystem(const RateModel& m, TruncationPolicy policy) : m_(&m), policy_(policy) {
    n_ = m.n_max();
  }

  std::size_t dim() const { return n_ + 1; }

  void eval_rhs(double, std::span<const double> y, std::span<double> dy) const {
    const std::size_t n = n_;
    const auto a = m_->rates();
    const bool absorbing = policy_ == TruncationPolicy::Absorbing;
    double j_prev = -a[1] * y[0];  // J~_0 = -c~_1
    for (std::size_t k = 1; k < n; ++k) {
      double j = a[k] * y[k - 1];
      if (k + 1 < n || absorbing) j -= a[k + 1] * y[k];
      dy[k - 1] = j_prev - j;
      j_prev = j;
    }
    const double j_top = absorbing ? a[n] * y[n - 1] : 0.0;
    dy[n - 1] = j_prev - j_top;
    dy[n] = absorbing ? static_cast<double>(n + 1) * j_top : 0.0;
  }

  bool solve_stage(double, double h, std::span<const double> base, std::span<const double>,
                   std::span<double> y_out, StageScratch& ws, IntegrationStats& st) const {
    const std::size_t n = n_;
    const auto a = m_->rates();
    const bool absorbing = policy_ == TruncationPolicy::Absorbing;
    ws.cp.resize(n);
    // Generator rows of dc~ = T c~. Interior: a_{k-1} c~_{k-1} - 2 a_k c~_k
    // + a_{k+1} c~_{k+1}. Reflecting closes the top level (both level-N moves
    // off) so sum n c~_n is exact; absorbing keeps the standard last row.
    auto row = [&](std::size_t i) -> TriRow {
      const std::size_t k = i + 1;  // cluster size
      const double lo = i > 0 ? a[k - 1] : 0.0;
      double di, up;
      if (k < n - 1) {
        di = -2.0 * a[k];
        up = a[k + 1];
      } else if (k == n - 1) {
        di = -2.0 * a[k];
        up = absorbing ? a[k + 1] : 0.0;
      } else {  // k == n
        di = absorbing ? -2.0 * a[k] : 0.0;
        up = 0.0;
      }
      return TriRow{lo, di, up};
    };
    solve_identity_minus_tridiag(h, n, row, base.first(n), y_out.first(n), ws.cp);
    st.stage_solves++;
    const double j_top = absorbing ? a[n] * y_out[n - 1] : 0.0;
    y_out[n] = base[n] + h * static_cast<double>(n + 1) * j_top;
    return true;
  }

  double conserved(std::span<const double> y) const {
    NeumaierSum s;
    for (std::size_t i = 0; i < n_; ++i) s.add(static_cast<double>(i + 1) * y[i]);
    s.add(y[n_]);
    return s.value();
  }

  double clip_negatives(std::span<double> y) const {
    double clipped = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (y[i] < 0.0) {
        const double dm = static_cast<double>(i + 1) * y[i];
        y[n_] += dm;
        clipped += -dm;
        y[i] = 0.0;
      }
    }
    return clipped;
  }

 private:
  const RateModel* m_;
  TruncationPolicy policy_;
  std::size_t n_;
};

struct DiffusionSample {
  DiffusionState state;
  double mass_drift = 0.0;
};

struct DiffusionTrajectory {
  std::vector<DiffusionSample> samples;
  double mass0 = 0.0;
  IntegrationStats stats;
};

inline DiffusionTrajectory integrate_diffusion(const RateModel& m, const DiffusionState& s0,
                                               const IntegratorConfig& cfg,
                                               std::span<const double> schedule,
                                               TruncationPolicy policy = TruncationPolicy::Reflecting) {
  if (s0.c.size() != m.n_max())
    throw std::invalid_argument("integrate_diffusion: state size must match model cache");
  DiffusionSystem sys(m, policy);
  std::vector<double> y0(s0.c.size() + 1);
  std::copy(s0.c.begin(), s0.c.end(), y0.begin());
  y0[s0.c.size()] = s0.leaked_mass;
  DiffusionTrajectory tr;
  tr.mass0 = sys.conserved(y0);
  const Method method = resolve_method(cfg, m.lambda(), m.n_max());
  tr.stats = integrate_observe(
      sys, y0, s0.t, cfg, method, schedule, [&](double t, std::span<const double> y, double drift) {
        DiffusionSample smp;
        smp.state.t = t;
        smp.state.c.assign(y.begin(), y.end() - 1);
        smp.state.leaked_mass = y.back();
        smp.mass_drift = drift;
        tr.samples.push_back(std::move(smp));
      });
  return tr;
}

// E_k = C_k - C~_k, componentwise difference of tail vectors.
inline std::vector<double> comparison_defect(std::span<const double> full_tails,
                                             std::span<const double> diff_tails) {
  if (full_tails.size() != diff_tails.size())
    throw std::invalid_argument("comparison_defect: tail vectors differ in length");
  std::vector<double> e(full_tails.size());
  for (std::size_t i = 0; i < e.size(); ++i) e[i] = full_tails[i] - diff_tails[i];
  return e;
}

struct CoupledRun {
  Trajectory full;
  DiffusionTrajectory diffusion;
  bool comparison_valid = false;  // f(0) <= 1/kappa checked at launch
};

// Integrate the full system and the pure-diffusion system from the same
// cluster data on the same schedule and policy.
inline CoupledRun coupled_run(const RateModel& m, const SimState& s0, const IntegratorConfig& cfg,
                              std::span<const double> schedule,
                              TruncationPolicy policy = TruncationPolicy::Reflecting) {
  CoupledRun out;
  out.comparison_valid = s0.f <= 1.0 / m.kappa() + 1e-15;
  out.full = integrate(m, s0, cfg, schedule, policy);
  DiffusionState d0;
  d0.t = s0.t;
  d0.c = s0.c;
  out.diffusion = integrate_diffusion(m, d0, cfg, schedule, policy);
  return out;
}

}  // namespace bdlab
