#pragma once
// Time integration for the truncated cluster system and its relatives.
//
// Two methods behind one controller:
//   * explicit-adaptive: embedded Dormand-Prince 5(4), the workhorse for
//     lambda < 1 and moderate N;
//   * imex: L-stable two-stage SDIRK (gamma = 1 - 1/sqrt(2)) whose stages are
//     solved exactly -- a scalar secant iteration on the monomer pool wrapped
//     around an O(N) tridiagonal solve of the cluster block. This removes the
//     O(N^lambda) stability limit entirely.
//
// Both methods are Runge-Kutta schemes, so the linear mass functional
// f + sum n c_n + leaked is preserved to roundoff as long as the stage
// equations hold; the stage solver enforces them to ~1e-13.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstddef>
#include <limits>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdlab/compensated.hpp"
#include "bdlab/model.hpp"
#include "bdlab/tridiag.hpp"

namespace bdlab {

enum class Method { Auto, ExplicitAdaptive, Imex };
enum class NegativityPolicy { ClipAndLog, RejectStep };
enum class StopReason { ScheduleComplete, CriterionMet, HorizonReached };

inline const char* to_string(Method m) {
  switch (m) {
    case Method::Auto: return "auto";
    case Method::ExplicitAdaptive: return "explicit-adaptive";
    case Method::Imex: return "imex";
  }
  return "?";
}

inline const char* to_string(StopReason r) {
  switch (r) {
    case StopReason::ScheduleComplete: return "schedule-complete";
    case StopReason::CriterionMet: return "criterion-met";
    case StopReason::HorizonReached: return "horizon-reached";
  }
  return "?";
}

struct IntegratorConfig {
  Method method = Method::Auto;
  double rel_tol = 1e-8;
  double abs_tol = 1e-12;
  double max_step = 50.0;
  double min_step = 1e-13;
  NegativityPolicy negativity = NegativityPolicy::ClipAndLog;
  double initial_step = 0.0;  // 0 = choose from the first derivative

  void validate() const {
    if (!(rel_tol > 0.0) || !(abs_tol > 0.0))
      throw std::invalid_argument("IntegratorConfig: tolerances must be positive");
    if (!(min_step > 0.0) || !(min_step <= max_step))
      throw std::invalid_argument("IntegratorConfig: require 0 < min_step <= max_step");
  }
};

// Spec rule: implicit stages only pay off where the linear part is stiff.
inline Method resolve_method(const IntegratorConfig& cfg, double lambda, std::size_t n) {
  if (cfg.method != Method::Auto) return cfg.method;
  return (lambda == 1.0 && n >= 10000) ? Method::Imex : Method::ExplicitAdaptive;
}

struct IntegrationStats {
  std::size_t steps_accepted = 0;
  std::size_t steps_rejected = 0;
  std::size_t rhs_evals = 0;
  std::size_t stage_solves = 0;
  std::size_t secant_iters = 0;
  double clipped_mass = 0.0;  // |ledger adjustments| from negativity clipping
  double min_component = 0.0;  // most negative value seen in accepted steps
  double wall_seconds = 0.0;
};

struct SolverFailure : std::runtime_error {
  double t_fail;
  SolverFailure(const std::string& msg, double t) : std::runtime_error(msg), t_fail(t) {}
};

// Raised when the explicit method underflows its step size; the message points
// at method=imex, which has no stability limit here.
struct StiffnessFailure : SolverFailure {
  using SolverFailure::SolverFailure;
};

struct StageScratch {
  std::vector<double> cp;   // elimination scratch
  std::vector<double> sol;  // candidate cluster block during secant iterations
};

// ---------------------------------------------------------------------------
// Cluster system: flat layout [c_1..c_N, f, leaked].
// ---------------------------------------------------------------------------
class ClusterSystem {
 public:
  ClusterSystem(const RateModel& m, TruncationPolicy policy) : m_(&m), policy_(policy) {
    n_ = m.n_max();
  }

  std::size_t clusters() const { return n_; }
  std::size_t dim() const { return n_ + 2; }
  const RateModel& model() const { return *m_; }
  TruncationPolicy policy() const { return policy_; }

  void eval_rhs(double, std::span<const double> y, std::span<double> dy) const {
    double df, dleak;
    cluster_rhs(*m_, policy_, y[n_], y.first(n_), df, dy.first(n_), dleak);
    dy[n_] = df;
    dy[n_ + 1] = dleak;
  }

  // Solve Y = base + h F(Y). The cluster block is linear tridiagonal once the
  // stage value of f is fixed, so iterate a secant on the scalar residual
  // r(f) = f - base_f - h*df(f, c(f)), one Thomas solve per evaluation.
  bool solve_stage(double, double h, std::span<const double> base, std::span<const double> hint,
                   std::span<double> y_out, StageScratch& ws, IntegrationStats& st) const {
    const std::size_t n = n_;
    ws.cp.resize(n);
    ws.sol.resize(n);
    const double base_f = base[n];

    // ws.sol always holds the cluster solve for the most recent f candidate,
    // so the final assignment below stays consistent with f_cur.
    double f_prev = hint.empty() ? base_f : base_f + h * hint[n];
    double r_prev = stage_residual(h, base, f_prev, ws, st);
    const double tol = 1e-13 * std::max(1.0, std::abs(base_f));
    double f_cur = f_prev, r_cur = r_prev;
    if (std::abs(r_prev) > tol) {
      f_cur = f_prev - r_prev;  // dr/df = 1 + O(h * kappa * sum a_n c_n)
      bool converged = false;
      for (int it = 0; it < 30; ++it) {
        r_cur = stage_residual(h, base, f_cur, ws, st);
        if (std::abs(r_cur) <= tol) {
          converged = true;
          break;
        }
        const double denom = r_cur - r_prev;
        double f_next;
        if (denom == 0.0 || !std::isfinite(denom)) {
          f_next = 0.5 * (f_cur + f_prev);
        } else {
          f_next = f_cur - r_cur * (f_cur - f_prev) / denom;
        }
        if (!std::isfinite(f_next)) return false;
        f_prev = f_cur;
        r_prev = r_cur;
        f_cur = f_next;
      }
      if (!converged) {
        r_cur = stage_residual(h, base, f_cur, ws, st);
        if (std::abs(r_cur) > 1e3 * tol) return false;
      }
    }

    // Final assignment uses the flux formulas evaluated at (f_cur, sol) so the
    // realized increments satisfy the algebraic mass identity exactly.
    double df, dleak;
    monomer_rate(f_cur, ws.sol, df, dleak);
    std::copy(ws.sol.begin(), ws.sol.end(), y_out.begin());
    y_out[n] = base_f + h * df;
    y_out[n + 1] = base[n + 1] + h * dleak;
    return true;
  }

  double conserved(std::span<const double> y) const {
    NeumaierSum s;
    for (std::size_t i = 0; i < n_; ++i) s.add(static_cast<double>(i + 1) * y[i]);
    s.add(y[n_]);
    s.add(y[n_ + 1]);
    return s.value();
  }

  // Clip-and-log: negatives zeroed, ledger adjusted through leaked_mass so the
  // conserved functional is untouched. Returns the total |adjustment|.
  double clip_negatives(std::span<double> y) const {
    double clipped = 0.0;
    for (std::size_t i = 0; i < n_; ++i) {
      if (y[i] < 0.0) {
        const double dm = static_cast<double>(i + 1) * y[i];
        y[n_ + 1] += dm;
        clipped += -dm;
        y[i] = 0.0;
      }
    }
    if (y[n_] < 0.0) {
      y[n_ + 1] += y[n_];
      clipped += -y[n_];
      y[n_] = 0.0;
    }
    return clipped;
  }

 private:
  // df = -sum_{n>=0} J_n and the leak rate, for a candidate (f, c).
  void monomer_rate(double f, std::span<const double> c, double& df, double& dleak) const {
    const auto a = m_->rates();
    const double kf = m_->kappa() * f;
    const std::size_t n = n_;
    NeumaierSum fsum;
    fsum.add(m_->k_on() * f - c[0]);
    for (std::size_t i = 1; i < n; ++i) fsum.add(kf * a[i] * c[i - 1] - a[i + 1] * c[i]);
    double j_top = 0.0;
    if (policy_ == TruncationPolicy::Absorbing) {
      j_top = kf * a[n] * c[n - 1];
      fsum.add(j_top);
    }
    df = -fsum.value();
    dleak = policy_ == TruncationPolicy::Absorbing ? static_cast<double>(n + 1) * j_top : 0.0;
  }

  double stage_residual(double h, std::span<const double> base, double f, StageScratch& ws,
                        IntegrationStats& st) const {
    const std::size_t n = n_;
    const auto a = m_->rates();
    const double u = m_->kappa() * f;
    const bool absorbing = policy_ == TruncationPolicy::Absorbing;
    // rhs of the linear system; the k_on source enters c_1
    // (I - h A(u)) c = base_c + h k_on f e_1
    const double b0 = base[0] + h * m_->k_on() * f;
    auto row = [&](std::size_t i) -> TriRow {
      const double lo = i > 0 ? u * a[i] : 0.0;
      const double up = i + 1 < n ? a[i + 2] : 0.0;
      double di = -a[i + 1];
      if (i + 1 < n || absorbing) di -= u * a[i + 1];
      return TriRow{lo, di, up};
    };
    auto bvec = [&](std::size_t i) { return i == 0 ? b0 : base[i]; };
    // inline copy of the fused Thomas sweep with the modified first entry
    {
      TriRow r = row(std::size_t{0});
      double inv = 1.0 / (1.0 - h * r.di);
      ws.cp[0] = -h * r.up * inv;
      ws.sol[0] = bvec(0) * inv;
      for (std::size_t i = 1; i < n; ++i) {
        r = row(i);
        const double lo = -h * r.lo;
        inv = 1.0 / ((1.0 - h * r.di) - lo * ws.cp[i - 1]);
        ws.cp[i] = -h * r.up * inv;
        ws.sol[i] = (bvec(i) - lo * ws.sol[i - 1]) * inv;
      }
      for (std::size_t i = n - 1; i-- > 0;) ws.sol[i] -= ws.cp[i] * ws.sol[i + 1];
    }
    st.stage_solves++;
    st.secant_iters++;
    double df, dleak;
    monomer_rate(f, ws.sol, df, dleak);
    return f - base[n_] - h * df;
  }

  const RateModel* m_;
  TruncationPolicy policy_;
  std::size_t n_;
};

// ---------------------------------------------------------------------------
// Generic adaptive stepper over a System (ClusterSystem, DiffusionSystem,
// TailSystem). Error control: WRMS norm against abs_tol + rel_tol*|y|.
// ---------------------------------------------------------------------------
template <class System>
class Stepper {
 public:
  Stepper(const System& sys, const IntegratorConfig& cfg, Method method)
      : sys_(sys), cfg_(cfg), method_(method) {
    cfg_.validate();
    if (method_ == Method::Auto)
      throw std::invalid_argument("Stepper: method must be resolved before stepping");
    const std::size_t d = sys_.dim();
    y_.assign(d, 0.0);
    ynew_.resize(d);
    est_.resize(d);
    deriv_.resize(d);
    deriv_new_.resize(d);
    if (method_ == Method::Imex) {
      f1_.resize(d);
      base2_.resize(d);
      stage_.resize(d);
    } else {
      for (auto& k : k_) k.resize(d);
      ytmp_.resize(d);
    }
  }

  void set_state(double t, std::span<const double> y) {
    t_ = t;
    std::copy(y.begin(), y.end(), y_.begin());
    deriv_valid_ = false;
    dt_ctrl_ = 0.0;
  }

  double t() const { return t_; }
  std::span<const double> y() const { return y_; }
  std::span<const double> deriv() const { return deriv_; }
  IntegrationStats& stats() { return stats_; }

  void prime() {
    if (!deriv_valid_) {
      eval(t_, y_, deriv_);
      deriv_valid_ = true;
    }
  }

  // One accepted step of size <= dt_cap. Returns the step actually taken.
  double advance(double dt_cap) {
    prime();
    if (dt_ctrl_ == 0.0) dt_ctrl_ = initial_step_guess();
    double dt = std::min({dt_ctrl_, dt_cap, cfg_.max_step});
    const double expo = method_ == Method::Imex ? 0.5 : 0.2;
    for (int rejects = 0;; ++rejects) {
      if (rejects > 200) throw SolverFailure("step rejected 200 times in a row", t_);
      if (dt < cfg_.min_step) {
        if (method_ == Method::ExplicitAdaptive)
          throw StiffnessFailure(
              "step size underflow (stiffness): consider integrator method 'imex'", t_);
        throw SolverFailure("step size underflow in implicit method", t_);
      }
      const bool stage_ok =
          method_ == Method::Imex ? try_sdirk(dt) : try_dp54(dt);
      if (!stage_ok) {
        dt *= 0.25;
        stats_.steps_rejected++;
        continue;
      }
      // negativity control: reject-step refuses candidates below -abs_tol;
      // clip-and-log zeroes negatives after acceptance and moves the mass
      // into the ledger, so stored states never carry negative entries and
      // the clipped total stays visible in the stats
      if (cfg_.negativity == NegativityPolicy::RejectStep) {
        double mn = 0.0;
        for (double v : ynew_) mn = std::min(mn, v);
        if (mn < -cfg_.abs_tol) {
          dt *= 0.25;
          stats_.steps_rejected++;
          continue;
        }
      }
      const double err = wrms_error();
      if (err <= 1.0) {
        double fac = err > 0.0 ? 0.9 * std::pow(err, -expo) : 5.0;
        fac = std::clamp(fac, 0.2, 5.0);
        const bool capped = dt < dt_ctrl_;
        const double cand = dt * fac;
        dt_ctrl_ = capped ? std::max(dt_ctrl_, cand) : cand;
        double mn = 0.0;
        for (double v : ynew_) mn = std::min(mn, v);
        stats_.min_component = std::min(stats_.min_component, mn);
        stats_.clipped_mass += sys_.clip_negatives(ynew_);
        y_.swap(ynew_);
        deriv_.swap(deriv_new_);
        deriv_valid_ = true;
        t_ += dt;
        stats_.steps_accepted++;
        return dt;
      }
      double fac = std::isfinite(err) ? std::clamp(0.9 * std::pow(err, -expo), 0.1, 0.5) : 0.1;
      dt *= fac;
      stats_.steps_rejected++;
    }
  }

 private:
  void eval(double t, std::span<const double> y, std::span<double> dy) {
    sys_.eval_rhs(t, y, dy);
    stats_.rhs_evals++;
  }

  double initial_step_guess() {
    if (cfg_.initial_step > 0.0) return std::min(cfg_.initial_step, cfg_.max_step);
    // scale so the first explicit increment stays ~1% of the tolerance profile
    NeumaierSum acc;
    const std::size_t d = sys_.dim();
    for (std::size_t i = 0; i < d; ++i) {
      const double sc = cfg_.abs_tol + cfg_.rel_tol * std::abs(y_[i]);
      const double q = deriv_[i] / sc;
      acc.add(q * q);
    }
    const double dnorm = std::sqrt(acc.value() / static_cast<double>(d));
    double h = dnorm > 1e-8 ? 0.01 / dnorm : 1e-6;
    return std::clamp(h, cfg_.min_step, cfg_.max_step);
  }

  double wrms_error() const {
    NeumaierSum acc;
    const std::size_t d = sys_.dim();
    for (std::size_t i = 0; i < d; ++i) {
      const double sc =
          cfg_.abs_tol + cfg_.rel_tol * std::max(std::abs(y_[i]), std::abs(ynew_[i]));
      const double q = est_[i] / sc;
      acc.add(q * q);
    }
    return std::sqrt(acc.value() / static_cast<double>(d));
  }

  bool try_sdirk(double dt) {
    static constexpr double kGamma = 0.29289321881345247;  // 1 - 1/sqrt(2), L-stable
    const double hg = kGamma * dt;
    const std::size_t d = sys_.dim();
    if (!sys_.solve_stage(t_ + hg, hg, y_, deriv_, stage_, ws_, stats_)) return false;
    for (std::size_t i = 0; i < d; ++i) f1_[i] = (stage_[i] - y_[i]) / hg;
    for (std::size_t i = 0; i < d; ++i) base2_[i] = y_[i] + (1.0 - kGamma) * dt * f1_[i];
    if (!sys_.solve_stage(t_ + dt, hg, base2_, f1_, ynew_, ws_, stats_)) return false;
    const double ec = dt * (0.5 - kGamma);
    for (std::size_t i = 0; i < d; ++i) {
      deriv_new_[i] = (ynew_[i] - base2_[i]) / hg;  // F(Y2), reused as the next hint
      est_[i] = ec * (f1_[i] - deriv_new_[i]);
    }
    return true;
  }

  bool try_dp54(double dt) {
    // Dormand-Prince 5(4), FSAL; k1 lives in deriv_.
    static constexpr double a21 = 1.0 / 5;
    static constexpr double a31 = 3.0 / 40, a32 = 9.0 / 40;
    static constexpr double a41 = 44.0 / 45, a42 = -56.0 / 15, a43 = 32.0 / 9;
    static constexpr double a51 = 19372.0 / 6561, a52 = -25360.0 / 2187,
                            a53 = 64448.0 / 6561, a54 = -212.0 / 729;
    static constexpr double a61 = 9017.0 / 3168, a62 = -355.0 / 33, a63 = 46732.0 / 5247,
                            a64 = 49.0 / 176, a65 = -5103.0 / 18656;
    static constexpr double b1 = 35.0 / 384, b3 = 500.0 / 1113, b4 = 125.0 / 192,
                            b5 = -2187.0 / 6784, b6 = 11.0 / 84;
    static constexpr double e1 = 71.0 / 57600, e3 = -71.0 / 16695, e4 = 71.0 / 1920,
                            e5 = -17253.0 / 339200, e6 = 22.0 / 525, e7 = -1.0 / 40;
    const std::size_t d = sys_.dim();
    const auto& k1 = deriv_;
    for (std::size_t i = 0; i < d; ++i) ytmp_[i] = y_[i] + dt * a21 * k1[i];
    eval(t_ + dt / 5, ytmp_, k_[1]);
    for (std::size_t i = 0; i < d; ++i)
      ytmp_[i] = y_[i] + dt * (a31 * k1[i] + a32 * k_[1][i]);
    eval(t_ + 3 * dt / 10, ytmp_, k_[2]);
    for (std::size_t i = 0; i < d; ++i)
      ytmp_[i] = y_[i] + dt * (a41 * k1[i] + a42 * k_[1][i] + a43 * k_[2][i]);
    eval(t_ + 4 * dt / 5, ytmp_, k_[3]);
    for (std::size_t i = 0; i < d; ++i)
      ytmp_[i] =
          y_[i] + dt * (a51 * k1[i] + a52 * k_[1][i] + a53 * k_[2][i] + a54 * k_[3][i]);
    eval(t_ + 8 * dt / 9, ytmp_, k_[4]);
    for (std::size_t i = 0; i < d; ++i)
      ytmp_[i] = y_[i] + dt * (a61 * k1[i] + a62 * k_[1][i] + a63 * k_[2][i] +
                               a64 * k_[3][i] + a65 * k_[4][i]);
    eval(t_ + dt, ytmp_, k_[5]);
    for (std::size_t i = 0; i < d; ++i)
      ynew_[i] = y_[i] + dt * (b1 * k1[i] + b3 * k_[2][i] + b4 * k_[3][i] + b5 * k_[4][i] +
                               b6 * k_[5][i]);
    eval(t_ + dt, ynew_, deriv_new_);  // k7 = FSAL derivative at the new point
    for (std::size_t i = 0; i < d; ++i)
      est_[i] = dt * (e1 * k1[i] + e3 * k_[2][i] + e4 * k_[3][i] + e5 * k_[4][i] +
                      e6 * k_[5][i] + e7 * deriv_new_[i]);
    return true;
  }

  const System& sys_;
  IntegratorConfig cfg_;
  Method method_;
  double t_ = 0.0;
  double dt_ctrl_ = 0.0;
  bool deriv_valid_ = false;
  std::vector<double> y_, ynew_, est_, deriv_, deriv_new_;
  std::vector<double> f1_, base2_, stage_;  // sdirk
  std::vector<double> k_[5], ytmp_;         // dp54 (k2..k6)
  StageScratch ws_;
  IntegrationStats stats_;
};

// ---------------------------------------------------------------------------
// Schedule-driven integration with an observer called at each sample time.
// ---------------------------------------------------------------------------
namespace detail {
inline double time_eps(double t) { return 1e-12 * std::max(1.0, std::abs(t)); }
}  // namespace detail

template <class System, class Observer>
IntegrationStats integrate_observe(const System& sys, std::span<const double> y0, double t0,
                                   const IntegratorConfig& cfg, Method method,
                                   std::span<const double> schedule, Observer&& obs) {
  for (std::size_t i = 0; i + 1 < schedule.size(); ++i)
    if (!(schedule[i] < schedule[i + 1]))
      throw std::invalid_argument("integrate: schedule must be strictly increasing");
  if (!schedule.empty() && schedule.front() < t0 - detail::time_eps(t0))
    throw std::invalid_argument("integrate: schedule starts before the initial time");

  Stepper<System> stepper(sys, cfg, method);
  stepper.set_state(t0, y0);
  const auto t_start = std::chrono::steady_clock::now();
  const double m0 = sys.conserved(y0);

  std::size_t idx = 0;
  if (!schedule.empty() && std::abs(schedule.front() - t0) <= detail::time_eps(t0)) {
    obs(t0, stepper.y(), 0.0);
    idx = 1;
  }
  for (; idx < schedule.size(); ++idx) {
    const double target = schedule[idx];
    while (stepper.t() < target - detail::time_eps(target))
      stepper.advance(target - stepper.t());
    obs(target, stepper.y(), sys.conserved(stepper.y()) - m0);
  }
  IntegrationStats st = stepper.stats();
  st.wall_seconds = std::chrono::duration<double>(std::chrono::steady_clock::now() - t_start).count();
  return st;
}

// ---------------------------------------------------------------------------
// Typed front-end for the cluster system (the spec's SimState world).
// ---------------------------------------------------------------------------
struct TrajectorySample {
  SimState state;
  double mass_drift = 0.0;  // (f + sum n c_n + leaked) - rho_0
};

struct Trajectory {
  std::vector<TrajectorySample> samples;
  double rho0 = 0.0;
  IntegrationStats stats;
  StopReason stop_reason = StopReason::ScheduleComplete;

  const SimState& final_state() const { return samples.back().state; }
};

namespace detail {
inline std::vector<double> pack_state(const SimState& s) {
  std::vector<double> y(s.c.size() + 2);
  std::copy(s.c.begin(), s.c.end(), y.begin());
  y[s.c.size()] = s.f;
  y[s.c.size() + 1] = s.leaked_mass;
  return y;
}

inline SimState unpack_state(double t, std::span<const double> y) {
  SimState s;
  const std::size_t n = y.size() - 2;
  s.t = t;
  s.c.assign(y.begin(), y.begin() + n);
  s.f = y[n];
  s.leaked_mass = y[n + 1];
  return s;
}
}  // namespace detail

template <class Observer>
IntegrationStats integrate_cluster_observe(const RateModel& m, const SimState& s0,
                                           const IntegratorConfig& cfg,
                                           std::span<const double> schedule,
                                           TruncationPolicy policy, Observer&& obs) {
  if (s0.c.size() != m.n_max())
    throw std::invalid_argument("integrate: state size must match the model cache");
  ClusterSystem sys(m, policy);
  const auto y0 = detail::pack_state(s0);
  const Method method = resolve_method(cfg, m.lambda(), m.n_max());
  return integrate_observe(sys, y0, s0.t, cfg, method, schedule, obs);
}

inline Trajectory integrate(const RateModel& m, const SimState& s0, const IntegratorConfig& cfg,
                            std::span<const double> schedule,
                            TruncationPolicy policy = TruncationPolicy::Reflecting) {
  Trajectory tr;
  tr.rho0 = mass_with_ledger(s0);
  tr.stats = integrate_cluster_observe(
      m, s0, cfg, schedule, policy, [&](double t, std::span<const double> y, double drift) {
        tr.samples.push_back({detail::unpack_state(t, y), drift});
      });
  return tr;
}

// One accepted step with dt <= dt_target (the controller may shorten it).
inline SimState step(const RateModel& m, const SimState& s, const IntegratorConfig& cfg,
                     double dt_target, TruncationPolicy policy = TruncationPolicy::Reflecting) {
  if (!(dt_target > 0.0)) throw std::invalid_argument("step: dt_target must be positive");
  if (s.c.size() != m.n_max())
    throw std::invalid_argument("step: state size must match the model cache");
  ClusterSystem sys(m, policy);
  Stepper<ClusterSystem> stepper(sys, cfg, resolve_method(cfg, m.lambda(), m.n_max()));
  const auto y0 = detail::pack_state(s);
  stepper.set_state(s.t, y0);
  stepper.advance(dt_target);
  return detail::unpack_state(stepper.t(), stepper.y());
}

struct QuasiStationarity {
  double df_threshold = 1e-10;
  double horizon = 1e4;
  double sample_factor = 2.0;  // geometric spacing of stored snapshots
};

inline Trajectory run_to_quasi_stationarity(const RateModel& m, const SimState& s0,
                                            const IntegratorConfig& cfg,
                                            const QuasiStationarity& crit,
                                            TruncationPolicy policy = TruncationPolicy::Reflecting) {
  if (s0.c.size() != m.n_max())
    throw std::invalid_argument("run_to_quasi_stationarity: state size mismatch");
  ClusterSystem sys(m, policy);
  Stepper<ClusterSystem> stepper(sys, cfg, resolve_method(cfg, m.lambda(), m.n_max()));
  const auto y0 = detail::pack_state(s0);
  stepper.set_state(s0.t, y0);
  stepper.prime();

  Trajectory tr;
  tr.rho0 = mass_with_ledger(s0);
  const double m0 = sys.conserved(y0);
  const std::size_t fidx = m.n_max();
  auto emit = [&]() {
    tr.samples.push_back({detail::unpack_state(stepper.t(), stepper.y()),
                          sys.conserved(stepper.y()) - m0});
  };
  emit();
  if (std::abs(stepper.deriv()[fidx]) < crit.df_threshold) {
    tr.stop_reason = StopReason::CriterionMet;
    tr.stats = stepper.stats();
    return tr;
  }
  double next_emit = 0.0;
  while (true) {
    const double remaining = crit.horizon - stepper.t();
    if (remaining <= detail::time_eps(crit.horizon)) {
      tr.stop_reason = StopReason::HorizonReached;
      break;
    }
    stepper.advance(remaining);
    if (std::abs(stepper.deriv()[fidx]) < crit.df_threshold) {
      tr.stop_reason = StopReason::CriterionMet;
      break;
    }
    if (stepper.t() >= next_emit) {
      emit();
      next_emit = std::max(stepper.t() * crit.sample_factor, stepper.t() + 1e-6);
    }
  }
  emit();
  tr.stats = stepper.stats();
  return tr;
}

}  // namespace bdlab
