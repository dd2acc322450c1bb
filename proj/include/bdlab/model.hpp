#pragma once
// Modified Becker-Doring system for cell polarization. A monomer pool f in the
// cytosol feeds membrane clusters c_1..c_N through single-monomer steps; the
// spontaneous cytosol->membrane channel is removed (J_0 = -c_1), or kept with
// rate k_on in the variant model. Rates are the power family a_n = b_n = n^lambda.

#include <algorithm>
#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <vector>

#include "bdlab/compensated.hpp"

namespace bdlab {

// Boundary handling at the truncation size N.
//   Reflecting: J_N := 0, nothing crosses N. Mass-exact for the full system.
//   Absorbing:  J_N = kappa*a_N*f*c_N with c_{N+1} := 0; mass crossing into
//               n > N accumulates in the leaked_mass ledger at rate (N+1)*J_N.
enum class TruncationPolicy { Reflecting, Absorbing };

inline const char* to_string(TruncationPolicy p) {
  return p == TruncationPolicy::Reflecting ? "reflecting" : "absorbing";
}

class RateModel {
 public:
  // Caches n^lambda for n = 0..n_max once; pow would otherwise dominate the
  // inner loops. Convention 0^0 = 1 (std::pow already honors it).
  RateModel(double lambda, double kappa, std::size_t n_max, double k_on = 0.0)
      : lambda_(lambda), kappa_(kappa), k_on_(k_on) {
    if (!(lambda >= 0.0 && lambda <= 1.0))
      throw std::invalid_argument("RateModel: lambda must be in [0,1]");
    if (!(kappa > 0.0)) throw std::invalid_argument("RateModel: kappa must be positive");
    if (!(k_on >= 0.0)) throw std::invalid_argument("RateModel: k_on must be nonnegative");
    if (n_max < 2) throw std::invalid_argument("RateModel: n_max must be >= 2");
    rate_.resize(n_max + 1);
    for (std::size_t n = 0; n <= n_max; ++n)
      rate_[n] = std::pow(static_cast<double>(n), lambda_);
  }

  double lambda() const { return lambda_; }
  double kappa() const { return kappa_; }
  double k_on() const { return k_on_; }
  std::size_t n_max() const { return rate_.size() - 1; }

  // a_n = b_n = n^lambda
  double rate(std::size_t n) const { return rate_[n]; }
  std::span<const double> rates() const { return rate_; }

 private:
  double lambda_;
  double kappa_;
  double k_on_;
  std::vector<double> rate_;
};

struct SimState {
  double t = 0.0;
  double f = 0.0;
  std::vector<double> c;  // c[i] = c_{i+1}, clusters of size 1..N
  double leaked_mass = 0.0;

  std::size_t size() const { return c.size(); }
};

// f + sum_{n=1}^{N} n*c_n. Excludes leaked_mass; callers add it when asserting
// conservation against the initial rho.
inline double total_mass(const SimState& s) {
  return s.f + compensated_weighted_sum(s.c);
}

inline double mass_with_ledger(const SimState& s) { return total_mass(s) + s.leaked_mass; }

// Net flux through the n -> n+1 channel:
//   J_0 = k_on*f - c_1           (k_on = 0 in the main model)
//   J_n = kappa*n^l*f*c_n - (n+1)^l*c_{n+1}   for 1 <= n < N
//   J_N per truncation policy.
inline double flux(const RateModel& m, double f, std::span<const double> c, std::size_t n,
                   TruncationPolicy policy = TruncationPolicy::Reflecting) {
  const std::size_t N = c.size();
  if (n > N) throw std::invalid_argument("flux: index " + std::to_string(n) +
                                         " out of range (N = " + std::to_string(N) + ")");
  if (N > m.n_max()) throw std::invalid_argument("flux: state larger than model cache");
  if (n == 0) return m.k_on() * f - c[0];
  if (n == N)
    return policy == TruncationPolicy::Reflecting ? 0.0 : m.kappa() * m.rate(N) * f * c[N - 1];
  return m.kappa() * m.rate(n) * f * c[n - 1] - m.rate(n + 1) * c[n];
}

struct Derivative {
  double df = 0.0;
  std::vector<double> dc;
  double dleaked = 0.0;
};

// Low-level right-hand side over raw spans; the integrator calls this on its
// flat state layout. Writes dc_n = J_{n-1} - J_n and df = -sum_{n=0}^{N} J_n.
// The algebraic identity df + sum n*dc_n + dleaked = 0 holds exactly (in exact
// arithmetic) for both policies; fixed summation order keeps runs deterministic.
inline void cluster_rhs(const RateModel& m, TruncationPolicy policy, double f,
                        std::span<const double> c, double& df, std::span<double> dc,
                        double& dleaked) {
  const std::size_t N = c.size();
  const double kf = m.kappa() * f;
  const auto a = m.rates();
  NeumaierSum fsum;
  double j_prev = m.k_on() * f - c[0];  // J_0
  fsum.add(j_prev);
  for (std::size_t n = 1; n < N; ++n) {
    const double j = kf * a[n] * c[n - 1] - a[n + 1] * c[n];
    dc[n - 1] = j_prev - j;
    fsum.add(j);
    j_prev = j;
  }
  double j_top = 0.0;
  if (policy == TruncationPolicy::Absorbing) {
    j_top = kf * a[N] * c[N - 1];
    fsum.add(j_top);
  }
  dc[N - 1] = j_prev - j_top;
  df = -fsum.value();
  dleaked = policy == TruncationPolicy::Absorbing ? static_cast<double>(N + 1) * j_top : 0.0;
}

inline Derivative rhs(const RateModel& m, const SimState& s,
                      TruncationPolicy policy = TruncationPolicy::Reflecting) {
  if (s.c.empty()) throw std::invalid_argument("rhs: empty state");
  if (s.c.size() > m.n_max()) throw std::invalid_argument("rhs: state larger than model cache");
  Derivative d;
  d.dc.resize(s.c.size());
  cluster_rhs(m, policy, s.f, s.c, d.df, d.dc, d.dleaked);
  return d;
}

struct EquilibriumLadder {
  std::vector<double> Q;  // Q[i] = Q_{i+1}, Q_1 = 1
};

// Q_n = prod_{i=1}^{n-1} a_i / prod_{i=2}^{n} b_i, built in log space from the
// per-step ratios a_{n-1}/b_n so large N neither overflows nor cancels.
inline EquilibriumLadder equilibrium_ladder(const RateModel& m, std::size_t N) {
  if (N < 1) throw std::invalid_argument("equilibrium_ladder: N must be >= 1");
  EquilibriumLadder out;
  out.Q.resize(N);
  out.Q[0] = 1.0;
  NeumaierSum logq;
  for (std::size_t n = 2; n <= N; ++n) {
    logq.add(m.lambda() * std::log(static_cast<double>(n - 1) / static_cast<double>(n)));
    out.Q[n - 1] = std::exp(logq.value());
  }
  return out;
}

// Exact solution of the lambda = 1 monomer equation d_t f = (1 - kappa f)(rho - f).
// Separable with roots 1/kappa and rho; the double root kappa*rho = 1 gets its
// own branch. Stable for large t (no overflow in the exponential).
inline double f_closed_form(const RateModel& m, double rho, double f0, double t) {
  if (std::abs(m.lambda() - 1.0) > 1e-12)
    throw std::invalid_argument("f_closed_form: model must have lambda = 1");
  if (!(f0 >= 0.0 && f0 <= rho))
    throw std::invalid_argument("f_closed_form: require 0 <= f0 <= rho");
  const double kappa = m.kappa();
  const double r1 = 1.0 / kappa;
  const double r2 = rho;
  if (std::abs(kappa * rho - 1.0) < 1e-14) {
    // double root: d_t f = kappa (rho - f)^2
    return rho - (rho - f0) / (1.0 + kappa * (rho - f0) * t);
  }
  if (f0 == r1 || f0 == r2) return f0;  // fixed points
  const double s = kappa * (r2 - r1);
  const double B = (r2 - f0) / (r1 - f0);
  const double st = s * t;
  if (st > 350.0) {
    // B*e^{st} dominates: f -> r1 with an exponentially small correction
    return r1 - (r2 - r1) * std::exp(-st) / B;
  }
  return r1 + (r1 - r2) / (B * std::exp(st) - 1.0);
}

// --- k_on > 0 variant equilibria -------------------------------------------
// With J_0 = k_on f - c_1 the equilibria have the classical Becker-Doring shape
// c_n = Q_n k_on kappa^{n-1} f^n with f fixed by the mass constraint.

inline std::vector<double> kon_equilibrium_profile(const RateModel& m, double f, std::size_t N) {
  if (m.k_on() <= 0.0)
    throw std::invalid_argument("kon_equilibrium_profile: model has k_on = 0");
  const EquilibriumLadder lad = equilibrium_ladder(m, N);
  std::vector<double> c(N);
  const double lkf = std::log(m.kappa() * f);
  const double base = std::log(m.k_on()) - std::log(m.kappa());
  for (std::size_t n = 1; n <= N; ++n)
    c[n - 1] = std::exp(std::log(lad.Q[n - 1]) + base + static_cast<double>(n) * lkf);
  return c;
}

inline double kon_equilibrium_mass(const RateModel& m, double f, std::size_t N) {
  const std::vector<double> c = kon_equilibrium_profile(m, f, N);
  return f + compensated_weighted_sum(c);
}

// Bisection for the equilibrium monomer level solving
//   rho = f + k_on sum_n n Q_n kappa^{n-1} f^n   (truncated at N).
inline double kon_equilibrium_monomer(const RateModel& m, double rho, std::size_t N) {
  if (!(rho > 0.0)) throw std::invalid_argument("kon_equilibrium_monomer: rho must be positive");
  double lo = 0.0;
  double hi = std::min(rho, (1.0 - 1e-12) / m.kappa());
  for (int it = 0; it < 200; ++it) {
    const double mid = 0.5 * (lo + hi);
    if (kon_equilibrium_mass(m, mid, N) < rho)
      lo = mid;
    else
      hi = mid;
  }
  return 0.5 * (lo + hi);
}

}  // namespace bdlab
