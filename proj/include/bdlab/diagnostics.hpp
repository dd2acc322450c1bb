#pragma once
// Observable functionals of a state: tails, moments, the q_k functionals, the
// tail-equation inhomogeneity G_k, and the pure-diffusion energies. These turn
// the long-time statements into measurable time series.

#include <cmath>
#include <cstddef>
#include <span>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "bdlab/compensated.hpp"
#include "bdlab/model.hpp"

namespace bdlab {

struct DiagnosticSeries {
  std::string name;
  std::vector<std::pair<double, double>> samples;  // (t, value), t strictly increasing

  void add(double t, double v) {
    if (!samples.empty() && !(t > samples.back().first))
      throw std::invalid_argument("DiagnosticSeries: sample times must increase");
    samples.emplace_back(t, v);
  }
};

// C_k = sum_{n=k}^{N} c_n by backward cumulative sum (single pass, all terms
// nonnegative, no cancellation). Index i holds C_{i+1}; C_0 = C_1 is the
// Neumann convention and is left implicit.
inline std::vector<double> tails(std::span<const double> c) {
  std::vector<double> C(c.size());
  double acc = 0.0;
  for (std::size_t i = c.size(); i-- > 0;) {
    acc += c[i];
    C[i] = acc;
  }
  return C;
}

inline std::vector<double> tails(const SimState& s) { return tails(std::span(s.c)); }

// sum n^p c_n over the truncated range
inline double moment(std::span<const double> c, double p) {
  if (!(p >= 0.0)) throw std::invalid_argument("moment: exponent must be nonnegative");
  NeumaierSum s;
  for (std::size_t i = 0; i < c.size(); ++i)
    s.add(std::pow(static_cast<double>(i + 1), p) * c[i]);
  return s.value();
}

inline double moment(const SimState& s, double p) { return moment(std::span(s.c), p); }

// q_k = sum_{n=k+1}^{N} (n-k) c_n
inline double q_functional(std::span<const double> c, std::size_t k) {
  if (k < 1 || k >= c.size())
    throw std::invalid_argument("q_functional: require 1 <= k < N");
  NeumaierSum s;
  for (std::size_t n = k + 1; n <= c.size(); ++n)
    s.add(static_cast<double>(n - k) * c[n - 1]);
  return s.value();
}

inline double q_functional(const SimState& s, std::size_t k) {
  return q_functional(std::span(s.c), k);
}

// G_k = (kappa f - 1) a_{k-1} c_{k-1} with c_0 = 0, so G_1 = 0 always.
inline std::vector<double> inhomogeneity(const RateModel& m, const SimState& s) {
  const double pref = m.kappa() * s.f - 1.0;
  std::vector<double> g(s.c.size());
  g[0] = 0.0;
  for (std::size_t k = 2; k <= s.c.size(); ++k) g[k - 1] = pref * m.rate(k - 1) * s.c[k - 2];
  return g;
}

// Pure-diffusion fluxes J~_n = a_n c_n - b_{n+1} c_{n+1} for n = 0..N, with the
// truncation closure used by the comparison system:
//   Reflecting: the top level is closed (J~_{N-1} keeps only its up-part,
//               J~_N = 0), which conserves sum n c_n exactly;
//   Absorbing:  J~_N = a_N c_N.
inline void diffusion_fluxes(const RateModel& m, std::span<const double> c,
                             TruncationPolicy policy, std::span<double> J) {
  const std::size_t N = c.size();
  const auto a = m.rates();
  J[0] = -c[0];
  for (std::size_t n = 1; n + 1 < N; ++n) J[n] = a[n] * c[n - 1] - a[n + 1] * c[n];
  if (policy == TruncationPolicy::Reflecting) {
    if (N >= 2) J[N - 1] = a[N - 1] * c[N - 2];
    J[N] = 0.0;
  } else {
    if (N >= 2) J[N - 1] = a[N - 1] * c[N - 2] - a[N] * c[N - 1];
    J[N] = a[N] * c[N - 1];
  }
}

// sum n^lambda c_n^2 / 2
inline double lyapunov_energy(const RateModel& m, std::span<const double> c) {
  NeumaierSum s;
  for (std::size_t i = 0; i < c.size(); ++i) s.add(0.5 * m.rate(i + 1) * c[i] * c[i]);
  return s.value();
}

inline double lyapunov_energy(const RateModel& m, const SimState& s) {
  return lyapunov_energy(m, std::span(s.c));
}

// sum_{n>=0} |J~_n|^2 with the pure-diffusion fluxes
inline double flux_energy(const RateModel& m, std::span<const double> c,
                          TruncationPolicy policy = TruncationPolicy::Reflecting) {
  std::vector<double> J(c.size() + 1);
  diffusion_fluxes(m, c, policy, J);
  NeumaierSum s;
  for (double j : J) s.add(j * j);
  return s.value();
}

inline double flux_energy(const RateModel& m, const SimState& s) {
  return flux_energy(m, std::span(s.c));
}

// rho - 1/kappa, clamped at 0 below the critical mass
inline double excess_mass(const RateModel& m, double rho) {
  return std::max(rho - 1.0 / m.kappa(), 0.0);
}

}  // namespace bdlab
