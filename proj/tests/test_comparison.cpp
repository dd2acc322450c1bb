#include <catch2/catch_amalgamated.hpp>

#include <cmath>
#include <random>
#include <vector>

#include "bdlab/comparison.hpp"
#include "bdlab/diagnostics.hpp"

using namespace bdlab;

TEST_CASE("diffusion rhs hand example") {
  // lambda = 0, c~_2 = 1 only: J~_1 = -1, J~_2 = 1, so dc~ = (1, -2, 1, 0, ...)
  RateModel m(0.0, 1.0, 6);
  DiffusionState s;
  s.c.assign(6, 0.0);
  s.c[1] = 1.0;
  auto d = diffusion_rhs(m, s);
  CHECK(d.dc[0] == Catch::Approx(1.0));
  CHECK(d.dc[1] == Catch::Approx(-2.0));
  CHECK(d.dc[2] == Catch::Approx(1.0));
  CHECK(d.dc[3] == 0.0);

  DiffusionState z;
  z.c.assign(6, 0.0);
  auto dz = diffusion_rhs(m, z);
  for (double v : dz.dc) CHECK(v == 0.0);
}

TEST_CASE("diffusion mass rate is exactly zero under reflecting closure") {
  std::mt19937_64 rng(23);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (double lambda : {0.0, 0.5, 1.0}) {
    RateModel m(lambda, 2.0, 40);
    for (int rep = 0; rep < 40; ++rep) {
      DiffusionState s;
      s.c.resize(40);
      for (auto& x : s.c) x = u(rng);
      auto d = diffusion_rhs(m, s);
      NeumaierSum total;
      for (std::size_t i = 0; i < d.dc.size(); ++i)
        total.add(static_cast<double>(i + 1) * d.dc[i]);
      CHECK(std::abs(total.value()) < 1e-12);
      // absorbing: ledger closes through dleaked
      auto da = diffusion_rhs(m, s, TruncationPolicy::Absorbing);
      NeumaierSum ta;
      for (std::size_t i = 0; i < da.dc.size(); ++i)
        ta.add(static_cast<double>(i + 1) * da.dc[i]);
      ta.add(da.dleaked);
      CHECK(std::abs(ta.value()) < 1e-12);
    }
  }
}

TEST_CASE("diffusion implicit stage agrees with the explicit path") {
  const std::size_t n = 200;
  RateModel m(0.5, 2.0, n);
  DiffusionState s0;
  s0.c.assign(n, 0.0);
  s0.c[0] = 1.0;
  std::vector<double> sched{1.0, 5.0, 20.0};
  IntegratorConfig ce;
  ce.method = Method::ExplicitAdaptive;
  ce.rel_tol = 1e-10;
  ce.abs_tol = 1e-14;
  IntegratorConfig ci = ce;
  ci.method = Method::Imex;
  auto te = integrate_diffusion(m, s0, ce, sched);
  auto ti = integrate_diffusion(m, s0, ci, sched);
  for (std::size_t k = 0; k < sched.size(); ++k)
    for (std::size_t i = 0; i < n; i += 11)
      CHECK(te.samples[k].state.c[i] ==
            Catch::Approx(ti.samples[k].state.c[i]).margin(1e-8));
}

TEST_CASE("comparison defect") {
  std::vector<double> a{1.0, 0.5, 0.25};
  std::vector<double> b{0.9, 0.6, 0.25};
  auto e = comparison_defect(a, b);
  CHECK(e[0] == Catch::Approx(0.1));
  CHECK(e[1] == Catch::Approx(-0.1));
  CHECK(e[2] == 0.0);
  std::vector<double> bad{1.0};
  CHECK_THROWS_AS(comparison_defect(a, bad), std::invalid_argument);
}

TEST_CASE("comparison principle: E_k stays below tolerance when f0 <= 1/kappa") {
  const std::size_t n = 600;
  RateModel m(0.5, 2.0, n);
  SimState s0;
  s0.c.assign(n, 0.0);
  s0.c[0] = 1.0;
  s0.f = 0.0;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-14;
  std::vector<double> sched;
  for (int i = 1; i <= 12; ++i) sched.push_back(2.5 * i);
  auto run = coupled_run(m, s0, cfg, sched);
  REQUIRE(run.comparison_valid);
  // identical initial data: E_k(0) = 0 by construction, checked via t=0 sample
  for (std::size_t k = 0; k < sched.size(); ++k) {
    auto cf = tails(run.full.samples[k].state.c);
    auto cd = tails(run.diffusion.samples[k].state.c);
    auto e = comparison_defect(cf, cd);
    for (double v : e) CHECK(v <= 1e-8);
  }
  // supersolution decay: total diffusion cluster count decreases toward 0
  double prev = 1e300;
  for (const auto& smp : run.diffusion.samples) {
    const double count = compensated_sum(smp.state.c);
    CHECK(count <= prev + 1e-12);
    prev = count;
  }
  // pointwise mass bound c~_n <= rho/n
  const double rho = run.full.rho0;
  for (const auto& smp : run.diffusion.samples)
    for (std::size_t i = 0; i < n; ++i)
      CHECK(smp.state.c[i] <= rho / static_cast<double>(i + 1) + 1e-12);
}

TEST_CASE("comparison flag off when f0 exceeds 1/kappa") {
  const std::size_t n = 32;
  RateModel m(0.5, 2.0, n);
  SimState s0;
  s0.c.assign(n, 0.0);
  s0.c[0] = 0.2;
  s0.f = 0.9;  // above 1/kappa = 0.5
  IntegratorConfig cfg;
  std::vector<double> sched{1.0};
  auto run = coupled_run(m, s0, cfg, sched);
  CHECK_FALSE(run.comparison_valid);
}

TEST_CASE("Lyapunov and flux energies decay along diffusion trajectories") {
  const std::size_t n = 400;
  RateModel m(0.5, 1.0, n);
  DiffusionState s0;
  s0.c.assign(n, 0.0);
  s0.c[0] = 1.0;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-14;
  std::vector<double> sched;
  for (int i = 0; i <= 100; ++i) sched.push_back(0.05 + 0.1 * i);
  auto tr = integrate_diffusion(m, s0, cfg, sched);
  double prev_l = 1e300, prev_j = 1e300;
  for (const auto& smp : tr.samples) {
    const double l = lyapunov_energy(m, smp.state.c);
    const double j = flux_energy(m, smp.state.c);
    CHECK(l <= prev_l + 1e-10);
    CHECK(j <= prev_j + 1e-10);
    prev_l = l;
    prev_j = j;
  }
}

TEST_CASE("energy balance: lyapunov(t) + integral of flux energy is conserved") {
  const std::size_t n = 300;
  RateModel m(0.5, 1.0, n);
  DiffusionState s0;
  s0.c.assign(n, 0.0);
  s0.c[0] = 1.0;
  IntegratorConfig cfg;
  cfg.rel_tol = 1e-10;
  cfg.abs_tol = 1e-14;
  // dense uniform grid for Simpson quadrature of the flux energy
  const double T = 6.0, h = 1e-3;
  std::vector<double> sched;
  for (int i = 0; i <= static_cast<int>(T / h + 0.5); ++i) sched.push_back(h * i);
  auto tr = integrate_diffusion(m, s0, cfg, sched);
  std::vector<double> je(tr.samples.size());
  for (std::size_t i = 0; i < tr.samples.size(); ++i)
    je[i] = flux_energy(m, tr.samples[i].state.c);
  // composite Simpson (odd sample count by construction)
  NeumaierSum integ;
  for (std::size_t i = 0; i + 2 < je.size(); i += 2)
    integ.add(h / 3.0 * (je[i] + 4.0 * je[i + 1] + je[i + 2]));
  const double e0 = lyapunov_energy(m, tr.samples.front().state.c);
  const double eT = lyapunov_energy(m, tr.samples.back().state.c);
  CHECK(std::abs(eT + integ.value() - e0) <= 1e-6);
}
