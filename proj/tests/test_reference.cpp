/// @file test_reference.cpp
/// @brief Semi-implicit reference solver and the Leray-Hopf diagnostics.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "wide/error.hpp"
#include "wide/minimizer.hpp"
#include "wide/reference.hpp"
#include "wide/torus.hpp"

using namespace wide;

namespace {

Field tg_plus(const TorusGrid& g, double shear = 0.3) {
  Field u = Field::vector(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto i = g.multi_index(k);
    const double x = g.coord(i[0]), y = g.coord(i[1]);
    u(k, 0) = std::sin(x) * std::cos(y) + shear * std::sin(2 * y);
    u(k, 1) = -std::cos(x) * std::sin(y);
  }
  return u;
}

double balance_defect(const Trajectory& tr, const ConstitutiveLaw& law) {
  double worst = 0.0;
  for (std::size_t m = 0; m + 1 < tr.size(); ++m) {
    const double dt = tr.t[m + 1] - tr.t[m];
    worst = std::max(worst, std::abs(energy(tr.u[m + 1]) - energy(tr.u[m]) + dt * dissipation_rate(tr.u[m + 1], law)));
  }
  return worst;
}

}  // namespace

TEST_CASE("heat decay of a Stokes mode") {
  const TorusGrid g(2, 16);
  const auto law = ConstitutiveLaw::newtonian(0.5, 2);
  for (int kx : {1}) {
    Field u0 = Field::vector(g);
    for (std::size_t k = 0; k < g.size(); ++k) u0(k, 1) = std::sin(kx * g.coord(g.multi_index(k)[0]));
    ReferenceConfig c;
    c.dt = 1e-3;
    c.t_end = 0.5;
    c.stokes = true;
    ReferenceStats st;
    const auto tr = run_reference(c, u0, law, &st);
    CHECK(st.steps == 500);
    CHECK(st.max_inner <= 2);
    const double amp = inner(tr.u.back(), u0) / inner(u0, u0);
    const double ex = std::exp(-0.5 * kx * kx * 0.5);
    CHECK(std::abs(amp - ex) / ex <= 1e-4);
    CHECK(tr.scheme == "reference");
  }
}

TEST_CASE("zero datum and errors") {
  const TorusGrid g(2, 16);
  const auto law = ConstitutiveLaw::power_law(2.5, 0.5, 2);
  ReferenceConfig c;
  c.t_end = 0.05;
  const auto tr = run_reference(c, Field::vector(g), law);
  for (const auto& f : tr.u) CHECK(f.max_abs() == 0.0);

  Field big = tg_plus(g);
  big *= 100.0;
  ReferenceConfig fast;
  fast.dt = 0.05;
  fast.t_end = 0.1;
  try {
    run_reference(fast, big, law);
    FAIL("expected CFLViolation");
  } catch (const Error& e) {
    CHECK(e.kind() == "CFLViolation");
  }
  ReferenceConfig tight;
  tight.t_end = 0.01;
  tight.max_inner = 1;
  try {
    run_reference(tight, tg_plus(g), ConstitutiveLaw::power_law(3.0, 0.5, 2));
    FAIL("expected StepSolveFailure");
  } catch (const Error& e) {
    CHECK(e.kind() == "StepSolveFailure");
  }
  Field notdiv = random_field(g, 2, 3, 5);
  CHECK_THROWS_AS(run_reference(c, notdiv, law), Error);
}

TEST_CASE("Taylor-Green runs keep the invariants") {
  const TorusGrid g(2, 32);
  for (double p : {1.8, 2.5}) {
    const auto law = ConstitutiveLaw::power_law(p, 0.5, 2);
    ReferenceConfig c;
    c.dt = 2e-3;
    c.t_end = 0.4;
    const auto tr = run_reference(c, tg_plus(g), law);
    const auto R = energy_report(tr, law);
    CHECK(R.min_r_ineq() >= -1e-6);
    CHECK(R.min_D() >= -1e-12);
    for (const auto& u : tr.u) {
      CHECK(lp_norm(divergence(u), 2.0) <= 1e-10);
      for (double mv : u.mean()) CHECK(std::abs(mv) <= 1e-10);
      const double un = lp_norm(u, 2.0);
      CHECK(std::abs(inner(convect(u), u)) <= 1e-10 * std::max(1.0, un * un * un));
    }
    const auto lh = leray_hopf_check(tr, law, tg_plus(g));
    CHECK(lh.pass());
    CHECK(lh.weak_residual <= 1e-8);
  }
}

TEST_CASE("discrete energy balance is second order") {
  const TorusGrid g(2, 16);
  const auto law = ConstitutiveLaw::power_law(2.5, 0.5, 2);
  ReferenceConfig c;
  c.stokes = true;
  c.t_end = 0.2;
  c.dt = 4e-3;
  const double a = balance_defect(run_reference(c, tg_plus(g), law), law);
  c.dt = 2e-3;
  const double b = balance_defect(run_reference(c, tg_plus(g), law), law);
  CHECK(std::log2(a / b) >= 1.8);
  // energy never increases in Stokes mode
  const auto tr = run_reference(c, tg_plus(g), law);
  for (std::size_t m = 0; m + 1 < tr.size(); ++m) CHECK(energy(tr.u[m + 1]) <= energy(tr.u[m]));
}

TEST_CASE("test battery") {
  const TorusGrid g2(2, 16), g3(3, 16);
  const auto b2 = test_battery(g2);
  // half of the 48 lattice points with 0 < |k| <= 4, cos and sin
  CHECK(b2.size() == 48 / 2 * 2 + 16);
  for (const auto& f : b2) CHECK(lp_norm(divergence(f), 2.0) <= 1e-12 * lp_norm(f, 2.0));
  const auto b3 = test_battery(g3, 2, 0);
  // lattice points with 0 < |k|^2 <= 4 in 3D: 6 + 12 + 8 + 6 = 32, halved, 2 polarisations, cos and sin
  CHECK(b3.size() == 32 / 2 * 4);
  for (const auto& f : b3) CHECK(lp_norm(divergence(f), 2.0) <= 1e-12 * lp_norm(f, 2.0));
}

TEST_CASE("Leray-Hopf verdicts") {
  const TorusGrid g(2, 16);
  const auto law = ConstitutiveLaw::power_law(2.5, 0.5, 2);
  ReferenceConfig c;
  c.dt = 1e-3;
  c.t_end = 0.2;
  const Field u0 = tg_plus(g);
  const auto tr = run_reference(c, u0, law);
  const auto ok = leray_hopf_check(tr, law, u0);
  CHECK(ok.pass());

  Trajectory pumped = tr;
  pumped.u[100] *= 1.05;
  const auto bad = leray_hopf_check(pumped, law, u0);
  CHECK_FALSE(bad.energy_ok);
  CHECK_FALSE(bad.pass());

  Field other = u0;
  other *= 0.9;
  const auto wrong_ic = leray_hopf_check(tr, law, other);
  CHECK_FALSE(wrong_ic.initial_ok);

  // WIDE minimiser at small eta: the energy inequality holds
  WideConfig w;
  w.eta = 0.05;
  w.t_study = 0.2;
  const auto prep = prepare_initial_data(u0, w.eta, law);
  const auto r = minimize(w, SolverConfig{}, prep.u, law);
  REQUIRE(r.converged);
  const auto lw = leray_hopf_check(r.traj, law, prep.u);
  CHECK(lw.energy_ok);
  CHECK(lw.initial_ok);
  CHECK(std::isfinite(lw.weak_residual));
  MESSAGE("WIDE eta=0.05 weak residual " << lw.weak_residual);
}
