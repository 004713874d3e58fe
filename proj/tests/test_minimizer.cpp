/// @file test_minimizer.cpp
/// @brief Minimisation of the WIDE functional, the Stokes mode oracle and eta sweeps.
#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>

#include "wide/error.hpp"
#include "wide/minimizer.hpp"
#include "wide/torus.hpp"

using namespace wide;

namespace {

Field shear(const TorusGrid& g, int k1, int k2) {
  Field u = Field::vector(g);
  const double kn = std::hypot(k1, k2);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto idx = g.multi_index(k);
    const double s = std::sin(k1 * g.coord(idx[0]) + k2 * g.coord(idx[1]));
    u(k, 0) = k2 / kn * s;
    u(k, 1) = -k1 / kn * s;
  }
  return u;
}

Field taylor_green(const TorusGrid& g) {
  Field u = Field::vector(g);
  for (std::size_t k = 0; k < g.size(); ++k) {
    auto i = g.multi_index(k);
    const double x = g.coord(i[0]), y = g.coord(i[1]);
    u(k, 0) = std::sin(x) * std::cos(y);
    u(k, 1) = -std::cos(x) * std::sin(y);
  }
  return u;
}

WideConfig stokes_config(double eta, double lam) {
  WideConfig c;
  c.eta = eta;
  c.convection = false;
  c.stabiliser = false;
  c.ratio = 1.0;
  c.tau0 = c.tau_cap = std::min(0.002 / std::abs(lam), eta / 100.0);
  c.t_max = 30.0 * eta;
  return c;
}

// a'' = a'/eta + (nu k^2/eta) a by classical RK4
double integrate_mode(double lam, double eta, double nu, double k2, double T) {
  const int steps = 20000;
  const double h = T / steps;
  double a = 1.0, v = lam;
  auto f = [&](double a_, double v_) { return v_ / eta + nu * k2 / eta * a_; };
  for (int i = 0; i < steps; ++i) {
    const double k1a = v, k1v = f(a, v);
    const double k2a = v + 0.5 * h * k1v, k2v = f(a + 0.5 * h * k1a, v + 0.5 * h * k1v);
    const double k3a = v + 0.5 * h * k2v, k3v = f(a + 0.5 * h * k2a, v + 0.5 * h * k2v);
    const double k4a = v + h * k3v, k4v = f(a + h * k3a, v + h * k3v);
    a += h / 6 * (k1a + 2 * k2a + 2 * k3a + k4a);
    v += h / 6 * (k1v + 2 * k2v + 2 * k3v + k4v);
  }
  return a;
}

}  // namespace

TEST_CASE("mode oracle") {
  const auto s = stokes_mode_oracle(1.0, 0.1, 1.0);
  CHECK(s.lambda_minus == doctest::Approx(-0.916080).epsilon(1e-6));
  CHECK(s.lambda_minus == doctest::Approx((1 - std::sqrt(1.4)) / 0.2).epsilon(1e-14));
  CHECK(integrate_mode(s.lambda_minus, 0.1, 1.0, 1.0, 1.0) == doctest::Approx(std::exp(s.lambda_minus)).epsilon(1e-8));
  double prev = 0.0;
  for (double eta : {0.1, 0.05, 0.025}) {
    const double gap = stokes_mode_oracle(1.0, eta, 1.0).lambda_minus + 1.0;
    if (prev != 0.0) CHECK(std::abs(gap / prev - 0.5) <= 0.05);
    prev = gap;
  }
  for (double eta : {1.0, 0.1, 1e-3, 1e-6}) {
    const auto m = stokes_mode_oracle(2.0, eta, 0.5);
    CHECK(m.lambda_minus < 0.0);
    CHECK(m.lambda_minus >= -2.0 - 1e-12);
  }
  CHECK_THROWS_AS(stokes_mode_oracle(0.0, 0.1, 1.0), Error);
  CHECK_THROWS_AS(stokes_mode_oracle(1.0, 0.1, 0.0), Error);
  CHECK_THROWS_AS(stokes_mode_oracle(1.0, 0.0, 1.0), Error);
  const auto tr = stokes_mode_oracle(1.0, 0.2, 1.0, {0.0, 0.5, 1.0});
  CHECK(tr.a[0] == 1.0);
  CHECK(tr.a[2] == doctest::Approx(std::exp(tr.lambda_minus)));
}

TEST_CASE("zero datum") {
  const TorusGrid g(2, 16);
  WideConfig cfg;
  cfg.eta = 0.2;
  const auto r = minimize(cfg, SolverConfig{}, Field::vector(g), ConstitutiveLaw::power_law(2.5, 0.5, 2));
  CHECK(r.iterations == 0);
  CHECK(r.converged);
  for (const auto& f : r.traj.u) CHECK(f.max_abs() == 0.0);
}

TEST_CASE("Stokes mode minimiser matches the oracle") {
  const TorusGrid g(2, 8);
  const auto law = ConstitutiveLaw::newtonian(0.5, 2);
  const double eta = 0.1;
  const auto orc = stokes_mode_oracle(1.0, eta, 0.5);
  const Field u0 = shear(g, 1, 0);
  const auto r = minimize(stokes_config(eta, orc.lambda_minus), SolverConfig{}, u0, law);
  CHECK(r.converged);
  CHECK(r.iterations <= 2);
  const auto a = mode_amplitudes(r.traj, u0);
  double worst = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) {
    if (r.traj.t[m] > 15 * eta) break;
    const double ex = std::exp(orc.lambda_minus * r.traj.t[m]);
    worst = std::max(worst, std::abs(a[m] - ex) / ex);
  }
  CHECK(worst <= 1e-6);
  CHECK(r.value <= r.competitor);
}

TEST_CASE("Taylor-Green, p = 2.5") {
  const TorusGrid g(2, 32);
  const auto law = ConstitutiveLaw::power_law(2.5, 0.5, 2);
  WideConfig cfg;
  cfg.eta = 0.2;
  const auto prep = prepare_initial_data(taylor_green(g), cfg.eta, law);
  SolverConfig s;
  const auto r = minimize(cfg, s, prep.u, law);
  CHECK(r.converged);
  CHECK(r.flag.empty());
  CHECK(r.value <= r.competitor);
  CHECK(r.decrement <= s.grad_tol);
  for (std::size_t i = 1; i < r.history.size(); ++i) CHECK(r.history[i] <= r.history[i - 1]);
  CHECK_NOTHROW(r.traj.validate(1e-10));
  CHECK((r.traj.u[0] - prep.u).max_abs() == 0.0);
  const auto R = energy_report(r.traj, law);
  CHECK(R.min_r_ineq() >= -1e-6);
  CHECK(R.min_D() >= -1e-12);
  // the optimality certificate in the same measure
  Preconditioner P(r.traj, law);
  auto grad = first_variation(r.traj, law);
  std::vector<Field> gi(grad.begin() + 1, grad.end());
  auto pg = P.apply(gi);
  double gpg = 0.0;
  for (std::size_t i = 0; i < gi.size(); ++i) gpg += inner(gi[i], pg[i]);
  CHECK(std::sqrt(gpg / r.competitor) <= s.grad_tol * 1.0001);
}

TEST_CASE("gradient descent and iteration cap") {
  const TorusGrid g(2, 16);
  const auto law = ConstitutiveLaw::power_law(3.0, 0.5, 2);
  WideConfig cfg;
  cfg.eta = 0.3;
  cfg.tau0 = 0.02;
  cfg.tau_cap = 0.05;
  const Field u0 = prepare_initial_data(taylor_green(g), cfg.eta, law).u;
  SolverConfig gd;
  gd.method = Method::GradientDescent;
  gd.grad_tol = 1e-5;
  gd.max_iters = 2000;
  const auto a = minimize(cfg, gd, u0, law);
  CHECK(a.converged);
  for (std::size_t i = 1; i < a.history.size(); ++i) CHECK(a.history[i] <= a.history[i - 1]);
  SolverConfig lb;
  lb.grad_tol = 1e-9;
  const auto b = minimize(cfg, lb, u0, law);
  CHECK(b.converged);
  CHECK(b.value <= a.value + 1e-8 * a.value);
  CHECK(a.value == doctest::Approx(b.value).epsilon(1e-6));
  SolverConfig cap;
  cap.max_iters = 2;
  const auto c = minimize(cfg, cap, u0, law);
  CHECK_FALSE(c.converged);
  CHECK(c.flag == "MaxItersExceeded");
  CHECK(c.iterations == 2);
  CHECK(c.value < c.competitor);
  SolverConfig bad;
  bad.max_iters = 0;
  CHECK_THROWS_AS(minimize(cfg, bad, u0, law), Error);
}

TEST_CASE("eta sweep against the heat-decay reference") {
  const TorusGrid g(2, 8);
  const auto law = ConstitutiveLaw::newtonian(0.5, 2);
  const Field u0 = shear(g, 1, 1);
  const double nu = 0.5, k2 = 2.0, T = 1.0;
  Trajectory ref;
  ref.scheme = "reference";
  for (int m = 0; m <= 200; ++m) {
    ref.t.push_back(T * m / 200.0);
    Field f = u0;
    f *= std::exp(-nu * k2 * ref.t.back());
    ref.u.push_back(f);
  }
  WideConfig base;
  base.convection = false;
  base.stabiliser = false;
  base.ratio = 1.0;
  base.tau0 = base.tau_cap = 0.002;
  const std::vector<double> etas{0.2, 0.1, 0.05, 0.025};
  const auto rep = eta_sweep(etas, u0, law, ref, base, SolverConfig{});
  REQUIRE(rep.rows.size() == 4);
  for (std::size_t i = 1; i < 4; ++i) {
    const double ratio = rep.rows[i].distance / rep.rows[i - 1].distance;
    INFO("eta=", etas[i], " ratio=", ratio);
    CHECK(ratio >= 0.35);
    CHECK(ratio <= 0.65);
  }
  for (const auto& r : rep.rows) {
    CHECK(r.error.empty());
    CHECK(r.converged);
    CHECK(r.value <= r.competitor);
    CHECK(r.min_r_ineq >= -1e-6);
  }
  CHECK(rep.slope <= 1.2);
  // determinism: the same eta reproduces its row
  const auto again = eta_sweep({0.1}, u0, law, ref, base, SolverConfig{});
  CHECK(again.rows[0].value == rep.rows[1].value);
  CHECK(again.rows[0].distance == rep.rows[1].distance);
  CHECK_THROWS_AS(eta_sweep({0.1, 0.2}, u0, law, ref, base, SolverConfig{}), Error);
  CHECK(rep.to_csv().rfind("eta,I,", 0) == 0);
}
