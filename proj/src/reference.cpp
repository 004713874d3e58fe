#include "wide/reference.hpp"

#include <cmath>
#include <numbers>
#include <random>

#include "wide/error.hpp"
#include "wide/optim.hpp"
#include "wide/parallel.hpp"
#include "wide/spectral.hpp"
#include "wide/torus.hpp"

namespace wide {

void ReferenceConfig::validate() const {
  if (!(dt > 0.0)) throw Error("BadConfig", "dt must be positive");
  if (!(t_end >= 0.0)) throw Error("BadConfig", "t_end must be non-negative");
  if (!(solver_tol > 0.0) || max_inner < 1) throw Error("BadConfig", "bad implicit solver settings");
  if (!(cfl > 0.0)) throw Error("BadConfig", "cfl must be positive");
  if (save_every < 1) throw Error("BadConfig", "save_every must be at least 1");
}

nlohmann::json ReferenceConfig::to_json() const {
  return {{"dt", dt},       {"t_end", t_end}, {"solver_tol", solver_tol}, {"max_inner", max_inner},
          {"stokes", stokes}, {"cfl", cfl},   {"save_every", save_every}};
}

ReferenceConfig ReferenceConfig::from_json(const nlohmann::json& j) {
  ReferenceConfig c;
  c.dt = j.value("dt", c.dt);
  c.t_end = j.value("t_end", c.t_end);
  c.solver_tol = j.value("solver_tol", c.solver_tol);
  c.max_inner = j.value("max_inner", c.max_inner);
  c.stokes = j.value("stokes", c.stokes);
  c.cfl = j.value("cfl", c.cfl);
  c.save_every = j.value("save_every", c.save_every);
  return c;
}

namespace {

// P[(v - b) - dt div DW(eps(v))] and the step functional.
double step_eval(const Field& v, const Field& b, double dt, const ConstitutiveLaw& law, Field* grad) {
  const Field e = sym_gradient(v);
  const int d = v.grid().d;
  Field S = Field::tensor(v.grid());
  double wsum = 0.0;
  for (std::size_t k = 0; k < v.nodes(); ++k) {
    double e2 = 0.0;
    for (int a = 0; a < d * d; ++a) e2 += e(k, a) * e(k, a);
    double w, sec;
    law.eval(std::sqrt(e2), w, sec);
    wsum += w;
    for (int a = 0; a < d * d; ++a) S(k, a) = sec * e(k, a);
  }
  Field r = v - b;
  const double val = 0.5 * inner(r, r) + dt * wsum * v.grid().cell_volume();
  if (grad) {
    r.axpy(-dt, divergence(S));
    *grad = leray_project(r);
  }
  return val;
}

double effective_viscosity(const Field& u, const ConstitutiveLaw& law) {
  const Field e = sym_gradient(u);
  const double e2 = inner(e, e);
  if (e2 <= 1e-300) return law.kind() == LawKind::PowerLaw && law.p() != 2.0 ? 0.0 : law.mu0();
  return 0.5 * dissipation_rate(u, law) / e2;
}

}  // namespace

Trajectory run_reference(const ReferenceConfig& cfg, const Field& u0, const ConstitutiveLaw& law,
                         ReferenceStats* stats) {
  cfg.validate();
  if (u0.rank() != 1) throw Error("BadRank", "initial datum must be a vector field");
  const auto& g = u0.grid();
  const double un = std::max(1.0, lp_norm(u0, 2.0));
  if (lp_norm(divergence(u0), 2.0) > 1e-8 * un) throw Error("NotAdmissible", "initial datum is not divergence-free");
  for (double mv : u0.mean())
    if (std::abs(mv) > 1e-10 * std::max(1.0, u0.max_abs())) throw Error("NotAdmissible", "initial datum has nonzero mean");

  Trajectory tr;
  tr.scheme = "reference";
  tr.t.push_back(0.0);
  tr.u.push_back(u0);
  const int steps = static_cast<int>(std::llround(cfg.t_end / cfg.dt));
  ReferenceStats st;
  const auto& sp = Spectral::get(g);
  Field u = u0;
  for (int m = 0; m < steps; ++m) {
    Field b = u;
    if (!cfg.stokes) {
      const double umax = [&] {
        double mx = 0.0;
        for (std::size_t k = 0; k < u.nodes(); ++k) mx = std::max(mx, u.magnitude(k));
        return mx;
      }();
      const double c = cfg.dt * umax / g.h();
      st.max_cfl = std::max(st.max_cfl, c);
      if (c > cfg.cfl)
        throw Error("CFLViolation", "dt max|u| / h = " + std::to_string(c) + " exceeds " + std::to_string(cfg.cfl));
      b.axpy(-cfg.dt, leray_project(convect_unchecked(u)));
    }
    if (b.max_abs() == 0.0) {
      u = b;
    } else {
      double nu = effective_viscosity(b, law);
      auto precond = [&](const FieldVec& gr) {
        std::vector<cplx> s = spectra(gr[0]);
        const std::size_t N = sp.size();
        for (int c = 0; c < g.d; ++c)
          for (std::size_t k = 0; k < N; ++k) s[c * N + k] /= 1.0 + cfg.dt * nu * sp.k2(k);
        FieldVec out{Field(g, g.d)};
        for (int c = 0; c < g.d; ++c) from_spectrum(s.data() + c * N, out[0], c);
        return out;
      };
      OptProblem prob;
      prob.eval = [&](const FieldVec& x, FieldVec* gr) {
        if (!gr) return step_eval(x[0], b, cfg.dt, law, nullptr);
        gr->resize(1);
        return step_eval(x[0], b, cfg.dt, law, &(*gr)[0]);
      };
      prob.precond = precond;
      prob.refresh = [&](const FieldVec& x) { nu = effective_viscosity(x[0], law); };
      prob.project = [](FieldVec& x) { x[0] = leray_project(x[0]); };
      OptOptions opt;
      opt.tol = cfg.solver_tol;
      opt.scale = std::max(inner(b, b), 1e-300);
      opt.max_iters = cfg.max_inner;
      opt.refresh_every = 10;
      OptResult r = optimize(prob, FieldVec{b}, opt);
      if (!r.converged)
        throw Error("StepSolveFailure", "implicit step " + std::to_string(m) + ": " +
                                            (r.flag.empty() ? std::string("not converged") : r.flag));
      st.max_inner = std::max(st.max_inner, r.iterations);
      u = std::move(r.x[0]);
    }
    ++st.steps;
    if ((m + 1) % cfg.save_every == 0 || m + 1 == steps) {
      tr.t.push_back((m + 1) * cfg.dt);
      tr.u.push_back(u);
    }
  }
  if (stats) *stats = st;
  return tr;
}

std::vector<Field> test_battery(const TorusGrid& g, int kmax, int random, std::uint64_t seed) {
  std::vector<Field> out;
  const int d = g.d;
  std::vector<std::array<int, 3>> ks;
  for (int a = -kmax; a <= kmax; ++a)
    for (int b = -kmax; b <= kmax; ++b)
      for (int c = (d == 3 ? -kmax : 0); c <= (d == 3 ? kmax : 0); ++c) {
        const int k2 = a * a + b * b + c * c;
        if (k2 == 0 || k2 > kmax * kmax) continue;
        // one representative of +-k
        const std::array<int, 3> k{a, b, c};
        bool positive = false;
        for (int x : {a, b, c})
          if (x != 0) {
            positive = x > 0;
            break;
          }
        if (positive) ks.push_back(k);
      }
  for (const auto& k : ks) {
    std::vector<std::array<double, 3>> pols;
    const double kn = std::sqrt(double(k[0] * k[0] + k[1] * k[1] + k[2] * k[2]));
    if (d == 2) {
      pols.push_back({k[1] / kn, -k[0] / kn, 0.0});
    } else {
      std::array<double, 3> e{1, 0, 0};
      if (std::abs(k[0]) >= std::abs(k[1]) && std::abs(k[0]) >= std::abs(k[2])) e = {0, 1, 0};
      // p1 = normalise(e - (e.k)k/|k|^2), p2 = k x p1 / |k|
      const double ek = (e[0] * k[0] + e[1] * k[1] + e[2] * k[2]) / (kn * kn);
      std::array<double, 3> p1{e[0] - ek * k[0], e[1] - ek * k[1], e[2] - ek * k[2]};
      const double pn = std::sqrt(p1[0] * p1[0] + p1[1] * p1[1] + p1[2] * p1[2]);
      for (auto& x : p1) x /= pn;
      std::array<double, 3> p2{(k[1] * p1[2] - k[2] * p1[1]) / kn, (k[2] * p1[0] - k[0] * p1[2]) / kn,
                               (k[0] * p1[1] - k[1] * p1[0]) / kn};
      pols.push_back(p1);
      pols.push_back(p2);
    }
    for (const auto& p : pols)
      for (int trig = 0; trig < 2; ++trig) {
        Field f = Field::vector(g);
        for (std::size_t node = 0; node < g.size(); ++node) {
          auto idx = g.multi_index(node);
          double ph = 0.0;
          for (int a = 0; a < d; ++a) ph += k[a] * g.coord(idx[a]);
          const double s = trig ? std::sin(ph) : std::cos(ph);
          for (int a = 0; a < d; ++a) f(node, a) = p[a] * s;
        }
        out.push_back(std::move(f));
      }
  }
  for (int i = 0; i < random; ++i) out.push_back(random_solenoidal(g, 4, seed + i, 1.0));
  return out;
}

nlohmann::json LerayHopfReport::to_json() const {
  return {{"weak_residual", weak_residual},
          {"initial_residual", initial_residual},
          {"min_energy_residual", min_energy_residual},
          {"weak_ok", weak_ok},
          {"initial_ok", initial_ok},
          {"energy_ok", energy_ok},
          {"pass", pass()}};
}

LerayHopfReport leray_hopf_check(const Trajectory& tr, const ConstitutiveLaw& law, const std::optional<Field>& u0,
                                 const LerayHopfTolerances& tol) {
  LerayHopfReport R;
  const std::size_t n = tr.size();
  if (n == 0) throw Error("InvalidTrajectory", "empty trajectory");
  const auto& g = tr.grid();
  const bool conv = tr.scheme == "reference" || tr.cfg.convection;
  std::vector<Field> N(n), V(n);
  std::vector<double> nN(n), nV(n);
  parallel_for(n, [&](std::size_t m) {
    N[m] = conv ? convect_unchecked(tr.u[m]) : Field(g, g.d);
    const Field e = sym_gradient(tr.u[m]);
    Field S = Field::tensor(g);
    const int d = g.d;
    for (std::size_t k = 0; k < g.size(); ++k) {
      double e2 = 0.0;
      for (int a = 0; a < d * d; ++a) e2 += e(k, a) * e(k, a);
      double w, sec;
      law.eval(std::sqrt(e2), w, sec);
      for (int a = 0; a < d * d; ++a) S(k, a) = sec * e(k, a);
    }
    V[m] = divergence(S);
    nN[m] = lp_norm(N[m], 2.0);
    nV[m] = lp_norm(V[m], 2.0);
  });
  // normalisation: max ||u|| + int (||N|| + ||div DW||) dt
  double umax = 0.0, integ = 0.0;
  for (std::size_t m = 0; m < n; ++m) umax = std::max(umax, lp_norm(tr.u[m], 2.0));
  for (std::size_t i = 0; i + 1 < n; ++i) integ += 0.5 * (tr.t[i + 1] - tr.t[i]) * (nN[i] + nN[i + 1] + nV[i] + nV[i + 1]);
  const double scale = std::max(umax + integ, 1e-300);
  const bool scheme = tr.scheme == "reference";

  const auto battery = test_battery(g);
  std::vector<double> worst(battery.size(), 0.0);
  parallel_for(battery.size(), [&](std::size_t j) {
    const Field& phi = battery[j];
    const double pn = lp_norm(phi, 2.0);
    const double base = inner(tr.u[0], phi);
    double acc = 0.0, w = 0.0;
    for (std::size_t i = 0; i + 1 < n; ++i) {
      const double dtau = tr.t[i + 1] - tr.t[i];
      if (scheme) acc += dtau * (inner(N[i], phi) - inner(V[i + 1], phi));
      else acc += 0.5 * dtau * (inner(N[i], phi) + inner(N[i + 1], phi) - inner(V[i], phi) - inner(V[i + 1], phi));
      w = std::max(w, std::abs(inner(tr.u[i + 1], phi) - base + acc));
    }
    worst[j] = w / (pn * scale);
  });
  for (double w : worst) R.weak_residual = std::max(R.weak_residual, w);
  R.weak_ok = R.weak_residual <= tol.weak;

  if (u0) {
    const double d0 = lp_norm(tr.u[0] - *u0, 2.0), nu0 = lp_norm(*u0, 2.0);
    R.initial_residual = nu0 > 0.0 ? d0 / nu0 : d0;
  }
  R.initial_ok = R.initial_residual <= tol.initial;

  const auto E = energy_report(tr, law);
  R.t = E.t;
  R.energy_residual = E.r_ineq;
  R.min_energy_residual = E.min_r_ineq();
  R.energy_ok = R.min_energy_residual >= -tol.energy;
  return R;
}

}  // namespace wide
