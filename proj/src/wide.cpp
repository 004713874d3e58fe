#include "wide/wide.hpp"

#include <algorithm>
#include <cmath>
#include <iomanip>
#include <sstream>

#include "wide/error.hpp"
#include "wide/parallel.hpp"
#include "wide/spectral.hpp"
#include "wide/torus.hpp"

namespace wide {

namespace {

const cplx I(0.0, 1.0);

// 1 - (1 - e^-x)/x and (1 - e^-x)/x - e^-x
void hat_factors(double x, double& left, double& right) {
  if (x < 1e-3) {
    left = x / 2 - x * x / 6 + x * x * x / 24 - x * x * x * x / 120;
    right = x / 2 - x * x / 3 + x * x * x / 8 - x * x * x * x / 30;
    return;
  }
  const double psi = -std::expm1(-x) / x;
  left = 1.0 - psi;
  right = psi - std::exp(-x);
}

struct NodeValues {
  Field N;
  double wint = 0.0;
  double quart = 0.0;
};

// Spectrum of grad u, written to physical tensor G (entry c*d+j = d_j u_c).
void grad_from_spectra(const Spectral& sp, const std::vector<cplx>& s, Field& G, std::vector<cplx>& t) {
  const int d = sp.grid().d;
  const std::size_t N = sp.size();
  for (int c = 0; c < d; ++c)
    for (int j = 0; j < d; ++j) {
      for (std::size_t m = 0; m < N; ++m) t[m] = I * sp.kd(m, j) * s[c * N + m];
      sp.inverse(t.data(), G.data() + c * d + j, d * d);
    }
}

void mask(const Spectral& sp, std::vector<cplx>& s, int ncomp) {
  const std::size_t N = sp.size();
  for (int c = 0; c < ncomp; ++c)
    for (std::size_t m = 0; m < N; ++m)
      if (!sp.keep(m)) s[c * N + m] = 0.0;
}

NodeValues node_forward(const Field& u, const ConstitutiveLaw& law, bool conv, bool stab) {
  const auto& g = u.grid();
  const auto& sp = Spectral::get(g);
  const int d = g.d;
  const std::size_t N = sp.size(), nodes = g.size();
  NodeValues out;
  auto s = spectra(u);
  std::vector<cplx> t(N);
  Field G = Field::tensor(g);
  grad_from_spectra(sp, s, G, t);
  double wsum = 0.0, qsum = 0.0;
  for (std::size_t k = 0; k < nodes; ++k) {
    double e2 = 0.0, g2 = 0.0;
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        const double e = 0.5 * (G(k, i * d + j) + G(k, j * d + i));
        e2 += e * e;
        g2 += G(k, i * d + j) * G(k, i * d + j);
      }
    double w, sec;
    law.eval(std::sqrt(e2), w, sec);
    wsum += w;
    if (stab) qsum += g2 * g2;
  }
  out.wint = wsum * g.cell_volume();
  out.quart = qsum * g.cell_volume();
  if (conv) {
    mask(sp, s, d);
    Field ut(g, d);
    for (int c = 0; c < d; ++c) sp.inverse(s.data() + c * N, ut.data() + c, d);
    std::vector<cplx> acc(N * d, cplx(0.0));
    std::vector<double> prod(nodes);
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) {
        for (std::size_t k = 0; k < nodes; ++k) prod[k] = ut(k, i) * ut(k, j);
        sp.forward(prod.data(), 1, t.data());
        for (std::size_t m = 0; m < N; ++m) {
          acc[i * N + m] += I * sp.kd(m, j) * t[m];
          if (j != i) acc[j * N + m] += I * sp.kd(m, i) * t[m];
        }
      }
    mask(sp, acc, d);
    out.N = Field(g, d);
    for (int c = 0; c < d; ++c) sp.inverse(acc.data() + c * N, out.N.data() + c, d);
  }
  return out;
}

// P[ time + N'(u)^* r - div(cw DW(eps) + cs |G|^2 G) ]
Field node_adjoint(const Field& u, const Field& time, const Field* r, double cw, double cs,
                   const ConstitutiveLaw& law) {
  const auto& g = u.grid();
  const auto& sp = Spectral::get(g);
  const int d = g.d;
  const std::size_t N = sp.size(), nodes = g.size();
  auto acc = spectra(time);
  auto s = spectra(u);
  std::vector<cplx> t(N);
  Field G = Field::tensor(g);
  grad_from_spectra(sp, s, G, t);

  Field S = Field::tensor(g);
  for (std::size_t k = 0; k < nodes; ++k) {
    double e2 = 0.0, g2 = 0.0;
    double eps[9];
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) {
        eps[i * d + j] = 0.5 * (G(k, i * d + j) + G(k, j * d + i));
        e2 += eps[i * d + j] * eps[i * d + j];
        g2 += G(k, i * d + j) * G(k, i * d + j);
      }
    double w, sec;
    law.eval(std::sqrt(e2), w, sec);
    for (int a = 0; a < d * d; ++a) S(k, a) = cw * sec * eps[a] + cs * g2 * G(k, a);
  }
  for (int i = 0; i < d; ++i)
    for (int j = 0; j < d; ++j) {
      sp.forward(S.data() + i * d + j, d * d, t.data());
      for (std::size_t m = 0; m < N; ++m) acc[i * N + m] -= I * sp.kd(m, j) * t[m];
    }

  if (r) {
    // N'(u)^* r = F[(grad ut)^T rt - (ut . grad) rt]
    mask(sp, s, d);
    auto rs = spectra(*r);
    mask(sp, rs, d);
    Field ut(g, d), rt(g, d), Gu = Field::tensor(g), Gr = Field::tensor(g);
    for (int c = 0; c < d; ++c) {
      sp.inverse(s.data() + c * N, ut.data() + c, d);
      sp.inverse(rs.data() + c * N, rt.data() + c, d);
    }
    grad_from_spectra(sp, s, Gu, t);
    grad_from_spectra(sp, rs, Gr, t);
    std::vector<double> q(nodes);
    for (int j = 0; j < d; ++j) {
      for (std::size_t k = 0; k < nodes; ++k) {
        double v = 0.0;
        for (int i = 0; i < d; ++i) v += Gu(k, i * d + j) * rt(k, i) - ut(k, i) * Gr(k, j * d + i);
        q[k] = v;
      }
      sp.forward(q.data(), 1, t.data());
      for (std::size_t m = 0; m < N; ++m)
        if (sp.keep(m)) acc[j * N + m] += t[m];
    }
  }

  for (std::size_t m = 0; m < N; ++m) {
    const double k2 = sp.k2(m);
    if (k2 == 0.0) {
      for (int c = 0; c < d; ++c) acc[c * N + m] = 0.0;
      continue;
    }
    cplx kv = 0.0;
    for (int c = 0; c < d; ++c) kv += sp.kd(m, c) * acc[c * N + m];
    for (int c = 0; c < d; ++c) acc[c * N + m] -= sp.kd(m, c) * kv / k2;
  }
  Field out(g, d);
  for (int c = 0; c < d; ++c) sp.inverse(acc.data() + c * N, out.data() + c, d);
  return out;
}

}  // namespace

void WideConfig::validate() const {
  if (!(eta > 0.0) || !std::isfinite(eta)) throw Error("BadConfig", "eta must be positive");
  if (t_max != 0.0 && !(t_max >= 10.0 * eta * (1.0 - 1e-12))) throw Error("BadConfig", "t_max must be at least 10 eta");
  if (!(ratio >= 1.0 && ratio <= 1.1)) throw Error("BadConfig", "step ratio must lie in [1, 1.1]");
  if (tau0 < 0.0 || tau_cap < 0.0 || t_study < 0.0) throw Error("BadConfig", "negative step or horizon");
  if (!(c0 > 0.0)) throw Error("BadConfig", "c0 must be positive");
}

double WideConfig::horizon() const { return t_max > 0.0 ? t_max : std::max(10.0 * eta, t_study); }

double WideConfig::resolved_c4(const TorusGrid& g) const {
  if (!stabiliser) return 0.0;
  if (c4 < 0.0) return default_c4(g);
  const double cp = poincare_constant(g, 4.0);
  if (c4 < 0.5 * (9.0 * cp * cp + 1.0)) throw Error("BadConfig", "c4 below 1/2 (9 C_P^2 + 1)");
  return c4;
}

nlohmann::json WideConfig::to_json() const {
  return {{"eta", eta},         {"c4", c4},           {"t_max", horizon()}, {"t_study", t_study},
          {"tau0", tau0},       {"ratio", ratio},     {"tau_cap", tau_cap}, {"convection", convection},
          {"stabiliser", stabiliser}, {"c0", c0}};
}

WideConfig WideConfig::from_json(const nlohmann::json& j) {
  WideConfig c;
  c.eta = j.value("eta", c.eta);
  c.c4 = j.value("c4", c.c4);
  c.t_max = j.value("t_max", c.t_max);
  c.t_study = j.value("t_study", c.t_study);
  c.tau0 = j.value("tau0", c.tau0);
  c.ratio = j.value("ratio", c.ratio);
  c.tau_cap = j.value("tau_cap", c.tau_cap);
  c.convection = j.value("convection", c.convection);
  c.stabiliser = j.value("stabiliser", c.stabiliser);
  c.c0 = j.value("c0", c.c0);
  return c;
}

std::vector<double> time_grid(const WideConfig& cfg) {
  cfg.validate();
  const double T = cfg.horizon();
  const double cap = cfg.tau_cap > 0.0 ? cfg.tau_cap : cfg.eta / 20.0;
  double tau = std::min(cap, cfg.tau0 > 0.0 ? cfg.tau0 : cfg.eta / 100.0);
  std::vector<double> t{0.0};
  while (t.back() < T * (1.0 - 1e-12)) {
    t.push_back(t.back() + tau);
    tau = std::min(cap, tau * cfg.ratio);
  }
  if (t.size() > 2 && T - t[t.size() - 2] < 0.5 * (t[t.size() - 2] - t[t.size() - 3])) t.pop_back();
  t.back() = T;
  return t;
}

Field Trajectory::at(double s) const {
  if (t.empty()) throw Error("InvalidTrajectory", "empty trajectory");
  if (s <= t.front()) return u.front();
  if (s >= t.back()) return u.back();
  const auto it = std::upper_bound(t.begin(), t.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - t.begin()) - 1;
  const double th = (s - t[i]) / (t[i + 1] - t[i]);
  Field out = u[i];
  out *= 1.0 - th;
  out.axpy(th, u[i + 1]);
  return out;
}

void Trajectory::validate(double tol) const {
  if (t.empty() || t.size() != u.size()) throw Error("InvalidTrajectory", "node/time count mismatch");
  if (t.front() != 0.0) throw Error("InvalidTrajectory", "first node must sit at t = 0");
  for (std::size_t m = 0; m < t.size(); ++m) {
    if (m > 0 && !(t[m] > t[m - 1])) throw Error("InvalidTrajectory", "times must increase");
    if (u[m].grid() != u[0].grid() || u[m].rank() != 1) throw Error("InvalidTrajectory", "grid mismatch");
    const double un = std::max(1.0, lp_norm(u[m], 2.0));
    if (lp_norm(divergence(u[m]), 2.0) > tol * un)
      throw Error("InvalidTrajectory", "node " + std::to_string(m) + " is not divergence-free");
    for (double mv : u[m].mean())
      if (std::abs(mv) > tol * std::max(1.0, u[m].max_abs()))
        throw Error("InvalidTrajectory", "node " + std::to_string(m) + " has nonzero mean");
  }
}

Trajectory constant_trajectory(const Field& u0, const WideConfig& cfg) {
  Trajectory tr;
  tr.t = time_grid(cfg);
  tr.u.assign(tr.t.size(), u0);
  tr.eta = cfg.eta;
  tr.cfg = cfg;
  return tr;
}

WeightTable weight_table(const std::vector<double>& t, double eta) {
  WeightTable w;
  const std::size_t M = t.size() - 1;
  w.interval.resize(M);
  w.hat.assign(M + 1, 0.0);
  for (std::size_t i = 0; i < M; ++i) {
    const double x = (t[i + 1] - t[i]) / eta, E = eta * std::exp(-t[i] / eta);
    double l, r;
    hat_factors(x, l, r);
    w.interval[i] = -E * std::expm1(-x);
    w.hat[i] += E * l;
    w.hat[i + 1] += E * r;
  }
  w.tail = eta * std::exp(-t[M] / eta);
  return w;
}

ExponentTable exponent_table(double p, int d, double margin) {
  if (!(p > 2.0 * d / (d + 2.0)) || !std::isfinite(p))
    throw Error("ExponentOutOfRange", "p must exceed 2d/(d+2)");
  ExponentTable e;
  e.p = p;
  e.q = p / (p - 1.0);
  const double den = d * p + 2.0 * p - 2.0 * d;
  e.beta = std::max(p, d * p / den);
  e.gamma = std::max(p, 4.0);
  e.s_tilde = std::max(e.gamma, 2.0 * d * p / den);
  e.s = e.s_tilde * (1.0 + margin);
  return e;
}

PreparedData prepare_initial_data(const Field& u0, double eta, const ConstitutiveLaw& law, double c0) {
  if (!(eta > 0.0)) throw Error("BadConfig", "eta must be positive");
  if (u0.rank() != 1) throw Error("BadRank", "initial datum must be a vector field");
  const auto& g = u0.grid();
  const double un = std::max(1.0, lp_norm(u0, 2.0));
  if (lp_norm(divergence(u0), 2.0) > 1e-8 * un) throw Error("NotAdmissible", "initial datum is not divergence-free");
  for (double mv : u0.mean())
    if (std::abs(mv) > 1e-10 * std::max(1.0, u0.max_abs())) throw Error("NotAdmissible", "initial datum has nonzero mean");

  const auto& sp = Spectral::get(g);
  const std::size_t N = sp.size();
  const int d = g.d;
  const int kmax = g.n / 3;
  PreparedData out;
  if (u0.max_abs() == 0.0) {
    out.u = u0;
    out.cutoff = kmax;
    return out;
  }
  auto s = spectra(u0);
  std::vector<int> kk(N);
  for (std::size_t m = 0; m < N; ++m) {
    int a = 0;
    for (int j = 0; j < d; ++j) a += sp.kint(m, j) * sp.kint(m, j);
    kk[m] = a;
  }
  for (int K = kmax; K >= 1; --K) {
    auto c = s;
    for (int comp = 0; comp < d; ++comp)
      for (std::size_t m = 0; m < N; ++m)
        if (kk[m] > K * K || !sp.keep(m)) c[comp * N + m] = 0.0;
    Field u(g, d);
    for (int comp = 0; comp < d; ++comp) from_spectrum(c.data() + comp * N, u, comp);
    u = leray_project(u);
    const Field G = gradient(u);
    const double gp = std::pow(lp_norm(G, law.p()), law.p());
    const double cv = std::pow(lp_norm(convect_unchecked(u), 2.0), 2.0);
    const double g4 = std::pow(lp_norm(G, 4.0), 4.0);
    const double achieved = eta * std::max({gp, cv, g4});
    if (achieved <= c0) {
      out.u = u;
      out.cutoff = K;
      out.c0 = achieved;
      out.grad_p = gp;
      out.conv_2 = cv;
      out.grad_4 = g4;
      out.l2_distance = lp_norm(u - u0, 2.0);
      return out;
    }
  }
  throw Error("CannotSatisfyIV", "no spectral cutoff meets the initial-data bounds; eta too large for this datum");
}

double traj_inner(const std::vector<Field>& a, const std::vector<Field>& b) {
  double s = 0.0;
  for (std::size_t m = 0; m < a.size(); ++m) s += inner(a[m], b[m]);
  return s;
}

double energy(const Field& u) { return 0.5 * inner(u, u); }

double potential_integral(const Field& u, const ConstitutiveLaw& law) {
  const Field e = sym_gradient(u);
  const int d = u.grid().d;
  double s = 0.0;
  for (std::size_t k = 0; k < u.nodes(); ++k) {
    double e2 = 0.0;
    for (int a = 0; a < d * d; ++a) e2 += e(k, a) * e(k, a);
    double w, sec;
    law.eval(std::sqrt(e2), w, sec);
    s += w;
  }
  return s * u.grid().cell_volume();
}

double dissipation_rate(const Field& u, const ConstitutiveLaw& law) {
  const Field e = sym_gradient(u);
  const int d = u.grid().d;
  double s = 0.0;
  for (std::size_t k = 0; k < u.nodes(); ++k) {
    double e2 = 0.0;
    for (int a = 0; a < d * d; ++a) e2 += e(k, a) * e(k, a);
    double w, sec;
    law.eval(std::sqrt(e2), w, sec);
    s += sec * e2;
  }
  return s * u.grid().cell_volume();
}

namespace {

struct Assembled {
  FunctionalParts parts;
  std::vector<NodeValues> nv;
  std::vector<Field> a;
  WeightTable w;
  double c4 = 0.0;
};

Assembled assemble(const Trajectory& tr, const ConstitutiveLaw& law, bool check) {
  if (tr.t.size() < 2) throw Error("InvalidTrajectory", "need at least two nodes");
  if (!(tr.eta > 0.0)) throw Error("InvalidTrajectory", "trajectory carries no eta");
  if (check) tr.validate(tr.cfg.feas_tol);
  Assembled A;
  const bool conv = tr.cfg.convection, stab = tr.cfg.stabiliser;
  A.c4 = tr.cfg.resolved_c4(tr.grid());
  const std::size_t M = tr.size() - 1;
  A.w = weight_table(tr.t, tr.eta);
  A.nv.resize(M + 1);
  parallel_for(M + 1, [&](std::size_t m) { A.nv[m] = node_forward(tr.u[m], law, conv, stab); });
  A.a.resize(M);
  std::vector<double> in(M);
  parallel_for(M, [&](std::size_t i) {
    Field a = tr.u[i + 1] - tr.u[i];
    a *= 1.0 / (tr.t[i + 1] - tr.t[i]);
    if (conv) {
      a.axpy(0.5, A.nv[i].N);
      a.axpy(0.5, A.nv[i + 1].N);
    }
    in[i] = 0.5 * A.w.interval[i] * inner(a, a);
    A.a[i] = std::move(a);
  });
  double inertia = 0.0, diss = 0.0, st = 0.0;
  for (std::size_t i = 0; i < M; ++i) inertia += in[i];
  if (conv) inertia += 0.5 * A.w.tail * inner(A.nv[M].N, A.nv[M].N);
  for (std::size_t m = 0; m <= M; ++m) {
    const double wm = A.w.hat[m] + (m == M ? A.w.tail : 0.0);
    diss += wm * A.nv[m].wint / tr.eta;
    st += wm * 0.25 * A.c4 * A.nv[m].quart;
  }
  A.parts = {inertia, diss, st};
  return A;
}

}  // namespace

FunctionalParts functional_parts(const Trajectory& traj, const ConstitutiveLaw& law, bool check) {
  return assemble(traj, law, check).parts;
}

double evaluate_functional(const Trajectory& traj, const ConstitutiveLaw& law, bool check) {
  return functional_parts(traj, law, check).total();
}

std::vector<Field> first_variation(const Trajectory& tr, const ConstitutiveLaw& law, double* value, bool check) {
  Assembled A = assemble(tr, law, check);
  if (value) *value = A.parts.total();
  const std::size_t M = tr.size() - 1;
  const bool conv = tr.cfg.convection;
  std::vector<Field> g(M + 1);
  g[0] = Field(tr.grid(), tr.grid().d);
  parallel_for(M, [&](std::size_t j) {
    const std::size_t m = j + 1;
    const double tl = tr.t[m] - tr.t[m - 1];
    Field time = A.a[m - 1];
    time *= A.w.interval[m - 1] / tl;
    Field r;
    if (conv) {
      r = A.a[m - 1];
      r *= 0.5 * A.w.interval[m - 1];
    }
    if (m < M) {
      const double tr_ = tr.t[m + 1] - tr.t[m];
      time.axpy(-A.w.interval[m] / tr_, A.a[m]);
      if (conv) r.axpy(0.5 * A.w.interval[m], A.a[m]);
    } else if (conv) {
      r.axpy(A.w.tail, A.nv[M].N);
    }
    const double wm = A.w.hat[m] + (m == M ? A.w.tail : 0.0);
    g[m] = node_adjoint(tr.u[m], time, conv ? &r : nullptr, wm / tr.eta, wm * A.c4, law);
  });
  return g;
}

double DiagnosticsReport::min_r_ineq() const {
  double m = INFINITY;
  for (double x : r_ineq) m = std::min(m, x);
  return m;
}

double DiagnosticsReport::min_D() const {
  double m = INFINITY;
  for (double x : D) m = std::min(m, x);
  return m;
}

std::string DiagnosticsReport::to_csv() const {
  std::ostringstream os;
  os << "t,E,D,r_ineq,r_eq\n" << std::setprecision(17);
  for (std::size_t m = 0; m < t.size(); ++m)
    os << t[m] << ',' << E[m] << ',' << D[m] << ',' << r_ineq[m] << ',' << r_eq[m] << '\n';
  return os.str();
}

nlohmann::json DiagnosticsReport::summary() const {
  double min_eq = INFINITY, max_eq = -INFINITY;
  for (double x : r_eq) min_eq = std::min(min_eq, x), max_eq = std::max(max_eq, x);
  return {{"nodes", t.size()},
          {"t_end", t.empty() ? 0.0 : t.back()},
          {"E0", E.empty() ? 0.0 : E.front()},
          {"E_end", E.empty() ? 0.0 : E.back()},
          {"min_r_ineq", min_r_ineq()},
          {"min_r_eq", min_eq},
          {"max_r_eq", max_eq},
          {"r_eq_end", r_eq.empty() ? 0.0 : r_eq.back()},
          {"min_D", min_D()}};
}

DiagnosticsReport energy_report(const Trajectory& tr, const ConstitutiveLaw& law) {
  DiagnosticsReport R;
  const std::size_t n = tr.size();
  R.t = tr.t;
  R.E.resize(n);
  R.D.resize(n);
  parallel_for(n, [&](std::size_t m) {
    R.E[m] = energy(tr.u[m]);
    R.D[m] = dissipation_rate(tr.u[m], law);
  });
  R.cum_diss.assign(n, 0.0);
  R.r_ineq.assign(n, 0.0);
  R.r_eq.assign(n, 0.0);
  const bool reference = tr.scheme == "reference";
  const bool weighted = !reference && std::isfinite(tr.eta) && tr.eta > 0.0;
  double cw = 0.0, ce = 0.0;
  for (std::size_t i = 0; i + 1 < n; ++i) {
    const double tau = tr.t[i + 1] - tr.t[i];
    if (reference) {
      ce += tau * R.D[i + 1];
      cw = ce;
    } else {
      const double lin = 0.5 * tau * (R.D[i] + R.D[i + 1]);
      ce += lin;
      if (weighted) {
        const double x = tau / tr.eta, E = tr.eta * std::exp(-tr.t[i] / tr.eta);
        double l, r;
        hat_factors(x, l, r);
        cw += lin - E * (l * R.D[i] + r * R.D[i + 1]);
      } else {
        cw += lin;
      }
    }
    R.cum_diss[i + 1] = cw;
    R.r_ineq[i + 1] = R.E[0] - R.E[i + 1] - cw;
    R.r_eq[i + 1] = R.E[0] - R.E[i + 1] - ce;
  }
  return R;
}

}  // namespace wide
