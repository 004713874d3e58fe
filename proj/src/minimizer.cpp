#include "wide/minimizer.hpp"

#include <cmath>
#include <iomanip>
#include <memory>
#include <sstream>

#include "wide/error.hpp"
#include "wide/optim.hpp"
#include "wide/parallel.hpp"
#include "wide/spectral.hpp"
#include "wide/torus.hpp"

namespace wide {

void SolverConfig::validate() const {
  if (!(grad_tol > 0.0)) throw Error("BadConfig", "grad_tol must be positive");
  if (max_iters < 1) throw Error("BadConfig", "max_iters must be at least 1");
  if (memory < 1) throw Error("BadConfig", "memory must be at least 1");
  if (!(armijo_c1 > 0.0 && armijo_c1 < 1.0)) throw Error("BadConfig", "armijo_c1 must lie in (0,1)");
  if (!(backtrack > 0.0 && backtrack < 1.0)) throw Error("BadConfig", "backtrack must lie in (0,1)");
}

nlohmann::json SolverConfig::to_json() const {
  return {{"method", method == Method::LBFGS ? "lbfgs" : "gradient-descent"},
          {"grad_tol", grad_tol},
          {"max_iters", max_iters},
          {"memory", memory},
          {"armijo_c1", armijo_c1},
          {"backtrack", backtrack},
          {"max_backtracks", max_backtracks},
          {"precond_refresh", precond_refresh},
          {"seed", seed}};
}

SolverConfig SolverConfig::from_json(const nlohmann::json& j) {
  SolverConfig c;
  const std::string m = j.value("method", std::string("lbfgs"));
  if (m == "lbfgs" || m == "quasi-newton") c.method = Method::LBFGS;
  else if (m == "gradient-descent" || m == "gd") c.method = Method::GradientDescent;
  else throw Error("BadConfig", "unknown solver method '" + m + "'");
  c.grad_tol = j.value("grad_tol", c.grad_tol);
  c.max_iters = j.value("max_iters", c.max_iters);
  c.memory = j.value("memory", c.memory);
  c.armijo_c1 = j.value("armijo_c1", c.armijo_c1);
  c.backtrack = j.value("backtrack", c.backtrack);
  c.max_backtracks = j.value("max_backtracks", c.max_backtracks);
  c.precond_refresh = j.value("precond_refresh", c.precond_refresh);
  c.seed = j.value("seed", c.seed);
  return c;
}

nlohmann::json MinimizeResult::to_json() const {
  return {{"converged", converged}, {"iterations", iterations}, {"flag", flag},
          {"value", value},         {"competitor", competitor}, {"eta_times_value", traj.eta * value},
          {"decrement", decrement}, {"grad_norm", grad_norm}};
}

Preconditioner::Preconditioner(const Trajectory& tr, const ConstitutiveLaw& law) : grid_(tr.grid()), eta_(tr.eta) {
  const std::size_t M = tr.size() - 1;
  const auto w = weight_table(tr.t, tr.eta);
  tau_.resize(M);
  for (std::size_t i = 0; i < M; ++i) tau_[i] = tr.t[i + 1] - tr.t[i];
  interval_ = w.interval;
  hat_ = w.hat;
  hat_[M] += w.tail;
  visc_.assign(M + 1, 0.0);
  stab_.assign(M + 1, 0.0);
  conv_.assign(M + 1, 0.0);
  const double c4 = tr.cfg.resolved_c4(grid_);
  const double vol = grid_.volume();
  const int d = grid_.d;
  parallel_for(M + 1, [&](std::size_t m) {
    const Field& u = tr.u[m];
    const Field e = sym_gradient(u);
    const double e2 = inner(e, e);
    const double D = dissipation_rate(u, law);
    visc_[m] = e2 > 1e-300 ? 0.5 * D / e2 : 0.5 * (law.kind() == LawKind::PowerLaw && law.p() != 2.0 ? 0.0 : 2.0 * law.mu0());
    if (tr.cfg.stabiliser) {
      const Field G = gradient(u);
      stab_[m] = c4 * (1.0 + 2.0 / (d * d)) * inner(G, G) / vol;
    }
    if (tr.cfg.convection) conv_[m] = inner(u, u) / vol / d;
  });
}

FieldVec Preconditioner::apply(const FieldVec& g) const {
  const auto& sp = Spectral::get(grid_);
  const std::size_t N = sp.size(), M = g.size();
  const int d = grid_.d;
  std::vector<std::vector<cplx>> S(M);
  parallel_for(M, [&](std::size_t j) { S[j] = spectra(g[j]); });
  parallel_for(N, [&](std::size_t mode) {
    const double k2 = sp.k2(mode);
    std::vector<double> cp(M);
    std::vector<cplx> dp(M * d);
    // unknowns are nodes 1..M; row j <-> node j+1
    double prev_c = 0.0;
    for (std::size_t j = 0; j < M; ++j) {
      const std::size_t m = j + 1;
      double diag = interval_[m - 1] / (tau_[m - 1] * tau_[m - 1]);
      if (m < M) diag += interval_[m] / (tau_[m] * tau_[m]);
      diag += hat_[m] * k2 * (visc_[m] / eta_ + stab_[m] + conv_[m]);
      const double lower = j > 0 ? -interval_[m - 1] / (tau_[m - 1] * tau_[m - 1]) : 0.0;
      const double upper = m < M ? -interval_[m] / (tau_[m] * tau_[m]) : 0.0;
      const double den = diag - lower * prev_c;
      cp[j] = upper / den;
      for (int c = 0; c < d; ++c) {
        const cplx prev = j > 0 ? dp[(j - 1) * d + c] : cplx(0.0);
        dp[j * d + c] = (S[j][c * N + mode] - lower * prev) / den;
      }
      prev_c = cp[j];
    }
    for (std::size_t jj = M; jj-- > 0;) {
      for (int c = 0; c < d; ++c) {
        if (jj + 1 < M) dp[jj * d + c] -= cp[jj] * dp[(jj + 1) * d + c];
        S[jj][c * N + mode] = dp[jj * d + c];
      }
    }
  });
  FieldVec out(M);
  parallel_for(M, [&](std::size_t j) {
    out[j] = Field(grid_, d);
    for (int c = 0; c < d; ++c) from_spectrum(S[j].data() + c * N, out[j], c);
  });
  return out;
}

MinimizeResult minimize(const WideConfig& cfg, const SolverConfig& scfg, const Field& u0, const ConstitutiveLaw& law) {
  cfg.validate();
  scfg.validate();
  if (u0.grid().d != law.d()) throw Error("BadConfig", "law dimension does not match the grid");
  MinimizeResult R;
  Trajectory tr = constant_trajectory(u0, cfg);
  tr.validate(cfg.feas_tol);
  const std::size_t M = tr.size() - 1;
  R.competitor = evaluate_functional(tr, law);
  if (u0.max_abs() == 0.0) {
    R.traj = tr;
    R.converged = true;
    R.value = 0.0;
    R.history = {0.0};
    return R;
  }

  auto build = [&](const FieldVec& x) {
    Trajectory t = tr;
    for (std::size_t m = 1; m <= M; ++m) t.u[m] = x[m - 1];
    return t;
  };
  std::unique_ptr<Preconditioner> pre = std::make_unique<Preconditioner>(tr, law);
  OptProblem prob;
  prob.eval = [&](const FieldVec& x, FieldVec* grad) {
    const Trajectory t = build(x);
    if (!grad) return evaluate_functional(t, law, false);
    double v;
    auto g = first_variation(t, law, &v, false);
    grad->assign(std::make_move_iterator(g.begin() + 1), std::make_move_iterator(g.end()));
    return v;
  };
  prob.precond = [&](const FieldVec& g) { return pre->apply(g); };
  prob.refresh = [&](const FieldVec& x) { pre = std::make_unique<Preconditioner>(build(x), law); };
  prob.project = [](FieldVec& x) { parallel_for(x.size(), [&](std::size_t m) { x[m] = leray_project(x[m]); }); };

  OptOptions opt;
  opt.lbfgs = scfg.method == Method::LBFGS;
  opt.tol = scfg.grad_tol;
  opt.scale = std::max(R.competitor, 1e-300);
  opt.max_iters = scfg.max_iters;
  opt.memory = scfg.memory;
  opt.c1 = scfg.armijo_c1;
  opt.backtrack = scfg.backtrack;
  opt.max_backtracks = scfg.max_backtracks;
  opt.refresh_every = scfg.precond_refresh;
  opt.verbose = scfg.verbose;

  FieldVec x0(tr.u.begin() + 1, tr.u.end());
  OptResult o = optimize(prob, std::move(x0), opt);
  R.traj = build(o.x);
  R.converged = o.converged;
  R.iterations = o.iterations;
  R.flag = o.flag;
  R.value = o.f;
  R.decrement = o.decrement;
  R.grad_norm = o.grad_norm;
  R.history = std::move(o.history);
  return R;
}

ModeSolution stokes_mode_oracle(double k, double eta, double nu, const std::vector<double>& times) {
  if (!(eta > 0.0)) throw Error("BadParameter", "eta must be positive");
  if (!(nu * k * k > 0.0) || !std::isfinite(nu * k * k)) throw Error("BadParameter", "nu |k|^2 must be positive");
  ModeSolution s;
  s.k = k;
  s.eta = eta;
  s.nu = nu;
  const double x = 4.0 * nu * eta * k * k;
  // (1 - sqrt(1+x)) / (2 eta) without cancellation
  s.lambda_minus = -x / (1.0 + std::sqrt(1.0 + x)) / (2.0 * eta);
  s.t = times;
  s.a.resize(times.size());
  for (std::size_t i = 0; i < times.size(); ++i) s.a[i] = std::exp(s.lambda_minus * times[i]);
  return s;
}

double fitted_rate(const std::vector<double>& t, const std::vector<double>& a, double t_fit) {
  double st = 0, sy = 0, stt = 0, sty = 0;
  int n = 0;
  for (std::size_t i = 0; i < t.size(); ++i) {
    if (t[i] > t_fit || !(a[i] > 0.0)) continue;
    const double y = std::log(a[i]);
    st += t[i];
    sy += y;
    stt += t[i] * t[i];
    sty += t[i] * y;
    ++n;
  }
  if (n < 2) throw Error("BadParameter", "not enough samples for a rate fit");
  return (n * sty - st * sy) / (n * stt - st * st);
}

std::vector<double> mode_amplitudes(const Trajectory& tr, const Field& u0) {
  const double nn = inner(u0, u0);
  std::vector<double> a(tr.size());
  for (std::size_t m = 0; m < tr.size(); ++m) a[m] = inner(tr.u[m], u0) / nn;
  return a;
}

double lp_w1p_distance(const Trajectory& a, const Trajectory& b, double p, double T) {
  std::vector<double> vals, ts;
  for (std::size_t m = 0; m < b.size() && b.t[m] <= T * (1 + 1e-12); ++m) {
    const Field diff = a.at(b.t[m]) - b.u[m];
    vals.push_back(std::pow(lp_norm(diff, p), p) + std::pow(lp_norm(gradient(diff), p), p));
    ts.push_back(b.t[m]);
  }
  double s = 0.0;
  for (std::size_t i = 0; i + 1 < ts.size(); ++i) s += 0.5 * (ts[i + 1] - ts[i]) * (vals[i] + vals[i + 1]);
  return std::pow(s, 1.0 / p);
}

double fit_slope(const std::vector<double>& etas, const std::vector<double>& values) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (std::size_t i = 0; i < etas.size(); ++i) {
    if (!(values[i] > 0.0)) continue;
    const double x = std::log(1.0 / etas[i]), y = std::log(values[i]);
    sx += x, sy += y, sxx += x * x, sxy += x * y;
    ++n;
  }
  if (n < 2) return 0.0;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string SweepReport::to_csv() const {
  std::ostringstream os;
  os << "eta,I,I_competitor,distance,min_r_ineq,max_abs_r_eq,iterations,converged,flag,error\n"
     << std::setprecision(17);
  for (const auto& r : rows)
    os << r.eta << ',' << r.value << ',' << r.competitor << ',' << r.distance << ',' << r.min_r_ineq << ','
       << r.max_abs_r_eq << ',' << r.iterations << ',' << (r.converged ? 1 : 0) << ',' << r.flag << ',' << r.error
       << '\n';
  return os.str();
}

nlohmann::json SweepReport::to_json() const {
  nlohmann::json j;
  j["slope"] = slope;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rows)
    j["rows"].push_back({{"eta", r.eta},
                         {"I", r.value},
                         {"I_competitor", r.competitor},
                         {"distance", r.distance},
                         {"min_r_ineq", r.min_r_ineq},
                         {"max_abs_r_eq", r.max_abs_r_eq},
                         {"iterations", r.iterations},
                         {"converged", r.converged},
                         {"flag", r.flag},
                         {"error", r.error}});
  return j;
}

SweepReport eta_sweep(const std::vector<double>& etas, const Field& u0, const ConstitutiveLaw& law,
                      const Trajectory& reference, const WideConfig& base, const SolverConfig& scfg,
                      std::vector<Trajectory>* minimisers) {
  for (std::size_t i = 1; i < etas.size(); ++i)
    if (!(etas[i] < etas[i - 1])) throw Error("BadConfig", "etas must be strictly decreasing");
  SweepReport rep;
  const double T = reference.t.back();
  std::vector<double> ev, iv;
  for (double eta : etas) {
    SweepRow row;
    row.eta = eta;
    try {
      WideConfig cfg = base;
      cfg.eta = eta;
      cfg.t_study = std::max(cfg.t_study, T);
      if (cfg.t_max > 0.0) cfg.t_max = std::max(cfg.t_max, 10.0 * eta);
      const auto prep = prepare_initial_data(u0, eta, law, cfg.c0);
      const auto res = minimize(cfg, scfg, prep.u, law);
      row.value = res.value;
      row.competitor = res.competitor;
      row.iterations = res.iterations;
      row.converged = res.converged;
      row.flag = res.flag;
      row.distance = lp_w1p_distance(res.traj, reference, law.p(), T);
      const auto R = energy_report(res.traj, law);
      row.min_r_ineq = R.min_r_ineq();
      double mx = 0.0;
      for (std::size_t m = 0; m < R.t.size() && R.t[m] <= T * (1 + 1e-12); ++m) mx = std::max(mx, std::abs(R.r_eq[m]));
      row.max_abs_r_eq = mx;
      ev.push_back(eta);
      iv.push_back(res.value);
      if (minimisers) minimisers->push_back(res.traj);
    } catch (const std::exception& e) {
      row.error = e.what();
      row.converged = false;
    }
    rep.rows.push_back(row);
  }
  rep.slope = fit_slope(ev, iv);
  return rep;
}

}  // namespace wide
