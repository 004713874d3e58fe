// Acceptance checks: one PASS/FAIL line per criterion, nonzero exit if any fails.

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <functional>
#include <limits>
#include <map>
#include <random>
#include <sstream>
#include <string>
#include <vector>

#include "wide/minimizer.hpp"
#include "wide/reference.hpp"
#include "wide/torus.hpp"
#include "wide/truncation.hpp"

using namespace wide;

namespace {

struct Outcome {
  bool pass = false;
  std::string detail;
  double seconds = 0.0;
  double budget = 0.0;  // 0: no runtime bound
};

std::string fmt(const char* f, double a) {
  char buf[64];
  std::snprintf(buf, sizeof buf, f, a);
  return buf;
}

double now() {
  using namespace std::chrono;
  return duration<double>(steady_clock::now().time_since_epoch()).count();
}

// Energy-inequality and competitor bookkeeping over every run in this binary.
struct Ledger {
  double worst_ineq = std::numeric_limits<double>::infinity();
  std::string worst_where;
  int runs = 0;
  bool below_competitor = true;
  int minimisers = 0;

  void energy(double r, const std::string& where) {
    ++runs;
    if (r < worst_ineq) {
      worst_ineq = r;
      worst_where = where;
    }
  }
  void competitor(double value, double comp) {
    ++minimisers;
    below_competitor = below_competitor && value <= comp;
  }
} ledger;

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

// --- Stokes mode ---------------------------------------------------------

const double kNu = 0.5;

std::map<std::pair<int, double>, double> rate_cache;

// Decay rate of the discrete minimiser for the shear mode (k, 0).
double minimiser_rate(int k, double eta) {
  const auto key = std::make_pair(k, eta);
  if (auto it = rate_cache.find(key); it != rate_cache.end()) return it->second;
  const TorusGrid g(2, 8);
  const auto law = ConstitutiveLaw::newtonian(kNu, 2);
  const double lam = stokes_mode_oracle(k, eta, kNu).lambda_minus;
  WideConfig c;
  c.eta = eta;
  c.convection = false;
  c.stabiliser = false;
  c.ratio = 1.0;
  c.tau0 = c.tau_cap = std::min(0.002 / std::abs(lam), eta / 100.0);
  c.t_max = 30.0 * eta;
  const Field u0 = shear(g, k, 0);
  const auto r = minimize(c, SolverConfig{}, u0, law);
  ledger.competitor(r.value, r.competitor);
  ledger.energy(energy_report(r.traj, law).min_r_ineq(), "stokes mode k=" + std::to_string(k));
  const double rate = fitted_rate(r.traj.t, mode_amplitudes(r.traj, u0), 15.0 * eta);
  rate_cache[key] = rate;
  return rate;
}

Outcome mode_oracle() {
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (int k : {1, 2, 3})
    for (double eta : {0.4, 0.2, 0.1}) {
      const double lam = stokes_mode_oracle(k, eta, kNu).lambda_minus;
      const double err = std::abs(minimiser_rate(k, eta) - lam) / std::abs(lam);
      worst = std::max(worst, err);
      o.pass = o.pass && err <= 1e-5;
    }
  o.detail = "worst relative rate error " + fmt("%.2e", worst) + " over 9 (eta, |k|) pairs";
  return o;
}

Outcome parabolic_limit() {
  Outcome o;
  o.pass = true;
  std::ostringstream os;
  os << "ratios";
  const std::vector<double> etas{0.2, 0.1, 0.05, 0.025};
  double prev = 0.0;
  for (double eta : etas) {
    const double gap = std::abs(minimiser_rate(1, eta) + kNu);
    if (prev > 0.0) {
      const double ratio = gap / prev;
      os << ' ' << fmt("%.4f", ratio);
      o.pass = o.pass && std::abs(ratio - 0.5) <= 0.5 * 0.15;
    }
    prev = gap;
  }
  o.detail = "|k|=1, eta 0.2 -> 0.025, " + os.str();
  return o;
}

// --- first variation -------------------------------------------------------

Trajectory random_trajectory(const TorusGrid& g, const WideConfig& cfg, std::uint64_t seed, double amp = 0.5) {
  Trajectory tr = constant_trajectory(amp * random_solenoidal(g, 3, seed), cfg);
  const Field f1 = random_solenoidal(g, 4, seed + 1), f2 = random_solenoidal(g, 2, seed + 2);
  for (std::size_t m = 1; m < tr.size(); ++m) {
    const double t = tr.t[m];
    tr.u[m] *= std::exp(-t);
    tr.u[m].axpy(amp * std::sin(3.0 * t), f1);
    tr.u[m].axpy(amp * t * std::exp(-t), f2);
  }
  return tr;
}

std::vector<Field> random_direction(const Trajectory& tr, std::uint64_t seed) {
  std::vector<Field> phi(tr.size(), Field(tr.grid(), tr.grid().d));
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> N(0.0, 1.0);
  const Field a = random_solenoidal(tr.grid(), 4, seed), b = random_solenoidal(tr.grid(), 3, seed + 7);
  const double w1 = N(rng), w2 = N(rng), w3 = N(rng);
  for (std::size_t m = 1; m < tr.size(); ++m) {
    phi[m] = a;
    phi[m] *= std::sin(w1 * tr.t[m] + w2);
    phi[m].axpy(std::cos(w3 * tr.t[m]), b);
  }
  return phi;
}

Trajectory shifted(const Trajectory& tr, const std::vector<Field>& phi, double h) {
  Trajectory out = tr;
  for (std::size_t m = 0; m < tr.size(); ++m) out.u[m].axpy(h, phi[m]);
  return out;
}

Outcome gradient_check() {
  const TorusGrid g(2, 16);
  WideConfig cfg;
  cfg.eta = 0.2;
  cfg.ratio = 1.0;
  cfg.tau0 = cfg.tau_cap = 0.0625;
  cfg.t_max = 32 * 0.0625;
  std::vector<ConstitutiveLaw> laws{ConstitutiveLaw::newtonian(0.5, 2)};
  for (double p : {1.6, 2.0, 2.5, 3.0}) laws.push_back(ConstitutiveLaw::power_law(p, 0.5, 2));
  // the Ellis family covers p = (alpha + 1)/alpha <= 2 only
  laws.push_back(ConstitutiveLaw::ellis(0.5, 0.5, 5.0 / 3.0, 2));
  laws.push_back(ConstitutiveLaw::ellis(0.5, 0.5, 1.0, 2));
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  std::size_t nodes = 0;
  for (const auto& law : laws) {
    const Trajectory tr = random_trajectory(g, cfg, 11);
    nodes = tr.size();
    const auto grad = first_variation(tr, law);
    for (int k = 0; k < 10; ++k) {
      const auto phi = random_direction(tr, 100 + k);
      const double h = 1e-5;
      const double fd =
          (evaluate_functional(shifted(tr, phi, h), law) - evaluate_functional(shifted(tr, phi, -h), law)) / (2 * h);
      const double an = traj_inner(grad, phi);
      const double err = std::abs(fd - an) / std::abs(an);
      worst = std::max(worst, err);
      o.pass = o.pass && err <= 1e-5;
    }
  }
  o.detail = std::to_string(laws.size()) + " laws x 10 directions, n=16, M=" + std::to_string(nodes - 1) +
             ", worst relative error " + fmt("%.2e", worst);
  return o;
}

// --- eta sweeps ----------------------------------------------------------------

struct SweepRun {
  SweepReport rep;
  double seconds = 0.0;
};

SweepRun sweep(double p, int n, const std::vector<double>& etas, const std::string& label) {
  const double t0 = now();
  const TorusGrid g(2, n);
  const auto law = ConstitutiveLaw::power_law(p, 0.5, 2);
  const Field u0 = taylor_green(g);
  ReferenceConfig rc;
  rc.dt = 1e-3;
  rc.t_end = 1.0;
  const auto ref = run_reference(rc, u0, law);
  ledger.energy(energy_report(ref, law).min_r_ineq(), label + " reference");
  SweepRun s;
  s.rep = eta_sweep(etas, u0, law, ref, WideConfig{}, SolverConfig{});
  for (const auto& r : s.rep.rows) {
    if (!r.error.empty()) continue;
    ledger.competitor(r.value, r.competitor);
    ledger.energy(r.min_r_ineq, label + " eta=" + fmt("%g", r.eta));
  }
  s.seconds = now() - t0;
  return s;
}

bool rows_ok(const SweepReport& rep) {
  for (const auto& r : rep.rows)
    if (!r.error.empty() || !r.converged) return false;
  return true;
}

std::string column(const SweepReport& rep, double SweepRow::*field) {
  std::string s;
  for (const auto& r : rep.rows) s += (s.empty() ? "" : " ") + fmt("%.3e", r.*field);
  return s;
}

bool decreasing(const SweepReport& rep, double SweepRow::*field, double slack) {
  for (std::size_t i = 1; i < rep.rows.size(); ++i)
    if (rep.rows[i].*field > (1.0 + slack) * rep.rows[i - 1].*field) return false;
  return true;
}

// --- truncation ----------------------------------------------------------------

SpaceTimeField random_st(const TorusGrid& g, std::size_t nt, double tau, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  SpaceTimeField f(g, 1, nt, 0.0, tau);
  for (double& x : f.data) x = u(rng);
  return f;
}

// Solenoidal curl*(psi), psi oscillating in time plus a concentrated bump.
SpaceTimeField rough_w(const TorusGrid& g, std::size_t nt, double tau, unsigned seed, double amp, double spike) {
  const Field s1 = random_skew(g, 3, seed), s2 = random_skew(g, 5, seed + 101);
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  const double t0 = (0.3 + 0.4 * u(rng)) * tau * static_cast<double>(nt - 1);
  const double x0 = 2.0 * M_PI * u(rng), y0 = 2.0 * M_PI * u(rng);
  SpaceTimeField psi(g, g.d * g.d, nt, 0.0, tau);
  for (std::size_t k = 0; k < nt; ++k) {
    const double t = psi.time(k);
    Field f = s1;
    f *= amp * std::cos(3.0 * t);
    f.axpy(amp * std::sin(7.0 * t), s2);
    for (std::size_t n = 0; n < g.size(); ++n) {
      const auto i = g.multi_index(n);
      double r2 = 0.0;
      const double c[2] = {x0, y0};
      for (int a = 0; a < 2; ++a) {
        double dx = g.coord(i[a]) - c[a];
        dx -= 2.0 * M_PI * std::round(dx / (2.0 * M_PI));
        r2 += dx * dx;
      }
      const double b = spike * std::exp(-r2 / 0.15 - (t - t0) * (t - t0) / (4.0 * tau * tau));
      f(n, 1) += b;
      f(n, g.d) -= b;
    }
    psi.set_slice(k, f);
  }
  return map_slices(psi, [](const Field& s) { return curl_star(s); });
}

std::vector<std::uint8_t> random_mask(const TorusGrid& g, std::size_t nt, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_int_distribution<int> pos(0, g.n - 1), tpos(0, static_cast<int>(nt) - 1), len(1, 6);
  std::bernoulli_distribution sparse(0.01);
  std::vector<std::uint8_t> m(nt * g.size(), 0);
  const int boxes = 1 + static_cast<int>(seed % 4);
  for (int b = 0; b < boxes; ++b) {
    const int t0 = tpos(rng), tl = len(rng), x0 = pos(rng), xl = len(rng), y0 = pos(rng), yl = len(rng);
    for (int k = t0; k < std::min<int>(t0 + tl, nt); ++k)
      for (int i = x0; i < x0 + xl; ++i)
        for (int j = y0; j < y0 + yl; ++j) m[k * g.size() + g.node({i % g.n, j % g.n, 0})] = 1;
  }
  for (auto& x : m)
    if (sparse(rng)) x = 1;
  return m;
}

Outcome maximal_oracle() {
  const TorusGrid g(2, 8);
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  std::size_t exact = 0, total = 0;
  for (unsigned seed = 1; seed <= 5; ++seed) {
    const auto f = random_st(g, 8, 0.03 * seed, 500 + seed);
    const double kappa = 0.4 + 0.35 * seed, eta = 0.015 * seed;
    for (Metric m : {Metric::Parabolic, Metric::Elliptic}) {
      const auto a = maximal_function(f, m, kappa, eta);
      const auto b = maximal_function_brute(f, m, kappa, eta);
      for (std::size_t i = 0; i < a.data.size(); ++i) {
        const double rel = std::abs(a.data[i] - b.data[i]) / b.data[i];
        worst = std::max(worst, rel);
        exact += a.data[i] == b.data[i];
        ++total;
      }
    }
  }
  o.pass = worst <= 1e-12;
  o.detail = "5 fields x 2 metrics on 8x8x8, " + std::to_string(exact) + "/" + std::to_string(total) +
             " bitwise equal, worst relative difference " + fmt("%.1e", worst);
  return o;
}

Outcome truncation_bounds() {
  const TorusGrid g(2, 32);
  const auto w = rough_w(g, 64, 0.02, 17, 2.0, 6.0);
  const double L0 = 1.0;
  Outcome o;
  o.pass = true;
  std::vector<double> cw, ct, ctt;
  std::ostringstream os;
  for (double L : {L0, 2 * L0, 4 * L0}) {
    TruncationConfig cfg;
    cfg.L = L;
    cfg.p = 2.0;
    cfg.eta = 0.05;
    const auto R = truncate_velocity(w, cfg);
    const auto& b = R.trunc.bounds;
    o.pass = o.pass && b.good_identity && b.changed_measure <= b.rhs && !R.bad.empty();
    cw.push_back(b.c_w2inf);
    ct.push_back(b.c_dt);
    ctt.push_back(b.c_dtt);
    os << " L=" << L << ": bad " << R.bad.count() << ", changed " << fmt("%.3e", b.changed_measure) << " <= "
       << fmt("%.3e", b.rhs) << ", scaled " << fmt("%.3f", b.c_w2inf) << '/' << fmt("%.3f", b.c_dt) << '/'
       << fmt("%.3f", b.c_dtt) << ';';
  }
  for (const auto* v : {&cw, &ct, &ctt}) {
    const auto [lo, hi] = std::minmax_element(v->begin(), v->end());
    o.pass = o.pass && *lo > 0.0 && *hi <= 2.0 * *lo;
  }
  o.detail = "n=32, 64 time nodes;" + os.str();
  return o;
}

Outcome solenoidality() {
  const TorusGrid g(2, 16);
  Outcome o;
  o.pass = true;
  double worst = 0.0;
  for (unsigned seed = 31; seed < 36; ++seed) {
    TruncationConfig cfg;
    cfg.L = 1.5;
    cfg.eta = 0.04;
    const auto R = truncate_velocity(rough_w(g, 20, 0.03, seed, 2.0, 5.0), cfg);
    worst = std::max(worst, R.report.max_div);
    o.pass = o.pass && R.report.max_div <= 1e-10 && !R.bad.empty();
  }
  o.detail = "5 rough inputs with nonempty bad sets, max |div wL| " + fmt("%.1e", worst);
  return o;
}

Outcome potential_identities() {
  Outcome o;
  double worst_id = 0.0, worst_div = 0.0;
  for (int i = 0; i < 100; ++i) {
    const int d = i % 2 == 0 ? 2 : 3;
    const TorusGrid g(d, d == 2 ? 16 : 8);
    const Field w = random_solenoidal(g, 2 + i % 4, 1000 + i);
    const Field back = curl_star(potential_T(w));
    worst_id = std::max(worst_id, (back - w).max_abs() / std::max(1.0, w.max_abs()));
    const Field c = curl_star(random_skew(g, 2 + i % 5, 2000 + i));
    worst_div = std::max(worst_div, divergence(c).max_abs() / std::max(1.0, c.max_abs()));
  }
  o.pass = worst_id <= 1e-10 && worst_div <= 1e-12;
  o.detail = "100 fields, |curl* T w - w| " + fmt("%.1e", worst_id) + ", |div curl*| " + fmt("%.1e", worst_div);
  return o;
}

Outcome whitney() {
  const TorusGrid g(2, 16);
  Outcome o;
  o.pass = true;
  std::size_t cubes = 0;
  double defect = 0.0;
  for (unsigned seed = 41; seed <= 50; ++seed) {
    TruncationConfig cfg;
    cfg.L = 1.0 + seed % 7;
    cfg.eta = 0.02 + 0.01 * (seed % 5);
    const double tau = 0.02 * (1 + seed % 3);
    const auto b = BadSet::from_mask(g, 14, -0.1, tau, random_mask(g, 14, seed));
    const auto C = whitney_cover(b, cfg);
    bool sums = true;
    for (std::size_t p = 0; p < b.mask.size(); ++p) {
      double s = 0.0;
      for (std::size_t at = C.offset[p]; at < C.offset[p + 1]; ++at) s += C.phi[at];
      sums = sums && std::abs(s - (b.mask[p] ? 1.0 : 0.0)) <= 1e-10;
    }
    cubes += C.cubes.size();
    defect = std::max(defect, C.checks.partition_defect);
    o.pass = o.pass && C.checks.pass() && sums;
  }
  o.detail = "10 random bad sets, " + std::to_string(cubes) + " cubes, partition defect " + fmt("%.1e", defect);
  return o;
}

}  // namespace

int main() {
  std::map<int, std::pair<std::string, Outcome>> out;
  auto timed = [&](int id, const std::string& name, double budget, const std::function<Outcome()>& f) {
    const double t0 = now();
    Outcome o;
    try {
      o = f();
    } catch (const std::exception& e) {
      o.pass = false;
      o.detail = std::string("threw ") + e.what();
    }
    o.seconds = now() - t0;
    o.budget = budget;
    out[id] = {name, o};
    std::fprintf(stderr, "criterion %d done in %.1f s\n", id, o.seconds);
  };

  timed(1, "mode oracle", 60, mode_oracle);
  timed(2, "elliptic-to-parabolic limit", 60, parabolic_limit);
  timed(3, "gradient correctness", 300, gradient_check);

  SweepRun strong;
  std::string strong_error;
  try {
    strong = sweep(3.0, 32, {0.4, 0.2, 0.1, 0.05}, "p=3");
  } catch (const std::exception& e) {
    strong_error = std::string("threw ") + e.what();
  }
  std::fprintf(stderr, "p=3 sweep done in %.1f s\n", strong.seconds);
  if (!strong_error.empty()) {
    out[4] = {"I bound and slope", Outcome{false, strong_error}};
    out[6] = {"strong regime", Outcome{false, strong_error}};
  } else {
    Outcome o;
    o.pass = rows_ok(strong.rep) && strong.rep.slope <= 1.2;
    for (const auto& r : strong.rep.rows) o.pass = o.pass && r.value <= r.competitor;
    o.pass = o.pass && ledger.below_competitor;
    o.detail = "p=3, n=32, I = " + column(strong.rep, &SweepRow::value) + ", slope " + fmt("%.3f", strong.rep.slope) +
               ", I <= I(ubar) on all " + std::to_string(ledger.minimisers) + " minimisers so far";
    o.seconds = strong.seconds;
    o.budget = 600;
    out[4] = {"I bound and slope", o};
    o = Outcome{};
    o.pass = rows_ok(strong.rep) && decreasing(strong.rep, &SweepRow::max_abs_r_eq, 0.1) &&
             decreasing(strong.rep, &SweepRow::distance, 0.1);
    o.detail = "eta 0.4..0.05, |r_eq| " + column(strong.rep, &SweepRow::max_abs_r_eq) + "; distance " +
               column(strong.rep, &SweepRow::distance);
    o.seconds = strong.seconds;
    o.budget = 1800;
    out[6] = {"strong regime", o};
  }
  timed(7, "weak regime", 0, [] {
    const auto weak = sweep(1.8, 16, {0.4, 0.2, 0.1}, "p=1.8");
    Outcome o;
    o.pass = rows_ok(weak.rep);
    for (const auto& r : weak.rep.rows) o.pass = o.pass && r.min_r_ineq >= -1e-6;
    o.detail = "p=1.8, n=16, min r_ineq " + column(weak.rep, &SweepRow::min_r_ineq) + "; |r_eq| (recorded) " +
               column(weak.rep, &SweepRow::max_abs_r_eq);
    return o;
  });
  {
    Outcome o;
    o.pass = ledger.worst_ineq >= -1e-6;
    o.detail = std::to_string(ledger.runs) + " runs, worst residual " + fmt("%.2e", ledger.worst_ineq) + " (" +
               ledger.worst_where + ")";
    out[5] = {"energy inequality", o};
  }
  timed(8, "maximal-function oracle", 60, maximal_oracle);
  timed(9, "truncation bounds", 600, truncation_bounds);
  timed(10, "solenoidality through the pipeline", 0, solenoidality);
  timed(11, "potential identities", 0, potential_identities);
  timed(12, "Whitney cover properties", 120, whitney);

  int failed = 0;
  for (auto& [id, entry] : out) {
    auto& [name, o] = entry;
    const bool in_time = o.budget <= 0.0 || o.seconds <= o.budget;
    const bool ok = o.pass && in_time;
    failed += !ok;
    std::printf("%s %2d %s: %s [%.1f s%s]\n", ok ? "PASS" : "FAIL", id, name.c_str(), o.detail.c_str(), o.seconds,
                in_time ? "" : ", over budget");
  }
  std::printf("%d/%zu criteria passed\n", static_cast<int>(out.size()) - failed, out.size());
  return failed == 0 ? 0 : 1;
}
