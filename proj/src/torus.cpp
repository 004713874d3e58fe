#include "wide/torus.hpp"

#include <cmath>
#include <limits>
#include <map>
#include <mutex>
#include <random>

#include "wide/error.hpp"
#include "wide/spectral.hpp"

namespace wide {

namespace {
const cplx I(0.0, 1.0);
}

Field gradient(const Field& f) {
  const auto& sp = Spectral::get(f.grid());
  const int d = f.grid().d, nc = f.ncomp();
  const std::size_t N = sp.size();
  Field out(f.grid(), nc * d);
  std::vector<cplx> s(N), t(N);
  for (int c = 0; c < nc; ++c) {
    sp.forward(f.data() + c, nc, s.data());
    for (int j = 0; j < d; ++j) {
      for (std::size_t m = 0; m < N; ++m) t[m] = I * sp.kd(m, j) * s[m];
      sp.inverse(t.data(), out.data() + c * d + j, nc * d);
    }
  }
  return out;
}

Field sym_gradient(const Field& u) {
  if (u.rank() != 1) throw Error("BadRank", "sym_gradient expects a vector field");
  const int d = u.grid().d;
  Field g = gradient(u);
  Field e = Field::tensor(u.grid());
  for (std::size_t k = 0; k < u.nodes(); ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) e(k, i * d + j) = 0.5 * (g(k, i * d + j) + g(k, j * d + i));
  return e;
}

Field divergence(const Field& f) {
  const auto& sp = Spectral::get(f.grid());
  const int d = f.grid().d;
  const std::size_t N = sp.size();
  int rows;
  if (f.rank() == 1) rows = 1;
  else if (f.rank() == 2) rows = d;
  else throw Error("BadRank", "divergence expects a vector or tensor field");
  Field out(f.grid(), rows);
  std::vector<cplx> s(N), acc(N);
  for (int i = 0; i < rows; ++i) {
    std::fill(acc.begin(), acc.end(), cplx(0.0));
    for (int j = 0; j < d; ++j) {
      sp.forward(f.data() + i * d + j, f.ncomp(), s.data());
      for (std::size_t m = 0; m < N; ++m) acc[m] += I * sp.kd(m, j) * s[m];
    }
    sp.inverse(acc.data(), out.data() + i, rows);
  }
  return out;
}

Field laplacian(const Field& f) {
  const auto& sp = Spectral::get(f.grid());
  const std::size_t N = sp.size();
  Field out(f.grid(), f.ncomp());
  std::vector<cplx> s(N);
  for (int c = 0; c < f.ncomp(); ++c) {
    sp.forward(f.data() + c, f.ncomp(), s.data());
    for (std::size_t m = 0; m < N; ++m) s[m] *= -sp.k2(m);
    sp.inverse(s.data(), out.data() + c, f.ncomp());
  }
  return out;
}

Field leray_project(const Field& u) {
  if (u.rank() != 1) throw Error("BadRank", "leray_project expects a vector field");
  const auto& sp = Spectral::get(u.grid());
  const int d = u.grid().d;
  const std::size_t N = sp.size();
  auto s = spectra(u);
  for (std::size_t m = 0; m < N; ++m) {
    const double k2 = sp.k2(m);
    if (k2 == 0.0) {
      for (int c = 0; c < d; ++c) s[c * N + m] = 0.0;
      continue;
    }
    cplx kdotu = 0.0;
    for (int c = 0; c < d; ++c) kdotu += sp.kd(m, c) * s[c * N + m];
    for (int c = 0; c < d; ++c) s[c * N + m] -= sp.kd(m, c) * kdotu / k2;
  }
  Field out(u.grid(), d);
  for (int c = 0; c < d; ++c) from_spectrum(s.data() + c * N, out, c);
  return out;
}

Field remove_mean(const Field& f) {
  Field out = f;
  auto m = f.mean();
  for (std::size_t k = 0; k < f.nodes(); ++k)
    for (int c = 0; c < f.ncomp(); ++c) out(k, c) -= m[c];
  return out;
}

Field convect_unchecked(const Field& u) {
  const auto& sp = Spectral::get(u.grid());
  const int d = u.grid().d;
  const std::size_t N = sp.size(), nodes = u.nodes();
  auto s = spectra(u);
  for (int c = 0; c < d; ++c)
    for (std::size_t m = 0; m < N; ++m)
      if (!sp.keep(m)) s[c * N + m] = 0.0;
  Field ut(u.grid(), d);
  for (int c = 0; c < d; ++c) from_spectrum(s.data() + c * N, ut, c);
  std::vector<cplx> acc(N * d, cplx(0.0)), t(N);
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
  Field out(u.grid(), d);
  for (int c = 0; c < d; ++c) {
    for (std::size_t m = 0; m < N; ++m)
      if (!sp.keep(m)) acc[c * N + m] = 0.0;
    from_spectrum(acc.data() + c * N, out, c);
  }
  return out;
}

Field convect(const Field& u, double tol) {
  if (u.rank() != 1) throw Error("BadRank", "convect expects a vector field");
  const double dv = lp_norm(divergence(u), 2.0);
  const double un = lp_norm(u, 2.0);
  if (dv > tol * std::max(1.0, un))
    throw Error("DivergenceTooLarge", "||div u|| = " + std::to_string(dv) + "; project the field first");
  return convect_unchecked(u);
}

Field curl_star(const Field& v) {
  if (v.rank() != 2) throw Error("BadRank", "curl_star expects a tensor field");
  if (!v.is_skew(1e-12)) throw Error("NotSkew", "curl_star requires a skew tensor field");
  return divergence(v);
}

Field potential_T(const Field& w) {
  if (w.rank() != 1) throw Error("BadRank", "potential_T expects a vector field");
  const auto& sp = Spectral::get(w.grid());
  const int d = w.grid().d;
  const std::size_t N = sp.size();
  auto mean = w.mean();
  double mm = 0.0;
  for (double x : mean) mm = std::max(mm, std::abs(x));
  if (mm > 1e-12 * std::max(w.max_abs(), 1e-300))
    throw Error("NonzeroMean", "potential_T requires a zero-mean field");
  auto s = spectra(w);
  Field out = Field::tensor(w.grid());
  std::vector<cplx> t(N);
  for (int i = 0; i < d; ++i)
    for (int j = i + 1; j < d; ++j) {
      for (std::size_t m = 0; m < N; ++m) {
        const double k2 = sp.k2(m);
        t[m] = k2 == 0.0 ? cplx(0.0) : (-I / k2) * (sp.kd(m, j) * s[i * N + m] - sp.kd(m, i) * s[j * N + m]);
      }
      from_spectrum(t.data(), out, i * d + j);
      for (std::size_t k = 0; k < out.nodes(); ++k) out(k, j * d + i) = -out(k, i * d + j);
    }
  return out;
}

double lp_norm(const Field& f, double p) {
  if (!(p >= 1.0)) throw Error("BadExponent", "p must be >= 1");
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.nodes(); ++k) m = std::max(m, f.magnitude(k));
    return m;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < f.nodes(); ++k) {
    const double a = f.magnitude(k);
    s += p == 2.0 ? a * a : std::pow(a, p);
  }
  return std::pow(s * f.grid().cell_volume(), 1.0 / p);
}

double sobolev_seminorm(const Field& f, int order, double p) {
  if (order < 0 || order > 2) throw Error("BadOrder", "order must be 0, 1 or 2");
  if (order == 0) return lp_norm(f, p);
  if (order == 1) return lp_norm(gradient(f), p);
  return lp_norm(gradient(gradient(f)), p);
}

double poincare_ratio(const Field& u, double p) {
  if (u.ncomp() != 1) throw Error("BadRank", "poincare_ratio expects a scalar field");
  if (std::abs(u.mean()[0]) > 1e-12 * std::max(u.max_abs(), 1e-300) || u.max_abs() == 0.0)
    throw Error("NonzeroMean", "test field must be nonzero with zero mean");
  const double g = lp_norm(gradient(u), p);
  if (g == 0.0) throw Error("NonzeroMean", "constant test field");
  return lp_norm(u, p) / g;
}

namespace {

struct PoincareEval {
  double J = 0.0;
  Field grad;
};

PoincareEval poincare_eval(const Field& u, double p) {
  const auto& g = u.grid();
  const int d = g.d;
  Field gu = gradient(u);
  double A = 0.0, B = 0.0;
  Field fu = Field::scalar(g);
  Field flux = Field::vector(g);
  for (std::size_t k = 0; k < u.nodes(); ++k) {
    const double a = std::abs(u(k, 0));
    A += std::pow(a, p);
    fu(k, 0) = a > 0.0 ? std::pow(a, p - 2.0) * u(k, 0) : 0.0;
    const double b = gu.magnitude(k);
    B += std::pow(b, p);
    const double w = b > 0.0 ? std::pow(b, p - 2.0) : 0.0;
    for (int j = 0; j < d; ++j) flux(k, j) = w * gu(k, j);
  }
  PoincareEval e;
  e.J = (std::log(A) - std::log(B)) / p;
  Field dv = divergence(flux);
  e.grad = Field::scalar(g);
  for (std::size_t k = 0; k < u.nodes(); ++k) e.grad(k, 0) = (fu(k, 0) / A + dv(k, 0) / B) / g.cell_volume();
  e.grad = remove_mean(e.grad);
  return e;
}

Field inverse_laplace(const Field& f) {
  const auto& sp = Spectral::get(f.grid());
  const std::size_t N = sp.size();
  auto s = spectra(f);
  for (std::size_t m = 0; m < N; ++m) s[m] = sp.k2(m) == 0.0 ? cplx(0.0) : s[m] / sp.k2(m);
  Field out(f.grid(), 1);
  from_spectrum(s.data(), out, 0);
  return out;
}

}  // namespace

double poincare_constant(const TorusGrid& g, double p, std::uint64_t seed) {
  if (!(p > 1.0) || std::isinf(p)) throw Error("BadExponent", "p must lie in (1, inf)");
  Field u = random_field(g, 1, std::max(2, g.n / 4), seed, 2.0);
  for (std::size_t k = 0; k < u.nodes(); ++k) u(k, 0) += std::cos(g.coord(g.multi_index(k)[0]));
  u = remove_mean(u);
  u *= 1.0 / lp_norm(u, p);
  PoincareEval cur = poincare_eval(u, p);
  double step = 1.0;
  int stable = 0;
  for (int it = 0; it < 20000; ++it) {
    Field dir = inverse_laplace(cur.grad);
    const double slope = inner(cur.grad, dir);
    if (slope <= 0.0) return std::exp(cur.J);
    bool accepted = false;
    for (int ls = 0; ls < 60; ++ls) {
      Field trial = u;
      trial.axpy(step, dir);
      trial = remove_mean(trial);
      trial *= 1.0 / lp_norm(trial, p);
      PoincareEval e = poincare_eval(trial, p);
      if (e.J >= cur.J + 1e-4 * step * slope) {
        const double change = e.J - cur.J;
        u = std::move(trial);
        cur = std::move(e);
        accepted = true;
        stable = change < 1e-14 ? stable + 1 : 0;
        step *= 2.0;
        break;
      }
      step *= 0.5;
    }
    if (!accepted || stable >= 5) return std::exp(cur.J);
  }
  throw Error("NoConvergence", "Poincare ascent did not stabilise");
}

double default_c4(const TorusGrid& g) {
  static std::mutex mu;
  static std::map<std::pair<int, int>, double> cache;
  std::lock_guard<std::mutex> lock(mu);
  auto it = cache.find({g.d, g.n});
  if (it != cache.end()) return it->second;
  const double cp = 1.05 * poincare_constant(g, 4.0);
  const double c4 = 0.5 * (9.0 * cp * cp + 1.0);
  cache[{g.d, g.n}] = c4;
  return c4;
}

Field random_field(const TorusGrid& g, int ncomp, int kmax, std::uint64_t seed, double decay) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, 1.0);
  Field f(g, ncomp);
  for (double& x : f.values()) x = nd(rng);
  const auto& sp = Spectral::get(g);
  const std::size_t N = sp.size();
  auto s = spectra(f);
  for (int c = 0; c < ncomp; ++c)
    for (std::size_t m = 0; m < N; ++m) {
      double kk = 0.0;
      bool ok = true;
      for (int a = 0; a < g.d; ++a) {
        const int k = sp.kint(m, a);
        if (std::abs(k) >= g.n / 2) ok = false;
        kk += double(k) * k;
      }
      if (!ok || kk == 0.0 || kk > double(kmax) * kmax) s[c * N + m] = 0.0;
      else s[c * N + m] *= std::pow(kk, -0.5 * decay) / std::sqrt(double(N));
    }
  for (int c = 0; c < ncomp; ++c) from_spectrum(s.data() + c * N, f, c);
  return f;
}

Field random_solenoidal(const TorusGrid& g, int kmax, std::uint64_t seed, double decay) {
  return leray_project(random_field(g, g.d, kmax, seed, decay));
}

Field random_skew(const TorusGrid& g, int kmax, std::uint64_t seed) {
  Field a = random_field(g, g.d * g.d, kmax, seed);
  const int d = g.d;
  Field v = Field::tensor(g);
  for (std::size_t k = 0; k < v.nodes(); ++k)
    for (int i = 0; i < d; ++i)
      for (int j = 0; j < d; ++j) v(k, i * d + j) = 0.5 * (a(k, i * d + j) - a(k, j * d + i));
  return v;
}

}  // namespace wide
