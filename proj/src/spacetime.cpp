#include <algorithm>
#include <cmath>

#include "wide/error.hpp"
#include "wide/parallel.hpp"
#include "wide/torus.hpp"
#include "wide/truncation.hpp"

namespace wide {

SpaceTimeField::SpaceTimeField(const TorusGrid& g, int nc, std::size_t n_t, double start, double step)
    : grid(g), ncomp(nc), nt(n_t), t0(start), tau(step), data(n_t * g.size() * nc, 0.0) {
  if (nc < 1) throw Error("BadRank", "a space-time field needs at least one component");
  if (!(step > 0.0)) throw Error("BadParameter", "time step must be positive");
}

int SpaceTimeField::rank() const {
  if (ncomp == 1) return 0;
  if (ncomp == grid.d) return 1;
  if (ncomp == grid.d * grid.d) return 2;
  return -1;
}

double SpaceTimeField::magnitude(std::size_t k, std::size_t node) const {
  const double* p = &data[(k * grid.size() + node) * ncomp];
  double s = 0.0;
  for (int c = 0; c < ncomp; ++c) s += p[c] * p[c];
  return std::sqrt(s);
}

SpaceTimeField SpaceTimeField::magnitude() const {
  SpaceTimeField m(grid, 1, nt, t0, tau);
  const std::size_t N = grid.size();
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t x = 0; x < N; ++x) m.data[k * N + x] = magnitude(k, x);
  return m;
}

Field SpaceTimeField::slice(std::size_t k) const {
  Field f(grid, ncomp);
  const std::size_t len = grid.size() * ncomp;
  std::copy_n(data.begin() + k * len, len, f.data());
  return f;
}

void SpaceTimeField::set_slice(std::size_t k, const Field& f) {
  if (f.grid() != grid || f.ncomp() != ncomp) throw Error("WindowMismatch", "slice layout differs");
  const std::size_t len = grid.size() * ncomp;
  std::copy_n(f.data(), len, data.begin() + k * len);
}

bool SpaceTimeField::same_window(const SpaceTimeField& o) const {
  return grid == o.grid && nt == o.nt && t0 == o.t0 && tau == o.tau;
}

double SpaceTimeField::max_abs() const {
  double m = 0.0;
  for (double x : data) m = std::max(m, std::abs(x));
  return m;
}

bool SpaceTimeField::finite() const {
  for (double x : data)
    if (!std::isfinite(x)) return false;
  return true;
}

SpaceTimeField map_slices(const SpaceTimeField& s, const std::function<Field(const Field&)>& f) {
  if (s.nt == 0) return s;
  std::vector<Field> out(s.nt);
  parallel_for(s.nt, [&](std::size_t k) { out[k] = f(s.slice(k)); });
  SpaceTimeField r(s.grid, out[0].ncomp(), s.nt, s.t0, s.tau);
  for (std::size_t k = 0; k < s.nt; ++k) r.set_slice(k, out[k]);
  return r;
}

SpaceTimeField reflect_extend(const SpaceTimeField& s) {
  if (s.nt < 2) throw Error("BadParameter", "reflection needs at least two time nodes");
  const long m = static_cast<long>(s.nt) - 1;
  SpaceTimeField r(s.grid, s.ncomp, 3 * s.nt - 2, s.t0 - m * s.tau, s.tau);
  const std::size_t len = s.grid.size() * s.ncomp;
  for (long k = 0; k < static_cast<long>(r.nt); ++k) {
    long src = k - m;
    if (src < 0) src = -src;
    if (src > m) src = 2 * m - src;
    std::copy_n(s.data.begin() + src * len, len, r.data.begin() + k * len);
  }
  return r;
}

SpaceTimeField skew_part(const SpaceTimeField& f) {
  const int d = f.grid.d, dd = d * d;
  if (f.ncomp % dd != 0) throw Error("BadRank", "skew_part expects tensor blocks");
  const int inner = f.ncomp / dd;
  SpaceTimeField r = f;
  const std::size_t P = f.points();
  for (std::size_t q = 0; q < P; ++q) {
    double* a = &r.data[q * f.ncomp];
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j)
        for (int s = 0; s < inner; ++s) {
          double& x = a[(i * d + j) * inner + s];
          double& y = a[(j * d + i) * inner + s];
          const double v = 0.5 * (x - y);
          x = v;
          y = -v;
        }
  }
  return r;
}

double st_lp_norm(const SpaceTimeField& f, double p) {
  if (!(p >= 1.0)) throw Error("BadExponent", "p must be >= 1");
  const std::size_t N = f.grid.size();
  if (std::isinf(p)) {
    double m = 0.0;
    for (std::size_t k = 0; k < f.nt; ++k)
      for (std::size_t x = 0; x < N; ++x) m = std::max(m, f.magnitude(k, x));
    return m;
  }
  double s = 0.0;
  for (std::size_t k = 0; k < f.nt; ++k)
    for (std::size_t x = 0; x < N; ++x) s += std::pow(f.magnitude(k, x), p);
  return std::pow(s * f.cell_volume(), 1.0 / p);
}

double st_w1p_norm(const SpaceTimeField& f, double p) {
  std::vector<double> part(f.nt);
  parallel_for(f.nt, [&](std::size_t k) {
    const Field s = f.slice(k);
    part[k] = std::pow(lp_norm(s, p), p) + std::pow(lp_norm(gradient(s), p), p);
  });
  double sum = 0.0;
  for (double x : part) sum += x;
  return std::pow(sum * f.tau, 1.0 / p);
}

// ---------------------------------------------------------------------------

double ThresholdRule::lambda(const SpaceTimeField& f) const {
  if (kind == Fixed) return value;
  double s = 0.0;
  const std::size_t P = f.points();
  for (std::size_t i = 0; i < P; ++i) {
    const double* a = &f.data[i * f.ncomp];
    for (int c = 0; c < f.ncomp; ++c) s += a[c] * a[c];
  }
  return value * std::sqrt(s / std::max<std::size_t>(P, 1));
}

nlohmann::json ThresholdRule::to_json() const {
  return {{"kind", kind == Fixed ? "fixed" : "rms_multiple"}, {"value", value}};
}

ThresholdRule ThresholdRule::from_json(const nlohmann::json& j) {
  ThresholdRule r;
  const std::string k = j.value("kind", std::string("rms_multiple"));
  if (k == "fixed") r.kind = Fixed;
  else if (k == "rms_multiple") r.kind = RmsMultiple;
  else throw Error("BadParameter", "unknown threshold rule " + k);
  r.value = j.value("value", r.value);
  return r;
}

double TruncationConfig::kappa() const { return std::pow(L, 0.5 * (p - 2.0)); }
double TruncationConfig::beta() const { return std::max(0.5 * p, 0.5 * (3.0 * p - 4.0)); }
double TruncationConfig::c_d(int d) { return 4.0 * (std::sqrt(static_cast<double>(d)) + 1.0); }

std::array<double, 4> TruncationConfig::thresholds() const {
  const double la = 2.0 * std::pow(L, alpha());
  return {2.0 * L, 2.0 * std::pow(L, 0.5 * p) / std::sqrt(eta), la, la};
}

void TruncationConfig::validate() const {
  if (!(L > 0.0) || !std::isfinite(L)) throw Error("BadParameter", "L must be positive");
  if (!(p > 1.0)) throw Error("BadExponent", "truncation needs p > 1");
  if (!(eta > 0.0 && eta < 1.0)) throw Error("BadParameter", "eta must lie in (0, 1)");
  if (!(s_prime > 1.0)) throw Error("BadParameter", "s_prime must exceed 1");
  if (!(eps > 0.0 && eps < 0.1)) throw Error("BadParameter", "eps must lie in (0, 1/10)");
  if (m_min < 1) throw Error("LevelRangeInvalid", "m_min must be at least 1");
  if (m_max != -1 && m_max < m_min) throw Error("LevelRangeInvalid", "m_max below m_min");
  if (m_max > 60) throw Error("LevelRangeInvalid", "m_max above 60");
  if (!(split_rule.value > 0.0)) throw Error("BadParameter", "split threshold must be positive");
}

nlohmann::json TruncationConfig::to_json() const {
  return {{"L", L},         {"p", p},         {"eta", eta},       {"s_prime", s_prime},
          {"m_min", m_min}, {"m_max", m_max}, {"eps", eps},       {"centred", centred},
          {"split_rule", split_rule.to_json()}, {"kappa", kappa()}, {"alpha", alpha()},
          {"beta", beta()}};
}

TruncationConfig TruncationConfig::from_json(const nlohmann::json& j) {
  TruncationConfig c;
  c.L = j.value("L", c.L);
  c.p = j.value("p", c.p);
  c.eta = j.value("eta", c.eta);
  c.s_prime = j.value("s_prime", c.s_prime);
  c.m_min = j.value("m_min", c.m_min);
  c.m_max = j.value("m_max", c.m_max);
  c.eps = j.value("eps", c.eps);
  c.centred = j.value("centred", c.centred);
  if (j.contains("split_rule")) c.split_rule = ThresholdRule::from_json(j["split_rule"]);
  return c;
}

const char* metric_name(Metric m) { return m == Metric::Parabolic ? "parabolic" : "elliptic"; }

double metric_distance(Metric m, double t, double x, double kappa, double eta) {
  const double s = m == Metric::Parabolic ? kappa * std::sqrt(std::abs(t)) : kappa * std::abs(t) / std::sqrt(eta);
  return std::max(std::abs(x), s);
}

// ---------------------------------------------------------------------------
// Maximal functions

int top_radius_level(const TorusGrid& g) {
  int j = 0;
  while ((2 << j) <= g.n / 2) ++j;
  return j;
}

long time_reach(const SpaceTimeField& f, Metric m, int j, double kappa, double eta) {
  const double rho = f.grid.h() * std::ldexp(1.0, j);
  const double R = m == Metric::Parabolic ? (rho / kappa) * (rho / kappa) : rho * std::sqrt(eta) / kappa;
  const long cap = static_cast<long>(f.nt);
  if (!(R / f.tau < static_cast<double>(cap))) return cap;
  long k = static_cast<long>(std::floor(R / f.tau));
  while (k > 0 && static_cast<double>(k) * f.tau >= R) --k;
  return k;
}

namespace {

// Spatial ball of radius 2^j cells: offsets of the leading d-1 axes and the
// half-width of the interval along the last axis.
struct Row {
  std::array<int, 2> o{};
  int w = 0;
};

std::vector<Row> ball_rows(int d, int j) {
  const long R2 = 1L << (2 * j);
  const int R = 1 << j;
  std::vector<Row> rows;
  auto half = [&](long used) {
    int w = -1;
    while (static_cast<long>(w + 1) * (w + 1) + used < R2) ++w;
    return w;
  };
  if (d == 2) {
    for (int a = -R + 1; a < R; ++a) {
      const int w = half(static_cast<long>(a) * a);
      if (w >= 0) rows.push_back({{a, 0}, w});
    }
  } else {
    for (int a = -R + 1; a < R; ++a)
      for (int b = -R + 1; b < R; ++b) {
        const int w = half(static_cast<long>(a) * a + static_cast<long>(b) * b);
        if (w >= 0) rows.push_back({{a, b}, w});
      }
  }
  return rows;
}

std::size_t ball_size(const std::vector<Row>& rows) {
  std::size_t s = 0;
  for (const auto& r : rows) s += 2 * r.w + 1;
  return s;
}

inline int wrap(int i, int n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Node index of the line start (last axis index 0) shifted by a row offset.
inline std::size_t line_of(const std::array<int, 3>& idx, const Row& r, int d, int n) {
  if (d == 2) return static_cast<std::size_t>(wrap(idx[0] + r.o[0], n)) * n;
  return (static_cast<std::size_t>(wrap(idx[0] + r.o[0], n)) * n + wrap(idx[1] + r.o[1], n)) * n;
}

void check_metric_args(double kappa, double eta) {
  if (!(kappa > 0.0) || !(eta > 0.0)) throw Error("BadParameter", "kappa and eta must be positive");
}

// Averages of a over every ladder ball, one array per level.
std::vector<std::vector<double>> ladder_averages(const SpaceTimeField& a, Metric m, double kappa,
                                                 double eta) {
  const auto& g = a.grid;
  const int d = g.d, n = g.n;
  const std::size_t N = g.size(), nt = a.nt;
  const int top = top_radius_level(g);
  std::vector<std::vector<double>> out(top + 1, std::vector<double>(nt * N));
  for (int j = 0; j <= top; ++j) {
    const long K = time_reach(a, m, j, kappa, eta);
    // time sums with in-window counts
    std::vector<long double> pre((nt + 1) * N, 0.0L);
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t x = 0; x < N; ++x) pre[(k + 1) * N + x] = pre[k * N + x] + a.data[k * N + x];
    const auto rows = ball_rows(d, j);
    const double bs = static_cast<double>(ball_size(rows));
    auto& A = out[j];
    parallel_for(nt, [&](std::size_t k) {
      const long lo = std::max(0L, static_cast<long>(k) - K);
      const long hi = std::min(static_cast<long>(nt) - 1, static_cast<long>(k) + K);
      std::vector<long double> ts(N);
      for (std::size_t x = 0; x < N; ++x) ts[x] = pre[(hi + 1) * N + x] - pre[lo * N + x];
      // prefix sums along the last axis for every line
      std::vector<long double> lp(N + N / n, 0.0L);
      const std::size_t lines = N / n;
      for (std::size_t l = 0; l < lines; ++l)
        for (int i = 0; i < n; ++i) lp[l * (n + 1) + i + 1] = lp[l * (n + 1) + i] + ts[l * n + i];
      auto interval = [&](std::size_t line, int c, int w) {
        const long double* P = &lp[(line / n) * (n + 1)];
        int lo2 = c - w, hi2 = c + w;
        if (lo2 < 0) return P[hi2 + 1] + (P[n] - P[n + lo2]);
        if (hi2 >= n) return (P[n] - P[lo2]) + P[hi2 - n + 1];
        return P[hi2 + 1] - P[lo2];
      };
      const double cnt = bs * static_cast<double>(hi - lo + 1);
      for (std::size_t x = 0; x < N; ++x) {
        const auto idx = g.multi_index(x);
        const int c = idx[d - 1];
        long double s = 0.0L;
        for (const auto& r : rows) s += interval(line_of(idx, r, d, n), c, r.w);
        A[k * N + x] = static_cast<double>(s / cnt);
      }
    });
  }
  return out;
}

SpaceTimeField scalar_input(const SpaceTimeField& f) { return f.ncomp == 1 ? f : f.magnitude(); }

}  // namespace

SpaceTimeField maximal_function(const SpaceTimeField& f, Metric m, double kappa, double eta) {
  check_metric_args(kappa, eta);
  SpaceTimeField a = scalar_input(f);
  for (double& x : a.data) x = std::abs(x);
  const auto A = ladder_averages(a, m, kappa, eta);
  SpaceTimeField M = a;
  for (const auto& lvl : A)
    for (std::size_t i = 0; i < M.data.size(); ++i) M.data[i] = std::max(M.data[i], lvl[i]);
  return M;
}

SpaceTimeField maximal_function(const SpaceTimeField& f, Metric m, const TruncationConfig& cfg) {
  return cfg.centred ? maximal_function(f, m, cfg.kappa(), cfg.eta)
                     : maximal_function_noncentred(f, m, cfg.kappa(), cfg.eta);
}

SpaceTimeField maximal_function_noncentred(const SpaceTimeField& f, Metric m, double kappa, double eta) {
  check_metric_args(kappa, eta);
  SpaceTimeField a = scalar_input(f);
  for (double& x : a.data) x = std::abs(x);
  const auto A = ladder_averages(a, m, kappa, eta);
  const auto& g = a.grid;
  const int d = g.d, n = g.n;
  const std::size_t N = g.size(), nt = a.nt;
  SpaceTimeField M = a;
  for (int j = 0; j < static_cast<int>(A.size()); ++j) {
    const long K = time_reach(a, m, j, kappa, eta);
    const auto rows = ball_rows(d, j);
    // max over the time window, then over each row interval
    std::vector<double> tm(nt * N);
    for (std::size_t k = 0; k < nt; ++k) {
      const long lo = std::max(0L, static_cast<long>(k) - K);
      const long hi = std::min(static_cast<long>(nt) - 1, static_cast<long>(k) + K);
      for (std::size_t x = 0; x < N; ++x) {
        double v = 0.0;
        for (long q = lo; q <= hi; ++q) v = std::max(v, A[j][q * N + x]);
        tm[k * N + x] = v;
      }
    }
    int wmax = 0;
    for (const auto& r : rows) wmax = std::max(wmax, r.w);
    parallel_for(nt, [&](std::size_t k) {
      // interval maxima along the last axis for every half-width up to wmax
      std::vector<double> im(static_cast<std::size_t>(wmax + 1) * N);
      for (std::size_t x = 0; x < N; ++x) im[x] = tm[k * N + x];
      for (int w = 1; w <= wmax; ++w)
        for (std::size_t x = 0; x < N; ++x) {
          const auto idx = g.multi_index(x);
          const std::size_t base = x - idx[d - 1];
          const double l = tm[k * N + base + wrap(idx[d - 1] - w, n)];
          const double r = tm[k * N + base + wrap(idx[d - 1] + w, n)];
          im[w * N + x] = std::max(im[(w - 1) * N + x], std::max(l, r));
        }
      for (std::size_t x = 0; x < N; ++x) {
        const auto idx = g.multi_index(x);
        double v = M.data[k * N + x];
        for (const auto& r : rows) v = std::max(v, im[r.w * N + line_of(idx, r, d, n) + idx[d - 1]]);
        M.data[k * N + x] = v;
      }
    });
  }
  return M;
}

SpaceTimeField maximal_function_brute(const SpaceTimeField& f, Metric m, double kappa, double eta,
                                      bool centred) {
  check_metric_args(kappa, eta);
  SpaceTimeField a = scalar_input(f);
  for (double& x : a.data) x = std::abs(x);
  const auto& g = a.grid;
  const int d = g.d, n = g.n;
  const std::size_t N = g.size(), nt = a.nt;
  const int top = top_radius_level(g);
  auto offset = [&](int i, int c) {
    int o = wrap(i - c, n);
    return o > n / 2 ? o - n : o;
  };
  auto average = [&](std::size_t k, std::size_t x, int j) {
    const long K = time_reach(a, m, j, kappa, eta);
    const long R2 = 1L << (2 * j);
    const auto cx = g.multi_index(x);
    long double s = 0.0L;
    double cnt = 0.0;
    for (std::size_t q = 0; q < nt; ++q) {
      if (std::abs(static_cast<long>(q) - static_cast<long>(k)) > K) continue;
      for (std::size_t y = 0; y < N; ++y) {
        const auto iy = g.multi_index(y);
        long r2 = 0;
        for (int ax = 0; ax < d; ++ax) {
          const long o = offset(iy[ax], cx[ax]);
          r2 += o * o;
        }
        if (r2 >= R2) continue;
        s += a.data[q * N + y];
        cnt += 1.0;
      }
    }
    return static_cast<double>(s / cnt);
  };
  SpaceTimeField M = a;
  if (centred) {
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t x = 0; x < N; ++x)
        for (int j = 0; j <= top; ++j) M.data[k * N + x] = std::max(M.data[k * N + x], average(k, x, j));
    return M;
  }
  std::vector<std::vector<double>> A(top + 1, std::vector<double>(nt * N));
  for (int j = 0; j <= top; ++j)
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t x = 0; x < N; ++x) A[j][k * N + x] = average(k, x, j);
  for (std::size_t k = 0; k < nt; ++k)
    for (std::size_t x = 0; x < N; ++x) {
      const auto px = g.multi_index(x);
      double v = M.data[k * N + x];
      for (int j = 0; j <= top; ++j) {
        const long K = time_reach(a, m, j, kappa, eta);
        const long R2 = 1L << (2 * j);
        for (std::size_t q = 0; q < nt; ++q) {
          if (std::abs(static_cast<long>(q) - static_cast<long>(k)) > K) continue;
          for (std::size_t y = 0; y < N; ++y) {
            const auto iy = g.multi_index(y);
            long r2 = 0;
            for (int ax = 0; ax < d; ++ax) {
              const long o = offset(iy[ax], px[ax]);
              r2 += o * o;
            }
            if (r2 < R2) v = std::max(v, A[j][q * N + y]);
          }
        }
      }
      M.data[k * N + x] = v;
    }
  return M;
}

// ---------------------------------------------------------------------------

Split split_equiintegrable(const SpaceTimeField& f, const ThresholdRule& rule) {
  Split s;
  s.lambda = rule.lambda(f);
  s.eq = f;
  s.co = SpaceTimeField(f.grid, f.ncomp, f.nt, f.t0, f.tau);
  std::size_t cnt = 0;
  const std::size_t P = f.points();
  for (std::size_t i = 0; i < P; ++i) {
    double m2 = 0.0;
    for (int c = 0; c < f.ncomp; ++c) m2 += f.data[i * f.ncomp + c] * f.data[i * f.ncomp + c];
    if (std::sqrt(m2) > s.lambda) {
      ++cnt;
      for (int c = 0; c < f.ncomp; ++c) {
        s.co.data[i * f.ncomp + c] = f.data[i * f.ncomp + c];
        s.eq.data[i * f.ncomp + c] = 0.0;
      }
    }
  }
  s.co_measure = static_cast<double>(cnt) * f.cell_volume();
  return s;
}

SpaceTimeField time_derivative(const SpaceTimeField& f) {
  if (f.nt < 3) throw Error("BadParameter", "time differences need at least three nodes");
  SpaceTimeField r(f.grid, f.ncomp, f.nt, f.t0, f.tau);
  const std::size_t len = f.grid.size() * f.ncomp, nt = f.nt;
  const double s = 1.0 / (2.0 * f.tau);
  auto at = [&](std::size_t k, std::size_t i) { return f.data[k * len + i]; };
  for (std::size_t i = 0; i < len; ++i) {
    r.data[i] = s * (-3.0 * at(0, i) + 4.0 * at(1, i) - at(2, i));
    r.data[(nt - 1) * len + i] = s * (3.0 * at(nt - 1, i) - 4.0 * at(nt - 2, i) + at(nt - 3, i));
    for (std::size_t k = 1; k + 1 < nt; ++k) r.data[k * len + i] = s * (at(k + 1, i) - at(k - 1, i));
  }
  return r;
}

SpaceTimeField second_time_derivative(const SpaceTimeField& f) {
  if (f.nt < 3) throw Error("BadParameter", "time differences need at least three nodes");
  SpaceTimeField r(f.grid, f.ncomp, f.nt, f.t0, f.tau);
  const std::size_t len = f.grid.size() * f.ncomp, nt = f.nt;
  const double s = 1.0 / (f.tau * f.tau);
  auto at = [&](std::size_t k, std::size_t i) { return f.data[k * len + i]; };
  for (std::size_t i = 0; i < len; ++i) {
    for (std::size_t k = 1; k + 1 < nt; ++k)
      r.data[k * len + i] = s * (at(k + 1, i) - 2.0 * at(k, i) + at(k - 1, i));
    if (nt >= 4) {
      r.data[i] = s * (2.0 * at(0, i) - 5.0 * at(1, i) + 4.0 * at(2, i) - at(3, i));
      r.data[(nt - 1) * len + i] =
          s * (2.0 * at(nt - 1, i) - 5.0 * at(nt - 2, i) + 4.0 * at(nt - 3, i) - at(nt - 4, i));
    } else {
      r.data[i] = r.data[len + i];
      r.data[(nt - 1) * len + i] = r.data[(nt - 2) * len + i];
    }
  }
  return r;
}

PotentialData derive_potential(const SpaceTimeField& v, const TruncationConfig& cfg) {
  if (v.rank() != 2) throw Error("BadRank", "the potential must be a tensor field");
  if (v.nt < 3) throw Error("BadParameter", "the window needs at least three time nodes");
  PotentialData pd;
  pd.v = v;
  pd.grad = map_slices(v, [](const Field& s) { return gradient(s); });
  pd.hess = map_slices(pd.grad, [](const Field& s) { return gradient(s); });
  pd.dt = time_derivative(v);
  pd.dtt = second_time_derivative(v);
  for (double& x : pd.dtt.data) x *= cfg.eta;
  pd.dt_grad = time_derivative(pd.grad);
  pd.g = split_equiintegrable(pd.dt, cfg.split_rule);
  pd.h2 = split_equiintegrable(pd.dtt, cfg.split_rule);
  return pd;
}

// ---------------------------------------------------------------------------

std::size_t BadSet::count() const {
  std::size_t c = 0;
  for (auto b : mask) c += b;
  return c;
}

double BadSet::measure() const { return static_cast<double>(count()) * tau * grid.cell_volume(); }

BadSet BadSet::from_mask(const TorusGrid& g, std::size_t n_t, double start, double step,
                         std::vector<std::uint8_t> m) {
  if (m.size() != n_t * g.size()) throw Error("WindowMismatch", "mask size does not match the window");
  BadSet b;
  b.grid = g;
  b.nt = n_t;
  b.t0 = start;
  b.tau = step;
  for (auto& x : m) x = x ? 1 : 0;
  b.mask = std::move(m);
  b.class1 = b.mask;
  b.class2.assign(b.mask.size(), 0);
  return b;
}

nlohmann::json BadSet::summary() const {
  nlohmann::json j;
  j["points"] = mask.size();
  j["count"] = count();
  j["measure"] = measure();
  j["rhs_equi"] = rhs_equi;
  j["rhs_conc"] = rhs_conc;
  j["rhs"] = rhs();
  auto cnt = [](const std::vector<std::uint8_t>& v) {
    std::size_t c = 0;
    for (auto b : v) c += b;
    return c;
  };
  nlohmann::json comps = nlohmann::json::array();
  for (int i = 0; i < 4; ++i)
    comps.push_back({{"component", i + 1}, {"parabolic", pa[i].empty() ? 0 : cnt(pa[i])},
                     {"elliptic", ell[i].empty() ? 0 : cnt(ell[i])}});
  j["components"] = comps;
  j["class1"] = cnt(class1);
  j["class2"] = cnt(class2);
  return j;
}

BadSet build_bad_set(const PotentialData& pd, const TruncationConfig& cfg) {
  cfg.validate();
  const SpaceTimeField* in[8] = {&pd.v, &pd.grad, &pd.hess, &pd.dt_grad,
                                 &pd.g.eq, &pd.h2.eq, &pd.g.co, &pd.h2.co};
  for (auto* f : in)
    if (!f->same_window(pd.v)) throw Error("WindowMismatch", "bad-set inputs live on different windows");
  const int comp[8] = {0, 0, 0, 1, 2, 2, 3, 3};
  const auto thr = cfg.thresholds();
  const std::size_t P = pd.v.points();
  BadSet b;
  b.grid = pd.v.grid;
  b.nt = pd.v.nt;
  b.t0 = pd.v.t0;
  b.tau = pd.v.tau;
  for (int c = 0; c < 4; ++c) {
    b.pa[c].assign(P, 0);
    b.ell[c].assign(P, 0);
  }
  std::vector<SpaceTimeField> mag(8);
  for (int i = 0; i < 8; ++i) mag[i] = in[i]->magnitude();
  for (int i = 0; i < 8; ++i) {
    for (Metric m : {Metric::Parabolic, Metric::Elliptic}) {
      const SpaceTimeField M = maximal_function(mag[i], m, cfg);
      auto& mask = m == Metric::Parabolic ? b.pa[comp[i]] : b.ell[comp[i]];
      for (std::size_t q = 0; q < P; ++q)
        if (M.data[q] > thr[comp[i]]) mask[q] = 1;
    }
  }
  b.mask.assign(P, 0);
  b.class1.assign(P, 0);
  b.class2.assign(P, 0);
  for (std::size_t q = 0; q < P; ++q) {
    bool c1 = false, c4 = b.pa[3][q] || b.ell[3][q];
    for (int c = 0; c < 3; ++c) c1 = c1 || b.pa[c][q] || b.ell[c][q];
    b.mask[q] = c1 || c4;
    b.class1[q] = c1;
    b.class2[q] = !c1 && c4;
  }
  // right-hand side of the measure estimate from pointwise superlevel sets
  const double L = cfg.L, p = cfg.p, q = cfg.q(), sp = cfg.s_prime;
  const double La = std::pow(L, cfg.alpha()), Lt = std::pow(L, 0.5 * p) / std::sqrt(cfg.eta);
  const double Cd = std::pow(5.0, b.grid.d + 2);
  long double equi = 0.0L, conc = 0.0L;
  for (std::size_t i = 0; i < P; ++i) {
    const double v0 = mag[0].data[i], v1 = mag[1].data[i], v2 = mag[2].data[i], v3 = mag[3].data[i];
    const double g = mag[4].data[i], gg = mag[5].data[i], h = mag[6].data[i], hh = mag[7].data[i];
    const bool s1 = v0 > L || v1 > L || v2 > L, s2 = v3 > Lt, s3 = g > La || gg > La, s4 = h > La || hh > La;
    if (s1 || s2 || s3)
      equi += std::pow(v0, p) + std::pow(v1, p) + std::pow(v2, p) + v3 * v3 / cfg.eta + std::pow(g, q) +
              std::pow(gg, q);
    if (s4) conc += std::pow(h, sp) + std::pow(hh, sp);
  }
  const double vol = pd.v.cell_volume();
  b.rhs_equi = Cd * std::pow(L, -p) * static_cast<double>(equi) * vol;
  b.rhs_conc = Cd * std::pow(L, -p * sp / q) * static_cast<double>(conc) * vol;
  return b;
}

// ---------------------------------------------------------------------------

SpaceTimeField mollify_time(const SpaceTimeField& f, double eta) {
  if (!(eta > 0.0)) throw Error("BadParameter", "mollifier width must be positive");
  const long K = static_cast<long>(std::ceil(eta / f.tau)) - 1;
  if (K <= 0) return f;
  std::vector<double> w(2 * K + 1);
  double s = 0.0;
  for (long k = -K; k <= K; ++k) {
    const double r = static_cast<double>(k) * f.tau / eta;
    w[k + K] = r * r < 1.0 ? std::exp(-1.0 / (1.0 - r * r)) : 0.0;
    s += w[k + K];
  }
  for (double& x : w) x /= s;
  SpaceTimeField r(f.grid, f.ncomp, f.nt, f.t0, f.tau);
  const std::size_t len = f.grid.size() * f.ncomp;
  const long nt = static_cast<long>(f.nt);
  parallel_for(f.nt, [&](std::size_t k) {
    double* out = &r.data[k * len];
    for (long q = -K; q <= K; ++q) {
      const long src = std::clamp(static_cast<long>(k) + q, 0L, nt - 1);
      const double* in = &f.data[src * len];
      const double c = w[q + K];
      for (std::size_t i = 0; i < len; ++i) out[i] += c * in[i];
    }
  });
  return r;
}

SpaceTimeField prepare_w(const Trajectory& u_eta, const Trajectory& u_ref, double eta,
                         const PrepareOptions& opt) {
  if (u_eta.size() == 0 || u_ref.size() == 0) throw Error("IncompatibleGrids", "empty trajectory");
  if (u_eta.grid() != u_ref.grid()) throw Error("IncompatibleGrids", "trajectories use different grids");
  if (u_eta.u.front().rank() != 1 || u_ref.u.front().rank() != 1)
    throw Error("IncompatibleGrids", "trajectories must carry vector fields");
  if (!(eta > 0.0)) throw Error("BadParameter", "eta must be positive");
  if (opt.nt < 3) throw Error("BadParameter", "at least three time nodes are needed");
  const double horizon = std::min(u_eta.t.back(), u_ref.t.back());
  const double T = opt.t_end > 0.0 ? opt.t_end : horizon;
  if (!(T > 0.0) || T > horizon * (1.0 + 1e-12))
    throw Error("IncompatibleGrids", "window end beyond the common horizon");
  const double tau = T / static_cast<double>(opt.nt - 1);
  SpaceTimeField a(u_eta.grid(), u_eta.grid().d, opt.nt, 0.0, tau), b = a;
  for (std::size_t k = 0; k < opt.nt; ++k) {
    const double t = std::min(T, static_cast<double>(k) * tau);
    a.set_slice(k, u_eta.at(t));
    b.set_slice(k, u_ref.at(t));
  }
  const SpaceTimeField ea = reflect_extend(a);
  const SpaceTimeField mb = mollify_time(reflect_extend(b), eta);
  SpaceTimeField w = ea;
  for (std::size_t i = 0; i < w.data.size(); ++i) w.data[i] -= mb.data[i];
  return map_slices(w, [](const Field& s) { return remove_mean(s); });
}

SpaceTimeField to_potential(const SpaceTimeField& w) {
  if (w.rank() != 1) throw Error("BadRank", "to_potential expects a vector field");
  return map_slices(w, [](const Field& s) { return potential_T(s); });
}

}  // namespace wide
