#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>
#include <set>
#include <tuple>

#include "wide/error.hpp"
#include "wide/parallel.hpp"
#include "wide/truncation.hpp"

namespace wide {

namespace {

constexpr double kTwoPi = 2.0 * std::numbers::pi;

inline long wrapl(long i, long n) {
  i %= n;
  return i < 0 ? i + n : i;
}

// Cube geometry in grid units: node k sits at time k, node i at space i, and
// the dyadic anchors start at -1/2 so that unit cubes are centred on nodes.
struct Geometry {
  int n = 8, d = 2;
  double tau = 1.0, h = 1.0, kappa = 1.0, eta = 1.0;

  double lx(int m) const { return kTwoPi * std::ldexp(1.0, -m); }
  double lt(Metric k, int m) const {
    const double l = lx(m);
    return k == Metric::Parabolic ? l * l / (kappa * kappa) : l * std::sqrt(eta) / kappa;
  }
  double Lx(int m) const { return n * std::ldexp(1.0, -m); }
  double Lt(Metric k, int m) const { return lt(k, m) / tau; }
  // Time dilation belonging to a metric dilation by lam.
  static double tfac(Metric k, double lam) { return k == Metric::Parabolic ? lam * lam : lam; }
};

struct Range {
  long lo = 0, hi = -1;  // inclusive
};

// Node indices inside the open interval (a, b).
inline Range open_range(double a, double b) { return {static_cast<long>(std::floor(a)) + 1, static_cast<long>(std::ceil(b)) - 1}; }

struct Box {
  Range t;
  std::array<Range, 3> x;
};

Box dilated(const Geometry& G, const Cube& c, double lam) {
  const double Lx = G.Lx(c.level), Lt = G.Lt(c.kind, c.level);
  Box b;
  const double ct = -0.5 + (static_cast<double>(c.jt) + 0.5) * Lt;
  const double ht = 0.5 * Geometry::tfac(c.kind, lam) * Lt;
  b.t = open_range(ct - ht, ct + ht);
  for (int a = 0; a < G.d; ++a) {
    const double cx = -0.5 + (static_cast<double>(c.kx[a]) + 0.5) * Lx;
    b.x[a] = open_range(cx - 0.5 * lam * Lx, cx + 0.5 * lam * Lx);
  }
  return b;
}

// Summed-area table of the good nodes over (time, space), periodic in space.
class GoodTable {
 public:
  GoodTable(const std::vector<std::uint8_t>& mask, int d, int n, std::size_t nt) : d_(d), n_(n), nt_(nt) {
    dims_[0] = nt + 1;
    for (int a = 0; a < d; ++a) dims_[a + 1] = n + 1;
    std::size_t total = 1;
    for (int a = 0; a <= d; ++a) total *= dims_[a];
    S_.assign(total, 0);
    const std::size_t N = static_cast<std::size_t>(std::pow(n, d));
    for (std::size_t k = 0; k < nt; ++k)
      for (std::size_t x = 0; x < N; ++x) {
        std::array<std::size_t, 4> idx{k + 1, 0, 0, 0};
        std::size_t r = x;
        for (int a = d - 1; a >= 0; --a) {
          idx[a + 1] = r % n + 1;
          r /= n;
        }
        S_[flat(idx)] = mask[k * N + x] ? 0 : 1;
      }
    for (int a = 0; a <= d; ++a) {
      std::size_t stride = 1;
      for (int b = a + 1; b <= d; ++b) stride *= dims_[b];
      for (std::size_t i = 0; i < total; ++i)
        if ((i / stride) % dims_[a] > 0) S_[i] += S_[i - stride];
    }
  }

  // Good nodes in the box; time is clipped to the window, space wraps.
  long count(const Box& b) const {
    const long tlo = std::max(0L, b.t.lo), thi = std::min(static_cast<long>(nt_) - 1, b.t.hi);
    if (thi < tlo) return 0;
    std::array<std::vector<Range>, 3> pieces;
    for (int a = 0; a < d_; ++a) {
      const long len = b.x[a].hi - b.x[a].lo + 1;
      if (len <= 0) return 0;
      if (len >= n_) {
        pieces[a] = {{0, n_ - 1}};
        continue;
      }
      const long lo = wrapl(b.x[a].lo, n_), hi = lo + len - 1;
      if (hi < n_) pieces[a] = {{lo, hi}};
      else pieces[a] = {{lo, n_ - 1}, {0, hi - n_}};
    }
    long total = 0;
    std::array<Range, 4> r;
    r[0] = {tlo, thi};
    std::function<void(int)> rec = [&](int a) {
      if (a == d_) {
        total += box_sum(r);
        return;
      }
      for (const auto& p : pieces[a]) {
        r[a + 1] = p;
        rec(a + 1);
      }
    };
    rec(0);
    return total;
  }

 private:
  std::size_t flat(const std::array<std::size_t, 4>& idx) const {
    std::size_t f = 0;
    for (int a = 0; a <= d_; ++a) f = f * dims_[a] + idx[a];
    return f;
  }
  long box_sum(const std::array<Range, 4>& r) const {
    long s = 0;
    const int D = d_ + 1;
    for (int mask = 0; mask < (1 << D); ++mask) {
      std::array<std::size_t, 4> idx{};
      int lows = 0;
      for (int a = 0; a < D; ++a) {
        if (mask & (1 << a)) {
          idx[a] = static_cast<std::size_t>(r[a].lo);
          ++lows;
        } else {
          idx[a] = static_cast<std::size_t>(r[a].hi + 1);
        }
      }
      s += (lows % 2 ? -1 : 1) * static_cast<long>(S_[flat(idx)]);
    }
    return s;
  }
  int d_, n_;
  std::size_t nt_;
  std::array<std::size_t, 4> dims_{};
  std::vector<std::int32_t> S_;
};

// Smooth step: 0 at s <= 0, 1 at s >= 1, with first and second derivatives.
void smooth_step(double s, double& g, double& g1, double& g2) {
  if (s <= 0.0) {
    g = g1 = g2 = 0.0;
    return;
  }
  if (s >= 1.0) {
    g = 1.0;
    g1 = g2 = 0.0;
    return;
  }
  auto f = [](double x, double& f0, double& f1, double& f2) {
    f0 = std::exp(-1.0 / x);
    f1 = f0 / (x * x);
    f2 = f0 * (1.0 / (x * x * x * x) - 2.0 / (x * x * x));
  };
  double a0, a1, a2, b0, b1, b2;
  f(s, a0, a1, a2);
  f(1.0 - s, b0, b1, b2);
  b1 = -b1;  // derivative of f(1 - s)
  const double D = a0 + b0, D1 = a1 + b1, D2 = a2 + b2;
  g = a0 / D;
  g1 = (a1 * D - a0 * D1) / (D * D);
  g2 = (a2 * D - a0 * D2) / (D * D) - 2.0 * D1 * (a1 * D - a0 * D1) / (D * D * D);
}

// Bump equal to one on [0, 1] with support [-e, 1 + e].
void bump(double z, double e, double& v, double& v1, double& v2) {
  if (z >= 0.0 && z <= 1.0) {
    v = 1.0;
    v1 = v2 = 0.0;
    return;
  }
  double g, g1, g2;
  if (z < 0.0) {
    smooth_step((z + e) / e, g, g1, g2);
    v = g;
    v1 = g1 / e;
    v2 = g2 / (e * e);
  } else {
    smooth_step((1.0 + e - z) / e, g, g1, g2);
    v = g;
    v1 = -g1 / e;
    v2 = g2 / (e * e);
  }
}

Geometry geometry_of(const CubeCover& c) {
  Geometry G;
  G.n = c.grid.n;
  G.d = c.grid.d;
  G.tau = c.tau;
  G.h = c.grid.h();
  G.kappa = c.kappa;
  G.eta = c.eta;
  return G;
}

// Enumerates the nodes of a box: callback(k, unwrapped spatial idx, node).
template <class F>
void for_nodes(const Geometry& G, std::size_t nt, const Box& b, F&& f) {
  const long tlo = std::max(0L, b.t.lo), thi = std::min(static_cast<long>(nt) - 1, b.t.hi);
  std::array<Range, 3> xr = b.x;
  for (int a = 0; a < G.d; ++a)
    if (xr[a].hi - xr[a].lo + 1 > G.n) {
      // keep one period, centred on the box
      const long mid = (xr[a].lo + xr[a].hi) / 2;
      xr[a] = {mid - G.n / 2, mid - G.n / 2 + G.n - 1};
    }
  const std::size_t N = static_cast<std::size_t>(std::pow(G.n, G.d));
  std::array<long, 3> i{};
  for (long k = tlo; k <= thi; ++k) {
    std::function<void(int)> rec = [&](int a) {
      if (a == G.d) {
        std::size_t node = 0;
        for (int c = 0; c < G.d; ++c) node = node * G.n + wrapl(i[c], G.n);
        f(k, i, static_cast<std::size_t>(k) * N + node);
        return;
      }
      for (i[a] = xr[a].lo; i[a] <= xr[a].hi; ++i[a]) rec(a + 1);
    };
    rec(0);
  }
}

// Normalised coordinates of a node relative to the cube anchor.
std::array<double, 4> zeta(const Geometry& G, const Cube& c, long k, const std::array<long, 3>& i) {
  std::array<double, 4> z{};
  const double Lt = G.Lt(c.kind, c.level), Lx = G.Lx(c.level);
  z[0] = (static_cast<double>(k) + 0.5) / Lt - static_cast<double>(c.jt);
  for (int a = 0; a < G.d; ++a) z[a + 1] = (static_cast<double>(i[a]) + 0.5) / Lx - static_cast<double>(c.kx[a]);
  return z;
}

struct Key {
  int kind, level;
  std::int64_t jt;
  std::array<std::int64_t, 3> kx;
  bool operator<(const Key& o) const {
    return std::tie(kind, level, jt, kx) < std::tie(o.kind, o.level, o.jt, o.kx);
  }
};

}  // namespace

std::vector<std::size_t> CubeCover::nodes_of(std::size_t i) const {
  const Geometry G = geometry_of(*this);
  std::vector<std::size_t> out;
  for_nodes(G, nt, dilated(G, cubes[i], 1.0 + eps),
            [&](long, const std::array<long, 3>&, std::size_t p) { out.push_back(p); });
  return out;
}

CubeCover whitney_cover(const BadSet& bad, const TruncationConfig& cfg) {
  cfg.validate();
  CubeCover C;
  C.grid = bad.grid;
  C.nt = bad.nt;
  C.t0 = bad.t0;
  C.tau = bad.tau;
  C.kappa = cfg.kappa();
  C.eta = cfg.eta;
  C.eps = cfg.eps;
  C.c_d = TruncationConfig::c_d(bad.grid.d);
  C.mask = bad.mask;
  const std::size_t N = bad.grid.size(), P = bad.nt * N;
  const int D = bad.grid.d + 1;
  C.offset.assign(P + 1, 0);
  if (bad.mask.size() != P) throw Error("WindowMismatch", "bad-set mask does not match its window");
  if (bad.empty()) {
    C.checks = check_cover(C, cfg);
    return C;
  }
  const Geometry G = geometry_of(C);
  int m_max = cfg.m_max;
  if (m_max < 0) {
    m_max = cfg.m_min;
    while (m_max < 60 && (G.Lx(m_max) > 0.5 || G.Lt(Metric::Parabolic, m_max) > 0.25 ||
                          G.Lt(Metric::Elliptic, m_max) > 0.25))
      ++m_max;
  }
  const GoodTable table(bad.mask, G.d, G.n, bad.nt);

  // largest dyadic cube per bad node and family whose double lies in the bad set
  std::vector<std::size_t> badnodes;
  for (std::size_t q = 0; q < P; ++q)
    if (bad.mask[q]) badnodes.push_back(q);
  std::vector<std::array<Key, 2>> chosen(badnodes.size());
  std::vector<char> failed(badnodes.size(), 0);
  parallel_for(badnodes.size(), [&](std::size_t b) {
    const std::size_t q = badnodes[b];
    const long k = static_cast<long>(q / N);
    const auto idx = bad.grid.multi_index(q % N);
    for (int f = 0; f < 2; ++f) {
      const Metric kind = f == 0 ? Metric::Parabolic : Metric::Elliptic;
      bool found = false;
      for (int m = cfg.m_min; m <= m_max && !found; ++m) {
        Cube c;
        c.kind = kind;
        c.level = m;
        c.jt = static_cast<std::int64_t>(std::floor((k + 0.5) / G.Lt(kind, m)));
        for (int a = 0; a < G.d; ++a) c.kx[a] = static_cast<std::int64_t>(std::floor((idx[a] + 0.5) / G.Lx(m)));
        if (table.count(dilated(G, c, 2.0)) == 0) {
          chosen[b][f] = Key{f, m, c.jt, c.kx};
          found = true;
        }
      }
      if (!found) failed[b] = 1;
    }
  });
  for (char f : failed)
    if (f) throw Error("LevelRangeExhausted", "no dyadic level up to m_max resolves the bad set");

  const double turn = C.kappa * std::sqrt(C.eta);
  std::map<Key, bool> keep;  // value: fallback
  for (const auto& ch : chosen) {
    const bool kp = G.lx(ch[0].level) >= turn / (2.0 * C.c_d);
    const bool ke = G.lx(ch[1].level) <= 2.0 * C.c_d * turn;
    if (kp) keep.emplace(ch[0], false);
    if (ke) keep.emplace(ch[1], false);
    if (!kp && !ke) keep[ch[1]] = true;
  }
  for (const auto& [key, fb] : keep) {
    Cube c;
    c.kind = key.kind == 0 ? Metric::Parabolic : Metric::Elliptic;
    c.level = key.level;
    c.jt = key.jt;
    c.kx = key.kx;
    c.lx = G.lx(c.level);
    c.lt = G.lt(c.kind, c.level);
    c.fallback = fb;
    c.top = c.level == cfg.m_min;
    C.cubes.push_back(c);
  }

  // unnormalised bumps on the enlarged cubes
  const int stride = 1 + D + D * D;
  std::vector<std::vector<std::pair<std::size_t, std::vector<double>>>> per(C.cubes.size());
  const double e = 0.5 * C.eps;
  parallel_for(C.cubes.size(), [&](std::size_t ci) {
    const Cube& c = C.cubes[ci];
    const double len[4] = {c.lt, c.lx, c.lx, c.lx};
    for_nodes(G, C.nt, dilated(G, c, 1.0 + C.eps), [&](long k, const std::array<long, 3>& i, std::size_t p) {
      const auto z = zeta(G, c, k, i);
      double v[4], v1[4], v2[4];
      for (int a = 0; a < D; ++a) bump(z[a], e, v[a], v1[a], v2[a]);
      std::vector<double> val(stride, 0.0);
      auto prod_except = [&](int a, int b) {
        double s = 1.0;
        for (int c2 = 0; c2 < D; ++c2)
          if (c2 != a && c2 != b) s *= v[c2];
        return s;
      };
      val[0] = prod_except(-1, -1);
      for (int a = 0; a < D; ++a) val[1 + a] = v1[a] / len[a] * prod_except(a, -1);
      for (int a = 0; a < D; ++a)
        for (int b = 0; b < D; ++b)
          val[1 + D + a * D + b] = a == b ? v2[a] / (len[a] * len[a]) * prod_except(a, -1)
                                          : v1[a] * v1[b] / (len[a] * len[b]) * prod_except(a, b);
      per[ci].emplace_back(p, std::move(val));
    });
  });
  std::vector<std::size_t> cnt(P, 0);
  for (const auto& list : per)
    for (const auto& pr : list) ++cnt[pr.first];
  for (std::size_t q = 0; q < P; ++q) C.offset[q + 1] = C.offset[q] + cnt[q];
  const std::size_t E = C.offset[P];
  C.cube_id.assign(E, 0);
  std::vector<double> raw(E * stride);
  std::vector<std::size_t> fill(C.offset.begin(), C.offset.end() - 1);
  for (std::size_t ci = 0; ci < per.size(); ++ci)
    for (const auto& [p, val] : per[ci]) {
      const std::size_t at = fill[p]++;
      C.cube_id[at] = static_cast<int>(ci);
      std::copy(val.begin(), val.end(), raw.begin() + at * stride);
    }
  per.clear();

  // quotient normalisation
  C.phi.assign(E, 0.0);
  C.dphi.assign(E * D, 0.0);
  C.d2phi.assign(E * D * D, 0.0);
  parallel_for(P, [&](std::size_t q) {
    const std::size_t b0 = C.offset[q], b1 = C.offset[q + 1];
    if (b0 == b1) return;
    std::vector<double> S(stride, 0.0);
    for (std::size_t at = b0; at < b1; ++at)
      for (int s = 0; s < stride; ++s) S[s] += raw[at * stride + s];
    const double s0 = S[0];
    for (std::size_t at = b0; at < b1; ++at) {
      const double* a = &raw[at * stride];
      const double ph = a[0] / s0;
      C.phi[at] = ph;
      double* g = &C.dphi[at * D];
      for (int i = 0; i < D; ++i) g[i] = (a[1 + i] - ph * S[1 + i]) / s0;
      double* H = &C.d2phi[at * D * D];
      for (int i = 0; i < D; ++i)
        for (int j = 0; j < D; ++j)
          H[i * D + j] = (a[1 + D + i * D + j] - g[i] * S[1 + j] - g[j] * S[1 + i] - ph * S[1 + D + i * D + j]) / s0;
    }
  });

  std::vector<std::set<int>> adj(C.cubes.size());
  for (std::size_t q = 0; q < P; ++q)
    for (std::size_t a = C.offset[q]; a < C.offset[q + 1]; ++a)
      for (std::size_t b = a + 1; b < C.offset[q + 1]; ++b) {
        adj[C.cube_id[a]].insert(C.cube_id[b]);
        adj[C.cube_id[b]].insert(C.cube_id[a]);
      }
  C.adjacency.resize(C.cubes.size());
  for (std::size_t i = 0; i < adj.size(); ++i) C.adjacency[i].assign(adj[i].begin(), adj[i].end());
  C.checks = check_cover(C, cfg);
  return C;
}

CoverChecks check_cover(const CubeCover& C, const TruncationConfig& cfg) {
  CoverChecks r;
  const Geometry G = geometry_of(C);
  const std::size_t N = C.grid.size(), P = C.nt * N;
  const int D = C.dim();
  const double cd = C.c_d, turn = C.kappa * std::sqrt(C.eta);
  for (const auto& c : C.cubes) {
    r.fallbacks += c.fallback;
    r.top_cubes += c.top;
    r.max_lx = std::max(r.max_lx, (1.0 + C.eps) * c.lx);
  }
  r.admissible = r.max_lx <= 1.0;

  // (Q1), disjointness within each family, partition sums
  r.q1 = true;
  r.disjoint = true;
  r.partition = true;
  for (std::size_t q = 0; q < P; ++q) {
    const std::size_t b0 = C.offset[q], b1 = C.offset[q + 1];
    r.max_overlap = std::max(r.max_overlap, b1 - b0);
    if (!C.mask[q]) {
      if (b1 != b0) r.q1 = r.partition = false;
      continue;
    }
    const long k = static_cast<long>(q / N);
    const auto idx = C.grid.multi_index(q % N);
    int inside[2] = {0, 0};
    double s = 0.0;
    for (std::size_t at = b0; at < b1; ++at) {
      const Cube& c = C.cubes[C.cube_id[at]];
      std::array<long, 3> i{};
      // unwrapped index nearest to the cube
      for (int a = 0; a < G.d; ++a) {
        const double ctr = -0.5 + (c.kx[a] + 0.5) * G.Lx(c.level);
        i[a] = idx[a] + G.n * std::lround((ctr - idx[a]) / G.n);
      }
      const auto z = zeta(G, c, k, i);
      bool in = true;
      for (int a = 0; a < D; ++a) in = in && z[a] >= 0.0 && z[a] < 1.0;
      if (in) ++inside[c.kind == Metric::Parabolic ? 0 : 1];
      s += C.phi[at];
    }
    if (inside[0] + inside[1] == 0) r.q1 = false;
    if (inside[0] > 1 || inside[1] > 1) r.disjoint = false;
    r.partition_defect = std::max(r.partition_defect, std::abs(s - 1.0));
  }
  if (r.partition_defect > 1e-10) r.partition = false;

  // (Q2)/(Q4)
  r.q4 = true;
  for (std::size_t i = 0; i < C.cubes.size(); ++i) {
    r.max_neighbours = std::max(r.max_neighbours, C.adjacency[i].size());
    for (int j : C.adjacency[i]) {
      const double ratio = C.cubes[i].lx / C.cubes[j].lx;
      r.max_ratio = std::max(r.max_ratio, std::max(ratio, 1.0 / ratio));
    }
  }
  r.q4 = r.max_ratio <= 4.0 + 1e-12;
  r.q2 = static_cast<double>(r.max_neighbours) <= 2.0 * std::pow(10.0, D);

  // (Q5)/(Q6): metric distance of each enlarged cube to the good nodes
  bool any_good = false;
  for (std::size_t q = 0; q < P; ++q) any_good = any_good || !C.mask[q];
  std::vector<double> lo(C.cubes.size(), INFINITY), hi(C.cubes.size(), INFINITY);
  if (any_good) {
    parallel_for(C.cubes.size(), [&](std::size_t ci) {
      const Cube& c = C.cubes[ci];
      const double lxe = (1.0 + C.eps) * c.lx;
      const double R = (cd + 1.0) * lxe;
      const Box enl = dilated(G, c, 1.0 + C.eps);
      const double Lx = G.Lx(c.level), Lt = G.Lt(c.kind, c.level);
      const double ct = -0.5 + (c.jt + 0.5) * Lt, htE = 0.5 * Geometry::tfac(c.kind, 1.0 + C.eps) * Lt;
      const double tR = c.kind == Metric::Parabolic ? (R / C.kappa) * (R / C.kappa) : R * std::sqrt(C.eta) / C.kappa;
      Box search;
      search.t = {static_cast<long>(std::floor(ct - htE - tR / C.tau)), static_cast<long>(std::ceil(ct + htE + tR / C.tau))};
      std::array<double, 3> cx{};
      for (int a = 0; a < G.d; ++a) {
        cx[a] = -0.5 + (c.kx[a] + 0.5) * Lx;
        const double half = 0.5 * (1.0 + C.eps) * Lx + R / G.h;
        search.x[a] = {static_cast<long>(std::floor(cx[a] - half)), static_cast<long>(std::ceil(cx[a] + half))};
      }
      (void)enl;
      double best = INFINITY;
      for_nodes(G, C.nt, search, [&](long k, const std::array<long, 3>& i, std::size_t p) {
        if (C.mask[p]) return;
        const double dt = std::max(0.0, std::abs(k - ct) - htE) * C.tau;
        double dx2 = 0.0;
        for (int a = 0; a < G.d; ++a) {
          double off = std::fmod(std::abs(i[a] - cx[a]), static_cast<double>(G.n));
          off = std::min(off, G.n - off);
          const double g = std::max(0.0, off - 0.5 * (1.0 + C.eps) * Lx) * G.h;
          dx2 += g * g;
        }
        const double tpart = c.kind == Metric::Parabolic ? C.kappa * std::sqrt(dt) : C.kappa * dt / std::sqrt(C.eta);
        best = std::min(best, std::max(tpart, std::sqrt(dx2)));
      });
      // lower side: c_d l_x / dist; upper side: 2 c_d dist / l_x
      lo[ci] = c.top ? INFINITY : (std::isinf(best) ? 0.0 : cd * lxe / best);
      hi[ci] = std::isinf(best) ? INFINITY : 2.0 * cd * best / lxe;
    });
  }
  r.q5_lo = r.q5_hi = r.q6_lo = r.q6_hi = INFINITY;
  for (std::size_t ci = 0; ci < C.cubes.size(); ++ci) {
    if (C.cubes[ci].kind == Metric::Elliptic) {
      r.q5_lo = std::min(r.q5_lo, lo[ci]);
      r.q5_hi = std::min(r.q5_hi, hi[ci]);
    } else {
      r.q6_lo = std::min(r.q6_lo, lo[ci]);
      r.q6_hi = std::min(r.q6_hi, hi[ci]);
    }
  }
  r.q5 = r.q5_lo >= 1.0 && r.q5_hi >= 1.0;
  r.q6 = r.q6_lo >= 1.0 && r.q6_hi >= 1.0;

  // (Q7) and the hatted families
  std::vector<char> hat_pa(C.cubes.size(), 0), hat_ell(C.cubes.size(), 0);
  for (std::size_t i = 0; i < C.cubes.size(); ++i) {
    const bool pa = C.cubes[i].kind == Metric::Parabolic;
    (pa ? hat_pa : hat_ell)[i] = 1;
    for (int j : C.adjacency[i]) {
      if (C.cubes[j].kind != C.cubes[i].kind) (pa ? hat_ell : hat_pa)[i] = 1;
    }
  }
  for (std::size_t i = 0; i < C.cubes.size(); ++i) {
    if (!(hat_pa[i] && hat_ell[i])) continue;
    const double fx = C.cubes[i].lx / turn, ft = C.cubes[i].lt / C.eta;
    r.q7_lx = std::max(r.q7_lx, std::max(fx, 1.0 / fx));
    r.q7_lt = std::max(r.q7_lt, std::max(ft, 1.0 / ft));
  }
  r.q7 = r.q7_lx <= 8.0 * cd && r.q7_lt <= 64.0 * cd * cd;

  // (Q9)/(Q10) measured constants
  for (std::size_t q = 0; q < P; ++q)
    for (std::size_t at = C.offset[q]; at < C.offset[q + 1]; ++at) {
      const int ci = C.cube_id[at];
      const Cube& c = C.cubes[ci];
      const double l = (1.0 + C.eps) * c.lx, k2 = C.kappa * C.kappa;
      const double* g = &C.dphi[at * D];
      const double* H = &C.d2phi[at * D * D];
      double gx = 0.0, hx = 0.0, tg = 0.0;
      for (int a = 1; a < D; ++a) {
        gx += g[a] * g[a];
        tg += H[a] * H[a];
        for (int b = 1; b < D; ++b) hx += H[a * D + b] * H[a * D + b];
      }
      gx = std::sqrt(gx);
      hx = std::sqrt(hx);
      tg = std::sqrt(tg);
      const double t1 = std::abs(g[0]), t2 = std::abs(H[0]);
      if (hat_pa[ci]) {
        const double v[5] = {gx * l, hx * l * l, t1 * l * l / k2, tg * l * l * l / k2, t2 * std::pow(l, 4) / (k2 * k2)};
        for (int i = 0; i < 5; ++i) r.q9[i] = std::max(r.q9[i], v[i]);
      }
      if (hat_ell[ci]) {
        const double s = std::sqrt(C.eta) / C.kappa;
        const double v[5] = {gx * l, hx * l * l, t1 * l * s, tg * l * l * s, t2 * l * l * s * s};
        for (int i = 0; i < 5; ++i) r.q10[i] = std::max(r.q10[i], v[i]);
      }
    }
  (void)cfg;
  return r;
}

nlohmann::json CoverChecks::to_json() const {
  auto fin = [](double x) { return std::isfinite(x) ? nlohmann::json(x) : nlohmann::json(nullptr); };
  return {{"Q1", q1},
          {"disjoint", disjoint},
          {"Q2", q2},
          {"Q4", q4},
          {"Q5", q5},
          {"Q6", q6},
          {"Q7", q7},
          {"partition", partition},
          {"pass", pass()},
          {"max_overlap", max_overlap},
          {"max_neighbours", max_neighbours},
          {"max_ratio", max_ratio},
          {"q5_lo", fin(q5_lo)},
          {"q5_hi", fin(q5_hi)},
          {"q6_lo", fin(q6_lo)},
          {"q6_hi", fin(q6_hi)},
          {"q7_lx", q7_lx},
          {"q7_lt", q7_lt},
          {"partition_defect", partition_defect},
          {"fallbacks", fallbacks},
          {"top_cubes", top_cubes},
          {"max_lx", max_lx},
          {"admissible", admissible},
          {"Q9", q9},
          {"Q10", q10}};
}

nlohmann::json CubeCover::to_json() const {
  nlohmann::json cs = nlohmann::json::array();
  for (const auto& c : cubes) {
    const double Lx = grid.n * std::ldexp(1.0, -c.level);
    nlohmann::json x = nlohmann::json::array();
    for (int a = 0; a < grid.d; ++a) x.push_back((-0.5 + c.kx[a] * Lx) * grid.h());
    cs.push_back({{"kind", metric_name(c.kind)},
                  {"level", c.level},
                  {"lx", c.lx},
                  {"lt", c.lt},
                  {"t_anchor", t0 + (-0.5 * tau + static_cast<double>(c.jt) * c.lt)},
                  {"x_anchor", x},
                  {"fallback", c.fallback},
                  {"top", c.top}});
  }
  return {{"d", grid.d},     {"n", grid.n},     {"nt", nt},       {"t0", t0},
          {"tau", tau},      {"kappa", kappa},  {"eta", eta},     {"eps", eps},
          {"c_d", c_d},      {"cubes", cs},     {"entries", cube_id.size()},
          {"checks", checks.to_json()}};
}

}  // namespace wide
