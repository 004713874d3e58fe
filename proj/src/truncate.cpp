#include <algorithm>
#include <cmath>

#include "wide/error.hpp"
#include "wide/parallel.hpp"
#include "wide/spectral.hpp"
#include "wide/torus.hpp"
#include "wide/truncation.hpp"

namespace wide {

namespace {

// Coordinates of node (k, idx) relative to the centre of a cube, physical units.
std::array<double, 4> rel_coords(const CubeCover& C, const Cube& c, long k, const std::array<int, 3>& idx) {
  const int n = C.grid.n;
  const double Lx = n * std::ldexp(1.0, -c.level), Lt = c.lt / C.tau;
  std::array<double, 4> r{};
  r[0] = (static_cast<double>(k) - (-0.5 + (static_cast<double>(c.jt) + 0.5) * Lt)) * C.tau;
  for (int a = 0; a < C.grid.d; ++a) {
    double off = idx[a] - (-0.5 + (static_cast<double>(c.kx[a]) + 0.5) * Lx);
    off -= n * std::round(off / n);
    r[a + 1] = off * C.grid.h();
  }
  return r;
}

// Affine Taylor average v_i(s, y) = A + sum_a B_a y_a + C s in the cube frame.
struct Affine {
  std::vector<double> A, B, Ct;  // nc, nc*d, nc
};

double frob(const double* a, int n) {
  double s = 0.0;
  for (int i = 0; i < n; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

SpaceTimeField masked(const SpaceTimeField& f, const std::vector<std::uint8_t>& m) {
  SpaceTimeField r = f;
  for (std::size_t q = 0; q < m.size(); ++q)
    if (!m[q])
      for (int c = 0; c < f.ncomp; ++c) r.data[q * f.ncomp + c] = 0.0;
  return r;
}

// Skew potential P with Laplace P = trace of the last index pair of D.
SpaceTimeField inverse_hessian(const SpaceTimeField& D) {
  const int d = D.grid.d, dd = d * d;
  SpaceTimeField tr(D.grid, dd, D.nt, D.t0, D.tau);
  const std::size_t P = D.points();
  for (std::size_t q = 0; q < P; ++q)
    for (int c = 0; c < dd; ++c) {
      double s = 0.0;
      for (int a = 0; a < d; ++a) s += D.data[q * D.ncomp + (c * d + a) * d + a];
      tr.data[q * dd + c] = s;
    }
  SpaceTimeField out = map_slices(tr, [](const Field& f) {
    const auto& sp = Spectral::get(f.grid());
    auto s = spectra(f);
    const std::size_t N = sp.size();
    for (int c = 0; c < f.ncomp(); ++c)
      for (std::size_t m = 0; m < N; ++m) {
        const double k2 = sp.k2(m);
        s[c * N + m] = k2 > 0.0 ? -s[c * N + m] / k2 : cplx(0.0);
      }
    Field r(f.grid(), f.ncomp());
    for (int c = 0; c < f.ncomp(); ++c) from_spectrum(&s[c * N], r, c);
    return r;
  });
  return skew_part(out);
}

SpaceTimeField curl_star_st(const SpaceTimeField& v) {
  const SpaceTimeField s = skew_part(v);
  return map_slices(s, [](const Field& f) { return curl_star(f); });
}

}  // namespace

nlohmann::json TruncationBounds::to_json() const {
  return {{"w2inf", w2inf},         {"dt", dt},
          {"dt_grad", dt_grad},     {"eta_dtt", dtt},
          {"C_w2inf", c_w2inf},     {"C_dt", c_dt},
          {"C_dt_grad", c_dt_grad}, {"C_dtt", c_dtt},
          {"changed_measure", changed_measure}, {"bad_measure", bad_measure},
          {"rhs", rhs},             {"good_identity", good_identity},
          {"ladder_value", ladder_value}, {"ladder_grad", ladder_grad}};
}

TruncatedPotential truncate_potential(const PotentialData& pd, const BadSet& bad, const CubeCover& C,
                                      const TruncationConfig& cfg) {
  const SpaceTimeField& v = pd.v;
  if (C.grid != v.grid || C.nt != v.nt || C.t0 != v.t0 || C.tau != v.tau || C.mask != bad.mask ||
      bad.mask.size() != v.points())
    throw Error("CoverMismatch", "cover, bad set and potential describe different windows");
  const int d = v.grid.d, nc = v.ncomp, D = d + 1;
  const std::size_t N = v.grid.size(), P = v.points();

  // Taylor averages over the enlarged cubes
  std::vector<Affine> aff(C.cubes.size());
  parallel_for(C.cubes.size(), [&](std::size_t ci) {
    const Cube& c = C.cubes[ci];
    Affine& f = aff[ci];
    f.A.assign(nc, 0.0);
    f.B.assign(nc * d, 0.0);
    f.Ct.assign(nc, 0.0);
    const auto nodes = C.nodes_of(ci);
    for (std::size_t q : nodes) {
      const long k = static_cast<long>(q / N);
      const auto r = rel_coords(C, c, k, v.grid.multi_index(q % N));
      for (int s = 0; s < nc; ++s) {
        double a = v.data[q * nc + s] - pd.dt.data[q * nc + s] * r[0];
        for (int ax = 0; ax < d; ++ax) {
          const double g = pd.grad.data[q * nc * d + s * d + ax];
          f.B[s * d + ax] += g;
          a -= g * r[ax + 1];
        }
        f.A[s] += a;
        f.Ct[s] += pd.dt.data[q * nc + s];
      }
    }
    const double w = 1.0 / static_cast<double>(nodes.size());
    for (double& x : f.A) x *= w;
    for (double& x : f.B) x *= w;
    for (double& x : f.Ct) x *= w;
  });

  TruncatedPotential T;
  T.v = v;
  T.grad = pd.grad;
  T.hess = pd.hess;
  T.dt = pd.dt;
  T.dtt = pd.dtt;
  T.dt_grad = pd.dt_grad;
  parallel_for(P, [&](std::size_t q) {
    if (!bad.mask[q]) return;
    const long k = static_cast<long>(q / N);
    const auto idx = v.grid.multi_index(q % N);
    for (int s = 0; s < nc; ++s) {
      double val = 0.0;
      double g[4] = {0, 0, 0, 0};
      double H[16] = {};
      for (std::size_t at = C.offset[q]; at < C.offset[q + 1]; ++at) {
        const int ci = C.cube_id[at];
        const Affine& f = aff[ci];
        const auto r = rel_coords(C, C.cubes[ci], k, idx);
        double vi = f.A[s] + f.Ct[s] * r[0];
        double dv[4] = {f.Ct[s], 0, 0, 0};
        for (int ax = 0; ax < d; ++ax) {
          vi += f.B[s * d + ax] * r[ax + 1];
          dv[ax + 1] = f.B[s * d + ax];
        }
        const double ph = C.phi[at];
        const double* dp = &C.dphi[at * D];
        const double* hp = &C.d2phi[at * D * D];
        val += ph * vi;
        for (int a = 0; a < D; ++a) g[a] += dp[a] * vi + ph * dv[a];
        for (int a = 0; a < D; ++a)
          for (int b = 0; b < D; ++b) H[a * D + b] += hp[a * D + b] * vi + dp[a] * dv[b] + dp[b] * dv[a];
      }
      T.v.data[q * nc + s] = val;
      T.dt.data[q * nc + s] = g[0];
      T.dtt.data[q * nc + s] = cfg.eta * H[0];
      for (int a = 0; a < d; ++a) {
        T.grad.data[(q * nc + s) * d + a] = g[a + 1];
        T.dt_grad.data[(q * nc + s) * d + a] = H[a + 1];
        for (int b = 0; b < d; ++b) T.hess.data[((q * nc + s) * d + a) * d + b] = H[(a + 1) * D + b + 1];
      }
    }
  });
  // v_i are averages of skew fields; remove the rounding residue on bad nodes
  {
    const SpaceTimeField* src[6] = {&T.v, &T.grad, &T.hess, &T.dt, &T.dtt, &T.dt_grad};
    SpaceTimeField* dst[6] = {&T.v, &T.grad, &T.hess, &T.dt, &T.dtt, &T.dt_grad};
    for (int i = 0; i < 6; ++i) {
      const SpaceTimeField sk = skew_part(*src[i]);
      const int m = dst[i]->ncomp;
      for (std::size_t q = 0; q < P; ++q)
        if (bad.mask[q]) std::copy_n(&sk.data[q * m], m, &dst[i]->data[q * m]);
    }
  }

  T.changed.assign(P, 0);
  auto& B = T.bounds;
  B.good_identity = true;
  std::size_t changed = 0;
  for (std::size_t q = 0; q < P; ++q) {
    bool diff = false;
    for (int s = 0; s < nc; ++s) diff = diff || T.v.data[q * nc + s] != v.data[q * nc + s];
    T.changed[q] = diff;
    changed += diff;
    if (diff && !bad.mask[q]) B.good_identity = false;
    const double w = std::max({frob(&T.v.data[q * nc], nc), frob(&T.grad.data[q * nc * d], nc * d),
                               frob(&T.hess.data[q * nc * d * d], nc * d * d)});
    B.w2inf = std::max(B.w2inf, w);
    B.dt = std::max(B.dt, frob(&T.dt.data[q * nc], nc));
    B.dtt = std::max(B.dtt, frob(&T.dtt.data[q * nc], nc));
    B.dt_grad = std::max(B.dt_grad, frob(&T.dt_grad.data[q * nc * d], nc * d));
  }
  const double L = cfg.L, La = std::pow(L, cfg.alpha());
  B.c_w2inf = B.w2inf / L;
  B.c_dt = B.dt / La;
  B.c_dt_grad = std::sqrt(cfg.eta) * B.dt_grad / std::pow(L, cfg.beta());
  B.c_dtt = B.dtt / La;
  B.changed_measure = static_cast<double>(changed) * v.cell_volume();
  B.bad_measure = bad.measure();
  B.rhs = bad.rhs();

  // differences of touching Taylor polynomials at shared nodes
  for (std::size_t q = 0; q < P; ++q) {
    const std::size_t b0 = C.offset[q], b1 = C.offset[q + 1];
    if (b1 - b0 < 2) continue;
    const long k = static_cast<long>(q / N);
    const auto idx = v.grid.multi_index(q % N);
    for (std::size_t a = b0; a < b1; ++a)
      for (std::size_t b = a + 1; b < b1; ++b) {
        const int i = C.cube_id[a], j = C.cube_id[b];
        const auto ri = rel_coords(C, C.cubes[i], k, idx), rj = rel_coords(C, C.cubes[j], k, idx);
        const double l = (1.0 + C.eps) * std::min(C.cubes[i].lx, C.cubes[j].lx);
        double dv2 = 0.0, dg2 = 0.0;
        for (int s = 0; s < nc; ++s) {
          double vi = aff[i].A[s] + aff[i].Ct[s] * ri[0], vj = aff[j].A[s] + aff[j].Ct[s] * rj[0];
          for (int ax = 0; ax < d; ++ax) {
            vi += aff[i].B[s * d + ax] * ri[ax + 1];
            vj += aff[j].B[s * d + ax] * rj[ax + 1];
            const double gd = aff[i].B[s * d + ax] - aff[j].B[s * d + ax];
            dg2 += gd * gd;
          }
          dv2 += (vi - vj) * (vi - vj);
        }
        B.ladder_value = std::max(B.ladder_value, std::sqrt(dv2) / (L * l * l));
        B.ladder_grad = std::max(B.ladder_grad, std::sqrt(dg2) / (L * l));
      }
  }
  return T;
}

nlohmann::json TruncationReport::to_json() const {
  return {{"config", cfg.to_json()},
          {"bad_set", bad_set},
          {"cover", cover},
          {"bounds", bounds.to_json()},
          {"identity", identity},
          {"max_div", max_div},
          {"T1", t1},
          {"T2", t2},
          {"T5", t5},
          {"G_LpW1p", g_norm},
          {"H_Ls'W1s'", h_norm},
          {"g_Lq", gt_norm},
          {"h_Ls'", ht_norm},
          {"split_residual", split_residual}};
}

TruncationResult truncate_velocity(const SpaceTimeField& w, const TruncationConfig& cfg) {
  cfg.validate();
  if (w.rank() != 1) throw Error("BadRank", "truncate_velocity expects a vector field");
  for (std::size_t k = 0; k < w.nt; ++k) {
    const auto m = w.slice(k).mean();
    const double scale = std::max(1.0, w.max_abs());
    for (double x : m)
      if (std::abs(x) > 1e-12 * scale) throw Error("NonzeroMean", "w must have zero spatial mean per node");
  }
  TruncationResult R;
  R.w = w;
  R.v = to_potential(w);
  R.data = derive_potential(R.v, cfg);
  R.bad = build_bad_set(R.data, cfg);
  R.cover = whitney_cover(R.bad, cfg);
  R.trunc = truncate_potential(R.data, R.bad, R.cover, cfg);
  R.wL = curl_star_st(R.trunc.v);
  const SpaceTimeField w0 = curl_star_st(R.v);
  const int d = w.grid.d, nc = d * d;
  const std::size_t P = w.points();

  auto& rep = R.report;
  rep.cfg = cfg;
  rep.bad_set = R.bad.summary();
  rep.cover = R.cover.checks.to_json();
  rep.cover["cubes"] = R.cover.cubes.size();
  rep.bounds = R.trunc.bounds;
  rep.identity = R.bad.empty();
  for (std::size_t k = 0; k < w.nt; ++k) rep.max_div = std::max(rep.max_div, divergence(R.wL.slice(k)).max_abs());

  // (T1): curl* v^L and its gradient from the pointwise derivatives
  double t1 = 0.0;
  for (std::size_t q = 0; q < P; ++q) {
    double wv = 0.0, gw = 0.0;
    for (int i = 0; i < d; ++i) {
      double s = 0.0;
      for (int j = 0; j < d; ++j) s += R.trunc.grad.data[(q * nc + i * d + j) * d + j];
      wv += s * s;
      for (int a = 0; a < d; ++a) {
        double g = 0.0;
        for (int j = 0; j < d; ++j) g += R.trunc.hess.data[((q * nc + i * d + j) * d + j) * d + a];
        gw += g * g;
      }
    }
    t1 = std::max(t1, std::max(std::sqrt(wv), std::sqrt(gw)));
  }
  rep.t1 = t1 / cfg.L;
  rep.t2 = R.trunc.bounds.c_dt;
  rep.t5 = std::sqrt(cfg.eta) * st_lp_norm(time_derivative(R.wL), 2.0);

  // (T3): second-gradient splits on the two bad classes
  const Split hs = split_equiintegrable(R.data.hess, cfg.split_rule);
  SpaceTimeField Gt = R.trunc.hess, Ht = R.trunc.hess;
  for (std::size_t i = 0; i < Gt.data.size(); ++i) {
    Gt.data[i] -= hs.eq.data[i];
    Ht.data[i] -= R.data.hess.data[i];
  }
  Gt = masked(Gt, R.bad.class1);
  Ht = masked(Ht, R.bad.class2);
  const SpaceTimeField hco = masked(hs.co, R.bad.class1);
  for (std::size_t i = 0; i < Ht.data.size(); ++i) Ht.data[i] -= hco.data[i];
  R.G = curl_star_st(inverse_hessian(Gt));
  R.H = R.wL;
  for (std::size_t i = 0; i < R.H.data.size(); ++i) R.H.data[i] -= w0.data[i] + R.G.data[i];
  const SpaceTimeField Hd = curl_star_st(inverse_hessian(Ht));
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < Hd.data.size(); ++i) {
    num += (Hd.data[i] - R.H.data[i]) * (Hd.data[i] - R.H.data[i]);
    const double dw = R.wL.data[i] - w0.data[i];
    den += dw * dw;
  }
  rep.split_residual = den > 0.0 ? std::sqrt(num / den) : std::sqrt(num);
  rep.g_norm = st_w1p_norm(R.G, cfg.p);
  rep.h_norm = st_w1p_norm(R.H, cfg.s_prime);

  // (T4): time-derivative splits
  const Split gs = split_equiintegrable(R.data.g.eq, cfg.split_rule);
  SpaceTimeField gt = R.trunc.dt, ht = R.trunc.dt;
  for (std::size_t i = 0; i < gt.data.size(); ++i) {
    gt.data[i] -= gs.eq.data[i];
    ht.data[i] -= R.data.dt.data[i];
  }
  gt = masked(gt, R.bad.class1);
  ht = masked(ht, R.bad.class2);
  SpaceTimeField extra = R.data.g.co;
  for (std::size_t i = 0; i < extra.data.size(); ++i) extra.data[i] += gs.co.data[i];
  extra = masked(extra, R.bad.class1);
  for (std::size_t i = 0; i < ht.data.size(); ++i) ht.data[i] -= extra.data[i];
  R.g = curl_star_st(gt);
  R.h = curl_star_st(ht);
  rep.gt_norm = st_lp_norm(gt, cfg.q());
  rep.ht_norm = st_lp_norm(ht, cfg.s_prime);
  return R;
}

}  // namespace wide
