#include "wide/constitutive.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numbers>

#include "wide/error.hpp"

namespace wide {

namespace {

constexpr int kTableNodes = 97;
constexpr double kTableLo = -8.0, kTableHi = 8.0;  // log10 shear rate

double simpson_adaptive(const std::function<double(double)>& f, double a, double b, double fa, double fm,
                        double fb, double whole, double tol, int depth) {
  const double m = 0.5 * (a + b);
  const double lm = 0.5 * (a + m), rm = 0.5 * (m + b);
  const double flm = f(lm), frm = f(rm);
  const double left = (m - a) / 6.0 * (fa + 4.0 * flm + fm);
  const double right = (b - m) / 6.0 * (fm + 4.0 * frm + fb);
  if (depth <= 0 || std::abs(left + right - whole) <= 15.0 * tol)
    return left + right + (left + right - whole) / 15.0;
  return simpson_adaptive(f, a, m, fa, flm, fm, left, 0.5 * tol, depth - 1) +
         simpson_adaptive(f, m, b, fm, frm, fb, right, 0.5 * tol, depth - 1);
}

double integrate(const std::function<double(double)>& f, double a, double b, double tol) {
  const double fa = f(a), fb = f(b), fm = f(0.5 * (a + b));
  const double whole = (b - a) / 6.0 * (fa + 4.0 * fm + fb);
  return simpson_adaptive(f, a, b, fa, fm, fb, whole, tol, 40);
}

double cheb_node(int j) {
  const double x = std::cos(std::numbers::pi * j / (kTableNodes - 1));
  return kTableLo + 0.5 * (x + 1.0) * (kTableHi - kTableLo);
}

}  // namespace

std::string to_string(LawKind k) {
  switch (k) {
    case LawKind::Newtonian: return "Newtonian";
    case LawKind::PowerLaw: return "PowerLaw";
    case LawKind::Ellis: return "Ellis";
  }
  return "?";
}

LawKind law_kind_from_string(const std::string& s) {
  if (s == "Newtonian" || s == "newtonian") return LawKind::Newtonian;
  if (s == "PowerLaw" || s == "power_law" || s == "powerlaw") return LawKind::PowerLaw;
  if (s == "Ellis" || s == "ellis") return LawKind::Ellis;
  throw Error("BadParameter", "unknown law kind '" + s + "'");
}

double EllisTable::mu_at(double s) const {
  if (s <= 0.0 || mu.empty()) return mu.empty() ? 0.0 : mu.back();
  const double x = std::log10(s);
  // nodes are stored from log10 s = kTableHi down to kTableLo
  if (x <= kTableLo) return mu.back();
  if (x >= kTableHi) {
    const double slope = std::log(mu[0] / mu[1]) / std::log(this->s[0] / this->s[1]);
    return mu[0] * std::pow(s / this->s[0], slope);
  }
  double num = 0.0, den = 0.0;
  for (int j = 0; j < kTableNodes; ++j) {
    const double xj = std::log10(this->s[j]);
    const double diff = x - xj;
    if (diff == 0.0) return mu[j];
    double w = (j % 2 ? -1.0 : 1.0) / diff;
    if (j == 0 || j == kTableNodes - 1) w *= 0.5;
    num += w * std::log(mu[j]);
    den += w;
  }
  return std::exp(num / den);
}

ConstitutiveLaw ConstitutiveLaw::newtonian(double mu0, int d) {
  if (!(mu0 > 0.0)) throw Error("BadParameter", "mu0 must be positive");
  if (d != 2 && d != 3) throw Error("BadParameter", "d must be 2 or 3");
  ConstitutiveLaw law;
  law.kind_ = LawKind::Newtonian;
  law.d_ = d;
  law.p_ = 2.0;
  law.mu0_ = mu0;
  law.fit_growth();
  return law;
}

ConstitutiveLaw ConstitutiveLaw::power_law(double p, double mu0, int d) {
  if (!(mu0 > 0.0)) throw Error("BadParameter", "mu0 must be positive");
  if (d != 2 && d != 3) throw Error("BadParameter", "d must be 2 or 3");
  if (!(p > 2.0 * d / (d + 2.0)) || !std::isfinite(p))
    throw Error("BadExponent", "p must exceed 2d/(d+2)");
  ConstitutiveLaw law;
  law.kind_ = LawKind::PowerLaw;
  law.d_ = d;
  law.p_ = p;
  law.mu0_ = mu0;
  if (p < 2.0) {
    law.delta_ = 1e-8;
    double st;
    law.w_delta_ = law.radial_raw(law.delta_, st);
  }
  law.fit_growth();
  return law;
}

ConstitutiveLaw ConstitutiveLaw::ellis(double mu0, double sigma_half, double alpha, int d) {
  if (!(mu0 > 0.0) || !(sigma_half > 0.0) || !(alpha >= 1.0) || !std::isfinite(mu0) ||
      !std::isfinite(sigma_half) || !std::isfinite(alpha))
    throw Error("SolveFailure", "Ellis parameters must satisfy mu0 > 0, sigma_half > 0, alpha >= 1");
  if (d != 2 && d != 3) throw Error("BadParameter", "d must be 2 or 3");
  const double p = (alpha + 1.0) / alpha;
  if (!(p > 2.0 * d / (d + 2.0))) throw Error("BadExponent", "p = (alpha+1)/alpha must exceed 2d/(d+2)");
  ConstitutiveLaw law;
  law.kind_ = LawKind::Ellis;
  law.d_ = d;
  law.p_ = p;
  law.mu0_ = mu0;
  law.sigma_half_ = sigma_half;
  law.alpha_ = alpha;

  auto& t = law.table_;
  t.s.resize(kTableNodes);
  t.mu.resize(kTableNodes);
  t.w.resize(kTableNodes);
  for (int j = 0; j < kTableNodes; ++j) {
    t.s[j] = std::pow(10.0, cheb_node(j));
    t.mu[j] = law.mu(t.s[j]);
    if (!(t.mu[j] > 0.0) || !std::isfinite(t.mu[j])) throw Error("SolveFailure", "Ellis solve failed");
  }
  // W(s) = int_0^s 2 r mu(r) dr, accumulated over ascending nodes with log substitution
  auto integrand = [&](double y) {
    const double r = std::exp(y);
    return law.stress(r) * r;
  };
  double acc = law.mu0_ * std::pow(t.s.back(), 2.0);  // W ~ mu0 s^2 below the smallest node
  t.w.back() = acc;
  for (int j = kTableNodes - 2; j >= 0; --j) {
    const double a = std::log(t.s[j + 1]), b = std::log(t.s[j]);
    acc += integrate(integrand, a, b, 1e-13 * std::max(acc, 1e-300));
    t.w[j] = acc;
  }
  law.fit_growth();
  return law;
}

ConstitutiveLaw build_ellis(double mu0, double sigma_half, double alpha, int d) {
  return ConstitutiveLaw::ellis(mu0, sigma_half, alpha, d);
}

ConstitutiveLaw ConstitutiveLaw::smoothed(double delta) const {
  if (!(delta >= 0.0)) throw Error("BadParameter", "delta must be non-negative");
  ConstitutiveLaw c = *this;
  c.delta_ = delta;
  double st;
  c.w_delta_ = delta > 0.0 ? c.radial_raw(delta, st) : 0.0;
  c.fit_growth();
  return c;
}

double ConstitutiveLaw::ellis_tau(double s) const {
  if (s <= 0.0) return 0.0;
  if (!std::isfinite(s)) throw Error("SolveFailure", "non-finite shear rate");
  if (alpha_ == 1.0) return 2.0 * mu0_ * s;
  const double am1 = alpha_ - 1.0;
  auto g = [&](double tau) { return tau / (2.0 * mu0_) * (1.0 + std::pow(tau / sigma_half_, am1)) - s; };
  auto dg = [&](double tau) { return (1.0 + alpha_ * std::pow(tau / sigma_half_, am1)) / (2.0 * mu0_); };
  double lo = 0.0, hi = 2.0 * mu0_ * s;
  if (!(g(hi) >= 0.0)) throw Error("SolveFailure", "Ellis stress solve does not bracket");
  double tau = std::min(hi, std::pow(2.0 * mu0_ * std::pow(sigma_half_, am1) * s, 1.0 / alpha_));
  for (int it = 0; it < 200; ++it) {
    const double r = g(tau);
    if (r == 0.0) return tau;
    if (r > 0.0) hi = tau;
    else lo = tau;
    double next = tau - r / dg(tau);
    if (!(next > lo && next < hi)) next = 0.5 * (lo + hi);
    if (std::abs(next - tau) <= 1e-15 * next || hi - lo <= 1e-15 * hi) return next;
    tau = next;
  }
  return tau;
}

double ConstitutiveLaw::radial_raw(double s, double& st) const {
  st = 0.0;
  switch (kind_) {
    case LawKind::Newtonian:
      st = 2.0 * mu0_ * s;
      return mu0_ * s * s;
    case LawKind::PowerLaw: {
      const double sp = std::pow(s, p_);
      st = s > 0.0 ? 2.0 * mu0_ * sp / s : 0.0;
      return 2.0 * mu0_ * sp / p_;
    }
    case LawKind::Ellis: {
      const double tau = ellis_tau(s);
      st = tau;
      if (alpha_ == 1.0) return mu0_ * s * s;
      const double g = tau * tau / 2.0 +
                       std::pow(tau, alpha_ + 1.0) / ((alpha_ + 1.0) * std::pow(sigma_half_, alpha_ - 1.0));
      return std::max(0.0, s * tau - g / (2.0 * mu0_));
    }
  }
  return 0.0;
}

double ConstitutiveLaw::w_radial(double s) const {
  double st;
  return radial_raw(s, st);
}

double ConstitutiveLaw::stress(double s) const {
  double st;
  radial_raw(s, st);
  return st;
}

double ConstitutiveLaw::mu(double s) const {
  if (s <= 0.0) {
    if (kind_ == LawKind::PowerLaw && p_ != 2.0) return p_ < 2.0 ? INFINITY : 0.0;
    return mu0_;
  }
  return stress(s) / (2.0 * s);
}

void ConstitutiveLaw::eval(double s, double& w, double& sec) const {
  if (delta_ > 0.0) {
    const double sd = std::sqrt(s * s + delta_ * delta_);
    double st;
    w = radial_raw(sd, st) - w_delta_;
    sec = st / sd;
    return;
  }
  double st;
  w = radial_raw(s, st);
  if (s > 0.0) sec = st / s;
  else sec = (kind_ == LawKind::PowerLaw && p_ != 2.0) ? 0.0 : 2.0 * mu0_;
}

void ConstitutiveLaw::fit_growth() {
  std::vector<double> grid{0.0};
  for (int i = 0; i <= 4000; ++i) grid.push_back(std::pow(10.0, -6.0 + 10.0 * i / 4000.0));
  double c_hi = 0.0, c_lo = 0.0, c_co = INFINITY, c_b = 0.0;
  for (double s : grid) {
    double w, sec;
    eval(s, w, sec);
    const double sp = std::pow(s, p_);
    const double st = sec * s;
    c_hi = std::max(c_hi, w / (1.0 + sp));
    c_lo = std::max(c_lo, 0.5 * (-w + std::sqrt(w * w + 4.0 * sp)));
    if (s > 1.0) c_co = std::min(c_co, st * s / (sp - 1.0));
    c_b = std::max(c_b, st / (1.0 + std::pow(s, p_ - 1.0)));
  }
  growth_.c_w3 = 1.02 * std::max({c_hi, c_lo, 1.0});
  growth_.c_coercive = 0.98 * c_co;
  growth_.c_bound = 1.02 * c_b;
}

nlohmann::json ConstitutiveLaw::to_json(bool with_table) const {
  nlohmann::json j;
  j["kind"] = to_string(kind_);
  j["p"] = p_;
  j["q"] = q();
  j["mu0"] = mu0_;
  if (kind_ == LawKind::Ellis) {
    j["sigma_half"] = sigma_half_;
    j["alpha"] = alpha_;
    if (with_table) j["table"] = {{"s", table_.s}, {"mu", table_.mu}, {"w", table_.w}};
  }
  j["delta"] = delta_;
  j["growth"] = {{"c_w3", growth_.c_w3}, {"c_coercive", growth_.c_coercive}, {"c_bound", growth_.c_bound}};
  return j;
}

ConstitutiveLaw ConstitutiveLaw::from_json(const nlohmann::json& j, int d) {
  const LawKind k = law_kind_from_string(j.at("kind").get<std::string>());
  const double mu0 = j.value("mu0", 0.5);
  ConstitutiveLaw law = k == LawKind::Newtonian ? newtonian(mu0, d)
                        : k == LawKind::PowerLaw
                            ? power_law(j.at("p").get<double>(), mu0, d)
                            : ellis(mu0, j.at("sigma_half").get<double>(), j.at("alpha").get<double>(), d);
  if (j.contains("delta") && j["delta"].get<double>() != law.delta_) law = law.smoothed(j["delta"].get<double>());
  return law;
}

double frobenius(const Mat& a, int d) {
  double s = 0.0;
  for (int i = 0; i < d * d; ++i) s += a[i] * a[i];
  return std::sqrt(s);
}

namespace {
void check_matrix(const ConstitutiveLaw& law, const Mat& e) {
  const int d = law.d();
  const double tol = 1e-10 * std::max(1.0, frobenius(e, d));
  double tr = 0.0;
  for (int i = 0; i < d; ++i) {
    tr += e[i * d + i];
    for (int j = i + 1; j < d; ++j)
      if (std::abs(e[i * d + j] - e[j * d + i]) > tol) throw Error("BadMatrix", "matrix is not symmetric");
  }
  for (int i = 0; i < d * d; ++i)
    if (!std::isfinite(e[i])) throw Error("BadMatrix", "non-finite entry");
  if (std::abs(tr) > tol) throw Error("BadMatrix", "matrix is not trace-free");
}
}  // namespace

double w_value(const ConstitutiveLaw& law, const Mat& eps) {
  check_matrix(law, eps);
  double w, sec;
  law.eval(frobenius(eps, law.d()), w, sec);
  return w;
}

Mat dw_value(const ConstitutiveLaw& law, const Mat& eps) {
  check_matrix(law, eps);
  double w, sec;
  law.eval(frobenius(eps, law.d()), w, sec);
  Mat out{};
  for (int i = 0; i < law.d() * law.d(); ++i) out[i] = sec * eps[i];
  return out;
}

}  // namespace wide
