#pragma once

#include <array>
#include <string>
#include <vector>

#include "json.hpp"

namespace wide {

enum class LawKind { Newtonian, PowerLaw, Ellis };

std::string to_string(LawKind k);
LawKind law_kind_from_string(const std::string& s);

/// d x d matrix, row-major with stride d (entries beyond d*d unused).
using Mat = std::array<double, 9>;

/// Constants of the sampled growth conditions:
///   c_w3^-1 |e|^p - c_w3 <= W(e) <= c_w3 (1 + |e|^p)
///   DW(e):e >= max(c_coercive |e|^p - c_coercive, 0)
///   |DW(e)| <= c_bound (1 + |e|^(p-1))
struct GrowthConstants {
  double c_w3 = 0.0;
  double c_coercive = 0.0;
  double c_bound = 0.0;
};

struct EllisTable {
  std::vector<double> s, mu, w;  // log-spaced shear rates
  double mu_at(double s) const;  // Chebyshev interpolation in log s, power-law tails
};

/// Isotropic potential W(e) = Wr(|e|) with DW(e) = Wr'(|e|)/|e| e.
class ConstitutiveLaw {
 public:
  static ConstitutiveLaw newtonian(double mu0, int d);
  static ConstitutiveLaw power_law(double p, double mu0, int d);
  static ConstitutiveLaw ellis(double mu0, double sigma_half, double alpha, int d);

  LawKind kind() const { return kind_; }
  int d() const { return d_; }
  double p() const { return p_; }
  double q() const { return p_ / (p_ - 1.0); }
  double mu0() const { return mu0_; }
  double sigma_half() const { return sigma_half_; }
  double alpha() const { return alpha_; }
  double delta() const { return delta_; }
  const GrowthConstants& growth() const { return growth_; }
  const EllisTable& table() const { return table_; }

  // Copy whose potential is Wr(sqrt(s^2 + delta^2)) - Wr(delta).
  ConstitutiveLaw smoothed(double delta) const;

  // Unsmoothed radial profile.
  double w_radial(double s) const;
  // Wr'(s) = 2 mu(s) s
  double stress(double s) const;
  double mu(double s) const;
  // Smoothed potential value and secant factor DW = sec * e at |e| = s.
  void eval(double s, double& w, double& sec) const;

  nlohmann::json to_json(bool with_table = false) const;
  static ConstitutiveLaw from_json(const nlohmann::json& j, int d);

 private:
  ConstitutiveLaw() = default;
  void fit_growth();
  // Ellis: stress magnitude tau at shear rate s.
  double ellis_tau(double s) const;
  double radial_raw(double s, double& stress) const;

  LawKind kind_ = LawKind::Newtonian;
  int d_ = 2;
  double p_ = 2.0, mu0_ = 0.5, sigma_half_ = 0.0, alpha_ = 1.0, delta_ = 0.0;
  double w_delta_ = 0.0;
  GrowthConstants growth_;
  EllisTable table_;
};

// Validated pointwise evaluation; eps must be symmetric and trace-free
// within 1e-10 (BadMatrix otherwise).
double w_value(const ConstitutiveLaw& law, const Mat& eps);
Mat dw_value(const ConstitutiveLaw& law, const Mat& eps);
double frobenius(const Mat& a, int d);

ConstitutiveLaw build_ellis(double mu0, double sigma_half, double alpha, int d = 2);

}  // namespace wide
