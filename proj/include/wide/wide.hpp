#pragma once

#include <limits>
#include <string>
#include <vector>

#include "json.hpp"
#include "wide/constitutive.hpp"
#include "wide/field.hpp"

namespace wide {

struct WideConfig {
  double eta = 0.1;
  double c4 = -1.0;       // negative: default_c4(grid)
  double t_max = 0.0;     // 0: max(10 eta, t_study)
  double t_study = 0.0;
  double tau0 = 0.0;      // first step, 0: eta/100
  double ratio = 1.05;    // geometric growth of the steps, 1 for uniform
  double tau_cap = 0.0;   // largest step, 0: eta/20
  bool convection = true;
  bool stabiliser = true;
  double c0 = 100.0;      // bound constant for the initial-data conditions
  double feas_tol = 1e-10;

  void validate() const;
  double horizon() const;
  double resolved_c4(const TorusGrid& g) const;
  nlohmann::json to_json() const;
  static WideConfig from_json(const nlohmann::json& j);
};

// Nodes 0 = t_0 < ... < t_M = horizon().
std::vector<double> time_grid(const WideConfig& cfg);

struct Trajectory {
  std::vector<double> t;
  std::vector<Field> u;
  std::string scheme = "wide";  // "wide" or "reference"
  double eta = std::numeric_limits<double>::quiet_NaN();
  WideConfig cfg;

  std::size_t size() const { return t.size(); }
  const TorusGrid& grid() const { return u.front().grid(); }
  // Piecewise-linear value at time s (clamped to the horizon).
  Field at(double s) const;
  // Throws InvalidTrajectory on divergence, mean or layout defects.
  void validate(double tol = 1e-10) const;
};

// Constant extension of u0 on the configured time grid.
Trajectory constant_trajectory(const Field& u0, const WideConfig& cfg);

// Exact integrals of e^(-t/eta) against the interval indicator (W_i) and
// the hat functions (w_m) of the node grid, plus the tail beyond t_M.
struct WeightTable {
  std::vector<double> interval, hat;
  double tail = 0.0;
};
WeightTable weight_table(const std::vector<double>& t, double eta);

struct ExponentTable {
  double p, q, beta, gamma, s_tilde, s;
};
ExponentTable exponent_table(double p, int d, double margin = 0.05);

struct PreparedData {
  Field u;
  int cutoff = 0;        // spherical cutoff |k| <= cutoff
  double c0 = 0.0;       // achieved eta * max of the three norms
  double grad_p = 0.0;   // ||grad u||_p^p
  double conv_2 = 0.0;   // ||div(u (x) u)||_2^2
  double grad_4 = 0.0;   // ||grad u||_4^4
  double l2_distance = 0.0;
};
PreparedData prepare_initial_data(const Field& u0, double eta, const ConstitutiveLaw& law, double c0 = 100.0);

struct FunctionalParts {
  double inertia = 0.0, dissipation = 0.0, stabiliser = 0.0;
  double total() const { return inertia + dissipation + stabiliser; }
};

// check = false skips trajectory validation (callers that keep iterates feasible).
FunctionalParts functional_parts(const Trajectory& traj, const ConstitutiveLaw& law, bool check = true);
double evaluate_functional(const Trajectory& traj, const ConstitutiveLaw& law, bool check = true);
// Gradient in the nodal inner product sum_m <g_m, phi_m>_h, Leray-projected,
// zero at node 0. Optionally returns the functional value.
std::vector<Field> first_variation(const Trajectory& traj, const ConstitutiveLaw& law, double* value = nullptr,
                                   bool check = true);

// Sum over nodes of inner(a_m, b_m).
double traj_inner(const std::vector<Field>& a, const std::vector<Field>& b);

// Spatial integrals at one node.
double energy(const Field& u);
double dissipation_rate(const Field& u, const ConstitutiveLaw& law);
double potential_integral(const Field& u, const ConstitutiveLaw& law);

struct DiagnosticsReport {
  std::vector<double> t, E, D, cum_diss, r_ineq, r_eq;
  double min_r_ineq() const;
  double min_D() const;
  std::string to_csv() const;
  nlohmann::json summary() const;
};

// Weight (1 - e^(-t/eta)) for WIDE trajectories, 1 for reference runs.
DiagnosticsReport energy_report(const Trajectory& traj, const ConstitutiveLaw& law);

}  // namespace wide
