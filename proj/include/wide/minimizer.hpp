#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "json.hpp"
#include "wide/constitutive.hpp"
#include "wide/wide.hpp"

namespace wide {

enum class Method { GradientDescent, LBFGS };

struct SolverConfig {
  Method method = Method::LBFGS;
  // Stop when sqrt(<g, P g> / I(initial)) <= grad_tol, P the preconditioner.
  double grad_tol = 1e-8;
  int max_iters = 500;
  int memory = 12;
  double armijo_c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  int precond_refresh = 25;  // iterations between preconditioner rebuilds
  std::uint64_t seed = 0;
  bool verbose = false;

  void validate() const;
  nlohmann::json to_json() const;
  static SolverConfig from_json(const nlohmann::json& j);
};

struct MinimizeResult {
  Trajectory traj;
  bool converged = false;
  int iterations = 0;
  std::string flag;  // empty, "MaxItersExceeded" or "LineSearchFailure"
  double value = 0.0;
  double competitor = 0.0;  // I of the constant extension
  double decrement = 0.0;   // final relative preconditioned gradient norm
  double grad_norm = 0.0;   // final sqrt(sum_m <g_m, g_m>_h)
  std::vector<double> history;

  nlohmann::json to_json() const;
};

MinimizeResult minimize(const WideConfig& cfg, const SolverConfig& scfg, const Field& u0, const ConstitutiveLaw& law);

// Block-tridiagonal-in-time, diagonal-in-Fourier approximation of the
// Hessian of I at a trajectory; apply() solves with it.
class Preconditioner {
 public:
  Preconditioner(const Trajectory& tr, const ConstitutiveLaw& law);
  std::vector<Field> apply(const std::vector<Field>& g) const;

 private:
  TorusGrid grid_;
  double eta_;
  std::vector<double> tau_, interval_, hat_;
  std::vector<double> visc_, stab_, conv_;  // per node
};

struct ModeSolution {
  double k = 0.0, eta = 0.0, nu = 0.0;
  double lambda_minus = 0.0;
  std::vector<double> t, a;
};

// Decaying solution a(t) = e^(lambda_minus t) of a'' - a'/eta - (nu k^2/eta) a = 0.
ModeSolution stokes_mode_oracle(double k, double eta, double nu, const std::vector<double>& times = {});

// Decay rate fitted by least squares to log a(t_m) over t_m <= t_fit.
double fitted_rate(const std::vector<double>& t, const std::vector<double>& a, double t_fit);
// Coefficient of u0 in each node (<u_m, u0>/<u0, u0>).
std::vector<double> mode_amplitudes(const Trajectory& tr, const Field& u0);

// (int_0^T ||a(t) - b(t)||_{W^1,p}^p dt)^(1/p) on b's nodes, a interpolated.
double lp_w1p_distance(const Trajectory& a, const Trajectory& b, double p, double T);

struct SweepRow {
  double eta = 0.0;
  double value = 0.0;
  double competitor = 0.0;
  double distance = 0.0;
  double min_r_ineq = 0.0;
  double max_abs_r_eq = 0.0;
  int iterations = 0;
  bool converged = false;
  std::string flag, error;
};

struct SweepReport {
  std::vector<SweepRow> rows;
  double slope = 0.0;  // of log I against log(1/eta)
  std::string to_csv() const;
  nlohmann::json to_json() const;
};

// Least-squares slope of log(value) against log(1/eta).
double fit_slope(const std::vector<double>& etas, const std::vector<double>& values);

SweepReport eta_sweep(const std::vector<double>& etas, const Field& u0, const ConstitutiveLaw& law,
                      const Trajectory& reference, const WideConfig& base, const SolverConfig& scfg,
                      std::vector<Trajectory>* minimisers = nullptr);

}  // namespace wide
