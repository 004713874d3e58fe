#pragma once

#include <optional>
#include <string>
#include <vector>

#include "json.hpp"
#include "wide/constitutive.hpp"
#include "wide/wide.hpp"

namespace wide {

struct ReferenceConfig {
  double dt = 1e-3;
  double t_end = 1.0;
  double solver_tol = 1e-11;  // relative decrement of the implicit step
  int max_inner = 200;
  bool stokes = false;        // drop convection
  double cfl = 0.5;           // dt <= cfl h / max|u|
  int save_every = 1;

  void validate() const;
  nlohmann::json to_json() const;
  static ReferenceConfig from_json(const nlohmann::json& j);
};

struct ReferenceStats {
  int steps = 0;
  int max_inner = 0;
  double max_cfl = 0.0;  // largest dt max|u| / h seen
};

// Backward Euler for the viscous part, explicit convection:
// u^{m+1} = argmin_v 1/2 ||v - b||^2 + dt int W(eps(v)),  b = u^m - dt P N(u^m).
Trajectory run_reference(const ReferenceConfig& cfg, const Field& u0, const ConstitutiveLaw& law,
                         ReferenceStats* stats = nullptr);

// Divergence-free Fourier modes with 0 < |k| <= kmax (cos and sin, every
// polarisation) followed by `random` random solenoidal fields.
std::vector<Field> test_battery(const TorusGrid& g, int kmax = 4, int random = 16, std::uint64_t seed = 2024);

struct LerayHopfTolerances {
  double weak = 1e-4;
  double initial = 1e-10;
  double energy = 1e-6;
};

struct LerayHopfReport {
  double weak_residual = 0.0;     // normalised, max over battery and times
  double initial_residual = 0.0;  // ||u(0) - u0|| / ||u0||
  double min_energy_residual = 0.0;
  std::vector<double> t, energy_residual;
  bool weak_ok = false, initial_ok = false, energy_ok = false;
  bool pass() const { return weak_ok && initial_ok && energy_ok; }
  nlohmann::json to_json() const;
};

// Weak form <u(T) - u(0), phi> + int_0^T <N(u), phi> + <DW(eps(u)), eps(phi)> dt
// for each phi, normalised by ||phi||_2 (max_m ||u_m||_2 + int ||N|| + ||div DW|| dt).
LerayHopfReport leray_hopf_check(const Trajectory& traj, const ConstitutiveLaw& law,
                                 const std::optional<Field>& u0 = std::nullopt,
                                 const LerayHopfTolerances& tol = {});

}  // namespace wide
