#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include "json.hpp"
#include "wide/field.hpp"
#include "wide/wide.hpp"

namespace wide {

/// Space-time samples on a uniform time grid t0 + k*tau, k < nt.
/// Layout [time][node][component].
struct SpaceTimeField {
  TorusGrid grid;
  int ncomp = 1;
  std::size_t nt = 0;
  double t0 = 0.0;
  double tau = 1.0;
  std::vector<double> data;

  SpaceTimeField() = default;
  SpaceTimeField(const TorusGrid& g, int ncomp, std::size_t nt, double t0, double tau);

  std::size_t nodes() const { return grid.size(); }
  std::size_t points() const { return nt * grid.size(); }
  double time(std::size_t k) const { return t0 + static_cast<double>(k) * tau; }
  double cell_volume() const { return tau * grid.cell_volume(); }
  // -1 when ncomp does not match a scalar/vector/tensor layout.
  int rank() const;

  double& operator()(std::size_t k, std::size_t node, int c) {
    return data[(k * grid.size() + node) * ncomp + c];
  }
  double operator()(std::size_t k, std::size_t node, int c) const {
    return data[(k * grid.size() + node) * ncomp + c];
  }
  double magnitude(std::size_t k, std::size_t node) const;
  // Scalar field of the componentwise Euclidean magnitudes.
  SpaceTimeField magnitude() const;

  Field slice(std::size_t k) const;
  void set_slice(std::size_t k, const Field& f);
  bool same_window(const SpaceTimeField& o) const;
  double max_abs() const;
  bool finite() const;
};

// Applies f to every time slice.
SpaceTimeField map_slices(const SpaceTimeField& s, const std::function<Field(const Field&)>& f);
// Samples f on [0, T]: nt nodes with step T/(nt-1), and extends evenly about
// t = 0 and t = T to [-T, 2T] (3nt - 2 nodes).
SpaceTimeField reflect_extend(const SpaceTimeField& s);
// Second-order differences in time, one-sided at the window ends.
SpaceTimeField time_derivative(const SpaceTimeField& f);
SpaceTimeField second_time_derivative(const SpaceTimeField& f);
// Antisymmetric part in the leading index pair of every d x d block.
SpaceTimeField skew_part(const SpaceTimeField& f);
// (tau h^d sum |f|^p)^(1/p); p = infinity gives the max magnitude.
double st_lp_norm(const SpaceTimeField& f, double p);
// L_p in time of the W^{1,p} norm in space, (||f||_p^p + ||grad f||_p^p)^(1/p).
double st_w1p_norm(const SpaceTimeField& f, double p);

struct ThresholdRule {
  enum Kind { Fixed, RmsMultiple };
  Kind kind = RmsMultiple;
  double value = 8.0;
  double lambda(const SpaceTimeField& f) const;
  nlohmann::json to_json() const;
  static ThresholdRule from_json(const nlohmann::json& j);
};

struct TruncationConfig {
  double L = 4.0;
  double p = 2.0;
  double eta = 0.1;
  // Integrability exponent of the concentrating parts.
  double s_prime = 1.2;
  int m_min = 1;
  // Finest dyadic level; -1 picks one where every cube holds a single node.
  int m_max = -1;
  double eps = 1.0 / 16.0;
  // Bad set from the centred (default) or non-centred maximal function.
  bool centred = true;
  ThresholdRule split_rule;

  double kappa() const;
  double alpha() const { return p - 1.0; }
  double q() const { return p / (p - 1.0); }
  double beta() const;
  // 2L, 2L^(p/2) eta^(-1/2), 2L^alpha, 2L^alpha.
  std::array<double, 4> thresholds() const;
  static double c_d(int d);
  void validate() const;
  nlohmann::json to_json() const;
  static TruncationConfig from_json(const nlohmann::json& j);
};

enum class Metric { Parabolic, Elliptic };
const char* metric_name(Metric m);
// Distance of (t, x) from the origin, |x| the spatial length:
// max(|x|, kappa |t|^1/2) or max(|x|, kappa eta^-1/2 |t|).
double metric_distance(Metric m, double t, double x, double kappa, double eta);

// Time reach of the radius-h*2^j ball: largest k with k*tau inside it.
long time_reach(const SpaceTimeField& f, Metric m, int j, double kappa, double eta);
// Largest j with 2^j <= n/2.
int top_radius_level(const TorusGrid& g);
// Centred maximal function of |f| over balls of radius h*2^j, j = 0..top,
// averaged over the nodes of the ball that lie in the window.
SpaceTimeField maximal_function(const SpaceTimeField& f, Metric m, double kappa, double eta);
SpaceTimeField maximal_function(const SpaceTimeField& f, Metric m, const TruncationConfig& cfg);
// Supremum over all ladder balls containing the node.
SpaceTimeField maximal_function_noncentred(const SpaceTimeField& f, Metric m, double kappa,
                                           double eta);
// Direct evaluation of every centre and radius.
SpaceTimeField maximal_function_brute(const SpaceTimeField& f, Metric m, double kappa, double eta,
                                      bool centred = true);

struct Split {
  SpaceTimeField eq, co;
  double lambda = 0.0;
  double co_measure = 0.0;
};
Split split_equiintegrable(const SpaceTimeField& f, const ThresholdRule& rule);

// v and the derivative fields the bad set and the extension need.
struct PotentialData {
  SpaceTimeField v, grad, hess, dt, dtt, dt_grad;  // dtt = eta d_t^2 v
  Split g, h2;                                       // splits of dt and dtt
};
// d_t by second-order differences, spatial derivatives spectrally.
PotentialData derive_potential(const SpaceTimeField& v, const TruncationConfig& cfg);

struct BadSet {
  TorusGrid grid;
  std::size_t nt = 0;
  double t0 = 0.0, tau = 1.0;
  std::array<std::vector<std::uint8_t>, 4> pa, ell;
  std::vector<std::uint8_t> mask;
  // Nodes flagged by a component 1..3 (class 1) or only by component 4.
  std::vector<std::uint8_t> class1, class2;
  double rhs_equi = 0.0;  // C_d L^-p times the equi-integrable integrals
  double rhs_conc = 0.0;  // C_d L^(-p s'/q) times the concentrating integrals

  std::size_t count() const;
  double measure() const;
  double rhs() const { return rhs_equi + rhs_conc; }
  bool empty() const { return count() == 0; }
  // Bad set given only by a mask; components are left empty.
  static BadSet from_mask(const TorusGrid& g, std::size_t nt, double t0, double tau,
                          std::vector<std::uint8_t> mask);
  nlohmann::json summary() const;
};

BadSet build_bad_set(const PotentialData& pd, const TruncationConfig& cfg);

struct Cube {
  Metric kind = Metric::Parabolic;
  int level = 0;
  std::int64_t jt = 0;                // time anchor index
  std::array<std::int64_t, 3> kx{};   // spatial anchor indices
  double lx = 0.0, lt = 0.0;          // un-enlarged sidelengths
  bool fallback = false;              // kept although outside its size range
  bool top = false;                   // chosen at m_min (no parent check)
};

struct CoverChecks {
  bool q1 = false, disjoint = false, q2 = false, q4 = false, q5 = false, q6 = false, q7 = false;
  bool partition = false;
  std::size_t max_overlap = 0;
  std::size_t max_neighbours = 0;
  double max_ratio = 1.0;
  double q5_lo = 0.0, q5_hi = 0.0;  // min of c_d l_x / d and min of 2 c_d d / l_x
  double q6_lo = 0.0, q6_hi = 0.0;
  double q7_lx = 1.0, q7_lt = 1.0;  // largest factor away from k eta^1/2 and eta
  double partition_defect = 0.0;
  std::size_t fallbacks = 0, top_cubes = 0;
  double max_lx = 0.0;
  bool admissible = false;
  // Measured constants of the partition derivative bounds, indices
  // grad, hess, dt, dt_grad, dtt.
  std::array<double, 5> q9{}, q10{};
  bool pass() const { return q1 && disjoint && q2 && q4 && q5 && q6 && q7 && partition; }
  nlohmann::json to_json() const;
};

/// Mixed parabolic/elliptic Whitney cover with partition of unity. The
/// partition is stored per node in CSR form: entries offset[p]..offset[p+1]
/// hold the cube index and phi with its first and second derivatives in
/// (t, x_1..x_d).
struct CubeCover {
  TorusGrid grid;
  std::size_t nt = 0;
  double t0 = 0.0, tau = 1.0;
  double kappa = 1.0, eta = 1.0, eps = 1.0 / 16.0, c_d = 1.0;
  std::vector<Cube> cubes;
  std::vector<std::vector<int>> adjacency;
  std::vector<std::size_t> offset;
  std::vector<int> cube_id;
  std::vector<double> phi;     // one per entry
  std::vector<double> dphi;    // (d+1) per entry
  std::vector<double> d2phi;   // (d+1)^2 per entry
  std::vector<std::uint8_t> mask;
  CoverChecks checks;

  int dim() const { return grid.d + 1; }
  // Nodes inside the enlarged cube.
  std::vector<std::size_t> nodes_of(std::size_t i) const;
  nlohmann::json to_json() const;
};

CubeCover whitney_cover(const BadSet& bad, const TruncationConfig& cfg);
// Recomputes every check of the cover against its mask.
CoverChecks check_cover(const CubeCover& cover, const TruncationConfig& cfg);

struct TruncationBounds {
  double w2inf = 0.0, dt = 0.0, dt_grad = 0.0, dtt = 0.0;  // raw sup norms
  double c_w2inf = 0.0, c_dt = 0.0, c_dt_grad = 0.0, c_dtt = 0.0;  // scaled by L powers
  double changed_measure = 0.0, bad_measure = 0.0, rhs = 0.0;
  bool good_identity = false;
  double ladder_value = 0.0, ladder_grad = 0.0;
  nlohmann::json to_json() const;
};

struct TruncatedPotential {
  SpaceTimeField v, grad, hess, dt, dtt, dt_grad;  // dtt = eta d_t^2 v^L
  std::vector<std::uint8_t> changed;
  TruncationBounds bounds;
};

TruncatedPotential truncate_potential(const PotentialData& pd, const BadSet& bad,
                                      const CubeCover& cover, const TruncationConfig& cfg);

// Mollified difference w = u_eta - phi_eta * u_ref on [-T, 2T], T = t_end.
struct PrepareOptions {
  double t_end = 0.0;  // 0 picks the shorter horizon
  std::size_t nt = 33;
};
SpaceTimeField prepare_w(const Trajectory& u_eta, const Trajectory& u_ref, double eta,
                         const PrepareOptions& opt = {});
// Time convolution with the unit-mass C^inf bump of half-width eta.
SpaceTimeField mollify_time(const SpaceTimeField& f, double eta);
SpaceTimeField to_potential(const SpaceTimeField& w);

struct TruncationReport {
  TruncationConfig cfg;
  nlohmann::json bad_set, cover;
  TruncationBounds bounds;
  bool identity = false;
  double max_div = 0.0;
  double t1 = 0.0, t2 = 0.0, t5 = 0.0;
  double g_norm = 0.0, h_norm = 0.0, gt_norm = 0.0, ht_norm = 0.0;
  double split_residual = 0.0;
  nlohmann::json to_json() const;
};

struct TruncationResult {
  SpaceTimeField w, v, wL;
  PotentialData data;
  BadSet bad;
  CubeCover cover;
  TruncatedPotential trunc;
  SpaceTimeField G, H, g, h;
  TruncationReport report;
};

TruncationResult truncate_velocity(const SpaceTimeField& w, const TruncationConfig& cfg);

}  // namespace wide
