#pragma once

#include <functional>
#include <string>
#include <vector>

#include "wide/field.hpp"

namespace wide {

using FieldVec = std::vector<Field>;

double vec_dot(const FieldVec& a, const FieldVec& b);
void vec_axpy(FieldVec& y, double a, const FieldVec& x);
FieldVec vec_scaled(const FieldVec& x, double a);

struct OptProblem {
  // Value at x; writes the gradient when grad is non-null.
  std::function<double(const FieldVec& x, FieldVec* grad)> eval;
  // Approximate inverse Hessian applied to a gradient.
  std::function<FieldVec(const FieldVec& g)> precond;
  // Maps a trial point back onto the feasible set (optional).
  std::function<void(FieldVec& x)> project;
  // Rebuilds the preconditioner around x (optional).
  std::function<void(const FieldVec& x)> refresh;
};

struct OptOptions {
  bool lbfgs = true;
  double tol = 1e-8;
  double scale = 1.0;  // convergence uses sqrt(<g, P g> / scale)
  int max_iters = 500;
  int memory = 12;
  double c1 = 1e-4;
  double backtrack = 0.5;
  int max_backtracks = 40;
  int refresh_every = 25;
  bool verbose = false;
};

struct OptResult {
  FieldVec x;
  double f = 0.0;
  int iterations = 0;
  bool converged = false;
  bool stalled = false;  // stopped at the rounding floor of f
  std::string flag;      // "", "MaxItersExceeded", "LineSearchFailure"
  double decrement = 0.0;
  double grad_norm = 0.0;
  std::vector<double> history;
};

// Preconditioned L-BFGS or gradient descent with Armijo backtracking.
OptResult optimize(const OptProblem& prob, FieldVec x0, const OptOptions& opt);

}  // namespace wide
