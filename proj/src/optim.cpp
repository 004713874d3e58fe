#include "wide/optim.hpp"

#include <cmath>
#include <cstdio>
#include <deque>

namespace wide {

double vec_dot(const FieldVec& a, const FieldVec& b) {
  double s = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) s += inner(a[i], b[i]);
  return s;
}

void vec_axpy(FieldVec& y, double a, const FieldVec& x) {
  for (std::size_t i = 0; i < y.size(); ++i) y[i].axpy(a, x[i]);
}

FieldVec vec_scaled(const FieldVec& x, double a) {
  FieldVec y = x;
  for (auto& f : y) f *= a;
  return y;
}

OptResult optimize(const OptProblem& prob, FieldVec x, const OptOptions& opt) {
  OptResult R;
  FieldVec g;
  double f = prob.eval(x, &g);
  R.history.push_back(f);
  struct Pair {
    FieldVec s, y;
    double rho;
  };
  std::deque<Pair> mem;
  const double scale = opt.scale > 0.0 ? opt.scale : 1.0;
  double alpha_prev = 1.0;

  for (int it = 0;; ++it) {
    if (prob.refresh && it > 0 && opt.refresh_every > 0 && it % opt.refresh_every == 0) {
      prob.refresh(x);
      mem.clear();
    }
    const FieldVec pg = prob.precond(g);
    const double gpg = vec_dot(g, pg);
    R.decrement = std::sqrt(std::max(gpg, 0.0) / scale);
    R.grad_norm = std::sqrt(vec_dot(g, g));
    if (opt.verbose) std::fprintf(stderr, "iter %d  f=%.15e  dec=%.3e\n", it, f, R.decrement);
    if (R.decrement <= opt.tol) {
      R.converged = true;
      break;
    }
    if (it >= opt.max_iters) {
      R.flag = "MaxItersExceeded";
      break;
    }

    FieldVec d;
    if (opt.lbfgs && !mem.empty()) {
      FieldVec q = g;
      std::vector<double> al(mem.size());
      for (int i = static_cast<int>(mem.size()) - 1; i >= 0; --i) {
        al[i] = mem[i].rho * vec_dot(mem[i].s, q);
        vec_axpy(q, -al[i], mem[i].y);
      }
      FieldVec r = prob.precond(q);
      for (std::size_t i = 0; i < mem.size(); ++i) {
        const double b = mem[i].rho * vec_dot(mem[i].y, r);
        vec_axpy(r, al[i] - b, mem[i].s);
      }
      d = vec_scaled(r, -1.0);
    } else {
      d = vec_scaled(pg, -1.0);
    }
    double gd = vec_dot(g, d);
    if (!(gd < 0.0)) {
      mem.clear();
      d = vec_scaled(pg, -1.0);
      gd = -gpg;
    }

    double alpha = opt.lbfgs ? 1.0 : std::min(1.0, 2.0 * alpha_prev);
    bool accepted = false;
    FieldVec xn, gn;
    double fn = 0.0;
    for (int b = 0; b <= opt.max_backtracks; ++b) {
      xn = x;
      vec_axpy(xn, alpha, d);
      if (prob.project) prob.project(xn);
      fn = prob.eval(xn, &gn);
      if (std::isfinite(fn) && fn <= f + opt.c1 * alpha * gd) {
        accepted = true;
        break;
      }
      alpha *= opt.backtrack;
    }
    if (!accepted) {
      // predicted decrease below the rounding level of f
      if (-gd <= 1e-12 * std::max(std::abs(f), scale)) {
        R.stalled = true;
        R.converged = true;
      } else {
        R.flag = "LineSearchFailure";
      }
      break;
    }
    alpha_prev = alpha;
    FieldVec s = xn, y = gn;
    vec_axpy(s, -1.0, x);
    vec_axpy(y, -1.0, g);
    const double sy = vec_dot(s, y);
    if (opt.lbfgs && sy > 1e-14 * std::sqrt(vec_dot(s, s) * vec_dot(y, y))) {
      mem.push_back({std::move(s), std::move(y), 1.0 / sy});
      if (static_cast<int>(mem.size()) > opt.memory) mem.pop_front();
    }
    x = std::move(xn);
    g = std::move(gn);
    f = fn;
    R.history.push_back(f);
    R.iterations = it + 1;
  }
  R.x = std::move(x);
  R.f = f;
  return R;
}

}  // namespace wide
