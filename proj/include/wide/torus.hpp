#pragma once

#include <cstdint>

#include "wide/field.hpp"

namespace wide {

// Spectral gradient: component c of f becomes components c*d + j (d/dx_j).
Field gradient(const Field& f);
// rate of strain 1/2 (grad u + grad u^T)
Field sym_gradient(const Field& u);
// Vector -> scalar; tensor -> vector with (div S)_i = sum_j d_j S_ij.
Field divergence(const Field& f);
Field laplacian(const Field& f);

Field leray_project(const Field& u);
// Zeroes the spatial mean of every component.
Field remove_mean(const Field& f);

// div(u (x) u) with 2/3-rule dealiasing. Throws DivergenceTooLarge when
// ||div u||_2 > tol * max(1, ||u||_2).
Field convect(const Field& u, double tol = 1e-8);
// Same without the divergence check.
Field convect_unchecked(const Field& u);

// (curl* v)_i = sum_j d_j v_ij for skew v.
Field curl_star(const Field& v);
// Skew potential with curl_star(potential_T(w)) = w for solenoidal zero-mean w.
Field potential_T(const Field& w);

// (h^d sum |f|^p)^(1/p) with |f| the componentwise Euclidean magnitude;
// p = infinity gives the max over nodes.
double lp_norm(const Field& f, double p);
// Lp norm of the order-th spectral derivative (order 0, 1 or 2).
double sobolev_seminorm(const Field& f, int order, double p);

// Ratio ||u||_p / ||grad u||_p for one zero-mean scalar field.
double poincare_ratio(const Field& u, double p);
// Estimate of sup ||u||_p / ||grad u||_p over zero-mean scalar fields on g.
double poincare_constant(const TorusGrid& g, double p, std::uint64_t seed = 7);
// 1/2 (9 (1.05 C_P)^2 + 1) with C_P the p = 4 estimate on g.
double default_c4(const TorusGrid& g);

// Smooth random zero-mean field with spectrum confined to |k| <= kmax.
Field random_field(const TorusGrid& g, int ncomp, int kmax, std::uint64_t seed, double decay = 0.0);
Field random_solenoidal(const TorusGrid& g, int kmax, std::uint64_t seed, double decay = 0.0);
Field random_skew(const TorusGrid& g, int kmax, std::uint64_t seed);

}  // namespace wide
