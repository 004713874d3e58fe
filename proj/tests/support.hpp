/// @file support.hpp
/// @brief Analytic trigonometric fields used as independent oracles.
#pragma once

#include <array>
#include <cmath>
#include <random>
#include <vector>

#include "wide/field.hpp"

namespace wtest {

struct Mode {
  std::array<int, 3> k{0, 0, 0};
  std::vector<double> a, b;  // per component: a cos(k.x) + b sin(k.x)
};

/// Explicit trigonometric polynomial, evaluable anywhere.
struct TrigField {
  int d = 2, ncomp = 1;
  std::vector<Mode> modes;

  double eval(const std::array<double, 3>& x, int c) const {
    double s = 0.0;
    for (const auto& m : modes) {
      double ph = 0.0;
      for (int a = 0; a < d; ++a) ph += m.k[a] * x[a];
      s += m.a[c] * std::cos(ph) + m.b[c] * std::sin(ph);
    }
    return s;
  }

  wide::Field sample(const wide::TorusGrid& g) const {
    wide::Field f(g, ncomp);
    for (std::size_t n = 0; n < g.size(); ++n) {
      auto idx = g.multi_index(n);
      std::array<double, 3> x{0, 0, 0};
      for (int a = 0; a < d; ++a) x[a] = g.coord(idx[a]);
      for (int c = 0; c < ncomp; ++c) f(n, c) = eval(x, c);
    }
    return f;
  }

  // Fourth-order centred difference of component c along axis j at x, step h.
  double fd(std::array<double, 3> x, int c, int j, double h) const {
    auto at = [&](double s) {
      auto y = x;
      y[j] += s;
      return eval(y, c);
    };
    return (8.0 * (at(h) - at(-h)) - (at(2 * h) - at(-2 * h))) / (12.0 * h);
  }
};

inline TrigField random_trig(int d, int ncomp, int kmax, unsigned seed) {
  std::mt19937 rng(seed);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  TrigField f;
  f.d = d;
  f.ncomp = ncomp;
  const int k3 = d == 3 ? kmax : 0;
  for (int i = -kmax; i <= kmax; ++i)
    for (int j = -kmax; j <= kmax; ++j)
      for (int l = -k3; l <= k3; ++l) {
        std::array<int, 3> k{i, j, l};
        // one representative per +/- pair, skip k = 0
        bool positive = false;
        for (int a = 0; a < 3; ++a)
          if (k[a] != 0) {
            positive = k[a] > 0;
            break;
          }
        if (!positive || i * i + j * j + l * l > kmax * kmax) continue;
        Mode m;
        m.k = k;
        for (int c = 0; c < ncomp; ++c) {
          m.a.push_back(u(rng));
          m.b.push_back(u(rng));
        }
        f.modes.push_back(m);
      }
  return f;
}

inline double rel_err(const std::vector<double>& a, const std::vector<double>& b) {
  double num = 0.0, den = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    num = std::max(num, std::abs(a[i] - b[i]));
    den = std::max(den, std::abs(b[i]));
  }
  return num / std::max(den, 1e-300);
}

}  // namespace wtest
