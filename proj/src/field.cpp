#include "wide/field.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "wide/error.hpp"

namespace wide {

TorusGrid::TorusGrid(int d_, int n_) : d(d_), n(n_) {
  if (d != 2 && d != 3) throw Error("BadGrid", "dimension must be 2 or 3");
  if (n < 8 || (n & (n - 1)) != 0) throw Error("BadGrid", "n must be a power of two >= 8");
}

std::size_t TorusGrid::size() const {
  std::size_t s = 1;
  for (int i = 0; i < d; ++i) s *= static_cast<std::size_t>(n);
  return s;
}

double TorusGrid::h() const { return 2.0 * std::numbers::pi / n; }
double TorusGrid::cell_volume() const { return std::pow(h(), d); }
double TorusGrid::volume() const { return std::pow(2.0 * std::numbers::pi, d); }
double TorusGrid::coord(int i) const { return 2.0 * std::numbers::pi * i / n; }

std::array<int, 3> TorusGrid::multi_index(std::size_t node) const {
  std::array<int, 3> idx{0, 0, 0};
  for (int a = d - 1; a >= 0; --a) {
    idx[a] = static_cast<int>(node % n);
    node /= n;
  }
  return idx;
}

std::size_t TorusGrid::node(const std::array<int, 3>& idx) const {
  std::size_t s = 0;
  for (int a = 0; a < d; ++a) s = s * n + static_cast<std::size_t>(((idx[a] % n) + n) % n);
  return s;
}

Field::Field(const TorusGrid& g, int ncomp) : grid_(g), ncomp_(ncomp), v_(g.size() * ncomp, 0.0) {}

int Field::rank() const {
  if (ncomp_ == 1) return 0;
  if (ncomp_ == grid_.d) return 1;
  if (ncomp_ == grid_.d * grid_.d) return 2;
  return -1;
}

static void check_same(const Field& a, const Field& b) {
  if (a.grid() != b.grid() || a.ncomp() != b.ncomp()) throw Error("ShapeMismatch", "field shapes differ");
}

Field& Field::operator+=(const Field& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += o.v_[i];
  return *this;
}

Field& Field::operator-=(const Field& o) {
  check_same(*this, o);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] -= o.v_[i];
  return *this;
}

Field& Field::operator*=(double a) {
  for (double& x : v_) x *= a;
  return *this;
}

void Field::axpy(double a, const Field& x) {
  check_same(*this, x);
  for (std::size_t i = 0; i < v_.size(); ++i) v_[i] += a * x.v_[i];
}

void Field::fill(double a) { std::fill(v_.begin(), v_.end(), a); }

bool Field::finite() const {
  return std::all_of(v_.begin(), v_.end(), [](double x) { return std::isfinite(x); });
}

double Field::max_abs() const {
  double m = 0.0;
  for (double x : v_) m = std::max(m, std::abs(x));
  return m;
}

double Field::magnitude(std::size_t node) const {
  double s = 0.0;
  for (int c = 0; c < ncomp_; ++c) s += v_[node * ncomp_ + c] * v_[node * ncomp_ + c];
  return std::sqrt(s);
}

std::vector<double> Field::mean() const {
  std::vector<double> m(ncomp_, 0.0);
  for (std::size_t i = 0; i < nodes(); ++i)
    for (int c = 0; c < ncomp_; ++c) m[c] += v_[i * ncomp_ + c];
  for (double& x : m) x /= static_cast<double>(nodes());
  return m;
}

double Field::asymmetry() const {
  if (rank() != 2) throw Error("BadRank", "tensor field expected");
  const int d = grid_.d;
  double m = 0.0;
  for (std::size_t k = 0; k < nodes(); ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i + 1; j < d; ++j) m = std::max(m, std::abs((*this)(k, i * d + j) - (*this)(k, j * d + i)));
  return m;
}

double Field::skew_defect() const {
  if (rank() != 2) throw Error("BadRank", "tensor field expected");
  const int d = grid_.d;
  double m = 0.0;
  for (std::size_t k = 0; k < nodes(); ++k)
    for (int i = 0; i < d; ++i)
      for (int j = i; j < d; ++j) m = std::max(m, std::abs((*this)(k, i * d + j) + (*this)(k, j * d + i)));
  return m;
}

double Field::trace_defect() const {
  if (rank() != 2) throw Error("BadRank", "tensor field expected");
  const int d = grid_.d;
  double m = 0.0;
  for (std::size_t k = 0; k < nodes(); ++k) {
    double tr = 0.0;
    for (int i = 0; i < d; ++i) tr += (*this)(k, i * d + i);
    m = std::max(m, std::abs(tr));
  }
  return m;
}

bool Field::is_symmetric(double tol) const { return asymmetry() <= tol * std::max(max_abs(), 1e-300); }
bool Field::is_skew(double tol) const { return skew_defect() <= tol * std::max(max_abs(), 1e-300); }
bool Field::is_trace_free(double tol) const { return trace_defect() <= tol * std::max(max_abs(), 1e-300); }

Field operator+(Field a, const Field& b) { return a += b; }
Field operator-(Field a, const Field& b) { return a -= b; }
Field operator*(double s, Field a) { return a *= s; }

double inner(const Field& a, const Field& b) {
  check_same(a, b);
  double s = 0.0;
  const auto& x = a.values();
  const auto& y = b.values();
  for (std::size_t i = 0; i < x.size(); ++i) s += x[i] * y[i];
  return s * a.grid().cell_volume();
}

}  // namespace wide
