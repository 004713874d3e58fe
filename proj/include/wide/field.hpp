#pragma once

#include <array>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace wide {

/// Uniform grid on the torus [0, 2*pi)^d.
struct TorusGrid {
  int d = 2;
  int n = 8;

  TorusGrid() = default;
  TorusGrid(int d, int n);

  std::size_t size() const;
  double h() const;
  double cell_volume() const;
  double volume() const;
  double coord(int i) const;
  // Row-major multi-index; axis 0 varies slowest.
  std::array<int, 3> multi_index(std::size_t node) const;
  std::size_t node(const std::array<int, 3>& idx) const;

  bool operator==(const TorusGrid& o) const { return d == o.d && n == o.n; }
  bool operator!=(const TorusGrid& o) const { return !(*this == o); }
};

/// Sampled field with ncomp real components per node, components fastest.
/// Rank 0/1/2 means scalar, vector, d x d tensor (entry (i,j) at i*d+j).
class Field {
 public:
  Field() = default;
  Field(const TorusGrid& g, int ncomp);

  static Field scalar(const TorusGrid& g) { return Field(g, 1); }
  static Field vector(const TorusGrid& g) { return Field(g, g.d); }
  static Field tensor(const TorusGrid& g) { return Field(g, g.d * g.d); }

  const TorusGrid& grid() const { return grid_; }
  int ncomp() const { return ncomp_; }
  // -1 when ncomp does not match a scalar/vector/tensor layout.
  int rank() const;
  std::size_t nodes() const { return grid_.size(); }

  double& operator()(std::size_t node, int c) { return v_[node * ncomp_ + c]; }
  double operator()(std::size_t node, int c) const { return v_[node * ncomp_ + c]; }
  double* data() { return v_.data(); }
  const double* data() const { return v_.data(); }
  std::vector<double>& values() { return v_; }
  const std::vector<double>& values() const { return v_; }

  Field& operator+=(const Field& o);
  Field& operator-=(const Field& o);
  Field& operator*=(double a);
  void axpy(double a, const Field& x);
  void fill(double a);

  bool finite() const;
  double max_abs() const;
  // Euclidean norm of the components at one node.
  double magnitude(std::size_t node) const;
  std::vector<double> mean() const;

  // Tensor structure checks, tolerance relative to max_abs().
  double asymmetry() const;
  double skew_defect() const;
  double trace_defect() const;
  bool is_symmetric(double tol = 1e-12) const;
  bool is_skew(double tol = 1e-12) const;
  bool is_trace_free(double tol = 1e-12) const;

 private:
  TorusGrid grid_;
  int ncomp_ = 0;
  std::vector<double> v_;
};

Field operator+(Field a, const Field& b);
Field operator-(Field a, const Field& b);
Field operator*(double s, Field a);

// Quadrature inner product: h^d * sum over nodes and components.
double inner(const Field& a, const Field& b);

}  // namespace wide
