#pragma once

#include <complex>
#include <vector>

#include "wide/field.hpp"

namespace wide {

using cplx = std::complex<double>;

/// FFT plans and wavenumber tables for one grid. Obtain through get();
/// instances are shared and safe for concurrent use.
class Spectral {
 public:
  static const Spectral& get(const TorusGrid& g);
  ~Spectral();
  Spectral(const Spectral&) = delete;
  Spectral& operator=(const Spectral&) = delete;

  const TorusGrid& grid() const { return grid_; }
  std::size_t size() const { return size_; }

  // Strided real input (stride in doubles) to full complex spectrum.
  void forward(const double* in, int stride, cplx* out) const;
  // Complex spectrum to strided real output, normalised so that
  // inverse(forward(f)) == f.
  void inverse(const cplx* in, double* out, int stride) const;

  // Wavenumber used by derivatives; zero on the Nyquist index.
  double kd(std::size_t mode, int axis) const { return kd_[mode * grid_.d + axis]; }
  double k2(std::size_t mode) const { return k2_[mode]; }
  // Integer wavenumber in [-n/2, n/2).
  int kint(std::size_t mode, int axis) const;
  // 2/3-rule mask: every |k_a| <= n/3 and no Nyquist component.
  bool keep(std::size_t mode) const { return keep_[mode] != 0; }

 private:
  explicit Spectral(const TorusGrid& g);
  TorusGrid grid_;
  std::size_t size_;
  std::vector<double> kd_;
  std::vector<double> k2_;
  std::vector<char> keep_;
  void* plan_fwd_ = nullptr;
  void* plan_inv_ = nullptr;
};

// Component-major spectra of every component of f: out[c * N + mode].
std::vector<cplx> spectra(const Field& f);
// Writes component c of f from a spectrum.
void from_spectrum(const cplx* spec, Field& f, int c);

}  // namespace wide
