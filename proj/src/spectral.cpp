#include "wide/spectral.hpp"

#include <fftw3.h>

#include <map>
#include <memory>
#include <mutex>

namespace wide {

namespace {
std::mutex g_plan_mutex;
std::map<std::pair<int, int>, std::unique_ptr<Spectral>> g_cache;

std::vector<cplx>& scratch(std::size_t n) {
  thread_local std::vector<cplx> buf;
  if (buf.size() < n) buf.resize(n);
  return buf;
}
}  // namespace

const Spectral& Spectral::get(const TorusGrid& g) {
  std::lock_guard<std::mutex> lock(g_plan_mutex);
  auto key = std::make_pair(g.d, g.n);
  auto it = g_cache.find(key);
  if (it == g_cache.end()) it = g_cache.emplace(key, std::unique_ptr<Spectral>(new Spectral(g))).first;
  return *it->second;
}

Spectral::Spectral(const TorusGrid& g) : grid_(g), size_(g.size()) {
  const int d = g.d, n = g.n;
  kd_.assign(size_ * d, 0.0);
  k2_.assign(size_, 0.0);
  keep_.assign(size_, 1);
  const int kmax = n / 3;
  for (std::size_t m = 0; m < size_; ++m) {
    auto idx = g.multi_index(m);
    double s = 0.0;
    for (int a = 0; a < d; ++a) {
      int k = idx[a] < n / 2 ? idx[a] : idx[a] - n;
      double kk = (idx[a] == n / 2) ? 0.0 : static_cast<double>(k);
      kd_[m * d + a] = kk;
      s += kk * kk;
      if (idx[a] == n / 2 || std::abs(k) > kmax) keep_[m] = 0;
    }
    k2_[m] = s;
  }
  std::vector<int> dims(d, n);
  auto* a = fftw_alloc_complex(size_);
  auto* b = fftw_alloc_complex(size_);
  const unsigned flags = FFTW_ESTIMATE | FFTW_UNALIGNED;
  plan_fwd_ = fftw_plan_dft(d, dims.data(), a, b, FFTW_FORWARD, flags);
  plan_inv_ = fftw_plan_dft(d, dims.data(), a, b, FFTW_BACKWARD, flags);
  fftw_free(a);
  fftw_free(b);
}

Spectral::~Spectral() {
  fftw_destroy_plan(static_cast<fftw_plan>(plan_fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(plan_inv_));
}

int Spectral::kint(std::size_t mode, int axis) const {
  const int n = grid_.n;
  int i = grid_.multi_index(mode)[axis];
  return i < n / 2 ? i : i - n;
}

void Spectral::forward(const double* in, int stride, cplx* out) const {
  auto& buf = scratch(size_);
  for (std::size_t i = 0; i < size_; ++i) buf[i] = cplx(in[i * stride], 0.0);
  fftw_execute_dft(static_cast<fftw_plan>(plan_fwd_), reinterpret_cast<fftw_complex*>(buf.data()),
                   reinterpret_cast<fftw_complex*>(out));
}

void Spectral::inverse(const cplx* in, double* out, int stride) const {
  auto& buf = scratch(2 * size_);
  cplx* src = buf.data();
  cplx* dst = buf.data() + size_;
  for (std::size_t i = 0; i < size_; ++i) src[i] = in[i];
  fftw_execute_dft(static_cast<fftw_plan>(plan_inv_), reinterpret_cast<fftw_complex*>(src),
                   reinterpret_cast<fftw_complex*>(dst));
  const double s = 1.0 / static_cast<double>(size_);
  for (std::size_t i = 0; i < size_; ++i) out[i * stride] = dst[i].real() * s;
}

std::vector<cplx> spectra(const Field& f) {
  const auto& sp = Spectral::get(f.grid());
  const std::size_t N = sp.size();
  std::vector<cplx> out(N * f.ncomp());
  for (int c = 0; c < f.ncomp(); ++c) sp.forward(f.data() + c, f.ncomp(), out.data() + c * N);
  return out;
}

void from_spectrum(const cplx* spec, Field& f, int c) {
  Spectral::get(f.grid()).inverse(spec, f.data() + c, f.ncomp());
}

}  // namespace wide
