#include "kpzlab/fft.hpp"

#include <fftw3.h>

#include <mutex>

#include "kpzlab/error.hpp"

namespace kpzlab {

namespace {
// FFTW planning is not thread safe.
std::mutex& planner_mutex() {
  static std::mutex m;
  return m;
}
}  // namespace

RealFft::RealFft(std::size_t n) : n_(n) {
  if (n < 2 || n % 2 != 0) throw LabError(ErrorKind::InvalidArgument, "FFT size must be even and >= 2");
  std::lock_guard<std::mutex> lock(planner_mutex());
  real_ = fftw_alloc_real(n);
  auto* spec = fftw_alloc_complex(n / 2 + 1);
  spec_ = spec;
  fwd_ = fftw_plan_dft_r2c_1d(static_cast<int>(n), real_, spec, FFTW_ESTIMATE);
  inv_ = fftw_plan_dft_c2r_1d(static_cast<int>(n), spec, real_, FFTW_ESTIMATE);
}

RealFft::~RealFft() {
  std::lock_guard<std::mutex> lock(planner_mutex());
  fftw_destroy_plan(static_cast<fftw_plan>(fwd_));
  fftw_destroy_plan(static_cast<fftw_plan>(inv_));
  fftw_free(real_);
  fftw_free(spec_);
}

void RealFft::forward(const double* in, cplx* out) {
  for (std::size_t j = 0; j < n_; ++j) real_[j] = in[j];
  fftw_execute(static_cast<fftw_plan>(fwd_));
  auto* spec = static_cast<fftw_complex*>(spec_);
  const double s = 1.0 / static_cast<double>(n_);
  for (std::size_t k = 0; k <= n_ / 2; ++k) out[k] = cplx(spec[k][0] * s, spec[k][1] * s);
}

void RealFft::inverse(const cplx* in, double* out) {
  auto* spec = static_cast<fftw_complex*>(spec_);
  for (std::size_t k = 0; k <= n_ / 2; ++k) {
    spec[k][0] = in[k].real();
    spec[k][1] = in[k].imag();
  }
  fftw_execute(static_cast<fftw_plan>(inv_));
  for (std::size_t j = 0; j < n_; ++j) out[j] = real_[j];
}

void fold_modes(std::span<const cplx> coeffs, std::size_t n, std::span<cplx> bins) {
  if (bins.size() != n / 2 + 1) throw LabError(ErrorKind::GridMismatch, "fold_modes: bin count must be n/2 + 1");
  for (auto& b : bins) b = cplx(0.0);
  if (coeffs.empty()) return;
  bins[0] += coeffs[0];
  for (std::size_t k = 1; k < coeffs.size(); ++k) {
    const std::size_t b = k % n;
    const std::size_t c = (n - b) % n;
    if (b <= n / 2) bins[b] += coeffs[k];
    if (c <= n / 2) bins[c] += std::conj(coeffs[k]);
  }
}

}  // namespace kpzlab
