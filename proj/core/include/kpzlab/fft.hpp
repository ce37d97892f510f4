#pragma once

#include <complex>
#include <cstddef>
#include <span>

namespace kpzlab {

using cplx = std::complex<double>;

// Real 1D transform of fixed size n with the Fourier-series normalization
// f_hat(k) = (1/n) sum_j f_j e^{-2 pi i k j / n}, k = 0..n/2.
class RealFft {
 public:
  explicit RealFft(std::size_t n);
  ~RealFft();
  RealFft(const RealFft&) = delete;
  RealFft& operator=(const RealFft&) = delete;

  std::size_t size() const { return n_; }
  std::size_t modes() const { return n_ / 2 + 1; }

  void forward(const double* in, cplx* out);
  // Inverse of forward: f_j = sum_k f_hat(k) e^{2 pi i k j / n} over the full spectrum.
  void inverse(const cplx* in, double* out);

 private:
  std::size_t n_;
  double* real_;
  void* spec_;
  void* fwd_;
  void* inv_;
};

// Fold the coefficients c_0..c_K of a real trigonometric polynomial (c_{-k} = conj c_k)
// into the n/2 + 1 bins read by RealFft::inverse.  Nodal values are exact under folding.
void fold_modes(std::span<const cplx> coeffs, std::size_t n, std::span<cplx> bins);

}  // namespace kpzlab
