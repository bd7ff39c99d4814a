#pragma once

#include <cmath>
#include <complex>
#include <cstddef>
#include <cstdint>
#include <vector>

namespace eegml {

// Complex DFT of arbitrary length: iterative radix-2 for powers of two,
// Bluestein's chirp-z otherwise. A plan precomputes twiddles/chirps for one
// size; applying a plan is const and safe to share across threads.
class FftPlan {
 public:
  explicit FftPlan(std::size_t n) : n_(n) {
    m_ = is_pow2(n) ? n : next_pow2(2 * n - 1);
    build_pow2_tables();
    if (m_ != n_) build_chirp();
  }

  std::size_t size() const { return n_; }

  // In-place unscaled forward DFT: X[k] = sum_j x[j] e^{-2*pi*i*j*k/n}.
  void forward(std::complex<double>* x) const {
    if (m_ == n_) {
      pow2_transform(x);
      return;
    }
    // Bluestein: x[j]*chirp[j], convolve with conj chirp, multiply by chirp[k].
    std::vector<std::complex<double>> a(m_, 0.0);
    for (std::size_t j = 0; j < n_; ++j) a[j] = x[j] * chirp_[j];
    pow2_transform(a.data());
    for (std::size_t j = 0; j < m_; ++j) a[j] *= chirp_fft_[j];
    pow2_inverse(a.data());
    for (std::size_t k = 0; k < n_; ++k) x[k] = a[k] * chirp_[k];
  }

  // In-place inverse DFT, scaled by 1/n.
  void inverse(std::complex<double>* x) const {
    for (std::size_t j = 0; j < n_; ++j) x[j] = std::conj(x[j]);
    forward(x);
    const double inv = 1.0 / static_cast<double>(n_);
    for (std::size_t j = 0; j < n_; ++j) x[j] = std::conj(x[j]) * inv;
  }

 private:
  static bool is_pow2(std::size_t n) { return n != 0 && (n & (n - 1)) == 0; }

  static std::size_t next_pow2(std::size_t n) {
    std::size_t m = 1;
    while (m < n) m <<= 1;
    return m;
  }

  void build_pow2_tables() {
    tw_.resize(m_ / 2);
    const double step = -6.283185307179586476925286766559 / static_cast<double>(m_);
    for (std::size_t j = 0; j < m_ / 2; ++j)
      tw_[j] = std::complex<double>(std::cos(step * static_cast<double>(j)),
                                    std::sin(step * static_cast<double>(j)));
    rev_.resize(m_);
    std::size_t bits = 0;
    while ((std::size_t{1} << bits) < m_) ++bits;
    for (std::size_t i = 0; i < m_; ++i) {
      std::size_t r = 0;
      for (std::size_t b = 0; b < bits; ++b)
        if (i & (std::size_t{1} << b)) r |= std::size_t{1} << (bits - 1 - b);
      rev_[i] = r;
    }
  }

  void build_chirp() {
    // chirp[k] = e^{-i*pi*k^2/n}; k^2 reduced mod 2n in exact integer
    // arithmetic so the angle stays small for large sizes.
    chirp_.resize(n_);
    const std::uint64_t two_n = 2 * static_cast<std::uint64_t>(n_);
    for (std::size_t k = 0; k < n_; ++k) {
      const std::uint64_t q = (static_cast<std::uint64_t>(k) * k) % two_n;
      const double ang = -3.1415926535897932384626433832795 * static_cast<double>(q) /
                         static_cast<double>(n_);
      chirp_[k] = std::complex<double>(std::cos(ang), std::sin(ang));
    }
    chirp_fft_.assign(m_, 0.0);
    chirp_fft_[0] = std::conj(chirp_[0]);
    for (std::size_t j = 1; j < n_; ++j) {
      chirp_fft_[j] = std::conj(chirp_[j]);
      chirp_fft_[m_ - j] = std::conj(chirp_[j]);
    }
    pow2_transform(chirp_fft_.data());
  }

  void pow2_transform(std::complex<double>* x) const {
    for (std::size_t i = 0; i < m_; ++i) {
      const std::size_t r = rev_[i];
      if (i < r) std::swap(x[i], x[r]);
    }
    for (std::size_t len = 2; len <= m_; len <<= 1) {
      const std::size_t half = len >> 1;
      const std::size_t stride = m_ / len;
      for (std::size_t start = 0; start < m_; start += len) {
        for (std::size_t j = 0; j < half; ++j) {
          const std::complex<double> w = tw_[j * stride];
          const std::complex<double> u = x[start + j];
          const std::complex<double> v = x[start + j + half] * w;
          x[start + j] = u + v;
          x[start + j + half] = u - v;
        }
      }
    }
  }

  void pow2_inverse(std::complex<double>* x) const {
    for (std::size_t j = 0; j < m_; ++j) x[j] = std::conj(x[j]);
    pow2_transform(x);
    const double inv = 1.0 / static_cast<double>(m_);
    for (std::size_t j = 0; j < m_; ++j) x[j] = std::conj(x[j]) * inv;
  }

  std::size_t n_;
  std::size_t m_;
  std::vector<std::complex<double>> tw_;
  std::vector<std::size_t> rev_;
  std::vector<std::complex<double>> chirp_;
  std::vector<std::complex<double>> chirp_fft_;
};

// One-sided spectrum of a real signal. Each channel is transformed on its
// own so channels stay numerically independent (scaling one channel cannot
// perturb another's coefficients).
inline void real_spectrum(const FftPlan& plan, const double* x, std::complex<double>* out,
                          std::vector<std::complex<double>>& scratch) {
  const std::size_t n = plan.size();
  scratch.resize(n);
  for (std::size_t j = 0; j < n; ++j) scratch[j] = std::complex<double>(x[j], 0.0);
  plan.forward(scratch.data());
  const std::size_t bins = n / 2 + 1;
  for (std::size_t k = 0; k < bins; ++k) out[k] = scratch[k];
}

}  // namespace eegml
