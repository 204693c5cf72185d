#pragma once

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace wbsim {

// In-place iterative radix-2 FFT; size must be a power of two.
void fft_in_place(std::vector<std::complex<double>>& a);

std::size_t next_pow2(std::size_t n);

// Real-input FFT: zero-pads x to n (power of two, >= x.size()) and returns
// the n/2+1 non-redundant bins.
std::vector<std::complex<double>> rfft(std::span<const double> x, std::size_t n);

// Periodic Hann window.
std::vector<double> hann_window(std::size_t n);

}  // namespace wbsim
