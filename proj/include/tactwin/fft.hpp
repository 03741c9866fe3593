#pragma once

// Real-input FFT helpers backed by FFTW.

#include <complex>
#include <cstddef>
#include <span>
#include <vector>

namespace tactwin::fft {

/// n/2+1 bins, unnormalized.
std::vector<std::complex<double>> forward(std::span<const double> x);

/// Inverse of forward() including the 1/n factor.
std::vector<double> inverse(std::span<const std::complex<double>> bins, std::size_t n);

/// Index of the largest |bin| in [lo, hi], DC excluded unless lo == 0.
std::size_t peakBin(std::span<const std::complex<double>> bins, std::size_t lo, std::size_t hi);

}  // namespace tactwin::fft
