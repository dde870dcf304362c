#pragma once

#include <complex>
#include <span>
#include <vector>

namespace pulse::detail {

// Forward real-to-complex DFT; returns the n/2 + 1 non-negative frequency bins.
std::vector<std::complex<double>> rfft(std::span<const double> x);

// Unnormalized inverse complex DFT, in place.
void inverse_fft(std::span<std::complex<double>> data);

}  // namespace pulse::detail
