// Discrete Fourier transforms: in-place radix-2 for power-of-two lengths, Bluestein otherwise.
#pragma once

#include <complex>
#include <cstddef>
#include <vector>

namespace nwd {

using Complex = std::complex<double>;

constexpr bool is_power_of_two(std::size_t n) noexcept { return n != 0 && (n & (n - 1)) == 0; }

/// Smallest power of two >= n.
std::size_t next_power_of_two(std::size_t n) noexcept;

/// Unnormalized forward transform (exp(-2*pi*i*j*k/n)); the inverse divides by n.
/// Throws InvalidInput when the length is not a power of two.
void fft_radix2(std::vector<Complex>& data, bool inverse);

/// Transform of any length. Power-of-two lengths take the radix-2 path.
std::vector<Complex> dft(std::vector<Complex> data, bool inverse);

} // namespace nwd
