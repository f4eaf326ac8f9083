#include "nwd/fft.hpp"

#include <cmath>
#include <numbers>
#include <utility>

#include "nwd/trace.hpp"

namespace nwd {

std::size_t next_power_of_two(std::size_t n) noexcept {
  std::size_t p = 1;
  while (p < n) p <<= 1;
  return p;
}

void fft_radix2(std::vector<Complex>& data, bool inverse) {
  const std::size_t n = data.size();
  if (!is_power_of_two(n)) throw InvalidInput("transform length must be a power of two");

  for (std::size_t i = 1, j = 0; i < n; ++i) {
    std::size_t bit = n >> 1;
    for (; j & bit; bit >>= 1) j ^= bit;
    j ^= bit;
    if (i < j) std::swap(data[i], data[j]);
  }

  const double sign = inverse ? 1.0 : -1.0;
  for (std::size_t len = 2; len <= n; len <<= 1) {
    const double angle = sign * 2.0 * std::numbers::pi / static_cast<double>(len);
    const std::size_t half = len / 2;
    // Twiddles computed directly rather than by recurrence to keep rounding error at O(eps log n).
    std::vector<Complex> w(half);
    for (std::size_t k = 0; k < half; ++k) w[k] = std::polar(1.0, angle * static_cast<double>(k));
    for (std::size_t i = 0; i < n; i += len) {
      for (std::size_t k = 0; k < half; ++k) {
        const Complex u = data[i + k];
        const Complex v = data[i + k + half] * w[k];
        data[i + k] = u + v;
        data[i + k + half] = u - v;
      }
    }
  }

  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
}

std::vector<Complex> dft(std::vector<Complex> data, bool inverse) {
  const std::size_t n = data.size();
  if (n == 0) return data;
  if (is_power_of_two(n)) {
    fft_radix2(data, inverse);
    return data;
  }

  // Bluestein: x_k * chirp_k convolved with conj(chirp) on a power-of-two grid.
  const double sign = inverse ? 1.0 : -1.0;
  std::vector<Complex> chirp(n);
  for (std::size_t k = 0; k < n; ++k) {
    // k^2 mod 2n keeps the angle argument small for long inputs.
    const auto k2 = static_cast<double>((static_cast<unsigned long long>(k) * k) % (2ULL * n));
    chirp[k] = std::polar(1.0, sign * std::numbers::pi * k2 / static_cast<double>(n));
  }

  const std::size_t m = next_power_of_two(2 * n - 1);
  std::vector<Complex> a(m), b(m);
  for (std::size_t k = 0; k < n; ++k) a[k] = data[k] * chirp[k];
  b[0] = std::conj(chirp[0]);
  for (std::size_t k = 1; k < n; ++k) b[k] = b[m - k] = std::conj(chirp[k]);

  fft_radix2(a, false);
  fft_radix2(b, false);
  for (std::size_t k = 0; k < m; ++k) a[k] *= b[k];
  fft_radix2(a, true);

  for (std::size_t k = 0; k < n; ++k) data[k] = a[k] * chirp[k];
  if (inverse) {
    const double scale = 1.0 / static_cast<double>(n);
    for (auto& x : data) x *= scale;
  }
  return data;
}

} // namespace nwd
