#include "nwd/conditioning.hpp"

#include <Eigen/Dense>
#include <algorithm>
#include <cmath>
#include <numbers>
#include <set>

#include "nwd/fft.hpp"

namespace nwd {

std::size_t window_samples(double window_s, double dt) {
  if (!(window_s > 0.0)) throw InvalidInput("window length must be positive");
  return std::max<std::size_t>(1, to_samples(window_s, dt));
}

WindowBounds centred_window(std::size_t i, std::size_t width, std::size_t n) noexcept {
  const std::size_t half = width / 2;
  const std::size_t first = i >= half ? i - half : 0;
  const std::size_t last = std::min(n, i + (width - half));
  return {first, last};
}

Moments population_moments(std::span<const double> values) {
  if (values.empty()) return {};
  const double n = static_cast<double>(values.size());
  double sum = 0.0;
  for (double v : values) sum += v;
  double mean = sum / n;
  // Corrected two-pass: fold the residual mean of the centred values back in.
  double resid = 0.0;
  for (double v : values) resid += v - mean;
  mean += resid / n;
  double ss = 0.0;
  for (double v : values) ss += (v - mean) * (v - mean);
  return {mean, std::sqrt(ss / n)};
}

namespace {

std::vector<double> poly_trend(const Trace& trace, int degree) {
  if (degree < 0) throw InvalidInput("polynomial degree must be non-negative");
  const auto n = static_cast<Eigen::Index>(trace.size());
  if (n <= degree) throw InvalidInput("trace shorter than polynomial degree + 1");
  // Abscissa mapped to [-1, 1] keeps the Vandermonde system well conditioned.
  Eigen::MatrixXd vander(n, degree + 1);
  Eigen::VectorXd y(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    const double x = n == 1 ? 0.0 : 2.0 * static_cast<double>(i) / static_cast<double>(n - 1) - 1.0;
    double p = 1.0;
    for (int d = 0; d <= degree; ++d) {
      vander(i, d) = p;
      p *= x;
    }
    y(i) = trace.samples[static_cast<std::size_t>(i)];
  }
  const Eigen::VectorXd coef = vander.colPivHouseholderQr().solve(y);
  const Eigen::VectorXd fit = vander * coef;
  return {fit.data(), fit.data() + n};
}

std::vector<double> moving_average(const Trace& trace, std::size_t width) {
  const std::size_t n = trace.size();
  std::vector<double> prefix(n + 1, 0.0);
  for (std::size_t i = 0; i < n; ++i) prefix[i + 1] = prefix[i] + trace.samples[i];
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = centred_window(i, width, n);
    out[i] = (prefix[hi] - prefix[lo]) / static_cast<double>(hi - lo);
  }
  // Prefix sums lose the constant exactly only up to rounding; snap windows that are all equal.
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = centred_window(i, width, n);
    const auto [mn, mx] = std::minmax_element(trace.samples.begin() + lo, trace.samples.begin() + hi);
    if (*mn == *mx) out[i] = *mn;
  }
  return out;
}

std::vector<double> moving_median(const Trace& trace, std::size_t width) {
  const std::size_t n = trace.size();
  std::vector<double> out(n);
  std::vector<double> buf;
  buf.reserve(width);
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = centred_window(i, width, n);
    buf.assign(trace.samples.begin() + lo, trace.samples.begin() + hi);
    const std::size_t m = buf.size();
    auto mid = buf.begin() + m / 2;
    std::nth_element(buf.begin(), mid, buf.end());
    if (m % 2 == 1) {
      out[i] = *mid;
    } else {
      const double upper = *mid;
      const double lower = *std::max_element(buf.begin(), mid);
      out[i] = 0.5 * (lower + upper);
    }
  }
  return out;
}

std::vector<double> histogram_mode(const Trace& trace, std::size_t width, double bin_width) {
  if (!(bin_width > 0.0)) throw InvalidInput("histogram bin width must be positive");
  const std::size_t n = trace.size();
  const double origin = *std::min_element(trace.samples.begin(), trace.samples.end());
  std::vector<std::size_t> bin(n);
  std::size_t n_bins = 0;
  for (std::size_t i = 0; i < n; ++i) {
    bin[i] = static_cast<std::size_t>(std::floor((trace.samples[i] - origin) / bin_width));
    n_bins = std::max(n_bins, bin[i] + 1);
  }

  // (count descending, bin ascending): begin() is the mode with the lowest-bin tie-break.
  std::vector<long> counts(n_bins, 0);
  std::set<std::pair<long, std::size_t>> ranked;
  auto bump = [&](std::size_t b, long delta) {
    if (counts[b] > 0) ranked.erase({-counts[b], b});
    counts[b] += delta;
    if (counts[b] > 0) ranked.insert({-counts[b], b});
  };

  std::vector<double> out(n);
  std::size_t cur_lo = 0, cur_hi = 0;
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = centred_window(i, width, n);
    while (cur_hi < hi) bump(bin[cur_hi++], +1);
    while (cur_lo < lo) bump(bin[cur_lo++], -1);
    const std::size_t mode = ranked.begin()->second;
    out[i] = origin + (static_cast<double>(mode) + 0.5) * bin_width;
  }
  // A window holding a single value has that value as its mode.
  for (std::size_t i = 0; i < n; ++i) {
    const auto [lo, hi] = centred_window(i, width, n);
    const auto [mn, mx] = std::minmax_element(trace.samples.begin() + lo, trace.samples.begin() + hi);
    if (*mn == *mx) out[i] = *mn;
  }
  return out;
}

} // namespace

DetrendResult detrend(const Trace& trace, const DetrendMethod& method) {
  validate(trace);
  std::vector<double> trend = std::visit(
      [&](const auto& m) -> std::vector<double> {
        using M = std::decay_t<decltype(m)>;
        if constexpr (std::is_same_v<M, detrend_method::GlobalPolyFit>) {
          return poly_trend(trace, m.degree);
        } else {
          const std::size_t width = window_samples(m.window_s, trace.dt);
          if (trace.size() < width) throw InvalidInput("trace shorter than detrending window");
          if constexpr (std::is_same_v<M, detrend_method::MovingAverage>) return moving_average(trace, width);
          if constexpr (std::is_same_v<M, detrend_method::MovingMedian>) return moving_median(trace, width);
          if constexpr (std::is_same_v<M, detrend_method::HistogramMode>)
            return histogram_mode(trace, width, m.bin_width);
        }
      },
      method);

  DetrendResult result{trace, std::move(trend)};
  for (std::size_t i = 0; i < trace.size(); ++i) result.detrended.samples[i] -= result.trend[i];
  return result;
}

Trace whiten(const Trace& trace) {
  validate(trace);
  if (trace.size() < 2) throw InvalidInput("whitening needs at least two samples");
  const Moments m = population_moments(trace.samples);
  if (!(m.std > 0.0)) throw NumericError("constant trace cannot be whitened");
  Trace out = trace;
  for (auto& v : out.samples) v = (v - m.mean) / m.std;
  // Division rounding leaves a residual mean of order eps; remove it.
  const Moments r = population_moments(out.samples);
  for (auto& v : out.samples) v = (v - r.mean) / r.std;
  return out;
}

Trace low_pass(const Trace& trace, double cutoff_hz) {
  validate(trace);
  const double nyquist = 0.5 / trace.dt;
  if (!(cutoff_hz > 0.0) || !(cutoff_hz < nyquist)) throw InvalidInput("cutoff must lie in (0, Nyquist)");

  const std::size_t n = trace.size();
  const std::size_t m = 2 * n;
  std::vector<Complex> ext(m);
  for (std::size_t i = 0; i < n; ++i) {
    ext[i] = trace.samples[i];
    ext[m - 1 - i] = trace.samples[i];
  }
  ext = dft(std::move(ext), false);
  const double df = 1.0 / (static_cast<double>(m) * trace.dt);
  // Flat up to half the cutoff, then a raised-cosine roll-off reaching zero at the cutoff.
  const double knee = 0.5 * cutoff_hz;
  for (std::size_t k = 1; k < m; ++k) {
    const double f = static_cast<double>(std::min(k, m - k)) * df;
    if (f >= cutoff_hz) {
      ext[k] = 0.0;
    } else if (f > knee) {
      const double c = std::cos(0.5 * std::numbers::pi * (f - knee) / (cutoff_hz - knee));
      ext[k] *= c * c;
    }
  }
  ext = dft(std::move(ext), true);

  Trace out = trace;
  for (std::size_t i = 0; i < n; ++i) out.samples[i] = ext[i].real();
  return out;
}

} // namespace nwd
