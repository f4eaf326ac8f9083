#include <doctest.h>

#include <algorithm>
#include <cmath>
#include <map>
#include <numbers>

#include "nwd/conditioning.hpp"
#include "support.hpp"

using namespace nwd;
using testing::binding;

namespace {

// Direct per-window counting, independent of the sliding implementation.
std::vector<double> brute_force_mode(const std::vector<double>& x, std::size_t width, double bw) {
  const double origin = *std::min_element(x.begin(), x.end());
  const std::size_t n = x.size();
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    const long lo = std::max<long>(0, static_cast<long>(i) - static_cast<long>(width / 2));
    const long hi = std::min<long>(static_cast<long>(n), static_cast<long>(i) + static_cast<long>(width - width / 2));
    std::map<long, int> counts;
    bool all_equal = true;
    for (long j = lo; j < hi; ++j) {
      counts[static_cast<long>(std::floor((x[j] - origin) / bw))]++;
      all_equal = all_equal && x[j] == x[lo];
    }
    long best = 0;
    int best_count = -1;
    for (const auto& [b, c] : counts)
      if (c > best_count) best = b, best_count = c;
    out[i] = all_equal ? x[lo] : origin + (static_cast<double>(best) + 0.5) * bw;
  }
  return out;
}

const std::vector<DetrendMethod>& all_methods() {
  static const std::vector<DetrendMethod> methods{detrend_method::GlobalPolyFit{2}, detrend_method::MovingAverage{50},
                                                  detrend_method::MovingMedian{50},
                                                  detrend_method::HistogramMode{50, 2.0}};
  return methods;
}

Trace ramp_with_binding(std::uint64_t seed) {
  NoiseSpec noise;
  noise.white_sigma = 0.5;
  noise.trend = trend::Linear{0.01};
  noise.seed = seed;
  return synthesize_trace({binding(488, 24, -20)}, noise, 1000, 1.0);
}

} // namespace

TEST_CASE("constant trace detrends to zero under every method") {
  const Trace c = testing::make_trace(std::vector<double>(300, 7.25));
  for (const auto& m : all_methods()) {
    const auto r = detrend(c, m);
    for (std::size_t i = 0; i < c.size(); ++i) {
      CHECK(r.trend[i] == doctest::Approx(7.25).epsilon(1e-12));
      CHECK(std::abs(r.detrended.samples[i]) < 1e-9);
    }
  }
}

TEST_CASE("histogram mode follows the ramp under a short binding") {
  const Trace t = ramp_with_binding(3);
  const auto r = detrend(t, detrend_method::HistogramMode{200, 2.0});
  for (std::size_t i = 480; i < 520; ++i) CHECK(std::abs(r.trend[i] - 0.01 * static_cast<double>(i)) < 2.0);
  CHECK(r.detrended.samples[500] < -15.0);
}

TEST_CASE("sliding histogram mode equals direct per-window counting") {
  const Trace t = ramp_with_binding(8);
  const auto r = detrend(t, detrend_method::HistogramMode{200, 2.0});
  CHECK(r.trend == brute_force_mode(t.samples, 200, 2.0));
  const Trace short_window = ramp_with_binding(9);
  CHECK(detrend(short_window, detrend_method::HistogramMode{37, 0.75}).trend ==
        brute_force_mode(short_window.samples, 37, 0.75));
}

TEST_CASE("mode ties go to the lowest bin") {
  const Trace t = testing::make_trace({0.0, 0.1, 5.0, 5.1});
  const auto r = detrend(t, detrend_method::HistogramMode{4, 1.0});
  CHECK(r.trend[1] == doctest::Approx(0.5));
}

TEST_CASE("windowed methods reject traces shorter than the window") {
  const Trace t = testing::make_trace(std::vector<double>(50, 1.0));
  CHECK_THROWS_AS(detrend(t, detrend_method::MovingMedian{200}), InvalidInput);
  CHECK_THROWS_AS(detrend(t, detrend_method::HistogramMode{200, 2.0}), InvalidInput);
  CHECK_NOTHROW(detrend(t, detrend_method::GlobalPolyFit{2}));
}

TEST_CASE("global polynomial removes an exact quadratic") {
  std::vector<double> x(400);
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double s = static_cast<double>(i);
    x[i] = 3.0 - 0.02 * s + 1e-4 * s * s;
  }
  const auto r = detrend(testing::make_trace(x), detrend_method::GlobalPolyFit{2});
  for (double v : r.detrended.samples) CHECK(std::abs(v) < 1e-8);
}

TEST_CASE("moving median reproduces a step without overshoot") {
  std::vector<double> x(200, 0.0);
  std::fill(x.begin() + 100, x.end(), 4.0);
  const auto r = detrend(testing::make_trace(x), detrend_method::MovingMedian{21});
  CHECK(r.trend == x);
}

TEST_CASE("whitening by hand") {
  const Trace w = whiten(testing::make_trace({1.0, 3.0}));
  CHECK(w.samples == std::vector<double>{-1.0, 1.0});
}

TEST_CASE("whitening a random trace gives zero mean and unit population spread") {
  const Trace w = whiten(testing::make_trace(testing::gaussian(1024, 4.0, 21)));
  double m = 0.0, ss = 0.0;
  for (double v : w.samples) m += v;
  m /= 1024.0;
  for (double v : w.samples) ss += (v - m) * (v - m);
  CHECK(std::abs(m) < 1e-12);
  CHECK(std::abs(std::sqrt(ss / 1024.0) - 1.0) < 1e-12);
}

TEST_CASE("whitening normalized input leaves it unchanged") {
  const Trace once = whiten(testing::make_trace(testing::gaussian(500, 2.0, 2)));
  const Trace twice = whiten(once);
  for (std::size_t i = 0; i < once.size(); ++i) CHECK(std::abs(once.samples[i] - twice.samples[i]) < 1e-12);
}

TEST_CASE("constant trace cannot be whitened") {
  const Trace c = testing::make_trace(std::vector<double>(10, 2.0));
  CHECK_THROWS_WITH_AS(whiten(c), "constant trace cannot be whitened", NumericError);
}

TEST_CASE("population moments") {
  const std::vector<double> v{2, 4, 4, 4, 5, 5, 7, 9};
  const Moments m = population_moments(v);
  CHECK(m.mean == 5.0);
  CHECK(m.std == 2.0);
}

TEST_CASE("low-pass keeps DC") {
  const Trace c = testing::make_trace(std::vector<double>(333, -4.5));
  const Trace out = low_pass(c, 0.05);
  for (double v : out.samples) CHECK(v == doctest::Approx(-4.5).epsilon(1e-12));
}

TEST_CASE("low-pass flattens a spike but keeps a long boxcar") {
  std::vector<double> x(1000, 0.0);
  x[200] = 10.0;
  for (std::size_t i = 600; i < 630; ++i) x[i] = -20.0;
  const Trace out = low_pass(testing::make_trace(x), 0.05);
  CHECK(std::abs(out.samples[200]) <= 10.0 / 10.0);
  CHECK(out.samples[615] <= -0.8 * 20.0);
}

TEST_CASE("low-pass separates two tones") {
  const std::size_t n = 1000;
  std::vector<double> low(n), mix(n);
  for (std::size_t i = 0; i < n; ++i) {
    const double t = static_cast<double>(i);
    low[i] = std::sin(2.0 * std::numbers::pi * 0.01 * t);
    mix[i] = low[i] + 0.8 * std::sin(2.0 * std::numbers::pi * 0.2 * t);
  }
  const Trace out = low_pass(testing::make_trace(mix), 0.05);
  const double ml = testing::mean(low), mo = testing::mean(out.samples);
  double sxy = 0.0, sxx = 0.0, syy = 0.0;
  for (std::size_t i = 0; i < n; ++i) {
    sxy += (low[i] - ml) * (out.samples[i] - mo);
    sxx += (low[i] - ml) * (low[i] - ml);
    syy += (out.samples[i] - mo) * (out.samples[i] - mo);
  }
  CHECK(sxy / std::sqrt(sxx * syy) >= 0.99);
}

TEST_CASE("low-pass cutoff must sit below Nyquist") {
  const Trace t = testing::make_trace(testing::gaussian(64, 1.0, 1), 0.5);
  CHECK_THROWS_AS(low_pass(t, 0.0), InvalidInput);
  CHECK_THROWS_AS(low_pass(t, 1.0), InvalidInput);
  CHECK_NOTHROW(low_pass(t, 0.99));
}

TEST_CASE("centred window bounds") {
  CHECK(centred_window(0, 5, 10).first == 0);
  CHECK(centred_window(0, 5, 10).last == 3);
  CHECK(centred_window(5, 5, 10).first == 3);
  CHECK(centred_window(5, 5, 10).last == 8);
  CHECK(centred_window(9, 4, 10).last == 10);
  CHECK(window_samples(200, 0.5) == 400);
}
