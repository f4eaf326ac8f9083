// Detrending, whitening and low-pass filtering of conductance traces.
#pragma once

#include <span>
#include <variant>
#include <vector>

#include "nwd/trace.hpp"

namespace nwd {

namespace detrend_method {
/// Least-squares polynomial over the whole trace.
struct GlobalPolyFit {
  int degree = 2;
};
struct MovingAverage {
  double window_s = 200.0;
};
struct MovingMedian {
  double window_s = 200.0;
};
/// Local mean taken as the centre of the most populated conductance bin in each window.
/// Bins are anchored at the global minimum of the trace; ties go to the lowest bin.
struct HistogramMode {
  double window_s = 200.0;
  double bin_width = 2.0; // nS
};
} // namespace detrend_method

using DetrendMethod = std::variant<detrend_method::GlobalPolyFit, detrend_method::MovingAverage,
                                   detrend_method::MovingMedian, detrend_method::HistogramMode>;

struct DetrendResult {
  Trace detrended;
  std::vector<double> trend; // aligned 1:1 with the input samples
};

/// detrended[i] = trace[i] - trend[i]. Windowed methods centre the window on each sample and
/// truncate it at the trace ends.
DetrendResult detrend(const Trace& trace, const DetrendMethod& method);

/// Window length in samples, at least one.
std::size_t window_samples(double window_s, double dt);

/// Half-open [first, last) window of length `width` centred on `i`, clipped to [0, n).
struct WindowBounds {
  std::size_t first;
  std::size_t last;
};
WindowBounds centred_window(std::size_t i, std::size_t width, std::size_t n) noexcept;

/// Population (divide by N) mean and standard deviation.
struct Moments {
  double mean = 0.0;
  double std = 0.0;
};
Moments population_moments(std::span<const double> values);

/// Subtract the mean and divide by the population standard deviation.
/// Throws NumericError("constant trace cannot be whitened") on zero variance.
Trace whiten(const Trace& trace);

/// Frequency-domain low-pass: unit gain up to cutoff_hz / 2, a raised-cosine roll-off above it
/// and nothing at or beyond `cutoff_hz`.
/// The trace is mirror-extended before transforming so the ends do not wrap into each other.
/// DC gain is exactly one.
Trace low_pass(const Trace& trace, double cutoff_hz);

} // namespace nwd
