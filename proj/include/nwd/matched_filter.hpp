// Boxcar matched filtering in transform space and peak-based event extraction.
#pragma once

#include <span>
#include <vector>

#include "nwd/trace.hpp"

namespace nwd {

struct BoxcarFilterSpec {
  double amplitude = -20.0; // nS
  int width_samples = 20;
  std::size_t n = 1024;     // transform length, power of two
};

/// Zero-phase ("unwrapped") boxcar: the first ceil(w/2) and the last floor(w/2) entries hold
/// amplitude / data_std, everything else is zero.
std::vector<double> build_boxcar_filter(const BoxcarFilterSpec& spec, double data_std);

/// Circular cross-correlation out[j] = sum_i data[(i + j) mod n] * kernel[i], computed as
/// IFFT(FFT(data) * conj(FFT(kernel))). A unit impulse at 0 returns the kernel reversed,
/// out[j] = kernel[(n - j) mod n]. With the zero-phase boxcar, out[j] sums the data over
/// [j - floor(w/2), j + ceil(w/2)).
std::vector<double> fft_convolve(std::span<const double> data, std::span<const double> kernel);

struct Peak {
  std::size_t index = 0;
  double score = 0.0;
};

struct FilterOutput {
  std::vector<double> scores; // divided by their own population standard deviation
  std::vector<Peak> peaks;    // filled by detect_peaks
  int width = 0;
  double dt = 1.0;
  double t0 = 0.0;
  bool circular = true;       // neighbours and separations wrap around
};

/// Filters one window of already-whitened data (length spec.n) and normalizes the output.
FilterOutput filter_window(std::span<const double> whitened, const BoxcarFilterSpec& spec, double data_std);

/// Whitens the trace and filters it. Traces longer than spec.n are processed in 50%-overlapping
/// windows; each sample takes its score from the window whose centre is nearest. Shorter traces
/// are zero-padded.
FilterOutput matched_filter(const Trace& trace, const BoxcarFilterSpec& spec);

/// Local maxima above threshold_sigma, strongest first, dropping any maximum closer than
/// min_separation samples to an accepted one. Events start at peak - floor(width/2) and span
/// `width` samples. Also records the accepted peaks in output.peaks.
std::vector<DetectionEvent> detect_peaks(FilterOutput& output, double threshold_sigma, std::size_t min_separation);

/// Runs one filter per width and unions the detections, each tagged with its width.
/// min_separation == 0 means "use the filter width".
std::vector<DetectionEvent> matched_filter_bank(const Trace& trace, std::span<const int> widths, double amplitude,
                                                std::size_t n, double threshold_sigma,
                                                std::size_t min_separation = 0);

} // namespace nwd
