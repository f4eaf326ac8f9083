// Noise-only residuals, lagged cross-correlation between wires and ensemble noise subtraction.
#pragma once

#include <span>
#include <vector>

#include "nwd/conditioning.hpp"
#include "nwd/trace.hpp"

namespace nwd {

/// detrend, then subtract the low-passed signal estimate from the detrended trace.
Trace noise_only(const Trace& trace, const DetrendMethod& method, double lp_cutoff_hz);

struct XcorrResult {
  std::vector<int> lags;
  std::vector<double> values;
  int peak_lag = 0;
  double peak_value = 0.0; // signed value at the largest |value|
};

/// values[L] = Pearson correlation of a[i] with b[i + L] over the overlapping samples, for
/// L in [-max_lag, max_lag]. A positive peak lag means b trails a. Overlaps with zero variance
/// contribute 0.
XcorrResult xcorr(const Trace& a, const Trace& b, int max_lag);

/// Subtracts the mean of the lag-aligned references, reference r contributing refs[r][i + lags[r]]
/// (zero outside the reference). An empty reference list returns the target.
Trace ensemble_subtract(const Trace& target, std::span<const Trace> references, std::span<const int> lags);

} // namespace nwd
