// Low-pass + threshold detection with fixed, calibrated and adaptive per-wire thresholds.
#pragma once

#include <variant>
#include <vector>

#include "nwd/trace.hpp"

namespace nwd {

namespace threshold_rule {
/// Absolute level in nS relative to zero; the sign follows the policy polarity.
struct Fixed {
  double level = 15.0;
};
/// mean -/+ k * sigma measured on an event-free calibration range [first, last) of samples.
struct Calibrated {
  double k_sigma = 5.0;
  std::size_t first = 0;
  std::size_t last = 0;
};
/// Rolling median -/+ k * (1.4826 * MAD) over a centred window.
struct Adaptive {
  double k_sigma = 5.0;
  double window_s = 300.0;
};
} // namespace threshold_rule

enum class Polarity { Negative, Positive };

struct ThresholdPolicy {
  std::variant<threshold_rule::Fixed, threshold_rule::Calibrated, threshold_rule::Adaptive> rule;
  Polarity polarity = Polarity::Negative;
};

struct ThresholdOptions {
  /// An open event closes once the signal comes back within this fraction of the threshold
  /// distance from the reference level.
  double hysteresis = 0.5;
  double min_duration_s = 5.0;
};

struct NoiseLevel {
  double sigma = 0.0;
  double mean = 0.0;
};

/// Population std and mean of samples [first, last) of `trace`. Callers pass the low-passed
/// residual of an event-free segment.
NoiseLevel calibrate_noise(const Trace& trace, std::size_t first, std::size_t last);

/// Per-sample reference level and threshold for an already low-passed trace.
struct ThresholdLevels {
  std::vector<double> reference;
  std::vector<double> threshold;
};
ThresholdLevels threshold_levels(const Trace& filtered, const ThresholdPolicy& policy);

/// Hysteresis run extraction on an already low-passed trace. Amplitude is the extremal
/// excursion from the reference, signed.
std::vector<DetectionEvent> detect_runs(const Trace& filtered, const ThresholdLevels& levels, Polarity polarity,
                                        const ThresholdOptions& options = {});

/// low_pass, then threshold_levels, then detect_runs.
std::vector<DetectionEvent> threshold_detect(const Trace& trace, const ThresholdPolicy& policy, double lp_cutoff_hz,
                                             const ThresholdOptions& options = {});

} // namespace nwd
