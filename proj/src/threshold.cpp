#include "nwd/threshold.hpp"

#include <algorithm>
#include <cmath>
#include <span>

#include "nwd/conditioning.hpp"

namespace nwd {

namespace {

constexpr double kMadToSigma = 1.4826;

double median_of(std::vector<double>& buf) {
  const std::size_t m = buf.size();
  auto mid = buf.begin() + m / 2;
  std::nth_element(buf.begin(), mid, buf.end());
  if (m % 2 == 1) return *mid;
  return 0.5 * (*mid + *std::max_element(buf.begin(), mid));
}

} // namespace

NoiseLevel calibrate_noise(const Trace& trace, std::size_t first, std::size_t last) {
  if (first >= last) throw InvalidInput("calibration window is empty");
  if (last > trace.size()) throw InvalidInput("calibration window extends past the trace");
  const Moments m = population_moments(std::span<const double>(trace.samples).subspan(first, last - first));
  return {m.std, m.mean};
}

ThresholdLevels threshold_levels(const Trace& filtered, const ThresholdPolicy& policy) {
  const std::size_t n = filtered.size();
  const double sign = policy.polarity == Polarity::Negative ? -1.0 : 1.0;
  ThresholdLevels lv;
  lv.reference.assign(n, 0.0);
  lv.threshold.assign(n, 0.0);

  std::visit(
      [&](const auto& rule) {
        using R = std::decay_t<decltype(rule)>;
        if constexpr (std::is_same_v<R, threshold_rule::Fixed>) {
          std::fill(lv.threshold.begin(), lv.threshold.end(), sign * std::abs(rule.level));
        } else if constexpr (std::is_same_v<R, threshold_rule::Calibrated>) {
          if (!(rule.k_sigma > 0.0)) throw InvalidInput("k_sigma must be positive");
          if (rule.last - std::min(rule.last, rule.first) < 2)
            throw InvalidInput("calibration segment shorter than two samples");
          const NoiseLevel noise = calibrate_noise(filtered, rule.first, rule.last);
          std::fill(lv.reference.begin(), lv.reference.end(), noise.mean);
          std::fill(lv.threshold.begin(), lv.threshold.end(), noise.mean + sign * rule.k_sigma * noise.sigma);
        } else {
          if (!(rule.k_sigma > 0.0)) throw InvalidInput("k_sigma must be positive");
          const std::size_t width = window_samples(rule.window_s, filtered.dt);
          if (width > n) throw InvalidInput("trace shorter than adaptive window");
          std::vector<double> buf;
          for (std::size_t i = 0; i < n; ++i) {
            const auto [lo, hi] = centred_window(i, width, n);
            buf.assign(filtered.samples.begin() + lo, filtered.samples.begin() + hi);
            const double med = median_of(buf);
            for (auto& v : buf) v = std::abs(v - med);
            const double sigma = kMadToSigma * median_of(buf);
            lv.reference[i] = med;
            lv.threshold[i] = med + sign * rule.k_sigma * sigma;
          }
        }
      },
      policy.rule);
  return lv;
}

std::vector<DetectionEvent> detect_runs(const Trace& filtered, const ThresholdLevels& levels, Polarity polarity,
                                        const ThresholdOptions& options) {
  const std::size_t n = filtered.size();
  if (levels.reference.size() != n || levels.threshold.size() != n)
    throw InvalidInput("threshold levels do not match trace length");
  if (!(options.hysteresis >= 0.0 && options.hysteresis <= 1.0)) throw InvalidInput("hysteresis must lie in [0, 1]");
  const double sign = polarity == Polarity::Negative ? -1.0 : 1.0;
  const std::size_t min_len = static_cast<std::size_t>(std::ceil(options.min_duration_s / filtered.dt - 1e-9));

  std::vector<DetectionEvent> events;
  bool open = false;
  std::size_t start = 0;
  double extreme = 0.0;
  auto close = [&](std::size_t stop) {
    if (stop - start >= std::max<std::size_t>(min_len, 1)) {
      DetectionEvent e = make_event(filtered, start, stop - start);
      e.amplitude = sign * extreme;
      const double gap = std::abs(levels.threshold[start] - levels.reference[start]);
      e.score = gap > 0.0 ? extreme / gap : 0.0;
      events.push_back(e);
    }
    open = false;
  };

  for (std::size_t i = 0; i < n; ++i) {
    const double excursion = sign * (filtered.samples[i] - levels.reference[i]);
    const double gap = sign * (levels.threshold[i] - levels.reference[i]);
    if (!open) {
      if (gap > 0.0 && excursion > gap) {
        open = true;
        start = i;
        extreme = excursion;
      }
    } else if (excursion > options.hysteresis * gap) {
      extreme = std::max(extreme, excursion);
    } else {
      close(i);
    }
  }
  if (open) close(n);
  return events;
}

std::vector<DetectionEvent> threshold_detect(const Trace& trace, const ThresholdPolicy& policy, double lp_cutoff_hz,
                                             const ThresholdOptions& options) {
  const Trace filtered = low_pass(trace, lp_cutoff_hz);
  return detect_runs(filtered, threshold_levels(filtered, policy), policy.polarity, options);
}

} // namespace nwd
