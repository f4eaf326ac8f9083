#include "nwd/matched_filter.hpp"

#include <algorithm>
#include <cmath>

#include "nwd/conditioning.hpp"
#include "nwd/fft.hpp"

namespace nwd {

std::vector<double> build_boxcar_filter(const BoxcarFilterSpec& spec, double data_std) {
  if (!(data_std > 0.0)) throw InvalidInput("data standard deviation must be positive");
  if (!is_power_of_two(spec.n)) throw InvalidInput("filter length must be a power of two");
  if (spec.width_samples <= 0 || static_cast<std::size_t>(spec.width_samples) >= spec.n)
    throw InvalidInput("filter width must lie in (0, n)");

  const auto w = static_cast<std::size_t>(spec.width_samples);
  const std::size_t head = (w + 1) / 2;
  const std::size_t tail = w / 2;
  const double value = spec.amplitude / data_std;
  std::vector<double> kernel(spec.n, 0.0);
  for (std::size_t i = 0; i < head; ++i) kernel[i] = value;
  for (std::size_t i = spec.n - tail; i < spec.n; ++i) kernel[i] = value;
  return kernel;
}

std::vector<double> fft_convolve(std::span<const double> data, std::span<const double> kernel) {
  if (data.size() != kernel.size()) throw InvalidInput("data and kernel lengths differ");
  if (!is_power_of_two(data.size())) throw InvalidInput("transform length must be a power of two");

  const std::size_t n = data.size();
  std::vector<Complex> fd(data.begin(), data.end());
  std::vector<Complex> fk(kernel.begin(), kernel.end());
  fft_radix2(fd, false);
  fft_radix2(fk, false);
  for (std::size_t k = 0; k < n; ++k) fd[k] *= std::conj(fk[k]);
  fft_radix2(fd, true);

  std::vector<double> out(n);
  for (std::size_t k = 0; k < n; ++k) out[k] = fd[k].real();
  return out;
}

namespace {

void normalize_scores(std::vector<double>& scores) {
  // Output of a zero-mean input is zero-mean in theory, so only the scale is removed.
  const double sd = population_moments(scores).std;
  if (sd > 0.0)
    for (auto& s : scores) s /= sd;
}

} // namespace

FilterOutput filter_window(std::span<const double> whitened, const BoxcarFilterSpec& spec, double data_std) {
  if (whitened.size() != spec.n) throw InvalidInput("window length differs from filter length");
  FilterOutput out;
  out.width = spec.width_samples;
  out.scores = fft_convolve(whitened, build_boxcar_filter(spec, data_std));
  normalize_scores(out.scores);
  return out;
}

FilterOutput matched_filter(const Trace& trace, const BoxcarFilterSpec& spec) {
  validate(trace);
  const Moments raw = population_moments(trace.samples);
  const Trace white = whiten(trace);
  const std::size_t total = white.size();
  const std::size_t n = spec.n;

  FilterOutput out;
  if (total <= n) {
    std::vector<double> padded(n, 0.0);
    std::copy(white.samples.begin(), white.samples.end(), padded.begin());
    out = filter_window(padded, spec, raw.std);
    out.scores.resize(total);
    out.circular = total == n;
  } else {
    const std::size_t hop = n / 2;
    std::vector<std::size_t> starts;
    for (std::size_t s = 0; s + n < total; s += hop) starts.push_back(s);
    starts.push_back(total - n);

    out.width = spec.width_samples;
    out.circular = false;
    out.scores.assign(total, 0.0);
    std::span<const double> all(white.samples);
    for (std::size_t w = 0; w < starts.size(); ++w) {
      const FilterOutput win = filter_window(all.subspan(starts[w], n), spec, raw.std);
      // Samples are owned by the window whose centre is nearest; boundaries sit at midpoints.
      const std::size_t centre = starts[w] + n / 2;
      const std::size_t lo = w == 0 ? 0 : (starts[w - 1] + n / 2 + centre) / 2;
      const std::size_t hi = w + 1 == starts.size() ? total : (centre + starts[w + 1] + n / 2) / 2;
      for (std::size_t i = lo; i < hi; ++i) out.scores[i] = win.scores[i - starts[w]];
    }
  }
  out.dt = trace.dt;
  out.t0 = trace.t0;
  return out;
}

std::vector<DetectionEvent> detect_peaks(FilterOutput& output, double threshold_sigma, std::size_t min_separation) {
  if (!(threshold_sigma > 0.0)) throw InvalidInput("peak threshold must be positive");
  const auto& s = output.scores;
  const std::size_t n = s.size();
  output.peaks.clear();
  if (n == 0) return {};

  std::vector<Peak> candidates;
  for (std::size_t i = 0; i < n; ++i) {
    if (!(s[i] > threshold_sigma)) continue;
    bool has_left = output.circular || i > 0;
    bool has_right = output.circular || i + 1 < n;
    const double left = has_left ? s[(i + n - 1) % n] : -INFINITY;
    const double right = has_right ? s[(i + 1) % n] : -INFINITY;
    // Strict on the left, weak on the right: a flat top yields its first sample.
    if (s[i] > left && s[i] >= right) candidates.push_back({i, s[i]});
  }
  std::stable_sort(candidates.begin(), candidates.end(),
                   [](const Peak& a, const Peak& b) { return a.score > b.score; });

  auto distance = [&](std::size_t a, std::size_t b) {
    const std::size_t d = a > b ? a - b : b - a;
    return output.circular ? std::min(d, n - d) : d;
  };
  for (const Peak& c : candidates) {
    const bool suppressed = std::any_of(output.peaks.begin(), output.peaks.end(),
                                        [&](const Peak& p) { return distance(p.index, c.index) < min_separation; });
    if (!suppressed) output.peaks.push_back(c);
  }
  std::sort(output.peaks.begin(), output.peaks.end(), [](const Peak& a, const Peak& b) { return a.index < b.index; });

  const auto w = static_cast<std::size_t>(std::max(output.width, 1));
  const std::size_t back = w / 2;
  std::vector<DetectionEvent> events;
  for (const Peak& p : output.peaks) {
    std::size_t start;
    if (output.circular) start = (p.index + n - back % n) % n;
    else start = p.index >= back ? p.index - back : 0;
    DetectionEvent e;
    e.start = start;
    e.length = w;
    e.onset = output.t0 + output.dt * static_cast<double>(start);
    e.duration = output.dt * static_cast<double>(w);
    e.score = p.score;
    e.width = output.width;
    events.push_back(e);
  }
  return events;
}

std::vector<DetectionEvent> matched_filter_bank(const Trace& trace, std::span<const int> widths, double amplitude,
                                                std::size_t n, double threshold_sigma, std::size_t min_separation) {
  if (widths.empty()) throw InvalidInput("filter bank needs at least one width");
  std::vector<DetectionEvent> all;
  for (int width : widths) {
    BoxcarFilterSpec spec{amplitude, width, n};
    FilterOutput out = matched_filter(trace, spec);
    const std::size_t sep = min_separation == 0 ? static_cast<std::size_t>(width) : min_separation;
    auto events = detect_peaks(out, threshold_sigma, sep);
    all.insert(all.end(), events.begin(), events.end());
  }
  std::stable_sort(all.begin(), all.end(), [](const DetectionEvent& a, const DetectionEvent& b) {
    return a.start != b.start ? a.start < b.start : a.width < b.width;
  });
  return all;
}

} // namespace nwd
