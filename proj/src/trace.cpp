#include "nwd/trace.hpp"

#include <algorithm>
#include <cmath>
#include <random>

namespace nwd {

void validate(const Trace& trace) {
  if (trace.samples.empty()) throw InvalidInput("trace has no samples");
  if (!(trace.dt > 0.0) || !std::isfinite(trace.dt)) throw InvalidInput("sample interval must be positive");
  for (double v : trace.samples) {
    if (!std::isfinite(v)) throw InvalidInput("trace contains a non-finite sample");
  }
}

std::size_t to_samples(double seconds, double dt) {
  if (!(dt > 0.0)) throw InvalidInput("sample interval must be positive");
  const double n = std::llround(seconds / dt);
  return n < 0 ? 0 : static_cast<std::size_t>(n);
}

DetectionEvent make_event(const Trace& trace, std::size_t start, std::size_t length) {
  DetectionEvent e;
  e.start = start;
  e.length = length;
  e.onset = trace.time(start);
  e.duration = trace.dt * static_cast<double>(length);
  return e;
}

double evaluate_trend(const Trend& t, double seconds) {
  struct Visitor {
    double s;
    double operator()(const trend::None&) const { return 0.0; }
    double operator()(const trend::Linear& l) const { return l.slope * s; }
    double operator()(const trend::Quadratic& q) const { return q.a * s * s + q.b * s; }
    double operator()(const trend::PiecewiseStep& p) const {
      double level = 0.0;
      for (std::size_t i = 0; i < p.times.size() && i < p.levels.size(); ++i) {
        if (s >= p.times[i]) level = p.levels[i];
      }
      return level;
    }
  };
  return std::visit(Visitor{seconds}, t);
}

namespace {

std::uint64_t splitmix64(std::uint64_t x) {
  x += 0x9e3779b97f4a7c15ULL;
  x = (x ^ (x >> 30)) * 0xbf58476d1ce4e5b9ULL;
  x = (x ^ (x >> 27)) * 0x94d049bb133111ebULL;
  return x ^ (x >> 31);
}

void add_pulse(std::vector<double>& out, long long centre, double amplitude, SpikeShape shape) {
  const auto n = static_cast<long long>(out.size());
  auto put = [&](long long i, double v) {
    if (i >= 0 && i < n) out[static_cast<std::size_t>(i)] += v;
  };
  put(centre, amplitude);
  if (shape == SpikeShape::Triangular) {
    put(centre - 1, 0.5 * amplitude);
    put(centre + 1, 0.5 * amplitude);
  }
}

} // namespace

std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index) {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : stream) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return splitmix64(splitmix64(seed ^ h) + index);
}

Trace synthesize_trace(const std::vector<EventSpec>& events, const NoiseSpec& noise, double duration,
                       double dt, const SimulatorConfig& config) {
  if (!(dt > 0.0) || !std::isfinite(dt)) throw InvalidInput("sample interval must be positive");
  if (!(duration > 0.0)) throw InvalidInput("duration must be positive");
  if (!std::isfinite(noise.white_sigma) || noise.white_sigma < 0.0)
    throw InvalidInput("white noise sigma must be finite and non-negative");

  const std::size_t n = to_samples(duration, dt);
  if (n == 0) throw InvalidInput("duration shorter than one sample");
  const double slack = 1e-9 * std::max(1.0, duration);

  Trace trace;
  trace.dt = dt;
  trace.samples.assign(n, config.baseline);

  for (std::size_t i = 0; i < n; ++i) trace.samples[i] += evaluate_trend(noise.trend, dt * static_cast<double>(i));

  for (const auto& ev : events) {
    if (!(ev.duration > 0.0)) throw InvalidInput("event duration must be positive");
    if (ev.onset < 0.0) throw InvalidInput("event onset before trace start");
    if (ev.onset + ev.duration > duration + slack) throw InvalidInput("event extends past trace duration");
    const std::size_t start = to_samples(ev.onset, dt);
    if (ev.kind == EventKind::TransientSpike) {
      if (ev.duration > config.spike_max_duration + slack)
        throw InvalidInput("transient spike longer than spike_max_duration");
      if (config.spike_shape == SpikeShape::Triangular) {
        add_pulse(trace.samples, static_cast<long long>(start), ev.amplitude, SpikeShape::Triangular);
        continue;
      }
    }
    std::size_t stop = std::min(n, to_samples(ev.onset + ev.duration, dt));
    if (stop <= start) stop = std::min(n, start + 1);
    for (std::size_t i = start; i < stop; ++i) trace.samples[i] += ev.amplitude;
  }

  for (const auto& sp : noise.common_spikes) {
    const double at = sp.time + sp.lag;
    if (at < 0.0 || at > duration + slack) throw InvalidInput("common spike falls outside the trace");
    const double lag_steps = sp.lag / dt;
    if (std::abs(lag_steps - std::round(lag_steps)) > 1e-6) throw InvalidInput("spike lag must be a multiple of dt");
    add_pulse(trace.samples, std::llround(sp.time / dt) + std::llround(lag_steps), sp.amplitude, config.spike_shape);
  }

  if (noise.white_sigma > 0.0) {
    std::mt19937_64 rng(noise.seed);
    std::normal_distribution<double> gauss(0.0, noise.white_sigma);
    for (auto& v : trace.samples) v += gauss(rng);
  }
  return trace;
}

std::vector<Trace> synthesize_array(const ArrayScenario& scenario) {
  if (scenario.wires.empty()) throw InvalidInput("scenario has no wires");
  const std::size_t n_wires = scenario.wires.size();
  auto lag_for = [&](const std::vector<double>& lags, std::size_t w) {
    if (lags.empty()) return 0.0;
    if (lags.size() != n_wires) throw InvalidInput("lag list length differs from wire count");
    return lags[w];
  };

  std::vector<Trace> out;
  out.reserve(n_wires);
  for (std::size_t w = 0; w < n_wires; ++w) {
    NoiseSpec noise = scenario.wires[w].noise;
    if (noise.seed == 0) noise.seed = derive_seed(scenario.seed, "wire", w);
    for (const auto& sp : scenario.common_spikes)
      noise.common_spikes.push_back({sp.time, sp.amplitude, lag_for(sp.lags, w)});
    out.push_back(synthesize_trace(scenario.wires[w].events, noise, scenario.duration, scenario.dt, scenario.config));
  }

  const SharedNoise& shared = scenario.shared_noise;
  if (shared.sigma > 0.0) {
    const std::size_t n = out.front().size();
    std::vector<long long> shifts(n_wires);
    long long max_shift = 0;
    for (std::size_t w = 0; w < n_wires; ++w) {
      const double steps = lag_for(shared.lags, w) / scenario.dt;
      if (std::abs(steps - std::round(steps)) > 1e-6) throw InvalidInput("shared noise lag must be a multiple of dt");
      shifts[w] = std::llround(steps);
      max_shift = std::max(max_shift, std::abs(shifts[w]));
    }
    // One stream long enough that every lagged copy is fully populated.
    std::mt19937_64 rng(derive_seed(scenario.seed, "shared-noise"));
    std::normal_distribution<double> gauss(0.0, shared.sigma);
    std::vector<double> common(n + 2 * static_cast<std::size_t>(max_shift));
    for (auto& v : common) v = gauss(rng);
    for (std::size_t w = 0; w < n_wires; ++w) {
      double gain = 1.0;
      if (!shared.gains.empty()) {
        if (shared.gains.size() != n_wires) throw InvalidInput("gain list length differs from wire count");
        gain = shared.gains[w];
      }
      for (std::size_t i = 0; i < n; ++i) {
        const auto src = static_cast<long long>(i) + max_shift - shifts[w];
        out[w].samples[i] += gain * common[static_cast<std::size_t>(src)];
      }
    }
  }
  return out;
}

} // namespace nwd
