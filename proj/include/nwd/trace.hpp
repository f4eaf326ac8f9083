// Conductance traces, binding events and the ground-truth trace simulator.
#pragma once

#include <cstdint>
#include <stdexcept>
#include <string>
#include <string_view>
#include <variant>
#include <vector>

namespace nwd {

/// Malformed or out-of-contract input. Maps to CLI exit code 2.
class InvalidInput : public std::invalid_argument {
public:
  using std::invalid_argument::invalid_argument;
};

/// A computation that cannot produce a finite answer. Maps to CLI exit code 3.
class NumericError : public std::runtime_error {
public:
  using std::runtime_error::runtime_error;
};

/// Uniformly sampled conductance series in nS.
struct Trace {
  std::vector<double> samples;
  double dt = 1.0;  // seconds
  double t0 = 0.0;  // seconds

  std::size_t size() const noexcept { return samples.size(); }
  double time(std::size_t i) const noexcept { return t0 + dt * static_cast<double>(i); }
};

/// Throws InvalidInput unless the trace is non-empty, dt > 0 and all samples finite.
void validate(const Trace& trace);

/// Number of whole samples covering `seconds` at interval `dt` (nearest sample).
std::size_t to_samples(double seconds, double dt);

enum class EventKind { TransientSpike, SpecificBinding };

struct EventSpec {
  EventKind kind = EventKind::SpecificBinding;
  double onset = 0.0;     // s
  double duration = 1.0;  // s
  double amplitude = 0.0; // nS, signed
};

/// A detected (or ground-truth) event on the sample grid.
struct DetectionEvent {
  std::size_t start = 0;  // first sample
  std::size_t length = 0; // samples
  double onset = 0.0;     // s
  double duration = 0.0;  // s
  double amplitude = 0.0; // nS, extremal excursion where meaningful
  double score = 0.0;
  int width = 0;          // matched-filter width that produced it, 0 otherwise
  std::string tag;        // "spike-like", "anomalous" or empty

  std::size_t end() const noexcept { return start + length; }
};

DetectionEvent make_event(const Trace& trace, std::size_t start, std::size_t length);

namespace trend {
struct None {};
struct Linear {
  double slope = 0.0; // nS/s
};
/// a*t^2 + b*t with t in seconds from the trace start.
struct Quadratic {
  double a = 0.0;
  double b = 0.0;
};
/// Level jumps to levels[i] at times[i]; zero before the first time.
struct PiecewiseStep {
  std::vector<double> times;
  std::vector<double> levels;
};
} // namespace trend

using Trend = std::variant<trend::None, trend::Linear, trend::Quadratic, trend::PiecewiseStep>;

double evaluate_trend(const Trend& t, double seconds);

/// A spike injected into a single wire at a given lag.
struct CommonSpike {
  double time = 0.0;      // s
  double amplitude = 0.0; // nS
  double lag = 0.0;       // s, integer multiple of dt
};

struct NoiseSpec {
  double white_sigma = 0.0;
  Trend trend = trend::None{};
  std::vector<CommonSpike> common_spikes;
  std::uint64_t seed = 0;
};

enum class SpikeShape { Rectangular, Triangular };

struct SimulatorConfig {
  double baseline = 0.0;
  double spike_max_duration = 2.0;
  SpikeShape spike_shape = SpikeShape::Rectangular;
};

/// trace = baseline + trend + sum of event boxcars + white Gaussian noise.
Trace synthesize_trace(const std::vector<EventSpec>& events, const NoiseSpec& noise, double duration,
                       double dt, const SimulatorConfig& config = {});

struct WireSpec {
  std::string modifier;
  std::vector<EventSpec> events;
  NoiseSpec noise;
};

/// A spike seen by every wire, each at its own lag.
struct ArraySpike {
  double time = 0.0;
  double amplitude = 0.0;
  std::vector<double> lags; // s, one per wire; empty means zero lag everywhere
};

/// Gaussian noise stream shared by every wire at a per-wire lag and gain.
struct SharedNoise {
  double sigma = 0.0;
  std::vector<double> lags;  // s, one per wire
  std::vector<double> gains; // one per wire, empty means 1
};

struct ArrayScenario {
  std::vector<WireSpec> wires;
  double duration = 0.0;
  double dt = 1.0;
  std::vector<ArraySpike> common_spikes;
  SharedNoise shared_noise;
  std::uint64_t seed = 0;
  SimulatorConfig config;
};

/// One trace per wire. Wire noise seeds are derived from the scenario seed and the wire index
/// when the wire's own seed is zero.
std::vector<Trace> synthesize_array(const ArrayScenario& scenario);

/// Deterministic sub-seed for a named stream.
std::uint64_t derive_seed(std::uint64_t seed, std::string_view stream, std::uint64_t index = 0);

} // namespace nwd
