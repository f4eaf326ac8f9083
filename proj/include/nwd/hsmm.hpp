// Two-state (Dock / NoDock) hidden semi-Markov model with discrete Coxian phase-type durations
// and multinomial emissions.
//
// Inference runs on the expanded chain whose states are (macro state, phase). Phase k of a macro
// state stays with probability s_k, advances to phase k+1 with a_k and leaves with e_k, entering
// the other macro state at a phase drawn from that state's entry distribution (point mass at
// phase 1 by default). The time spent in a macro state is therefore the absorption time of the
// phase chain: a mixture of sums of geometrics. Emissions depend only on the macro state.
#pragma once

#include <array>
#include <cstdint>
#include <limits>
#include <span>
#include <vector>

#include "nwd/trace.hpp"

namespace nwd {

enum class MacroState : int { NoDock = 0, Dock = 1 };
constexpr std::size_t kMacroStates = 2;

struct CoxianDuration {
  std::vector<double> stay;
  std::vector<double> advance; // advance.back() == 0
  std::vector<double> exit;

  std::size_t phases() const noexcept { return stay.size(); }

  /// Single phase leaving with probability `exit_prob`: a geometric duration.
  static CoxianDuration geometric(double exit_prob);
  /// M phases, each left with probability q; non-final phases advance with probability
  /// q * advance_fraction and exit with the rest. q is solved so the mean from phase 1 is `mean`.
  static CoxianDuration with_mean(std::size_t phases, double mean, double advance_fraction = 0.95);
};

/// Probabilities in [0, 1], each phase row summing to 1 within 1e-12, last advance zero.
void validate(const CoxianDuration& d);

/// P(absorption happens exactly at step t | start in phase `start_phase`), 1-based phase, t >= 1.
double duration_pmf(const CoxianDuration& d, std::size_t start_phase, std::size_t t);

/// Expected absorption time from `start_phase` (1-based).
double duration_mean(const CoxianDuration& d, std::size_t start_phase);

/// Mixture of multinomials over K symbols; a single component is a plain multinomial.
struct EmissionModel {
  std::vector<double> weights;
  std::vector<std::vector<double>> components;

  static EmissionModel multinomial(std::vector<double> probs);
  std::size_t symbols() const noexcept { return components.empty() ? 0 : components.front().size(); }
  double prob(std::size_t symbol) const;
};

void validate(const EmissionModel& e);

struct HsmmModel {
  std::array<double, kMacroStates> initial{0.5, 0.5};
  std::array<CoxianDuration, kMacroStates> duration;
  std::array<std::vector<double>, kMacroStates> entry; // entry-phase distribution per macro state
  std::array<EmissionModel, kMacroStates> emission;
  std::vector<double> cuts;                            // discretization boundaries, may be empty

  std::size_t phases() const noexcept { return duration[0].phases(); }
  std::size_t symbols() const noexcept { return emission[0].symbols(); }
};

/// Both macro states share the phase count and symbol count; every distribution normalized.
void validate(const HsmmModel& model);

/// The (macro, phase) chain. State index = macro * M + phase (0-based phase).
struct ExpandedHmm {
  std::size_t states = 0;
  std::size_t symbols = 0;
  std::vector<double> initial;
  std::vector<double> transition; // row-major states x states
  std::vector<int> macro;         // macro state of each expanded state
  std::vector<double> emission;   // row-major states x symbols

  double a(std::size_t from, std::size_t to) const { return transition[from * states + to]; }
  double b(std::size_t state, std::size_t symbol) const { return emission[state * symbols + symbol]; }
};

ExpandedHmm expand(const HsmmModel& model);

enum class Label : std::int8_t { NoDock = 0, Dock = 1, Unlabeled = 2 };
using LabelSeq = std::vector<Label>;

enum class BinScheme { EqualWidth, Quantile };

struct Discretization {
  std::vector<int> symbols;
  std::vector<double> cuts; // symbol = number of cuts <= value
  bool fell_back = false;   // quantile request exceeded the number of distinct values
};

Discretization discretize(const Trace& trace, std::size_t bins, BinScheme scheme);
std::vector<int> apply_cuts(std::span<const double> values, std::span<const double> cuts);

/// Scaled forward recursion on the expanded chain. Labeled samples clamp the macro state.
/// Throws NumericError("labels inconsistent with model support") when the clamped path has
/// zero probability.
double forward_likelihood(const HsmmModel& model, std::span<const int> obs, const LabelSeq* labels = nullptr);

struct MacroPosterior {
  std::vector<std::array<double, kMacroStates>> marginal; // per sample
  double log_likelihood = 0.0;
};

MacroPosterior macro_posteriors(const HsmmModel& model, std::span<const int> obs, const LabelSeq* labels = nullptr);

struct EmOptions {
  std::size_t max_iters = 100;
  double tol = 1e-6;              // stop when the log-likelihood gain falls below tol
  double emission_floor = 1e-6;
};

struct TrainResult {
  HsmmModel model;
  std::vector<double> log_likelihood; // entry 0 is the starting model, one more per iteration
  std::size_t iterations = 0;
  bool converged = false;
};

/// Baum-Welch on the expanded chain with macro-state clamping at labeled samples and emissions
/// tied across the phases of a macro state. The emission M-step maximizes subject to every
/// probability staying >= emission_floor, so the log-likelihood is non-decreasing. The
/// starting emissions are raised to the floor before the first iteration.
TrainResult em_train(const HsmmModel& initial, std::span<const int> obs, const LabelSeq& labels,
                     const EmOptions& options = {});

struct DecodeOptions {
  std::size_t min_dock = 3; // shorter Dock runs are tagged "spike-like"
  std::size_t max_dock = std::numeric_limits<std::size_t>::max(); // longer ones "anomalous"
  double dt = 1.0;
  double t0 = 0.0;
};

struct Decoded {
  LabelSeq labels;                    // Dock or NoDock only
  std::vector<DetectionEvent> events; // maximal Dock runs
  std::vector<std::size_t> path;      // expanded-state path
  double log_probability = 0.0;       // log P(path, obs)
};

Decoded viterbi_decode(const HsmmModel& model, std::span<const int> obs, const DecodeOptions& options = {});

/// Starting point for em_train. Emissions come from labeled-sample histograms when both labels
/// occur, else uniform plus 1% seeded jitter. Durations have mean `mean_duration` samples.
/// Dock emissions get `dock_components` mixture components (jittered copies).
HsmmModel initial_model(std::span<const int> obs, const LabelSeq& labels, std::size_t phases, std::size_t symbols,
                        std::size_t dock_components = 1, std::uint64_t seed = 0, double mean_duration = 20.0,
                        double emission_floor = 1e-6);

/// argmax of sum c_i log p_i subject to p_i >= floor and sum p_i = 1.
std::vector<double> floored_distribution(std::span<const double> counts, double floor);

/// Labels over sample intervals: Dock inside each [start, end), NoDock on `context` samples
/// either side (after a `guard` gap), everything else Unlabeled. Dock wins on overlap.
LabelSeq labels_from_intervals(std::size_t length, std::span<const DetectionEvent> events, std::size_t context = 20,
                               std::size_t guard = 2);

} // namespace nwd
