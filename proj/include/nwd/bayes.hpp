// Naive Bayes fusion of per-modifier detection outcomes over a modifier x agent response table.
#pragma once

#include <cstdint>
#include <span>
#include <string>
#include <string_view>
#include <vector>

namespace nwd {

/// p[m][a] = P(detection on modifier m | agent a present).
struct ResponseTable {
  std::vector<std::string> modifiers;
  std::vector<std::string> agents;
  std::vector<std::vector<double>> p;

  std::size_t modifier_index(std::string_view id) const;
  std::size_t agent_index(std::string_view id) const;
  double at(std::string_view modifier, std::string_view agent) const;
};

/// Throws InvalidInput on ragged shape, empty axes, duplicate ids or entries outside [0, 1].
void validate(const ResponseTable& table);

/// Two agent families (A1-A3, B1-B2) plus Other-A, New and Buffer over seven modifier rows.
/// Specific cells are 0.98, same-family 0.3, cross-family 0.02, the cell-surface receptor row
/// 0.95 for every virus and 0.02 for Buffer. Only the specific-binding value is a measured
/// figure; the rest are illustrative defaults following the near-one / intermediate / near-zero
/// pattern.
ResponseTable default_table();

enum class Outcome { NotDetected, Detected };

struct Evidence {
  std::vector<Outcome> outcomes; // one per table row
  std::vector<double> strength;  // optional soft response in [0, 1], one per row
};

struct PosteriorOptions {
  bool soft = false;          // use strength: likelihood p*s + (1-p)*(1-s)
  double clamp = 1e-6;        // table entries clamped to [clamp, 1 - clamp]; 0 disables
  double mixture_ratio = 3.0; // flag when top1 / top2 <= ratio
};

struct Posterior {
  std::vector<std::string> agents;
  std::vector<double> prob;
  bool mixture = false;

  std::size_t argmax() const;
  /// Agent indices ordered by decreasing probability (stable on ties).
  std::vector<std::size_t> ranking() const;
};

/// P(a | e) proportional to prior(a) * prod_m [p or 1-p], accumulated in log space.
/// Throws NumericError("evidence impossible under table") when every agent has zero mass.
Posterior posterior(const ResponseTable& table, const Evidence& evidence, std::span<const double> prior,
                    const PosteriorOptions& options = {});
Posterior posterior(const ResponseTable& table, const Evidence& evidence, const PosteriorOptions& options = {});

/// 1 - prod(1 - p_i).
double noisy_or(std::span<const double> probs);

/// Expected response per row is the noisy-OR over the true agents' columns; Gaussian noise of
/// `noise_sigma` is added, the result clipped to [0, 1] and kept as strength, and the row is
/// Detected when the noisy response reaches 0.5.
Evidence simulate_evidence(const ResponseTable& table, std::span<const std::string> true_agents, double noise_sigma,
                           std::uint64_t seed);

/// Majority vote over replicate wires sharing a modifier; ties count as NotDetected.
/// wire_modifiers[i] names the table row wire i belongs to. Rows without wires are NotDetected.
Evidence collapse_replicates(const ResponseTable& table, std::span<const std::string> wire_modifiers,
                             std::span<const Outcome> wire_outcomes);

} // namespace nwd
