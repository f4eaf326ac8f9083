#include "nwd/bayes.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <random>
#include <set>

#include "nwd/trace.hpp"

namespace nwd {

namespace {

std::size_t find_id(const std::vector<std::string>& ids, std::string_view id, const char* what) {
  const auto it = std::find(ids.begin(), ids.end(), id);
  if (it == ids.end()) throw InvalidInput(std::string("unknown ") + what + " '" + std::string(id) + "'");
  return static_cast<std::size_t>(it - ids.begin());
}

} // namespace

std::size_t ResponseTable::modifier_index(std::string_view id) const { return find_id(modifiers, id, "modifier"); }
std::size_t ResponseTable::agent_index(std::string_view id) const { return find_id(agents, id, "agent"); }
double ResponseTable::at(std::string_view modifier, std::string_view agent) const {
  return p[modifier_index(modifier)][agent_index(agent)];
}

void validate(const ResponseTable& table) {
  if (table.modifiers.empty() || table.agents.empty()) throw InvalidInput("response table needs rows and columns");
  if (table.p.size() != table.modifiers.size()) throw InvalidInput("response table row count mismatch");
  if (std::set<std::string>(table.modifiers.begin(), table.modifiers.end()).size() != table.modifiers.size())
    throw InvalidInput("duplicate modifier id in response table");
  if (std::set<std::string>(table.agents.begin(), table.agents.end()).size() != table.agents.size())
    throw InvalidInput("duplicate agent id in response table");
  for (const auto& row : table.p) {
    if (row.size() != table.agents.size()) throw InvalidInput("response table row length mismatch");
    for (double v : row)
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("response table entry outside [0, 1]");
  }
}

ResponseTable default_table() {
  constexpr double kSpecific = 0.98;
  constexpr double kFamily = 0.3;
  constexpr double kCross = 0.02;
  constexpr double kReceptor = 0.95;

  ResponseTable t;
  t.modifiers = {"Anti-A1-1", "Anti-A1-2", "Anti-A2-1", "Anti-A3-1", "Anti-B1-1", "Anti-B2-1", "CellSurface"};
  t.agents = {"A1", "A2", "A3", "Other-A", "B1", "B2", "New", "Buffer"};

  // Target agent and family of each antibody row.
  const std::vector<std::pair<std::string, char>> antibody = {{"A1", 'A'}, {"A1", 'A'}, {"A2", 'A'},
                                                              {"A3", 'A'}, {"B1", 'B'}, {"B2", 'B'}};
  auto family_of = [](const std::string& agent) -> char {
    if (agent == "Other-A") return 'A';
    if (agent.size() == 2 && (agent[0] == 'A' || agent[0] == 'B')) return agent[0];
    return '?';
  };

  for (const auto& [target, family] : antibody) {
    std::vector<double> row;
    for (const auto& agent : t.agents) {
      if (agent == target) row.push_back(kSpecific);
      else if (family_of(agent) == family) row.push_back(kFamily);
      else row.push_back(kCross);
    }
    t.p.push_back(std::move(row));
  }
  std::vector<double> receptor;
  for (const auto& agent : t.agents) receptor.push_back(agent == "Buffer" ? kCross : kReceptor);
  t.p.push_back(std::move(receptor));
  return t;
}

std::size_t Posterior::argmax() const {
  return static_cast<std::size_t>(std::max_element(prob.begin(), prob.end()) - prob.begin());
}

std::vector<std::size_t> Posterior::ranking() const {
  std::vector<std::size_t> idx(prob.size());
  std::iota(idx.begin(), idx.end(), 0);
  std::stable_sort(idx.begin(), idx.end(), [&](std::size_t a, std::size_t b) { return prob[a] > prob[b]; });
  return idx;
}

Posterior posterior(const ResponseTable& table, const Evidence& evidence, std::span<const double> prior,
                    const PosteriorOptions& options) {
  validate(table);
  const std::size_t n_mod = table.modifiers.size();
  const std::size_t n_agent = table.agents.size();
  if (evidence.outcomes.size() != n_mod) throw InvalidInput("evidence needs one outcome per modifier row");
  if (options.soft && evidence.strength.size() != n_mod) throw InvalidInput("soft evidence needs one strength per row");
  if (prior.size() != n_agent) throw InvalidInput("prior needs one probability per agent");
  double prior_sum = 0.0;
  for (double v : prior) {
    if (!(v >= 0.0)) throw InvalidInput("prior probabilities must be non-negative");
    prior_sum += v;
  }
  if (std::abs(prior_sum - 1.0) > 1e-9) throw InvalidInput("prior must sum to 1");

  const double lo = options.clamp;
  const double hi = 1.0 - options.clamp;
  std::vector<double> logp(n_agent);
  for (std::size_t a = 0; a < n_agent; ++a) {
    double acc = std::log(prior[a]);
    for (std::size_t m = 0; m < n_mod; ++m) {
      const double p = std::clamp(table.p[m][a], lo, hi);
      double like;
      if (options.soft) {
        const double s = std::clamp(evidence.strength[m], 0.0, 1.0);
        like = p * s + (1.0 - p) * (1.0 - s);
      } else {
        like = evidence.outcomes[m] == Outcome::Detected ? p : 1.0 - p;
      }
      acc += std::log(like);
    }
    logp[a] = acc;
  }

  const double top = *std::max_element(logp.begin(), logp.end());
  if (!std::isfinite(top)) throw NumericError("evidence impossible under table");
  Posterior post;
  post.agents = table.agents;
  post.prob.resize(n_agent);
  double z = 0.0;
  for (std::size_t a = 0; a < n_agent; ++a) z += post.prob[a] = std::exp(logp[a] - top);
  for (auto& v : post.prob) v /= z;

  if (n_agent >= 2) {
    const auto order = post.ranking();
    const double second = post.prob[order[1]];
    post.mixture = second > 0.0 && post.prob[order[0]] / second <= options.mixture_ratio;
  }
  return post;
}

Posterior posterior(const ResponseTable& table, const Evidence& evidence, const PosteriorOptions& options) {
  const std::vector<double> uniform(table.agents.size(), 1.0 / static_cast<double>(table.agents.size()));
  return posterior(table, evidence, uniform, options);
}

double noisy_or(std::span<const double> probs) {
  double none = 1.0;
  for (double p : probs) none *= 1.0 - p;
  return 1.0 - none;
}

Evidence simulate_evidence(const ResponseTable& table, std::span<const std::string> true_agents, double noise_sigma,
                           std::uint64_t seed) {
  validate(table);
  if (!(noise_sigma >= 0.0)) throw InvalidInput("evidence noise must be non-negative");
  std::vector<std::size_t> cols;
  for (const auto& a : true_agents) cols.push_back(table.agent_index(a));

  std::mt19937_64 rng(seed);
  std::normal_distribution<double> gauss(0.0, 1.0);
  Evidence ev;
  for (std::size_t m = 0; m < table.modifiers.size(); ++m) {
    std::vector<double> ps;
    for (std::size_t c : cols) ps.push_back(table.p[m][c]);
    const double response = std::clamp(noisy_or(ps) + noise_sigma * gauss(rng), 0.0, 1.0);
    ev.strength.push_back(response);
    ev.outcomes.push_back(response >= 0.5 ? Outcome::Detected : Outcome::NotDetected);
  }
  return ev;
}

Evidence collapse_replicates(const ResponseTable& table, std::span<const std::string> wire_modifiers,
                             std::span<const Outcome> wire_outcomes) {
  if (wire_modifiers.size() != wire_outcomes.size()) throw InvalidInput("one outcome per wire required");
  const std::size_t n_mod = table.modifiers.size();
  std::vector<int> votes(n_mod, 0), wires(n_mod, 0);
  for (std::size_t w = 0; w < wire_modifiers.size(); ++w) {
    const std::size_t m = table.modifier_index(wire_modifiers[w]);
    ++wires[m];
    if (wire_outcomes[w] == Outcome::Detected) ++votes[m];
  }
  Evidence ev;
  for (std::size_t m = 0; m < n_mod; ++m) {
    const bool detected = 2 * votes[m] > wires[m];
    ev.outcomes.push_back(detected ? Outcome::Detected : Outcome::NotDetected);
    ev.strength.push_back(wires[m] > 0 ? static_cast<double>(votes[m]) / wires[m] : 0.0);
  }
  return ev;
}

} // namespace nwd
