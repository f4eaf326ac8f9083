#include "nwd/hsmm.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <random>

namespace nwd {

namespace {

constexpr double kRowTol = 1e-12;

void check_distribution(std::span<const double> p, const char* what) {
  if (p.empty()) throw InvalidInput(std::string(what) + " is empty");
  double sum = 0.0;
  for (double v : p) {
    if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput(std::string(what) + " has an entry outside [0, 1]");
    sum += v;
  }
  if (std::abs(sum - 1.0) > 1e-9) throw InvalidInput(std::string(what) + " does not sum to 1");
}

void check_symbols(std::span<const int> obs, std::size_t symbols) {
  for (int o : obs)
    if (o < 0 || static_cast<std::size_t>(o) >= symbols) throw InvalidInput("observation symbol out of range");
}

bool allowed(const LabelSeq* labels, std::size_t t, int macro) {
  if (labels == nullptr) return true;
  const Label l = (*labels)[t];
  return l == Label::Unlabeled || static_cast<int>(l) == macro;
}

// Scaled forward-backward over the expanded chain.
struct ForwardBackward {
  std::size_t T = 0, S = 0;
  std::vector<double> alpha; // T x S, each row sums to 1
  std::vector<double> beta;  // T x S, scaled by the same constants
  std::vector<double> scale; // c_t
  double log_likelihood = 0.0;
};

ForwardBackward run_forward(const ExpandedHmm& hmm, std::span<const int> obs, const LabelSeq* labels) {
  ForwardBackward fb;
  fb.T = obs.size();
  fb.S = hmm.states;
  const std::size_t S = fb.S;
  fb.alpha.assign(fb.T * S, 0.0);
  fb.scale.assign(fb.T, 0.0);

  for (std::size_t t = 0; t < fb.T; ++t) {
    double* cur = &fb.alpha[t * S];
    const auto o = static_cast<std::size_t>(obs[t]);
    for (std::size_t s = 0; s < S; ++s) {
      if (!allowed(labels, t, hmm.macro[s])) continue;
      double in;
      if (t == 0) {
        in = hmm.initial[s];
      } else {
        const double* prev = &fb.alpha[(t - 1) * S];
        in = 0.0;
        for (std::size_t r = 0; r < S; ++r) in += prev[r] * hmm.a(r, s);
      }
      cur[s] = in * hmm.b(s, o);
    }
    double c = 0.0;
    for (std::size_t s = 0; s < S; ++s) c += cur[s];
    if (!(c > 0.0)) throw NumericError("labels inconsistent with model support");
    for (std::size_t s = 0; s < S; ++s) cur[s] /= c;
    fb.scale[t] = c;
    fb.log_likelihood += std::log(c);
  }
  return fb;
}

void run_backward(const ExpandedHmm& hmm, std::span<const int> obs, const LabelSeq* labels, ForwardBackward& fb) {
  const std::size_t S = fb.S;
  fb.beta.assign(fb.T * S, 0.0);
  for (std::size_t s = 0; s < S; ++s) fb.beta[(fb.T - 1) * S + s] = 1.0;
  std::vector<double> weighted(S);
  for (std::size_t t = fb.T - 1; t-- > 0;) {
    const auto o = static_cast<std::size_t>(obs[t + 1]);
    const double* next = &fb.beta[(t + 1) * S];
    for (std::size_t s = 0; s < S; ++s)
      weighted[s] = allowed(labels, t + 1, hmm.macro[s]) ? hmm.b(s, o) * next[s] : 0.0;
    double* cur = &fb.beta[t * S];
    for (std::size_t r = 0; r < S; ++r) {
      double acc = 0.0;
      for (std::size_t s = 0; s < S; ++s) acc += hmm.a(r, s) * weighted[s];
      cur[r] = acc / fb.scale[t + 1];
    }
  }
}

void check_labels(const LabelSeq* labels, std::size_t length) {
  if (labels != nullptr && labels->size() != length) throw InvalidInput("label sequence length differs from data");
}

} // namespace

CoxianDuration CoxianDuration::geometric(double exit_prob) {
  return CoxianDuration{{1.0 - exit_prob}, {0.0}, {exit_prob}};
}

CoxianDuration CoxianDuration::with_mean(std::size_t phases, double mean, double advance_fraction) {
  if (phases == 0) throw InvalidInput("Coxian duration needs at least one phase");
  if (!(advance_fraction >= 0.0 && advance_fraction <= 1.0)) throw InvalidInput("advance fraction outside [0, 1]");
  double reach = 0.0, f = 1.0;
  for (std::size_t k = 0; k < phases; ++k, f *= advance_fraction) reach += f;
  const double q = reach / mean;
  if (!(q > 0.0 && q <= 1.0)) throw InvalidInput("mean duration too short for the phase count");
  CoxianDuration d;
  for (std::size_t k = 0; k < phases; ++k) {
    const bool last = k + 1 == phases;
    d.stay.push_back(1.0 - q);
    d.advance.push_back(last ? 0.0 : q * advance_fraction);
    d.exit.push_back(last ? q : q * (1.0 - advance_fraction));
  }
  return d;
}

void validate(const CoxianDuration& d) {
  const std::size_t m = d.phases();
  if (m == 0) throw InvalidInput("Coxian duration needs at least one phase");
  if (d.advance.size() != m || d.exit.size() != m) throw InvalidInput("Coxian phase vectors differ in length");
  for (std::size_t k = 0; k < m; ++k) {
    for (double v : {d.stay[k], d.advance[k], d.exit[k]})
      if (!(v >= 0.0 && v <= 1.0)) throw InvalidInput("Coxian probability outside [0, 1]");
    if (std::abs(d.stay[k] + d.advance[k] + d.exit[k] - 1.0) > kRowTol)
      throw InvalidInput("Coxian phase probabilities do not sum to 1");
  }
  if (d.advance.back() != 0.0) throw InvalidInput("last Coxian phase cannot advance");
}

double duration_pmf(const CoxianDuration& d, std::size_t start_phase, std::size_t t) {
  const std::size_t m = d.phases();
  if (start_phase < 1 || start_phase > m) throw InvalidInput("start phase out of range");
  if (t < 1) throw InvalidInput("duration must be at least one step");
  // Distribution over transient phases after step-1 transitions, then exit on step t.
  std::vector<double> v(m, 0.0), next(m);
  v[start_phase - 1] = 1.0;
  for (std::size_t step = 1; step < t; ++step) {
    std::fill(next.begin(), next.end(), 0.0);
    for (std::size_t k = 0; k < m; ++k) {
      next[k] += v[k] * d.stay[k];
      if (k + 1 < m) next[k + 1] += v[k] * d.advance[k];
    }
    v.swap(next);
  }
  double p = 0.0;
  for (std::size_t k = 0; k < m; ++k) p += v[k] * d.exit[k];
  return p;
}

double duration_mean(const CoxianDuration& d, std::size_t start_phase) {
  const std::size_t m = d.phases();
  if (start_phase < 1 || start_phase > m) throw InvalidInput("start phase out of range");
  double after = 0.0; // expected remaining time from phase k+1
  double mean = 0.0;
  for (std::size_t k = m; k-- > start_phase - 1;) {
    const double leave = 1.0 - d.stay[k];
    if (!(leave > 0.0)) return INFINITY;
    mean = (1.0 + d.advance[k] * after) / leave;
    after = mean;
  }
  return mean;
}

EmissionModel EmissionModel::multinomial(std::vector<double> probs) { return EmissionModel{{1.0}, {std::move(probs)}}; }

double EmissionModel::prob(std::size_t symbol) const {
  double p = 0.0;
  for (std::size_t c = 0; c < components.size(); ++c) p += weights[c] * components[c][symbol];
  return p;
}

void validate(const EmissionModel& e) {
  if (e.components.empty() || e.weights.size() != e.components.size())
    throw InvalidInput("emission model needs one weight per component");
  check_distribution(e.weights, "emission mixture weights");
  const std::size_t k = e.components.front().size();
  if (k < 2) throw InvalidInput("emission model needs at least two symbols");
  for (const auto& c : e.components) {
    if (c.size() != k) throw InvalidInput("emission components differ in symbol count");
    check_distribution(c, "emission probabilities");
  }
}

void validate(const HsmmModel& model) {
  check_distribution(model.initial, "initial macro distribution");
  for (std::size_t m = 0; m < kMacroStates; ++m) {
    validate(model.duration[m]);
    validate(model.emission[m]);
    if (model.duration[m].phases() != model.phases()) throw InvalidInput("macro states differ in phase count");
    if (model.emission[m].symbols() != model.symbols()) throw InvalidInput("macro states differ in symbol count");
    if (model.entry[m].size() != model.phases()) throw InvalidInput("entry distribution length differs from phases");
    check_distribution(model.entry[m], "entry-phase distribution");
  }
  if (!std::is_sorted(model.cuts.begin(), model.cuts.end())) throw InvalidInput("bin boundaries must be sorted");
}

ExpandedHmm expand(const HsmmModel& model) {
  validate(model);
  const std::size_t M = model.phases();
  const std::size_t K = model.symbols();
  ExpandedHmm hmm;
  hmm.states = kMacroStates * M;
  hmm.symbols = K;
  const std::size_t S = hmm.states;
  hmm.initial.assign(S, 0.0);
  hmm.transition.assign(S * S, 0.0);
  hmm.macro.assign(S, 0);
  hmm.emission.assign(S * K, 0.0);

  for (std::size_t m = 0; m < kMacroStates; ++m) {
    const std::size_t other = 1 - m;
    const auto& dur = model.duration[m];
    std::vector<double> symbol_prob(K);
    for (std::size_t o = 0; o < K; ++o) symbol_prob[o] = model.emission[m].prob(o);
    for (std::size_t k = 0; k < M; ++k) {
      const std::size_t s = m * M + k;
      hmm.macro[s] = static_cast<int>(m);
      hmm.initial[s] = model.initial[m] * model.entry[m][k];
      hmm.transition[s * S + s] += dur.stay[k];
      if (k + 1 < M) hmm.transition[s * S + s + 1] += dur.advance[k];
      for (std::size_t j = 0; j < M; ++j) hmm.transition[s * S + other * M + j] += dur.exit[k] * model.entry[other][j];
      std::copy(symbol_prob.begin(), symbol_prob.end(), hmm.emission.begin() + static_cast<std::ptrdiff_t>(s * K));
    }
  }
  return hmm;
}

std::vector<int> apply_cuts(std::span<const double> values, std::span<const double> cuts) {
  std::vector<int> out(values.size());
  for (std::size_t i = 0; i < values.size(); ++i)
    out[i] = static_cast<int>(std::upper_bound(cuts.begin(), cuts.end(), values[i]) - cuts.begin());
  return out;
}

Discretization discretize(const Trace& trace, std::size_t bins, BinScheme scheme) {
  validate(trace);
  if (bins < 2) throw InvalidInput("discretization needs at least two bins");
  Discretization d;
  std::vector<double> sorted = trace.samples;
  std::sort(sorted.begin(), sorted.end());
  const std::size_t n = sorted.size();

  if (scheme == BinScheme::EqualWidth) {
    const double lo = sorted.front(), hi = sorted.back();
    if (hi > lo) {
      for (std::size_t k = 1; k < bins; ++k)
        d.cuts.push_back(lo + (hi - lo) * static_cast<double>(k) / static_cast<double>(bins));
    } else {
      d.fell_back = true;
    }
  } else {
    std::vector<double> distinct = sorted;
    distinct.erase(std::unique(distinct.begin(), distinct.end()), distinct.end());
    if (distinct.size() < bins) {
      d.fell_back = true;
      for (std::size_t i = 1; i < distinct.size(); ++i) d.cuts.push_back(0.5 * (distinct[i - 1] + distinct[i]));
    } else {
      for (std::size_t k = 1; k < bins; ++k) {
        const std::size_t idx = std::max<std::size_t>(1, k * n / bins);
        d.cuts.push_back(0.5 * (sorted[idx - 1] + sorted[idx]));
      }
    }
  }
  d.symbols = apply_cuts(trace.samples, d.cuts);
  return d;
}

double forward_likelihood(const HsmmModel& model, std::span<const int> obs, const LabelSeq* labels) {
  if (obs.empty()) throw InvalidInput("observation sequence is empty");
  check_labels(labels, obs.size());
  const ExpandedHmm hmm = expand(model);
  check_symbols(obs, hmm.symbols);
  return run_forward(hmm, obs, labels).log_likelihood;
}

MacroPosterior macro_posteriors(const HsmmModel& model, std::span<const int> obs, const LabelSeq* labels) {
  if (obs.empty()) throw InvalidInput("observation sequence is empty");
  check_labels(labels, obs.size());
  const ExpandedHmm hmm = expand(model);
  check_symbols(obs, hmm.symbols);
  ForwardBackward fb = run_forward(hmm, obs, labels);
  run_backward(hmm, obs, labels, fb);

  MacroPosterior out;
  out.log_likelihood = fb.log_likelihood;
  out.marginal.resize(fb.T);
  for (std::size_t t = 0; t < fb.T; ++t) {
    std::array<double, kMacroStates> g{0.0, 0.0};
    double z = 0.0;
    for (std::size_t s = 0; s < fb.S; ++s) {
      const double v = fb.alpha[t * fb.S + s] * fb.beta[t * fb.S + s];
      g[static_cast<std::size_t>(hmm.macro[s])] += v;
      z += v;
    }
    for (auto& v : g) v /= z;
    out.marginal[t] = g;
  }
  return out;
}

std::vector<double> floored_distribution(std::span<const double> counts, double floor) {
  const std::size_t k = counts.size();
  if (k == 0) throw InvalidInput("empty count vector");
  if (!(floor >= 0.0) || floor * static_cast<double>(k) >= 1.0) throw InvalidInput("emission floor too large");
  const double total = std::accumulate(counts.begin(), counts.end(), 0.0);
  std::vector<double> p(k, 1.0 / static_cast<double>(k));
  if (!(total > 0.0)) return p;

  // KKT: p_i = max(floor, c_i / lambda). The floored set only grows, so this terminates in <= k rounds.
  std::vector<bool> floored(k, false);
  for (;;) {
    double free_mass = 0.0;
    std::size_t n_floored = 0;
    for (std::size_t i = 0; i < k; ++i) {
      if (floored[i]) ++n_floored;
      else free_mass += counts[i];
    }
    const double lambda = free_mass / (1.0 - floor * static_cast<double>(n_floored));
    bool changed = false;
    for (std::size_t i = 0; i < k; ++i) {
      if (!floored[i] && counts[i] < floor * lambda) {
        floored[i] = true;
        changed = true;
      }
    }
    if (!changed) {
      for (std::size_t i = 0; i < k; ++i) p[i] = floored[i] ? floor : counts[i] / lambda;
      return p;
    }
  }
}

TrainResult em_train(const HsmmModel& initial, std::span<const int> obs, const LabelSeq& labels,
                     const EmOptions& options) {
  if (obs.empty()) throw InvalidInput("observation sequence is empty");
  check_labels(&labels, obs.size());
  validate(initial);
  check_symbols(obs, initial.symbols());

  TrainResult result;
  result.model = initial;
  HsmmModel& model = result.model;
  if (options.max_iters == 0) {
    result.log_likelihood.push_back(forward_likelihood(model, obs, &labels));
    return result;
  }

  const std::size_t M = model.phases();
  const std::size_t K = model.symbols();
  const std::size_t T = obs.size();
  for (auto& em : model.emission)
    for (auto& comp : em.components) comp = floored_distribution(comp, options.emission_floor);

  for (std::size_t iter = 0; iter < options.max_iters; ++iter) {
    const ExpandedHmm hmm = expand(model);
    const std::size_t S = hmm.states;
    ForwardBackward fb = run_forward(hmm, obs, &labels);
    run_backward(hmm, obs, &labels, fb);
    result.log_likelihood.push_back(fb.log_likelihood);
    if (iter > 0) {
      const double gain = fb.log_likelihood - result.log_likelihood[iter - 1];
      if (gain < options.tol) {
        result.converged = true;
        break;
      }
    }

    // Expected counts.
    std::vector<double> gamma(T * S);
    for (std::size_t t = 0; t < T; ++t) {
      double z = 0.0;
      for (std::size_t s = 0; s < S; ++s) z += gamma[t * S + s] = fb.alpha[t * S + s] * fb.beta[t * S + s];
      for (std::size_t s = 0; s < S; ++s) gamma[t * S + s] /= z;
    }
    std::vector<double> xi(S * S, 0.0);
    std::vector<double> weighted(S);
    for (std::size_t t = 0; t + 1 < T; ++t) {
      const auto o = static_cast<std::size_t>(obs[t + 1]);
      for (std::size_t s = 0; s < S; ++s)
        weighted[s] = allowed(&labels, t + 1, hmm.macro[s]) ? hmm.b(s, o) * fb.beta[(t + 1) * S + s] : 0.0;
      const double inv = 1.0 / fb.scale[t + 1];
      for (std::size_t r = 0; r < S; ++r) {
        const double ar = fb.alpha[t * S + r] * inv;
        if (ar == 0.0) continue;
        for (std::size_t s = 0; s < S; ++s) xi[r * S + s] += ar * hmm.a(r, s) * weighted[s];
      }
    }

    HsmmModel next = model;
    double init_total = 0.0;
    for (std::size_t m = 0; m < kMacroStates; ++m) {
      double g0 = 0.0;
      for (std::size_t k = 0; k < M; ++k) g0 += gamma[m * M + k];
      next.initial[m] = g0;
      init_total += g0;
    }
    for (auto& v : next.initial) v /= init_total;

    for (std::size_t m = 0; m < kMacroStates; ++m) {
      const std::size_t other = 1 - m;
      auto& dur = next.duration[m];
      for (std::size_t k = 0; k < M; ++k) {
        const std::size_t s = m * M + k;
        const double n_stay = xi[s * S + s];
        const double n_adv = k + 1 < M ? xi[s * S + s + 1] : 0.0;
        double n_exit = 0.0;
        for (std::size_t j = 0; j < M; ++j) n_exit += xi[s * S + other * M + j];
        const double total = n_stay + n_adv + n_exit;
        if (!(total > 0.0)) continue;
        dur.stay[k] = n_stay / total;
        dur.advance[k] = n_adv / total;
        dur.exit[k] = n_exit / total;
      }

      // Emissions tied across phases; mixture components via responsibilities.
      auto& em = next.emission[m];
      const EmissionModel& old = model.emission[m];
      const std::size_t C = old.components.size();
      std::vector<std::vector<double>> counts(C, std::vector<double>(K, 0.0));
      std::vector<double> weight_counts(C, 0.0);
      for (std::size_t t = 0; t < T; ++t) {
        double g = 0.0;
        for (std::size_t k = 0; k < M; ++k) g += gamma[t * S + m * M + k];
        if (g == 0.0) continue;
        const auto o = static_cast<std::size_t>(obs[t]);
        const double mix = old.prob(o);
        for (std::size_t c = 0; c < C; ++c) {
          const double r = C == 1 ? g : g * old.weights[c] * old.components[c][o] / mix;
          counts[c][o] += r;
          weight_counts[c] += r;
        }
      }
      const double wsum = std::accumulate(weight_counts.begin(), weight_counts.end(), 0.0);
      for (std::size_t c = 0; c < C; ++c) {
        if (wsum > 0.0) em.weights[c] = weight_counts[c] / wsum;
        if (weight_counts[c] > 0.0) em.components[c] = floored_distribution(counts[c], options.emission_floor);
      }
    }
    model = std::move(next);
    result.iterations = iter + 1;
  }

  if (!result.converged) result.log_likelihood.push_back(forward_likelihood(model, obs, &labels));
  return result;
}

Decoded viterbi_decode(const HsmmModel& model, std::span<const int> obs, const DecodeOptions& options) {
  if (obs.empty()) throw InvalidInput("observation sequence is empty");
  const ExpandedHmm hmm = expand(model);
  check_symbols(obs, hmm.symbols);
  const std::size_t T = obs.size();
  const std::size_t S = hmm.states;

  auto lg = [](double p) { return p > 0.0 ? std::log(p) : -INFINITY; };
  std::vector<double> log_a(S * S);
  for (std::size_t i = 0; i < S * S; ++i) log_a[i] = lg(hmm.transition[i]);

  std::vector<double> delta(S), next(S);
  std::vector<std::size_t> back(T * S, 0);
  for (std::size_t s = 0; s < S; ++s)
    delta[s] = lg(hmm.initial[s]) + lg(hmm.b(s, static_cast<std::size_t>(obs[0])));
  for (std::size_t t = 1; t < T; ++t) {
    const auto o = static_cast<std::size_t>(obs[t]);
    for (std::size_t s = 0; s < S; ++s) {
      double best = -INFINITY;
      std::size_t arg = 0;
      for (std::size_t r = 0; r < S; ++r) {
        const double v = delta[r] + log_a[r * S + s];
        if (v > best) {
          best = v;
          arg = r;
        }
      }
      next[s] = best + lg(hmm.b(s, o));
      back[t * S + s] = arg;
    }
    delta.swap(next);
  }

  Decoded out;
  const auto last = static_cast<std::size_t>(std::max_element(delta.begin(), delta.end()) - delta.begin());
  out.log_probability = delta[last];
  if (!std::isfinite(out.log_probability)) throw NumericError("observation sequence has zero probability");
  out.path.assign(T, 0);
  out.path[T - 1] = last;
  for (std::size_t t = T - 1; t > 0; --t) out.path[t - 1] = back[t * S + out.path[t]];

  out.labels.resize(T);
  for (std::size_t t = 0; t < T; ++t) out.labels[t] = static_cast<Label>(hmm.macro[out.path[t]]);

  Trace grid;
  grid.dt = options.dt;
  grid.t0 = options.t0;
  for (std::size_t t = 0; t < T;) {
    if (out.labels[t] != Label::Dock) {
      ++t;
      continue;
    }
    std::size_t end = t;
    while (end < T && out.labels[end] == Label::Dock) ++end;
    DetectionEvent e = make_event(grid, t, end - t);
    if (e.length < options.min_dock) e.tag = "spike-like";
    else if (e.length > options.max_dock) e.tag = "anomalous";
    out.events.push_back(e);
    t = end;
  }
  return out;
}

HsmmModel initial_model(std::span<const int> obs, const LabelSeq& labels, std::size_t phases, std::size_t symbols,
                        std::size_t dock_components, std::uint64_t seed, double mean_duration,
                        double emission_floor) {
  if (symbols < 2) throw InvalidInput("emission model needs at least two symbols");
  if (dock_components == 0) throw InvalidInput("dock emission needs at least one component");
  check_symbols(obs, symbols);
  if (!labels.empty()) check_labels(&labels, obs.size());

  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> jitter(-0.01, 0.01);
  auto jittered = [&](std::vector<double> base) {
    for (auto& v : base) v *= 1.0 + jitter(rng);
    const double z = std::accumulate(base.begin(), base.end(), 0.0);
    for (auto& v : base) v /= z;
    return floored_distribution(base, emission_floor);
  };

  std::array<std::vector<double>, kMacroStates> hist;
  for (auto& h : hist) h.assign(symbols, 0.0);
  std::array<bool, kMacroStates> seen{false, false};
  for (std::size_t t = 0; t < labels.size(); ++t) {
    if (labels[t] == Label::Unlabeled) continue;
    const auto m = static_cast<std::size_t>(labels[t]);
    hist[m][static_cast<std::size_t>(obs[t])] += 1.0;
    seen[m] = true;
  }
  const bool supervised = seen[0] && seen[1];

  HsmmModel model;
  model.initial = {0.5, 0.5};
  for (std::size_t m = 0; m < kMacroStates; ++m) {
    model.duration[m] = CoxianDuration::with_mean(phases, mean_duration);
    model.entry[m].assign(phases, 0.0);
    model.entry[m][0] = 1.0;
    const std::vector<double> base =
        supervised ? floored_distribution(hist[m], emission_floor) : std::vector<double>(symbols, 1.0 / symbols);
    const std::size_t C = m == static_cast<std::size_t>(MacroState::Dock) ? dock_components : 1;
    EmissionModel em;
    for (std::size_t c = 0; c < C; ++c) {
      em.weights.push_back(1.0 / static_cast<double>(C));
      em.components.push_back(supervised && C == 1 ? base : jittered(base));
    }
    model.emission[m] = std::move(em);
  }
  return model;
}

LabelSeq labels_from_intervals(std::size_t length, std::span<const DetectionEvent> events, std::size_t context,
                               std::size_t guard) {
  LabelSeq labels(length, Label::Unlabeled);
  for (const auto& e : events) {
    const std::size_t start = std::min(e.start, length);
    const std::size_t end = std::min(e.end(), length);
    const std::size_t pre_hi = start >= guard ? start - guard : 0;
    const std::size_t pre_lo = pre_hi >= context ? pre_hi - context : 0;
    for (std::size_t i = pre_lo; i < pre_hi; ++i)
      if (labels[i] == Label::Unlabeled) labels[i] = Label::NoDock;
    const std::size_t post_lo = std::min(length, end + guard);
    const std::size_t post_hi = std::min(length, post_lo + context);
    for (std::size_t i = post_lo; i < post_hi; ++i)
      if (labels[i] == Label::Unlabeled) labels[i] = Label::NoDock;
  }
  for (const auto& e : events)
    for (std::size_t i = std::min(e.start, length); i < std::min(e.end(), length); ++i) labels[i] = Label::Dock;
  return labels;
}

} // namespace nwd
