#include <doctest.h>

#include <algorithm>
#include <numeric>
#include <random>

#include "hsmm_oracles.hpp"
#include "nwd/hsmm.hpp"
#include "support.hpp"

using namespace nwd;

namespace {

std::vector<int> random_obs(std::size_t T, std::size_t K, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_int_distribution<int> u(0, static_cast<int>(K) - 1);
  std::vector<int> obs(T);
  for (auto& o : obs) o = u(rng);
  return obs;
}

// Draws a macro-state and symbol sequence from the expanded chain.
std::pair<std::vector<int>, LabelSeq> sample(const HsmmModel& m, std::size_t T, std::uint64_t seed) {
  const ExpandedHmm h = expand(m);
  std::mt19937_64 rng(seed);
  auto draw = [&](auto weight, std::size_t n) {
    std::uniform_real_distribution<double> u(0.0, 1.0);
    double r = u(rng);
    for (std::size_t i = 0; i < n; ++i) {
      r -= weight(i);
      if (r <= 0.0) return i;
    }
    return n - 1;
  };
  std::vector<int> obs(T);
  LabelSeq labels(T);
  std::size_t s = draw([&](std::size_t i) { return h.initial[i]; }, h.states);
  for (std::size_t t = 0; t < T; ++t) {
    if (t > 0) s = draw([&](std::size_t j) { return h.a(s, j); }, h.states);
    obs[t] = static_cast<int>(draw([&](std::size_t o) { return h.b(s, o); }, h.symbols));
    labels[t] = static_cast<Label>(h.macro[s]);
  }
  return {obs, labels};
}

} // namespace

TEST_CASE("single-phase Coxian is geometric") {
  const auto d = CoxianDuration::geometric(0.5);
  for (std::size_t t = 1; t <= 30; ++t) CHECK(duration_pmf(d, 1, t) == std::pow(0.5, static_cast<double>(t)));
}

TEST_CASE("duration pmf sums to one") {
  std::mt19937_64 rng(4);
  for (std::size_t M : {1u, 2u, 3u}) {
    const auto d = oracle::random_coxian(M, rng);
    for (std::size_t k = 1; k <= M; ++k) {
      double total = 0.0, tail = 1.0;
      for (std::size_t t = 1; tail > 1e-13; ++t) {
        const double p = duration_pmf(d, k, t);
        total += p;
        tail = 1.0 - total;
      }
      CHECK(std::abs(total - 1.0) < 1e-12);
    }
  }
}

TEST_CASE("duration pmf agrees with random walks through the phases") {
  std::mt19937_64 rng(12);
  const auto d = oracle::random_coxian(2, rng);
  constexpr std::size_t kWalks = 1000000;
  std::vector<double> counts(21, 0.0);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  for (std::size_t w = 0; w < kWalks; ++w) {
    std::size_t k = 0;
    for (std::size_t t = 1; t <= 20; ++t) {
      const double r = u(rng);
      if (r < d.stay[k]) continue;
      if (r < d.stay[k] + d.advance[k]) {
        ++k;
        continue;
      }
      counts[t] += 1.0;
      break;
    }
  }
  for (std::size_t t = 1; t <= 20; ++t) {
    const double p = duration_pmf(d, 1, t);
    const double se = std::sqrt(p * (1.0 - p) / kWalks);
    CHECK(std::abs(counts[t] / kWalks - p) <= 3.0 * se);
  }
}

TEST_CASE("blocked advance leaves a geometric duration") {
  const CoxianDuration d{{0.6, 0.9}, {0.0, 0.0}, {0.4, 0.1}};
  for (std::size_t t = 1; t <= 20; ++t)
    CHECK(duration_pmf(d, 1, t) == doctest::Approx(0.4 * std::pow(0.6, static_cast<double>(t - 1))).epsilon(1e-14));
}

TEST_CASE("two phases can produce a non-monotone duration law") {
  // Near-certain advance out of phase one, then a slow second phase: the mode sits away from t = 1.
  const CoxianDuration d{{0.0, 0.9}, {0.99, 0.0}, {0.01, 0.1}};
  const double p1 = duration_pmf(d, 1, 1), p2 = duration_pmf(d, 1, 2), p3 = duration_pmf(d, 1, 3);
  CHECK(p2 > p1);
  CHECK(p3 < p2);
}

TEST_CASE("mean-targeted Coxian hits its mean") {
  for (std::size_t M : {1u, 2u, 4u}) {
    const auto d = CoxianDuration::with_mean(M, 20.0);
    CHECK_NOTHROW(validate(d));
    CHECK(duration_mean(d, 1) == doctest::Approx(20.0).epsilon(1e-12));
    double m = 0.0;
    for (std::size_t t = 1; t < 5000; ++t) m += static_cast<double>(t) * duration_pmf(d, 1, t);
    CHECK(m == doctest::Approx(20.0).epsilon(1e-9));
  }
}

TEST_CASE("expanded chain is row-stochastic and ties emissions per macro state") {
  const HsmmModel m = oracle::random_model(3, 4, 2);
  const ExpandedHmm h = expand(m);
  CHECK(h.states == 6);
  CHECK(std::abs(std::accumulate(h.initial.begin(), h.initial.end(), 0.0) - 1.0) < 1e-12);
  for (std::size_t s = 0; s < h.states; ++s) {
    double row = 0.0;
    for (std::size_t j = 0; j < h.states; ++j) {
      row += h.a(s, j);
      CHECK(h.a(s, j) == doctest::Approx(oracle::step(m, s, j)).epsilon(1e-15));
    }
    CHECK(std::abs(row - 1.0) < 1e-12);
    for (std::size_t o = 0; o < 4; ++o) CHECK(h.b(s, o) == h.b(h.macro[s] * 3, o));
  }
}

TEST_CASE("one phase per state is an ordinary two-state HMM") {
  HsmmModel m = oracle::random_model(1, 2, 8);
  const ExpandedHmm h = expand(m);
  REQUIRE(h.states == 2);
  CHECK(h.a(0, 1) == m.duration[0].exit[0]);
  CHECK(h.a(1, 0) == m.duration[1].exit[0]);
  // Plain HMM forward recursion written out for this case.
  const std::vector<int> obs{0, 1, 1, 0, 1};
  std::array<double, 2> alpha{m.initial[0] * oracle::emit(m, 0, obs[0]), m.initial[1] * oracle::emit(m, 1, obs[0])};
  for (std::size_t t = 1; t < obs.size(); ++t) {
    const double e0 = m.duration[0].exit[0], e1 = m.duration[1].exit[0];
    alpha = {(alpha[0] * (1 - e0) + alpha[1] * e1) * oracle::emit(m, 0, obs[t]),
             (alpha[0] * e0 + alpha[1] * (1 - e1)) * oracle::emit(m, 1, obs[t])};
  }
  CHECK(forward_likelihood(m, obs) == doctest::Approx(std::log(alpha[0] + alpha[1])).epsilon(1e-13));
}

TEST_CASE("single-step likelihood by definition") {
  const HsmmModel m = oracle::random_model(2, 3, 31);
  const std::vector<int> obs{2};
  double p = 0.0;
  for (std::size_t s = 0; s < 2; ++s)
    for (std::size_t k = 0; k < 2; ++k) p += m.initial[s] * m.entry[s][k] * oracle::emit(m, s, 2);
  CHECK(forward_likelihood(m, obs) == doctest::Approx(std::log(p)).epsilon(1e-14));
}

TEST_CASE("forward likelihood equals exhaustive enumeration") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const HsmmModel m = oracle::random_model(2, 2, seed);
    const auto obs = random_obs(4, 2, seed + 100);
    CHECK(std::abs(forward_likelihood(m, obs) - oracle::enumerate_loglik(m, obs)) < 1e-10);
  }
}

TEST_CASE("expanded chain equals the duration-explicit segment sum") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    for (std::size_t M : {1u, 2u}) {
      const HsmmModel m = oracle::random_model(M, 3, 50 + seed);
      const auto obs = random_obs(6, 3, seed);
      CHECK(std::abs(forward_likelihood(m, obs) - oracle::segment_loglik(m, obs)) < 1e-10);
    }
  }
}

TEST_CASE("labels restrict the sum to consistent paths") {
  const HsmmModel m = oracle::random_model(2, 2, 77);
  const auto obs = random_obs(4, 2, 3);
  const LabelSeq full{Label::Dock, Label::Dock, Label::NoDock, Label::NoDock};
  const LabelSeq partial{Label::Unlabeled, Label::Dock, Label::Unlabeled, Label::NoDock};
  CHECK(std::abs(forward_likelihood(m, obs, &full) - oracle::enumerate_loglik(m, obs, &full)) < 1e-10);
  CHECK(std::abs(forward_likelihood(m, obs, &partial) - oracle::enumerate_loglik(m, obs, &partial)) < 1e-10);
}

TEST_CASE("labels the model cannot produce are reported") {
  HsmmModel m = oracle::random_model(1, 2, 5);
  m.emission[1] = EmissionModel::multinomial({1.0, 0.0});
  const std::vector<int> obs{1, 0};
  const LabelSeq labels{Label::Dock, Label::Unlabeled};
  CHECK_THROWS_WITH_AS(forward_likelihood(m, obs, &labels), "labels inconsistent with model support", NumericError);
}

TEST_CASE("macro posteriors are normalized and respect clamping") {
  const HsmmModel m = oracle::random_model(2, 3, 9);
  const auto obs = random_obs(40, 3, 9);
  LabelSeq labels(40, Label::Unlabeled);
  labels[5] = Label::Dock;
  labels[20] = Label::NoDock;
  const auto post = macro_posteriors(m, obs, &labels);
  for (const auto& g : post.marginal) CHECK(std::abs(g[0] + g[1] - 1.0) < 1e-12);
  CHECK(post.marginal[5][1] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post.marginal[20][0] == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(post.log_likelihood == doctest::Approx(forward_likelihood(m, obs, &labels)).epsilon(1e-12));
}

TEST_CASE("Viterbi path probability equals the exhaustive maximum") {
  for (std::uint64_t seed = 0; seed < 10; ++seed) {
    const HsmmModel m = oracle::random_model(2, 3, 200 + seed);
    const auto obs = random_obs(6, 3, seed);
    const Decoded d = viterbi_decode(m, obs);
    CHECK(std::abs(d.log_probability - oracle::enumerate_viterbi(m, obs)) < 1e-10);
    CHECK(std::log(oracle::path_prob(m, d.path, obs)) == doctest::Approx(d.log_probability).epsilon(1e-12));
  }
}

TEST_CASE("separable emissions decode to the indicated states") {
  HsmmModel m;
  for (std::size_t s = 0; s < 2; ++s) {
    m.duration[s] = CoxianDuration::with_mean(2, 5.0);
    m.entry[s] = {1.0, 0.0};
  }
  m.emission[0] = EmissionModel::multinomial({0.999, 0.001});
  m.emission[1] = EmissionModel::multinomial({0.001, 0.999});
  const std::vector<int> obs{0, 0, 0, 0, 1, 1, 1, 1, 1, 1, 0, 0, 0, 0, 0, 1, 1, 1, 1, 0};
  const Decoded d = viterbi_decode(m, obs);
  for (std::size_t t = 0; t < obs.size(); ++t) CHECK(static_cast<int>(d.labels[t]) == obs[t]);
  REQUIRE(d.events.size() == 2);
  CHECK(d.events[0].start == 4);
  CHECK(d.events[0].length == 6);
}

TEST_CASE("short and long dock runs are tagged") {
  HsmmModel m;
  for (std::size_t s = 0; s < 2; ++s) {
    m.duration[s] = CoxianDuration::geometric(0.2);
    m.entry[s] = {1.0};
  }
  m.emission[0] = EmissionModel::multinomial({0.999, 0.001});
  m.emission[1] = EmissionModel::multinomial({0.001, 0.999});
  std::vector<int> obs(60, 0);
  std::fill(obs.begin() + 10, obs.begin() + 12, 1);
  std::fill(obs.begin() + 30, obs.begin() + 50, 1);
  DecodeOptions opts;
  opts.max_dock = 15;
  const Decoded d = viterbi_decode(m, obs, opts);
  REQUIRE(d.events.size() == 2);
  CHECK(d.events[0].tag == "spike-like");
  CHECK(d.events[1].tag == "anomalous");
}

TEST_CASE("discretization") {
  const Discretization two = discretize(testing::make_trace({-1.0, 1.0}), 2, BinScheme::EqualWidth);
  CHECK(two.symbols == std::vector<int>{0, 1});

  const Trace g = testing::make_trace(testing::gaussian(1000, 1.0, 14));
  const Discretization q = discretize(g, 4, BinScheme::Quantile);
  std::vector<int> occ(4, 0);
  for (int s : q.symbols) ++occ[s];
  for (int c : occ) CHECK(std::abs(c - 250) <= 40);

  std::vector<double> sorted = g.samples;
  std::sort(sorted.begin(), sorted.end());
  const auto sym = apply_cuts(sorted, q.cuts);
  CHECK(std::is_sorted(sym.begin(), sym.end()));

  const Discretization few = discretize(testing::make_trace({1, 2, 2, 3, 1}), 8, BinScheme::Quantile);
  CHECK(few.fell_back);
  CHECK(few.symbols == std::vector<int>{0, 1, 1, 2, 0});
  CHECK_THROWS_AS(discretize(g, 1, BinScheme::Quantile), InvalidInput);
}

TEST_CASE("floored maximizer is feasible and optimal") {
  const std::vector<double> counts{50, 0, 3, 0.0001, 20};
  const double floor = 0.01;
  const auto p = floored_distribution(counts, floor);
  CHECK(std::abs(std::accumulate(p.begin(), p.end(), 0.0) - 1.0) < 1e-12);
  for (double v : p) CHECK(v >= floor - 1e-15);
  auto objective = [&](const std::vector<double>& q) {
    double s = 0.0;
    for (std::size_t i = 0; i < q.size(); ++i) s += counts[i] * std::log(q[i]);
    return s;
  };
  std::mt19937_64 rng(1);
  for (int trial = 0; trial < 2000; ++trial) {
    auto q = oracle::random_simplex(5, rng, 0.0);
    for (auto& v : q) v = floor + (1.0 - 5 * floor) * v;
    CHECK(objective(q) <= objective(p) + 1e-9);
  }
}

TEST_CASE("zero EM iterations returns the starting model") {
  HsmmModel m = oracle::random_model(2, 3, 1);
  const auto obs = random_obs(30, 3, 1);
  EmOptions opts;
  opts.max_iters = 0;
  const TrainResult r = em_train(m, obs, LabelSeq(30, Label::Unlabeled), opts);
  CHECK(r.iterations == 0);
  CHECK(r.model.emission[0].components == m.emission[0].components);
  CHECK(r.model.duration[1].stay == m.duration[1].stay);
  CHECK(r.model.initial == m.initial);
}

TEST_CASE("fully labeled refit recovers emissions") {
  HsmmModel truth;
  for (std::size_t s = 0; s < 2; ++s) {
    truth.duration[s] = CoxianDuration::geometric(0.05);
    truth.entry[s] = {1.0};
  }
  truth.emission[0] = EmissionModel::multinomial({0.8, 0.2});
  truth.emission[1] = EmissionModel::multinomial({0.3, 0.7});
  const auto [obs, labels] = sample(truth, 5000, 42);
  const HsmmModel start = initial_model(obs, LabelSeq(obs.size(), Label::Unlabeled), 1, 2, 1, 3);
  const TrainResult r = em_train(start, obs, labels);
  CHECK(r.model.emission[0].components[0][0] == doctest::Approx(0.8).epsilon(0.0625));
  CHECK(r.model.emission[1].components[0][1] == doctest::Approx(0.7).epsilon(0.0714));
  CHECK(std::abs(r.model.duration[0].exit[0] - 0.05) < 0.02);
}

TEST_CASE("EM never lowers the likelihood") {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    const HsmmModel truth = oracle::random_model(2, 4, seed);
    const auto [obs, labels] = sample(truth, 300, seed);
    LabelSeq partial(labels.size(), Label::Unlabeled);
    for (std::size_t t = 0; t < 60; ++t) partial[t] = labels[t];
    EmOptions opts;
    opts.max_iters = 30;
    opts.tol = 0.0;
    const TrainResult r = em_train(oracle::random_model(2, 4, seed + 1000, false, 2), obs, partial, opts);
    for (std::size_t i = 1; i < r.log_likelihood.size(); ++i)
      CHECK(r.log_likelihood[i] >= r.log_likelihood[i - 1] - 1e-9);
  }
}

TEST_CASE("training rejects empty observations") {
  const HsmmModel m = oracle::random_model(1, 2, 1);
  CHECK_THROWS_AS(em_train(m, std::vector<int>{}, LabelSeq{}), InvalidInput);
}

TEST_CASE("labels from detection intervals") {
  std::vector<DetectionEvent> ev(1);
  ev[0].start = 10;
  ev[0].length = 5;
  const LabelSeq l = labels_from_intervals(30, ev, 3, 1);
  CHECK(l[5] == Label::Unlabeled);
  CHECK(l[6] == Label::NoDock);
  CHECK(l[8] == Label::NoDock);
  CHECK(l[9] == Label::Unlabeled);
  CHECK(l[10] == Label::Dock);
  CHECK(l[14] == Label::Dock);
  CHECK(l[15] == Label::Unlabeled);
  CHECK(l[16] == Label::NoDock);
  CHECK(l[18] == Label::NoDock);
  CHECK(l[19] == Label::Unlabeled);
}
