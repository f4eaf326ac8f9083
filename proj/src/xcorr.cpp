#include "nwd/xcorr.hpp"

#include <cmath>

namespace nwd {

Trace noise_only(const Trace& trace, const DetrendMethod& method, double lp_cutoff_hz) {
  DetrendResult d = detrend(trace, method);
  const Trace signal = low_pass(d.detrended, lp_cutoff_hz);
  for (std::size_t i = 0; i < d.detrended.size(); ++i) d.detrended.samples[i] -= signal.samples[i];
  return std::move(d.detrended);
}

XcorrResult xcorr(const Trace& a, const Trace& b, int max_lag) {
  validate(a);
  validate(b);
  const std::size_t n = a.size();
  if (b.size() != n) throw InvalidInput("cross-correlation inputs differ in length");
  if (max_lag < 0 || static_cast<std::size_t>(max_lag) >= n) throw InvalidInput("max lag must lie in [0, length)");
  if (!(population_moments(a.samples).std > 0.0) || !(population_moments(b.samples).std > 0.0))
    throw NumericError("cross-correlation input has zero variance");

  XcorrResult r;
  double best = -1.0;
  for (int lag = -max_lag; lag <= max_lag; ++lag) {
    const std::size_t shift = static_cast<std::size_t>(std::abs(lag));
    const std::size_t len = n - shift;
    const double* pa = a.samples.data() + (lag < 0 ? shift : 0);
    const double* pb = b.samples.data() + (lag > 0 ? shift : 0);
    double ma = 0.0, mb = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      ma += pa[i];
      mb += pb[i];
    }
    ma /= static_cast<double>(len);
    mb /= static_cast<double>(len);
    double sab = 0.0, saa = 0.0, sbb = 0.0;
    for (std::size_t i = 0; i < len; ++i) {
      const double da = pa[i] - ma, db = pb[i] - mb;
      sab += da * db;
      saa += da * da;
      sbb += db * db;
    }
    const double v = saa > 0.0 && sbb > 0.0 ? sab / std::sqrt(saa * sbb) : 0.0;
    r.lags.push_back(lag);
    r.values.push_back(v);
    if (std::abs(v) > best) {
      best = std::abs(v);
      r.peak_lag = lag;
      r.peak_value = v;
    }
  }
  return r;
}

Trace ensemble_subtract(const Trace& target, std::span<const Trace> references, std::span<const int> lags) {
  validate(target);
  if (references.size() != lags.size()) throw InvalidInput("one lag per reference required");
  Trace out = target;
  if (references.empty()) return out;
  const std::size_t n = target.size();
  const auto sn = static_cast<long long>(n);
  std::vector<double> estimate(n, 0.0);
  for (std::size_t r = 0; r < references.size(); ++r) {
    if (references[r].size() != n) throw InvalidInput("reference length differs from target");
    for (std::size_t i = 0; i < n; ++i) {
      const long long j = static_cast<long long>(i) + lags[r];
      if (j >= 0 && j < sn) estimate[i] += references[r].samples[static_cast<std::size_t>(j)];
    }
  }
  const double inv = 1.0 / static_cast<double>(references.size());
  for (std::size_t i = 0; i < n; ++i) out.samples[i] -= estimate[i] * inv;
  return out;
}

} // namespace nwd
