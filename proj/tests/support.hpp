// Small helpers shared by the test files.
#pragma once

#include <cmath>
#include <cstdint>
#include <filesystem>
#include <fstream>
#include <iterator>
#include <string>
#include <random>
#include <vector>

#include "nwd/trace.hpp"

#include <unistd.h>

namespace testing {

inline std::vector<double> gaussian(std::size_t n, double sigma, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> nd(0.0, sigma);
  std::vector<double> v(n);
  for (auto& x : v) x = nd(rng);
  return v;
}

inline nwd::Trace make_trace(std::vector<double> samples, double dt = 1.0) {
  nwd::Trace t;
  t.samples = std::move(samples);
  t.dt = dt;
  return t;
}

inline double mean(const std::vector<double>& v) {
  double s = 0.0;
  for (double x : v) s += x;
  return s / static_cast<double>(v.size());
}

inline double variance(const std::vector<double>& v) {
  const double m = mean(v);
  double s = 0.0;
  for (double x : v) s += (x - m) * (x - m);
  return s / static_cast<double>(v.size());
}

inline nwd::EventSpec binding(double onset, double duration, double amplitude) {
  return {nwd::EventKind::SpecificBinding, onset, duration, amplitude};
}

inline nwd::EventSpec spike(double onset, double amplitude, double duration = 1.0) {
  return {nwd::EventKind::TransientSpike, onset, duration, amplitude};
}

/// Scratch directory removed on destruction.
struct TempDir {
  std::filesystem::path path;
  TempDir() {
    static int counter = 0;
    path = std::filesystem::temp_directory_path() /
           ("nwd_test_" + std::to_string(::getpid()) + "_" + std::to_string(counter++));
    std::filesystem::remove_all(path);
    std::filesystem::create_directories(path);
  }
  ~TempDir() { std::filesystem::remove_all(path); }
  TempDir(const TempDir&) = delete;
  TempDir& operator=(const TempDir&) = delete;
  std::filesystem::path operator/(const std::string& name) const { return path / name; }
};

inline std::string slurp(const std::filesystem::path& p) {
  std::ifstream in(p, std::ios::binary);
  return {std::istreambuf_iterator<char>(in), {}};
}

inline void write_text(const std::filesystem::path& p, const std::string& text) {
  std::ofstream(p, std::ios::binary) << text;
}

} // namespace testing
