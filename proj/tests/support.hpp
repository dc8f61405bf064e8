#pragma once

#include <cmath>
#include <random>

#include "oracle.hpp"
#include "spin7/algebra.hpp"
#include "spin7/flow.hpp"
#include "spin7/verify.hpp"

namespace testing_support {

using namespace spin7;

inline oracle::D4 dense(const FourForm& f) {
  oracle::D4 d = oracle::zero4();
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) d[oracle::k4(i, j, k, l)] = f(i, j, k, l);
  return d;
}

inline oracle::D2 dense(const Mat8& m) {
  oracle::D2 d{};
  for (int i = 0; i < 64; ++i) d[i] = m.c[i];
  return d;
}

// Max |f(i,j,k,l) - d[ijkl]| over all 8^4 index tuples.
inline double diff(const FourForm& f, const oracle::D4& d) {
  double w = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) w = std::max(w, std::abs(f(i, j, k, l) - d[oracle::k4(i, j, k, l)]));
  return w;
}

inline double diff(const Mat8& m, const oracle::D2& d) {
  double w = 0.0;
  for (int i = 0; i < 64; ++i) w = std::max(w, std::abs(m.c[i] - d[i]));
  return w;
}

inline Mat8 random_matrix(std::mt19937_64& rng) { return spin7::detail::random_matrix(rng); }
inline TwoForm random_skew(std::mt19937_64& rng) { return spin7::detail::random_skew(rng); }

inline FourForm random_four(std::mt19937_64& rng) {
  FourForm f;
  for (auto& x : f.c) x = spin7::detail::uniform_pm1(rng);
  return f;
}

inline Vec8 random_vec(std::mt19937_64& rng) {
  Vec8 v;
  for (auto& x : v.c) x = spin7::detail::uniform_pm1(rng);
  return v;
}

// Least-squares slope of log(err) against log(h).
inline double observed_order(const std::vector<double>& h, const std::vector<double>& err) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  const double n = static_cast<double>(h.size());
  for (std::size_t i = 0; i < h.size(); ++i) {
    const double x = std::log(h[i]), y = std::log(err[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

inline LatticeSpec line_spec(int n, int order = 2, double period = 1.0) {
  LatticeSpec s;
  s.active_axes = {0};
  s.n = n;
  s.period.fill(period);
  s.stencil_order = order;
  return s;
}

inline FlowState rotation_state(int n, int order = 2, double amplitude = 0.05, std::uint64_t seed = 7) {
  InitialDataParams ip;
  ip.family = "rotation-field";
  ip.amplitude = amplitude;
  ip.mode = 1;
  ip.seed = seed;
  return initial_data(ip, line_spec(n, order));
}

}  // namespace testing_support
