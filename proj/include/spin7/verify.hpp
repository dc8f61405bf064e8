#pragma once

#include <algorithm>
#include <cmath>
#include <random>
#include <string>
#include <vector>

#include "spin7/algebra.hpp"
#include "spin7/cayley_spinor.hpp"
#include "spin7/flow.hpp"
#include "spin7/octonion.hpp"

namespace spin7 {

struct IdentityResult {
  std::string name;
  double max_error;
  double tolerance;
  bool passed() const { return max_error < tolerance; }
};

namespace detail {

inline Mat8 random_matrix(std::mt19937_64& rng) {
  Mat8 m;
  for (auto& x : m.c) x = uniform_pm1(rng);
  return m;
}

inline Mat8 random_skew(std::mt19937_64& rng) { return skew_part(random_matrix(rng)); }

}  // namespace detail

// Seeded random rotation: rows of a random matrix orthonormalized by two Gram-Schmidt passes,
// last row flipped if needed so det = +1. Orthogonality holds to about one ulp.
inline Mat8 random_rotation(std::mt19937_64& rng) {
  Mat8 m = detail::random_matrix(rng);
  for (int pass = 0; pass < 2; ++pass)
    for (int i = 0; i < 8; ++i) {
      for (int j = 0; j < i; ++j) {
        double d = 0.0;
        for (int k = 0; k < 8; ++k) d += m(i, k) * m(j, k);
        for (int k = 0; k < 8; ++k) m(i, k) -= d * m(j, k);
      }
      double n = 0.0;
      for (int k = 0; k < 8; ++k) n += m(i, k) * m(i, k);
      n = std::sqrt(n);
      for (int k = 0; k < 8; ++k) m(i, k) /= n;
    }
  if (determinant(m) < 0)
    for (int k = 0; k < 8; ++k) m(7, k) = -m(7, k);
  return m;
}

// Algebraic identity suite for the form built from the given octonion table.
inline std::vector<IdentityResult> identity_suite(const OctonionTable& table = OctonionTable::standard(),
                                                  int rotations = 100, std::uint64_t seed = 20240917,
                                                  double tol = 1e-10) {
  std::vector<IdentityResult> out;
  std::mt19937_64 rng(seed);
  auto add = [&](const std::string& n, double e) { out.push_back({n, e, tol}); };

  double comp = 0.0, unit = 0.0;
  for (int k = 0; k < 100; ++k) {
    Octonion a, b;
    for (int i = 0; i < 8; ++i) {
      a[i] = detail::uniform_pm1(rng);
      b[i] = detail::uniform_pm1(rng);
    }
    comp = std::max(comp, std::abs(oct_norm(oct_mul(a, b, table)) - oct_norm(a) * oct_norm(b)));
    unit = std::max(unit, max_abs(oct_mul(Octonion::unit(0), b, table) - b));
  }
  add("octonion |ab| = |a||b|", comp);
  add("octonion unit law", unit);

  const FourForm phi = cayley_form(table);
  std::vector<FourForm> forms{phi};
  for (int r = 0; r < rotations; ++r) forms.push_back(rotate_form(random_rotation(rng), phi));
  double e1 = 0, e2 = 0, e3 = 0, e4 = 0, sd = 0, met = 0;
  for (const auto& f : forms) {
    e1 = std::max(e1, contraction1_residual(f));
    e2 = std::max(e2, contraction2_residual(f));
    e3 = std::max(e3, contraction3_residual(f));
    e4 = std::max(e4, contraction4_residual(f));
    sd = std::max(sd, max_abs(hodge_star4(f) - f));
  }
  for (std::size_t i = 0; i < std::min<std::size_t>(forms.size(), 6); ++i) {
    try {
      met = std::max(met, metric_deviation(forms[i]));
    } catch (const DegenerateForm&) {
      met = INFINITY;
    }
  }
  add("Phi_ijkl Phi_abcl one-index contraction", e1);
  add("Phi_ijkl Phi_abkl = 6gg - 6gg - 4Phi", e2);
  add("Phi_ijkl Phi_ajkl = 42 g", e3);
  add("Phi_ijkl Phi_ijkl = 336", e4);
  add("self-duality *Phi = Phi", sd);
  add("metric_from_form = identity", met);

  double i5 = 0, i6 = 0, i7 = 0;
  for (std::size_t i = 0; i < std::min<std::size_t>(forms.size(), 11); ++i) {
    const FourForm d = diamond(detail::random_skew(rng), forms[i]);
    i5 = std::max(i5, tangent_contraction2_residual(d, forms[i]));
    i6 = std::max(i6, tangent_contraction3_residual(d, forms[i]));
    i7 = std::max(i7, tangent_contraction4_residual(d, forms[i]));
  }
  add("two-index contraction on orbit tangents", i5);
  add("three-index contraction on orbit tangents", i6);
  add("full contraction on orbit tangents", i7);

  const TwoForm b = detail::random_skew(rng);
  const TwoForm b7 = pi7(b, phi), b21 = pi21(b, phi);
  add("pi7 eigenvalue -6", max_abs(contract_pair(b7, phi) + 6.0 * b7));
  add("pi21 eigenvalue 2", max_abs(contract_pair(b21, phi) - 2.0 * b21));
  add("pi7 idempotent", max_abs(pi7(b7, phi) - b7));
  add("Omega^2_21 four-term identity", omega21_identity_residual(b21, phi));

  add("g <> Phi = 4 Phi", max_abs(diamond(Mat8::identity(), phi) - 4.0 * phi));
  add("Omega^2_21 <> Phi = 0", max_abs(diamond(b21, phi)));
  add("(beta7 <> Phi) _|3 Phi = 96 beta7", max_abs(triple_contract(diamond(b7, phi), phi) - 96.0 * b7));
  const Mat8 a = detail::random_matrix(rng);
  const Mat8 abar = (0.25 * trace(a)) * Mat8::identity() - transpose(a);
  add("*(A <> Phi) = Abar <> Phi", max_abs(hodge_star4(diamond(a, phi)) - diamond(abar, phi)));

  add("Lambda(Phi) = -24 Phi", max_abs(lambda_op(phi, phi) + 24.0 * phi));
  const Mat8 s0 = sym_part(a) - (trace(a) / 8.0) * Mat8::identity();
  add("Lambda(S0 <> Phi) = 0", max_abs(lambda_op(diamond(s0, phi), phi)));
  const FourForm x7 = diamond(b7, phi);
  add("Lambda(X7 <> Phi) = -12 X7 <> Phi", max_abs(lambda_op(x7, phi) + 12.0 * x7));

  add("Theta_{0,1} = Phi", max_abs(theta_form(Vec8::unit(0), table) - phi));
  const Mat8 r = so8_exp(b21);
  add("exp(Omega^2_21) fixes Phi", max_abs(rotate_form(r, phi) - phi));
  return out;
}

}  // namespace spin7
