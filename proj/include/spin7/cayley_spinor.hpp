#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <vector>

#include "spin7/algebra.hpp"
#include "spin7/forms.hpp"
#include "spin7/octonion.hpp"

namespace spin7 {

struct InadmissibleForm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

// Theta_{0,X}(a,b,c,d) = Phi_0(a X, b, c, d) antisymmetrized over all slots.
// With (R_X)_{ip} = (e_i X)_p this equals (1/4) (R_X <> Phi_0).
inline Endo8 right_mult_matrix(const Vec8& x, const OctonionTable& t = OctonionTable::standard()) {
  Endo8 r;
  const Octonion ox = Octonion::from(x);
  for (int i = 0; i < 8; ++i) {
    const Octonion p = oct_mul(Octonion::unit(i), ox, t);
    for (int q = 0; q < 8; ++q) r(i, q) = p[q];
  }
  return r;
}

inline FourForm theta_form(const Vec8& x, const OctonionTable& t = OctonionTable::standard()) {
  return 0.25 * diamond(right_mult_matrix(x, t), cayley_form(t));
}

struct BryantPoint {
  double f = 1.0;
  Vec8 x{};
};

struct BryantCoefficients {
  double alpha = 2.0;
  double beta = 8.0;
};

// X ^ (X _| Phi_0) with the wedge normalized as Alt(X (x) gamma), i.e. one
// quarter of the determinant-convention wedge.
inline FourForm bryant_quadratic_term(const Vec8& x, const FourForm& phi0) {
  return 0.25 * wedge(x, interior(x, phi0));
}

// (f^2 - |X|^2) Phi_0 + alpha f Theta_{0,X} + beta X ^ (X _| Phi_0).
inline FourForm bryant_form(const BryantPoint& p, BryantCoefficients k = {},
                            const OctonionTable& t = OctonionTable::standard()) {
  const double xx = dot(p.x, p.x);
  if (std::abs(p.f * p.f + xx - 1.0) > 1e-12)
    throw std::invalid_argument("bryant_form: f^2 + |X|^2 must equal 1");
  const FourForm phi0 = cayley_form(t);
  return (p.f * p.f - xx) * phi0 + (k.alpha * p.f) * theta_form(p.x, t) +
         k.beta * bryant_quadratic_term(p.x, phi0);
}

// Validates bryant_form outputs; throws InadmissibleForm with the worst residual.
inline FourForm bryant_form_checked(const BryantPoint& p, BryantCoefficients k = {}, double tol = 1e-8) {
  const FourForm s = bryant_form(p, k);
  const Admissibility a = admissibility(s);
  if (!a.ok(tol))
    throw InadmissibleForm("bryant_form output fails admissibility (worst residual " +
                           std::to_string(a.worst()) + ")");
  return s;
}

struct CoefficientSearch {
  double alpha = 0, beta = 0, residual = INFINITY;
  int evaluations = 0;
};

// Cheap admissibility defect used by the coefficient search.
inline double orbit_defect(const FourForm& s) {
  return contraction2_residual(s) + max_abs(hodge_star4(s) - s);
}

// Smallest-defect (alpha, beta) over sample points: coarse grid, then compass search.
inline CoefficientSearch bryant_coefficient_search(const std::vector<BryantPoint>& pts,
                                                   double range = 8.0, double grid = 0.5) {
  const FourForm phi0 = cayley_form();
  struct Parts {
    FourForm base, th, quad;
  };
  std::vector<Parts> parts;
  for (const auto& p : pts)
    parts.push_back({(p.f * p.f - dot(p.x, p.x)) * phi0, p.f * theta_form(p.x),
                     bryant_quadratic_term(p.x, phi0)});
  CoefficientSearch best;
  auto eval = [&](double a, double b) {
    ++best.evaluations;
    double w = 0.0;
    for (const auto& q : parts) w = std::max(w, orbit_defect(q.base + a * q.th + b * q.quad));
    return w;
  };
  for (double a = -range; a <= range + 1e-12; a += grid)
    for (double b = -range; b <= range + 1e-12; b += grid) {
      const double r = eval(a, b);
      if (r < best.residual) best = {a, b, r, best.evaluations};
    }
  double step = grid / 2;
  while (step > 1e-10) {
    bool moved = false;
    const double da[4] = {step, -step, 0, 0}, db[4] = {0, 0, step, -step};
    for (int d = 0; d < 4; ++d) {
      const double r = eval(best.alpha + da[d], best.beta + db[d]);
      if (r < best.residual) {
        best.alpha += da[d];
        best.beta += db[d];
        best.residual = r;
        moved = true;
      }
    }
    if (!moved) step /= 2;
  }
  return best;
}

// e^A for skew A by scaling and squaring around a truncated Taylor series.
inline Mat8 so8_exp(const Mat8& a) {
  const double amax = max_abs(a);
  if (max_abs(a + transpose(a)) > 1e-12 * std::max(1.0, amax))
    throw std::invalid_argument("so8_exp: generator is not skew");
  double norm1 = 0.0;
  for (int j = 0; j < 8; ++j) {
    double s = 0.0;
    for (int i = 0; i < 8; ++i) s += std::abs(a(i, j));
    norm1 = std::max(norm1, s);
  }
  int squarings = 0;
  if (norm1 > 0.5) squarings = static_cast<int>(std::ceil(std::log2(norm1 / 0.5)));
  const Mat8 b = std::ldexp(1.0, -squarings) * a;
  Mat8 r = Mat8::identity();
  Mat8 term = Mat8::identity();
  for (int k = 1; k <= 18; ++k) {
    term = (1.0 / k) * (term * b);
    if (max_abs(term) == 0.0) break;
    r += term;
  }
  for (int s = 0; s < squarings; ++s) r = r * r;
  return r;
}

namespace detail {

// kBP[b][P] = lookup3(b, P0, P1).
inline constexpr auto kBP = [] {
  std::array<std::array<std::int8_t, 28>, 8> t{};
  for (int b = 0; b < 8; ++b)
    for (int p = 0; p < 28; ++p)
      t[b][p] = static_cast<std::int8_t>(lookup3(b, kPairs[p][0], kPairs[p][1]));
  return t;
}();

inline double tget(const std::array<double, 56>& u, int e) {
  return e == 0 ? 0.0 : (e > 0 ? u[e - 1] : -u[-e - 1]);
}

}  // namespace detail

// sigma'_{ijkl} = R_ia R_jb R_kc R_ld sigma_abcd, contracted one slot at a time.
inline FourForm rotate_form_unchecked(const Mat8& r, const FourForm& s) {
  detail::Gather g;
  detail::gather(s, g);
  std::array<std::array<double, 56>, 8> u1{};
  for (int i = 0; i < 8; ++i)
    for (int a = 0; a < 8; ++a) {
      const double ria = r(i, a);
      if (ria == 0.0) continue;
      for (int t = 0; t < 56; ++t) u1[i][t] += ria * g[a][t];
    }
  // u2[ij][cd] for i<j
  std::array<std::array<double, 28>, 28> u2{};
  for (int p = 0; p < 28; ++p) {
    const int i = kPairs[p][0], j = kPairs[p][1];
    for (int q = 0; q < 28; ++q) {
      double acc = 0.0;
      for (int b = 0; b < 8; ++b) acc += r(j, b) * detail::tget(u1[i], detail::kBP[b][q]);
      u2[p][q] = acc;
    }
  }
  // u3[ijk][d] for i<j<k
  std::array<std::array<double, 8>, 56> u3{};
  for (int t = 0; t < 56; ++t) {
    const int i = kTriples[t][0], j = kTriples[t][1], k = kTriples[t][2];
    const int pij = detail::kPairIndex[i][j] - 1;
    for (int d = 0; d < 8; ++d) {
      double acc = 0.0;
      for (int c = 0; c < 8; ++c) {
        if (c == d) continue;
        const int e = detail::kPairIndex[c][d];
        const double v = e > 0 ? u2[pij][e - 1] : -u2[pij][-e - 1];
        acc += r(k, c) * v;
      }
      u3[t][d] = acc;
    }
  }
  FourForm out;
  for (int n = 0; n < 70; ++n) {
    const int l = kQuads[n][3];
    const int t = detail::kQuadDrop[n][3];
    double acc = 0.0;
    for (int d = 0; d < 8; ++d) acc += r(l, d) * u3[t][d];
    out.c[n] = acc;
  }
  return out;
}

inline FourForm rotate_form(const Mat8& r, const FourForm& s) {
  if (std::abs(determinant(r)) < 1e-14) throw std::invalid_argument("rotate_form: singular matrix");
  return rotate_form_unchecked(r, s);
}

}  // namespace spin7
