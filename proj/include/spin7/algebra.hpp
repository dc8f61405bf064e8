#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>
#include <string>

#include "spin7/forms.hpp"
#include "spin7/octonion.hpp"

namespace spin7 {

struct DegenerateForm : std::runtime_error {
  using std::runtime_error::runtime_error;
};

namespace detail {

// kAT[a][t] = lookup4(a, t0, t1, t2) for the canonical triple t.
inline constexpr auto kAT = [] {
  std::array<std::array<std::int8_t, 56>, 8> t{};
  for (int a = 0; a < 8; ++a)
    for (int n = 0; n < 56; ++n)
      t[a][n] = static_cast<std::int8_t>(lookup4(a, kTriples[n][0], kTriples[n][1], kTriples[n][2]));
  return t;
}();

// kPP[P][Q] = lookup4(P0, P1, Q0, Q1) for canonical pairs P, Q.
inline constexpr auto kPP = [] {
  std::array<std::array<std::int8_t, 28>, 28> t{};
  for (int p = 0; p < 28; ++p)
    for (int q = 0; q < 28; ++q)
      t[p][q] = static_cast<std::int8_t>(lookup4(kPairs[p][0], kPairs[p][1], kPairs[q][0], kPairs[q][1]));
  return t;
}();

// Canonical pair index of (i, j), i != j, and the sign of the reordering.
inline constexpr auto kPairIndex = [] {
  std::array<std::array<std::int8_t, 8>, 8> t{};
  for (int p = 0; p < 28; ++p) {
    t[kPairs[p][0]][kPairs[p][1]] = static_cast<std::int8_t>(p + 1);
    t[kPairs[p][1]][kPairs[p][0]] = static_cast<std::int8_t>(-(p + 1));
  }
  return t;
}();

// For quad n and slot r: canonical triple index of the other three indices.
inline constexpr auto kQuadDrop = [] {
  std::array<std::array<std::uint8_t, 4>, 70> t{};
  for (int n = 0; n < 70; ++n)
    for (int r = 0; r < 4; ++r) {
      int rest[3];
      int m = 0;
      for (int s = 0; s < 4; ++s)
        if (s != r) rest[m++] = kQuads[n][s];
      t[n][r] = static_cast<std::uint8_t>(lookup3(rest[0], rest[1], rest[2]) - 1);
    }
  return t;
}();

inline double sgn_get(const FourForm& s, int e) {
  return e == 0 ? 0.0 : (e > 0 ? s.c[e - 1] : -s.c[-e - 1]);
}

// X(a, t) for every a and canonical triple t.
using Gather = std::array<std::array<double, 56>, 8>;
inline void gather(const FourForm& s, Gather& g) {
  for (int a = 0; a < 8; ++a)
    for (int n = 0; n < 56; ++n) g[a][n] = sgn_get(s, kAT[a][n]);
}

// Splits of 7 ordered positions into blocks of sizes (2,2,3) and (3,4), with signs.
struct Split223 {
  std::uint8_t p[7];
  std::int8_t sign;
};
struct Split34 {
  std::uint8_t p[7];
  std::int8_t sign;
};

inline constexpr auto kSplit223 = [] {
  std::array<Split223, 210> out{};
  int n = 0;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b)
      for (int c = 0; c < 7; ++c)
        for (int d = c + 1; d < 7; ++d) {
          if (c == a || c == b || d == a || d == b) continue;
          int perm[7] = {a, b, c, d, 0, 0, 0};
          int m = 4;
          for (int e = 0; e < 7; ++e)
            if (e != a && e != b && e != c && e != d) perm[m++] = e;
          for (int i = 0; i < 7; ++i) out[n].p[i] = static_cast<std::uint8_t>(perm[i]);
          out[n].sign = static_cast<std::int8_t>(perm_sign(perm, 7));
          ++n;
        }
  return out;
}();

inline constexpr auto kSplit34 = [] {
  std::array<Split34, 35> out{};
  int n = 0;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b)
      for (int c = b + 1; c < 7; ++c) {
        int perm[7] = {a, b, c, 0, 0, 0, 0};
        int m = 3;
        for (int e = 0; e < 7; ++e)
          if (e != a && e != b && e != c) perm[m++] = e;
        for (int i = 0; i < 7; ++i) out[n].p[i] = static_cast<std::uint8_t>(perm[i]);
        out[n].sign = static_cast<std::int8_t>(perm_sign(perm, 7));
        ++n;
      }
  return out;
}();

// Position-pair index among the 21 pairs of 7 positions.
inline constexpr auto kPos7Pair = [] {
  std::array<std::array<std::int8_t, 7>, 7> t{};
  int n = 0;
  for (int a = 0; a < 7; ++a)
    for (int b = a + 1; b < 7; ++b) {
      t[a][b] = static_cast<std::int8_t>(n);
      t[b][a] = static_cast<std::int8_t>(n);
      ++n;
    }
  return t;
}();

}  // namespace detail

// Phi_0(x,y,z,w) = <x, y (zbar w)>, antisymmetrized over the four slots.
inline FourForm cayley_form(const OctonionTable& t = OctonionTable::standard()) {
  FourForm f;
  for (std::size_t n = 0; n < 70; ++n) {
    const auto& q = kQuads[n];
    int p[4] = {0, 1, 2, 3};
    double s = 0.0;
    do {
      const Octonion x = Octonion::unit(q[p[0]]);
      const Octonion zw = oct_mul(oct_conj(Octonion::unit(q[p[2]])), Octonion::unit(q[p[3]]), t);
      const Octonion yzw = oct_mul(Octonion::unit(q[p[1]]), zw, t);
      s += detail::perm_sign(p, 4) * oct_dot(x, yzw);
    } while (std::next_permutation(p, p + 4));
    f.c[n] = s / 24.0;
  }
  return f;
}

// raw_{ab} = X_{ajkl} Y_{bjkl}.
inline Mat8 contract3(const FourForm& x, const FourForm& y) {
  detail::Gather gx, gy;
  detail::gather(x, gx);
  detail::gather(y, gy);
  Mat8 r;
  for (int a = 0; a < 8; ++a)
    for (int b = 0; b < 8; ++b) {
      double s = 0.0;
      for (int n = 0; n < 56; ++n) s += gx[a][n] * gy[b][n];
      r(a, b) = 6.0 * s;
    }
  return r;
}

// (beta . Phi)_{ij} = beta_{ab} Phi_{abij}.
inline TwoForm contract_pair(const TwoForm& beta, const FourForm& phi) {
  std::array<double, 28> bp{};
  for (int p = 0; p < 28; ++p) bp[p] = beta(kPairs[p][0], kPairs[p][1]);
  TwoForm r;
  for (int q = 0; q < 28; ++q) {
    double s = 0.0;
    for (int p = 0; p < 28; ++p) s += bp[p] * detail::sgn_get(phi, detail::kPP[p][q]);
    const int i = kPairs[q][0], j = kPairs[q][1];
    r(i, j) = 2.0 * s;
    r(j, i) = -2.0 * s;
  }
  return r;
}

inline TwoForm pi7(const TwoForm& beta, const FourForm& phi) {
  return 0.25 * beta - 0.125 * contract_pair(beta, phi);
}

inline TwoForm pi21(const TwoForm& beta, const FourForm& phi) {
  return beta - pi7(beta, phi);
}

// (A <> Phi)_{ijkl} = A_ip Phi_pjkl + A_jp Phi_ipkl + A_kp Phi_ijpl + A_lp Phi_ijkp.
inline FourForm diamond(const Endo8& a, const FourForm& phi) {
  detail::Gather g;
  detail::gather(phi, g);
  FourForm r;
  for (int n = 0; n < 70; ++n) {
    const auto& q = kQuads[n];
    double s = 0.0;
    for (int slot = 0; slot < 4; ++slot) {
      const int t = detail::kQuadDrop[n][slot];
      const double sg = (slot % 2 == 0) ? 1.0 : -1.0;
      double acc = 0.0;
      for (int p = 0; p < 8; ++p) acc += a(q[slot], p) * g[p][t];
      s += sg * acc;
    }
    r.c[n] = s;
  }
  return r;
}

// Skew part of sigma_{ajkl} Phi_{bjkl}; no normalization constant.
inline TwoForm triple_contract(const FourForm& sigma, const FourForm& phi) {
  return skew_part(contract3(sigma, phi));
}

// Inverse of beta -> beta <> Phi on Omega^2_7.
inline TwoForm invert_diamond(const FourForm& sigma, const FourForm& phi) {
  return (1.0 / 96.0) * pi7(triple_contract(sigma, phi), phi);
}

namespace detail {

// sp(i,j,k,l) = sigma_{ijmn} Phi_{mnkl} over canonical pairs (i<j), (k<l).
inline std::array<std::array<double, 28>, 28> pair_product(const FourForm& sigma, const FourForm& phi) {
  std::array<std::array<double, 28>, 28> s{}, f{}, r{};
  for (int p = 0; p < 28; ++p)
    for (int q = 0; q < 28; ++q) {
      s[p][q] = sgn_get(sigma, kPP[p][q]);
      f[p][q] = sgn_get(phi, kPP[p][q]);
    }
  for (int p = 0; p < 28; ++p)
    for (int m = 0; m < 28; ++m) {
      const double spm = s[p][m];
      if (spm == 0.0) continue;
      for (int q = 0; q < 28; ++q) r[p][q] += 2.0 * spm * f[m][q];
    }
  return r;
}

inline double pp_get(const std::array<std::array<double, 28>, 28>& sp, int i, int j, int k, int l) {
  const int e1 = kPairIndex[i][j], e2 = kPairIndex[k][l];
  const double v = sp[std::abs(e1) - 1][std::abs(e2) - 1];
  return ((e1 > 0) == (e2 > 0)) ? v : -v;
}

}  // namespace detail

inline FourForm lambda_op(const FourForm& sigma, const FourForm& phi) {
  const auto sp = detail::pair_product(sigma, phi);
  FourForm r;
  for (int n = 0; n < 70; ++n) {
    const int i = kQuads[n][0], j = kQuads[n][1], k = kQuads[n][2], l = kQuads[n][3];
    r.c[n] = detail::pp_get(sp, i, j, k, l) + detail::pp_get(sp, i, k, l, j) +
             detail::pp_get(sp, i, l, j, k) + detail::pp_get(sp, j, k, i, l) +
             detail::pp_get(sp, j, l, k, i) + detail::pp_get(sp, k, l, i, j);
  }
  return r;
}

inline constexpr std::array<double, 4> kLambdaEigen = {-24.0, -12.0, 4.0, 0.0};

struct Decomp4 {
  FourForm s1, s7, s27, s35;
};

// Spectral projectors of Lambda_Phi as cubic polynomials in Lambda_Phi.
inline Decomp4 decompose4(const FourForm& sigma, const FourForm& phi) {
  const FourForm l1 = lambda_op(sigma, phi);
  const FourForm l2 = lambda_op(l1, phi);
  const FourForm l3 = lambda_op(l2, phi);
  std::array<FourForm, 4> parts;
  for (int e = 0; e < 4; ++e) {
    const double lam = kLambdaEigen[e];
    double e1 = 0.0, e2 = 0.0, e3 = 1.0, denom = 1.0;
    std::array<double, 3> mu{};
    int m = 0;
    for (int f = 0; f < 4; ++f)
      if (f != e) mu[m++] = kLambdaEigen[f];
    e1 = mu[0] + mu[1] + mu[2];
    e2 = mu[0] * mu[1] + mu[0] * mu[2] + mu[1] * mu[2];
    e3 = mu[0] * mu[1] * mu[2];
    for (double x : mu) denom *= (lam - x);
    parts[e] = (1.0 / denom) * (l3 - e1 * l2 + e2 * l1 - e3 * sigma);
  }
  return {parts[0], parts[1], parts[2], parts[3]};
}

// gamma_ijk = X_l Phi_ijkl + gamma48_ijk with X_l = gamma_ijk Phi_ijkl / 42.
struct Decomp3 {
  Vec8 x;
  ThreeForm g48;
};

inline Decomp3 decompose3(const ThreeForm& gamma, const FourForm& phi) {
  Decomp3 d;
  for (int l = 0; l < 8; ++l) {
    double s = 0.0;
    for (int n = 0; n < 56; ++n) s += gamma.c[n] * detail::sgn_get(phi, detail::kAT[l][n]);
    // Phi_{ijkl} = -Phi_{lijk}
    d.x[l] = -6.0 * s / 42.0;
  }
  // (X _| Phi)_{ijk} = X_l Phi_{ijkl} = -X_l Phi_{lijk}
  d.g48 = gamma + interior(d.x, phi);
  return d;
}

// (X_l Phi_ijkl), the Omega^3_8 embedding; note the contracted slot is the last one.
inline ThreeForm vector_to_three(const Vec8& x, const FourForm& phi) {
  return -interior(x, phi);
}

struct EndoSplit {
  double trace;
  Endo8 a0;
  TwoForm a7, a21;
};

inline EndoSplit endo_split(const Endo8& a, const FourForm& phi) {
  EndoSplit s;
  s.trace = spin7::trace(a);
  s.a0 = sym_part(a) - (s.trace / 8.0) * Mat8::identity();
  const TwoForm sk = skew_part(a);
  s.a7 = pi7(sk, phi);
  s.a21 = sk - s.a7;
  return s;
}

// g_Phi(v,v) from the determinant formula, over the coordinate frame that
// omits the axis where |v_k| is largest.
inline double metric_quadratic(const FourForm& phi, const Vec8& v) {
  int ks = 0;
  for (int k = 1; k < 8; ++k)
    if (std::abs(v[k]) > std::abs(v[ks])) ks = k;
  if (v[ks] == 0.0) throw DegenerateForm("metric_quadratic: zero vector");
  int fr[7];
  int m = 0;
  for (int k = 0; k < 8; ++k)
    if (k != ks) fr[m++] = k;

  const ThreeForm gam = interior(v, phi);
  double g3[7][7][7];
  for (int a = 0; a < 7; ++a)
    for (int b = 0; b < 7; ++b)
      for (int c = 0; c < 7; ++c) g3[a][b][c] = gam(fr[a], fr[b], fr[c]);

  // M[P][Q] = sum over (2,2,3) splits with blocks P, Q of sign * gamma(R).
  std::array<std::array<double, 21>, 21> mpq{};
  for (const auto& s : detail::kSplit223) {
    const double w = s.sign * g3[s.p[4]][s.p[5]][s.p[6]];
    mpq[detail::kPos7Pair[s.p[0]][s.p[1]]][detail::kPos7Pair[s.p[2]][s.p[3]]] += w;
  }
  // alpha_i(P) = gamma(f_i, P0, P1) on ascending position pairs.
  std::array<std::array<double, 21>, 7> al{};
  for (int i = 0; i < 7; ++i) {
    int n = 0;
    for (int a = 0; a < 7; ++a)
      for (int b = a + 1; b < 7; ++b) al[i][n++] = g3[i][a][b];
  }
  std::array<double, 49> bm{};
  for (int i = 0; i < 7; ++i) {
    std::array<double, 21> tmp{};
    for (int p = 0; p < 21; ++p) {
      if (al[i][p] == 0.0) continue;
      for (int q = 0; q < 21; ++q) tmp[q] += al[i][p] * mpq[p][q];
    }
    for (int j = 0; j < 7; ++j) {
      double s = 0.0;
      for (int q = 0; q < 21; ++q) s += tmp[q] * al[j][q];
      bm[i * 7 + j] = s;
    }
  }
  double av = 0.0;
  for (const auto& s : detail::kSplit34) {
    av += s.sign * g3[s.p[0]][s.p[1]][s.p[2]] *
          phi(fr[s.p[3]], fr[s.p[4]], fr[s.p[5]], fr[s.p[6]]);
  }
  double scale = 0.0;
  for (double x : phi.c) scale = std::max(scale, std::abs(x));
  const double vn = std::sqrt(dot(v, v));
  if (!(std::abs(av) > 1e-12 * scale * scale * vn))
    throw DegenerateForm("metric_from_form: A(v) vanishes, form is degenerate");
  const double detb = determinant<7>(bm, 7);
  const double g2 = -(343.0 / std::pow(6.0, 7.0 / 3.0)) * std::cbrt(detb) / (av * av * av);
  if (!(g2 > 0.0)) throw DegenerateForm("metric_from_form: g(v,v)^2 is not positive");
  return std::sqrt(g2);
}

inline Metric8 metric_from_form(const FourForm& phi) {
  std::array<double, 8> q{};
  for (int i = 0; i < 8; ++i) q[i] = metric_quadratic(phi, Vec8::unit(i));
  Metric8 g;
  for (int i = 0; i < 8; ++i) {
    g(i, i) = q[i];
    for (int j = i + 1; j < 8; ++j) {
      Vec8 v = Vec8::unit(i);
      v[j] = 1.0;
      const double gij = 0.5 * (metric_quadratic(phi, v) - q[i] - q[j]);
      g(i, j) = gij;
      g(j, i) = gij;
    }
  }
  return g;
}

inline double metric_deviation(const FourForm& phi) {
  return max_abs(metric_from_form(phi) - Mat8::identity());
}

// ---- identity residuals (flat unit metric), max-abs over all indices ----

inline double contraction1_residual(const FourForm& f) {
  auto g = [](int a, int b) { return a == b ? 1.0 : 0.0; };
  double worst = 0.0;
  for (int t1 = 0; t1 < 56; ++t1) {
    const int i = kTriples[t1][0], j = kTriples[t1][1], k = kTriples[t1][2];
    for (int t2 = 0; t2 < 56; ++t2) {
      const int a = kTriples[t2][0], b = kTriples[t2][1], c = kTriples[t2][2];
      double lhs = 0.0;
      for (int l = 0; l < 8; ++l) lhs += f(i, j, k, l) * f(a, b, c, l);
      const double rhs = g(i, a) * g(j, b) * g(k, c) + g(i, b) * g(j, c) * g(k, a) +
                         g(i, c) * g(j, a) * g(k, b) - g(i, a) * g(j, c) * g(k, b) -
                         g(i, b) * g(j, a) * g(k, c) - g(i, c) * g(j, b) * g(k, a) -
                         g(i, a) * f(j, k, b, c) - g(i, b) * f(j, k, c, a) - g(i, c) * f(j, k, a, b) -
                         g(j, a) * f(k, i, b, c) - g(j, b) * f(k, i, c, a) - g(j, c) * f(k, i, a, b) -
                         g(k, a) * f(i, j, b, c) - g(k, b) * f(i, j, c, a) - g(k, c) * f(i, j, a, b);
      worst = std::max(worst, std::abs(lhs - rhs));
    }
  }
  return worst;
}

inline double contraction2_residual(const FourForm& f) {
  const auto sp = detail::pair_product(f, f);
  double worst = 0.0;
  for (int p = 0; p < 28; ++p)
    for (int q = 0; q < 28; ++q) {
      const int i = kPairs[p][0], j = kPairs[p][1], a = kPairs[q][0], b = kPairs[q][1];
      const double rhs = 6.0 * ((i == a && j == b) ? 1.0 : 0.0) - 6.0 * ((i == b && j == a) ? 1.0 : 0.0) -
                         4.0 * f(i, j, a, b);
      worst = std::max(worst, std::abs(sp[p][q] - rhs));
    }
  return worst;
}

inline double contraction3_residual(const FourForm& f) {
  return max_abs(contract3(f, f) - 42.0 * Mat8::identity());
}

inline double full_contract(const FourForm& a, const FourForm& b) {
  return 24.0 * form_inner(a, b);
}

inline double contraction4_residual(const FourForm& f) {
  return std::abs(full_contract(f, f) - 336.0);
}

// beta_ab Phi_bpqr = beta_pi Phi_iqra + beta_qi Phi_irpa + beta_ri Phi_ipqa, for beta in Omega^2_21.
inline double omega21_identity_residual(const TwoForm& beta, const FourForm& f) {
  const Dense4 d = to_dense(f);
  auto F = [&](int i, int j, int k, int l) { return d[dkey(i, j, k, l)]; };
  double worst = 0.0;
  for (int a = 0; a < 8; ++a)
    for (int p = 0; p < 8; ++p)
      for (int q = 0; q < 8; ++q)
        for (int r = 0; r < 8; ++r) {
          double lhs = 0.0, rhs = 0.0;
          for (int b = 0; b < 8; ++b) {
            lhs += beta(a, b) * F(b, p, q, r);
            rhs += beta(p, b) * F(b, q, r, a) + beta(q, b) * F(b, r, p, a) + beta(r, b) * F(b, p, q, a);
          }
          worst = std::max(worst, std::abs(lhs - rhs));
        }
  return worst;
}

// Linearisations of the two-, three- and four-index identities along an orbit tangent dphi:
// dPhi_ijkl Phi_abkl + Phi_ijkl dPhi_abkl = -4 dPhi_ijab, the 42 g and 336 terms having zero variation.
inline double tangent_contraction2_residual(const FourForm& dphi, const FourForm& f) {
  const auto a = detail::pair_product(dphi, f);
  const auto b = detail::pair_product(f, dphi);
  double worst = 0.0;
  for (int p = 0; p < 28; ++p)
    for (int q = 0; q < 28; ++q) {
      const double d4 = detail::sgn_get(dphi, detail::kPP[p][q]);
      worst = std::max(worst, std::abs(a[p][q] + b[p][q] + 4.0 * d4));
    }
  return worst;
}

inline double tangent_contraction3_residual(const FourForm& dphi, const FourForm& f) {
  return max_abs(contract3(dphi, f) + contract3(f, dphi));
}

inline double tangent_contraction4_residual(const FourForm& dphi, const FourForm& f) {
  return std::abs(full_contract(dphi, f));
}

struct Admissibility {
  double contraction2 = 0, contraction3 = 0, contraction4 = 0, self_dual = 0, lambda = 0, metric = 0;
  bool degenerate = false;
  double worst() const {
    return degenerate ? INFINITY
                      : std::max({contraction2, contraction3, contraction4, self_dual, lambda, metric});
  }
  bool ok(double tol) const { return worst() < tol; }
};

// Identity-based validator: a form in the SO(8)-orbit of Phi_0 satisfies all of these.
inline Admissibility admissibility(const FourForm& s) {
  Admissibility a;
  a.contraction2 = contraction2_residual(s);
  a.contraction3 = contraction3_residual(s);
  a.contraction4 = contraction4_residual(s);
  a.self_dual = max_abs(hodge_star4(s) - s);
  a.lambda = max_abs(lambda_op(s, s) + 24.0 * s);
  try {
    a.metric = metric_deviation(s);
  } catch (const DegenerateForm&) {
    a.degenerate = true;
  }
  return a;
}

}  // namespace spin7
