#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <cstdint>
#include <stdexcept>

namespace spin7 {

inline constexpr int kDim = 8;

// Flat value types. Every pointwise quantity is a fixed-size array of doubles
// so lattice code can treat them uniformly.
template <std::size_t K>
struct Flat {
  static constexpr std::size_t size = K;
  std::array<double, K> c{};
};

template <class V>
concept FlatValue = requires(V v) {
  { V::size } -> std::convertible_to<std::size_t>;
  v.c;
};

template <FlatValue V>
V& operator+=(V& a, const V& b) {
  for (std::size_t i = 0; i < V::size; ++i) a.c[i] += b.c[i];
  return a;
}
template <FlatValue V>
V& operator-=(V& a, const V& b) {
  for (std::size_t i = 0; i < V::size; ++i) a.c[i] -= b.c[i];
  return a;
}
template <FlatValue V>
V& operator*=(V& a, double s) {
  for (auto& x : a.c) x *= s;
  return a;
}
template <FlatValue V>
V operator+(V a, const V& b) { return a += b; }
template <FlatValue V>
V operator-(V a, const V& b) { return a -= b; }
template <FlatValue V>
V operator-(V a) { return a *= -1.0; }
template <FlatValue V>
V operator*(double s, V a) { return a *= s; }
template <FlatValue V>
V operator*(V a, double s) { return a *= s; }

template <FlatValue V>
double max_abs(const V& a) {
  double m = 0.0;
  for (double x : a.c) m = std::max(m, std::abs(x));
  return m;
}

template <FlatValue V>
double sum_sq(const V& a) {
  double s = 0.0;
  for (double x : a.c) s += x * x;
  return s;
}

template <FlatValue V>
bool all_finite(const V& a) {
  for (double x : a.c)
    if (!std::isfinite(x)) return false;
  return true;
}

struct Vec8 : Flat<8> {
  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  static Vec8 unit(int i) {
    Vec8 v;
    v.c[i] = 1.0;
    return v;
  }
};

inline double dot(const Vec8& a, const Vec8& b) {
  double s = 0.0;
  for (int i = 0; i < kDim; ++i) s += a[i] * b[i];
  return s;
}

// Row-major 8x8 matrix; row = covariant slot, column = contraction slot.
struct Mat8 : Flat<64> {
  double& operator()(int i, int j) { return c[8 * i + j]; }
  double operator()(int i, int j) const { return c[8 * i + j]; }
  static Mat8 identity() {
    Mat8 m;
    for (int i = 0; i < kDim; ++i) m(i, i) = 1.0;
    return m;
  }
};

using Endo8 = Mat8;
using TwoForm = Mat8;
using Metric8 = Mat8;

inline Mat8 transpose(const Mat8& a) {
  Mat8 t;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) t(i, j) = a(j, i);
  return t;
}

inline Mat8 operator*(const Mat8& a, const Mat8& b) {
  Mat8 r;
  for (int i = 0; i < kDim; ++i)
    for (int k = 0; k < kDim; ++k) {
      const double aik = a(i, k);
      if (aik == 0.0) continue;
      for (int j = 0; j < kDim; ++j) r(i, j) += aik * b(k, j);
    }
  return r;
}

inline double trace(const Mat8& a) {
  double s = 0.0;
  for (int i = 0; i < kDim; ++i) s += a(i, i);
  return s;
}

inline Mat8 skew_part(const Mat8& a) {
  Mat8 r;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) r(i, j) = 0.5 * (a(i, j) - a(j, i));
  return r;
}

inline Mat8 sym_part(const Mat8& a) {
  Mat8 r;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) r(i, j) = 0.5 * (a(i, j) + a(j, i));
  return r;
}

// Determinant by partial-pivot LU; n <= 8.
template <std::size_t N>
double determinant(std::array<double, N * N> m, int n) {
  double det = 1.0;
  for (int k = 0; k < n; ++k) {
    int piv = k;
    for (int r = k + 1; r < n; ++r)
      if (std::abs(m[r * n + k]) > std::abs(m[piv * n + k])) piv = r;
    if (m[piv * n + k] == 0.0) return 0.0;
    if (piv != k) {
      for (int c = 0; c < n; ++c) std::swap(m[k * n + c], m[piv * n + c]);
      det = -det;
    }
    const double d = m[k * n + k];
    det *= d;
    for (int r = k + 1; r < n; ++r) {
      const double f = m[r * n + k] / d;
      if (f == 0.0) continue;
      for (int c = k + 1; c < n; ++c) m[r * n + c] -= f * m[k * n + c];
    }
  }
  return det;
}

inline double determinant(const Mat8& a) {
  return determinant<8>(a.c, 8);
}

namespace detail {

constexpr int perm_sign(const int* p, int n) {
  int inv = 0;
  for (int i = 0; i < n; ++i)
    for (int j = i + 1; j < n; ++j)
      if (p[i] > p[j]) ++inv;
  return (inv % 2 == 0) ? 1 : -1;
}

template <int K, std::size_t Count>
constexpr std::array<std::array<std::uint8_t, K>, Count> make_combos() {
  std::array<std::array<std::uint8_t, K>, Count> out{};
  std::array<int, K> idx{};
  for (int i = 0; i < K; ++i) idx[i] = i;
  std::size_t n = 0;
  while (true) {
    for (int i = 0; i < K; ++i) out[n][i] = static_cast<std::uint8_t>(idx[i]);
    ++n;
    int i = K - 1;
    while (i >= 0 && idx[i] == kDim - K + i) --i;
    if (i < 0) break;
    ++idx[i];
    for (int j = i + 1; j < K; ++j) idx[j] = idx[j - 1] + 1;
  }
  return out;
}

// Dense lookup: entry = sign * (canonical index + 1), 0 when an index repeats.
template <int K, std::size_t Count, std::size_t Dense>
constexpr std::array<std::int8_t, Dense> make_lookup(
    const std::array<std::array<std::uint8_t, K>, Count>& combos) {
  std::array<std::int8_t, Dense> t{};
  for (std::size_t n = 0; n < Count; ++n) {
    int p[K];
    for (int i = 0; i < K; ++i) p[i] = i;
    do {
      std::size_t key = 0;
      for (int i = 0; i < K; ++i) key = key * kDim + combos[n][p[i]];
      t[key] = static_cast<std::int8_t>(perm_sign(p, K) * static_cast<int>(n + 1));
    } while (std::next_permutation(p, p + K));
  }
  return t;
}

}  // namespace detail

inline constexpr auto kPairs = detail::make_combos<2, 28>();
inline constexpr auto kTriples = detail::make_combos<3, 56>();
inline constexpr auto kQuads = detail::make_combos<4, 70>();
inline constexpr auto kLookup3 = detail::make_lookup<3, 56, 512>(kTriples);
inline constexpr auto kLookup4 = detail::make_lookup<4, 70, 4096>(kQuads);

constexpr int lookup3(int i, int j, int k) { return kLookup3[(i * 8 + j) * 8 + k]; }
constexpr int lookup4(int i, int j, int k, int l) {
  return kLookup4[((i * 8 + j) * 8 + k) * 8 + l];
}

// Canonical components sigma_{ijk}, i<j<k.
struct ThreeForm : Flat<56> {
  double operator()(int i, int j, int k) const {
    const int e = lookup3(i, j, k);
    return e == 0 ? 0.0 : (e > 0 ? c[e - 1] : -c[-e - 1]);
  }
};

// Canonical components sigma_{ijkl}, i<j<k<l.
struct FourForm : Flat<70> {
  double operator()(int i, int j, int k, int l) const {
    const int e = lookup4(i, j, k, l);
    return e == 0 ? 0.0 : (e > 0 ? c[e - 1] : -c[-e - 1]);
  }
  static FourForm basis(int n) {
    FourForm f;
    f.c[n] = 1.0;
    return f;
  }
};

using Dense4 = std::array<double, 4096>;

inline Dense4 to_dense(const FourForm& s) {
  Dense4 d{};
  for (std::size_t key = 0; key < 4096; ++key) {
    const int e = kLookup4[key];
    if (e != 0) d[key] = e > 0 ? s.c[e - 1] : -s.c[-e - 1];
  }
  return d;
}

inline constexpr std::size_t dkey(int i, int j, int k, int l) {
  return ((static_cast<std::size_t>(i) * 8 + j) * 8 + k) * 8 + l;
}

// Antisymmetric part of a dense rank-4 array, returned in canonical storage.
inline FourForm antisymmetrize(const Dense4& d) {
  FourForm f;
  for (std::size_t n = 0; n < 70; ++n) {
    const auto& q = kQuads[n];
    int p[4] = {0, 1, 2, 3};
    double s = 0.0;
    do {
      s += detail::perm_sign(p, 4) * d[dkey(q[p[0]], q[p[1]], q[p[2]], q[p[3]])];
    } while (std::next_permutation(p, p + 4));
    f.c[n] = s / 24.0;
  }
  return f;
}

// Hodge star on 4-forms, flat metric, orientation e^1 ^ ... ^ e^8.
inline FourForm hodge_star4(const FourForm& s) {
  FourForm r;
  for (std::size_t n = 0; n < 70; ++n) {
    const auto& q = kQuads[n];
    int perm[8];
    int pos = 0;
    for (int i = 0; i < 4; ++i) perm[pos++] = q[i];
    std::array<int, 4> comp{};
    int m = 0;
    for (int i = 0; i < kDim; ++i)
      if (i != q[0] && i != q[1] && i != q[2] && i != q[3]) comp[m++] = i;
    for (int i = 0; i < 4; ++i) perm[pos++] = comp[i];
    const int sign = detail::perm_sign(perm, 8);
    const int e = lookup4(comp[0], comp[1], comp[2], comp[3]);
    r.c[e - 1] = sign * s.c[n];
  }
  return r;
}

// Inner product (1/k!) * full contraction; equal to the canonical-component sum.
inline double form_inner(const FourForm& a, const FourForm& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < 70; ++n) s += a.c[n] * b.c[n];
  return s;
}
inline double form_inner(const ThreeForm& a, const ThreeForm& b) {
  double s = 0.0;
  for (std::size_t n = 0; n < 56; ++n) s += a.c[n] * b.c[n];
  return s;
}
inline double form_inner(const TwoForm& a, const TwoForm& b) {
  double s = 0.0;
  for (int i = 0; i < kDim; ++i)
    for (int j = 0; j < kDim; ++j) s += a(i, j) * b(i, j);
  return 0.5 * s;
}

// Interior product (v _| sigma)_{jkl} = v_i sigma_{ijkl}.
inline ThreeForm interior(const Vec8& v, const FourForm& s) {
  ThreeForm r;
  for (std::size_t n = 0; n < 56; ++n) {
    const auto& t = kTriples[n];
    double acc = 0.0;
    for (int i = 0; i < kDim; ++i)
      if (v[i] != 0.0) acc += v[i] * s(i, t[0], t[1], t[2]);
    r.c[n] = acc;
  }
  return r;
}

// (v _| gamma)_{kl} = v_i gamma_{ikl}.
inline TwoForm interior(const Vec8& v, const ThreeForm& g) {
  TwoForm r;
  for (int k = 0; k < kDim; ++k)
    for (int l = k + 1; l < kDim; ++l) {
      double acc = 0.0;
      for (int i = 0; i < kDim; ++i)
        if (v[i] != 0.0) acc += v[i] * g(i, k, l);
      r(k, l) = acc;
      r(l, k) = -acc;
    }
  return r;
}

// Wedge of a 1-form and a 3-form, determinant convention:
// (x ^ g)_{ijkl} = x_i g_{jkl} - x_j g_{ikl} + x_k g_{ijl} - x_l g_{ijk}.
inline FourForm wedge(const Vec8& x, const ThreeForm& g) {
  FourForm r;
  for (std::size_t n = 0; n < 70; ++n) {
    const auto& q = kQuads[n];
    r.c[n] = x[q[0]] * g(q[1], q[2], q[3]) - x[q[1]] * g(q[0], q[2], q[3]) +
             x[q[2]] * g(q[0], q[1], q[3]) - x[q[3]] * g(q[0], q[1], q[2]);
  }
  return r;
}

}  // namespace spin7
