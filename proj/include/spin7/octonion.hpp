#pragma once

#include <array>
#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>
#include <string>

#include "spin7/forms.hpp"

namespace spin7 {

// Multiplication table on the basis (1, e1..e7): e_i e_j = sign[i][j] e_{index[i][j]}.
struct OctonionTable {
  std::array<std::array<int, 8>, 8> index{};
  std::array<std::array<int, 8>, 8> sign{};
  std::array<std::array<int, 3>, 7> triples{};

  // Each oriented triple (a,b,c) means e_a e_b = e_c plus cyclic shifts.
  static OctonionTable from_triples(const std::array<std::array<int, 3>, 7>& tr) {
    OctonionTable t;
    t.triples = tr;
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j) {
        t.index[i][j] = -1;
        t.sign[i][j] = 0;
      }
    for (int i = 0; i < 8; ++i) {
      t.index[0][i] = i;
      t.sign[0][i] = 1;
      t.index[i][0] = i;
      t.sign[i][0] = 1;
    }
    for (int i = 1; i < 8; ++i) {
      t.index[i][i] = 0;
      t.sign[i][i] = -1;
    }
    for (const auto& abc : tr) {
      for (int v : abc)
        if (v < 1 || v > 7) throw std::invalid_argument("octonion triple index out of range 1..7");
      const int a = abc[0], b = abc[1], c = abc[2];
      const int cyc[3][3] = {{a, b, c}, {b, c, a}, {c, a, b}};
      for (const auto& x : cyc) {
        if (t.index[x[0]][x[1]] != -1)
          throw std::invalid_argument("octonion triples assign a product twice");
        t.index[x[0]][x[1]] = x[2];
        t.sign[x[0]][x[1]] = 1;
        t.index[x[1]][x[0]] = x[2];
        t.sign[x[1]][x[0]] = -1;
      }
    }
    for (int i = 0; i < 8; ++i)
      for (int j = 0; j < 8; ++j)
        if (t.index[i][j] < 0) throw std::invalid_argument("octonion triples do not cover every product");
    return t;
  }

  // Fano-plane convention e_i e_{i+1} = e_{i+3}, indices mod 7 in 1..7.
  static const OctonionTable& standard() {
    static const OctonionTable t = from_triples(
        {{{1, 2, 4}, {2, 3, 5}, {3, 4, 6}, {4, 5, 7}, {5, 6, 1}, {6, 7, 2}, {7, 1, 3}}});
    return t;
  }

  // Text format: seven lines "a b c" of oriented triples; '#' starts a comment.
  static OctonionTable load(const std::string& path) {
    std::ifstream in(path);
    if (!in) throw std::runtime_error("cannot open octonion table: " + path);
    std::array<std::array<int, 3>, 7> tr{};
    std::string line;
    int n = 0;
    while (std::getline(in, line)) {
      if (auto h = line.find('#'); h != std::string::npos) line.erase(h);
      std::istringstream ls(line);
      int a, b, c;
      if (!(ls >> a)) continue;
      if (!(ls >> b >> c)) throw std::runtime_error("malformed octonion triple line: " + line);
      if (n >= 7) throw std::runtime_error("octonion table has more than 7 triples");
      tr[n++] = {a, b, c};
    }
    if (n != 7) throw std::runtime_error("octonion table needs exactly 7 triples");
    return from_triples(tr);
  }
};

struct Octonion : Flat<8> {
  double& operator[](int i) { return c[i]; }
  double operator[](int i) const { return c[i]; }
  static Octonion unit(int i) {
    Octonion o;
    o.c[i] = 1.0;
    return o;
  }
  static Octonion from(const Vec8& v) {
    Octonion o;
    o.c = v.c;
    return o;
  }
};

inline Octonion oct_mul(const Octonion& a, const Octonion& b,
                        const OctonionTable& t = OctonionTable::standard()) {
  Octonion r;
  for (int i = 0; i < 8; ++i) {
    if (a[i] == 0.0) continue;
    for (int j = 0; j < 8; ++j) r[t.index[i][j]] += t.sign[i][j] * a[i] * b[j];
  }
  return r;
}

inline Octonion oct_conj(Octonion a) {
  for (int i = 1; i < 8; ++i) a[i] = -a[i];
  return a;
}

inline double oct_norm(const Octonion& a) { return std::sqrt(sum_sq(a)); }

inline double oct_dot(const Octonion& a, const Octonion& b) {
  double s = 0.0;
  for (int i = 0; i < 8; ++i) s += a[i] * b[i];
  return s;
}

}  // namespace spin7
