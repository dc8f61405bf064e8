#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstddef>
#include <stdexcept>
#include <string>
#include <vector>

#include "spin7/algebra.hpp"
#include "spin7/forms.hpp"
#include "spin7/parallel.hpp"

namespace spin7 {

// Periodic grid over the active axes of T^8; fields are constant along the others.
// The base metric is metric_scale * delta in these coordinates.
struct LatticeSpec {
  std::vector<int> active_axes{0};  // 0-based, strictly increasing
  int n = 16;
  std::array<double, 8> period{1, 1, 1, 1, 1, 1, 1, 1};
  int stencil_order = 2;
  double metric_scale = 1.0;

  void validate() const {
    if (active_axes.empty() || active_axes.size() > 8)
      throw std::invalid_argument("lattice: need 1..8 active axes");
    for (std::size_t i = 0; i < active_axes.size(); ++i) {
      if (active_axes[i] < 0 || active_axes[i] > 7)
        throw std::invalid_argument("lattice: active axis out of range");
      if (i > 0 && active_axes[i] <= active_axes[i - 1])
        throw std::invalid_argument("lattice: active axes must be strictly increasing");
    }
    if (stencil_order != 2 && stencil_order != 4)
      throw std::invalid_argument("lattice: stencil_order must be 2 or 4");
    if (n < 2 * stencil_order) throw std::invalid_argument("lattice: points_per_axis must be >= 2*stencil_order");
    for (double l : period)
      if (!(l > 0.0) || !std::isfinite(l)) throw std::invalid_argument("lattice: periods must be positive");
    if (!(metric_scale > 0.0)) throw std::invalid_argument("lattice: metric_scale must be positive");
  }

  int dims() const { return static_cast<int>(active_axes.size()); }
  std::size_t npoints() const {
    std::size_t p = 1;
    for (int i = 0; i < dims(); ++i) p *= static_cast<std::size_t>(n);
    return p;
  }
  double spacing(int axis_pos) const { return period[active_axes[axis_pos]] / n; }
  double min_spacing() const {
    double h = spacing(0);
    for (int i = 1; i < dims(); ++i) h = std::min(h, spacing(i));
    return h;
  }
  bool is_active(int axis) const {
    return std::find(active_axes.begin(), active_axes.end(), axis) != active_axes.end();
  }
  // Coordinate volume of one cell, inactive axes contributing their full period.
  double cell_volume() const {
    double v = 1.0;
    for (int a = 0; a < 8; ++a) v *= is_active(a) ? period[a] / n : period[a];
    return v;
  }
  // Riemannian volume of one cell for the metric metric_scale * delta.
  double metric_cell_volume() const { return cell_volume() * metric_scale * metric_scale * metric_scale * metric_scale; }

  // Grid index along each active axis; first active axis varies slowest.
  std::vector<int> coords(std::size_t p) const {
    std::vector<int> c(dims());
    for (int i = dims() - 1; i >= 0; --i) {
      c[i] = static_cast<int>(p % n);
      p /= n;
    }
    return c;
  }
  std::size_t index(const std::vector<int>& c) const {
    std::size_t p = 0;
    for (int i = 0; i < dims(); ++i) p = p * n + static_cast<std::size_t>(((c[i] % n) + n) % n);
    return p;
  }
  std::size_t stride(int axis_pos) const {
    std::size_t s = 1;
    for (int i = dims() - 1; i > axis_pos; --i) s *= n;
    return s;
  }
  std::size_t neighbor(std::size_t p, int axis_pos, int offset) const {
    const std::size_t s = stride(axis_pos);
    const int ci = static_cast<int>((p / s) % n);
    const int cn = ((ci + offset) % n + n) % n;
    return p + (static_cast<std::size_t>(cn) - static_cast<std::size_t>(ci)) * s;
  }
  // Physical coordinate of point p along active axis position i.
  double coordinate(std::size_t p, int axis_pos) const {
    return spacing(axis_pos) * static_cast<double>((p / stride(axis_pos)) % n);
  }

  bool same_grid(const LatticeSpec& o) const {
    return active_axes == o.active_axes && n == o.n && period == o.period && stencil_order == o.stencil_order;
  }
};

template <class V>
struct LatticeField {
  LatticeSpec spec;
  std::vector<V> values;

  LatticeField() = default;
  explicit LatticeField(LatticeSpec s) : spec(std::move(s)), values(spec.npoints()) {}
  std::size_t size() const { return values.size(); }
  V& operator[](std::size_t i) { return values[i]; }
  const V& operator[](std::size_t i) const { return values[i]; }
};

using FormField = LatticeField<FourForm>;

// T_{m;ab}, stored densely as 8 slices of 8x8.
struct Torsion : Flat<512> {
  double operator()(int m, int a, int b) const { return c[64 * m + 8 * a + b]; }
  double& operator()(int m, int a, int b) { return c[64 * m + 8 * a + b]; }
  Mat8 slice(int m) const {
    Mat8 s;
    std::copy_n(c.begin() + 64 * m, 64, s.c.begin());
    return s;
  }
  void set_slice(int m, const Mat8& s) { std::copy_n(s.c.begin(), 64, c.begin() + 64 * m); }
};

using TorsionField = LatticeField<Torsion>;
using TwoFormField = LatticeField<TwoForm>;

struct Stencil {
  int radius;
  std::array<double, 5> w;  // offsets -radius..radius
};

inline Stencil first_derivative_stencil(int order) {
  if (order == 2) return {1, {-0.5, 0.0, 0.5, 0, 0}};
  if (order == 4) return {2, {1.0 / 12, -2.0 / 3, 0.0, 2.0 / 3, -1.0 / 12}};
  throw std::invalid_argument("stencil order must be 2 or 4");
}

inline Stencil second_derivative_stencil(int order) {
  if (order == 2) return {1, {1.0, -2.0, 1.0, 0, 0}};
  if (order == 4) return {2, {-1.0 / 12, 4.0 / 3, -2.5, 4.0 / 3, -1.0 / 12}};
  throw std::invalid_argument("stencil order must be 2 or 4");
}

// Central difference of a flat-valued field at point p along active axis position i.
template <FlatValue V>
V fd_derivative(const LatticeField<V>& f, std::size_t p, int axis_pos) {
  const Stencil st = first_derivative_stencil(f.spec.stencil_order);
  const double inv_h = 1.0 / f.spec.spacing(axis_pos);
  V r{};
  for (int o = -st.radius; o <= st.radius; ++o) {
    const double w = st.w[o + st.radius];
    if (w == 0.0) continue;
    const V& v = f.values[f.spec.neighbor(p, axis_pos, o)];
    for (std::size_t k = 0; k < V::size; ++k) r.c[k] += w * v.c[k];
  }
  return inv_h * r;
}

template <FlatValue V>
V fd_second_derivative(const LatticeField<V>& f, std::size_t p, int axis_pos) {
  const Stencil st = second_derivative_stencil(f.spec.stencil_order);
  const double h = f.spec.spacing(axis_pos);
  V r{};
  for (int o = -st.radius; o <= st.radius; ++o) {
    const V& v = f.values[f.spec.neighbor(p, axis_pos, o)];
    for (std::size_t k = 0; k < V::size; ++k) r.c[k] += st.w[o + st.radius] * v.c[k];
  }
  return (1.0 / (h * h)) * r;
}

inline LatticeField<double> fd_laplacian_scalar(const LatticeField<double>& f) {
  LatticeField<double> out(f.spec);
  const Stencil st = second_derivative_stencil(f.spec.stencil_order);
  for (std::size_t p = 0; p < f.size(); ++p) {
    double acc = 0.0;
    for (int i = 0; i < f.spec.dims(); ++i) {
      const double h = f.spec.spacing(i);
      double s = 0.0;
      for (int o = -st.radius; o <= st.radius; ++o) s += st.w[o + st.radius] * f.values[f.spec.neighbor(p, i, o)];
      acc += s / (h * h);
    }
    out.values[p] = acc / f.spec.metric_scale;
  }
  return out;
}

// Coordinate gradient of a 4-form field: one FourForm per axis, zero on inactive axes.
using FormGradient = std::array<FourForm, 8>;

inline LatticeField<FormGradient> fd_gradient(const FormField& f) {
  LatticeField<FormGradient> out(f.spec);
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      FormGradient g{};
      for (int i = 0; i < f.spec.dims(); ++i) g[f.spec.active_axes[i]] = fd_derivative(f, p, i);
      out.values[p] = g;
    }
  });
  return out;
}

// pi_7 for the metric s * delta: the Phi contraction raises two indices.
inline TwoForm pi7_scaled(const TwoForm& beta, const FourForm& phi, double s) {
  return 0.25 * beta - (0.125 / (s * s)) * contract_pair(beta, phi);
}

// T_{m;ab} = (1/96) skew_ab( (D_m Phi_ajkl) Phi_bjkl ), three indices raised.
inline Torsion torsion_at(const FormField& f, std::size_t p) {
  const double s = f.spec.metric_scale;
  const double k = 1.0 / (96.0 * s * s * s);
  Torsion t;
  for (int i = 0; i < f.spec.dims(); ++i) {
    const FourForm d = fd_derivative(f, p, i);
    t.set_slice(f.spec.active_axes[i], k * triple_contract(d, f.values[p]));
  }
  return t;
}

inline TorsionField torsion(const FormField& f) {
  TorsionField out(f.spec);
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) out.values[p] = torsion_at(f, p);
  });
  return out;
}

// sum_m D_m T_{m;ab} with the m index raised; no projection.
inline TwoForm div_torsion_raw_at(const TorsionField& t, std::size_t p) {
  TwoForm d;
  for (int i = 0; i < t.spec.dims(); ++i) {
    const int m = t.spec.active_axes[i];
    const Stencil st = first_derivative_stencil(t.spec.stencil_order);
    const double inv_h = 1.0 / t.spec.spacing(i);
    for (int o = -st.radius; o <= st.radius; ++o) {
      const double w = st.w[o + st.radius] * inv_h;
      if (w == 0.0) continue;
      const Torsion& v = t.values[t.spec.neighbor(p, i, o)];
      for (int k = 0; k < 64; ++k) d.c[k] += w * v.c[64 * m + k];
    }
  }
  return (1.0 / t.spec.metric_scale) * d;
}

inline TwoFormField div_torsion_raw(const TorsionField& t) {
  TwoFormField out(t.spec);
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) out.values[p] = div_torsion_raw_at(t, p);
  });
  return out;
}

// Div T projected onto Omega^2_7 of the local form.
inline TwoFormField div_torsion(const TorsionField& t, const FormField& f) {
  TwoFormField out(t.spec);
  const double s = t.spec.metric_scale;
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) out.values[p] = pi7_scaled(div_torsion_raw_at(t, p), f.values[p], s);
  });
  return out;
}

// |T|^2 = T_{m;ab} T_{m;ab} with all three indices raised by the base metric.
inline double torsion_norm_sq(const Torsion& t, double s) { return sum_sq(t) / (s * s * s); }

inline double energy(const TorsionField& t) {
  std::vector<double> e(t.size());
  const double s = t.spec.metric_scale;
  for (std::size_t p = 0; p < t.size(); ++p) e[p] = torsion_norm_sq(t.values[p], s);
  return 0.5 * t.spec.metric_cell_volume() * pairwise_sum(e);
}

inline double max_torsion_norm(const TorsionField& t) {
  double m = 0.0;
  for (const auto& v : t.values) m = std::max(m, std::sqrt(torsion_norm_sq(v, t.spec.metric_scale)));
  return m;
}

// max over points and active m of |pi_21(T_m)| (max-abs entry).
inline double omega21_defect(const TorsionField& t, const FormField& f) {
  std::vector<double> d(t.size());
  const double s = t.spec.metric_scale;
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double w = 0.0;
      for (int m : t.spec.active_axes) {
        const Mat8 tm = t.values[p].slice(m);
        w = std::max(w, max_abs(tm - pi7_scaled(tm, f.values[p], s)));
      }
      d[p] = w;
    }
  });
  return max_of(d);
}

// max over points and active m of |D_m Phi - T_m <> Phi|.
inline double torsion_reconstruction_residual(const FormField& f, const TorsionField& t) {
  std::vector<double> d(f.size());
  const double s = f.spec.metric_scale;
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      double w = 0.0;
      for (int i = 0; i < f.spec.dims(); ++i) {
        const int m = f.spec.active_axes[i];
        w = std::max(w, max_abs(fd_derivative(f, p, i) - (1.0 / s) * diamond(t.values[p].slice(m), f.values[p])));
      }
      d[p] = w;
    }
  });
  return max_of(d);
}

namespace detail {

inline void require_unit_metric(const LatticeSpec& s, const char* what) {
  if (s.metric_scale != 1.0)
    throw std::invalid_argument(std::string(what) + " assumes the unit base metric");
}

// D_n T_{m;ab} for every active n: dt[n] holds the derivative along axis n.
inline std::array<Torsion, 8> torsion_gradient_at(const TorsionField& t, std::size_t p) {
  std::array<Torsion, 8> g{};
  for (int i = 0; i < t.spec.dims(); ++i) g[t.spec.active_axes[i]] = fd_derivative(t, p, i);
  return g;
}

}  // namespace detail

// grad_i T_{j;ab} - grad_j T_{i;ab} - 2 T_{i;am} T_{j;mb} + 2 T_{j;am} T_{i;mb}, max-abs.
inline double bianchi_residual(const TorsionField& t) {
  detail::require_unit_metric(t.spec, "bianchi_residual");
  std::vector<double> d(t.size());
  const auto& act = t.spec.active_axes;
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const auto g = detail::torsion_gradient_at(t, p);
      const Torsion& T = t.values[p];
      double w = 0.0;
      for (int i : act)
        for (int j : act) {
          if (j <= i) continue;
          for (int a = 0; a < 8; ++a)
            for (int bb = 0; bb < 8; ++bb) {
              double q = 0.0;
              for (int m = 0; m < 8; ++m) q += -2.0 * T(i, a, m) * T(j, m, bb) + 2.0 * T(j, a, m) * T(i, m, bb);
              w = std::max(w, std::abs(g[i](j, a, bb) - g[j](i, a, bb) + q));
            }
        }
      d[p] = w;
    }
  });
  return max_of(d);
}

// R_ij residual: 4 grad_i T_{a;ja} - 4 grad_a T_{i;ja} - 8 T_{i;jb} T_{a;ba} + 8 T_{a;jb} T_{i;ba}.
inline Mat8 ricci_residual_at(const TorsionField& t, std::size_t p) {
  const auto g = detail::torsion_gradient_at(t, p);
  const Torsion& T = t.values[p];
  Vec8 tr{};  // tr_b = T_{a;ba}
  for (int bb = 0; bb < 8; ++bb)
    for (int a = 0; a < 8; ++a) tr[bb] += T(a, bb, a);
  Mat8 r;
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j) {
      double v = 0.0;
      for (int a = 0; a < 8; ++a) v += 4.0 * g[i](a, j, a) - 4.0 * g[a](i, j, a);
      for (int bb = 0; bb < 8; ++bb) {
        v -= 8.0 * T(i, j, bb) * tr[bb];
        for (int a = 0; a < 8; ++a) v += 8.0 * T(a, j, bb) * T(i, bb, a);
      }
      r(i, j) = v;
    }
  return r;
}

inline double ricci_residual(const TorsionField& t) {
  detail::require_unit_metric(t.spec, "ricci_residual");
  std::vector<double> d(t.size());
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) d[p] = max_abs(ricci_residual_at(t, p));
  });
  return max_of(d);
}

// Trace of the Ricci residual:
// 4 grad_i T_{a;ia} - 4 grad_a T_{i;ia} - 8 T_{i;ib} T_{a;ba} + 8 T_{a;ib} T_{i;ba}.
inline double scalar_residual_at(const TorsionField& t, std::size_t p) {
  const auto g = detail::torsion_gradient_at(t, p);
  const Torsion& T = t.values[p];
  double v = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int a = 0; a < 8; ++a) v += 4.0 * g[i](a, i, a) - 4.0 * g[a](i, i, a);
  for (int bb = 0; bb < 8; ++bb) {
    double u = 0.0, w = 0.0;
    for (int i = 0; i < 8; ++i) u += T(i, i, bb);
    for (int a = 0; a < 8; ++a) w += T(a, bb, a);
    v -= 8.0 * u * w;
    for (int i = 0; i < 8; ++i)
      for (int a = 0; a < 8; ++a) v += 8.0 * T(a, i, bb) * T(i, bb, a);
  }
  return v;
}

// The variant with +8|T|^2 + 8 T_{a;jb} T_{j;ba} in place of the trace terms.
inline double scalar_residual_as_printed_at(const TorsionField& t, std::size_t p) {
  const auto g = detail::torsion_gradient_at(t, p);
  const Torsion& T = t.values[p];
  double v = 0.0;
  for (int i = 0; i < 8; ++i)
    for (int a = 0; a < 8; ++a) v += 4.0 * g[i](a, i, a) - 4.0 * g[a](i, i, a);
  v += 8.0 * sum_sq(T);
  for (int a = 0; a < 8; ++a)
    for (int j = 0; j < 8; ++j)
      for (int bb = 0; bb < 8; ++bb) v += 8.0 * T(a, j, bb) * T(j, bb, a);
  return v;
}

inline double scalar_residual(const TorsionField& t) {
  detail::require_unit_metric(t.spec, "scalar_residual");
  std::vector<double> d(t.size());
  parallel_for(t.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) d[p] = std::abs(scalar_residual_at(t, p));
  });
  return max_of(d);
}

inline double scalar_residual_as_printed(const TorsionField& t) {
  detail::require_unit_metric(t.spec, "scalar_residual_as_printed");
  std::vector<double> d(t.size());
  for (std::size_t p = 0; p < t.size(); ++p) d[p] = std::abs(scalar_residual_as_printed_at(t, p));
  return max_of(d);
}

}  // namespace spin7
