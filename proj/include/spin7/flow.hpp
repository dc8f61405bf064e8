#pragma once

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <numbers>
#include <random>
#include <stdexcept>
#include <string>
#include <vector>

#include "spin7/algebra.hpp"
#include "spin7/cayley_spinor.hpp"
#include "spin7/forms.hpp"
#include "spin7/lattice.hpp"
#include "spin7/parallel.hpp"

namespace spin7 {

struct FlowAbort : std::runtime_error {
  using std::runtime_error::runtime_error;
};

struct FlowState {
  FormField field;
  double t = 0.0;
  long step = 0;
};

// ---------------------------------------------------------------- initial data

struct InitialDataParams {
  std::string family = "constant";
  double amplitude = 0.0;
  int mode = 1;
  std::uint64_t seed = 0;
  double width = 0.0;  // bump width; 0 selects period/16
};

namespace detail {

inline double uniform_pm1(std::mt19937_64& rng) {
  return 2.0 * std::ldexp(static_cast<double>(rng() >> 11), -53) - 1.0;
}

}  // namespace detail

// Unit-Frobenius element of Omega^2_7(phi) from a seeded skew matrix.
inline TwoForm random_omega7(std::mt19937_64& rng, const FourForm& phi) {
  TwoForm b;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      const double v = detail::uniform_pm1(rng);
      b(i, j) = v;
      b(j, i) = -v;
    }
  TwoForm a = pi7(b, phi);
  return (1.0 / std::sqrt(sum_sq(a))) * a;
}

inline TwoForm random_omega21(std::mt19937_64& rng, const FourForm& phi) {
  TwoForm b;
  for (int i = 0; i < 8; ++i)
    for (int j = i + 1; j < 8; ++j) {
      const double v = detail::uniform_pm1(rng);
      b(i, j) = v;
      b(j, i) = -v;
    }
  TwoForm a = pi21(b, phi);
  return (1.0 / std::sqrt(sum_sq(a))) * a;
}

// Periodized Gaussian exp(-d^2/(2 w^2)) summed over images.
inline double periodic_gaussian(double x, double center, double width, double period) {
  double s = 0.0;
  for (int k = -3; k <= 3; ++k) {
    const double d = x - center + k * period;
    s += std::exp(-d * d / (2.0 * width * width));
  }
  return s;
}

// Lie-algebra generator X(x) in Omega^2_7(Phi_0) defining Phi(x) = exp(X(x)) . Phi_0.
inline LatticeField<TwoForm> initial_generator(const InitialDataParams& ip, const LatticeSpec& spec) {
  const FourForm phi0 = cayley_form();
  LatticeField<TwoForm> gen(spec);
  std::mt19937_64 rng(ip.seed);
  const double tau = 2.0 * std::numbers::pi;
  const int k = spec.dims();
  if (ip.family == "constant") return gen;
  if (ip.family == "rotation-field" || ip.family == "bump") {
    const TwoForm a = random_omega7(rng, phi0);
    for (std::size_t p = 0; p < gen.size(); ++p) {
      double th = 0.0;
      if (ip.family == "rotation-field") {
        for (int i = 0; i < k; ++i)
          th += std::sin(tau * ip.mode * spec.coordinate(p, i) / spec.period[spec.active_axes[i]]);
      } else {
        th = 1.0;
        for (int i = 0; i < k; ++i) {
          const double l = spec.period[spec.active_axes[i]];
          const double w = ip.width > 0 ? ip.width : l / 16.0;
          th *= periodic_gaussian(spec.coordinate(p, i), 0.5 * l, w, l);
        }
      }
      gen.values[p] = (ip.amplitude * th) * a;
    }
    return gen;
  }
  if (ip.family == "random-smooth") {
    // One wavevector per +/- pair in {-mode..mode}^k, each with cos and sin generators.
    std::vector<std::vector<int>> waves;
    std::vector<int> kv(k, -ip.mode);
    while (true) {
      bool zero = true, positive = false;
      for (int c : kv) {
        if (c != 0) {
          if (zero) positive = c > 0;
          zero = false;
        }
      }
      if (!zero && positive) waves.push_back(kv);
      int i = k - 1;
      while (i >= 0 && kv[i] == ip.mode) kv[i--] = -ip.mode;
      if (i < 0) break;
      ++kv[i];
    }
    std::vector<std::pair<TwoForm, TwoForm>> coeff;
    for (std::size_t w = 0; w < waves.size(); ++w) {
      const TwoForm c = random_omega7(rng, phi0);
      const TwoForm s = random_omega7(rng, phi0);
      coeff.emplace_back(c, s);
    }
    for (std::size_t p = 0; p < gen.size(); ++p) {
      TwoForm x;
      for (std::size_t w = 0; w < waves.size(); ++w) {
        double ph = 0.0, k2 = 0.0;
        for (int i = 0; i < k; ++i) {
          ph += tau * waves[w][i] * spec.coordinate(p, i) / spec.period[spec.active_axes[i]];
          k2 += waves[w][i] * waves[w][i];
        }
        x += (std::cos(ph) / k2) * coeff[w].first + (std::sin(ph) / k2) * coeff[w].second;
      }
      gen.values[p] = ip.amplitude * x;
    }
    return gen;
  }
  throw std::invalid_argument("unknown initial-data family: " + ip.family);
}

inline FlowState initial_data(const InitialDataParams& ip, const LatticeSpec& spec, bool validate = true) {
  spec.validate();
  if (!(spec.metric_scale == 1.0)) throw std::invalid_argument("initial_data builds forms for the unit base metric");
  FlowState st;
  st.field = FormField(spec);
  const FourForm phi0 = cayley_form();
  if (ip.family == "bryant-wave") {
    // (f, X) = (cos psi, sin psi u) with psi periodic and u a fixed unit imaginary octonion.
    Vec8 u{};
    u[1] = 1.0;
    const double tau = 2.0 * std::numbers::pi;
    for (std::size_t p = 0; p < st.field.size(); ++p) {
      double psi = 0.0;
      for (int i = 0; i < spec.dims(); ++i)
        psi += ip.amplitude * std::sin(tau * ip.mode * spec.coordinate(p, i) / spec.period[spec.active_axes[i]]);
      BryantPoint bp;
      bp.f = std::cos(psi);
      bp.x = std::sin(psi) * u;
      st.field.values[p] = bryant_form_checked(bp);
    }
    return st;
  }
  const auto gen = initial_generator(ip, spec);
  parallel_for(st.field.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) st.field.values[p] = rotate_form(so8_exp(gen.values[p]), phi0);
  });
  if (validate) {
    std::vector<double> dev(st.field.size());
    parallel_for(st.field.size(), [&](std::size_t b, std::size_t e) {
      for (std::size_t p = b; p < e; ++p) {
        try {
          dev[p] = metric_deviation(st.field.values[p]);
        } catch (const DegenerateForm&) {
          dev[p] = INFINITY;
        }
      }
    });
    for (double d : dev)
      if (!(d <= 1e-8)) throw InadmissibleForm("initial data: induced metric deviates from identity");
  }
  return st;
}

// ---------------------------------------------------------------- stepping

struct Evaluation {
  TorsionField torsion;
  TwoFormField div;  // pi_7-projected
  double energy = 0;
  double div_sq_integral = 0;  // integral of |Div T|^2, full contraction
  double max_torsion = 0;
  double max_div = 0;  // max-abs entry of Div T
};

inline Evaluation evaluate(const FormField& f) {
  Evaluation ev;
  ev.torsion = torsion(f);
  ev.div = div_torsion(ev.torsion, f);
  ev.energy = energy(ev.torsion);
  ev.max_torsion = max_torsion_norm(ev.torsion);
  const double s = f.spec.metric_scale;
  std::vector<double> d2(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    d2[p] = sum_sq(ev.div.values[p]) / (s * s);
    for (double x : ev.div.values[p].c) {
      if (!std::isfinite(x)) ev.max_div = INFINITY;
      ev.max_div = std::max(ev.max_div, std::abs(x));
    }
  }
  ev.div_sq_integral = f.spec.metric_cell_volume() * pairwise_sum(d2);
  return ev;
}

enum class Integrator { LieEuler, RawEuler };

// Pointwise update Phi <- exp(dt * Div T) . Phi, with Div T as an endomorphism (one index raised).
inline FormField apply_step(const FormField& f, const TwoFormField& div, double dt,
                            Integrator integ = Integrator::LieEuler) {
  FormField out(f.spec);
  const double k = dt / f.spec.metric_scale;
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const Mat8 gen = k * div.values[p];
      out.values[p] = integ == Integrator::LieEuler ? rotate_form_unchecked(so8_exp(gen), f.values[p])
                                                    : f.values[p] + diamond(gen, f.values[p]);
    }
  });
  for (const auto& v : out.values)
    if (!all_finite(v)) throw FlowAbort("non-finite value produced by flow step");
  return out;
}

inline double max_stable_dt(const LatticeSpec& s) {
  const double h = s.min_spacing();
  return s.metric_scale * h * h;
}

inline FlowState flow_step(const FlowState& st, double dt, Integrator integ = Integrator::LieEuler) {
  if (!(dt > 0.0) || dt > max_stable_dt(st.field.spec))
    throw std::invalid_argument("flow_step: dt must lie in (0, s h^2]");
  const Evaluation ev = evaluate(st.field);
  FlowState out;
  out.field = apply_step(st.field, ev.div, dt, integ);
  out.t = st.t + dt;
  out.step = st.step + 1;
  return out;
}

// ---------------------------------------------------------------- gradient check

struct GradientCheck {
  double finite_difference = 0, analytic = 0, rel_error = 0;
};

// (E(exp(eps X).Phi) - E(exp(-eps X).Phi)) / (2 eps) against -int <Div T, X> (full contraction).
inline GradientCheck energy_gradient_check(const FlowState& st, const TwoFormField& x, double eps) {
  const FormField& f = st.field;
  const double s = f.spec.metric_scale;
  FormField fp(f.spec), fm(f.spec);
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const Mat8 g = (eps / s) * x.values[p];
      fp.values[p] = rotate_form_unchecked(so8_exp(g), f.values[p]);
      fm.values[p] = rotate_form_unchecked(so8_exp(-g), f.values[p]);
    }
  });
  GradientCheck gc;
  gc.finite_difference = (energy(torsion(fp)) - energy(torsion(fm))) / (2.0 * eps);
  const Evaluation ev = evaluate(f);
  std::vector<double> ip(f.size());
  for (std::size_t p = 0; p < f.size(); ++p) {
    double acc = 0.0;
    for (int k = 0; k < 64; ++k) acc += ev.div.values[p].c[k] * x.values[p].c[k];
    ip[p] = acc / (s * s);
  }
  gc.analytic = -f.spec.metric_cell_volume() * pairwise_sum(ip);
  const double diff = std::abs(gc.finite_difference - gc.analytic);
  gc.rel_error = gc.analytic == 0.0 ? diff : diff / std::abs(gc.analytic);
  return gc;
}

// ---------------------------------------------------------------- torsion-norm evolution

struct QuarticTerms {
  double q1 = 0, q2 = 0;
};

// q1 = T_{a;bp} T_{m;bc} T_{a;pq} T_{m;qc},  q2 = T_{a;bp} T_{m;bc} T_{a;cq} T_{m;pq}.
inline QuarticTerms quartic_terms(const Torsion& t) {
  std::array<Mat8, 8> sl;
  std::array<bool, 8> nz{};
  for (int m = 0; m < 8; ++m) {
    sl[m] = t.slice(m);
    nz[m] = max_abs(sl[m]) != 0.0;
  }
  QuarticTerms q;
  for (int a = 0; a < 8; ++a) {
    if (!nz[a]) continue;
    const Mat8 ta = sl[a];
    const Mat8 ta2 = ta * ta;
    const Mat8 tat = transpose(ta);
    for (int m = 0; m < 8; ++m) {
      if (!nz[m]) continue;
      const Mat8 tm = sl[m];
      const Mat8 tmt = transpose(tm);
      // q1: sum_{b,q} (T_a^2)_{bq} (T_m T_m^t)_{bq}
      const Mat8 mm = tm * tmt;
      for (int k = 0; k < 64; ++k) q.q1 += ta2.c[k] * mm.c[k];
      // q2: trace(T_a^t T_m T_a T_m^t)
      q.q2 += trace(tat * tm * ta * tmt);
    }
  }
  return q;
}

// max over the grid of 2 d_t|T|^2 - [2 Lap|T|^2 - 4|grad T|^2 + 16 q1 + 16 q2], central time difference.
inline double torsion_evolution_residual(const FlowState& prev, const FlowState& cur, const FlowState& next) {
  const LatticeSpec& spec = cur.field.spec;
  detail::require_unit_metric(spec, "torsion_evolution_residual");
  const double dt2 = next.t - prev.t;
  if (!(dt2 > 0.0)) throw std::invalid_argument("torsion_evolution_residual: states must be time ordered");
  const TorsionField tp = torsion(prev.field), tc = torsion(cur.field), tn = torsion(next.field);
  LatticeField<double> n2(spec);
  for (std::size_t p = 0; p < n2.size(); ++p) n2.values[p] = sum_sq(tc.values[p]);
  const LatticeField<double> lap = fd_laplacian_scalar(n2);
  std::vector<double> r(spec.npoints());
  parallel_for(r.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      const double dtn = (sum_sq(tn.values[p]) - sum_sq(tp.values[p])) / dt2;
      double g2 = 0.0;
      for (int i = 0; i < spec.dims(); ++i) g2 += sum_sq(fd_derivative(tc, p, i));
      const QuarticTerms q = quartic_terms(tc.values[p]);
      r[p] = std::abs(2.0 * dtn - (2.0 * lap.values[p] - 4.0 * g2 + 16.0 * q.q1 + 16.0 * q.q2));
    }
  });
  return max_of(r);
}

// ---------------------------------------------------------------- Theta and entropy

// Periodized 1D heat kernel (4 pi tau)^{-1/2} exp(-s (dx + nL)^2 / (4 tau)); images are
// added until a term drops below 1e-16 of the running sum.
inline double periodic_heat_kernel(double dx, double period, double tau, double s) {
  const double norm = 1.0 / std::sqrt(4.0 * std::numbers::pi * tau);
  auto term = [&](int n) {
    const double d = dx + n * period;
    return norm * std::exp(-s * d * d / (4.0 * tau));
  };
  double sum = term(0);
  for (int n = 1;; ++n) {
    const double a = term(n) + term(-n);
    sum += a;
    if (a <= 1e-16 * sum || n > 100000) break;
  }
  return sum;
}

// Per-point weight |T|^2_g times the Riemannian cell volume over active axes.
inline std::vector<double> theta_density(const TorsionField& t) {
  const LatticeSpec& s = t.spec;
  double cell = 1.0;
  for (int i = 0; i < s.dims(); ++i) cell *= s.spacing(i) * std::sqrt(s.metric_scale);
  std::vector<double> w(t.size());
  for (std::size_t p = 0; p < t.size(); ++p) w[p] = cell * torsion_norm_sq(t.values[p], s.metric_scale);
  return w;
}

// tau * sum_y |T|^2(y) u(y) with u the backward heat kernel centred at grid point x0, tau = t0 - t.
inline double theta_from_density(const LatticeSpec& s, const std::vector<double>& w, std::size_t x0, double tau) {
  if (!(tau > 0.0)) throw std::invalid_argument("theta: requires t < t0");
  const int k = s.dims();
  std::vector<std::vector<double>> ker(k, std::vector<double>(s.n));
  for (int i = 0; i < k; ++i) {
    const double c0 = s.coordinate(x0, i), l = s.period[s.active_axes[i]];
    for (int j = 0; j < s.n; ++j) ker[i][j] = periodic_heat_kernel(j * s.spacing(i) - c0, l, tau, s.metric_scale);
  }
  std::vector<double> terms(w.size());
  for (std::size_t p = 0; p < w.size(); ++p) {
    double kp = 1.0;
    std::size_t q = p;
    for (int i = k - 1; i >= 0; --i) {
      kp *= ker[i][q % s.n];
      q /= s.n;
    }
    terms[p] = w[p] * kp;
  }
  return tau * pairwise_sum(terms);
}

inline double theta(const FormField& f, std::size_t x0, double t, double t0) {
  const TorsionField tf = torsion(f);
  return theta_from_density(f.spec, theta_density(tf), x0, t0 - t);
}

inline std::vector<double> theta_series(const std::vector<FlowState>& states, std::size_t x0, double t0) {
  std::vector<double> out;
  for (const auto& s : states) out.push_back(theta(s.field, x0, s.t, t0));
  return out;
}

// Geometric scale grid sigma * 2^(-8 i / n); the n-point grid is contained in the 2n-point grid.
inline std::vector<double> entropy_scales(double sigma, int n) {
  std::vector<double> t(n);
  for (int i = 0; i < n; ++i) t[i] = sigma * std::exp2(-8.0 * i / n);
  return t;
}

struct EntropyResult {
  double value = 0;
  std::size_t x = 0;
  double scale = 0;
};

// max over scales in (0, sigma] and strided centres of t * int |T|^2 u_{(x,t)}.
inline EntropyResult entropy(const FormField& f, double sigma, int t_samples = 16, int x_stride = 1) {
  if (!(sigma > 0.0)) throw std::invalid_argument("entropy: sigma must be positive");
  if (t_samples < 1 || x_stride < 1) throw std::invalid_argument("entropy: sampling counts must be positive");
  const TorsionField tf = torsion(f);
  const std::vector<double> w = theta_density(tf);
  const LatticeSpec& s = f.spec;
  std::vector<std::size_t> centres;
  for (std::size_t p = 0; p < s.npoints(); ++p) {
    const auto c = s.coords(p);
    bool on = true;
    for (int ci : c) on = on && (ci % x_stride == 0);
    if (on) centres.push_back(p);
  }
  const auto scales = entropy_scales(sigma, t_samples);
  std::vector<EntropyResult> per(centres.size());
  parallel_for(centres.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t c = b; c < e; ++c) {
      EntropyResult r{0.0, centres[c], 0.0};
      for (double t : scales) {
        const double v = theta_from_density(s, w, centres[c], t);
        if (v > r.value) r = {v, centres[c], t};
      }
      per[c] = r;
    }
  });
  EntropyResult best;
  for (const auto& r : per)
    if (r.value > best.value) best = r;
  return best;
}

// ---------------------------------------------------------------- solitons

// max-abs of Div T - X _| T - pi_7(grad X), with (X _| T)_{ab} = X_m T_{m;ab}.
inline double soliton_residual(const FormField& f, const LatticeField<Vec8>& x) {
  detail::require_unit_metric(f.spec, "soliton_residual");
  const TorsionField tf = torsion(f);
  const TwoFormField dv = div_torsion(tf, f);
  std::vector<double> r(f.size());
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      TwoForm xt;
      for (int m : f.spec.active_axes)
        if (x.values[p][m] != 0.0) xt += x.values[p][m] * tf.values[p].slice(m);
      Mat8 gx;  // (grad X)_{ab} = D_a X_b
      for (int i = 0; i < f.spec.dims(); ++i) {
        const Vec8 d = fd_derivative(x, p, i);
        for (int bb = 0; bb < 8; ++bb) gx(f.spec.active_axes[i], bb) = d[bb];
      }
      r[p] = max_abs(dv.values[p] - xt - pi7(skew_part(gx), f.values[p]));
    }
  });
  return max_of(r);
}

struct SolitonSchedule {
  int c = 0;
  double p = 1.0;
  double t_hat = 0.0;
  double interval_lo = -INFINITY, interval_hi = INFINITY;

  double rho(double t) const { return c == 0 ? 1.0 : std::pow(std::abs(t), p); }
  double alpha(double t) const { return c == 0 ? 1.0 : -2.0 * p / (c * t); }
  bool in_interval(double t) const { return t >= interval_lo && t <= interval_hi; }
};

inline SolitonSchedule soliton_schedule(int c, double p) {
  if (c < -1 || c > 1) throw std::invalid_argument("soliton_schedule: c must be -1, 0 or 1");
  if (!(p > 0.0)) throw std::invalid_argument("soliton_schedule: p must be positive");
  SolitonSchedule s;
  s.c = c;
  s.p = p;
  if (c == 0) return s;
  s.t_hat = -2.0 * p * c;
  if (c == 1) {
    s.interval_lo = -INFINITY;
    s.interval_hi = s.t_hat;
  } else {
    s.interval_lo = s.t_hat;
    s.interval_hi = INFINITY;
  }
  return s;
}

struct InvariantCheck {
  std::string name;
  bool ok;
  double error;
};

// rho(0) = 1, alpha(t_hat) = 1, t_hat in I, and alpha = -(2/c)(log rho)' sampled on I.
inline std::vector<InvariantCheck> check_schedule(const SolitonSchedule& s) {
  std::vector<InvariantCheck> out;
  const double r0 = s.rho(0.0);
  out.push_back({"rho(0)=1", r0 == 1.0, std::abs(r0 - 1.0)});
  const double at = s.alpha(s.t_hat);
  out.push_back({"alpha(t_hat)=1", at == 1.0, std::abs(at - 1.0)});
  out.push_back({"t_hat in I", s.in_interval(s.t_hat), 0.0});
  if (s.c != 0) {
    double worst = 0.0;
    for (int k = 0; k < 32; ++k) {
      const double t = s.t_hat + (s.c == 1 ? -1.0 : 1.0) * std::abs(s.t_hat) * (k / 8.0);
      const double h = 1e-5 * std::abs(t);
      const double dlog = (std::log(s.rho(t + h)) - std::log(s.rho(t - h))) / (2.0 * h);
      const double want = -(2.0 / s.c) * dlog;
      worst = std::max(worst, std::abs(s.alpha(t) - want) / std::max(1.0, std::abs(want)));
    }
    out.push_back({"alpha=-(2/c)(log rho)' on I", worst < 1e-8, worst});
  } else {
    double worst = 0.0;
    for (int k = -16; k <= 16; ++k) {
      worst = std::max(worst, std::abs(s.rho(k * 0.5) - 1.0));
      worst = std::max(worst, std::abs(s.alpha(k * 0.5) - 1.0));
    }
    out.push_back({"rho=alpha=1 on R", worst == 0.0, worst});
  }
  return out;
}

// ---------------------------------------------------------------- parabolic rescaling

struct RescaleReport {
  double torsion_rel = 0;   // max |T~ - c^2 T| / max |c^2 T|
  double div_rel = 0;       // max |Div~ T~ - Div T| / max |Div T|
  double norm0_rel = 0;     // |T~|_g~ vs c^-1 |T|_g
  double norm1_rel = 0;     // |grad T~|_g~ vs c^-2 |grad T|_g
};

// Phi~ = c^4 Phi on the same coordinates, base metric scaled by c^2, t~ = c^2 t.
inline FlowState parabolic_rescale(const FlowState& st, double c) {
  if (!(c > 0.0)) throw std::invalid_argument("parabolic_rescale: c must be positive");
  FlowState out = st;
  const double c4 = c * c * c * c;
  for (auto& v : out.field.values) v *= c4;
  out.field.spec.metric_scale = st.field.spec.metric_scale * c * c;
  out.t = st.t * c * c;
  return out;
}

namespace detail {

inline double rel_max(const std::vector<double>& diff, const std::vector<double>& ref) {
  const double d = max_of(diff), r = max_of(ref);
  return r == 0.0 ? d : d / r;
}

}  // namespace detail

inline RescaleReport verify_rescale(const FlowState& orig, const FlowState& scaled, double c) {
  const TorsionField t0 = torsion(orig.field), t1 = torsion(scaled.field);
  const TwoFormField d0 = div_torsion(t0, orig.field), d1 = div_torsion(t1, scaled.field);
  const double s0 = orig.field.spec.metric_scale, s1 = scaled.field.spec.metric_scale;
  const std::size_t n = t0.size();
  std::vector<double> dt(n), rt(n), dd(n), rd(n), dn0(n), rn0(n), dn1(n), rn1(n);
  for (std::size_t p = 0; p < n; ++p) {
    dt[p] = max_abs(t1.values[p] - (c * c) * t0.values[p]);
    rt[p] = max_abs((c * c) * t0.values[p]);
    dd[p] = max_abs(d1.values[p] - d0.values[p]);
    rd[p] = max_abs(d0.values[p]);
    const double n0 = std::sqrt(torsion_norm_sq(t0.values[p], s0)) / c;
    const double n0s = std::sqrt(torsion_norm_sq(t1.values[p], s1));
    dn0[p] = std::abs(n0s - n0);
    rn0[p] = n0;
    double g0 = 0.0, g1 = 0.0;
    for (int i = 0; i < t0.spec.dims(); ++i) {
      g0 += sum_sq(fd_derivative(t0, p, i));
      g1 += sum_sq(fd_derivative(t1, p, i));
    }
    const double n1 = std::sqrt(g0 / (s0 * s0 * s0 * s0)) / (c * c);
    const double n1s = std::sqrt(g1 / (s1 * s1 * s1 * s1));
    dn1[p] = std::abs(n1s - n1);
    rn1[p] = n1;
  }
  RescaleReport r;
  r.torsion_rel = detail::rel_max(dt, rt);
  r.div_rel = detail::rel_max(dd, rd);
  r.norm0_rel = detail::rel_max(dn0, rn0);
  r.norm1_rel = detail::rel_max(dn1, rn1);
  return r;
}

// ---------------------------------------------------------------- run loop

struct DiagRecord {
  long step = 0;
  double t = 0, energy = 0, dEdt = 0, neg_div_sq = 0, max_torsion = 0;
  double bianchi = 0, ricci = 0, scalar = 0, metric_drift = 0, omega21_defect = 0;
  double generator_defect = 0, max_div = 0;
};

struct FlowConfig {
  LatticeSpec lattice;
  InitialDataParams initial;
  double cfl = 0.1;
  double t_end = INFINITY;
  long max_steps = -1;
  int diag_every = 1;
  int checkpoint_every = 0;
  double convergence_tol = 1e-8;
  double blowup_factor = 1e6;
  Integrator integrator = Integrator::LieEuler;
  bool residuals = true;
  bool metric_drift = true;

  double dt() const { return cfl * max_stable_dt(lattice); }
  void validate() const {
    lattice.validate();
    if (!(cfl > 0.0 && cfl < 1.0)) throw std::invalid_argument("cfl must lie in (0, 1)");
    if (max_steps < 0 && !std::isfinite(t_end)) throw std::invalid_argument("need t_end or max_steps");
    if (diag_every < 1) throw std::invalid_argument("diag_every must be >= 1");
    if (checkpoint_every < 0) throw std::invalid_argument("checkpoint_every must be >= 0");
  }
};

struct RunHooks {
  std::function<void(const DiagRecord&)> on_record;
  std::function<void(const FlowState&)> on_checkpoint;
};

struct RunResult {
  std::vector<DiagRecord> records;
  FlowState final_state;
  std::string exit_reason;
  double final_max_div = 0;
  double max_generator_defect = 0;
};

// max over points of |pi_21(gen)| for the projected generator.
inline double generator_defect(const TwoFormField& div, const FormField& f) {
  double w = 0.0;
  const double s = f.spec.metric_scale;
  for (std::size_t p = 0; p < f.size(); ++p)
    w = std::max(w, max_abs(div.values[p] - pi7_scaled(div.values[p], f.values[p], s)));
  return w;
}

inline double max_metric_drift(const FormField& f) {
  const double s = f.spec.metric_scale;
  std::vector<double> d(f.size());
  parallel_for(f.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t p = b; p < e; ++p) {
      try {
        d[p] = max_abs(metric_from_form(f.values[p]) - s * Mat8::identity());
      } catch (const DegenerateForm&) {
        d[p] = INFINITY;
      }
    }
  });
  double m = 0.0;
  for (double x : d) m = std::max(m, x);
  return m;
}

inline DiagRecord make_record(const FlowState& st, const Evaluation& ev, double e_next, double dt,
                              const FlowConfig& cfg) {
  DiagRecord r;
  r.step = st.step;
  r.t = st.t;
  r.energy = ev.energy;
  r.dEdt = (e_next - ev.energy) / dt;
  r.neg_div_sq = -ev.div_sq_integral;
  r.max_torsion = ev.max_torsion;
  r.max_div = ev.max_div;
  if (cfg.residuals && st.field.spec.metric_scale == 1.0) {
    r.bianchi = bianchi_residual(ev.torsion);
    r.ricci = ricci_residual(ev.torsion);
    r.scalar = scalar_residual(ev.torsion);
  }
  if (cfg.metric_drift) r.metric_drift = max_metric_drift(st.field);
  r.omega21_defect = omega21_defect(ev.torsion, st.field);
  r.generator_defect = generator_defect(ev.div, st.field);
  return r;
}

// Records are emitted for every diag_every-th step and for the final state; dEdt is the
// forward difference to the next step (a trial step for the final record).
inline RunResult run_flow(const FlowConfig& cfg, FlowState st, const RunHooks& hooks = {}) {
  cfg.validate();
  const double dt = cfg.dt();
  const double blowup = cfg.blowup_factor / st.field.spec.min_spacing();
  RunResult res;
  Evaluation ev = evaluate(st.field);
  auto emit = [&](const DiagRecord& r) {
    res.records.push_back(r);
    res.max_generator_defect = std::max(res.max_generator_defect, r.generator_defect);
    if (hooks.on_record) hooks.on_record(r);
  };
  while (true) {
    std::string reason;
    if (!std::isfinite(ev.energy) || !std::isfinite(ev.max_div)) throw FlowAbort("non-finite torsion");
    if (ev.max_div < cfg.convergence_tol) reason = "converged";
    else if (ev.max_torsion > blowup) reason = "blowup";
    else if (cfg.max_steps >= 0 && st.step >= cfg.max_steps) reason = "max_steps";
    else if (st.t + 0.5 * dt >= cfg.t_end) reason = "t_end";
    if (!reason.empty()) {
      const FormField trial = apply_step(st.field, ev.div, dt, cfg.integrator);
      emit(make_record(st, ev, energy(torsion(trial)), dt, cfg));
      res.exit_reason = reason;
      res.final_max_div = ev.max_div;
      if (hooks.on_checkpoint) hooks.on_checkpoint(st);
      res.final_state = std::move(st);
      return res;
    }
    FlowState next;
    next.field = apply_step(st.field, ev.div, dt, cfg.integrator);
    next.t = st.t + dt;
    next.step = st.step + 1;
    Evaluation ev_next = evaluate(next.field);
    if (st.step % cfg.diag_every == 0) emit(make_record(st, ev, ev_next.energy, dt, cfg));
    st = std::move(next);
    ev = std::move(ev_next);
    if (cfg.checkpoint_every > 0 && st.step % cfg.checkpoint_every == 0 && hooks.on_checkpoint)
      hooks.on_checkpoint(st);
  }
}

// ---------------------------------------------------------------- descriptive diagnostics

// First recorded time where max|T| exceeds twice its initial value (infinity if never).
inline double doubling_time(const std::vector<DiagRecord>& rec) {
  if (rec.empty()) return INFINITY;
  for (const auto& r : rec)
    if (r.max_torsion > 2.0 * rec.front().max_torsion) return r.t;
  return INFINITY;
}

// Least-squares slope of log max|T| against log(tau - t); Type-I blow-up gives about -1/2.
inline double blowup_exponent(const std::vector<DiagRecord>& rec, double tau) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  int n = 0;
  for (const auto& r : rec) {
    if (!(r.t < tau) || !(r.max_torsion > 0)) continue;
    const double x = std::log(tau - r.t), y = std::log(r.max_torsion);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
    ++n;
  }
  if (n < 2) return NAN;
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

// d^2E/dt^2 from three consecutive energies against int (Lambda - 3|T|^2)|Div T|^2,
// Lambda the lowest nonzero eigenvalue (2 pi / L)^2 of the flat torus.
struct ConvexityDiagnostic {
  double second_derivative = 0, lower_bound = 0;
  bool violated = false;
};

inline ConvexityDiagnostic convexity_diagnostic(const FlowState& prev, const FlowState& cur, const FlowState& next) {
  const double dt = cur.t - prev.t;
  const Evaluation ep = evaluate(prev.field), ec = evaluate(cur.field), en = evaluate(next.field);
  const LatticeSpec& s = cur.field.spec;
  double lmax = 0.0;
  for (int a : s.active_axes) lmax = std::max(lmax, s.period[a]);
  const double lam = std::pow(2.0 * std::numbers::pi / lmax, 2) / s.metric_scale;
  std::vector<double> w(cur.field.size());
  for (std::size_t p = 0; p < w.size(); ++p)
    w[p] = (lam - 3.0 * torsion_norm_sq(ec.torsion.values[p], s.metric_scale)) * sum_sq(ec.div.values[p]);
  ConvexityDiagnostic d;
  d.second_derivative = (en.energy - 2.0 * ec.energy + ep.energy) / (dt * dt);
  d.lower_bound = s.metric_cell_volume() * pairwise_sum(w);
  d.violated = d.second_derivative < d.lower_bound - 1e-6 * std::max(1.0, std::abs(d.lower_bound));
  return d;
}

}  // namespace spin7
