#include <gtest/gtest.h>

#include <numbers>
#include <random>

#include "support.hpp"

using namespace spin7;
using namespace testing_support;

namespace {

constexpr double kTau = 2.0 * std::numbers::pi;

// Omega^2_7 direction used by rotation-field data with the given seed.
TwoForm rotation_generator(std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  return random_omega7(rng, cayley_form());
}

FlowState smooth_state(std::vector<int> axes, int n, int order, double amplitude = 0.3, std::uint64_t seed = 5) {
  LatticeSpec s;
  s.active_axes = std::move(axes);
  s.n = n;
  s.stencil_order = order;
  InitialDataParams ip;
  ip.family = "random-smooth";
  ip.amplitude = amplitude;
  ip.seed = seed;
  return initial_data(ip, s);
}

}  // namespace

TEST(LatticeSpec, ValidationRejectsBadSpecs) {
  LatticeSpec s = line_spec(16);
  EXPECT_NO_THROW(s.validate());
  s.active_axes = {2, 1};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = line_spec(16);
  s.active_axes = {8};
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = line_spec(16, 3);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = line_spec(6, 4);
  EXPECT_THROW(s.validate(), std::invalid_argument);
  s = line_spec(16);
  s.period[0] = 0.0;
  EXPECT_THROW(s.validate(), std::invalid_argument);
}

TEST(LatticeSpec, IndexCoordsAndNeighborsRoundTrip) {
  LatticeSpec s;
  s.active_axes = {1, 4, 6};
  s.n = 8;
  s.period = {1, 2, 1, 1, 3, 1, 0.5, 1};
  EXPECT_EQ(s.npoints(), 512u);
  for (std::size_t p = 0; p < s.npoints(); ++p) EXPECT_EQ(s.index(s.coords(p)), p);
  const std::size_t p = s.index({7, 0, 3});
  EXPECT_EQ(s.coords(s.neighbor(p, 0, 1)), (std::vector<int>{0, 0, 3}));
  EXPECT_EQ(s.coords(s.neighbor(p, 1, -1)), (std::vector<int>{7, 7, 3}));
  EXPECT_EQ(s.coords(s.neighbor(p, 2, 2)), (std::vector<int>{7, 0, 5}));
  EXPECT_DOUBLE_EQ(s.coordinate(p, 0), 7 * 2.0 / 8);
  EXPECT_DOUBLE_EQ(s.min_spacing(), 0.5 / 8);
  EXPECT_DOUBLE_EQ(s.cell_volume(), (2.0 / 8) * (3.0 / 8) * (0.5 / 8));
}

TEST(Stencil, CentralDifferenceWeightsAtSmallestGrid) {
  LatticeSpec s = line_spec(4);
  LatticeField<Vec8> f(s);
  for (std::size_t p = 0; p < 4; ++p) f.values[p][0] = static_cast<double>(p == 1);
  // D f at p = sum_o w_o f(p+o)/h with f a unit spike at 1, h = 1/4.
  const std::array<double, 4> want = {-0.5 * 4, 0.0, 0.5 * 4, 0.0};
  for (std::size_t p = 0; p < 4; ++p) EXPECT_DOUBLE_EQ(fd_derivative(f, p, 0)[0], want[(p + 2) % 4]);
  const Stencil s4 = first_derivative_stencil(4);
  EXPECT_EQ(s4.radius, 2);
  EXPECT_NEAR(s4.w[0] + s4.w[1] + s4.w[2] + s4.w[3] + s4.w[4], 0.0, 1e-15);
  EXPECT_THROW(first_derivative_stencil(3), std::invalid_argument);
}

TEST(Stencil, SineDerivativeConvergesAtStencilOrder) {
  for (int order : {2, 4}) {
    std::vector<double> h, e, h2, e2;
    for (int n : {16, 32, 64}) {
      const LatticeSpec s = line_spec(n, order);
      LatticeField<Vec8> f(s);
      LatticeField<double> g(s);
      for (std::size_t p = 0; p < f.size(); ++p) {
        f.values[p][3] = std::sin(kTau * s.coordinate(p, 0));
        g.values[p] = f.values[p][3];
      }
      const LatticeField<double> lap = fd_laplacian_scalar(g);
      double err = 0.0, err2 = 0.0;
      for (std::size_t p = 0; p < f.size(); ++p) {
        err = std::max(err, std::abs(fd_derivative(f, p, 0)[3] - kTau * std::cos(kTau * s.coordinate(p, 0))));
        err2 = std::max(err2, std::abs(lap.values[p] + kTau * kTau * g.values[p]));
      }
      h.push_back(s.spacing(0));
      e.push_back(err);
      e2.push_back(err2);
    }
    EXPECT_NEAR(observed_order(h, e), order, 0.1) << "order " << order;
    EXPECT_NEAR(observed_order(h, e2), order, 0.1) << "laplacian order " << order;
  }
}

TEST(Stencil, SummationByPartsIsExact) {
  const LatticeSpec s = line_spec(24, 4);
  std::mt19937_64 rng(9);
  LatticeField<Vec8> u(s), v(s);
  for (std::size_t p = 0; p < u.size(); ++p) {
    u.values[p] = random_vec(rng);
    v.values[p] = random_vec(rng);
  }
  double a = 0.0, b = 0.0;
  for (std::size_t p = 0; p < u.size(); ++p) {
    a += dot(fd_derivative(u, p, 0), v.values[p]);
    b += dot(u.values[p], fd_derivative(v, p, 0));
  }
  EXPECT_NEAR(a, -b, 1e-12);
}

TEST(Torsion, ConstantFieldIsExactlyTorsionFree) {
  InitialDataParams ip;
  for (const std::vector<int>& axes : {std::vector<int>{0}, std::vector<int>{2, 5}}) {
    LatticeSpec s;
    s.active_axes = axes;
    s.n = 8;
    const FlowState st = initial_data(ip, s);
    const Evaluation ev = evaluate(st.field);
    for (const auto& t : ev.torsion.values) EXPECT_EQ(max_abs(t), 0.0);
    EXPECT_EQ(ev.energy, 0.0);
    EXPECT_EQ(ev.max_div, 0.0);
  }
}

// For Phi = exp(theta(x) A) . Phi_0 with A in Omega^2_7 the torsion is theta'(x) A exactly.
TEST(Torsion, RotationFieldMatchesAnalyticTorsion) {
  const double amp = 0.3;
  const TwoForm a = rotation_generator(7);
  for (int order : {2, 4}) {
    std::vector<double> h, e;
    for (int n : {16, 32, 64}) {
      const FlowState st = rotation_state(n, order, amp);
      const TorsionField t = torsion(st.field);
      double err = 0.0;
      for (std::size_t p = 0; p < t.size(); ++p) {
        const double d = amp * kTau * std::cos(kTau * st.field.spec.coordinate(p, 0));
        err = std::max(err, max_abs(t.values[p].slice(0) - d * a));
        for (int m = 1; m < 8; ++m) EXPECT_EQ(max_abs(t.values[p].slice(m)), 0.0);
      }
      h.push_back(st.field.spec.spacing(0));
      e.push_back(err);
    }
    EXPECT_NEAR(observed_order(h, e), order, 0.2);
  }
}

TEST(Torsion, ReconstructionResidualConvergesAtStencilOrder) {
  for (int order : {2, 4}) {
    std::vector<double> h, e;
    for (int n : {16, 32, 64}) {
      const FlowState st = rotation_state(n, order, 0.3);
      h.push_back(st.field.spec.spacing(0));
      e.push_back(torsion_reconstruction_residual(st.field, torsion(st.field)));
    }
    EXPECT_NEAR(observed_order(h, e), order, 0.2);
  }
}

// The contraction Lambda^4 -> Lambda^2 is Spin(7)-equivariant and Lambda^4 has no 21-dimensional
// summand, so the computed torsion lies in Omega^2_7 up to rounding on any grid.
TEST(Torsion, Omega21DefectIsRoundoff) {
  for (int n : {16, 32}) {
    const FlowState st = smooth_state({0, 3}, n, 2);
    EXPECT_LT(omega21_defect(torsion(st.field), st.field), 1e-13);
  }
}

TEST(Divergence, MatchesAnalyticSecondDerivative) {
  const double amp = 0.3;
  const TwoForm a = rotation_generator(7);
  std::vector<double> h, e;
  for (int n : {16, 32, 64}) {
    const FlowState st = rotation_state(n, 2, amp);
    const TorsionField t = torsion(st.field);
    const TwoFormField d = div_torsion(t, st.field);
    double err = 0.0;
    for (std::size_t p = 0; p < d.size(); ++p) {
      const double x = st.field.spec.coordinate(p, 0);
      err = std::max(err, max_abs(d.values[p] + (amp * kTau * kTau * std::sin(kTau * x)) * a));
    }
    h.push_back(st.field.spec.spacing(0));
    e.push_back(err);
  }
  EXPECT_NEAR(observed_order(h, e), 2.0, 0.2);
}

TEST(Divergence, ProjectionIsIdempotentAndRawAgreesInTangentCase) {
  const FlowState st = smooth_state({1, 2}, 16, 2);
  const TorsionField t = torsion(st.field);
  const TwoFormField raw = div_torsion_raw(t);
  const TwoFormField proj = div_torsion(t, st.field);
  for (std::size_t p = 0; p < t.size(); ++p) {
    EXPECT_LT(max_abs(pi7(proj.values[p], st.field.values[p]) - proj.values[p]), 1e-12);
    EXPECT_LT(max_abs(pi7(raw.values[p], st.field.values[p]) - proj.values[p]), 1e-12);
  }
}

TEST(Energy, MatchesAnalyticIntegral) {
  // E = (1/2) int theta'^2 |A|^2 = (1/2) amp^2 (2 pi)^2 / 2 for unit-Frobenius A and unit periods.
  const double amp = 0.2;
  const double want = 0.25 * amp * amp * kTau * kTau;
  std::vector<double> h, e;
  for (int n : {16, 32, 64}) {
    const FlowState st = rotation_state(n, 2, amp);
    h.push_back(st.field.spec.spacing(0));
    e.push_back(std::abs(energy(torsion(st.field)) - want));
  }
  EXPECT_LT(e.back() / want, 1e-2);
  EXPECT_NEAR(observed_order(h, e), 2.0, 0.2);
}

TEST(Energy, ScalesWithInactivePeriods) {
  FlowState st = rotation_state(16);
  const double e1 = energy(torsion(st.field));
  st.field.spec.period[5] = 3.0;
  EXPECT_NEAR(energy(torsion(st.field)), 3.0 * e1, 1e-14);
}

TEST(FlatIdentities, ResidualsVanishOnTorsionFreeData) {
  LatticeSpec s;
  s.active_axes = {0, 1};
  s.n = 8;
  const FlowState st = initial_data(InitialDataParams{}, s);
  const TorsionField t = torsion(st.field);
  EXPECT_EQ(bianchi_residual(t), 0.0);
  EXPECT_EQ(ricci_residual(t), 0.0);
  EXPECT_EQ(scalar_residual(t), 0.0);
}

TEST(FlatIdentities, ResidualsDecayAtStencilOrderOnTwoAxisData) {
  for (int order : {2, 4}) {
    std::vector<double> h, b, r, sc;
    for (int n : {16, 32, 64}) {
      const FlowState st = smooth_state({0, 3}, n, order);
      const TorsionField t = torsion(st.field);
      h.push_back(st.field.spec.spacing(0));
      b.push_back(bianchi_residual(t));
      r.push_back(ricci_residual(t));
      sc.push_back(scalar_residual(t));
    }
    EXPECT_NEAR(observed_order(h, b), order, 0.2) << "bianchi p=" << order;
    EXPECT_NEAR(observed_order(h, r), order, 0.2) << "ricci p=" << order;
    EXPECT_NEAR(observed_order(h, sc), order, 0.2) << "scalar p=" << order;
  }
}

// The alternative quadratic terms (+8|T|^2 + 8 T_{a;jb} T_{j;ba}) leave an O(1) residual.
TEST(FlatIdentities, PrintedScalarVariantDoesNotConverge) {
  std::vector<double> e;
  for (int n : {16, 32}) {
    const FlowState st = smooth_state({0, 3}, n, 2);
    e.push_back(scalar_residual_as_printed(torsion(st.field)));
  }
  EXPECT_GT(e[1], 1.0);
  EXPECT_GT(e[1], 0.5 * e[0]);
}

TEST(FlatIdentities, Omega21NoiseControlDoesNotDecay) {
  std::vector<double> e;
  for (int n : {16, 32, 64}) {
    const FlowState st = smooth_state({0, 3}, n, 2);
    TorsionField t = torsion(st.field);
    std::mt19937_64 rng(77);
    for (std::size_t p = 0; p < t.size(); ++p) {
      Torsion& v = t.values[p];
      for (int m : {0, 3}) v.set_slice(m, v.slice(m) + 0.01 * random_omega21(rng, st.field.values[p]));
    }
    e.push_back(bianchi_residual(t));
  }
  EXPECT_GT(e[2], e[0]);
}

TEST(FlatIdentities, RequireUnitBaseMetric) {
  FlowState st = rotation_state(16);
  st.field.spec.metric_scale = 2.0;
  const TorsionField t = torsion(st.field);
  EXPECT_THROW(bianchi_residual(t), std::invalid_argument);
  EXPECT_THROW(scalar_residual(t), std::invalid_argument);
}
