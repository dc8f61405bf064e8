#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace spin7;
using namespace testing_support;

namespace {

const FourForm& phi0() {
  static const FourForm f = cayley_form();
  return f;
}

std::array<double, 8> arr(const Flat<8>& v) {
  std::array<double, 8> a{};
  for (int i = 0; i < 8; ++i) a[i] = v.c[i];
  return a;
}

Octonion random_oct(std::mt19937_64& rng) { return Octonion::from(random_vec(rng)); }

}  // namespace

TEST(Octonion, ProductMatchesIndependentFanoOracle) {
  std::mt19937_64 rng(31);
  for (int k = 0; k < 20; ++k) {
    const Octonion a = random_oct(rng), b = random_oct(rng);
    const auto want = oracle::octmul(arr(a), arr(b));
    const Octonion got = oct_mul(a, b);
    for (int i = 0; i < 8; ++i) EXPECT_NEAR(got[i], want[i], 1e-15);
  }
}

TEST(Octonion, UnitSquaresAndComposition) {
  std::mt19937_64 rng(32);
  const Octonion b = random_oct(rng);
  EXPECT_EQ(max_abs(oct_mul(Octonion::unit(0), b) - b), 0.0);
  EXPECT_EQ(max_abs(oct_mul(b, Octonion::unit(0)) - b), 0.0);
  for (int i = 1; i < 8; ++i) {
    const Octonion s = oct_mul(Octonion::unit(i), Octonion::unit(i));
    EXPECT_EQ(s[0], -1.0);
    EXPECT_EQ(sum_sq(s), 1.0);
  }
  for (int k = 0; k < 100; ++k) {
    const Octonion x = random_oct(rng), y = random_oct(rng);
    EXPECT_NEAR(oct_norm(oct_mul(x, y)), oct_norm(x) * oct_norm(y), 1e-12);
  }
}

TEST(Octonion, AlternativeButNotAssociative) {
  std::mt19937_64 rng(33);
  const Octonion a = random_oct(rng), b = random_oct(rng), c = random_oct(rng);
  EXPECT_LT(max_abs(oct_mul(oct_mul(a, a), b) - oct_mul(a, oct_mul(a, b))), 1e-14);
  EXPECT_GT(max_abs(oct_mul(oct_mul(a, b), c) - oct_mul(a, oct_mul(b, c))), 1e-3);
}

TEST(OctonionTable, LoadsFileAndRejectsBadInput) {
  const OctonionTable t = OctonionTable::load(std::string(SPIN7_TEST_DATA) + "/standard_octonion.txt");
  EXPECT_EQ(t.index, OctonionTable::standard().index);
  EXPECT_EQ(t.sign, OctonionTable::standard().sign);
  EXPECT_THROW(OctonionTable::from_triples({{{1, 2, 4}, {1, 2, 5}, {3, 4, 6}, {4, 5, 7}, {5, 6, 1}, {6, 7, 2}, {7, 1, 3}}}),
               std::invalid_argument);
  EXPECT_THROW(OctonionTable::load("/nonexistent/table.txt"), std::runtime_error);
}

TEST(OctonionTable, CorruptedOrientationBreaksCompositionLaw) {
  const OctonionTable t = OctonionTable::load(std::string(SPIN7_TEST_DATA) + "/corrupt_octonion.txt");
  std::mt19937_64 rng(34);
  double worst = 0.0;
  for (int k = 0; k < 50; ++k) {
    const Octonion x = random_oct(rng), y = random_oct(rng);
    worst = std::max(worst, std::abs(oct_norm(oct_mul(x, y, t)) - oct_norm(x) * oct_norm(y)));
  }
  EXPECT_GT(worst, 1e-2);
  const auto suite = identity_suite(t, 3);
  EXPECT_FALSE(suite.front().passed());
}

TEST(Theta, MatchesDenseOracleAndIsLinear) {
  const auto d0 = dense(phi0());
  EXPECT_LT(diff(theta_form(Vec8::unit(1)), oracle::theta_dense(oracle::unit(1), d0)), 1e-14);
  std::mt19937_64 rng(35);
  const Vec8 x = random_vec(rng), y = random_vec(rng);
  EXPECT_LT(diff(theta_form(x), oracle::theta_dense(arr(x), d0)), 1e-13);
  EXPECT_EQ(max_abs(theta_form(Vec8{})), 0.0);
  EXPECT_LT(max_abs(theta_form(-1.0 * x) + theta_form(x)), 1e-15);
  EXPECT_LT(max_abs(theta_form(x + 2.0 * y) - theta_form(x) - 2.0 * theta_form(y)), 1e-13);
  EXPECT_LT(max_abs(theta_form(Vec8::unit(0)) - phi0()), 1e-15);
}

TEST(Bryant, ReducesToCayleyFormAtPoles) {
  BryantPoint p;
  p.f = 1.0;
  EXPECT_LT(max_abs(bryant_form(p) - phi0()), 1e-15);
  p.f = -1.0;
  EXPECT_LT(max_abs(bryant_form(p) - phi0()), 1e-15);
}

TEST(Bryant, EvenUnderAntipodalMap) {
  std::mt19937_64 rng(36);
  Vec8 x = random_vec(rng);
  x[0] = 0.0;
  x = (0.6 / std::sqrt(dot(x, x))) * x;
  const BryantPoint p{0.8, x}, q{-0.8, -1.0 * x};
  EXPECT_LT(max_abs(bryant_form(p) - bryant_form(q)), 1e-14);
}

TEST(Bryant, RejectsPointsOffTheSphere) {
  EXPECT_THROW(bryant_form(BryantPoint{0.9, Vec8{}}), std::invalid_argument);
}

// At f = 0 the formula returns X^(X_|Phi_0) weighted against -Phi_0; the result is
// anti-self-dual and induces no positive metric, so validation must refuse it.
TEST(Bryant, EquatorialPointFailsAdmissibility) {
  const BryantPoint p{0.0, Vec8::unit(1)};
  const FourForm s = bryant_form(p);
  EXPECT_LT(max_abs(hodge_star4(s) + s), 1e-14);
  EXPECT_TRUE(admissibility(s).degenerate);
  EXPECT_THROW(bryant_form_checked(p), InadmissibleForm);
}

TEST(Bryant, NoCoefficientRescalingRepairsTheFormula) {
  const std::vector<BryantPoint> pts = {{0.0, Vec8::unit(1)}, {0.6, 0.8 * Vec8::unit(2)}};
  const CoefficientSearch c = bryant_coefficient_search(pts, 4.0, 1.0);
  EXPECT_GT(c.residual, 0.1);
}

TEST(So8Exp, BasicProperties) {
  EXPECT_EQ(max_abs(so8_exp(Mat8{}) - Mat8::identity()), 0.0);
  std::mt19937_64 rng(37);
  for (double scale : {1e-3, 0.3, 1.0, 5.0}) {
    const Mat8 a = scale * random_skew(rng);
    const Mat8 r = so8_exp(a);
    EXPECT_LT(max_abs(transpose(r) * r - Mat8::identity()), 1e-13);
    EXPECT_NEAR(determinant(r), 1.0, 1e-13);
    EXPECT_LT(max_abs(so8_exp(-1.0 * a) - transpose(r)), 1e-13);
  }
  Mat8 bad;
  bad(0, 1) = 1.0;
  EXPECT_THROW(so8_exp(bad), std::invalid_argument);
}

TEST(So8Exp, TaylorRemainderIsCubic) {
  std::mt19937_64 rng(38);
  const Mat8 a = random_skew(rng);
  std::vector<double> h, e;
  for (double t : {1e-2, 5e-3, 2.5e-3}) {
    const Mat8 ta = t * a;
    h.push_back(t);
    e.push_back(max_abs(so8_exp(ta) - Mat8::identity() - ta - 0.5 * (ta * ta)));
  }
  EXPECT_NEAR(observed_order(h, e), 3.0, 0.05);
}

TEST(RotateForm, MatchesDenseOracle) {
  std::mt19937_64 rng(39);
  const Mat8 m = random_matrix(rng);
  const FourForm s = random_four(rng);
  EXPECT_LT(diff(rotate_form(m, s), oracle::rotate_dense(dense(m), dense(s))), 1e-12);
}

TEST(RotateForm, GroupActionAndIdentity) {
  std::mt19937_64 rng(40);
  const FourForm s = random_four(rng);
  EXPECT_LT(max_abs(rotate_form(Mat8::identity(), s) - s), 1e-15);
  const Mat8 r1 = random_rotation(rng), r2 = random_rotation(rng);
  EXPECT_LT(max_abs(rotate_form(r1 * r2, s) - rotate_form(r1, rotate_form(r2, s))), 1e-13);
  EXPECT_THROW(rotate_form(Mat8{}, s), std::invalid_argument);
}

TEST(RotateForm, PreservesAdmissibilityAndMetric) {
  std::mt19937_64 rng(41);
  const FourForm f = rotate_form(random_rotation(rng), phi0());
  EXPECT_TRUE(admissibility(f).ok(1e-10));
}

TEST(RotateForm, DerivativeIsDiamond) {
  std::mt19937_64 rng(42);
  const Mat8 a = random_skew(rng);
  const double t = 1e-5;
  const FourForm d = (1.0 / (2 * t)) * (rotate_form(so8_exp(t * a), phi0()) - rotate_form(so8_exp(-t * a), phi0()));
  EXPECT_LT(max_abs(d - diamond(a, phi0())), 1e-9);
}

TEST(RotateForm, StabiliserAlgebraFixesCayleyForm) {
  std::mt19937_64 rng(43);
  for (int k = 0; k < 5; ++k) {
    const TwoForm a21 = 3.0 * pi21(random_skew(rng), phi0());
    EXPECT_LT(max_abs(rotate_form(so8_exp(a21), phi0()) - phi0()), 1e-10);
  }
}
