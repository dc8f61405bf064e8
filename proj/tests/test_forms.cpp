#include <gtest/gtest.h>

#include <random>

#include "support.hpp"

using namespace spin7;
using namespace testing_support;

TEST(IndexTables, CanonicalCombinationsAreAscendingAndComplete) {
  EXPECT_EQ(kPairs.size(), 28u);
  EXPECT_EQ(kTriples.size(), 56u);
  EXPECT_EQ(kQuads.size(), 70u);
  for (const auto& q : kQuads) EXPECT_TRUE(q[0] < q[1] && q[1] < q[2] && q[2] < q[3]);
  for (std::size_t n = 1; n < kQuads.size(); ++n) EXPECT_TRUE(kQuads[n - 1] < kQuads[n]);
}

TEST(IndexTables, LookupSignsFollowPermutationParity) {
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) {
          const int e = lookup4(i, j, k, l);
          const bool distinct = i != j && i != k && i != l && j != k && j != l && k != l;
          if (!distinct) {
            EXPECT_EQ(e, 0);
            continue;
          }
          std::vector<int> v = {i, j, k, l};
          std::vector<int> s = v;
          std::sort(s.begin(), s.end());
          std::vector<int> pos(4);
          for (int a = 0; a < 4; ++a) pos[a] = static_cast<int>(std::find(s.begin(), s.end(), v[a]) - s.begin());
          const int sign = oracle::perm_parity(pos);
          const auto& q = kQuads[std::abs(e) - 1];
          EXPECT_EQ((std::array<int, 4>{q[0], q[1], q[2], q[3]}), (std::array<int, 4>{s[0], s[1], s[2], s[3]}));
          EXPECT_EQ(e > 0 ? 1 : -1, sign);
        }
}

TEST(FourFormAccess, DenseAccessorIsTotallyAntisymmetric) {
  std::mt19937_64 rng(1);
  const FourForm f = random_four(rng);
  for (int i = 0; i < 8; ++i)
    for (int j = 0; j < 8; ++j)
      for (int k = 0; k < 8; ++k)
        for (int l = 0; l < 8; ++l) {
          EXPECT_EQ(f(i, j, k, l), -f(j, i, k, l));
          EXPECT_EQ(f(i, j, k, l), -f(i, j, l, k));
          EXPECT_EQ(f(i, j, k, l), f(k, l, i, j));
        }
}

TEST(FourFormAccess, AntisymmetrizeOfDenseFormIsIdentity) {
  std::mt19937_64 rng(2);
  const FourForm f = random_four(rng);
  EXPECT_LT(max_abs(antisymmetrize(to_dense(f)) - f), 1e-15);
}

TEST(MatrixOps, DeterminantAndProducts) {
  Mat8 a = Mat8::identity();
  a(0, 1) = 3.0;
  a(2, 2) = 2.0;
  a(7, 7) = -0.5;
  EXPECT_NEAR(determinant(a), -1.0, 1e-15);
  std::mt19937_64 rng(3);
  const Mat8 m = random_matrix(rng), n = random_matrix(rng);
  EXPECT_NEAR(determinant(m * n), determinant(m) * determinant(n), 1e-12);
  EXPECT_LT(max_abs(transpose(m * n) - transpose(n) * transpose(m)), 1e-14);
  EXPECT_LT(max_abs(skew_part(m) + sym_part(m) - m), 1e-15);
}

TEST(Hodge, CoordinateFormMapsToComplement) {
  const int n = lookup4(0, 1, 2, 3) - 1;
  const FourForm s = hodge_star4(FourForm::basis(n));
  EXPECT_EQ(s(4, 5, 6, 7), 1.0);
  EXPECT_EQ(sum_sq(s), 1.0);
}

TEST(Hodge, InvolutionAndDenseOracle) {
  std::mt19937_64 rng(4);
  const FourForm f = random_four(rng);
  EXPECT_LT(max_abs(hodge_star4(hodge_star4(f)) - f), 1e-15);
  EXPECT_LT(diff(hodge_star4(f), oracle::hodge_dense(dense(f))), 1e-14);
}

TEST(Inner, ConventionIsOneOverKFactorialFullContraction) {
  std::mt19937_64 rng(5);
  const FourForm a = random_four(rng), b = random_four(rng);
  const auto da = dense(a), db = dense(b);
  double full = 0.0;
  for (int i = 0; i < 4096; ++i) full += da[i] * db[i];
  EXPECT_NEAR(form_inner(a, b), full / 24.0, 1e-12);
  TwoForm e12;
  e12(0, 1) = 1.0;
  e12(1, 0) = -1.0;
  EXPECT_EQ(form_inner(e12, e12), 1.0);
  const TwoForm s = random_skew(rng);
  EXPECT_NEAR(form_inner(s, s), 0.5 * sum_sq(s), 1e-15);
}

TEST(Interior, MatchesExplicitContraction) {
  std::mt19937_64 rng(6);
  const FourForm f = random_four(rng);
  const Vec8 v = random_vec(rng);
  const ThreeForm g = interior(v, f);
  for (int j = 0; j < 8; ++j)
    for (int k = 0; k < 8; ++k)
      for (int l = 0; l < 8; ++l) {
        double s = 0.0;
        for (int i = 0; i < 8; ++i) s += v[i] * f(i, j, k, l);
        EXPECT_NEAR(g(j, k, l), s, 1e-14);
      }
  const TwoForm t = interior(v, g);
  EXPECT_LT(max_abs(t), 1e-14);  // v _| v _| f = 0
}

TEST(Wedge, DeterminantConventionOnCoordinateForms) {
  ThreeForm g;
  g.c[lookup3(1, 2, 3) - 1] = 1.0;
  const FourForm w = wedge(Vec8::unit(0), g);
  EXPECT_EQ(w(0, 1, 2, 3), 1.0);
  EXPECT_EQ(sum_sq(w), 1.0);
  EXPECT_LT(max_abs(wedge(Vec8::unit(1), g)), 1e-300);
}

TEST(FlatValues, FiniteAndNormHelpers) {
  Vec8 v;
  EXPECT_TRUE(all_finite(v));
  v[3] = -2.0;
  EXPECT_EQ(max_abs(v), 2.0);
  EXPECT_EQ(sum_sq(v), 4.0);
  v[4] = NAN;
  EXPECT_FALSE(all_finite(v));
}
