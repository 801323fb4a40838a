#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "ymmb/lie_group.hpp"

using namespace ymmb;

namespace {

const LieGroup su2(GroupKind::SU2);
const LieGroup u1(GroupKind::U1);

AlgebraElement random_algebra(std::mt19937_64& rng, const LieGroup& g, double scale = 1.0) {
  std::normal_distribution<double> n(0.0, scale);
  return g.project(AlgebraElement(n(rng), n(rng), n(rng)));
}

bool same(const GroupElement& a, const GroupElement& b, double tol) { return (a.coeffs() - b.coeffs()).norm() < tol; }

}  // namespace

TEST(LieGroupExp, ZeroIsIdentity) { EXPECT_TRUE(same(su2.exp(AlgebraElement::Zero()), GroupElement::Identity(), 1e-15)); }

TEST(LieGroupExp, QuarterTurnAboutE1) {
  EXPECT_TRUE(same(su2.exp(M_PI / 2 * AlgebraElement::UnitX()), GroupElement(0, 1, 0, 0), 1e-15));
}

TEST(LieGroupExp, U1WrapsThreePi) {
  const GroupElement u = u1.exp(AlgebraElement(3 * M_PI, 0, 0));
  EXPECT_NEAR(std::abs(std::atan2(u.x(), u.w())), M_PI, 1e-12);
}

TEST(LieGroupLog, IdentityIsZero) { EXPECT_EQ(su2.log(GroupElement::Identity()).norm(), 0.0); }

TEST(LieGroupLog, InvertsQuarterTurn) {
  EXPECT_LT((su2.log(GroupElement(0, 1, 0, 0)) - M_PI / 2 * AlgebraElement::UnitX()).norm(), 1e-15);
}

TEST(LieGroupLog, MinusOneIsCutLocus) {
  EXPECT_THROW(su2.log(GroupElement(-1, 0, 0, 0)), CutLocusError);
  try {
    su2.log(GroupElement(-1, 0, 0, 0));
  } catch (const CutLocusError& e) {
    EXPECT_EQ(e.element().w(), -1.0);
  }
  EXPECT_THROW(u1.log(GroupElement(-1, 0, 0, 0)), CutLocusError);
}

TEST(LieGroupLog, RoundTripOnHaarSamples) {
  std::mt19937_64 rng(1);
  for (const LieGroup* g : {&su2, &u1}) {
    int checked = 0;
    for (int k = 0; k < 10000; ++k) {
      const GroupElement u = g->haar_sample(rng);
      if (g->near_cut_locus(u) || LieGroup::angle(u) > M_PI - 1e-3) continue;
      const AlgebraElement x = g->log(u);
      EXPECT_LT(x.norm(), M_PI);
      ASSERT_TRUE(same(g->exp(x), u, 1e-10));
      ++checked;
    }
    EXPECT_GT(checked, 9000);
  }
}

TEST(LieGroupAd, IdentityAndAbelian) {
  std::mt19937_64 rng(2);
  const AlgebraElement x = random_algebra(rng, su2);
  EXPECT_LT((LieGroup::ad(GroupElement::Identity(), x) - x).norm(), 1e-15);
  const AlgebraElement y = random_algebra(rng, u1);
  EXPECT_LT((LieGroup::ad(u1.haar_sample(rng), y) - y).norm(), 1e-15);
}

TEST(LieGroupAd, QuaternionIConjugatesE2) {
  EXPECT_LT((LieGroup::ad(GroupElement(0, 1, 0, 0), AlgebraElement::UnitY()) + AlgebraElement::UnitY()).norm(), 1e-15);
}

TEST(LieGroupAd, PreservesInnerProduct) {
  std::mt19937_64 rng(3);
  for (int k = 0; k < 1000; ++k) {
    const GroupElement g = su2.haar_sample(rng);
    const AlgebraElement x = random_algebra(rng, su2), y = random_algebra(rng, su2);
    EXPECT_NEAR(LieGroup::inner(LieGroup::ad(g, x), LieGroup::ad(g, y)), LieGroup::inner(x, y), 1e-12);
  }
}

TEST(LieGroupAd, IsDerivativeOfConjugation) {
  // d/dt g^{-1} exp(tX) g = ad(g, X)
  std::mt19937_64 rng(4);
  const GroupElement g = su2.haar_sample(rng);
  const AlgebraElement x = random_algebra(rng, su2);
  const double h = 1e-6;
  const GroupElement p = g.conjugate() * su2.exp(h * x) * g;
  const GroupElement m = g.conjugate() * su2.exp(-h * x) * g;
  const AlgebraElement fd = (p.vec() - m.vec()) / (2 * h);
  EXPECT_LT((fd - LieGroup::ad(g, x)).norm(), 1e-8);
}

TEST(LieGroupBracket, Properties) {
  std::mt19937_64 rng(5);
  const AlgebraElement x = random_algebra(rng, su2), y = random_algebra(rng, su2), z = random_algebra(rng, su2);
  EXPECT_EQ(LieGroup::bracket(x, x).norm(), 0.0);
  EXPECT_LT((LieGroup::bracket(x, y) + LieGroup::bracket(y, x)).norm(), 1e-14);
  const AlgebraElement jac = LieGroup::bracket(x, LieGroup::bracket(y, z)) + LieGroup::bracket(y, LieGroup::bracket(z, x)) +
                             LieGroup::bracket(z, LieGroup::bracket(x, y));
  EXPECT_LT(jac.norm(), 1e-12);
  EXPECT_LT((LieGroup::bracket(AlgebraElement::UnitX(), AlgebraElement::UnitY()) - 2 * AlgebraElement::UnitZ()).norm(),
            1e-15);
  // Commutator of pure quaternions.
  const GroupElement c = pure(x) * pure(y);
  const GroupElement d = pure(y) * pure(x);
  EXPECT_LT((c.vec() - d.vec() - LieGroup::bracket(x, y)).norm(), 1e-14);
}

TEST(LieGroupInner, SymmetricPositive) {
  std::mt19937_64 rng(6);
  const AlgebraElement x = random_algebra(rng, su2), y = random_algebra(rng, su2);
  EXPECT_EQ(LieGroup::inner(x, y), LieGroup::inner(y, x));
  EXPECT_GT(LieGroup::inner(x, x), 0.0);
}

TEST(LieGroupHaar, U1StaysOnSubgroupAndSu2IsUniformish) {
  std::mt19937_64 rng(7);
  double mean_w = 0.0;
  for (int k = 0; k < 20000; ++k) {
    const GroupElement u = u1.haar_sample(rng);
    EXPECT_EQ(u.y(), 0.0);
    EXPECT_EQ(u.z(), 0.0);
    mean_w += su2.haar_sample(rng).w();
  }
  EXPECT_NEAR(mean_w / 20000, 0.0, 0.02);
}

TEST(LieGroupMultiply, UnitNormAfterLongChain) {
  std::mt19937_64 rng(8);
  GroupElement p = GroupElement::Identity();
  const GroupElement a = su2.haar_sample(rng), b = su2.haar_sample(rng);
  for (int k = 0; k < 100000; ++k) p = su2.multiply(p, (k % 2) ? a : b);
  EXPECT_NEAR(p.norm(), 1.0, 1e-12);
  EXPECT_NEAR(su2.exp(su2.log(p)).norm(), 1.0, 1e-12);
}

TEST(LieGroupCutLocus, MarginsPerGroup) {
  EXPECT_TRUE(su2.near_cut_locus(GroupElement(-1 + 1e-7, std::sqrt(1 - (1 - 1e-7) * (1 - 1e-7)), 0, 0)));
  EXPECT_FALSE(su2.near_cut_locus(su2.exp(AlgebraElement(3.0, 0, 0))));
  EXPECT_TRUE(u1.near_cut_locus(u1.exp(AlgebraElement(M_PI - 1e-7, 0, 0))));
  EXPECT_FALSE(u1.near_cut_locus(u1.exp(AlgebraElement(M_PI - 1e-5, 0, 0))));
  const LieGroup loose(GroupKind::U1, 1e-3);
  EXPECT_TRUE(loose.near_cut_locus(u1.exp(AlgebraElement(M_PI - 1e-4, 0, 0))));
}

class DlogTest : public ::testing::TestWithParam<double> {};

TEST_P(DlogTest, RightAndLeftJacobiansMatchFiniteDifferences) {
  std::mt19937_64 rng(9);
  for (int k = 0; k < 20; ++k) {
    AlgebraElement x = random_algebra(rng, su2);
    x *= GetParam() / x.norm();
    const Eigen::MatrixXd jr = su2.dlog_right(x);
    const Eigen::MatrixXd jl = su2.dlog_left(x);
    const double h = 1e-6;
    for (int j = 0; j < 3; ++j) {
      const AlgebraElement y = LieGroup::basis(j);
      const AlgebraElement r = (su2.log(su2.exp(x) * su2.exp(h * y)) - su2.log(su2.exp(x) * su2.exp(-h * y))) / (2 * h);
      const AlgebraElement l = (su2.log(su2.exp(h * y) * su2.exp(x)) - su2.log(su2.exp(-h * y) * su2.exp(x))) / (2 * h);
      EXPECT_LT((r - jr.col(j)).norm(), 1e-7) << "theta=" << GetParam();
      EXPECT_LT((l - jl.col(j)).norm(), 1e-7) << "theta=" << GetParam();
    }
  }
}

INSTANTIATE_TEST_SUITE_P(Angles, DlogTest, ::testing::Values(1e-6, 1e-3, 0.3, 1.0, 2.0, 2.9));

TEST(LieGroupNames, RoundTripAndReject) {
  EXPECT_EQ(group_kind_from_string(to_string(GroupKind::U1)), GroupKind::U1);
  EXPECT_EQ(group_kind_from_string(to_string(GroupKind::SU2)), GroupKind::SU2);
  EXPECT_THROW(group_kind_from_string("so3"), std::invalid_argument);
}
