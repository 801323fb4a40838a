#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace ymmb;
using namespace ymmb::testing;

namespace {

const LieGroup su2(GroupKind::SU2);
const LieGroup u1(GroupKind::U1);

struct Fixture {
  std::shared_ptr<const OrientedCellComplex> cx;
  SpanningTree tree;
  Connection ref;
};

// Irreducible reference on the (2,2) grid: random small tangent off the trivial connection.
Fixture make_setup(const LieGroup& g, std::mt19937_64& rng, double scale = 0.5) {
  Fixture s;
  s.cx = share(build_torus_grid(2, 2));
  s.tree = spanning_tree(*s.cx, 0);
  for (;;) {
    s.ref = retract(Connection::trivial(s.cx, g), random_tangent(Connection::trivial(s.cx, g), s.tree, rng, scale));
    if (g.abelian() || stabilizer_dimension(s.ref) == 0) return s;
  }
}

ModelPerturbation make_term(const Fixture& s, std::mt19937_64& rng, int k) {
  return make_model_perturbation(s.ref, random_tangent(s.ref, s.tree, rng), k, s.tree);
}

}  // namespace

TEST(Cutoff, PlateauSupportAndSlope) {
  for (int k : {1, 2, 5}) {
    EXPECT_EQ(cutoff(0.0, k), 1.0);
    EXPECT_EQ(cutoff_prime(0.0, k), 0.0);
    EXPECT_EQ(cutoff(1.0 / (k * k), k), 1.0);
    EXPECT_EQ(cutoff(4.0 / (k * k), k), 0.0);
    EXPECT_EQ(cutoff(5.0 / (k * k), k), 0.0);
  }
  double max_slope = 0.0;
  for (int i = 0; i <= 10000; ++i) {
    const double x = -5.0 + 10.0 * i / 10000;
    max_slope = std::max(max_slope, std::abs(bump_prime(x)));
    EXPECT_GE(bump(x), 0.0);
    EXPECT_LE(bump(x), 1.0);
  }
  EXPECT_LT(max_slope, 1.0);
  EXPECT_GT(max_slope, 0.6);
}

TEST(Cutoff, DerivativeMatchesFiniteDifferences) {
  const double h = 1e-6;
  for (int k : {1, 3}) {
    for (int i = 1; i < 200; ++i) {
      const double r = 5.0 * i / 200 / (k * k);
      const double fd = (cutoff(r + h, k) - cutoff(r - h, k)) / (2 * h);
      EXPECT_NEAR(fd, cutoff_prime(r, k), 1e-8 * k * k) << r;
    }
  }
}

TEST(Slice, ReferenceIsOrigin) {
  std::mt19937_64 rng(1);
  const Fixture s = make_setup(su2, rng);
  const SliceCoordinates sc = slice_coordinates(s.ref, s.ref, s.tree);
  EXPECT_LT(sc.alpha.max_abs(), 1e-12);
  EXPECT_LT(LieGroup::angle(sc.c), 1e-9);
  EXPECT_LE(sc.residual, 1e-8);
}

TEST(Slice, RecoversConstantConjugation) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 10; ++k) {
    const Fixture s = make_setup(su2, rng, 0.8);
    const GroupElement c0 = su2.haar_sample(rng);
    const Connection a = apply_gauge(s.ref, GaugeTransform{std::vector<GroupElement>(s.cx->vertex_count, c0)});
    const SliceCoordinates sc = slice_coordinates(a, s.ref, s.tree);
    EXPECT_LT(sc.alpha.max_abs(), 1e-9);
    // Stabilizer is trivial, so c = +-c0.
    EXPECT_GT(std::abs(sc.c.dot(c0)), 1 - 1e-9);
  }
}

TEST(Slice, AbelianIsAngleDifference) {
  std::mt19937_64 rng(3);
  const Fixture s = make_setup(u1, rng);
  const TangentField xi = random_tangent(s.ref, s.tree, rng, 0.3);
  const Connection a = retract(s.ref, xi);
  const SliceCoordinates sc = slice_coordinates(a, s.ref, s.tree);
  double n2 = 0;
  for (int e : s.tree.free_edges) {
    EXPECT_NEAR(sc.alpha.values[e][0], xi.values[e][0], 1e-13);
    n2 += s.cx->edge_weights[e] * xi.values[e][0] * xi.values[e][0];
  }
  EXPECT_NEAR(sc.norm_sq, n2, 1e-13);
  for (int e : s.tree.tree_edges) EXPECT_EQ(sc.alpha.values[e].norm(), 0.0);
}

TEST(Slice, OptimalityAndOrbitMinimum) {
  // D(c) at the returned c is no larger than at nearby conjugations.
  std::mt19937_64 rng(4);
  const Fixture s = make_setup(su2, rng);
  const Connection a = retract(s.ref, random_tangent(s.ref, s.tree, rng, 0.3));
  const SliceCoordinates sc = slice_coordinates(a, s.ref, s.tree);
  EXPECT_LE(sc.residual, 1e-8);
  std::normal_distribution<double> n(0.0, 0.05);
  for (int k = 0; k < 50; ++k) {
    const GroupElement c2 = su2.multiply(sc.c, su2.exp(AlgebraElement(n(rng), n(rng), n(rng))));
    double d2 = 0;
    for (int e : s.tree.free_edges) {
      const GroupElement w = c2.conjugate() * s.ref.edges[e] * c2;
      d2 += s.cx->edge_weights[e] * su2.log(w.conjugate() * a.edges[e]).squaredNorm();
    }
    EXPECT_GE(d2, sc.norm_sq - 1e-12);
  }
}

TEST(Slice, CutLocusIsNotInDomain) {
  std::mt19937_64 rng(5);
  const Fixture s = make_setup(u1, rng);
  Connection a = s.ref;
  const int e = s.tree.free_edges[0];
  a.edges[e] = u1.multiply(s.ref.edges[e], GroupElement(-1, 0, 0, 0));
  EXPECT_THROW(slice_coordinates(a, s.ref, s.tree), NotInDomainError);
}

TEST(ModelPerturbation, EtaOrthogonalToOrbit) {
  std::mt19937_64 rng(6);
  const Fixture s = make_setup(su2, rng);
  const ModelPerturbation m = make_term(s, rng, 2);
  for (int j = 0; j < 3; ++j) {
    double ip = 0;
    for (int e : s.tree.free_edges) {
      const AlgebraElement o = LieGroup::basis(j) - LieGroup::ad(s.ref.edges[e], LieGroup::basis(j));
      ip += s.cx->edge_weights[e] * o.dot(m.eta.values[e]);
    }
    EXPECT_LT(std::abs(ip), 1e-10);
  }
  for (int e : s.tree.tree_edges) EXPECT_EQ(m.eta.values[e].norm(), 0.0);
  EXPECT_DOUBLE_EQ(m.support_radius(), 1.0);
  EXPECT_THROW(make_model_perturbation(s.ref, m.eta, 0, s.tree), std::invalid_argument);
}

TEST(Value, ZeroAtReference) {
  std::mt19937_64 rng(7);
  const Fixture s = make_setup(su2, rng);
  PerturbationBank bank(s.tree);
  bank.add(make_term(s, rng, 1), 0.7);
  EXPECT_NEAR(bank.value(s.ref), 0.0, 1e-12);
}

TEST(Value, PlateauIsPairing) {
  std::mt19937_64 rng(8);
  for (const LieGroup* g : {&u1, &su2}) {
    const Fixture s = make_setup(*g, rng);
    const ModelPerturbation m = make_term(s, rng, 1);
    const Connection a = retract(s.ref, random_tangent(s.ref, s.tree, rng, 0.1));
    const SliceCoordinates sc = slice_coordinates(a, s.ref, s.tree);
    ASSERT_LT(sc.norm_sq, 1.0);
    double pairing = 0;
    // eta is carried into the frame of alpha by the minimizing conjugation.
    for (int e : s.tree.free_edges)
      pairing += s.cx->edge_weights[e] * sc.alpha.values[e].dot(LieGroup::ad(sc.c, m.eta.values[e]));
    EXPECT_NEAR(term_value(m, a, s.tree), pairing, 1e-12);
  }
}

TEST(Value, ExactlyZeroOutsideSupport) {
  std::mt19937_64 rng(9);
  const Fixture s = make_setup(su2, rng);
  PerturbationBank bank(s.tree);
  bank.add(make_term(s, rng, 8), 1.0);
  int outside = 0;
  for (int k = 0; k < 50; ++k) {
    const Connection a = random_gauged(s.cx, su2, s.tree, rng);
    double dist = INFINITY;
    try {
      dist = slice_coordinates(a, s.ref, s.tree).distance();
    } catch (const NotInDomainError&) {
    }
    if (dist <= 2.0 / 8) continue;
    ++outside;
    EXPECT_EQ(bank.value(a), 0.0);
    EXPECT_EQ(bank.gradient(a, s.tree).max_abs(), 0.0);
  }
  EXPECT_GT(outside, 40);
}

TEST(Gradient, MatchesFiniteDifferences) {
  std::mt19937_64 rng(10);
  const double h = 1e-5;
  int checked = 0;
  for (int k = 0; k < 20; ++k) {
    const LieGroup& g = k % 2 ? su2 : u1;
    const Fixture s = make_setup(g, rng);
    PerturbationBank bank(s.tree);
    bank.add(make_term(s, rng, 1), 1.3);
    bank.add(make_term(s, rng, 2), -0.4);
    // Points spread across the plateau and the ramp of the cutoff.
    const Connection a = retract(s.ref, random_tangent(s.ref, s.tree, rng, 0.15 + 0.1 * (k % 5)));
    const TangentField grad = bank.gradient(a, s.tree);
    const double scale = std::max(1.0, grad.max_abs());
    for (int e : s.tree.free_edges) {
      for (int i = 0; i < g.dim(); ++i) {
        const double fd = (bank.value(retract(a, single(a, e, i, h))) - bank.value(retract(a, single(a, e, i, -h)))) / (2 * h);
        EXPECT_LE(std::abs(fd - s.cx->edge_weights[e] * grad.values[e][i]), 1e-6 * scale) << "case " << k;
        ++checked;
      }
    }
  }
  EXPECT_GT(checked, 100);
}

TEST(Gradient, AtReferenceIsEtaOnPlateau) {
  // alpha = 0: d alpha = Jr xi - Jl dZ with Jr = Jl = I, and eta is orbit-orthogonal.
  std::mt19937_64 rng(11);
  const Fixture s = make_setup(su2, rng);
  const ModelPerturbation m = make_term(s, rng, 1);
  const TangentField g = term_gradient(m, s.ref, s.tree);
  for (int e : s.tree.free_edges) EXPECT_LT((g.values[e] - m.eta.values[e]).norm(), 1e-9);
}

TEST(Value, InvariantUnderResidualConjugation) {
  std::mt19937_64 rng(12);
  const Fixture s = make_setup(su2, rng);
  PerturbationBank bank(s.tree);
  bank.add(make_term(s, rng, 1), 1.0);
  for (int k = 0; k < 10; ++k) {
    const Connection a = retract(s.ref, random_tangent(s.ref, s.tree, rng, 0.3));
    const GroupElement q = su2.haar_sample(rng);
    const Connection b = apply_gauge(a, GaugeTransform{std::vector<GroupElement>(s.cx->vertex_count, q)});
    EXPECT_NEAR(bank.value(a), bank.value(b), 1e-9);
  }
}

TEST(Bank, NormHomogeneousAndSubadditive) {
  std::mt19937_64 rng(13);
  const Fixture s = make_setup(u1, rng);
  PerturbationBank a(s.tree), b(s.tree);
  ModelPerturbation m1 = make_term(s, rng, 1), m2 = make_term(s, rng, 2);
  m1.constant = 2.0;
  m2.constant = 3.0;
  a.add(m1, 0.5);
  a.add(m2, -1.0);
  b.add(m1, -0.25);
  EXPECT_DOUBLE_EQ(a.norm(), 4.0);
  PerturbationBank scaled = a;
  for (auto& e : scaled.entries()) e.lambda *= -3.0;
  EXPECT_DOUBLE_EQ(scaled.norm(), 12.0);
  EXPECT_LE(a.concatenated(b).norm(), a.norm() + b.norm() + 1e-15);
  EXPECT_EQ(a.concatenated(b).entries().size(), 3u);
}

TEST(Bank, HessianMatchesSecondDifferences) {
  std::mt19937_64 rng(14);
  const Fixture s = make_setup(u1, rng);
  PerturbationBank bank(s.tree);
  bank.add(make_term(s, rng, 1), 1.0);
  const Connection a = retract(s.ref, random_tangent(s.ref, s.tree, rng, 0.2));
  const Eigen::MatrixXd h = bank.hessian(a, s.tree);
  const double step = 1e-4;
  const int n = static_cast<int>(s.tree.free_edges.size());
  for (int i = 0; i < n; ++i) {
    const int e = s.tree.free_edges[i];
    const double fd = (bank.value(retract(a, single(a, e, 0, step))) - 2 * bank.value(a) +
                       bank.value(retract(a, single(a, e, 0, -step)))) /
                      (step * step);
    EXPECT_NEAR(fd, h(i, i), 1e-5);
  }
}

TEST(Bank, NotInDomainCounted) {
  std::mt19937_64 rng(15);
  const Fixture s = make_setup(u1, rng);
  PerturbationBank bank(s.tree);
  bank.add(make_term(s, rng, 1), 1.0);
  Connection a = s.ref;
  a.edges[s.tree.free_edges[0]] = u1.multiply(a.edges[s.tree.free_edges[0]], GroupElement(-1, 0, 0, 0));
  EXPECT_EQ(bank.value(a), 0.0);
  EXPECT_EQ(bank.not_in_domain_count(), 1);
}

TEST(EstimateConstant, FloorLinearityDeterminism) {
  std::mt19937_64 rng(16);
  const Fixture s = make_setup(su2, rng);
  ModelPerturbation zero = make_model_perturbation(s.ref, TangentField::zeros(s.ref.edges.size()), 1, s.tree);
  std::mt19937_64 r0(5);
  EXPECT_EQ(estimate_constant(zero, s.tree, 1000, r0), 1e-12);

  ModelPerturbation m = make_term(s, rng, 1);
  ModelPerturbation m2 = m;
  for (auto& v : m2.eta.values) v *= 2.0;
  std::mt19937_64 ra(6), rb(6), rc(6);
  const double c1 = estimate_constant(m, s.tree, 1000, ra);
  const double c1b = estimate_constant(m, s.tree, 1000, rb);
  const double c2 = estimate_constant(m2, s.tree, 1000, rc);
  EXPECT_EQ(c1, c1b);
  EXPECT_NEAR(c2 / c1, 2.0, 1e-9);
}

TEST(Admissible, Geometry) {
  std::mt19937_64 rng(17);
  const Fixture s = make_setup(su2, rng);
  EXPECT_TRUE(is_admissible(PerturbationBank(s.tree), {s.ref}, 0.1));
  PerturbationBank centered(s.tree);
  centered.add(make_term(s, rng, 1), 0.5);
  EXPECT_FALSE(is_admissible(centered, {s.ref}, 0.1));
  // Zero coefficient terms are ignored.
  centered.entries()[0].lambda = 0.0;
  EXPECT_TRUE(is_admissible(centered, {s.ref}, 0.1));

  const Connection x = Connection::trivial(s.cx, su2);
  const double dist = slice_coordinates(x, s.ref, s.tree).distance();
  ASSERT_GT(dist, 0.3);
  int k = 1;
  while (2.0 / k >= dist - 0.1) ++k;
  PerturbationBank far(s.tree);
  far.add(make_term(s, rng, k), 1.0);
  EXPECT_TRUE(is_admissible(far, {x}, 0.1));
  PerturbationBank near(s.tree);
  near.add(make_term(s, rng, 1), 1.0);
  if (2.0 >= dist - 0.1) EXPECT_FALSE(is_admissible(near, {x}, 0.1));
}
