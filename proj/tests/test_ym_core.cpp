#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "test_support.hpp"

using namespace ymmb;
using namespace ymmb::testing;

namespace {

const LieGroup su2(GroupKind::SU2);
const LieGroup u1(GroupKind::U1);

struct Case {
  GroupKind group;
  EnergyBackend backend;
};

std::vector<std::shared_ptr<const OrientedCellComplex>> complexes() {
  return {share(build_minimal_genus_complex(1)), share(build_minimal_genus_complex(2)), share(build_torus_grid(2, 1)),
          share(build_torus_grid(2, 2)), share(build_sphere_complex())};
}

// Random connection whose face holonomies stay clear of the cut locus (LogNorm needs that).
Connection moderate(const std::shared_ptr<const OrientedCellComplex>& cx, const LieGroup& g, const SpanningTree& tree,
                    std::mt19937_64& rng, double scale) {
  for (;;) {
    Connection c = retract(Connection::trivial(cx, g), random_tangent(Connection::trivial(cx, g), tree, rng, scale));
    bool ok = true;
    for (std::size_t f = 0; f < cx->faces.size(); ++f)
      ok = ok && LieGroup::angle(holonomy(c, static_cast<int>(f))) < M_PI - 0.2;
    if (ok) return c;
  }
}

// Flat-field weights differ from 1 to exercise the weight placement.
std::shared_ptr<const OrientedCellComplex> weighted(OrientedCellComplex c, std::mt19937_64& rng) {
  std::uniform_real_distribution<double> u(0.5, 2.0);
  for (double& w : c.face_weights) w = u(rng);
  for (double& w : c.edge_weights) w = u(rng);
  return share(std::move(c));
}

}  // namespace

TEST(Holonomy, TrivialConnection) {
  const auto cx = share(build_torus_grid(2, 2));
  const Connection c = Connection::trivial(cx, su2);
  for (int f = 0; f < 4; ++f) EXPECT_TRUE(holonomy(c, f).coeffs().isApprox(GroupElement::Identity().coeffs()));
}

TEST(Holonomy, QuaternionCommutatorIsMinusOne) {
  Connection c = Connection::trivial(share(build_minimal_genus_complex(1)), su2);
  c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
  const GroupElement h = holonomy(c, 0);
  EXPECT_NEAR(h.w(), -1.0, 1e-15);
  EXPECT_NEAR(h.vec().norm(), 0.0, 1e-15);
}

TEST(Holonomy, AbelianAngleSum) {
  // Face 0 of the (2,2) grid has word (0+, 3+, 4-, 1-).
  const auto cx = share(build_torus_grid(2, 2));
  Connection c = Connection::trivial(cx, u1);
  const std::vector<double> ang{0.1, 0.2, -0.1, -0.2};
  const auto& word = cx->faces[0].word;
  for (int k = 0; k < 4; ++k) c.edges[word[k].edge] = u1.exp(AlgebraElement(word[k].sign * ang[k], 0, 0));
  EXPECT_NEAR(LieGroup::angle(holonomy(c, 0)), 0.0, 1e-15);
}

TEST(Curvature, Examples) {
  const auto cx = share(build_torus_grid(2, 1));
  Connection c = Connection::trivial(cx, u1);
  EXPECT_EQ(curvature(c, 0).norm(), 0.0);
  c.edges[3] = u1.exp(AlgebraElement(0.3, 0, 0));
  EXPECT_NEAR(curvature(c, 0)[0], 0.3, 1e-15);
  Connection s = Connection::trivial(share(build_minimal_genus_complex(1)), su2);
  // hol = a b a^-1 b^-1 with b = 1 is the identity; use a sphere face instead.
  Connection t = Connection::trivial(share(build_sphere_complex()), su2);
  t.edges[1] = su2.exp(AlgebraElement(0.2, 0, 0));  // face 0 word starts with e1+
  EXPECT_LT((curvature(t, 0) - AlgebraElement(0.2, 0, 0)).norm(), 1e-15);
  (void)s;
}

TEST(Curvature, CutLocusPropagates) {
  Connection c = Connection::trivial(share(build_minimal_genus_complex(1)), su2);
  c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
  EXPECT_THROW(curvature(c, 0), CutLocusError);
}

TEST(Energy, FlatIsZero) {
  for (const auto& cx : complexes()) {
    for (const LieGroup* g : {&su2, &u1}) {
      const Connection c = Connection::trivial(cx, *g);
      EXPECT_EQ(energy(c, EnergyBackend::Wilson), 0.0);
      EXPECT_EQ(energy(c, EnergyBackend::LogNorm), 0.0);
    }
  }
}

TEST(Energy, CommutatorPairWilsonIsFour) {
  Connection c = Connection::trivial(share(build_minimal_genus_complex(1)), su2);
  c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
  EXPECT_NEAR(energy(c, EnergyBackend::Wilson), 4.0, 1e-14);
  const EnergyEvaluation ev = evaluate_energy(c, EnergyBackend::LogNorm);
  EXPECT_TRUE(ev.cut_locus);
  EXPECT_NEAR(ev.value, M_PI * M_PI / 2, 1e-12);
  EXPECT_THROW(energy(c, EnergyBackend::LogNorm), CutLocusError);
  EXPECT_FALSE(evaluate_energy(c, EnergyBackend::Wilson).cut_locus);
}

TEST(Energy, FormulasOnOneFace) {
  const auto cx = share(build_torus_grid(2, 1));
  Connection c = Connection::trivial(cx, u1);
  c.edges[3] = u1.exp(AlgebraElement(0.7, 0, 0));
  EXPECT_NEAR(energy(c, EnergyBackend::Wilson), 4 * (1 - std::cos(0.7)), 1e-14);
  EXPECT_NEAR(energy(c, EnergyBackend::LogNorm), 0.49, 1e-14);
}

TEST(Backend, NamesRoundTrip) {
  EXPECT_EQ(energy_backend_from_string("wilson"), EnergyBackend::Wilson);
  EXPECT_EQ(energy_backend_from_string(to_string(EnergyBackend::LogNorm)), EnergyBackend::LogNorm);
  EXPECT_THROW(energy_backend_from_string("plaquette"), std::invalid_argument);
}

TEST(Gauge, IdentityGaugeIsNoOp) {
  std::mt19937_64 rng(1);
  const auto cx = share(build_torus_grid(2, 2));
  const Connection c = Connection::random(cx, su2, rng);
  const Connection d = apply_gauge(c, GaugeTransform::identity(cx->vertex_count));
  for (std::size_t e = 0; e < c.edges.size(); ++e) EXPECT_TRUE(c.edges[e].coeffs().isApprox(d.edges[e].coeffs(), 1e-15));
}

TEST(Gauge, ConstantGaugeConjugatesHolonomy) {
  std::mt19937_64 rng(2);
  const auto cx = share(build_torus_grid(2, 2));
  const Connection c = Connection::random(cx, su2, rng);
  const GroupElement k = su2.haar_sample(rng);
  GaugeTransform g{std::vector<GroupElement>(cx->vertex_count, k)};
  const Connection d = apply_gauge(c, g);
  for (int f = 0; f < 4; ++f) {
    const GroupElement expect = k.conjugate() * holonomy(c, f) * k;
    EXPECT_LT((holonomy(d, f).coeffs() - expect.coeffs()).norm(), 1e-13);
  }
  EXPECT_NEAR(energy(c, EnergyBackend::Wilson), energy(d, EnergyBackend::Wilson), 1e-12);
}

TEST(Gauge, AbelianHolonomyUnchanged) {
  std::mt19937_64 rng(3);
  const auto cx = share(build_sphere_complex());
  const Connection c = Connection::random(cx, u1, rng);
  GaugeTransform g = GaugeTransform::identity(4);
  for (auto& v : g.vertices) v = u1.haar_sample(rng);
  const Connection d = apply_gauge(c, g);
  for (int f = 0; f < 4; ++f) EXPECT_LT((holonomy(c, f).coeffs() - holonomy(d, f).coeffs()).norm(), 1e-13);
}

TEST(Gauge, EnergyInvarianceRandomPairs) {
  std::mt19937_64 rng(4);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto cx = complexes()[k % 5];
    const LieGroup& grp = (k % 2) ? su2 : u1;
    const SpanningTree tree = spanning_tree(*cx, 0);
    const Connection c = moderate(cx, grp, tree, rng, 0.6);
    GaugeTransform g = GaugeTransform::identity(cx->vertex_count);
    for (auto& v : g.vertices) v = grp.haar_sample(rng);
    const Connection d = apply_gauge(c, g);
    for (EnergyBackend b : {EnergyBackend::Wilson, EnergyBackend::LogNorm}) {
      const double e = energy(c, b);
      worst = std::max(worst, std::abs(energy(d, b) - e) / (1 + std::abs(e)));
    }
  }
  EXPECT_LE(worst, 1e-12);
}

TEST(TreeGauge, FixesTreeEdgesWithBasedGauge) {
  std::mt19937_64 rng(5);
  const auto cx = share(build_sphere_complex());
  const SpanningTree tree = spanning_tree(*cx, 0);
  const Connection c = Connection::random(cx, su2, rng);
  const auto fixed = tree_gauge_fix(c, tree);
  EXPECT_EQ(tree.tree_edges.size(), 3u);
  for (int e : tree.tree_edges) EXPECT_LT(LieGroup::angle(fixed.connection.edges[e]), 1e-14);
  EXPECT_TRUE(fixed.gauge.based(cx->base_vertex));
  const Connection applied = apply_gauge(c, fixed.gauge);
  for (std::size_t e = 0; e < c.edges.size(); ++e)
    EXPECT_LT((applied.edges[e].coeffs() - fixed.connection.edges[e].coeffs()).norm(), 1e-13);
  EXPECT_NEAR(energy(c, EnergyBackend::Wilson), energy(fixed.connection, EnergyBackend::Wilson), 1e-12);
}

TEST(TreeGauge, AlreadyFixedGivesIdentityGauge) {
  std::mt19937_64 rng(6);
  const auto cx = share(build_torus_grid(2, 2));
  const SpanningTree tree = spanning_tree(*cx, 0);
  const Connection c = random_gauged(cx, su2, tree, rng);
  const auto again = tree_gauge_fix(c, tree);
  for (const auto& v : again.gauge.vertices) EXPECT_LT(LieGroup::angle(v), 1e-14);
}

TEST(TreeGauge, BasedGaugeBeforeFixingIsAbsorbed) {
  std::mt19937_64 rng(7);
  const auto cx = share(build_torus_grid(2, 2));
  const SpanningTree tree = spanning_tree(*cx, 0);
  const Connection c = Connection::random(cx, su2, rng);
  GaugeTransform g = GaugeTransform::identity(cx->vertex_count);
  for (int v = 1; v < cx->vertex_count; ++v) g.vertices[v] = su2.haar_sample(rng);
  const Connection a = tree_gauge_fix(c, tree).connection;
  const Connection b = tree_gauge_fix(apply_gauge(c, g), tree).connection;
  for (std::size_t e = 0; e < c.edges.size(); ++e) EXPECT_LT((a.edges[e].coeffs() - b.edges[e].coeffs()).norm(), 1e-12);
}

TEST(Gradient, FlatIsZero) {
  for (const auto& cx : complexes()) {
    const SpanningTree tree = spanning_tree(*cx, 0);
    for (EnergyBackend b : {EnergyBackend::Wilson, EnergyBackend::LogNorm})
      EXPECT_EQ(gradient(Connection::trivial(cx, su2), b, nullptr, tree).max_abs(), 0.0);
  }
}

TEST(Gradient, TorusGridSingleAngle) {
  // Edge 3 enters face 0 with + and face 1 with -, so both face angles move by s.
  const auto cx = share(build_torus_grid(2, 1));
  const SpanningTree tree = spanning_tree(*cx, 0);
  const double s = 0.37;
  Connection c = Connection::trivial(cx, u1);
  c.edges[3] = u1.exp(AlgebraElement(s, 0, 0));
  const TangentField g = gradient(c, EnergyBackend::Wilson, nullptr, tree);
  EXPECT_NEAR(g.values[3][0], 4 * std::sin(s), 1e-14);
  EXPECT_NEAR(g.values[1][0], -4 * std::sin(s), 1e-14);
  EXPECT_NEAR(g.values[2][0], 0.0, 1e-14);
  EXPECT_EQ(g.values[0][0], 0.0);
  EXPECT_FALSE(g.active[0]);
  const TangentField gl = gradient(c, EnergyBackend::LogNorm, nullptr, tree);
  EXPECT_NEAR(gl.values[3][0], 2 * s, 1e-14);
}

class DerivativeTest : public ::testing::TestWithParam<Case> {};

TEST_P(DerivativeTest, GradientMatchesFiniteDifferences) {
  const auto [kind, backend] = GetParam();
  const LieGroup grp(kind);
  std::mt19937_64 rng(11);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const auto cx = weighted(k % 2 ? build_torus_grid(2, 2) : build_minimal_genus_complex(2), rng);
    const SpanningTree tree = spanning_tree(*cx, 0);
    const Connection c = moderate(cx, grp, tree, rng, 0.5);
    const TangentField g = gradient(c, backend, nullptr, tree);
    const double scale = std::max(1.0, g.max_abs());
    for (int e : tree.free_edges) {
      for (int i = 0; i < grp.dim(); ++i) {
        const double fd = (energy(retract(c, single(c, e, i, h)), backend) - energy(retract(c, single(c, e, i, -h)), backend)) /
                          (2 * h);
        EXPECT_LE(std::abs(fd - cx->edge_weights[e] * g.values[e][i]), 1e-6 * scale);
      }
    }
  }
}

TEST_P(DerivativeTest, HessianMatchesFiniteDifferencesOfGradient) {
  const auto [kind, backend] = GetParam();
  const LieGroup grp(kind);
  const int d = grp.dim();
  std::mt19937_64 rng(12);
  const double h = 1e-5;
  for (int k = 0; k < 20; ++k) {
    const auto cx = weighted(k % 2 ? build_torus_grid(2, 2) : build_minimal_genus_complex(2), rng);
    const SpanningTree tree = spanning_tree(*cx, 0);
    const Connection c = moderate(cx, grp, tree, rng, 0.5);
    const Eigen::MatrixXd hm = hessian_matrix(c, backend, nullptr, tree);
    EXPECT_LE((hm - hm.transpose()).cwiseAbs().maxCoeff(), 1e-9);
    // Mixed partial d_u d_t E(U_e exp(tX), U_e' exp(uY)): differentiate the directional derivative
    // <grad_e(p), X> w_e along the second variation.
    const double scale = std::max(1.0, hm.cwiseAbs().maxCoeff());
    const int n = static_cast<int>(tree.free_edges.size());
    for (int col = 0; col < n * d; ++col) {
      const int ec = tree.free_edges[col / d];
      const TangentField gp = gradient(retract(c, single(c, ec, col % d, h)), backend, nullptr, tree);
      const TangentField gm = gradient(retract(c, single(c, ec, col % d, -h)), backend, nullptr, tree);
      for (int row = 0; row < n * d; ++row) {
        const int er = tree.free_edges[row / d];
        double fd = cx->edge_weights[er] * (gp.values[er][row % d] - gm.values[er][row % d]) / (2 * h);
        // The gradient is a right-trivialized field: for the same edge, moving along X changes the
        // frame, contributing half the bracket term; symmetrization removes it.
        const TangentField g0 = gradient(c, backend, nullptr, tree);
        if (er == ec) {
          const AlgebraElement br = LieGroup::bracket(LieGroup::basis(col % d), g0.values[er]);
          fd += 0.5 * cx->edge_weights[er] * br[row % d];
        }
        EXPECT_LE(std::abs(fd - hm(row, col)), 1e-5 * scale) << "row " << row << " col " << col;
      }
    }
  }
}

INSTANTIATE_TEST_SUITE_P(GroupsAndBackends, DerivativeTest,
                         ::testing::Values(Case{GroupKind::U1, EnergyBackend::Wilson},
                                           Case{GroupKind::U1, EnergyBackend::LogNorm},
                                           Case{GroupKind::SU2, EnergyBackend::Wilson},
                                           Case{GroupKind::SU2, EnergyBackend::LogNorm}));

TEST(Hessian, MixedPartialDefinition) {
  // Direct second difference of E(U_e exp(tX), U_e' exp(uY)).
  std::mt19937_64 rng(13);
  const auto cx = share(build_minimal_genus_complex(2));
  const SpanningTree tree = spanning_tree(*cx, 0);
  const Connection c = moderate(cx, su2, tree, rng, 0.7);
  const Eigen::MatrixXd hm = hessian_matrix(c, EnergyBackend::Wilson, nullptr, tree);
  const double h = 1e-4;
  for (int a = 0; a < 12; a += 1) {
    for (int b = 0; b < 12; b += 5) {
      auto at = [&](double t, double u) {
        Connection p = c;
        p.edges[a / 3] = su2.multiply(p.edges[a / 3], su2.exp(t * LieGroup::basis(a % 3)));
        p.edges[b / 3] = su2.multiply(p.edges[b / 3], su2.exp(u * LieGroup::basis(b % 3)));
        return energy(p, EnergyBackend::Wilson);
      };
      double fd = (at(h, h) - at(h, -h) - at(-h, h) + at(-h, -h)) / (4 * h * h);
      if (a / 3 == b / 3) {
        // Same edge: U exp(tX) exp(uY) vs the symmetrized matrix.
        fd = 0.5 * (fd + [&] {
               auto at2 = [&](double t, double u) {
                 Connection p = c;
                 p.edges[b / 3] = su2.multiply(p.edges[b / 3], su2.exp(u * LieGroup::basis(b % 3)));
                 p.edges[a / 3] = su2.multiply(p.edges[a / 3], su2.exp(t * LieGroup::basis(a % 3)));
                 return energy(p, EnergyBackend::Wilson);
               };
               return (at2(h, h) - at2(h, -h) - at2(-h, h) + at2(-h, -h)) / (4 * h * h);
             }());
      }
      EXPECT_NEAR(fd, hm(a, b), 1e-5 * std::max(1.0, hm.cwiseAbs().maxCoeff()));
    }
  }
}

TEST(Hessian, FlatAbelianIsIncidenceLaplacian) {
  std::mt19937_64 rng(14);
  for (const auto& base : {build_torus_grid(2, 1), build_torus_grid(3, 2), build_sphere_complex()}) {
    const auto cx = weighted(base, rng);
    const SpanningTree tree = spanning_tree(*cx, 0);
    const int n = static_cast<int>(tree.free_edges.size());
    Eigen::MatrixXd dmat = Eigen::MatrixXd::Zero(cx->faces.size(), n);
    for (std::size_t f = 0; f < cx->faces.size(); ++f)
      for (const auto& s : cx->faces[f].word)
        for (int k = 0; k < n; ++k)
          if (tree.free_edges[k] == s.edge) dmat(f, k) += s.sign;
    Eigen::VectorXd winv(cx->faces.size());
    for (std::size_t f = 0; f < cx->faces.size(); ++f) winv[f] = 1.0 / cx->face_weights[f];
    const Eigen::MatrixXd lap = dmat.transpose() * winv.asDiagonal() * dmat;
    const Connection flat = Connection::trivial(cx, u1);
    const Eigen::MatrixXd hw = hessian_matrix(flat, EnergyBackend::Wilson, nullptr, tree);
    const Eigen::MatrixXd hl = hessian_matrix(flat, EnergyBackend::LogNorm, nullptr, tree);
    EXPECT_LT((hl - lap).cwiseAbs().maxCoeff(), 1e-12);
    EXPECT_LT((hw - 2 * lap).cwiseAbs().maxCoeff(), 1e-12);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hw);
    EXPECT_GE(es.eigenvalues().minCoeff(), -1e-9);
  }
}

TEST(Hessian, KernelContainsOrbitDirectionsAtCriticalPoints) {
  // (i, j) on the genus-1 complex is a critical point (hol = -1); the trivial connection too.
  Connection c = Connection::trivial(share(build_minimal_genus_complex(1)), su2);
  const SpanningTree tree = spanning_tree(*c.complex, 0);
  for (int k = 0; k < 2; ++k) {
    if (k == 1) c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
    ASSERT_LT(gradient(c, EnergyBackend::Wilson, nullptr, tree).max_abs(), 1e-10);
    Eigen::SelfAdjointEigenSolver<Eigen::MatrixXd> es(hessian_matrix(c, EnergyBackend::Wilson, nullptr, tree));
    int kernel = 0;
    for (int i = 0; i < es.eigenvalues().size(); ++i)
      if (std::abs(es.eigenvalues()[i]) < 1e-8) ++kernel;
    EXPECT_GE(kernel, su2.dim() - stabilizer_dimension(c));
  }
}

TEST(Stabilizer, Examples) {
  std::mt19937_64 rng(15);
  const auto cx = share(build_minimal_genus_complex(1));
  EXPECT_EQ(stabilizer_dimension(Connection::random(cx, u1, rng)), 1);
  Connection c = Connection::trivial(cx, su2);
  EXPECT_EQ(stabilizer_dimension(c), 3);
  c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
  EXPECT_EQ(stabilizer_dimension(c), 0);
  c.edges = {su2.exp(AlgebraElement(0.3, 0, 0)), su2.exp(AlgebraElement(-1.1, 0, 0))};
  EXPECT_EQ(stabilizer_dimension(c), 1);
}

TEST(Gradient, EquivariantUnderConstantConjugation) {
  std::mt19937_64 rng(16);
  double worst = 0.0;
  for (int k = 0; k < 100; ++k) {
    const auto cx = complexes()[k % 5];
    const SpanningTree tree = spanning_tree(*cx, 0);
    const Connection c = random_gauged(cx, su2, tree, rng);
    const GroupElement q = su2.haar_sample(rng);
    const Connection d = apply_gauge(c, GaugeTransform{std::vector<GroupElement>(cx->vertex_count, q)});
    const TangentField g = gradient(c, EnergyBackend::Wilson, nullptr, tree);
    const TangentField gd = gradient(d, EnergyBackend::Wilson, nullptr, tree);
    for (int e : tree.free_edges) worst = std::max(worst, (gd.values[e] - LieGroup::ad(q, g.values[e])).norm());
  }
  EXPECT_LE(worst, 1e-9);
}

TEST(Backend, WilsonMinusTwiceLogNormIsQuartic) {
  // Wilson density 2(1 - cos t) = t^2 - t^4/12 + ..., LogNorm density t^2/2.
  std::mt19937_64 rng(17);
  for (const LieGroup* g : {&u1, &su2}) {
    const auto cx = share(build_torus_grid(2, 2));
    const SpanningTree tree = spanning_tree(*cx, 0);
    const TangentField xi = random_tangent(Connection::trivial(cx, *g), tree, rng, 0.4);
    std::vector<double> ratios;
    for (double t : {1.0, 0.5, 0.25, 0.125}) {
      TangentField s = xi;
      for (auto& v : s.values) v *= t;
      const Connection c = retract(Connection::trivial(cx, *g), s);
      const double ew = energy(c, EnergyBackend::Wilson), el = energy(c, EnergyBackend::LogNorm);
      ASSERT_GT(el, 0.0);
      ratios.push_back(std::abs(ew - 2 * el) / (el * el));
    }
    for (double r : ratios) EXPECT_LT(r, 1.0);
    EXPECT_NEAR(ratios.back(), ratios[2], 0.05 * ratios[2] + 1e-3);
  }
}

TEST(Retract, StaysOnGroupAndSkipsInactive) {
  std::mt19937_64 rng(18);
  const auto cx = share(build_torus_grid(2, 2));
  const SpanningTree tree = spanning_tree(*cx, 0);
  Connection c = Connection::trivial(cx, su2);
  TangentField xi = random_tangent(c, tree, rng);
  xi.values[tree.tree_edges[0]] = AlgebraElement(1, 1, 1);
  for (int k = 0; k < 1000; ++k) c = retract(c, xi);
  for (const auto& u : c.edges) EXPECT_NEAR(u.norm(), 1.0, 1e-12);
  EXPECT_EQ(LieGroup::angle(c.edges[tree.tree_edges[0]]), 0.0);
}
