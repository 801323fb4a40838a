#include <gtest/gtest.h>

#include <cmath>

#include "test_support.hpp"
#include "ymmb/benchlib.hpp"
#include "ymmb/flow.hpp"
#include "ymmb/ym_objective.hpp"

using namespace ymmb;
using namespace ymmb::testing;

namespace {

std::shared_ptr<YMObjective> u1_grid() {
  return std::make_shared<YMObjective>(share(build_torus_grid(2, 1)), LieGroup(GroupKind::U1), EnergyBackend::Wilson);
}

Vector v3(double x, double y, double z) { return Vector(Eigen::Vector3d(x, y, z)); }

// Random tangent offset of norm `scale`.
Vector noisy(const Objective& f, const Vector& p, double scale, std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  Vector v(f.coord_dim());
  for (int i = 0; i < v.size(); ++i) v[i] = n(rng);
  v = f.project(p, v);
  return f.retract(p, scale * v.normalized());
}

}  // namespace

TEST(Integrate, CriticalStartIsConstant) {
  const auto f = u1_grid();
  const Trajectory t = integrate(*f, f->canonical_points()[0]);
  EXPECT_EQ(t.status, FlowStatus::Converged);
  EXPECT_EQ(t.s.size(), 1u);
  EXPECT_EQ(t.s[0], 0.0);
}

TEST(Integrate, TorusGridSmallStartReachesFlat) {
  const auto f = u1_grid();
  std::mt19937_64 rng(1);
  const Trajectory t = integrate(*f, noisy(*f, f->canonical_points()[0], 0.3, rng));
  EXPECT_EQ(t.status, FlowStatus::Converged);
  EXPECT_LT(t.energy.back(), 1e-12);
  EXPECT_LT(t.grad_norm.back(), 1e-10);
}

TEST(Integrate, EnergyMonotoneAndTimesIncreasing) {
  std::vector<ObjectivePtr> objs{u1_grid(), sphere_z2(), torus_product_example(),
                                 std::make_shared<YMObjective>(share(build_minimal_genus_complex(1)),
                                                               LieGroup(GroupKind::SU2), EnergyBackend::Wilson)};
  std::mt19937_64 rng(2);
  for (const auto& f : objs) {
    for (int k = 0; k < 10; ++k) {
      const Trajectory t = integrate(*f, f->random_point(rng));
      EXPECT_NE(t.status, FlowStatus::EnergyIncrease);
      for (std::size_t i = 1; i < t.s.size(); ++i) {
        EXPECT_LE(t.energy[i], t.energy[i - 1] + 1e-10 * (1 + std::abs(t.energy[i - 1])));
        EXPECT_GT(t.s[i], t.s[i - 1]);
      }
    }
  }
}

TEST(Integrate, PointsStayOnGroup) {
  const auto f = std::make_shared<YMObjective>(share(build_torus_grid(2, 2)), LieGroup(GroupKind::SU2), EnergyBackend::Wilson);
  std::mt19937_64 rng(3);
  const Trajectory t = integrate(*f, f->random_point(rng));
  for (const auto& p : t.points)
    for (int e = 0; e < p.size() / 4; ++e) EXPECT_NEAR(p.segment<4>(4 * e).norm(), 1.0, 1e-12);
}

TEST(Integrate, DeterministicBitwise) {
  const auto f = std::make_shared<YMObjective>(share(build_torus_grid(2, 2)), LieGroup(GroupKind::SU2), EnergyBackend::Wilson);
  std::mt19937_64 rng(4);
  const Vector start = f->random_point(rng);
  const Trajectory a = integrate(*f, start), b = integrate(*f, start);
  ASSERT_EQ(a.s.size(), b.s.size());
  for (std::size_t i = 0; i < a.s.size(); ++i) {
    EXPECT_EQ(a.s[i], b.s[i]);
    EXPECT_EQ(a.energy[i], b.energy[i]);
    EXPECT_TRUE(a.points[i] == b.points[i]);
  }
}

TEST(Integrate, EquivariantUnderConstantConjugation) {
  const auto f = std::make_shared<YMObjective>(share(build_torus_grid(2, 2)), LieGroup(GroupKind::SU2), EnergyBackend::Wilson);
  std::mt19937_64 rng(5);
  const Vector start = f->random_point(rng);
  const GroupElement q = f->group().haar_sample(rng);
  const GaugeTransform g{std::vector<GroupElement>(f->complex()->vertex_count, q)};
  const Vector start2 = f->point(apply_gauge(f->connection(start), g));
  FlowController c;
  c.s_max = 5.0;
  const Trajectory a = integrate(*f, start, c), b = integrate(*f, start2, c);
  ASSERT_EQ(a.s.size(), b.s.size());
  for (std::size_t i = 0; i < a.s.size(); ++i) {
    ASSERT_EQ(a.s[i], b.s[i]);
    const Vector expect = f->point(apply_gauge(f->connection(a.points[i]), g));
    double err = 0;
    for (int e = 0; e < expect.size() / 4; ++e)
      err = std::max(err, std::min((expect.segment<4>(4 * e) - b.points[i].segment<4>(4 * e)).norm(),
                                   (expect.segment<4>(4 * e) + b.points[i].segment<4>(4 * e)).norm()));
    EXPECT_LT(err, 1e-8);
  }
}

TEST(Integrate, ObserverStops) {
  const auto s = sphere_z2();
  const Trajectory t = integrate(*s, v3(0.1, 0, 0.995).normalized(), {},
                                 [](double, const Vector& p, double, double) { return std::abs(p[2]) < 0.5; });
  EXPECT_EQ(t.status, FlowStatus::Stopped);
  EXPECT_LT(std::abs(t.end()[2]), 0.5);
}

TEST(Integrate, MaxTimeReported) {
  const auto s = sphere_z2();
  FlowController c;
  c.s_max = 0.5;
  const Trajectory t = integrate(*s, v3(0.1, 0, 0.995).normalized(), c);
  EXPECT_EQ(t.status, FlowStatus::MaxTime);
  EXPECT_NEAR(t.s.back(), 0.5, 1e-9);
}

TEST(Refine, ExactFlatUnchanged) {
  const auto f = u1_grid();
  const Vector p = f->canonical_points()[0];
  EXPECT_TRUE(refine_critical(*f, p) == p);
}

TEST(Refine, NoisyFlatConverges) {
  const auto f = u1_grid();
  std::mt19937_64 rng(6);
  for (int k = 0; k < 10; ++k) {
    const Vector p = refine_critical(*f, noisy(*f, f->canonical_points()[0], 1e-4, rng));
    EXPECT_LT(f->gradient(p).norm(), 1e-11);
  }
}

TEST(Refine, PreconditionViolation) {
  const auto f = u1_grid();
  Vector v = Vector::Zero(f->coord_dim());
  v[2] = 0.05;  // edge 3, gradient 4 sin(0.05) ~ 0.2
  EXPECT_THROW(refine_critical(*f, f->retract(f->canonical_points()[0], v)), PreconditionError);
}

TEST(Refine, SaddleOfSu2Commutator) {
  const auto f = std::make_shared<YMObjective>(share(build_minimal_genus_complex(1)), LieGroup(GroupKind::SU2),
                                               EnergyBackend::Wilson);
  Connection c = Connection::trivial(f->complex(), f->group());
  c.edges = {GroupElement(0, 1, 0, 0), GroupElement(0, 0, 1, 0)};
  std::mt19937_64 rng(7);
  const Vector p = refine_critical(*f, noisy(*f, f->point(c), 1e-4, rng));
  EXPECT_LT(f->gradient(p).norm(), 1e-11);
  EXPECT_NEAR(f->value(p), 4.0, 1e-12);
  const Spectrum sp = hessian_spectrum(*f, p);
  EXPECT_EQ(sp.kernel, 3);
  EXPECT_EQ(sp.negative, 3);
}

TEST(Decay, TorusGridRateMatchesGap) {
  const auto f = u1_grid();
  std::mt19937_64 rng(8);
  const Trajectory t = integrate(*f, noisy(*f, f->canonical_points()[0], 0.5, rng));
  ASSERT_EQ(t.status, FlowStatus::Converged);
  const Spectrum sp = hessian_spectrum(*f, t.end());
  EXPECT_NEAR(sp.spectral_gap, 8.0, 1e-6);
  EXPECT_EQ(sp.kernel, 2);
  const DecayFit fit = decay_fit(t, sp);
  EXPECT_GE(fit.correlation, 0.99);
  EXPECT_TRUE(fit.agrees) << fit.rate;
}

TEST(Decay, SphereRateIsTwo) {
  const auto s = sphere_z2();
  const Trajectory t = integrate(*s, v3(0.1, 0, 0.995).normalized());
  ASSERT_EQ(t.status, FlowStatus::Converged);
  EXPECT_LT(std::abs(t.end()[2]), 1e-10);
  const DecayFit fit = decay_fit(t, hessian_spectrum(*s, t.end()));
  EXPECT_NEAR(fit.spectral_gap, 2.0, 1e-9);
  EXPECT_NEAR(fit.rate, 2.0, 0.2);
  EXPECT_TRUE(fit.agrees);
}

TEST(Decay, MaxTimeIsInsufficientTail) {
  const auto s = sphere_z2();
  FlowController c;
  c.s_max = 0.5;
  const Trajectory t = integrate(*s, v3(0.1, 0, 0.995).normalized(), c);
  EXPECT_THROW(decay_fit(t, hessian_spectrum(*s, t.end())), InsufficientTail);
}

TEST(Shoot, ZeroEpsilonStays) {
  const auto s = sphere_z2();
  const Trajectory t = shoot_unstable(*s, v3(0, 0, 1), v3(1, 0, 0), 0.0);
  EXPECT_EQ(t.status, FlowStatus::Converged);
  EXPECT_EQ(t.points.size(), 1u);
  EXPECT_EQ(t.end(), v3(0, 0, 1));
}

TEST(Shoot, NorthPoleLandsOnMeridianPoint) {
  const auto s = sphere_z2();
  for (double a : {0.0, 0.7, 2.0, -2.5}) {
    const Vector w = v3(std::cos(a), std::sin(a), 0);
    const Trajectory t = shoot_unstable(*s, v3(0, 0, 1), w, 1e-4);
    ASSERT_EQ(t.status, FlowStatus::Converged);
    const Eigen::Vector3d expect = Eigen::Vector3d(w.head<3>()).cross(Eigen::Vector3d::UnitZ()).normalized();
    EXPECT_LT((t.end() - Vector(expect)).norm(), 1e-8) << a;
  }
}

TEST(Shoot, ContaminationRejected) {
  const auto s = sphere_z2();
  EXPECT_THROW(shoot_unstable(*s, v3(0, 0, 1), v3(0, 0, 1), 1e-4), PreconditionError);
  // Equator point: the normal direction is stable.
  EXPECT_THROW(shoot_unstable(*s, v3(1, 0, 0), v3(0, 1, 0), 1e-4), PreconditionError);
  EXPECT_THROW(shoot_unstable(*s, v3(0, 0, 1), v3(2, 0, 0), 1e-4), PreconditionError);
}
