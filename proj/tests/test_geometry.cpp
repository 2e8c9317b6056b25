#include "curio/geometry.hpp"

#include "support/geometry_oracle.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace curio;
using oracle_test::rejection_ellipsoid;
using oracle_test::rejection_fraction;

namespace {

Vec3 bbox_size(const std::vector<Vec3>& pts) {
  Vec3 lo = Vec3::Constant(1e300), hi = Vec3::Constant(-1e300);
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return hi - lo;
}

}  // namespace

TEST(Geometry, SphereCaseInsideUnitBall) {
  EllipsoidModel m{1.0, 1.0, 2048};
  for (const auto& p : ellipsoid_points(m, Vec3::Zero(), Mat3::Identity())) EXPECT_LE(p.norm(), 1.0 + 1e-12);
}

TEST(Geometry, PointsSatisfyEllipsoidInequality) {
  EllipsoidModel m;
  const Mat3 r = so3::from_euler(0.4, -0.9, 2.0);
  const Vec3 x(1, -2, 0.5);
  const Vec3 inv_axes(1.0 / m.radius_l, 1.0 / m.radius_l, 1.0 / m.height_h);
  const auto pts = ellipsoid_points(m, x, r);
  ASSERT_EQ(static_cast<int>(pts.size()), m.sample_count);
  for (const auto& p : pts) {
    EXPECT_LE(inv_axes.cwiseProduct(r.transpose() * (p - x)).norm(), 1.0 + 1e-9);
  }
}

TEST(Geometry, PitchedBoundingBoxMatchesRejectionOracle) {
  EllipsoidModel m{0.3, 0.1, 2048};
  const Mat3 r = so3::rot_y(std::numbers::pi / 2);
  const Vec3 box = bbox_size(ellipsoid_points(m, Vec3::Zero(), r));
  const Vec3 oracle = bbox_size(rejection_ellipsoid(m, Vec3::Zero(), r, 1000000, 5));
  EXPECT_NEAR(oracle.x(), 0.2, 0.01);
  EXPECT_NEAR(oracle.y(), 0.6, 0.01);
  EXPECT_NEAR(oracle.z(), 0.6, 0.01);
  for (int i = 0; i < 3; ++i) EXPECT_NEAR(box[i], oracle[i], 0.02) << "axis " << i;
}

TEST(Geometry, TranslationEquivariance) {
  EllipsoidModel m;
  const Mat3 r = so3::from_euler(0.1, 0.2, 0.3);
  const Vec3 x(0.25, -0.5, 1.0), t(0.5, 0.25, -0.125);
  const auto a = ellipsoid_points(m, x + t, r);
  const auto b = ellipsoid_points(m, x, r);
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_LT((a[i] - (b[i] + t)).cwiseAbs().maxCoeff(), 1e-15);
  }
}

TEST(Geometry, SamplingDeterministic) {
  EXPECT_EQ(unit_ball_samples(100, 7), unit_ball_samples(100, 7));
  EXPECT_NE(unit_ball_samples(100, 7), unit_ball_samples(100, 8));
}

TEST(Geometry, DisjointIsZero) {
  EllipsoidModel m;
  const auto cloud = ellipsoid_points(m, Vec3::Zero(), Mat3::Identity());
  std::vector<ObstaclePrimitive> obs{Box{Vec3(5, 0, 0), Vec3::Ones()}, Cylinder{Vec3(0, 3, 0), 0.5, 2.0}};
  EXPECT_EQ(intersection_fraction(cloud, obs), 0.0);
  EXPECT_EQ(intersection_fraction(cloud, {}), 0.0);
}

TEST(Geometry, ContainedIsOne) {
  EllipsoidModel m;
  const auto cloud = ellipsoid_points(m, Vec3::Zero(), so3::rot_x(0.4));
  std::vector<ObstaclePrimitive> obs{Box{Vec3::Zero(), Vec3::Constant(10.0)}};
  EXPECT_EQ(intersection_fraction(cloud, obs), 1.0);
}

TEST(Geometry, HalfSpaceSymmetryAgainstRejectionOracle) {
  EllipsoidModel m{1.0, 1.0, 2048};
  std::vector<ObstaclePrimitive> obs{Box{Vec3(50, 0, 0), Vec3(50, 50, 50)}};
  const double f = intersection_fraction(ellipsoid_points(m, Vec3::Zero(), Mat3::Identity()), obs);
  const double oracle = rejection_fraction(m, Vec3::Zero(), Mat3::Identity(), obs, 1000000, 9);
  EXPECT_NEAR(oracle, 0.5, 0.002);
  EXPECT_NEAR(f, 0.5, 0.03);
  EXPECT_NEAR(f, oracle, 0.03);
}

TEST(Geometry, MonotoneInObstacles) {
  EllipsoidModel m;
  const auto cloud = ellipsoid_points(m, Vec3::Zero(), so3::from_euler(0.3, 0.1, 0));
  std::vector<ObstaclePrimitive> obs;
  double prev = 0.0;
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-0.3, 0.3);
  for (int k = 0; k < 10; ++k) {
    obs.emplace_back(Box{Vec3(u(rng), u(rng), u(rng)), Vec3::Constant(0.05)});
    const double f = intersection_fraction(cloud, obs);
    EXPECT_GE(f, prev);
    EXPECT_LE(f, 1.0);
    prev = f;
  }
}

TEST(Geometry, RigidMotionInvariance) {
  EllipsoidModel m;
  std::mt19937_64 rng(4);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  for (int trial = 0; trial < 20; ++trial) {
    const Mat3 r = so3::from_euler(u(rng), u(rng), u(rng));
    const Vec3 x(0.1 * u(rng), 0.1 * u(rng), 0.1 * u(rng));
    const auto cloud = ellipsoid_points(m, x, r);
    const Vec3 c(0.2 * u(rng), 0.2 * u(rng), 0.2 * u(rng));
    std::vector<ObstaclePrimitive> obs{Cylinder{c, 0.15, 0.4}};
    const double f = intersection_fraction(cloud, obs);
    // Rotation about world z keeps the cylinder vertical.
    const Mat3 q = so3::rot_z(3.0 * u(rng));
    const Vec3 t(u(rng), u(rng), u(rng));
    std::vector<Vec3> moved;
    for (const auto& p : cloud) moved.push_back(q * p + t);
    std::vector<ObstaclePrimitive> obs2{Cylinder{q * c + t, 0.15, 0.4}};
    EXPECT_NEAR(intersection_fraction(moved, obs2), f, 1e-12);
    // A window rotated about x with the cloud: same fraction.
    WindowPanel w;
    w.center = c;
    w.angle = 0.3;
    std::vector<ObstaclePrimitive> win{w};
    const double fw = intersection_fraction(cloud, win);
    const Mat3 qx = so3::rot_x(0.5);
    std::vector<Vec3> moved_x;
    for (const auto& p : cloud) moved_x.push_back(qx * p + t);
    WindowPanel w2 = w;
    w2.center = qx * c + t;
    w2.angle = 0.8;
    std::vector<ObstaclePrimitive> win2{w2};
    EXPECT_NEAR(intersection_fraction(moved_x, win2), fw, 1e-12);
  }
}

TEST(Geometry, ConvergenceWithSampleCount) {
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(-1.0, 1.0);
  const int n = 1024;
  double sum_diff = 0.0;
  for (int trial = 0; trial < 100; ++trial) {
    const Mat3 r = so3::from_euler(u(rng), u(rng), u(rng));
    std::vector<ObstaclePrimitive> obs{Box{Vec3(0.3 * u(rng), 0.3 * u(rng), 0.1 * u(rng)), Vec3(0.2, 0.2, 0.2)}};
    EllipsoidModel a{0.28, 0.08, n}, b{0.28, 0.08, 2 * n};
    const double fa = intersection_fraction(ellipsoid_points(a, Vec3::Zero(), r), obs);
    const double fb = intersection_fraction(ellipsoid_points(b, Vec3::Zero(), r), obs);
    sum_diff += std::abs(fa - fb);
    // Binomial standard error of a fraction is at most 0.5 / sqrt(n).
    EXPECT_LE(std::abs(fa - fb), 4.0 * 0.5 / std::sqrt(n));
  }
  EXPECT_LE(sum_diff / 100.0, 0.5 / std::sqrt(n));
}

TEST(Geometry, WindowGapIsTraversableAtMatchedTilt) {
  EllipsoidModel m;
  for (double angle = 0.2; angle <= 0.7 + 1e-12; angle += 0.05) {
    WindowPanel w;
    w.center = Vec3(1.5, 0.1, 1.5);
    w.angle = angle;
    std::vector<ObstaclePrimitive> obs{w};
    EXPECT_EQ(intersection_fraction(ellipsoid_points(m, w.center, so3::rot_x(angle)), obs), 0.0) << angle;
  }
}

TEST(Geometry, WindowGapBlocksLevelBodyAtSteepAngle) {
  EllipsoidModel m;
  WindowPanel w;
  w.angle = 0.7;
  std::vector<ObstaclePrimitive> obs{w};
  EXPECT_GT(intersection_fraction(ellipsoid_points(m, w.center, Mat3::Identity()), obs), 0.0);
}

TEST(Geometry, WindowContainsPanelNotGap) {
  WindowPanel w;
  w.center = Vec3(1, 0, 1);
  w.angle = 0.5;
  EXPECT_FALSE(w.contains(w.center));
  EXPECT_TRUE(w.contains(w.center + 0.3 * w.gap_short_axis()));
  EXPECT_FALSE(w.contains(w.center + 0.4 * w.gap_long_axis()));
  EXPECT_TRUE(w.contains(w.center + 0.5 * w.gap_long_axis()));
  EXPECT_FALSE(w.contains(w.center + Vec3(0.1, 0, 0) + 0.3 * w.gap_short_axis()));
}

TEST(Geometry, Validation) {
  EXPECT_THROW((EllipsoidModel{0.1, 0.2, 2048}.validate()), std::invalid_argument);
  EXPECT_THROW((EllipsoidModel{0.3, 0.1, 100}.validate()), std::invalid_argument);
  EXPECT_THROW(validate_obstacle(Box{Vec3::Zero(), Vec3(1, 0, 1)}), std::invalid_argument);
  WindowPanel w;
  w.gap_width = 7.0;
  EXPECT_THROW(validate_obstacle(w), std::invalid_argument);
  EXPECT_THROW(intersection_fraction({}, {}), std::invalid_argument);
}
