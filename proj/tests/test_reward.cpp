#include "curio/reward.hpp"

#include <gtest/gtest.h>

#include <random>

using namespace curio;

namespace {

RewardWeights weights_at(const Vec3& goal, const Mat3& goal_r) {
  RewardWeights w;
  w.goal_position = goal;
  w.goal_attitude = goal_r;
  return w;
}

Scene empty_scene() {
  Scene s;
  s.region = FlightRegion{Vec3(-10, -10, -10), Vec3(10, 10, 10)};
  return s;
}

}  // namespace

TEST(Reward, GoalRewardZeroAtGoal) {
  const RewardWeights w = weights_at(Vec3(1, 2, 3), so3::rot_x(0.3));
  QuadState s = QuadState::at_rest(Vec3(1, 2, 3));
  s.attitude = so3::rot_x(0.3);
  EXPECT_EQ(goal_reward(s, w), 0.0);
}

TEST(Reward, SingleTermPosition) {
  const RewardWeights w = weights_at(Vec3::Zero(), Mat3::Identity());
  EXPECT_EQ(goal_reward(QuadState::at_rest(Vec3(1, 0, 0)), w), -1.0);
}

TEST(Reward, TermByTermHandComputation) {
  std::mt19937_64 rng(1);
  std::uniform_real_distribution<double> u(-2.0, 2.0);
  for (int i = 0; i < 100; ++i) {
    RewardWeights w = weights_at(Vec3(u(rng), u(rng), u(rng)), so3::from_euler(u(rng), u(rng), u(rng)));
    w.lambda_x = -1.0;
    w.lambda_r = -0.5;
    w.lambda_v = -0.1;
    w.lambda_omega = -0.05;
    QuadState s;
    s.position = Vec3(u(rng), u(rng), u(rng));
    s.attitude = so3::from_euler(u(rng), u(rng), u(rng));
    s.linear_velocity = Vec3(u(rng), u(rng), u(rng));
    s.angular_velocity = Vec3(u(rng), u(rng), u(rng));
    double dx = 0, dr = 0, dv = 0, dw = 0;
    for (int k = 0; k < 3; ++k) {
      dx += std::pow(s.position[k] - w.goal_position[k], 2);
      dv += std::pow(s.linear_velocity[k], 2);
      dw += std::pow(s.angular_velocity[k], 2);
      for (int j = 0; j < 3; ++j) dr += std::pow(s.attitude(k, j) - w.goal_attitude(k, j), 2);
    }
    const double expected = -1.0 * std::sqrt(dx) - 0.5 * std::sqrt(dr) - 0.1 * std::sqrt(dv) - 0.05 * std::sqrt(dw);
    EXPECT_NEAR(goal_reward(s, w), expected, 1e-12);
  }
}

TEST(Reward, TranslationCovariance) {
  RewardWeights w = weights_at(Vec3(0.3, 0.1, 1.0), Mat3::Identity());
  QuadState s = QuadState::at_rest(Vec3(1, -1, 2));
  s.linear_velocity = Vec3(1, 0, 0);
  const double r0 = goal_reward(s, w);
  const Vec3 t(5.0, -3.0, 0.7);
  w.goal_position += t;
  s.position += t;
  EXPECT_NEAR(goal_reward(s, w), r0, 1e-12);
}

TEST(Reward, PositiveScalingPreservesOrdering) {
  RewardWeights w = weights_at(Vec3::Zero(), Mat3::Identity());
  QuadState a = QuadState::at_rest(Vec3(1, 0, 0));
  QuadState b = QuadState::at_rest(Vec3(0.2, 0, 0));
  b.linear_velocity = Vec3(3, 0, 0);
  const double ra = goal_reward(a, w), rb = goal_reward(b, w);
  RewardWeights w2 = w;
  for (double* p : {&w2.lambda_x, &w2.lambda_r, &w2.lambda_v, &w2.lambda_omega}) *p *= 2.5;
  EXPECT_NEAR(goal_reward(a, w2), 2.5 * ra, 1e-12);
  EXPECT_NEAR(goal_reward(b, w2), 2.5 * rb, 1e-12);
  EXPECT_EQ(goal_reward(a, w2) < goal_reward(b, w2), ra < rb);
}

TEST(Reward, CollisionRewardCases) {
  EllipsoidModel m{1.0, 1.0, 2048};
  const RewardWeights w = weights_at(Vec3::Zero(), Mat3::Identity());
  Scene s = empty_scene();
  const QuadState at0 = QuadState::at_rest(Vec3::Zero());
  EXPECT_EQ(collision_reward(at0, s, m, w), 0.0);
  s.obstacles = {Box{Vec3::Zero(), Vec3::Constant(5)}};
  EXPECT_EQ(collision_reward(at0, s, m, w), -10.0);
  s.obstacles = {Box{Vec3(5, 0, 0), Vec3::Constant(5)}};
  EXPECT_NEAR(collision_reward(at0, s, m, w), -5.0, 0.3);
}

TEST(Reward, ExtrinsicEvents) {
  EllipsoidModel m;
  RewardWeights w = weights_at(Vec3::Zero(), Mat3::Identity());
  const Scene s = empty_scene();
  const QuadState goal = QuadState::at_rest(Vec3::Zero());
  const QuadState off = QuadState::at_rest(Vec3(2, 0, 0));
  EXPECT_EQ(extrinsic_reward(off, s, m, w, RewardEvent::none), 0.0);
  EXPECT_EQ(extrinsic_reward(off, s, m, w, RewardEvent::out_of_region), -2.0);
  EXPECT_EQ(extrinsic_reward(off, s, m, w, RewardEvent::step_limit), -2.0);
  EXPECT_EQ(extrinsic_reward(goal, s, m, w, RewardEvent::goal_reached), 3.0);
  w.success_bonus = 0.0;
  EXPECT_EQ(extrinsic_reward(goal, s, m, w, RewardEvent::goal_reached), 0.0);
  EXPECT_THROW(extrinsic_reward(goal, s, m, w, static_cast<RewardEvent>(42)), std::domain_error);
}

TEST(Reward, SparseEverywhere) {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-3.0, 3.0);
  EllipsoidModel m;
  const RewardWeights w = weights_at(Vec3(1, 1, 1), Mat3::Identity());
  Scene s = empty_scene();
  s.obstacles = {Box{Vec3::Zero(), Vec3::Constant(1)}};
  for (int i = 0; i < 200; ++i) {
    QuadState q = QuadState::at_rest(Vec3(u(rng), u(rng), u(rng)));
    q.attitude = so3::from_euler(u(rng), u(rng), u(rng));
    EXPECT_EQ(extrinsic_reward(q, s, m, w, RewardEvent::none), 0.0);
  }
}

TEST(Reward, CollisionComposition) {
  // Fraction 0.2 from a box slab, goal term chosen to be -3.1.
  EllipsoidModel m{1.0, 1.0, 2048};
  RewardWeights w = weights_at(Vec3(0, 0, 0), Mat3::Identity());
  Scene s = empty_scene();
  // Find the slab offset giving a 0.2 fraction on this sample set.
  double lo = 0.0, hi = 1.0;
  for (int it = 0; it < 60; ++it) {
    const double mid = 0.5 * (lo + hi);
    s.obstacles = {Box{Vec3(mid + 5.0, 0, 0), Vec3::Constant(5)}};
    const double f = intersection_fraction(ellipsoid_points(m, Vec3::Zero(), Mat3::Identity()), s.obstacles);
    (f > 0.2 ? lo : hi) = mid;
  }
  const double frac = intersection_fraction(ellipsoid_points(m, Vec3::Zero(), Mat3::Identity()), s.obstacles);
  ASSERT_NEAR(frac, 0.2, 1e-3);
  w.goal_position = Vec3(0, 3.1, 0);
  const QuadState q = QuadState::at_rest(Vec3::Zero());
  EXPECT_NEAR(extrinsic_reward(q, s, m, w, RewardEvent::collision), -3.1 - 10.0 * frac, 1e-12);
  EXPECT_NEAR(extrinsic_reward(q, s, m, w, RewardEvent::collision), -5.1, 0.01);
}

TEST(Reward, WeightValidation) {
  RewardWeights w;
  EXPECT_NO_THROW(w.validate());
  w.lambda_x = 0.5;
  EXPECT_THROW(w.validate(), std::invalid_argument);
  w = {};
  w.lambda_c = -1.0;
  EXPECT_THROW(w.validate(), std::invalid_argument);
}
