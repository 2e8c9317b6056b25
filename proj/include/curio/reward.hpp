#pragma once

// Goal, collision and extrinsic rewards. Rewards are sparse: they are only
// emitted on the step that terminates an episode.

#include "curio/geometry.hpp"
#include "curio/scenes.hpp"

namespace curio {

struct RewardWeights {
  double lambda_x = -1.0;
  double lambda_r = -0.5;
  double lambda_v = -0.05;
  double lambda_omega = -0.02;
  double lambda_obstacle = -10.0;
  double lambda_c = 4.0;
  double success_bonus = 3.0;
  Vec3 goal_position = Vec3::Zero();
  Mat3 goal_attitude = Mat3::Identity();

  void validate() const {
    for (double w : {lambda_x, lambda_r, lambda_v, lambda_omega, lambda_obstacle}) {
      if (!(w <= 0.0)) throw std::invalid_argument("reward: penalty weights must be <= 0");
    }
    if (!(lambda_c >= 0.0)) throw std::invalid_argument("reward: lambda_c must be >= 0");
    if (!std::isfinite(success_bonus)) throw std::invalid_argument("reward: success_bonus must be finite");
  }

  RewardWeights with_goal(const Scene& scene) const {
    RewardWeights w = *this;
    w.goal_position = scene.goal_position;
    w.goal_attitude = scene.goal_attitude;
    return w;
  }
};

inline double goal_reward(const QuadState& state, const RewardWeights& w) {
  return w.lambda_x * (state.position - w.goal_position).norm() +
         w.lambda_r * (state.attitude - w.goal_attitude).norm() +  // Frobenius
         w.lambda_v * state.linear_velocity.norm() +
         w.lambda_omega * state.angular_velocity.norm();
}

inline double collision_reward(const QuadState& state, const Scene& scene, const EllipsoidModel& ellipsoid,
                               const RewardWeights& w) {
  const PointCloud cloud = ellipsoid_points(ellipsoid, state.position, state.attitude);
  return w.lambda_obstacle * intersection_fraction(cloud, scene.obstacles);
}

enum class RewardEvent { none, collision, goal_reached, out_of_region, step_limit };

inline RewardEvent reward_event(const std::optional<TerminationEvent>& ev) {
  if (!ev) return RewardEvent::none;
  switch (ev->cause) {
    case TerminationCause::goal_reached: return RewardEvent::goal_reached;
    case TerminationCause::collision: return RewardEvent::collision;
    case TerminationCause::out_of_region: return RewardEvent::out_of_region;
    case TerminationCause::step_limit: return RewardEvent::step_limit;
  }
  throw std::domain_error("unknown termination cause");
}

inline double extrinsic_reward(const QuadState& state, const Scene& scene, const EllipsoidModel& ellipsoid,
                               const RewardWeights& w, RewardEvent event) {
  switch (event) {
    case RewardEvent::none:
      return 0.0;
    case RewardEvent::collision:
      return goal_reward(state, w) + collision_reward(state, scene, ellipsoid, w);
    case RewardEvent::goal_reached:
      return goal_reward(state, w) + collision_reward(state, scene, ellipsoid, w) + w.success_bonus;
    case RewardEvent::out_of_region:
    case RewardEvent::step_limit:
      return goal_reward(state, w);
  }
  throw std::domain_error("extrinsic_reward: unknown event tag");
}

}  // namespace curio
