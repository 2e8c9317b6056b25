#pragma once

// Simplified rigid-body quadrotor driven by attitude-thrust commands.
//
// The attitude follows the commanded rotation through a first-order lag
// (geodesic interpolation on SO(3)); translation is Newtonian with gravity
// and collective thrust along body z. Integration is semi-implicit Euler.

#include "curio/rotation.hpp"

#include <stdexcept>
#include <string>

namespace curio {

struct QuadState {
  Vec3 position = Vec3::Zero();          // m, world
  Mat3 attitude = Mat3::Identity();      // body -> world
  Vec3 linear_velocity = Vec3::Zero();   // m/s, world
  Vec3 angular_velocity = Vec3::Zero();  // rad/s, body

  bool finite() const {
    return position.allFinite() && attitude.allFinite() &&
           linear_velocity.allFinite() && angular_velocity.allFinite();
  }
  bool valid() const { return finite() && so3::is_rotation(attitude); }

  static QuadState at_rest(const Vec3& p) {
    QuadState s;
    s.position = p;
    return s;
  }
};

struct AttitudeThrustAction {
  Mat3 commanded_attitude = Mat3::Identity();
  double thrust = 0.0;  // N along body z
};

struct QuadParams {
  double mass = 0.547;
  Vec3 inertia_diag{0.033, 0.033, 0.058};
  double thrust_max = 20.0;
  double attitude_time_constant = 0.08;
  double control_dt = 0.01;
  double gravity = 9.81;

  double hover_thrust() const { return mass * gravity; }

  void validate() const {
    auto positive = [](double v, const char* name) {
      if (!(v > 0.0) || !std::isfinite(v)) {
        throw std::invalid_argument(std::string("quad.") + name + " must be positive");
      }
    };
    positive(mass, "mass");
    positive(inertia_diag.x(), "inertia_xx");
    positive(inertia_diag.y(), "inertia_yy");
    positive(inertia_diag.z(), "inertia_zz");
    positive(thrust_max, "thrust_max");
    positive(attitude_time_constant, "attitude_time_constant");
    positive(control_dt, "control_dt");
    if (control_dt > 0.05) throw std::invalid_argument("quad.control_dt must be <= 0.05");
    if (gravity != 9.81) throw std::invalid_argument("quad.gravity is fixed at 9.81");
  }
};

inline void check_action(const AttitudeThrustAction& action, const QuadParams& params) {
  if (!action.commanded_attitude.allFinite() || !std::isfinite(action.thrust)) {
    throw std::domain_error("step: non-finite action");
  }
  if (!so3::is_rotation(action.commanded_attitude)) {
    throw std::domain_error("step: commanded attitude is not a rotation");
  }
  if (action.thrust < 0.0 || action.thrust > params.thrust_max) {
    throw std::domain_error("step: thrust outside [0, thrust_max]");
  }
}

inline QuadState step(const QuadState& state, const AttitudeThrustAction& action,
                      const QuadParams& params) {
  if (!state.finite()) throw std::domain_error("step: non-finite state");
  if (!so3::is_rotation(state.attitude)) throw std::domain_error("step: attitude is not a rotation");
  check_action(action, params);

  const double dt = params.control_dt;
  const double alpha = 1.0 - std::exp(-dt / params.attitude_time_constant);

  const Vec3 err = so3::log(state.attitude.transpose() * action.commanded_attitude);
  const Vec3 delta = alpha * err;

  QuadState next;
  next.attitude = so3::project(state.attitude * so3::exp(delta));
  next.angular_velocity = delta / dt;

  const Vec3 accel = next.attitude.col(2) * (action.thrust / params.mass) -
                     Vec3(0.0, 0.0, params.gravity);
  next.linear_velocity = state.linear_velocity + accel * dt;
  next.position = state.position + next.linear_velocity * dt;

  if (!next.finite()) throw std::domain_error("step: integration produced non-finite state");
  return next;
}

}  // namespace curio
