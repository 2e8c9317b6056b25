#pragma once

// Action parameterization and the simulated flight environment used for
// rollouts.

#include "curio/observation.hpp"
#include "curio/reward.hpp"

#include <functional>
#include <memory>
#include <random>
#include <span>

namespace curio {

inline constexpr int kActionDim = 4;

inline double deg2rad(double d) { return d * std::numbers::pi / 180.0; }
inline double rad2deg(double r) { return r * 180.0 / std::numbers::pi; }

// The policy emits four values in [-1, 1]: roll, pitch, yaw and thrust. The
// angles scale linearly to their bounds. Thrust maps piecewise-linearly onto
// the fraction [0, 1] of thrust_max with 0 -> hover, -1 -> 0, +1 -> 1.
struct ActionBounds {
  double max_roll = deg2rad(60.0);
  double max_pitch = deg2rad(60.0);
  double max_yaw = deg2rad(180.0);
};

struct ActionAngles {
  double roll = 0.0;   // rad
  double pitch = 0.0;  // rad
  double yaw = 0.0;    // rad
  double thrust_fraction = 0.0;

  Mat3 attitude() const { return so3::from_euler(roll, pitch, yaw); }
};

inline ActionAngles decode_action(std::span<const float> a, const QuadParams& params, const ActionBounds& b = {}) {
  if (a.size() != kActionDim) throw std::domain_error("action: expected 4 components");
  auto clip = [](double v) { return std::clamp(v, -1.0, 1.0); };
  const double hover = params.hover_thrust() / params.thrust_max;
  const double t = clip(a[3]);
  ActionAngles out;
  out.roll = clip(a[0]) * b.max_roll;
  out.pitch = clip(a[1]) * b.max_pitch;
  out.yaw = clip(a[2]) * b.max_yaw;
  out.thrust_fraction = t <= 0.0 ? hover * (1.0 + t) : hover + t * (1.0 - hover);
  return out;
}

inline std::array<float, kActionDim> encode_action(const ActionAngles& x, const QuadParams& params,
                                                  const ActionBounds& b = {}) {
  const double hover = params.hover_thrust() / params.thrust_max;
  const double f = std::clamp(x.thrust_fraction, 0.0, 1.0);
  const double t = f <= hover ? f / hover - 1.0 : (f - hover) / (1.0 - hover);
  return {static_cast<float>(std::clamp(x.roll / b.max_roll, -1.0, 1.0)),
          static_cast<float>(std::clamp(x.pitch / b.max_pitch, -1.0, 1.0)),
          static_cast<float>(std::clamp(x.yaw / b.max_yaw, -1.0, 1.0)), static_cast<float>(t)};
}

inline AttitudeThrustAction to_command(const ActionAngles& x, const QuadParams& params) {
  return {x.attitude(), std::clamp(x.thrust_fraction, 0.0, 1.0) * params.thrust_max};
}

// Independent zero-mean Gaussian error on each commanded attitude angle;
// thrust is left alone and the angles are clipped back into bounds.
template <class Rng>
ActionAngles attitude_noise(const ActionAngles& action, double std_degrees, Rng& rng, const ActionBounds& b = {}) {
  if (!(std_degrees >= 0.0)) throw std::invalid_argument("attitude_noise: std must be >= 0");
  if (std_degrees == 0.0) return action;
  std::normal_distribution<double> n(0.0, deg2rad(std_degrees));
  ActionAngles out = action;
  out.roll = std::clamp(action.roll + n(rng), -b.max_roll, b.max_roll);
  out.pitch = std::clamp(action.pitch + n(rng), -b.max_pitch, b.max_pitch);
  out.yaw = std::clamp(action.yaw + n(rng), -b.max_yaw, b.max_yaw);
  return out;
}

// --- environment interface -------------------------------------------------

struct StepResult {
  std::vector<float> observation;
  double reward = 0.0;  // extrinsic
  std::optional<TerminationEvent> event;
};

struct EnvSnapshot {
  QuadState state;
  int step = 0;
  SlalomProgress progress;
};

class Environment {
 public:
  virtual ~Environment() = default;
  virtual int observation_dim() const = 0;
  virtual std::vector<float> reset() = 0;
  virtual StepResult step(std::span<const float> action) = 0;
  virtual const QuadState& state() const = 0;
  virtual const Scene& scene() const = 0;
  virtual bool supports_snapshot() const { return false; }
  virtual EnvSnapshot snapshot() const { throw std::logic_error("environment does not support snapshots"); }
  virtual std::vector<float> restore(const EnvSnapshot&) {
    throw std::logic_error("environment does not support snapshots");
  }
};

struct FlightEnvConfig {
  SceneConfig scene;
  QuadParams quad;
  EllipsoidModel ellipsoid;
  RewardWeights weights;
  ActionBounds bounds;
};

// Quadrotor in a scene drawn from the configured distribution at every reset.
class FlightEnv final : public Environment {
 public:
  FlightEnv(FlightEnvConfig cfg, std::uint64_t seed) : cfg_(std::move(cfg)), rng_(seed) {
    cfg_.quad.validate();
    cfg_.ellipsoid.validate();
    cfg_.weights.validate();
  }

  // Pins every subsequent reset to this scene.
  void set_fixed_scene(Scene scene) {
    validate_scene(scene);
    fixed_scene_ = std::move(scene);
  }

  int observation_dim() const override { return curio::observation_dim(cfg_.scene.type); }

  std::vector<float> reset() override {
    scene_ = fixed_scene_ ? *fixed_scene_ : sample_scene(cfg_.scene, rng_, cfg_.ellipsoid);
    codec_ = ObservationCodec::for_scene(scene_);
    weights_ = cfg_.weights.with_goal(scene_);
    state_ = QuadState::at_rest(scene_.start_position);
    step_ = 0;
    progress_ = {};
    return observation();
  }

  StepResult step(std::span<const float> action) override {
    const ActionAngles angles = decode_action(action, cfg_.quad, cfg_.bounds);
    const QuadState next = curio::step(state_, to_command(angles, cfg_.quad), cfg_.quad);
    progress_.update(scene_, state_.position, next.position);
    state_ = next;
    ++step_;
    StepResult r;
    r.event = check_termination(state_, scene_, step_, cfg_.ellipsoid, &progress_);
    r.reward = extrinsic_reward(state_, scene_, cfg_.ellipsoid, weights_, reward_event(r.event));
    r.observation = observation();
    return r;
  }

  const QuadState& state() const override { return state_; }
  const Scene& scene() const override { return scene_; }
  const FlightEnvConfig& config() const { return cfg_; }
  int step_index() const { return step_; }

  bool supports_snapshot() const override { return true; }
  EnvSnapshot snapshot() const override { return {state_, step_, progress_}; }
  std::vector<float> restore(const EnvSnapshot& s) override {
    state_ = s.state;
    step_ = s.step;
    progress_ = s.progress;
    return observation();
  }

 private:
  std::vector<float> observation() const {
    const auto raw = raw_features(state_, scene_);
    std::vector<float> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) {
      out[i] = static_cast<float>((raw[i] - codec_.offset[i]) / codec_.scale[i]);
    }
    return out;
  }

  FlightEnvConfig cfg_;
  std::mt19937_64 rng_;
  std::optional<Scene> fixed_scene_;
  Scene scene_;
  ObservationCodec codec_;
  RewardWeights weights_;
  QuadState state_;
  int step_ = 0;
  SlalomProgress progress_;
};

}  // namespace curio
