#pragma once

// Flattened policy input: position (3), attitude row-major (9), linear
// velocity (3), then the scene's obstacle parameters.
//
// Normalization table (normalized = (raw - offset) / scale):
//   position          offset = region center,  scale = region half-extent
//   attitude entries  offset = 0,              scale = 1
//   velocity          offset = 0,              scale = 10 m/s
//   narrow_window     angle / 1 rad, lateral distance / region half-extent y
//   slalom_path       column offsets / half-extent y, separation / half-extent x
//   unstructured      per slot: present flag raw; centers like position;
//                     half sizes / 0.5 m

#include "curio/scenes.hpp"

#include <span>
#include <vector>

namespace curio {

inline constexpr int kStateFeatures = 15;
inline constexpr double kVelocityScale = 10.0;

inline int observation_dim(SceneType t) { return kStateFeatures + obstacle_param_count(t); }

struct ObservationCodec {
  std::vector<double> offset;
  std::vector<double> scale;

  static ObservationCodec for_scene(const Scene& scene) {
    const int n = observation_dim(scene.type);
    ObservationCodec c;
    c.offset.assign(static_cast<std::size_t>(n), 0.0);
    c.scale.assign(static_cast<std::size_t>(n), 1.0);
    const Vec3 center = scene.region.center();
    const Vec3 half = scene.region.half_extent();
    for (int i = 0; i < 3; ++i) {
      c.offset[static_cast<std::size_t>(i)] = center[i];
      c.scale[static_cast<std::size_t>(i)] = half[i];
    }
    for (int i = 12; i < 15; ++i) c.scale[static_cast<std::size_t>(i)] = kVelocityScale;
    auto set = [&](int k, double off, double sc) {
      c.offset[static_cast<std::size_t>(kStateFeatures + k)] = off;
      c.scale[static_cast<std::size_t>(kStateFeatures + k)] = sc;
    };
    switch (scene.type) {
      case SceneType::narrow_window:
        set(0, 0.0, 1.0);
        set(1, 0.0, half.y());
        break;
      case SceneType::slalom_path:
        set(0, 0.0, half.y());
        set(1, 0.0, half.y());
        set(2, 0.0, half.x());
        break;
      case SceneType::unstructured:
        for (int s = 0; s < kUnstructuredSlots; ++s) {
          const int b = s * kUnstructuredSlotFeatures;
          set(b + 0, 0.0, 1.0);
          set(b + 1, center.x(), half.x());
          set(b + 2, center.y(), half.y());
          set(b + 3, 0.0, 0.5);
          set(b + 4, 0.0, 0.5);
        }
        break;
    }
    return c;
  }

  std::vector<double> normalize(std::span<const double> raw) const {
    std::vector<double> out(raw.size());
    for (std::size_t i = 0; i < raw.size(); ++i) out[i] = (raw[i] - offset[i]) / scale[i];
    return out;
  }

  std::vector<double> denormalize(std::span<const double> norm) const {
    std::vector<double> out(norm.size());
    for (std::size_t i = 0; i < norm.size(); ++i) out[i] = norm[i] * scale[i] + offset[i];
    return out;
  }
};

inline std::vector<double> raw_features(const QuadState& state, const Scene& scene) {
  std::vector<double> f;
  f.reserve(static_cast<std::size_t>(observation_dim(scene.type)));
  for (int i = 0; i < 3; ++i) f.push_back(state.position[i]);
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) f.push_back(state.attitude(r, c));
  }
  for (int i = 0; i < 3; ++i) f.push_back(state.linear_velocity[i]);
  f.insert(f.end(), scene.obstacle_params.begin(), scene.obstacle_params.end());
  return f;
}

inline std::vector<double> observe(const QuadState& state, const Scene& scene) {
  if (!state.finite()) throw std::domain_error("observe: non-finite state");
  if (static_cast<int>(scene.obstacle_params.size()) != obstacle_param_count(scene.type)) {
    throw std::domain_error("observe: scene obstacle parameters have the wrong length");
  }
  return ObservationCodec::for_scene(scene).normalize(raw_features(state, scene));
}

}  // namespace curio
