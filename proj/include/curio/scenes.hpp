#pragma once

// Benchmark scenes: narrow window, slalom path, and random unstructured
// obstacle fields, plus the per-step termination test.

#include "curio/geometry.hpp"
#include "curio/sim_core.hpp"

#include <algorithm>
#include <optional>
#include <random>
#include <string>
#include <string_view>

namespace curio {

enum class SceneType { narrow_window, slalom_path, unstructured };

inline std::string_view to_string(SceneType t) {
  switch (t) {
    case SceneType::narrow_window: return "narrow_window";
    case SceneType::slalom_path: return "slalom_path";
    case SceneType::unstructured: return "unstructured";
  }
  throw std::domain_error("unknown scene type");
}

inline SceneType scene_type_from_string(std::string_view s) {
  if (s == "narrow_window") return SceneType::narrow_window;
  if (s == "slalom_path") return SceneType::slalom_path;
  if (s == "unstructured") return SceneType::unstructured;
  throw std::invalid_argument("unknown scene type '" + std::string(s) + "'");
}

struct FlightRegion {
  Vec3 min{-0.5, -1.5, 0.0};
  Vec3 max{3.0, 1.5, 3.0};

  bool contains(const Vec3& p) const {
    return (p.array() >= min.array()).all() && (p.array() <= max.array()).all();
  }
  Vec3 center() const { return 0.5 * (min + max); }
  Vec3 half_extent() const { return 0.5 * (max - min); }
};

// Side constraint for the slalom: the track crosses the plane x = x_plane and
// must do so on a given side of the column at lateral position y_column.
struct SlalomGate {
  double x_plane = 0.0;
  double y_column = 0.0;
};

// Fixed number of obstacle slots encoded for unstructured scenes.
inline constexpr int kUnstructuredSlots = 4;
inline constexpr int kUnstructuredSlotFeatures = 5;  // present, cx, cy, rx, ry

struct Scene {
  SceneType type = SceneType::narrow_window;
  std::vector<ObstaclePrimitive> obstacles;
  Vec3 start_position{0.0, 0.0, 1.5};
  Vec3 goal_position{2.2, 0.0, 1.5};
  Mat3 goal_attitude = Mat3::Identity();
  FlightRegion region;
  double goal_radius = 0.15;
  int max_episode_steps = 500;
  // Randomized parameters in the scene's native units; these are the
  // obstacle features seen by the policy.
  std::vector<double> obstacle_params;
  std::vector<SlalomGate> gates;
  std::uint64_t seed = 0;
};

inline int obstacle_param_count(SceneType t) {
  switch (t) {
    case SceneType::narrow_window: return 2;  // angle, lateral distance
    case SceneType::slalom_path: return 3;    // column 1 y, column 2 y, separation
    case SceneType::unstructured: return kUnstructuredSlots * kUnstructuredSlotFeatures;
  }
  throw std::domain_error("unknown scene type");
}

inline Vec3 obstacle_center(const ObstaclePrimitive& o) {
  return std::visit([](const auto& ob) { return ob.center; }, o);
}

// Goal and every obstacle center lie inside the flight region.
inline void validate_scene(const Scene& s) {
  if (!s.region.contains(s.goal_position)) throw std::domain_error("scene: goal outside flight region");
  if (!s.region.contains(s.start_position)) throw std::domain_error("scene: start outside flight region");
  for (const auto& o : s.obstacles) {
    validate_obstacle(o);
    if (!s.region.contains(obstacle_center(o))) throw std::domain_error("scene: obstacle outside flight region");
  }
  if (static_cast<int>(s.obstacle_params.size()) != obstacle_param_count(s.type)) {
    throw std::domain_error("scene: obstacle parameter count does not match the scene type");
  }
  if (!so3::is_rotation(s.goal_attitude)) throw std::domain_error("scene: goal attitude is not a rotation");
}

// --- generation settings ------------------------------------------------

struct WindowSceneConfig {
  double angle_min = 0.2;
  double angle_max = 0.7;
  double distance_min = -0.3;
  double distance_max = 0.4;
  double gap_width = 0.9;
  double gap_height = 0.3;
  double panel_thickness = 0.05;
  double window_x = 1.5;
  double goal_beyond = 0.7;  // goal distance past the panel along x
};

struct SlalomSceneConfig {
  double separation = 1.5;
  double column_radius = 0.15;
  double track_center_x = 2.0;
  double lateral_offset_max = 0.3;
  double goal_x = 4.0;
};

struct UnstructuredSceneConfig {
  int obstacle_count_min = 0;
  int obstacle_count_max = kUnstructuredSlots;
  double x_min = 1.0;
  double x_max = 2.5;
  double y_max = 1.0;
  double size_min = 0.15;
  double size_max = 0.3;
  double goal_x = 3.5;
  int max_retries = 200;
  double corridor_margin = 0.05;
};

struct SceneConfig {
  SceneType type = SceneType::narrow_window;
  bool randomize = true;
  // Fixed parameters when randomize is off.
  double window_angle = 0.3;
  double window_distance = 0.0;
  double column_offset_1 = 0.0;
  double column_offset_2 = 0.0;
  std::uint64_t scene_seed = 0;
  int obstacle_count = 3;
  double goal_radius = 0.15;
  int max_episode_steps = 500;
  WindowSceneConfig window;
  SlalomSceneConfig slalom;
  UnstructuredSceneConfig unstructured;
};

// --- builders -------------------------------------------------------------

inline Scene make_window_scene(double angle, double lateral_distance, const SceneConfig& cfg,
                               bool enforce_ranges = true) {
  const auto& w = cfg.window;
  if (!std::isfinite(angle) || !std::isfinite(lateral_distance)) {
    throw std::domain_error("window scene: non-finite parameters");
  }
  if (enforce_ranges && (angle < w.angle_min || angle > w.angle_max ||
                         lateral_distance < w.distance_min || lateral_distance > w.distance_max)) {
    throw std::domain_error("window scene: parameters outside the configured ranges");
  }
  Scene s;
  s.type = SceneType::narrow_window;
  s.region = FlightRegion{Vec3(-0.5, -1.5, 0.0), Vec3(w.window_x + w.goal_beyond + 0.8, 1.5, 3.0)};
  s.start_position = Vec3(0.0, 0.0, 1.5);
  WindowPanel panel;
  panel.center = Vec3(w.window_x, lateral_distance, 1.5);
  panel.angle = angle;
  panel.panel_extents = Vec3(w.panel_thickness, 6.0, 6.0);
  panel.gap_width = w.gap_width;
  panel.gap_height = w.gap_height;
  validate_obstacle(panel);
  s.obstacles.emplace_back(panel);
  s.goal_position = panel.center + Vec3(w.goal_beyond, 0.0, 0.0);
  s.goal_attitude = so3::rot_x(angle);
  s.goal_radius = cfg.goal_radius;
  s.max_episode_steps = cfg.max_episode_steps;
  s.obstacle_params = {angle, lateral_distance};
  return s;
}

inline Scene make_slalom_scene(double column_separation, double offset_1, double offset_2,
                               const SceneConfig& cfg) {
  const auto& sl = cfg.slalom;
  if (!(column_separation > 2.0 * sl.column_radius)) {
    throw std::domain_error("slalom scene: separation must exceed the column diameter");
  }
  Scene s;
  s.type = SceneType::slalom_path;
  s.region = FlightRegion{Vec3(-0.5, -1.5, 0.0), Vec3(sl.goal_x + 0.5, 1.5, 3.0)};
  const double ymax = s.region.max.y() - sl.column_radius;
  if (std::abs(offset_1) > ymax || std::abs(offset_2) > ymax) {
    throw std::domain_error("slalom scene: column offsets leave the flight region");
  }
  const double x1 = sl.track_center_x - 0.5 * column_separation;
  const double x2 = sl.track_center_x + 0.5 * column_separation;
  if (x1 - sl.column_radius <= s.start_position.x() + 0.3 || x2 + sl.column_radius >= sl.goal_x) {
    throw std::domain_error("slalom scene: columns overlap start or goal");
  }
  const double height = s.region.max.z() - s.region.min.z();
  s.obstacles.emplace_back(Cylinder{Vec3(x1, offset_1, 0.5 * height), sl.column_radius, height});
  s.obstacles.emplace_back(Cylinder{Vec3(x2, offset_2, 0.5 * height), sl.column_radius, height});
  s.gates = {SlalomGate{x1, offset_1}, SlalomGate{x2, offset_2}};
  s.goal_position = Vec3(sl.goal_x, 0.0, 1.5);
  s.goal_attitude = Mat3::Identity();
  s.goal_radius = cfg.goal_radius;
  s.max_episode_steps = cfg.max_episode_steps;
  s.obstacle_params = {offset_1, offset_2, column_separation};
  return s;
}

// Checks that a piecewise-linear path keeps a sphere bounding every attitude
// of the ellipsoid (radius l plus margin) clear of all obstacles and inside
// the region.
inline bool corridor_clear(const std::vector<Vec3>& waypoints, const Scene& scene,
                           const EllipsoidModel& body, double margin) {
  EllipsoidModel envelope{body.radius_l + margin, body.radius_l + margin, body.sample_count};
  const auto ball = cached_unit_ball(envelope.sample_count);
  const double r = envelope.radius_l;
  PointCloud cloud(ball->size());
  for (std::size_t k = 0; k + 1 < waypoints.size(); ++k) {
    const Vec3 a = waypoints[k];
    const Vec3 b = waypoints[k + 1];
    const int n = std::max(1, static_cast<int>(std::ceil((b - a).norm() / 0.05)));
    for (int i = 0; i <= n; ++i) {
      const Vec3 c = a + (b - a) * (static_cast<double>(i) / n);
      if (!scene.region.contains(c)) return false;
      for (std::size_t j = 0; j < ball->size(); ++j) cloud[j] = c + r * (*ball)[j];
      if (intersection_fraction(cloud, scene.obstacles) > 0.0) return false;
    }
  }
  return true;
}

// Searches start -> via -> goal corridors; returns the first clear path.
inline std::optional<std::vector<Vec3>> find_corridor(const Scene& scene, const EllipsoidModel& body,
                                                      double margin) {
  const Vec3 s = scene.start_position;
  const Vec3 g = scene.goal_position;
  if (corridor_clear({s, g}, scene, body, margin)) return std::vector<Vec3>{s, g};
  const double xm = 0.5 * (s.x() + g.x());
  for (double dy = 0.25; dy <= 1.25; dy += 0.25) {
    for (double sign : {1.0, -1.0}) {
      for (double z : {1.5, 1.0, 2.0}) {
        const Vec3 via(xm, sign * dy, z);
        if (corridor_clear({s, via, g}, scene, body, margin)) return std::vector<Vec3>{s, via, g};
      }
    }
  }
  return std::nullopt;
}

inline void encode_unstructured_params(Scene& s) {
  s.obstacle_params.assign(kUnstructuredSlots * kUnstructuredSlotFeatures, 0.0);
  std::vector<std::array<double, 4>> rows;
  for (const auto& o : s.obstacles) {
    if (const auto* c = std::get_if<Cylinder>(&o)) {
      rows.push_back({c->center.x(), c->center.y(), c->radius, c->radius});
    } else if (const auto* b = std::get_if<Box>(&o)) {
      rows.push_back({b->center.x(), b->center.y(), b->half_extents.x(), b->half_extents.y()});
    }
  }
  std::sort(rows.begin(), rows.end());
  for (std::size_t k = 0; k < rows.size() && k < static_cast<std::size_t>(kUnstructuredSlots); ++k) {
    double* slot = &s.obstacle_params[k * kUnstructuredSlotFeatures];
    slot[0] = 1.0;
    for (int f = 0; f < 4; ++f) slot[f + 1] = rows[k][static_cast<std::size_t>(f)];
  }
}

inline Scene make_unstructured_scene(std::uint64_t seed, int obstacle_count, const SceneConfig& cfg,
                                     const EllipsoidModel& body = {}) {
  const auto& u = cfg.unstructured;
  if (obstacle_count < u.obstacle_count_min || obstacle_count > u.obstacle_count_max ||
      obstacle_count > kUnstructuredSlots) {
    throw std::domain_error("unstructured scene: obstacle_count outside the configured range");
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> ux(u.x_min, u.x_max);
  std::uniform_real_distribution<double> uy(-u.y_max, u.y_max);
  std::uniform_real_distribution<double> usize(u.size_min, u.size_max);
  std::bernoulli_distribution coin(0.5);

  for (int attempt = 0; attempt < u.max_retries; ++attempt) {
    Scene s;
    s.type = SceneType::unstructured;
    s.seed = seed;
    s.region = FlightRegion{Vec3(-0.5, -1.5, 0.0), Vec3(u.goal_x + 0.5, 1.5, 3.0)};
    s.goal_position = Vec3(u.goal_x, 0.0, 1.5);
    s.goal_attitude = Mat3::Identity();
    s.goal_radius = cfg.goal_radius;
    s.max_episode_steps = cfg.max_episode_steps;
    const double height = s.region.max.z() - s.region.min.z();
    for (int k = 0; k < obstacle_count; ++k) {
      const Vec3 c(ux(rng), uy(rng), 0.5 * height);
      if (coin(rng)) {
        s.obstacles.emplace_back(Cylinder{c, usize(rng), height});
      } else {
        const double hx = usize(rng);
        const double hy = usize(rng);
        s.obstacles.emplace_back(Box{c, Vec3(hx, hy, 0.5 * height)});
      }
    }
    if (find_corridor(s, body, u.corridor_margin)) {
      encode_unstructured_params(s);
      return s;
    }
  }
  throw std::runtime_error("unstructured scene: no feasible scene after max retries");
}

// Draws a scene from the configured distribution (or the fixed parameters
// when randomization is off).
template <class Rng>
Scene sample_scene(const SceneConfig& cfg, Rng& rng, const EllipsoidModel& body = {}) {
  switch (cfg.type) {
    case SceneType::narrow_window: {
      if (!cfg.randomize) return make_window_scene(cfg.window_angle, cfg.window_distance, cfg, false);
      std::uniform_real_distribution<double> ua(cfg.window.angle_min, cfg.window.angle_max);
      std::uniform_real_distribution<double> ud(cfg.window.distance_min, cfg.window.distance_max);
      const double a = ua(rng);
      const double d = ud(rng);
      return make_window_scene(a, d, cfg);
    }
    case SceneType::slalom_path: {
      if (!cfg.randomize) {
        return make_slalom_scene(cfg.slalom.separation, cfg.column_offset_1, cfg.column_offset_2, cfg);
      }
      std::uniform_real_distribution<double> uo(-cfg.slalom.lateral_offset_max, cfg.slalom.lateral_offset_max);
      const double o1 = uo(rng);
      const double o2 = uo(rng);
      return make_slalom_scene(cfg.slalom.separation, o1, o2, cfg);
    }
    case SceneType::unstructured: {
      if (!cfg.randomize) return make_unstructured_scene(cfg.scene_seed, cfg.obstacle_count, cfg, body);
      std::uniform_int_distribution<int> uc(cfg.unstructured.obstacle_count_min, cfg.unstructured.obstacle_count_max);
      const int count = uc(rng);
      const std::uint64_t seed = rng();
      return make_unstructured_scene(seed, count, cfg, body);
    }
  }
  throw std::domain_error("unknown scene type");
}

// --- termination --------------------------------------------------------

enum class TerminationCause { goal_reached, collision, out_of_region, step_limit };

inline std::string_view to_string(TerminationCause c) {
  switch (c) {
    case TerminationCause::goal_reached: return "goal_reached";
    case TerminationCause::collision: return "collision";
    case TerminationCause::out_of_region: return "out_of_region";
    case TerminationCause::step_limit: return "step_limit";
  }
  throw std::domain_error("unknown termination cause");
}

struct TerminationEvent {
  TerminationCause cause;
  int step = 0;
};

// Progress through the slalom side constraints. The first column may be
// passed on either side; the second must be passed on the opposite side.
struct SlalomProgress {
  int gates_crossed = 0;
  int first_side = 0;  // +1 left of column (y greater), -1 right
  bool violated = false;

  void update(const Scene& scene, const Vec3& prev, const Vec3& cur) {
    if (violated || gates_crossed >= static_cast<int>(scene.gates.size())) return;
    const SlalomGate& g = scene.gates[static_cast<std::size_t>(gates_crossed)];
    if (prev.x() < g.x_plane && cur.x() >= g.x_plane) {
      const double t = (g.x_plane - prev.x()) / (cur.x() - prev.x());
      const double y = prev.y() + t * (cur.y() - prev.y());
      const int side = y > g.y_column ? 1 : -1;
      if (gates_crossed == 0) {
        first_side = side;
      } else if (side == first_side) {
        violated = true;
        return;
      }
      ++gates_crossed;
    }
  }

  bool complete(const Scene& scene) const {
    return !violated && gates_crossed == static_cast<int>(scene.gates.size());
  }
};

inline std::optional<TerminationEvent> check_termination(const QuadState& state, const Scene& scene,
                                                         int step, const EllipsoidModel& ellipsoid,
                                                         const SlalomProgress* progress = nullptr) {
  const PointCloud cloud = ellipsoid_points(ellipsoid, state.position, state.attitude);
  if (intersection_fraction(cloud, scene.obstacles) > 0.0) {
    return TerminationEvent{TerminationCause::collision, step};
  }
  if (!scene.region.contains(state.position)) {
    return TerminationEvent{TerminationCause::out_of_region, step};
  }
  if ((state.position - scene.goal_position).norm() <= scene.goal_radius) {
    const bool gates_ok = scene.gates.empty() || (progress != nullptr && progress->complete(scene));
    if (gates_ok) return TerminationEvent{TerminationCause::goal_reached, step};
  }
  if (step >= scene.max_episode_steps) {
    return TerminationEvent{TerminationCause::step_limit, step};
  }
  return std::nullopt;
}

}  // namespace curio
