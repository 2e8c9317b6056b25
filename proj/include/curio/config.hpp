#pragma once

// Run configuration in a flat `section.key = value` text format. Blank lines
// and lines starting with '#' are ignored; unknown keys are rejected.

#include "curio/td3.hpp"

#include <charconv>
#include <fstream>
#include <functional>
#include <sstream>
#include <string>
#include <string_view>
#include <vector>

namespace curio {

class ConfigError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

struct RunConfig {
  SceneConfig scene;
  QuadParams quad;
  EllipsoidModel ellipsoid;
  RewardWeights reward;
  CuriosityConfig curiosity;
  ExplorationConfig exploration;
  LearnerConfig learner;
  ActionBounds action;
  int episodes = 2000;
  double wall_minutes = 0.0;  // 0 = no wall-clock budget
  std::uint64_t seed = 1;
  int checkpoint_every = 100;
  int curve_window = 50;

  // Training defaults differ from the component defaults.
  RunConfig() {
    quad.control_dt = 0.05;
    scene.max_episode_steps = 60;
    action.max_yaw = deg2rad(10.0);
    learner.gamma = 0.999;
    learner.target_value_mode = TargetValueMode::mc_return;
    learner.updates_per_step = 3.0;
  }

  void validate() const {
    quad.validate();
    ellipsoid.validate();
    reward.validate();
    curiosity.validate();
    exploration.validate();
    learner.validate();
    if (episodes < 0) throw ConfigError("run.episodes must be >= 0");
    if (!(wall_minutes >= 0.0)) throw ConfigError("run.wall_minutes must be >= 0");
    if (checkpoint_every < 1) throw ConfigError("run.checkpoint_every must be >= 1");
    if (curve_window < 1) throw ConfigError("run.curve_window must be >= 1");
    const auto& w = scene.window;
    if (!(w.angle_min <= w.angle_max) || !(w.distance_min <= w.distance_max)) {
      throw ConfigError("scene window ranges must satisfy min <= max");
    }
    const auto& u = scene.unstructured;
    if (u.obstacle_count_min < 0 || u.obstacle_count_max > kUnstructuredSlots ||
        u.obstacle_count_min > u.obstacle_count_max) {
      throw ConfigError("scene obstacle count range must lie within [0, " + std::to_string(kUnstructuredSlots) + "]");
    }
    for (double b : {action.max_roll, action.max_pitch, action.max_yaw}) {
      if (!(b > 0.0) || b > std::numbers::pi) throw ConfigError("action bounds must lie in (0, 180] degrees");
    }
    if (scene.max_episode_steps < 1) throw ConfigError("scene.max_episode_steps must be >= 1");
    if (!(scene.goal_radius > 0.0)) throw ConfigError("scene.goal_radius must be > 0");
  }
};

namespace config_detail {

inline std::string trim(std::string_view s) {
  const auto b = s.find_first_not_of(" \t\r");
  if (b == std::string_view::npos) return {};
  const auto e = s.find_last_not_of(" \t\r");
  return std::string(s.substr(b, e - b + 1));
}

inline double parse_double(std::string_view v) {
  double out = 0.0;
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected a number, got '" + std::string(v) + "'");
  return out;
}

template <class I>
I parse_int(std::string_view v) {
  I out{};
  const auto [p, ec] = std::from_chars(v.data(), v.data() + v.size(), out);
  if (ec != std::errc() || p != v.data() + v.size()) throw ConfigError("expected an integer, got '" + std::string(v) + "'");
  return out;
}

inline bool parse_bool(std::string_view v) {
  if (v == "true" || v == "1") return true;
  if (v == "false" || v == "0") return false;
  throw ConfigError("expected true/false, got '" + std::string(v) + "'");
}

inline std::string format_double(double v) {
  char buf[64];
  const auto [p, ec] = std::to_chars(buf, buf + sizeof(buf), v);
  return std::string(buf, p);
}

inline std::vector<int> parse_int_list(std::string_view v) {
  std::vector<int> out;
  std::size_t start = 0;
  while (start <= v.size()) {
    const auto comma = v.find(',', start);
    const auto item = trim(v.substr(start, comma == std::string_view::npos ? std::string_view::npos : comma - start));
    out.push_back(parse_int<int>(item));
    if (comma == std::string_view::npos) break;
    start = comma + 1;
  }
  return out;
}

inline std::string format_int_list(const std::vector<int>& v) {
  std::string s;
  for (std::size_t i = 0; i < v.size(); ++i) {
    if (i) s += ",";
    s += std::to_string(v[i]);
  }
  return s;
}

struct Field {
  std::string key;
  std::function<void(RunConfig&, std::string_view)> set;
  std::function<std::string(const RunConfig&)> get;
};

#define CURIO_DOUBLE(k, m) \
  Field{k, [](RunConfig& c, std::string_view v) { c.m = parse_double(v); }, [](const RunConfig& c) { return format_double(c.m); }}
#define CURIO_INT(k, m, T) \
  Field{k, [](RunConfig& c, std::string_view v) { c.m = parse_int<T>(v); }, [](const RunConfig& c) { return std::to_string(c.m); }}
#define CURIO_DEGREES(k, m) \
  Field{k, [](RunConfig& c, std::string_view v) { c.m = deg2rad(parse_double(v)); }, [](const RunConfig& c) { return format_double(rad2deg(c.m)); }}
#define CURIO_BOOL(k, m) \
  Field{k, [](RunConfig& c, std::string_view v) { c.m = parse_bool(v); }, [](const RunConfig& c) { return std::string(c.m ? "true" : "false"); }}

inline const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      CURIO_INT("run.episodes", episodes, int),
      CURIO_DOUBLE("run.wall_minutes", wall_minutes),
      CURIO_INT("run.seed", seed, std::uint64_t),
      CURIO_INT("run.checkpoint_every", checkpoint_every, int),
      CURIO_INT("run.curve_window", curve_window, int),

      Field{"scene.type", [](RunConfig& c, std::string_view v) { c.scene.type = scene_type_from_string(v); },
            [](const RunConfig& c) { return std::string(to_string(c.scene.type)); }},
      CURIO_BOOL("scene.randomize", scene.randomize),
      CURIO_DOUBLE("scene.window_angle", scene.window_angle),
      CURIO_DOUBLE("scene.window_distance", scene.window_distance),
      CURIO_DOUBLE("scene.column_offset_1", scene.column_offset_1),
      CURIO_DOUBLE("scene.column_offset_2", scene.column_offset_2),
      CURIO_INT("scene.scene_seed", scene.scene_seed, std::uint64_t),
      CURIO_INT("scene.obstacle_count", scene.obstacle_count, int),
      CURIO_DOUBLE("scene.goal_radius", scene.goal_radius),
      CURIO_INT("scene.max_episode_steps", scene.max_episode_steps, int),
      CURIO_DOUBLE("scene.angle_min", scene.window.angle_min),
      CURIO_DOUBLE("scene.angle_max", scene.window.angle_max),
      CURIO_DOUBLE("scene.distance_min", scene.window.distance_min),
      CURIO_DOUBLE("scene.distance_max", scene.window.distance_max),
      CURIO_DOUBLE("scene.gap_width", scene.window.gap_width),
      CURIO_DOUBLE("scene.gap_height", scene.window.gap_height),
      CURIO_DOUBLE("scene.panel_thickness", scene.window.panel_thickness),
      CURIO_DOUBLE("scene.window_x", scene.window.window_x),
      CURIO_DOUBLE("scene.goal_beyond", scene.window.goal_beyond),
      CURIO_DOUBLE("scene.column_separation", scene.slalom.separation),
      CURIO_DOUBLE("scene.column_radius", scene.slalom.column_radius),
      CURIO_DOUBLE("scene.track_center_x", scene.slalom.track_center_x),
      CURIO_DOUBLE("scene.lateral_offset_max", scene.slalom.lateral_offset_max),
      CURIO_DOUBLE("scene.slalom_goal_x", scene.slalom.goal_x),
      CURIO_INT("scene.obstacle_count_min", scene.unstructured.obstacle_count_min, int),
      CURIO_INT("scene.obstacle_count_max", scene.unstructured.obstacle_count_max, int),
      CURIO_DOUBLE("scene.obstacle_x_min", scene.unstructured.x_min),
      CURIO_DOUBLE("scene.obstacle_x_max", scene.unstructured.x_max),
      CURIO_DOUBLE("scene.obstacle_y_max", scene.unstructured.y_max),
      CURIO_DOUBLE("scene.obstacle_size_min", scene.unstructured.size_min),
      CURIO_DOUBLE("scene.obstacle_size_max", scene.unstructured.size_max),
      CURIO_DOUBLE("scene.unstructured_goal_x", scene.unstructured.goal_x),
      CURIO_INT("scene.max_retries", scene.unstructured.max_retries, int),
      CURIO_DOUBLE("scene.corridor_margin", scene.unstructured.corridor_margin),

      CURIO_DOUBLE("quad.mass", quad.mass),
      CURIO_DOUBLE("quad.inertia_xx", quad.inertia_diag.x()),
      CURIO_DOUBLE("quad.inertia_yy", quad.inertia_diag.y()),
      CURIO_DOUBLE("quad.inertia_zz", quad.inertia_diag.z()),
      CURIO_DOUBLE("quad.thrust_max", quad.thrust_max),
      CURIO_DOUBLE("quad.attitude_time_constant", quad.attitude_time_constant),
      CURIO_DOUBLE("quad.control_dt", quad.control_dt),

      CURIO_DEGREES("action.max_roll_deg", action.max_roll),
      CURIO_DEGREES("action.max_pitch_deg", action.max_pitch),
      CURIO_DEGREES("action.max_yaw_deg", action.max_yaw),

      CURIO_DOUBLE("ellipsoid.radius_l", ellipsoid.radius_l),
      CURIO_DOUBLE("ellipsoid.height_h", ellipsoid.height_h),
      CURIO_INT("ellipsoid.sample_count", ellipsoid.sample_count, int),

      CURIO_DOUBLE("reward.lambda_x", reward.lambda_x),
      CURIO_DOUBLE("reward.lambda_r", reward.lambda_r),
      CURIO_DOUBLE("reward.lambda_v", reward.lambda_v),
      CURIO_DOUBLE("reward.lambda_omega", reward.lambda_omega),
      CURIO_DOUBLE("reward.lambda_obstacle", reward.lambda_obstacle),
      CURIO_DOUBLE("reward.success_bonus", reward.success_bonus),

      CURIO_DOUBLE("curiosity.lambda_c", curiosity.lambda_c),
      CURIO_INT("curiosity.memory_capacity", curiosity.memory_capacity, std::size_t),
      CURIO_INT("curiosity.max_samples", curiosity.max_samples, std::size_t),
      CURIO_DOUBLE("curiosity.empty_distance", curiosity.empty_distance),

      Field{"exploration.strategy",
            [](RunConfig& c, std::string_view v) { c.exploration.strategy = strategy_from_string(v); },
            [](const RunConfig& c) { return std::string(to_string(c.exploration.strategy)); }},
      CURIO_INT("exploration.init_steps", exploration.init_steps, int),
      CURIO_INT("exploration.branch_count", exploration.branch_count, int),
      CURIO_INT("exploration.branch_length", exploration.branch_length, int),
      CURIO_DOUBLE("exploration.branch_noise_std", exploration.branch_noise_std),
      CURIO_DOUBLE("exploration.noise_std", exploration.exploration_noise_std),
      CURIO_BOOL("exploration.branch_at_last", exploration.branch_at_last),

      CURIO_DOUBLE("learner.gamma", learner.gamma),
      CURIO_DOUBLE("learner.rho", learner.rho),
      CURIO_INT("learner.policy_delay", learner.policy_delay, int),
      CURIO_INT("learner.batch_size", learner.batch_size, int),
      CURIO_INT("learner.buffer_capacity", learner.buffer_capacity, std::size_t),
      CURIO_INT("learner.warmup", learner.warmup, std::size_t),
      CURIO_DOUBLE("learner.actor_lr", learner.actor_lr),
      CURIO_DOUBLE("learner.critic_lr", learner.critic_lr),
      Field{"learner.hidden", [](RunConfig& c, std::string_view v) { c.learner.hidden = parse_int_list(v); },
            [](const RunConfig& c) { return format_int_list(c.learner.hidden); }},
      CURIO_BOOL("learner.target_smoothing", learner.target_smoothing),
      CURIO_DOUBLE("learner.smoothing_std", learner.smoothing_std),
      CURIO_DOUBLE("learner.smoothing_clip", learner.smoothing_clip),
      CURIO_DOUBLE("learner.actor_final_scale", learner.actor_final_scale),
      CURIO_DOUBLE("learner.updates_per_step", learner.updates_per_step),
      CURIO_DOUBLE("learner.reward_scale", learner.reward_scale),
      CURIO_BOOL("learner.init_critic_bias", learner.init_critic_bias),
      Field{"learner.target_value_mode",
            [](RunConfig& c, std::string_view v) { c.learner.target_value_mode = target_mode_from_string(v); },
            [](const RunConfig& c) { return std::string(to_string(c.learner.target_value_mode)); }},
  };
  return f;
}

#undef CURIO_DOUBLE
#undef CURIO_INT
#undef CURIO_BOOL
#undef CURIO_DEGREES

inline const Field* find_field(std::string_view key) {
  for (const auto& f : fields()) {
    if (f.key == key) return &f;
  }
  return nullptr;
}

}  // namespace config_detail

// Applies `key = value` lines onto `base`. When `key_prefix` is non-empty only
// keys starting with it are accepted (scene files use "scene.").
inline RunConfig apply_config_text(RunConfig base, std::string_view text, std::string_view key_prefix = {}) {
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = config_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    const auto eq = t.find('=');
    if (eq == std::string::npos) throw ConfigError("line " + std::to_string(lineno) + ": expected 'key = value'");
    const std::string key = config_detail::trim(std::string_view(t).substr(0, eq));
    const std::string value = config_detail::trim(std::string_view(t).substr(eq + 1));
    if (!key_prefix.empty() && key.rfind(key_prefix, 0) != 0) {
      throw ConfigError("line " + std::to_string(lineno) + ": key '" + key + "' not allowed here");
    }
    const auto* f = config_detail::find_field(key);
    if (!f) throw ConfigError("line " + std::to_string(lineno) + ": unknown key '" + key + "'");
    try {
      f->set(base, value);
    } catch (const ConfigError& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    } catch (const std::invalid_argument& e) {
      throw ConfigError("line " + std::to_string(lineno) + " (" + key + "): " + e.what());
    }
  }
  return base;
}

inline RunConfig parse_config(std::string_view text) {
  RunConfig c = apply_config_text(RunConfig{}, text);
  try {
    c.validate();
  } catch (const std::invalid_argument& e) {
    throw ConfigError(e.what());
  }
  return c;
}

inline std::string serialize_config(const RunConfig& c, std::string_view key_prefix = {}) {
  std::string out;
  for (const auto& f : config_detail::fields()) {
    if (!key_prefix.empty() && f.key.rfind(key_prefix, 0) != 0) continue;
    out += f.key + " = " + f.get(c) + "\n";
  }
  return out;
}

inline std::string read_text_file(const std::filesystem::path& p) {
  std::ifstream in(p);
  if (!in) throw ConfigError("cannot open " + p.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline RunConfig load_config(const std::filesystem::path& p) { return parse_config(read_text_file(p)); }

inline FlightEnvConfig env_config(const RunConfig& c) {
  RewardWeights w = c.reward;
  w.lambda_c = c.curiosity.lambda_c;
  return FlightEnvConfig{c.scene, c.quad, c.ellipsoid, w, c.action};
}

}  // namespace curio
