#pragma once

// Train / evaluate / replay front ends and the DTW audit command.
//
// Files written by train (into the output directory):
//   config.cfg          resolved run configuration
//   checkpoint.bin      learner checkpoint (see checkpoint.hpp)
//   train_log.jsonl     one JSON object per episode: episode, return, length,
//                       cause, curiosity, critic_loss, actor_loss,
//                       critic_updates, final_distance, wall_time
//   learning_curve.csv  wall_minutes,episode,smoothed_reward
// Files written by eval:
//   eval_report.csv     noise_deg,position_error,average_reward,success_rate,episodes
//   eval_report.json    {"rows": [...same fields...]}
//   eval_episodes.csv   noise_deg,trial,cause,success,position_error,reward,length
// File written by replay:
//   trajectory.csv      t,px,py,pz,r00..r22,vx,vy,vz,a0..a3,reward,event

#include "curio/config.hpp"
#include "curio/dtw_oracle.hpp"

#include "json.hpp"

#include <chrono>
#include <deque>
#include <filesystem>
#include <fstream>
#include <iomanip>
#include <numeric>
#include <thread>

namespace curio {

namespace fs = std::filesystem;

inline std::string checkpoint_metadata(const RunConfig& cfg) {
  nlohmann::json j;
  j["obs_dim"] = observation_dim(cfg.scene.type);
  j["scene_type"] = std::string(to_string(cfg.scene.type));
  j["config"] = serialize_config(cfg);
  return j.dump();
}

// Config stored alongside a checkpoint.
inline RunConfig checkpoint_config(const Checkpoint& ck) {
  const auto j = nlohmann::json::parse(ck.metadata);
  return parse_config(j.at("config").get<std::string>());
}

// --- train ---------------------------------------------------------------------

struct TrainResult {
  std::vector<EpisodeStats> episodes;
  std::vector<double> smoothed;  // moving average of extrinsic return
};

// Moving average over the trailing `window` entries.
inline std::vector<double> smooth(const std::vector<double>& xs, int window) {
  std::vector<double> out;
  out.reserve(xs.size());
  double acc = 0.0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    acc += xs[i];
    if (i >= static_cast<std::size_t>(window)) acc -= xs[i - static_cast<std::size_t>(window)];
    const std::size_t n = std::min(i + 1, static_cast<std::size_t>(window));
    out.push_back(acc / static_cast<double>(n));
  }
  return out;
}

using EpisodeCallback = std::function<void(int, const EpisodeStats&)>;

inline TrainResult cmd_train(const RunConfig& cfg, const fs::path& out_dir, const EpisodeCallback& on_episode = {}) {
  cfg.validate();
  fs::create_directories(out_dir);
  {
    std::ofstream c(out_dir / "config.cfg");
    c << serialize_config(cfg);
  }
  const auto start = std::chrono::steady_clock::now();
  auto minutes = [&] {
    return std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count() / 60.0;
  };

  std::mt19937_64 master(cfg.seed);
  const std::uint64_t env_seed = master();
  const std::uint64_t learner_seed = master();
  FlightEnv env(env_config(cfg), env_seed);
  LearnerBundle learner = make_learner(env.observation_dim(), cfg.learner, learner_seed);
  EpisodeMemory memory(cfg.curiosity.memory_capacity);
  const std::string meta = checkpoint_metadata(cfg);
  const fs::path ck_path = out_dir / "checkpoint.bin";
  save_checkpoint(to_checkpoint(learner, meta), ck_path);

  std::ofstream log(out_dir / "train_log.jsonl");
  std::ofstream curve(out_dir / "learning_curve.csv");
  curve << "wall_minutes,episode,smoothed_reward\n";

  TrainResult result;
  std::vector<double> returns;
  double window_sum = 0.0;
  for (int e = 0; e < cfg.episodes; ++e) {
    if (cfg.wall_minutes > 0.0 && minutes() >= cfg.wall_minutes) break;
    const EpisodeStats st = train_episode(learner, env, cfg.exploration, memory, cfg.curiosity);
    returns.push_back(st.extrinsic_return);
    window_sum += st.extrinsic_return;
    if (returns.size() > static_cast<std::size_t>(cfg.curve_window)) {
      window_sum -= returns[returns.size() - 1 - static_cast<std::size_t>(cfg.curve_window)];
    }
    const double smoothed =
        window_sum / static_cast<double>(std::min(returns.size(), static_cast<std::size_t>(cfg.curve_window)));
    const double wall = minutes();

    nlohmann::json j;
    j["episode"] = e;
    j["return"] = st.extrinsic_return;
    j["length"] = st.length;
    j["cause"] = std::string(to_string(st.cause));
    j["curiosity"] = st.curiosity;
    j["critic_loss"] = st.critic_loss;
    j["actor_loss"] = st.actor_loss;
    j["critic_updates"] = st.critic_updates;
    j["final_distance"] = st.final_distance;
    j["wall_time"] = wall * 60.0;
    log << j.dump() << "\n";
    curve << std::setprecision(6) << wall << "," << e << "," << std::setprecision(17) << smoothed << "\n";

    result.episodes.push_back(st);
    result.smoothed.push_back(smoothed);
    if (on_episode) on_episode(e, st);
    if ((e + 1) % cfg.checkpoint_every == 0) {
      log.flush();
      curve.flush();
      save_checkpoint(to_checkpoint(learner, meta), ck_path);
    }
  }
  save_checkpoint(to_checkpoint(learner, meta), ck_path);
  return result;
}

// --- eval --------------------------------------------------------------------------

struct EvalEpisode {
  double noise_deg = 0.0;
  int trial = 0;
  TerminationCause cause = TerminationCause::step_limit;
  bool success = false;
  double position_error = 0.0;
  double reward = 0.0;
  int length = 0;
};

struct EvalRow {
  double noise_deg = 0.0;
  double position_error = 0.0;  // mean over successful episodes, NaN if none
  double average_reward = 0.0;
  double success_rate = 0.0;
  int episodes = 0;
};

struct EvalReport {
  std::vector<EvalRow> rows;
  std::vector<EvalEpisode> episodes;
};

struct LoadedPolicy {
  RunConfig config;
  MlpSpec spec;
  ParameterSet<float> params;

  Policy policy() const {
    auto s = std::make_shared<const MlpSpec>(spec);
    auto p = std::make_shared<const ParameterSet<float>>(params);
    return [s, p](std::span<const float> obs, std::span<float> out) {
      const Vector<float> y = forward<float>(*s, *p, obs);
      for (int i = 0; i < kActionDim; ++i) out[static_cast<std::size_t>(i)] = y[i];
    };
  }
};

inline LoadedPolicy load_policy(const fs::path& checkpoint) {
  const Checkpoint ck = load_checkpoint(checkpoint);
  const auto& actor = ck.network("actor");
  return LoadedPolicy{checkpoint_config(ck), actor.spec, actor.params};
}

// Scene block from a scene file, applied on top of the checkpoint's scene.
inline SceneConfig scene_from_file(const RunConfig& base, const fs::path& scene_file) {
  return apply_config_text(base, read_text_file(scene_file), "scene.").scene;
}

inline void check_compatible(const LoadedPolicy& lp, const SceneConfig& scene) {
  const int dim = observation_dim(scene.type);
  if (dim != lp.spec.input_dim) {
    throw std::invalid_argument("checkpoint expects observation dimension " + std::to_string(lp.spec.input_dim) +
                                " but scene type " + std::string(to_string(scene.type)) + " produces " +
                                std::to_string(dim));
  }
}

inline std::uint64_t mix_seed(std::uint64_t a, std::uint64_t b) {
  std::seed_seq seq{static_cast<std::uint32_t>(a), static_cast<std::uint32_t>(a >> 32),
                    static_cast<std::uint32_t>(b), static_cast<std::uint32_t>(b >> 32)};
  std::uint64_t out[1];
  std::uint32_t parts[2];
  seq.generate(parts, parts + 2);
  out[0] = (static_cast<std::uint64_t>(parts[0]) << 32) | parts[1];
  return out[0];
}

// Runs one deterministic-policy episode with attitude noise injected on the
// executed commands.
inline EvalEpisode evaluate_episode(const Policy& policy, const FlightEnvConfig& ecfg, double noise_deg,
                                    std::uint64_t scene_seed, std::uint64_t noise_seed,
                                    std::vector<std::vector<double>>* trace = nullptr) {
  FlightEnv env(ecfg, scene_seed);
  std::mt19937_64 rng(noise_seed);
  std::vector<float> obs = env.reset();
  EvalEpisode out;
  out.noise_deg = noise_deg;
  auto record = [&](const std::array<float, kActionDim>& a, double reward, int event) {
    if (!trace) return;
    const QuadState& s = env.state();
    std::vector<double> row{env.step_index() * ecfg.quad.control_dt};
    for (int i = 0; i < 3; ++i) row.push_back(s.position[i]);
    for (int r = 0; r < 3; ++r) {
      for (int c = 0; c < 3; ++c) row.push_back(s.attitude(r, c));
    }
    for (int i = 0; i < 3; ++i) row.push_back(s.linear_velocity[i]);
    for (float v : a) row.push_back(v);
    row.push_back(reward);
    row.push_back(event);
    trace->push_back(std::move(row));
  };
  record({0, 0, 0, 0}, 0.0, -1);
  while (true) {
    std::array<float, kActionDim> a{};
    policy(obs, a);
    for (float& v : a) v = std::clamp(v, -1.0f, 1.0f);
    const ActionAngles noisy = attitude_noise(decode_action(a, ecfg.quad, ecfg.bounds), noise_deg, rng, ecfg.bounds);
    const auto executed = encode_action(noisy, ecfg.quad, ecfg.bounds);
    StepResult r = env.step(executed);
    out.reward += r.reward;
    record(executed, r.reward, r.event ? static_cast<int>(r.event->cause) : -1);
    obs = std::move(r.observation);
    if (r.event) {
      out.cause = r.event->cause;
      break;
    }
  }
  out.length = env.step_index();
  out.success = out.cause == TerminationCause::goal_reached;
  out.position_error = (env.state().position - env.scene().goal_position).norm();
  return out;
}

inline std::vector<EvalRow> aggregate(const std::vector<EvalEpisode>& eps, const std::vector<double>& noise_levels) {
  std::vector<EvalRow> rows;
  for (double noise : noise_levels) {
    EvalRow row;
    row.noise_deg = noise;
    double err = 0.0;
    int successes = 0;
    for (const auto& e : eps) {
      if (e.noise_deg != noise) continue;
      ++row.episodes;
      row.average_reward += e.reward;
      if (e.success) {
        ++successes;
        err += e.position_error;
      }
    }
    if (row.episodes > 0) {
      row.average_reward /= row.episodes;
      row.success_rate = static_cast<double>(successes) / row.episodes;
    }
    row.position_error = successes > 0 ? err / successes : std::numeric_limits<double>::quiet_NaN();
    rows.push_back(row);
  }
  return rows;
}

inline void write_eval_files(const EvalReport& rep, const fs::path& out_dir) {
  fs::create_directories(out_dir);
  std::ofstream csv(out_dir / "eval_report.csv");
  csv << "noise_deg,position_error,average_reward,success_rate,episodes\n" << std::setprecision(17);
  nlohmann::json j;
  j["rows"] = nlohmann::json::array();
  for (const auto& r : rep.rows) {
    csv << r.noise_deg << "," << r.position_error << "," << r.average_reward << "," << r.success_rate << ","
        << r.episodes << "\n";
    nlohmann::json jr;
    jr["noise_deg"] = r.noise_deg;
    jr["position_error"] = std::isnan(r.position_error) ? nlohmann::json(nullptr) : nlohmann::json(r.position_error);
    jr["average_reward"] = r.average_reward;
    jr["success_rate"] = r.success_rate;
    jr["episodes"] = r.episodes;
    j["rows"].push_back(jr);
  }
  std::ofstream(out_dir / "eval_report.json") << j.dump(2) << "\n";
  std::ofstream ep(out_dir / "eval_episodes.csv");
  ep << "noise_deg,trial,cause,success,position_error,reward,length\n" << std::setprecision(17);
  for (const auto& e : rep.episodes) {
    ep << e.noise_deg << "," << e.trial << "," << to_string(e.cause) << "," << (e.success ? 1 : 0) << ","
       << e.position_error << "," << e.reward << "," << e.length << "\n";
  }
}

// Trials fan out over `workers` threads; every trial has its own scene and
// noise streams derived from `seed`, so results do not depend on the split.
inline EvalReport evaluate_policy(const Policy& policy, const FlightEnvConfig& ecfg,
                                  const std::vector<double>& noise_levels, int trials, std::uint64_t seed,
                                  unsigned workers = 1) {
  if (trials < 0) throw std::invalid_argument("eval: trials must be >= 0");
  for (double n : noise_levels) {
    if (!(n >= 0.0)) throw std::invalid_argument("eval: noise levels must be >= 0");
  }
  EvalReport rep;
  const std::size_t total = noise_levels.size() * static_cast<std::size_t>(trials);
  rep.episodes.resize(total);
  auto run = [&](std::size_t begin, std::size_t end) {
    for (std::size_t k = begin; k < end; ++k) {
      const std::size_t level = k / static_cast<std::size_t>(trials);
      const int trial = static_cast<int>(k % static_cast<std::size_t>(trials));
      const std::uint64_t scene_seed = mix_seed(seed, static_cast<std::uint64_t>(trial));
      const std::uint64_t noise_seed = mix_seed(scene_seed, level + 1);
      EvalEpisode e = evaluate_episode(policy, ecfg, noise_levels[level], scene_seed, noise_seed);
      e.trial = trial;
      rep.episodes[k] = e;
    }
  };
  workers = std::max(1u, workers);
  if (workers == 1 || total < 2) {
    run(0, total);
  } else {
    std::vector<std::thread> pool;
    const std::size_t chunk = (total + workers - 1) / workers;
    for (unsigned w = 0; w < workers; ++w) {
      const std::size_t b = std::min(total, w * chunk);
      const std::size_t e = std::min(total, b + chunk);
      if (b < e) pool.emplace_back(run, b, e);
    }
    for (auto& t : pool) t.join();
  }
  if (trials > 0) rep.rows = aggregate(rep.episodes, noise_levels);
  return rep;
}

inline EvalReport cmd_eval(const fs::path& checkpoint, const std::optional<fs::path>& scene_file,
                           const std::vector<double>& noise_levels, int trials, std::uint64_t seed,
                           const std::optional<fs::path>& out_dir, unsigned workers = 1) {
  const LoadedPolicy lp = load_policy(checkpoint);
  FlightEnvConfig ecfg = env_config(lp.config);
  if (scene_file) ecfg.scene = scene_from_file(lp.config, *scene_file);
  check_compatible(lp, ecfg.scene);
  EvalReport rep = evaluate_policy(lp.policy(), ecfg, noise_levels, trials, seed, workers);
  if (out_dir) write_eval_files(rep, *out_dir);
  return rep;
}

// --- replay -------------------------------------------------------------------------

inline std::string trajectory_csv_header() {
  return "t,px,py,pz,r00,r01,r02,r10,r11,r12,r20,r21,r22,vx,vy,vz,a0,a1,a2,a3,reward,event";
}

inline std::string cmd_replay(const fs::path& checkpoint, const std::optional<fs::path>& scene_file,
                              std::uint64_t seed, double noise_deg = 0.0) {
  const LoadedPolicy lp = load_policy(checkpoint);
  FlightEnvConfig ecfg = env_config(lp.config);
  if (scene_file) ecfg.scene = scene_from_file(lp.config, *scene_file);
  check_compatible(lp, ecfg.scene);
  std::vector<std::vector<double>> trace;
  evaluate_episode(lp.policy(), ecfg, noise_deg, seed, mix_seed(seed, 1), &trace);
  std::ostringstream out;
  out << trajectory_csv_header() << "\n" << std::setprecision(17);
  for (const auto& row : trace) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out << ",";
      if (i + 1 == row.size()) {
        const int ev = static_cast<int>(row[i]);
        out << (ev < 0 ? std::string("none") : std::string(to_string(static_cast<TerminationCause>(ev))));
      } else {
        out << row[i];
      }
    }
    out << "\n";
  }
  return out.str();
}

// --- dtw audit ----------------------------------------------------------------------

class ParseError : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

// One sample per line, comma-separated. Rows of up to 3 values form a
// position-channel series (zero padded); rows of 9 values an attitude series.
inline StateChannelSeries parse_series_csv(std::string_view text, const std::string& name = "series") {
  StateChannelSeries s;
  std::istringstream in{std::string(text)};
  std::string line;
  int lineno = 0;
  int width = -1;
  while (std::getline(in, line)) {
    ++lineno;
    const std::string t = config_detail::trim(line);
    if (t.empty() || t[0] == '#') continue;
    std::vector<double> vals;
    std::size_t start = 0;
    while (true) {
      const auto comma = t.find(',', start);
      const std::string item = config_detail::trim(std::string_view(t).substr(start, comma == std::string::npos ? std::string::npos : comma - start));
      try {
        vals.push_back(config_detail::parse_double(item));
      } catch (const ConfigError&) {
        throw ParseError(name + ": line " + std::to_string(lineno) + ": invalid number '" + item + "'");
      }
      if (comma == std::string::npos) break;
      start = comma + 1;
    }
    const int w = static_cast<int>(vals.size());
    if (width < 0) {
      if (w > 3 && w != 9) {
        throw ParseError(name + ": line " + std::to_string(lineno) + ": rows must have 1-3 or 9 values");
      }
      width = w;
      s.channel = w == 9 ? Channel::attitude : Channel::position;
    } else if (w != width) {
      throw ParseError(name + ": line " + std::to_string(lineno) + ": expected " + std::to_string(width) +
                       " values, got " + std::to_string(w));
    }
    vals.resize(static_cast<std::size_t>(s.dim()), 0.0);
    s.push(vals);
  }
  if (s.size() == 0) throw ParseError(name + ": no samples");
  return s;
}

struct DtwAudit {
  double dp = 0.0;
  std::optional<double> brute_force;
};

inline DtwAudit cmd_dtw_oracle(const fs::path& a, const fs::path& b) {
  const auto sa = parse_series_csv(read_text_file(a), a.string());
  const auto sb = parse_series_csv(read_text_file(b), b.string());
  if (sa.channel != sb.channel) throw ParseError("series files have different sample widths");
  return {dtw_distance(sa, sb), oracle::brute_force_dtw(sa, sb)};
}

inline std::string format_dtw_audit(const DtwAudit& r) {
  std::ostringstream out;
  out << std::setprecision(17);
  out << "dp_distance = " << r.dp << "\n";
  if (r.brute_force) {
    out << "brute_force_distance = " << *r.brute_force << "\n";
    out << "abs_difference = " << std::abs(r.dp - *r.brute_force) << "\n";
  } else {
    out << "brute_force_distance = skipped (series longer than " << oracle::kMaxBruteForceLength << ")\n";
  }
  return out.str();
}

}  // namespace curio
