#pragma once

// Rollout generation: single-path exploration (one noisy trajectory) and
// branch-structure exploration (noisy branches grown from states reached by
// an initial trajectory).

#include "curio/env.hpp"

#include <functional>
#include <random>
#include <string_view>

namespace curio {

enum class ExplorationStrategy { bse, spe };

inline std::string_view to_string(ExplorationStrategy s) { return s == ExplorationStrategy::bse ? "bse" : "spe"; }

inline ExplorationStrategy strategy_from_string(std::string_view s) {
  if (s == "bse") return ExplorationStrategy::bse;
  if (s == "spe") return ExplorationStrategy::spe;
  throw std::invalid_argument("unknown exploration strategy '" + std::string(s) + "'");
}

struct ExplorationConfig {
  ExplorationStrategy strategy = ExplorationStrategy::bse;
  int init_steps = 30;
  int branch_count = 1;
  int branch_length = 15;
  double branch_noise_std = 0.3;
  double exploration_noise_std = 0.1;
  // Branch from the last recorded init state instead of a uniform draw.
  bool branch_at_last = false;

  void validate() const {
    if (init_steps < 0) throw std::invalid_argument("exploration.init_steps must be >= 0");
    if (strategy == ExplorationStrategy::bse && branch_count < 1) {
      throw std::invalid_argument("exploration.branch_count must be >= 1");
    }
    if (branch_length < 0) throw std::invalid_argument("exploration.branch_length must be >= 0");
    if (!(branch_noise_std >= 0.0) || !(exploration_noise_std >= 0.0)) {
      throw std::invalid_argument("exploration noise std must be >= 0");
    }
  }
};

// Deterministic policy: writes an action in [-1, 1]^4 for an observation.
using Policy = std::function<void(std::span<const float>, std::span<float>)>;

struct EpisodeTransition {
  std::vector<float> observation;
  std::array<float, kActionDim> action{};
  double reward = 0.0;
  std::vector<float> next_observation;
  bool terminal = false;
};

// One contiguous trajectory from the initial state to a termination.
struct EpisodePath {
  std::vector<QuadState> states;  // includes the initial state
  std::size_t terminal_transition = 0;  // index into Episode::transitions
  TerminationCause cause = TerminationCause::step_limit;
  double extrinsic_return = 0.0;
  int branch_point = -1;  // init-segment index the branch grew from, -1 for SPE or the init segment

  int length() const { return static_cast<int>(states.size()) - 1; }
};

struct Episode {
  Scene scene;
  std::vector<EpisodeTransition> transitions;  // every executed step, all segments
  std::vector<EpisodePath> paths;              // one per branch, then the init segment if it terminated

  const EpisodePath& main_path() const { return paths.front(); }
};

namespace detail {

template <class Rng>
std::array<float, kActionDim> noisy_action(const Policy& policy, std::span<const float> obs, double std,
                                           Rng& rng) {
  std::array<float, kActionDim> a{};
  policy(obs, a);
  if (std > 0.0) {
    std::normal_distribution<double> n(0.0, std);
    for (float& v : a) v = static_cast<float>(static_cast<double>(v) + n(rng));
  }
  for (float& v : a) v = std::clamp(v, -1.0f, 1.0f);
  return a;
}

// Runs until termination (or `max_steps` when positive). Returns the event if
// the segment terminated.
template <class Rng>
std::optional<TerminationEvent> run_segment(const Policy& policy, Environment& env, std::vector<float>& obs,
                                            double noise_std, int max_steps, Rng& rng, Episode& episode,
                                            EpisodePath& path, std::vector<EnvSnapshot>* snapshots) {
  for (int k = 0; max_steps < 0 || k < max_steps; ++k) {
    const auto a = noisy_action(policy, obs, noise_std, rng);
    StepResult r = env.step(a);
    EpisodeTransition t;
    t.observation = obs;
    t.action = a;
    t.reward = r.reward;
    t.next_observation = r.observation;
    t.terminal = r.event.has_value();
    episode.transitions.push_back(std::move(t));
    path.states.push_back(env.state());
    path.extrinsic_return += r.reward;
    obs = std::move(r.observation);
    if (snapshots && !r.event) snapshots->push_back(env.snapshot());
    if (r.event) {
      path.terminal_transition = episode.transitions.size() - 1;
      path.cause = r.event->cause;
      return r.event;
    }
  }
  return std::nullopt;
}

}  // namespace detail

template <class Rng>
Episode rollout_spe(const Policy& policy, Environment& env, const ExplorationConfig& cfg, Rng& rng) {
  cfg.validate();
  Episode ep;
  std::vector<float> obs = env.reset();
  ep.scene = env.scene();
  EpisodePath path;
  path.states.push_back(env.state());
  detail::run_segment(policy, env, obs, cfg.exploration_noise_std, -1, rng, ep, path, nullptr);
  ep.paths.push_back(std::move(path));
  return ep;
}

template <class Rng>
Episode rollout_bse(const Policy& policy, Environment& env, const ExplorationConfig& cfg, Rng& rng) {
  cfg.validate();
  if (!env.supports_snapshot()) {
    throw std::invalid_argument("branch exploration requires an environment with state save/restore");
  }
  Episode ep;
  std::vector<float> obs = env.reset();
  ep.scene = env.scene();

  // Initial segment; remember every non-terminal state it reaches.
  EpisodePath init;
  init.states.push_back(env.state());
  std::vector<EnvSnapshot> reachable{env.snapshot()};
  const auto init_event =
      detail::run_segment(policy, env, obs, cfg.exploration_noise_std, cfg.init_steps, rng, ep, init, &reachable);

  for (int b = 0; b < cfg.branch_count; ++b) {
    std::size_t point = reachable.size() - 1;
    if (!cfg.branch_at_last) {
      std::uniform_int_distribution<std::size_t> pick(0, reachable.size() - 1);
      point = pick(rng);
    }
    EpisodePath path;
    path.branch_point = static_cast<int>(point);
    path.states.assign(init.states.begin(), init.states.begin() + static_cast<std::ptrdiff_t>(point) + 1);
    // Return prefix of the init segment up to the branch point.
    for (std::size_t k = 0; k < point; ++k) {
      path.extrinsic_return += ep.transitions[k].reward;
    }
    std::vector<float> bobs = env.restore(reachable[point]);
    auto ev = detail::run_segment(policy, env, bobs, cfg.branch_noise_std, cfg.branch_length, rng, ep, path, nullptr);
    if (!ev) ev = detail::run_segment(policy, env, bobs, cfg.exploration_noise_std, -1, rng, ep, path, nullptr);
    ep.paths.push_back(std::move(path));
  }
  // An init segment that terminated on its own is a complete trajectory too.
  if (init_event) ep.paths.push_back(std::move(init));
  return ep;
}

template <class Rng>
Episode rollout(const Policy& policy, Environment& env, const ExplorationConfig& cfg, Rng& rng) {
  return cfg.strategy == ExplorationStrategy::bse ? rollout_bse(policy, env, cfg, rng)
                                                  : rollout_spe(policy, env, cfg, rng);
}

}  // namespace curio
