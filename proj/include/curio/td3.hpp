#pragma once

// Twin-critic deterministic policy gradient learner with delayed actor and
// target updates, plus the curiosity-augmented training episode.

#include "curio/approximator.hpp"
#include "curio/checkpoint.hpp"
#include "curio/curiosity.hpp"
#include "curio/exploration.hpp"

#include <numeric>
#include <random>
#include <string_view>

namespace curio {

enum class TargetValueMode { one_step, mc_return };

inline std::string_view to_string(TargetValueMode m) { return m == TargetValueMode::one_step ? "one_step" : "mc_return"; }

inline TargetValueMode target_mode_from_string(std::string_view s) {
  if (s == "one_step") return TargetValueMode::one_step;
  if (s == "mc_return") return TargetValueMode::mc_return;
  throw std::invalid_argument("unknown target_value_mode '" + std::string(s) + "'");
}

struct LearnerConfig {
  double gamma = 0.99;
  double rho = 0.005;
  int policy_delay = 2;
  int batch_size = 128;
  std::size_t buffer_capacity = 200000;
  std::size_t warmup = 1000;
  double actor_lr = 3e-4;
  double critic_lr = 3e-4;
  std::vector<int> hidden{64, 64};
  bool target_smoothing = true;
  double smoothing_std = 0.2;
  double smoothing_clip = 0.5;
  double actor_final_scale = 0.01;
  TargetValueMode target_value_mode = TargetValueMode::one_step;
  double updates_per_step = 1.0;  // critic updates per executed env step
  double reward_scale = 1.0;      // applied to stored rewards, curiosity included
  bool init_critic_bias = true;   // first update sets critic output biases to the mean stored reward

  void validate() const {
    if (!(gamma > 0.0 && gamma < 1.0)) throw std::invalid_argument("learner.gamma must be in (0,1)");
    if (!(rho > 0.0 && rho <= 1.0)) throw std::invalid_argument("learner.rho must be in (0,1]");
    if (policy_delay < 1) throw std::invalid_argument("learner.policy_delay must be >= 1");
    if (batch_size < 1) throw std::invalid_argument("learner.batch_size must be >= 1");
    if (buffer_capacity < 1) throw std::invalid_argument("learner.buffer_capacity must be >= 1");
    if (!(actor_lr > 0.0) || !(critic_lr > 0.0)) throw std::invalid_argument("learner learning rates must be > 0");
    if (!(updates_per_step > 0.0)) throw std::invalid_argument("learner.updates_per_step must be > 0");
    if (!(reward_scale > 0.0)) throw std::invalid_argument("learner.reward_scale must be > 0");
    if (hidden.empty()) throw std::invalid_argument("learner.hidden needs at least one layer");
    if (!(smoothing_std >= 0.0) || !(smoothing_clip >= 0.0)) {
      throw std::invalid_argument("learner smoothing parameters must be >= 0");
    }
  }
};

// --- replay -------------------------------------------------------------------

struct Transition {
  std::vector<float> state;
  std::array<float, kActionDim> action{};
  float reward = 0.0f;
  std::vector<float> next_state;
  bool terminal = false;
};

struct Batch {
  Matrix<float> state;       // obs_dim x N
  Matrix<float> action;      // 4 x N
  Vector<float> reward;      // N
  Matrix<float> next_state;  // obs_dim x N
  Vector<float> terminal;    // N, 1 for terminal

  int size() const { return static_cast<int>(reward.size()); }
};

// Fixed-capacity ring of transitions, sampled uniformly with replacement.
class ReplayBuffer {
 public:
  ReplayBuffer(std::size_t capacity, int obs_dim)
      : capacity_(capacity), obs_dim_(obs_dim),
        state_(capacity * static_cast<std::size_t>(obs_dim)), action_(capacity * kActionDim),
        reward_(capacity), next_(capacity * static_cast<std::size_t>(obs_dim)), terminal_(capacity) {
    if (capacity == 0) throw std::invalid_argument("replay buffer: capacity must be >= 1");
  }

  void push(const Transition& t) {
    if (static_cast<int>(t.state.size()) != obs_dim_ || static_cast<int>(t.next_state.size()) != obs_dim_) {
      throw std::domain_error("replay buffer: observation dimension mismatch");
    }
    const std::size_t i = head_;
    std::copy(t.state.begin(), t.state.end(), state_.begin() + static_cast<std::ptrdiff_t>(i * obs_dim_));
    std::copy(t.action.begin(), t.action.end(), action_.begin() + static_cast<std::ptrdiff_t>(i * kActionDim));
    reward_[i] = t.reward;
    std::copy(t.next_state.begin(), t.next_state.end(), next_.begin() + static_cast<std::ptrdiff_t>(i * obs_dim_));
    terminal_[i] = t.terminal ? 1.0f : 0.0f;
    head_ = (head_ + 1) % capacity_;
    size_ = std::min(size_ + 1, capacity_);
  }

  std::size_t size() const { return size_; }
  std::size_t capacity() const { return capacity_; }
  int obs_dim() const { return obs_dim_; }

  template <class Rng>
  std::vector<std::size_t> sample_indices(int n, Rng& rng) const {
    if (size_ == 0) throw std::logic_error("replay buffer: sampling from an empty buffer");
    std::uniform_int_distribution<std::size_t> u(0, size_ - 1);
    std::vector<std::size_t> idx(static_cast<std::size_t>(n));
    for (auto& i : idx) i = u(rng);
    return idx;
  }

  Batch gather(const std::vector<std::size_t>& idx) const {
    const int n = static_cast<int>(idx.size());
    Batch b{Matrix<float>(obs_dim_, n), Matrix<float>(kActionDim, n), Vector<float>(n),
            Matrix<float>(obs_dim_, n), Vector<float>(n)};
    for (int c = 0; c < n; ++c) {
      const std::size_t i = idx[static_cast<std::size_t>(c)];
      b.state.col(c) = Eigen::Map<const Vector<float>>(state_.data() + i * obs_dim_, obs_dim_);
      b.action.col(c) = Eigen::Map<const Vector<float>>(action_.data() + i * kActionDim, kActionDim);
      b.reward[c] = reward_[i];
      b.next_state.col(c) = Eigen::Map<const Vector<float>>(next_.data() + i * obs_dim_, obs_dim_);
      b.terminal[c] = terminal_[i];
    }
    return b;
  }

  template <class Rng>
  Batch sample(int n, Rng& rng) const {
    return gather(sample_indices(n, rng));
  }

 private:
  std::size_t capacity_;
  int obs_dim_;
  std::vector<float> state_, action_, reward_, next_, terminal_;
  std::size_t head_ = 0;
  std::size_t size_ = 0;
};

// --- learner state -----------------------------------------------------------

struct LearnerBundle {
  LearnerConfig cfg;
  MlpSpec actor_spec;
  MlpSpec critic_spec;
  ParameterSet<float> actor, critic1, critic2;
  ParameterSet<float> actor_target, critic1_target, critic2_target;
  AdamState<float> actor_opt, critic1_opt, critic2_opt;
  std::uint64_t step = 0;           // critic updates performed
  std::uint64_t actor_updates = 0;
  ReplayBuffer buffer;
  std::mt19937_64 rng;

  int obs_dim() const { return actor_spec.input_dim; }
};

inline MlpSpec actor_spec_for(int obs_dim, const std::vector<int>& hidden) {
  return MlpSpec{obs_dim, kActionDim, hidden, OutputActivation::bounded, std::vector<double>(kActionDim, 1.0)};
}

inline MlpSpec critic_spec_for(int obs_dim, const std::vector<int>& hidden) {
  return MlpSpec{obs_dim + kActionDim, 1, hidden, OutputActivation::identity, {}};
}

inline LearnerBundle make_learner(int obs_dim, const LearnerConfig& cfg, std::uint64_t seed) {
  cfg.validate();
  LearnerBundle b{cfg,
                  actor_spec_for(obs_dim, cfg.hidden),
                  critic_spec_for(obs_dim, cfg.hidden),
                  {}, {}, {}, {}, {}, {}, {}, {}, {}, 0, 0,
                  ReplayBuffer(cfg.buffer_capacity, obs_dim),
                  std::mt19937_64(seed)};
  b.actor = init_parameters<float>(b.actor_spec, b.rng, cfg.actor_final_scale);
  b.critic1 = init_parameters<float>(b.critic_spec, b.rng);
  b.critic2 = init_parameters<float>(b.critic_spec, b.rng);
  b.actor_target = b.actor;
  b.critic1_target = b.critic1;
  b.critic2_target = b.critic2;
  b.actor_opt = AdamState<float>(b.actor.values.size());
  b.critic1_opt = AdamState<float>(b.critic1.values.size());
  b.critic2_opt = AdamState<float>(b.critic2.values.size());
  return b;
}

inline Matrix<float> stack(const Matrix<float>& top, const Matrix<float>& bottom) {
  Matrix<float> m(top.rows() + bottom.rows(), top.cols());
  m << top, bottom;
  return m;
}

// G = r + gamma * (1 - terminal) * min(q1, q2), elementwise.
inline Vector<float> clipped_double_q_target(const Vector<float>& reward, const Vector<float>& terminal,
                                             const Vector<float>& q1, const Vector<float>& q2, double gamma) {
  const Vector<float> qmin = q1.cwiseMin(q2);
  return reward.array() + static_cast<float>(gamma) * (1.0f - terminal.array()) * qmin.array();
}

inline Vector<float> compute_target(LearnerBundle& b, const Batch& batch) {
  if (batch.size() == 0) throw std::invalid_argument("compute_target: empty batch");
  Matrix<float> next_action = forward_batch(b.actor_spec, b.actor_target, batch.next_state);
  if (b.cfg.target_smoothing && b.cfg.smoothing_std > 0.0) {
    std::normal_distribution<float> n(0.0f, static_cast<float>(b.cfg.smoothing_std));
    const float clip = static_cast<float>(b.cfg.smoothing_clip);
    for (Eigen::Index i = 0; i < next_action.size(); ++i) {
      const float eps = std::clamp(n(b.rng), -clip, clip);
      next_action.data()[i] = std::clamp(next_action.data()[i] + eps, -1.0f, 1.0f);
    }
  }
  const Matrix<float> sa = stack(batch.next_state, next_action);
  const Vector<float> q1 = forward_batch(b.critic_spec, b.critic1_target, sa).row(0).transpose();
  const Vector<float> q2 = forward_batch(b.critic_spec, b.critic2_target, sa).row(0).transpose();
  return clipped_double_q_target(batch.reward, batch.terminal, q1, q2, b.cfg.gamma);
}

// One regression step of a single critic towards `target`; returns its MSE.
inline double fit_critic(const MlpSpec& spec, ParameterSet<float>& params, AdamState<float>& opt,
                         const Matrix<float>& sa, const Vector<float>& target, double lr) {
  ForwardCache<float> cache;
  const Matrix<float> q = forward_batch(spec, params, sa, &cache);
  const Matrix<float> residual = q - target.transpose();
  const double n = static_cast<double>(target.size());
  const double loss = static_cast<double>(residual.squaredNorm()) / n;
  if (!std::isfinite(loss)) throw std::domain_error("critic update: non-finite loss");
  const Matrix<float> grad_out = residual * static_cast<float>(2.0 / n);
  const Gradients<float> g = backward_batch(spec, params, cache, grad_out);
  optimize_step(params, g.params, opt, lr);
  return loss;
}

// Returns the mean of the two critics' squared TD errors.
inline double critic_update(LearnerBundle& b, const Batch& batch) {
  const Vector<float> target = compute_target(b, batch);
  const Matrix<float> sa = stack(batch.state, batch.action);
  const double l1 = fit_critic(b.critic_spec, b.critic1, b.critic1_opt, sa, target, b.cfg.critic_lr);
  const double l2 = fit_critic(b.critic_spec, b.critic2, b.critic2_opt, sa, target, b.cfg.critic_lr);
  ++b.step;
  return 0.5 * (l1 + l2);
}

inline void soft_update(ParameterSet<float>& target, const ParameterSet<float>& live, double rho) {
  const float r = static_cast<float>(rho);
  for (std::size_t i = 0; i < target.values.size(); ++i) {
    target.values[i] = r * live.values[i] + (1.0f - r) * target.values[i];
  }
}

// Ascends Q1(s, pi(s)) and moves all target networks towards the live ones.
// Returns the actor objective -mean Q1 before the step.
inline double actor_and_target_update(LearnerBundle& b, const Batch& batch) {
  const int n = batch.size();
  ForwardCache<float> actor_cache;
  const Matrix<float> action = forward_batch(b.actor_spec, b.actor, batch.state, &actor_cache);
  const Matrix<float> sa = stack(batch.state, action);
  ForwardCache<float> critic_cache;
  const Matrix<float> q = forward_batch(b.critic_spec, b.critic1, sa, &critic_cache);
  const Matrix<float> dq = Matrix<float>::Constant(1, n, -1.0f / static_cast<float>(n));
  const Gradients<float> cg = backward_batch(b.critic_spec, b.critic1, critic_cache, dq);
  const Matrix<float> dact = cg.input.bottomRows(kActionDim);
  const Gradients<float> ag = backward_batch(b.actor_spec, b.actor, actor_cache, dact);
  optimize_step(b.actor, ag.params, b.actor_opt, b.cfg.actor_lr);
  soft_update(b.actor_target, b.actor, b.cfg.rho);
  soft_update(b.critic1_target, b.critic1, b.cfg.rho);
  soft_update(b.critic2_target, b.critic2, b.cfg.rho);
  ++b.actor_updates;
  return -static_cast<double>(q.mean());
}

// Immutable copy of the current actor as a policy callable.
inline Policy policy_snapshot(const LearnerBundle& b) {
  auto spec = std::make_shared<const MlpSpec>(b.actor_spec);
  auto params = std::make_shared<const ParameterSet<float>>(b.actor);
  return [spec, params](std::span<const float> obs, std::span<float> out) {
    const Vector<float> y = forward<float>(*spec, *params, obs);
    for (int i = 0; i < kActionDim; ++i) out[static_cast<std::size_t>(i)] = y[i];
  };
}

// --- training episode --------------------------------------------------------

struct CuriosityConfig {
  double lambda_c = 4.0;
  std::size_t memory_capacity = 256;
  std::size_t max_samples = 200;
  double empty_distance = 5.0;

  void validate() const {
    if (!(lambda_c >= 0.0)) throw std::invalid_argument("curiosity.lambda_c must be >= 0");
    if (memory_capacity < 1) throw std::invalid_argument("curiosity.memory_capacity must be >= 1");
    if (max_samples < 2) throw std::invalid_argument("curiosity.max_samples must be >= 2");
    if (!(empty_distance >= 0.0)) throw std::invalid_argument("curiosity.empty_distance must be >= 0");
  }
};

struct EpisodeStats {
  double extrinsic_return = 0.0;
  int length = 0;
  TerminationCause cause = TerminationCause::step_limit;
  double curiosity = 0.0;
  double critic_loss = 0.0;  // mean over this episode's updates, 0 if none
  double actor_loss = 0.0;
  int critic_updates = 0;
  int actor_updates = 0;
  std::size_t transitions = 0;
  double final_distance = 0.0;  // main path terminal distance to goal
};

// Folds curiosity into terminal rewards and converts an episode to replay
// transitions. With mc_return the stored reward is the discounted tail along
// each path and the transition is marked terminal (no bootstrap).
inline std::vector<Transition> episode_transitions(const Episode& ep, const std::vector<double>& path_curiosity,
                                                   double lambda_c, const LearnerConfig& cfg) {
  std::vector<Transition> out(ep.transitions.size());
  for (std::size_t i = 0; i < ep.transitions.size(); ++i) {
    const auto& t = ep.transitions[i];
    out[i] = Transition{t.observation, t.action, static_cast<float>(t.reward), t.next_observation, t.terminal};
  }
  for (std::size_t p = 0; p < ep.paths.size(); ++p) {
    const auto& path = ep.paths[p];
    out[path.terminal_transition].reward += static_cast<float>(lambda_c * path_curiosity[p]);
  }
  if (cfg.reward_scale != 1.0) {
    for (auto& t : out) t.reward = static_cast<float>(cfg.reward_scale * t.reward);
  }
  if (cfg.target_value_mode == TargetValueMode::mc_return) {
    // Walk each path's transition chain backwards from its terminal.
    std::vector<char> done(out.size(), 0);
    std::vector<float> tail(out.size(), 0.0f);
    for (const auto& path : ep.paths) {
      std::vector<std::size_t> chain;
      const std::size_t branch_prefix = path.branch_point < 0 ? 0 : static_cast<std::size_t>(path.branch_point);
      for (std::size_t k = 0; k < branch_prefix; ++k) chain.push_back(k);
      const std::size_t steps_after = static_cast<std::size_t>(path.length()) - branch_prefix;
      for (std::size_t k = 0; k < steps_after; ++k) {
        chain.push_back(path.terminal_transition + 1 - steps_after + k);
      }
      double g = 0.0;
      for (auto it = chain.rbegin(); it != chain.rend(); ++it) {
        g = static_cast<double>(out[*it].reward) + cfg.gamma * g;
        if (!done[*it]) {
          tail[*it] = static_cast<float>(g);
          done[*it] = 1;
        }
      }
    }
    for (std::size_t i = 0; i < out.size(); ++i) {
      if (done[i]) {
        out[i].reward = tail[i];
        out[i].terminal = true;
      }
    }
  }
  return out;
}

inline EpisodeStats train_episode(LearnerBundle& b, Environment& env, const ExplorationConfig& xcfg,
                                  EpisodeMemory& memory, const CuriosityConfig& ccfg) {
  const Policy policy = policy_snapshot(b);
  const Episode ep = rollout(policy, env, xcfg, b.rng);

  std::vector<double> curiosity(ep.paths.size(), 0.0);
  if (ccfg.lambda_c > 0.0) {
    for (std::size_t p = 0; p < ep.paths.size(); ++p) {
      EpisodeSeries s = episode_series(ep.paths[p].states, ep.scene, ccfg.max_samples);
      curiosity[p] = curiosity_reward(s, memory, ccfg.empty_distance).reward;
      memory.record_episode(std::move(s));
    }
  }
  for (const auto& t : episode_transitions(ep, curiosity, ccfg.lambda_c, b.cfg)) b.buffer.push(t);

  EpisodeStats st;
  const EpisodePath& main = ep.main_path();
  st.extrinsic_return = main.extrinsic_return;
  st.length = main.length();
  st.cause = main.cause;
  st.curiosity = curiosity.front();
  st.transitions = ep.transitions.size();
  st.final_distance = (main.states.back().position - ep.scene.goal_position).norm();

  const std::size_t need = std::max<std::size_t>(b.cfg.warmup, static_cast<std::size_t>(b.cfg.batch_size));
  if (b.buffer.size() >= need) {
    const auto updates = static_cast<std::size_t>(
        std::llround(b.cfg.updates_per_step * static_cast<double>(ep.transitions.size())));
    if (b.step == 0 && b.cfg.init_critic_bias) {
      std::vector<std::size_t> all(b.buffer.size());
      std::iota(all.begin(), all.end(), std::size_t{0});
      const float mean = b.buffer.gather(all).reward.mean();
      for (auto* p : {&b.critic1, &b.critic2, &b.critic1_target, &b.critic2_target}) {
        p->bias(b.critic_spec, b.critic_spec.layer_count() - 1)[0] = mean;
      }
    }
    for (std::size_t k = 0; k < updates; ++k) {
      const Batch batch = b.buffer.sample(b.cfg.batch_size, b.rng);
      st.critic_loss += critic_update(b, batch);
      ++st.critic_updates;
      if (b.step % static_cast<std::uint64_t>(b.cfg.policy_delay) == 0) {
        st.actor_loss += actor_and_target_update(b, batch);
        ++st.actor_updates;
      }
    }
    if (st.critic_updates > 0) st.critic_loss /= st.critic_updates;
    if (st.actor_updates > 0) st.actor_loss /= st.actor_updates;
  }
  return st;
}

// --- persistence ----------------------------------------------------------------

inline Checkpoint to_checkpoint(const LearnerBundle& b, std::string metadata) {
  Checkpoint ck;
  ck.networks = {
      {"actor", b.actor_spec, b.actor, b.actor_opt},
      {"critic1", b.critic_spec, b.critic1, b.critic1_opt},
      {"critic2", b.critic_spec, b.critic2, b.critic2_opt},
      {"actor_target", b.actor_spec, b.actor_target, std::nullopt},
      {"critic1_target", b.critic_spec, b.critic1_target, std::nullopt},
      {"critic2_target", b.critic_spec, b.critic2_target, std::nullopt},
  };
  ck.step = b.step;
  ck.metadata = std::move(metadata);
  return ck;
}

}  // namespace curio
