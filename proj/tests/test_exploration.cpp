#include "curio/exploration.hpp"

#include <gtest/gtest.h>

#include <algorithm>
#include <random>

using namespace curio;

namespace {

FlightEnvConfig env_cfg(int max_steps = 120) {
  FlightEnvConfig c;
  c.scene.type = SceneType::narrow_window;
  c.scene.randomize = false;
  c.scene.max_episode_steps = max_steps;
  return c;
}

// Level attitude, hover thrust.
const Policy kHover = [](std::span<const float>, std::span<float> a) { std::fill(a.begin(), a.end(), 0.0f); };

// Mild forward pitch so episodes end by leaving the region or hitting the panel.
const Policy kForward = [](std::span<const float> obs, std::span<float> a) {
  a[0] = 0.0f;
  a[1] = 0.15f;
  a[2] = 0.0f;
  a[3] = 0.05f - 0.1f * obs[2];
};

ExplorationConfig explore(ExplorationStrategy s, double base, double branch) {
  ExplorationConfig c;
  c.strategy = s;
  c.exploration_noise_std = base;
  c.branch_noise_std = branch;
  return c;
}

std::vector<Vec3> visited(const Episode& ep) {
  std::vector<Vec3> out;
  for (const auto& p : ep.paths) {
    for (const auto& s : p.states) out.push_back(s.position);
  }
  return out;
}

double covariance_trace(const std::vector<Vec3>& pts) {
  Vec3 mean = Vec3::Zero();
  for (const auto& p : pts) mean += p;
  mean /= static_cast<double>(pts.size());
  double t = 0.0;
  for (const auto& p : pts) t += (p - mean).squaredNorm();
  return t / static_cast<double>(pts.size() - 1);
}

// Two-sample Kolmogorov-Smirnov statistic.
double ks_statistic(std::vector<double> a, std::vector<double> b) {
  std::sort(a.begin(), a.end());
  std::sort(b.begin(), b.end());
  std::size_t i = 0, j = 0;
  double d = 0.0;
  while (i < a.size() && j < b.size()) {
    const double x = std::min(a[i], b[j]);
    while (i < a.size() && a[i] <= x) ++i;
    while (j < b.size() && b[j] <= x) ++j;
    d = std::max(d, std::abs(double(i) / a.size() - double(j) / b.size()));
  }
  return d;
}

// Step at which a path first strays more than `tol` from the reference.
double first_divergence(const EpisodePath& p, const EpisodePath& ref, double tol) {
  const std::size_t n = std::min(p.states.size(), ref.states.size());
  for (std::size_t k = 0; k < n; ++k) {
    if ((p.states[k].position - ref.states[k].position).norm() > tol) return static_cast<double>(k);
  }
  return static_cast<double>(n);
}

class NoSnapshotEnv final : public Environment {
 public:
  NoSnapshotEnv() : inner_(env_cfg(), 1) {}
  int observation_dim() const override { return inner_.observation_dim(); }
  std::vector<float> reset() override { return inner_.reset(); }
  StepResult step(std::span<const float> a) override { return inner_.step(a); }
  const QuadState& state() const override { return inner_.state(); }
  const Scene& scene() const override { return inner_.scene(); }

 private:
  FlightEnv inner_;
};

}  // namespace

TEST(Exploration, EveryExecutedActionIsWithinBounds) {
  for (auto strategy : {ExplorationStrategy::spe, ExplorationStrategy::bse}) {
    FlightEnv env(env_cfg(), 3);
    std::mt19937_64 rng(4);
    const auto cfg = explore(strategy, 5.0, 5.0);
    for (int e = 0; e < 5; ++e) {
      const Episode ep = rollout(kForward, env, cfg, rng);
      for (const auto& t : ep.transitions) {
        for (float v : t.action) {
          EXPECT_GE(v, -1.0f);
          EXPECT_LE(v, 1.0f);
        }
      }
    }
  }
}

TEST(Exploration, SpeIsOneContiguousTerminatedPath) {
  FlightEnv env(env_cfg(), 3);
  std::mt19937_64 rng(5);
  const Episode ep = rollout_spe(kForward, env, explore(ExplorationStrategy::spe, 0.1, 0.3), rng);
  ASSERT_EQ(ep.paths.size(), 1u);
  const auto& p = ep.main_path();
  EXPECT_EQ(p.branch_point, -1);
  ASSERT_EQ(static_cast<std::size_t>(p.length()), ep.transitions.size());
  EXPECT_EQ(p.terminal_transition, ep.transitions.size() - 1);
  for (std::size_t k = 0; k < ep.transitions.size(); ++k) {
    EXPECT_EQ(ep.transitions[k].terminal, k + 1 == ep.transitions.size());
    if (k > 0) {
      EXPECT_EQ(ep.transitions[k].observation, ep.transitions[k - 1].next_observation);
    }
  }
  double ret = 0.0;
  for (const auto& t : ep.transitions) ret += t.reward;
  EXPECT_EQ(p.extrinsic_return, ret);
}

TEST(Exploration, ZeroNoiseIsRepeatable) {
  for (auto strategy : {ExplorationStrategy::spe, ExplorationStrategy::bse}) {
    const auto cfg = explore(strategy, 0.0, 0.0);
    FlightEnv e1(env_cfg(), 9), e2(env_cfg(), 9);
    std::mt19937_64 r1(1), r2(1);
    const Episode a = rollout(kForward, e1, cfg, r1);
    const Episode b = rollout(kForward, e2, cfg, r2);
    ASSERT_EQ(a.transitions.size(), b.transitions.size());
    for (std::size_t k = 0; k < a.transitions.size(); ++k) {
      EXPECT_EQ(a.transitions[k].next_observation, b.transitions[k].next_observation);
    }
  }
}

TEST(Exploration, NoiseDivergesAfterTheFirstStep) {
  FlightEnv ref_env(env_cfg(), 1);
  std::mt19937_64 ref_rng(0);
  const Episode ref = rollout_spe(kForward, ref_env, explore(ExplorationStrategy::spe, 0.0, 0.0), ref_rng);
  int diverged = 0;
  for (int seed = 0; seed < 20; ++seed) {
    FlightEnv env(env_cfg(), 1);
    std::mt19937_64 rng(static_cast<std::uint64_t>(seed));
    const Episode ep = rollout_spe(kForward, env, explore(ExplorationStrategy::spe, 0.1, 0.0), rng);
    const auto& s = ep.main_path().states.at(1);
    const auto& r = ref.main_path().states.at(1);
    if (s.attitude != r.attitude || s.linear_velocity != r.linear_velocity) ++diverged;
  }
  EXPECT_EQ(diverged, 20);
}

TEST(Exploration, TerminationCauseMatchesTheLastStep) {
  FlightEnv env(env_cfg(400), 2);
  std::mt19937_64 rng(2);
  for (int e = 0; e < 10; ++e) {
    const Episode ep = rollout(kForward, env, explore(ExplorationStrategy::bse, 0.1, 0.3), rng);
    for (const auto& p : ep.paths) {
      const auto ev = check_termination(p.states.back(), ep.scene, p.length(), env.config().ellipsoid);
      ASSERT_TRUE(ev.has_value());
      EXPECT_EQ(ev->cause, p.cause);
      EXPECT_TRUE(ep.transitions.at(p.terminal_transition).terminal);
    }
  }
}

TEST(Exploration, BseBranchesGrowFromTheInitSegment) {
  FlightEnv env(env_cfg(), 6);
  std::mt19937_64 rng(6);
  ExplorationConfig cfg = explore(ExplorationStrategy::bse, 0.1, 0.3);
  cfg.branch_count = 3;
  const Episode ep = rollout_bse(kHover, env, cfg, rng);
  ASSERT_EQ(ep.paths.size(), 3u);
  // Transitions are [init | branch 1 | branch 2 | branch 3] and the init prefix
  // of each path replays the same states.
  const int init_len = cfg.init_steps;
  std::size_t total = static_cast<std::size_t>(init_len);
  for (const auto& p : ep.paths) {
    ASSERT_GE(p.branch_point, 0);
    ASSERT_LE(p.branch_point, init_len);
    total += static_cast<std::size_t>(p.length() - p.branch_point);
  }
  EXPECT_EQ(ep.transitions.size(), total);
  for (std::size_t a = 0; a < ep.paths.size(); ++a) {
    for (std::size_t b = 0; b < ep.paths.size(); ++b) {
      const int m = std::min(ep.paths[a].branch_point, ep.paths[b].branch_point);
      for (int k = 0; k <= m; ++k) {
        EXPECT_EQ(ep.paths[a].states[static_cast<std::size_t>(k)].position,
                  ep.paths[b].states[static_cast<std::size_t>(k)].position);
      }
    }
  }
}

TEST(Exploration, TerminatedInitSegmentIsKeptAsAPath) {
  FlightEnv env(env_cfg(), 6);
  std::mt19937_64 rng(6);
  ExplorationConfig cfg = explore(ExplorationStrategy::bse, 0.1, 0.3);
  cfg.branch_count = 2;
  cfg.init_steps = 100000;
  const Episode ep = rollout_bse(kForward, env, cfg, rng);
  ASSERT_EQ(ep.paths.size(), 3u);
  const auto& init = ep.paths.back();
  EXPECT_EQ(init.branch_point, -1);
  EXPECT_EQ(init.terminal_transition, static_cast<std::size_t>(init.length() - 1));
  EXPECT_TRUE(ep.transitions.at(init.terminal_transition).terminal);
  std::size_t total = static_cast<std::size_t>(init.length());
  for (std::size_t p = 0; p + 1 < ep.paths.size(); ++p) {
    ASSERT_GE(ep.paths[p].branch_point, 0);
    ASSERT_LT(ep.paths[p].branch_point, init.length());
    total += static_cast<std::size_t>(ep.paths[p].length() - ep.paths[p].branch_point);
  }
  EXPECT_EQ(ep.transitions.size(), total);
}

TEST(Exploration, BseReproducibleForAFixedSeed) {
  const auto cfg = explore(ExplorationStrategy::bse, 0.1, 0.3);
  FlightEnv e1(env_cfg(), 8), e2(env_cfg(), 8);
  std::mt19937_64 r1(77), r2(77);
  for (int e = 0; e < 3; ++e) {
    const Episode a = rollout_bse(kForward, e1, cfg, r1);
    const Episode b = rollout_bse(kForward, e2, cfg, r2);
    ASSERT_EQ(a.transitions.size(), b.transitions.size());
    EXPECT_EQ(a.paths[0].branch_point, b.paths[0].branch_point);
    for (std::size_t k = 0; k < a.transitions.size(); ++k) {
      EXPECT_EQ(a.transitions[k].action, b.transitions[k].action);
    }
  }
}

TEST(Exploration, ContinuationIsAFunctionOfTheBranchEndState) {
  ExplorationConfig cfg = explore(ExplorationStrategy::bse, 0.0, 0.0);
  FlightEnv env(env_cfg(300), 4);
  std::mt19937_64 rng(12);
  const Episode ep = rollout_bse(kForward, env, cfg, rng);
  const auto& p = ep.main_path();
  const int end = p.branch_point + cfg.branch_length;
  ASSERT_LT(end, p.length());

  FlightEnv fresh(env_cfg(300), 99);
  fresh.set_fixed_scene(ep.scene);
  fresh.reset();
  std::vector<float> obs = fresh.restore(EnvSnapshot{p.states[static_cast<std::size_t>(end)], end, {}});
  for (int k = end + 1; k <= p.length(); ++k) {
    std::array<float, kActionDim> a{};
    kForward(obs, a);
    StepResult r = fresh.step(a);
    ASSERT_EQ(fresh.state().position, p.states[static_cast<std::size_t>(k)].position) << "step " << k;
    ASSERT_EQ(fresh.state().attitude, p.states[static_cast<std::size_t>(k)].attitude);
    obs = std::move(r.observation);
    EXPECT_EQ(r.event.has_value(), k == p.length());
  }
}

TEST(Exploration, DegenerateBseMatchesSpeInDistribution) {
  FlightEnv ref_env(env_cfg(), 1);
  std::mt19937_64 ref_rng(0);
  const Episode ref = rollout_spe(kHover, ref_env, explore(ExplorationStrategy::spe, 0.0, 0.0), ref_rng);

  ExplorationConfig bse = explore(ExplorationStrategy::bse, 0.1, 0.1);
  bse.branch_count = 1;
  bse.branch_at_last = true;
  const ExplorationConfig spe = explore(ExplorationStrategy::spe, 0.1, 0.1);
  std::vector<double> a, b;
  for (int seed = 0; seed < 100; ++seed) {
    FlightEnv e1(env_cfg(), 1), e2(env_cfg(), 1);
    std::mt19937_64 r1(static_cast<std::uint64_t>(seed)), r2(static_cast<std::uint64_t>(seed + 5000));
    a.push_back(first_divergence(rollout_spe(kHover, e1, spe, r1).main_path(), ref.main_path(), 0.02));
    b.push_back(first_divergence(rollout_bse(kHover, e2, bse, r2).main_path(), ref.main_path(), 0.02));
  }
  // alpha = 0.01 critical value for n = m = 100.
  EXPECT_LT(ks_statistic(a, b), 1.628 * std::sqrt(2.0 / 100.0));
}

TEST(Exploration, BseVisitsAWiderRegionThanSpe) {
  std::vector<Vec3> bse_pts, spe_pts;
  FlightEnv e1(env_cfg(), 21), e2(env_cfg(), 21);
  std::mt19937_64 r1(31), r2(32);
  const auto bse = explore(ExplorationStrategy::bse, 0.1, 0.3);
  const auto spe = explore(ExplorationStrategy::spe, 0.1, 0.3);
  for (int e = 0; e < 200; ++e) {
    for (const auto& p : visited(rollout_bse(kHover, e1, bse, r1))) bse_pts.push_back(p);
    for (const auto& p : visited(rollout_spe(kHover, e2, spe, r2))) spe_pts.push_back(p);
  }
  EXPECT_GT(covariance_trace(bse_pts), covariance_trace(spe_pts));
}

TEST(Exploration, BseNeedsSnapshotSupport) {
  NoSnapshotEnv env;
  std::mt19937_64 rng(1);
  EXPECT_THROW(rollout_bse(kHover, env, explore(ExplorationStrategy::bse, 0.1, 0.3), rng), std::invalid_argument);
  EXPECT_NO_THROW(rollout_spe(kHover, env, explore(ExplorationStrategy::spe, 0.1, 0.3), rng));
}

TEST(Exploration, InvalidConfigRejected) {
  FlightEnv env(env_cfg(), 1);
  std::mt19937_64 rng(1);
  ExplorationConfig c = explore(ExplorationStrategy::bse, 0.1, 0.3);
  c.branch_count = 0;
  EXPECT_THROW(rollout(kHover, env, c, rng), std::invalid_argument);
  c = explore(ExplorationStrategy::spe, -0.1, 0.3);
  EXPECT_THROW(rollout(kHover, env, c, rng), std::invalid_argument);
}

TEST(AttitudeNoise, ZeroStdLeavesActionUnchanged) {
  std::mt19937_64 rng(1);
  const ActionAngles a{0.1, -0.2, 0.3, 0.55};
  const ActionAngles b = attitude_noise(a, 0.0, rng);
  EXPECT_EQ(a.roll, b.roll);
  EXPECT_EQ(a.pitch, b.pitch);
  EXPECT_EQ(a.yaw, b.yaw);
  EXPECT_EQ(a.thrust_fraction, b.thrust_fraction);
  EXPECT_THROW(attitude_noise(a, -1.0, rng), std::invalid_argument);
}

TEST(AttitudeNoise, SampleStdMatchesPerAxis) {
  std::mt19937_64 rng(2024);
  const ActionAngles a{0.0, 0.0, 0.0, 0.4};
  const int n = 100000;
  double s[3] = {0, 0, 0}, ss[3] = {0, 0, 0};
  for (int i = 0; i < n; ++i) {
    const ActionAngles b = attitude_noise(a, 3.0, rng);
    ASSERT_EQ(b.thrust_fraction, 0.4);
    const double d[3] = {rad2deg(b.roll), rad2deg(b.pitch), rad2deg(b.yaw)};
    for (int k = 0; k < 3; ++k) {
      s[k] += d[k];
      ss[k] += d[k] * d[k];
    }
  }
  for (int k = 0; k < 3; ++k) {
    const double mean = s[k] / n;
    const double sd = std::sqrt((ss[k] - n * mean * mean) / (n - 1));
    EXPECT_NEAR(sd, 3.0, 0.05) << "axis " << k;
    EXPECT_NEAR(mean, 0.0, 0.05) << "axis " << k;
  }
}

TEST(AttitudeNoise, StaysInBoundsAndYieldsARotation) {
  std::mt19937_64 rng(3);
  const ActionBounds bounds;
  const ActionAngles edge{bounds.max_roll, -bounds.max_pitch, bounds.max_yaw, 1.0};
  for (int i = 0; i < 1000; ++i) {
    const ActionAngles b = attitude_noise(edge, 3.0, rng, bounds);
    EXPECT_LE(std::abs(b.roll), bounds.max_roll);
    EXPECT_LE(std::abs(b.pitch), bounds.max_pitch);
    EXPECT_LE(std::abs(b.yaw), bounds.max_yaw);
    EXPECT_TRUE(so3::is_rotation(b.attitude()));
  }
}
