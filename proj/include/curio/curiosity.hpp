#pragma once

// Similarity-based curiosity: multi-channel dynamic time warping between the
// current episode and every stored episode, turned into a bounded reward.

#include "curio/observation.hpp"

#include <array>
#include <cmath>
#include <deque>
#include <limits>
#include <stdexcept>
#include <vector>

namespace curio {

enum class Channel { position, attitude, velocity };

inline int channel_dim(Channel c) { return c == Channel::attitude ? 9 : 3; }

// One state channel sampled once per control step, stored row-major.
struct StateChannelSeries {
  Channel channel = Channel::position;
  std::vector<double> data;

  int dim() const { return channel_dim(channel); }
  std::size_t size() const { return data.size() / static_cast<std::size_t>(dim()); }
  const double* sample(std::size_t i) const { return data.data() + i * static_cast<std::size_t>(dim()); }

  void push(std::span<const double> v) {
    if (static_cast<int>(v.size()) != dim()) throw std::invalid_argument("series: sample dimension mismatch");
    data.insert(data.end(), v.begin(), v.end());
  }

  static StateChannelSeries scalars(std::initializer_list<double> xs) {
    StateChannelSeries s;
    for (double x : xs) s.push(std::array<double, 3>{x, 0.0, 0.0});
    return s;
  }
};

using EpisodeSeries = std::array<StateChannelSeries, 3>;

inline double sample_distance(const double* a, const double* b, int dim) {
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = a[k] - b[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Accumulated cost D(i,j) = d(i,j) + min(D(i-1,j-1), D(i-1,j), D(i,j-1)),
// evaluated with two rolling rows.
inline double dtw_distance(const StateChannelSeries& a, const StateChannelSeries& b) {
  if (a.channel != b.channel) throw std::domain_error("dtw_distance: channel mismatch");
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (n == 0 || m == 0) throw std::domain_error("dtw_distance: empty series");
  const int dim = a.dim();
  constexpr double inf = std::numeric_limits<double>::infinity();
  std::vector<double> prev(m, inf);
  std::vector<double> cur(m, inf);
  for (std::size_t i = 0; i < n; ++i) {
    const double* si = a.sample(i);
    for (std::size_t j = 0; j < m; ++j) {
      const double d = sample_distance(si, b.sample(j), dim);
      double best;
      if (i == 0 && j == 0) {
        cur[j] = d;
        continue;
      } else if (i == 0) {
        best = cur[j - 1];
      } else if (j == 0) {
        best = prev[j];
      } else {
        best = std::min({prev[j - 1], prev[j], cur[j - 1]});
      }
      cur[j] = best + d;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

// Keeps at most `max_samples` samples at a uniform index stride, always
// including the first and last sample.
inline StateChannelSeries downsample(const StateChannelSeries& s, std::size_t max_samples) {
  const std::size_t n = s.size();
  if (max_samples == 0 || n <= max_samples) return s;
  StateChannelSeries out;
  out.channel = s.channel;
  out.data.reserve(max_samples * static_cast<std::size_t>(s.dim()));
  for (std::size_t k = 0; k < max_samples; ++k) {
    const std::size_t idx = (k * (n - 1)) / (max_samples - 1);
    out.data.insert(out.data.end(), s.sample(idx), s.sample(idx) + s.dim());
  }
  return out;
}

// Builds position/attitude/velocity series on the normalized observation
// features so the three channel distances are commensurable.
inline EpisodeSeries episode_series(std::span<const QuadState> states, const Scene& scene,
                                    std::size_t max_samples = 0) {
  const ObservationCodec codec = ObservationCodec::for_scene(scene);
  EpisodeSeries e;
  e[0].channel = Channel::position;
  e[1].channel = Channel::attitude;
  e[2].channel = Channel::velocity;
  for (const QuadState& s : states) {
    std::array<double, 3> p{};
    std::array<double, 9> r{};
    std::array<double, 3> v{};
    for (int i = 0; i < 3; ++i) {
      p[static_cast<std::size_t>(i)] = (s.position[i] - codec.offset[static_cast<std::size_t>(i)]) /
                                       codec.scale[static_cast<std::size_t>(i)];
      v[static_cast<std::size_t>(i)] = s.linear_velocity[i] / kVelocityScale;
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) r[static_cast<std::size_t>(3 * i + j)] = s.attitude(i, j);
    }
    e[0].push(p);
    e[1].push(r);
    e[2].push(v);
  }
  if (max_samples > 0) {
    for (auto& ch : e) ch = downsample(ch, max_samples);
  }
  return e;
}

inline double summed_dtw(const EpisodeSeries& a, const EpisodeSeries& b) {
  double total = 0.0;
  for (std::size_t n = 0; n < a.size(); ++n) total += dtw_distance(a[n], b[n]);
  return total;
}

class EpisodeMemory {
 public:
  explicit EpisodeMemory(std::size_t capacity = 256) : capacity_(capacity) {
    if (capacity_ == 0) throw std::invalid_argument("episode memory: capacity must be >= 1");
  }

  void record_episode(EpisodeSeries episode) {
    for (const auto& ch : episode) {
      if (ch.size() == 0) throw std::invalid_argument("episode memory: empty series");
    }
    episodes_.push_back(std::move(episode));
    while (episodes_.size() > capacity_) episodes_.pop_front();
  }

  std::size_t size() const { return episodes_.size(); }
  std::size_t capacity() const { return capacity_; }
  bool empty() const { return episodes_.empty(); }
  const std::deque<EpisodeSeries>& episodes() const { return episodes_; }

 private:
  std::size_t capacity_;
  std::deque<EpisodeSeries> episodes_;
};

// 1 - exp(-D) clamped below 1 so the result stays in [0, 1) in floating point.
inline double curiosity_from_distance(double d) {
  const double r = -std::expm1(-d);
  return std::min(r, std::nextafter(1.0, 0.0));
}

struct CuriosityResult {
  double reward = 0.0;
  double min_distance = 0.0;
};

// `empty_distance` stands in for the minimum when the memory is empty.
inline CuriosityResult curiosity_reward(const EpisodeSeries& current, const EpisodeMemory& memory,
                                        double empty_distance = 5.0) {
  double best = empty_distance;
  if (!memory.empty()) {
    best = std::numeric_limits<double>::infinity();
    for (const auto& past : memory.episodes()) {
      best = std::min(best, summed_dtw(current, past));
      if (best == 0.0) break;
    }
  }
  return {curiosity_from_distance(best), best};
}

}  // namespace curio
