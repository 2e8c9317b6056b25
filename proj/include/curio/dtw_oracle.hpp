#pragma once

// Exhaustive warping-path enumeration. Exponential in the series lengths;
// intended for auditing the dynamic-programming distance on short inputs.

#include "curio/curiosity.hpp"

#include <cmath>
#include <limits>
#include <optional>

namespace curio::oracle {

inline constexpr std::size_t kMaxBruteForceLength = 8;

namespace detail {

inline double pair_distance(const StateChannelSeries& a, std::size_t i, const StateChannelSeries& b,
                            std::size_t j) {
  const int dim = a.dim();
  double acc = 0.0;
  for (int k = 0; k < dim; ++k) {
    const double d = a.sample(i)[k] - b.sample(j)[k];
    acc += d * d;
  }
  return std::sqrt(acc);
}

// Walks every monotone path from (i, j) to (n-1, m-1), summing cell costs in
// path order starting from (0, 0).
inline void enumerate(const StateChannelSeries& a, const StateChannelSeries& b, std::size_t i,
                      std::size_t j, double sum, double& best) {
  const std::size_t n = a.size();
  const std::size_t m = b.size();
  if (i == n - 1 && j == m - 1) {
    best = std::min(best, sum);
    return;
  }
  if (i + 1 < n && j + 1 < m) enumerate(a, b, i + 1, j + 1, sum + pair_distance(a, i + 1, b, j + 1), best);
  if (i + 1 < n) enumerate(a, b, i + 1, j, sum + pair_distance(a, i + 1, b, j), best);
  if (j + 1 < m) enumerate(a, b, i, j + 1, sum + pair_distance(a, i, b, j + 1), best);
}

}  // namespace detail

// Minimum summed cost over all warping paths, or nullopt when either series
// is longer than kMaxBruteForceLength.
inline std::optional<double> brute_force_dtw(const StateChannelSeries& a, const StateChannelSeries& b) {
  if (a.channel != b.channel) throw std::domain_error("brute_force_dtw: channel mismatch");
  if (a.size() == 0 || b.size() == 0) throw std::domain_error("brute_force_dtw: empty series");
  if (a.size() > kMaxBruteForceLength || b.size() > kMaxBruteForceLength) return std::nullopt;
  double best = std::numeric_limits<double>::infinity();
  detail::enumerate(a, b, 0, 0, detail::pair_distance(a, 0, b, 0), best);
  return best;
}

}  // namespace curio::oracle
