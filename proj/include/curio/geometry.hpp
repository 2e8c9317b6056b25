#pragma once

// Ellipsoid body model and obstacle primitives for sampled collision checks.

#include "curio/rotation.hpp"

#include <array>
#include <cstdint>
#include <map>
#include <memory>
#include <mutex>
#include <span>
#include <stdexcept>
#include <variant>
#include <vector>

namespace curio {

struct EllipsoidModel {
  double radius_l = 0.28;  // lateral semi-axis (body x and y)
  double height_h = 0.08;  // vertical semi-axis (body z)
  int sample_count = 2048;

  void validate() const {
    if (!(height_h > 0.0) || !(radius_l >= height_h)) {
      throw std::invalid_argument("ellipsoid: require radius_l >= height_h > 0");
    }
    if (sample_count < 500) throw std::invalid_argument("ellipsoid: sample_count must be >= 500");
  }

  Mat3 sigma() const { return Vec3(radius_l, radius_l, height_h).asDiagonal(); }
};

struct Box {
  Vec3 center = Vec3::Zero();
  Vec3 half_extents = Vec3::Ones();

  bool contains(const Vec3& p) const {
    const Vec3 d = (p - center).cwiseAbs();
    return d.x() <= half_extents.x() && d.y() <= half_extents.y() && d.z() <= half_extents.z();
  }
};

// Vertical (world z) cylinder; center is the mid-height point.
struct Cylinder {
  Vec3 center = Vec3::Zero();
  double radius = 0.1;
  double height = 1.0;

  bool contains(const Vec3& p) const {
    const double dx = p.x() - center.x();
    const double dy = p.y() - center.y();
    return dx * dx + dy * dy <= radius * radius && std::abs(p.z() - center.z()) <= 0.5 * height;
  }
};

// A thin panel in the world y-z plane, rotated by `angle` about the world x
// axis, with a rectangular gap at its center. The panel is stored as four
// boxes around the gap, expressed in the panel's local frame.
struct WindowPanel {
  Vec3 center = Vec3::Zero();
  double angle = 0.0;         // rad, in-plane rotation about world x
  Vec3 panel_extents{0.05, 6.0, 6.0};  // full size: thickness, width, height
  double gap_width = 0.9;     // along local y
  double gap_height = 0.3;    // along local z

  std::array<Box, 4> local_boxes() const {
    const double t = 0.5 * panel_extents.x();
    const double w = 0.5 * panel_extents.y();
    const double h = 0.5 * panel_extents.z();
    const double gw = 0.5 * gap_width;
    const double gh = 0.5 * gap_height;
    return {{
        // above and below the gap, full width
        Box{Vec3(0.0, 0.0, 0.5 * (h + gh)), Vec3(t, w, 0.5 * (h - gh))},
        Box{Vec3(0.0, 0.0, -0.5 * (h + gh)), Vec3(t, w, 0.5 * (h - gh))},
        // left and right of the gap, gap height only
        Box{Vec3(0.0, 0.5 * (w + gw), 0.0), Vec3(t, 0.5 * (w - gw), gh)},
        Box{Vec3(0.0, -0.5 * (w + gw), 0.0), Vec3(t, 0.5 * (w - gw), gh)},
    }};
  }

  Vec3 to_local(const Vec3& p) const { return so3::rot_x(-angle) * (p - center); }

  bool contains(const Vec3& p) const {
    const Vec3 q = to_local(p);
    for (const Box& b : local_boxes()) {
      if (b.contains(q)) return true;
    }
    return false;
  }

  // Unit vectors of the gap's long and short axes in world coordinates.
  Vec3 gap_long_axis() const { return so3::rot_x(angle).col(1); }
  Vec3 gap_short_axis() const { return so3::rot_x(angle).col(2); }
};

using ObstaclePrimitive = std::variant<Box, Cylinder, WindowPanel>;

inline void validate_obstacle(const ObstaclePrimitive& o) {
  std::visit(
      [](const auto& ob) {
        using T = std::decay_t<decltype(ob)>;
        if constexpr (std::is_same_v<T, Box>) {
          if (!(ob.half_extents.minCoeff() > 0.0)) throw std::invalid_argument("box: extents must be positive");
        } else if constexpr (std::is_same_v<T, Cylinder>) {
          if (!(ob.radius > 0.0) || !(ob.height > 0.0)) throw std::invalid_argument("cylinder: extents must be positive");
        } else {
          if (!(ob.panel_extents.minCoeff() > 0.0) || !(ob.gap_width > 0.0) || !(ob.gap_height > 0.0)) {
            throw std::invalid_argument("window: extents must be positive");
          }
          if (!(ob.gap_width < ob.panel_extents.y()) || !(ob.gap_height < ob.panel_extents.z())) {
            throw std::invalid_argument("window: gap must be smaller than the panel");
          }
        }
      },
      o);
}

inline bool contains(const ObstaclePrimitive& o, const Vec3& p) {
  return std::visit([&](const auto& ob) { return ob.contains(p); }, o);
}

using PointCloud = std::vector<Vec3>;

namespace detail {

inline double radical_inverse(std::uint64_t i, std::uint64_t base) {
  double inv = 1.0 / static_cast<double>(base);
  double f = inv;
  double r = 0.0;
  while (i > 0) {
    r += f * static_cast<double>(i % base);
    i /= base;
    f *= inv;
  }
  return r;
}

}  // namespace detail

// Halton points (bases 2, 3, 5) mapped volume-preservingly into the unit ball.
// `seed` offsets the sequence index.
inline std::vector<Vec3> unit_ball_samples(int count, std::uint64_t seed = 0) {
  std::vector<Vec3> pts;
  pts.reserve(static_cast<std::size_t>(count));
  for (int k = 0; k < count; ++k) {
    const std::uint64_t i = seed + static_cast<std::uint64_t>(k) + 1;
    const double r = std::cbrt(detail::radical_inverse(i, 2));
    const double z = 1.0 - 2.0 * detail::radical_inverse(i, 3);
    const double phi = 2.0 * std::numbers::pi * detail::radical_inverse(i, 5);
    const double s = std::sqrt(std::max(0.0, 1.0 - z * z));
    pts.emplace_back(r * s * std::cos(phi), r * s * std::sin(phi), r * z);
  }
  return pts;
}

// Cached copy of the default-seed ball for a given count.
inline std::shared_ptr<const std::vector<Vec3>> cached_unit_ball(int count) {
  static std::mutex mu;
  static std::map<int, std::shared_ptr<const std::vector<Vec3>>> cache;
  std::lock_guard lock(mu);
  auto& slot = cache[count];
  if (!slot) slot = std::make_shared<const std::vector<Vec3>>(unit_ball_samples(count));
  return slot;
}

// p = R Sigma R^T d + X for every sample d of the unit ball.
inline PointCloud ellipsoid_points(const EllipsoidModel& model, const Vec3& position,
                                   const Mat3& attitude) {
  const auto ball = cached_unit_ball(model.sample_count);
  const Mat3 shape = attitude * model.sigma() * attitude.transpose();
  PointCloud cloud;
  cloud.reserve(ball->size());
  for (const Vec3& d : *ball) cloud.push_back(shape * d + position);
  return cloud;
}

inline double intersection_fraction(std::span<const Vec3> cloud,
                                    std::span<const ObstaclePrimitive> obstacles) {
  if (cloud.empty()) throw std::invalid_argument("intersection_fraction: empty cloud");
  std::vector<char> hit(cloud.size(), 0);
  for (const auto& o : obstacles) {
    if (const auto* w = std::get_if<WindowPanel>(&o)) {
      // Rotate once per panel instead of once per point.
      const Mat3 to_local = so3::rot_x(-w->angle);
      const auto boxes = w->local_boxes();
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (hit[i]) continue;
        const Vec3 q = to_local * (cloud[i] - w->center);
        for (const Box& b : boxes) {
          if (b.contains(q)) {
            hit[i] = 1;
            break;
          }
        }
      }
    } else {
      for (std::size_t i = 0; i < cloud.size(); ++i) {
        if (!hit[i] && contains(o, cloud[i])) hit[i] = 1;
      }
    }
  }
  std::size_t hits = 0;
  for (char h : hit) hits += static_cast<std::size_t>(h);
  return static_cast<double>(hits) / static_cast<double>(cloud.size());
}

}  // namespace curio
