#pragma once

#include <Eigen/Core>

namespace stlplan {

using Vec3 = Eigen::Vector3d;

/// Axis-aligned box with per-axis bounds [lo, hi].
struct Box {
  Vec3 lo = Vec3::Zero();
  Vec3 hi = Vec3::Zero();

  [[nodiscard]] Vec3 center() const { return 0.5 * (lo + hi); }
  [[nodiscard]] bool degenerate() const { return !(lo.array() < hi.array()).all(); }

  /// Strict interior test, matching the open intervals of the box predicates.
  [[nodiscard]] bool contains_strict(const Vec3& p) const {
    return (p.array() > lo.array()).all() && (p.array() < hi.array()).all();
  }
  [[nodiscard]] bool contains(const Vec3& p) const {
    return (p.array() >= lo.array()).all() && (p.array() <= hi.array()).all();
  }
  [[nodiscard]] bool intersects(const Box& other) const {
    return (lo.array() < other.hi.array()).all() && (other.lo.array() < hi.array()).all();
  }
  [[nodiscard]] Box inflated(double margin) const {
    return Box{lo.array() - margin, hi.array() + margin};
  }

  bool operator==(const Box& other) const { return lo == other.lo && hi == other.hi; }
};

struct SegmentProjection {
  double distance = 0.0;
  double parameter = 0.0;  // clamped to [0, 1]
  Vec3 closest = Vec3::Zero();
};

/// Euclidean distance from p to the segment [a, b]; a degenerate segment
/// collapses to the point a.
SegmentProjection project_on_segment(const Vec3& p, const Vec3& a, const Vec3& b);

/// Unit vector orthogonal to `direction` in the horizontal plane. Falls back
/// to +x when `direction` is vertical.
Vec3 horizontal_normal(const Vec3& direction);

}  // namespace stlplan
