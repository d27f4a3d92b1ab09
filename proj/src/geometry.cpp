#include "stlplan/geometry.hpp"

#include <algorithm>
#include <cmath>

namespace stlplan {

SegmentProjection project_on_segment(const Vec3& p, const Vec3& a, const Vec3& b) {
  const Vec3 ab = b - a;
  const double len2 = ab.squaredNorm();
  double t = 0.0;
  if (len2 > 0.0) {
    t = std::clamp((p - a).dot(ab) / len2, 0.0, 1.0);
  }
  SegmentProjection out;
  out.parameter = t;
  out.closest = a + t * ab;
  out.distance = (p - out.closest).norm();
  return out;
}

Vec3 horizontal_normal(const Vec3& direction) {
  const Vec3 n(-direction.y(), direction.x(), 0.0);
  const double len = n.norm();
  if (len < 1e-12) {
    return Vec3::UnitX();
  }
  return n / len;
}

}  // namespace stlplan
