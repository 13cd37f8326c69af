#include "dtwin/geom.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

#include "dtwin/error.hpp"

namespace dtwin {

namespace {

double normalize_degrees(double deg) {
  double r = std::fmod(deg, 360.0);
  if (r < 0.0) r += 360.0;
  if (r >= 360.0) r = 0.0;
  // -0.0 and 0.0 must compare and print the same.
  return r == 0.0 ? 0.0 : r;
}

// Exact values on the quarter turns keep axis-aligned poses free of 1e-17
// noise, which otherwise leaks into face-contact tests.
void sincos_degrees(double deg, double& s, double& c) {
  const double r = normalize_degrees(deg);
  if (r == 0.0) { s = 0.0; c = 1.0; return; }
  if (r == 90.0) { s = 1.0; c = 0.0; return; }
  if (r == 180.0) { s = 0.0; c = -1.0; return; }
  if (r == 270.0) { s = -1.0; c = 0.0; return; }
  const double rad = r * std::numbers::pi / 180.0;
  s = std::sin(rad);
  c = std::cos(rad);
}

}  // namespace

Orientation::Orientation(double yaw_deg, double pitch_deg)
    : yaw(normalize_degrees(yaw_deg)), pitch(normalize_degrees(pitch_deg)) {}

const char* to_string(Strategy s) {
  switch (s) {
    case Strategy::kDown: return "down";
    case Strategy::kLateralNegX: return "lateral_neg_x";
    case Strategy::kLateralPosX: return "lateral_pos_x";
    case Strategy::kUp: return "up";
  }
  return "?";
}

std::optional<Strategy> strategy_from_string(std::string_view s) {
  for (auto st : {Strategy::kDown, Strategy::kLateralNegX, Strategy::kLateralPosX, Strategy::kUp}) {
    if (s == to_string(st)) return st;
  }
  return std::nullopt;
}

double angle_delta(double from_deg, double to_deg) {
  double d = std::fmod(to_deg - from_deg, 360.0);
  if (d <= -180.0) d += 360.0;
  if (d > 180.0) d -= 360.0;
  return d;
}

Eigen::Matrix3d rotation_matrix(const Orientation& o) {
  double sy, cy, sp, cp;
  sincos_degrees(o.yaw, sy, cy);
  sincos_degrees(o.pitch, sp, cp);
  Eigen::Matrix3d yaw;
  yaw << cy, 0.0, sy,
         0.0, 1.0, 0.0,
         -sy, 0.0, cy;
  Eigen::Matrix3d pitch;
  pitch << 1.0, 0.0, 0.0,
           0.0, cp, -sp,
           0.0, sp, cp;
  return pitch * yaw;
}

Point3 rotate_point(const Point3& p, const Orientation& o) {
  if (o.yaw == 0.0 && o.pitch == 0.0) return p;
  return rotation_matrix(o) * p;
}

Aabb aabb_at(const Point3& half_extents, const Pose& pose) {
  if (!is_finite(half_extents) || (half_extents.array() <= 0.0).any()) {
    throw Error(ErrorCode::kInvalidGeometry, "half extents must be positive and finite");
  }
  const Eigen::Matrix3d r = rotation_matrix(pose.orientation);
  return Aabb{pose.position, r.cwiseAbs() * half_extents};
}

bool aabbs_intersect(const Aabb& a, const Aabb& b, double contact_tolerance) {
  const Eigen::Array3d overlap =
      (a.half_extents + b.half_extents).array() - (a.center - b.center).array().abs();
  return (overlap > contact_tolerance).all();
}

Pose Trajectory::end_pose() const {
  Pose p = start;
  for (const auto& seg : segments) p = interpolate(seg, p, 1.0);
  return p;
}

Pose interpolate(const Segment& seg, const Pose& at_start, double t) {
  if (const auto* tr = std::get_if<Translate>(&seg)) {
    Pose out{t >= 1.0 ? tr->to : Point3(tr->from + (tr->to - tr->from) * t), at_start.orientation};
    return out;
  }
  const auto& rot = std::get<Rotate>(seg);
  if (t >= 1.0) return Pose{at_start.position, rot.to};
  return Pose{at_start.position,
              Orientation(rot.from.yaw + t * angle_delta(rot.from.yaw, rot.to.yaw),
                          rot.from.pitch + t * angle_delta(rot.from.pitch, rot.to.pitch))};
}

std::size_t segment_subdivisions(const Segment& seg, const Point3& half_extents, double step) {
  double length = 0.0;
  if (const auto* tr = std::get_if<Translate>(&seg)) {
    length = (tr->to - tr->from).norm();
  } else {
    const auto& rot = std::get<Rotate>(seg);
    const double sweep_deg = std::max(std::abs(angle_delta(rot.from.yaw, rot.to.yaw)),
                                      std::abs(angle_delta(rot.from.pitch, rot.to.pitch)));
    length = sweep_deg * std::numbers::pi / 180.0 * half_extents.norm();
  }
  return std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(length / step)));
}

std::optional<CollisionReport> sweep_check(const Point3& moving_half_extents,
                                           const Trajectory& path,
                                           std::span<const Obstacle> obstacles,
                                           const SweepConfig& config) {
  Pose seg_start = path.start;
  for (std::size_t si = 0; si < path.segments.size(); ++si) {
    const Segment& seg = path.segments[si];
    const std::size_t n = segment_subdivisions(seg, moving_half_extents, config.step);
    for (std::size_t k = 0; k <= n; ++k) {
      const Pose sample = interpolate(seg, seg_start, static_cast<double>(k) / static_cast<double>(n));
      const Aabb box = aabb_at(moving_half_extents, sample);
      const Obstacle* hit = nullptr;
      for (const auto& ob : obstacles) {
        if (aabbs_intersect(box, ob.box, config.contact_tolerance) && (!hit || ob.id < hit->id)) {
          hit = &ob;
        }
      }
      if (hit) return CollisionReport{si, sample, hit->id};
    }
    seg_start = interpolate(seg, seg_start, 1.0);
  }
  return std::nullopt;
}

bool is_finite(const Point3& p) { return p.allFinite(); }

}  // namespace dtwin
