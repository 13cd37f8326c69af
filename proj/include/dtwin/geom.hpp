#pragma once

#include <optional>
#include <span>
#include <string>
#include <variant>
#include <vector>

#include <Eigen/Core>

namespace dtwin {

// Model units; the second component (y) is height.
using Point3 = Eigen::Vector3d;

/// Two rotary degrees of freedom, in degrees, each kept in [0, 360).
struct Orientation {
  double yaw = 0.0;
  double pitch = 0.0;

  Orientation() = default;
  Orientation(double yaw_deg, double pitch_deg);

  bool operator==(const Orientation&) const = default;
};

struct Pose {
  Point3 position = Point3::Zero();
  Orientation orientation;

  bool operator==(const Pose& o) const {
    return position == o.position && orientation == o.orientation;
  }
};

struct Aabb {
  Point3 center = Point3::Zero();
  Point3 half_extents = Point3::Ones();

  double min_height() const { return center.y() - half_extents.y(); }
  double max_height() const { return center.y() + half_extents.y(); }
};

struct Obstacle {
  std::string id;
  Aabb box;
};

struct Translate {
  Point3 from;
  Point3 to;
};

struct Rotate {
  Orientation from;
  Orientation to;
};

using Segment = std::variant<Translate, Rotate>;

enum class Strategy { kDown, kLateralNegX, kLateralPosX, kUp };

const char* to_string(Strategy s);
std::optional<Strategy> strategy_from_string(std::string_view s);

/// Chained translational and rotational motion of a held part.
struct Trajectory {
  Pose start;
  std::vector<Segment> segments;
  Strategy strategy = Strategy::kDown;

  Pose end_pose() const;
};

struct CollisionReport {
  std::size_t segment_index = 0;
  Pose sample_pose;
  std::string obstacle_id;
};

struct SweepConfig {
  double step = 0.05;
  double contact_tolerance = 1e-3;
};

/// Signed shortest angular difference `to - from` in (-180, 180].
double angle_delta(double from_deg, double to_deg);

/// 3x3 rotation: yaw about the height axis, then pitch about x.
Eigen::Matrix3d rotation_matrix(const Orientation& o);

Point3 rotate_point(const Point3& p, const Orientation& o);

/// Conservative axis-aligned hull of a box of `half_extents` rotated by the
/// pose orientation and centered at the pose position.
Aabb aabb_at(const Point3& half_extents, const Pose& pose);

/// True iff the boxes overlap by more than `contact_tolerance` on every axis.
bool aabbs_intersect(const Aabb& a, const Aabb& b, double contact_tolerance);

/// Pose at parameter `t` in [0, 1] along a segment, given the orientation in
/// effect when the segment starts.
Pose interpolate(const Segment& seg, const Pose& at_start, double t);

/// Sample count for a segment so consecutive samples are at most `step`
/// apart. Rotations use the arc length traced by the box corner.
std::size_t segment_subdivisions(const Segment& seg, const Point3& half_extents, double step);

/// First collision of the moving box along `path`, in sample order. Among
/// obstacles hit at the same sample the lowest id is reported.
std::optional<CollisionReport> sweep_check(const Point3& moving_half_extents,
                                           const Trajectory& path,
                                           std::span<const Obstacle> obstacles,
                                           const SweepConfig& config = {});

bool is_finite(const Point3& p);

}  // namespace dtwin
