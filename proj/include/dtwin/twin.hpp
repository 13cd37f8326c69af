#pragma once

#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtwin/geom.hpp"
#include "dtwin/error.hpp"
#include "dtwin/items.hpp"

namespace dtwin {

/// Interface coordinates keyed "TypeName.paramName", shared by all parts of
/// a type. Owned by one twin.
class ParamRegistry {
 public:
  static std::string key(std::string_view type_name, std::string_view param);

  /// Re-inserting an equal value is a no-op; a different value throws.
  void add(std::string_view type_name, std::string_view param, const Point3& value);
  const Point3& at(std::string_view type_name, std::string_view param) const;
  bool contains(std::string_view type_name, std::string_view param) const;
  std::size_t size() const { return table_.size(); }

 private:
  std::map<std::string, Point3, std::less<>> table_;
};

struct DigitalPart {
  std::string instance_name;
  std::string type_name;
  std::string color;
  Orientation orientation;
  Point3 half_extents = Point3::Constant(0.5);
  std::optional<Pose> pose;
  std::optional<Pose> target;
  bool assembled = false;
  bool delivered = false;

  Aabb target_box() const { return aabb_at(half_extents, *target); }
};

struct Connection {
  std::size_t part1;
  std::size_t part2;
  std::string connection_point1;
  std::string connection_point2;
};

struct DigitalTwin {
  std::vector<DigitalPart> parts;
  std::vector<Connection> connections;
  ParamRegistry registry;
  std::optional<std::size_t> base_part;

  std::optional<std::size_t> find(std::string_view instance_name) const;
  std::size_t degree(std::size_t part) const;
  bool resolved() const;
};

using TypeExtents = std::map<std::string, Point3, std::less<>>;

DigitalTwin build_twin(const items::ItemStream& stream, const TypeExtents& extents);

/// Connection point in world coordinates at the part's current pose.
Point3 get_connection_point(const DigitalTwin& twin, const DigitalPart& part, std::string_view name);

std::size_t select_base_part(const DigitalTwin& twin);

/// Places the base part at `base_position` and propagates poses across
/// connections. Stores each result in `target` (and `pose`), then clears the
/// assembled flags.
std::vector<Pose> resolve_assembly(DigitalTwin& twin, const Point3& base_position = Point3::Zero());

/// One step of the lowest-part-first sequence heuristic. Marks nothing.
std::optional<std::size_t> next_unassembled_part(const DigitalTwin& twin);

struct PlanConfig {
  SweepConfig sweep;
  double safe_clearance = 2.0;
  double lateral_margin = 0.5;
  double under_margin = 0.5;
};

struct PlanRequest {
  Pose start;                       // where the held part begins
  std::set<Strategy> excluded;      // strategies already known to fail
  PlanConfig config;
};

/// Thrown when no candidate strategy is collision-free.
class PlanningFailure : public Error {
 public:
  PlanningFailure(std::string part, std::vector<std::pair<Strategy, CollisionReport>> reports);

  const std::string& part() const { return part_; }
  const std::vector<std::pair<Strategy, CollisionReport>>& reports() const { return reports_; }

 private:
  std::string part_;
  std::vector<std::pair<Strategy, CollisionReport>> reports_;
};

/// Candidate order: down, lateral -x, lateral +x, up; up moves to the front
/// when the part mates to the underside of an assembled partner.
std::vector<Strategy> strategy_order(const DigitalTwin& twin, std::size_t part);

/// Highest point of the resolved assembly.
double assembly_top(const DigitalTwin& twin);

Trajectory candidate_trajectory(const DigitalTwin& twin, std::size_t part, Strategy strategy,
                                const Pose& start, const PlanConfig& config);

Trajectory plan_assembly_path(const DigitalTwin& twin, std::size_t part, std::span<const Obstacle> obstacles,
                              const PlanRequest& request);

/// Target boxes of assembled parts, excluding `moving`.
std::vector<Obstacle> assembled_obstacles(const DigitalTwin& twin, std::optional<std::size_t> moving = {});

/// |p1 - p2| for every connection at target poses.
std::vector<double> connection_residuals(const DigitalTwin& twin);

}  // namespace dtwin
