#pragma once

#include <deque>
#include <functional>
#include <map>
#include <optional>
#include <set>
#include <string>
#include <vector>

#include "dtwin/geom.hpp"
#include "dtwin/twin.hpp"

namespace dtwin {

struct BufferDef {
  std::string id;
  std::string type_name;
  Point3 position = Point3::Zero();
  double slot_pitch = 1.0;
  int initial_count = 0;
};

/// Everything the cell knows about its own hardware, loaded from the JSON
/// geometry manifest.
struct CellGeometry {
  TypeExtents type_extents;
  std::vector<BufferDef> buffers;
  Point3 station_position = Point3::Zero();
  double surface_height = 0.0;
  Point3 station_half_extents{10.0, 0.5, 10.0};
  Pose robot_home;
  double arm_linear_speed = 0.1;    // units per tick
  double arm_angular_speed = 5.0;   // degrees per tick
  double mobile_speed = 0.2;        // units per tick
  Point3 drop_zone = Point3::Zero();
  Point3 arm_envelope_half_extents{0.15, 0.75, 0.15};
  PlanConfig planning;
  long tick_budget = 1'000'000;

  static CellGeometry from_json(std::string_view text);
  std::string to_json() const;

  /// Applies a `key=value` override; throws Error(kManifest) on unknown keys.
  void set_override(std::string_view key, double value);

  std::vector<Obstacle> static_obstacles() const;
};

struct Buffer {
  std::string id;
  std::string type_name;
  std::deque<Point3> slots;  // pick positions, front first
};

Buffer stock_buffer(const BufferDef& def);

/// Pops the next pick position if the buffer holds `type_name`.
std::optional<Point3> buffer_give_part(Buffer& buffer, std::string_view type_name);

enum class Mode { kVirtual, kPhysical, kBoth };

const char* to_string(Mode m);
std::optional<Mode> mode_from_string(std::string_view s);

struct TraceEvent {
  long tick = 0;
  std::string entity;
  std::string event;
  std::optional<std::string> part;
  std::optional<Pose> pose;
  std::optional<std::string> detail;

  /// One JSON object, fields in fixed order, absent fields omitted.
  std::string to_line() const;
};

enum class MobilePhase { kIdle, kToBuffer, kPicking, kToStation, kDropping };

struct MobileRobot {
  Point3 position = Point3::Zero();
  std::deque<std::size_t> queue;  // part indices in assembly order
  std::optional<std::size_t> carried;
  MobilePhase phase = MobilePhase::kIdle;
  Point3 goal = Point3::Zero();
  std::optional<std::size_t> buffer;
  bool halted = false;
};

enum class MotionPurpose { kInsert, kRetract, kTransit };

struct Motion {
  Trajectory trajectory;
  MotionPurpose purpose = MotionPurpose::kInsert;
  std::optional<std::size_t> part;  // held while moving
  std::size_t segment = 0;
  double progress = 0.0;            // distance or degrees into the segment
  Pose segment_start;
  bool announced = false;           // move/rotate event for this segment emitted
};

/// Three prismatic axes plus yaw and pitch. The end-effector pose is the
/// held part's center.
struct RobotArm {
  Pose effector;
  std::optional<std::size_t> held;
  std::optional<Motion> motion;
  std::optional<Trajectory> pending;  // insertion to start when `motion` ends
};

struct SimState {
  long tick = 0;
  Mode mode = Mode::kVirtual;
  DigitalTwin twin;
  CellGeometry geometry;
  RobotArm arm;
  MobileRobot mobile;
  std::vector<Buffer> buffers;
  std::optional<std::size_t> drop_zone_occupant;
  std::map<std::size_t, Trajectory> recorded;         // last successful insertion per part
  std::map<std::size_t, std::set<Strategy>> failed;   // strategies that collided in execution
  std::vector<std::size_t> connect_order;
  bool finished = false;
  bool failure = false;
  std::string failure_reason;
};

/// Fresh state over a resolved twin: arm at home, buffers stocked, all parts
/// unassembled and undelivered.
SimState make_state(DigitalTwin twin, const CellGeometry& geometry, Mode mode);

std::vector<TraceEvent> mobile_step(SimState& state);

std::vector<TraceEvent> tick(SimState& state);

/// Part order produced by repeatedly applying next_unassembled_part.
std::vector<std::size_t> assembly_order(DigitalTwin twin);

/// Boxes the arm sweeps at `pose` while holding `part`: the part itself and
/// the gantry column above it.
std::pair<Aabb, Aabb> arm_envelope(const DigitalPart& part, const Pose& pose, const Point3& column_half_extents);

struct SimResult {
  std::vector<TraceEvent> trace;
  bool ok = true;
  std::string failure;
  std::vector<std::string> virtual_sequence;
  std::vector<std::string> physical_sequence;
  std::map<std::string, Pose> virtual_final;
  std::map<std::string, Pose> physical_final;
  std::map<std::string, Strategy> strategies;
};

using SimObserver = std::function<void(const SimState&, const std::vector<TraceEvent>&)>;

SimResult run_simulation(DigitalTwin twin, const CellGeometry& geometry, Mode mode,
                         const SimObserver& observer = {});

std::string snapshot_json(const SimState& state);

std::string pose_json(const Pose& p);

}  // namespace dtwin
