#include "dtwin/cell.hpp"

#include <algorithm>
#include <cmath>

#include <json.hpp>

#include "dtwin/error.hpp"

namespace dtwin {

namespace {

using ojson = nlohmann::ordered_json;

Point3 read_point(const nlohmann::json& j, const char* what) {
  if (!j.is_array() || j.size() != 3) {
    throw Error(ErrorCode::kManifest, std::string(what) + " must be an [x, y, z] array");
  }
  Point3 p(j[0].get<double>(), j[1].get<double>(), j[2].get<double>());
  if (!p.allFinite()) throw Error(ErrorCode::kManifest, std::string(what) + " is not finite");
  return p;
}

ojson point_json(const Point3& p) { return ojson::array({p.x(), p.y(), p.z()}); }

ojson pose_object(const Pose& p) {
  ojson j;
  j["x"] = p.position.x();
  j["y"] = p.position.y();
  j["z"] = p.position.z();
  j["yaw"] = p.orientation.yaw;
  j["pitch"] = p.orientation.pitch;
  return j;
}

void require_positive(const Point3& p, const std::string& what) {
  if ((p.array() <= 0.0).any()) throw Error(ErrorCode::kManifest, what + " must be positive on every axis");
}

TraceEvent make_event(const SimState& s, std::string entity, std::string event) {
  TraceEvent e;
  e.tick = s.tick;
  e.entity = std::move(entity);
  e.event = std::move(event);
  return e;
}

const std::string& name_of(const SimState& s, std::size_t part) { return s.twin.parts[part].instance_name; }

Pose drop_pose(const SimState& s) { return Pose{s.geometry.drop_zone, Orientation()}; }

std::vector<Obstacle> current_obstacles(const SimState& s, std::size_t moving) {
  auto obs = assembled_obstacles(s.twin, moving);
  for (auto& o : s.geometry.static_obstacles()) obs.push_back(std::move(o));
  return obs;
}

double segment_length(const Segment& seg) {
  if (const auto* t = std::get_if<Translate>(&seg)) return (t->to - t->from).norm();
  const auto& r = std::get<Rotate>(seg);
  return std::max(std::abs(angle_delta(r.from.yaw, r.to.yaw)), std::abs(angle_delta(r.from.pitch, r.to.pitch)));
}

Segment reversed(const Segment& seg) {
  if (const auto* t = std::get_if<Translate>(&seg)) return Translate{t->to, t->from};
  const auto& r = std::get<Rotate>(seg);
  return Rotate{r.to, r.from};
}

/// Path back to the trajectory start from the current point of `m`.
Trajectory retrace(const Motion& m, const Pose& current) {
  std::vector<Segment> forward(m.trajectory.segments.begin(),
                               m.trajectory.segments.begin() + static_cast<long>(m.segment));
  if (m.segment < m.trajectory.segments.size() && m.progress > 0.0) {
    const Segment& seg = m.trajectory.segments[m.segment];
    if (const auto* t = std::get_if<Translate>(&seg)) {
      forward.push_back(Translate{t->from, current.position});
    } else {
      forward.push_back(Rotate{std::get<Rotate>(seg).from, current.orientation});
    }
  }
  Trajectory back;
  back.start = current;
  back.strategy = m.trajectory.strategy;
  for (auto it = forward.rbegin(); it != forward.rend(); ++it) back.segments.push_back(reversed(*it));
  return back;
}

std::string purpose_detail(const Motion& m) {
  switch (m.purpose) {
    case MotionPurpose::kInsert: return std::string("insert:") + to_string(m.trajectory.strategy);
    case MotionPurpose::kRetract: return "retract";
    case MotionPurpose::kTransit: return "transit";
  }
  return "";
}

void fail(SimState& s, std::vector<TraceEvent>& ev, const std::string& reason) {
  auto e = make_event(s, "twin", "fail");
  e.detail = reason;
  ev.push_back(std::move(e));
  s.finished = true;
  s.failure = true;
  s.failure_reason = reason;
}

void start_motion(SimState& s, Trajectory traj, MotionPurpose purpose, std::optional<std::size_t> part) {
  Motion m;
  m.segment_start = traj.start;
  m.trajectory = std::move(traj);
  m.purpose = purpose;
  m.part = part;
  s.arm.held = part;
  s.arm.motion = std::move(m);
}

// Recorded trajectory if it is still clear, otherwise a fresh plan that
// avoids strategies already seen to collide for this part.
Trajectory obtain_trajectory(SimState& s, std::size_t part, std::vector<TraceEvent>& ev) {
  const auto obstacles = current_obstacles(s, part);
  const DigitalPart& p = s.twin.parts[part];
  if (auto rec = s.recorded.find(part); rec != s.recorded.end()) {
    if (!sweep_check(p.half_extents, rec->second, obstacles, s.geometry.planning.sweep)) return rec->second;
    auto e = make_event(s, "twin", "replan");
    e.part = p.instance_name;
    e.detail = "recorded trajectory collides";
    ev.push_back(std::move(e));
  }
  PlanRequest req{drop_pose(s), s.failed[part], s.geometry.planning};
  return plan_assembly_path(s.twin, part, obstacles, req);
}

void finish_motion(SimState& s, std::vector<TraceEvent>& ev) {
  Motion m = std::move(*s.arm.motion);
  s.arm.motion.reset();
  if (m.purpose == MotionPurpose::kInsert) {
    const std::size_t idx = *m.part;
    DigitalPart& p = s.twin.parts[idx];
    p.assembled = true;
    p.pose = p.target;
    auto e = make_event(s, "arm", "connect");
    e.part = p.instance_name;
    e.pose = *p.target;
    e.detail = to_string(m.trajectory.strategy);
    ev.push_back(std::move(e));
    s.recorded[idx] = m.trajectory;
    s.connect_order.push_back(idx);
    s.arm.held.reset();
    start_motion(s, retrace(m, s.arm.effector), MotionPurpose::kRetract, std::nullopt);
    return;
  }
  s.arm.held.reset();
  if (s.arm.pending) {
    Trajectory next = std::move(*s.arm.pending);
    s.arm.pending.reset();
    // The pending insertion belongs to the part waiting at the drop zone or
    // still held after a retreat.
    const std::size_t part = m.part ? *m.part : *s.drop_zone_occupant;
    if (!m.part) s.drop_zone_occupant.reset();
    start_motion(s, std::move(next), MotionPurpose::kInsert, part);
  }
}

std::optional<std::pair<std::string, std::string>> envelope_hit(const SimState& s, std::size_t part, const Pose& pose) {
  const auto [part_box, column] = arm_envelope(s.twin.parts[part], pose, s.geometry.arm_envelope_half_extents);
  const double tol = s.geometry.planning.sweep.contact_tolerance;
  std::optional<std::pair<std::string, std::string>> hit;
  for (const auto& ob : current_obstacles(s, part)) {
    const char* by = aabbs_intersect(part_box, ob.box, tol) ? "part" : aabbs_intersect(column, ob.box, tol) ? "arm" : nullptr;
    if (by && (!hit || ob.id < hit->first)) hit = std::pair{ob.id, std::string(by)};
  }
  return hit;
}

void handle_collision(SimState& s, std::vector<TraceEvent>& ev, const std::string& obstacle, const std::string& by) {
  const Motion& m = *s.arm.motion;
  const std::size_t idx = *m.part;
  s.failed[idx].insert(m.trajectory.strategy);
  auto c = make_event(s, "arm", "collision");
  c.part = name_of(s, idx);
  c.pose = s.arm.effector;
  c.detail = std::string("strategy=") + to_string(m.trajectory.strategy) + " obstacle=" + obstacle + " by=" + by;
  ev.push_back(std::move(c));

  Trajectory back = retrace(m, s.arm.effector);
  try {
    PlanRequest req{drop_pose(s), s.failed[idx], s.geometry.planning};
    Trajectory next = plan_assembly_path(s.twin, idx, current_obstacles(s, idx), req);
    auto r = make_event(s, "twin", "replan");
    r.part = name_of(s, idx);
    r.detail = std::string("strategy=") + to_string(next.strategy);
    ev.push_back(std::move(r));
    s.arm.pending = std::move(next);
  } catch (const PlanningFailure& err) {
    fail(s, ev, err.what());
    return;
  }
  start_motion(s, std::move(back), MotionPurpose::kRetract, idx);
}

void advance_arm(SimState& s, std::vector<TraceEvent>& ev) {
  Motion& m = *s.arm.motion;
  if (m.segment < m.trajectory.segments.size()) {
    const Segment& seg = m.trajectory.segments[m.segment];
    if (!m.announced) {
      auto e = make_event(s, "arm", std::holds_alternative<Translate>(seg) ? "move" : "rotate");
      if (m.part) e.part = name_of(s, *m.part);
      e.pose = interpolate(seg, m.segment_start, 1.0);
      e.detail = purpose_detail(m);
      ev.push_back(std::move(e));
      m.announced = true;
    }
    const double length = segment_length(seg);
    const double speed = std::holds_alternative<Translate>(seg) ? s.geometry.arm_linear_speed : s.geometry.arm_angular_speed;
    m.progress = std::min(length, m.progress + speed);
    const bool done = m.progress >= length;
    const Pose pose = interpolate(seg, m.segment_start, done ? 1.0 : m.progress / length);
    s.arm.effector = pose;
    if (m.part) s.twin.parts[*m.part].pose = pose;
    if (done) {
      ++m.segment;
      m.progress = 0.0;
      m.announced = false;
      m.segment_start = pose;
    }
    if (m.purpose == MotionPurpose::kInsert && s.mode == Mode::kVirtual) {
      if (auto hit = envelope_hit(s, *m.part, pose)) {
        handle_collision(s, ev, hit->first, hit->second);
        return;
      }
    }
  }
  if (s.arm.motion && s.arm.motion->segment >= s.arm.motion->trajectory.segments.size()) finish_motion(s, ev);
}

void start_next(SimState& s, std::vector<TraceEvent>& ev) {
  auto next = next_unassembled_part(s.twin);
  if (!next) {
    const bool complete = std::all_of(s.twin.parts.begin(), s.twin.parts.end(), [](const auto& p) { return p.assembled; });
    if (!complete) {
      fail(s, ev, "no unassembled part is reachable from the assembly");
      return;
    }
    auto e = make_event(s, "twin", "done");
    e.detail = to_string(s.mode);
    ev.push_back(std::move(e));
    s.finished = true;
    return;
  }
  const std::size_t idx = *next;
  DigitalPart& part = s.twin.parts[idx];
  if (s.mode == Mode::kPhysical && !part.delivered) {
    auto e = make_event(s, "arm", "paused");
    e.part = part.instance_name;
    e.detail = "awaiting delivery";
    ev.push_back(std::move(e));
    return;
  }
  if (s.mode == Mode::kVirtual) part.pose = drop_pose(s);

  Trajectory traj;
  try {
    traj = obtain_trajectory(s, idx, ev);
  } catch (const PlanningFailure& err) {
    fail(s, ev, err.what());
    return;
  }

  const Pose start = drop_pose(s);
  if (s.arm.effector == start) {
    if (s.mode == Mode::kPhysical) s.drop_zone_occupant.reset();
    start_motion(s, std::move(traj), MotionPurpose::kInsert, idx);
    return;
  }
  // Travel empty to the drop zone first; the part waits there.
  Trajectory transit;
  transit.start = s.arm.effector;
  if (s.arm.effector.position != start.position) transit.segments.push_back(Translate{s.arm.effector.position, start.position});
  if (!(s.arm.effector.orientation == start.orientation)) transit.segments.push_back(Rotate{s.arm.effector.orientation, start.orientation});
  s.drop_zone_occupant = idx;
  s.arm.pending = std::move(traj);
  start_motion(s, std::move(transit), MotionPurpose::kTransit, std::nullopt);
}

bool step_toward(Point3& pos, const Point3& goal, double speed) {
  const Point3 d = goal - pos;
  const double dist = d.norm();
  if (dist <= speed) {
    pos = goal;
    return true;
  }
  pos += d * (speed / dist);
  return false;
}

}  // namespace

// --- geometry manifest ---------------------------------------------------

CellGeometry CellGeometry::from_json(std::string_view text) {
  nlohmann::json j;
  try {
    j = nlohmann::json::parse(text);
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::kManifest, std::string("geometry manifest: ") + e.what());
  }
  CellGeometry g;
  try {
    for (const auto& [type, ext] : j.at("types").items()) {
      g.type_extents[type] = read_point(ext, "type extents");
      require_positive(g.type_extents[type], "extents of " + type);
    }
    for (const auto& b : j.value("buffers", nlohmann::json::array())) {
      BufferDef def;
      def.id = b.at("id").get<std::string>();
      def.type_name = b.at("type").get<std::string>();
      def.position = read_point(b.at("position"), "buffer position");
      def.slot_pitch = b.value("slot_pitch", 1.0);
      def.initial_count = b.value("count", 0);
      if (def.initial_count < 0) throw Error(ErrorCode::kManifest, "buffer " + def.id + " has negative count");
      g.buffers.push_back(std::move(def));
    }
    if (j.contains("station")) {
      const auto& st = j["station"];
      if (st.contains("position")) g.station_position = read_point(st["position"], "station position");
      g.surface_height = st.value("surface_height", g.surface_height);
      if (st.contains("half_extents")) g.station_half_extents = read_point(st["half_extents"], "station extents");
      require_positive(g.station_half_extents, "station extents");
    }
    if (j.contains("robot_home")) {
      const auto& h = j["robot_home"];
      g.robot_home.position = read_point(h.at("position"), "robot home");
      g.robot_home.orientation = Orientation(h.value("yaw", 0.0), h.value("pitch", 0.0));
    }
    if (j.contains("speeds")) {
      const auto& sp = j["speeds"];
      g.arm_linear_speed = sp.value("arm_linear", g.arm_linear_speed);
      g.arm_angular_speed = sp.value("arm_angular", g.arm_angular_speed);
      g.mobile_speed = sp.value("mobile", g.mobile_speed);
    }
    g.drop_zone = read_point(j.at("drop_zone"), "drop zone");
    if (j.contains("arm_envelope")) g.arm_envelope_half_extents = read_point(j["arm_envelope"], "arm envelope");
    require_positive(g.arm_envelope_half_extents, "arm envelope");
    if (j.contains("planning")) {
      const auto& pl = j["planning"];
      g.planning.sweep.step = pl.value("sweep_step", g.planning.sweep.step);
      g.planning.sweep.contact_tolerance = pl.value("contact_tolerance", g.planning.sweep.contact_tolerance);
      g.planning.safe_clearance = pl.value("safe_clearance", g.planning.safe_clearance);
      g.planning.lateral_margin = pl.value("lateral_margin", g.planning.lateral_margin);
      g.planning.under_margin = pl.value("under_margin", g.planning.under_margin);
    }
    g.tick_budget = j.value("tick_budget", g.tick_budget);
  } catch (const nlohmann::json::exception& e) {
    throw Error(ErrorCode::kManifest, std::string("geometry manifest: ") + e.what());
  }
  if (g.arm_linear_speed <= 0 || g.arm_angular_speed <= 0 || g.mobile_speed <= 0) {
    throw Error(ErrorCode::kManifest, "speeds must be positive");
  }
  if (g.planning.sweep.step <= 0 || g.planning.sweep.contact_tolerance < 0 || g.tick_budget <= 0) {
    throw Error(ErrorCode::kManifest, "sweep step and tick budget must be positive, tolerance non-negative");
  }
  return g;
}

std::string CellGeometry::to_json() const {
  ojson j;
  ojson types = ojson::object();
  for (const auto& [t, e] : type_extents) types[t] = point_json(e);
  j["types"] = types;
  j["buffers"] = ojson::array();
  for (const auto& b : buffers) {
    j["buffers"].push_back({{"id", b.id}, {"type", b.type_name}, {"position", point_json(b.position)},
                            {"slot_pitch", b.slot_pitch}, {"count", b.initial_count}});
  }
  j["station"] = {{"position", point_json(station_position)}, {"surface_height", surface_height},
                  {"half_extents", point_json(station_half_extents)}};
  j["robot_home"] = {{"position", point_json(robot_home.position)}, {"yaw", robot_home.orientation.yaw},
                     {"pitch", robot_home.orientation.pitch}};
  j["speeds"] = {{"arm_linear", arm_linear_speed}, {"arm_angular", arm_angular_speed}, {"mobile", mobile_speed}};
  j["drop_zone"] = point_json(drop_zone);
  j["arm_envelope"] = point_json(arm_envelope_half_extents);
  j["planning"] = {{"sweep_step", planning.sweep.step}, {"contact_tolerance", planning.sweep.contact_tolerance},
                   {"safe_clearance", planning.safe_clearance}, {"lateral_margin", planning.lateral_margin},
                   {"under_margin", planning.under_margin}};
  j["tick_budget"] = tick_budget;
  return j.dump(2) + "\n";
}

void CellGeometry::set_override(std::string_view key, double value) {
  if (key == "sweep_step") planning.sweep.step = value;
  else if (key == "contact_tolerance") planning.sweep.contact_tolerance = value;
  else if (key == "safe_clearance") planning.safe_clearance = value;
  else if (key == "lateral_margin") planning.lateral_margin = value;
  else if (key == "under_margin") planning.under_margin = value;
  else if (key == "arm_linear_speed") arm_linear_speed = value;
  else if (key == "arm_angular_speed") arm_angular_speed = value;
  else if (key == "mobile_speed") mobile_speed = value;
  else if (key == "tick_budget") tick_budget = static_cast<long>(value);
  else throw Error(ErrorCode::kManifest, "unknown setting '" + std::string(key) + "'");
  if (value <= 0 && key != "contact_tolerance") {
    throw Error(ErrorCode::kManifest, std::string(key) + " must be positive");
  }
  if (value < 0) throw Error(ErrorCode::kManifest, "contact_tolerance must be non-negative");
}

std::vector<Obstacle> CellGeometry::static_obstacles() const {
  Point3 center = station_position;
  center.y() = surface_height - station_half_extents.y();
  return {Obstacle{"station", Aabb{center, station_half_extents}}};
}

// --- resources -----------------------------------------------------------

Buffer stock_buffer(const BufferDef& def) {
  Buffer b{def.id, def.type_name, {}};
  for (int i = 0; i < def.initial_count; ++i) {
    b.slots.push_back(def.position + Point3(def.slot_pitch * i, 0.0, 0.0));
  }
  return b;
}

std::optional<Point3> buffer_give_part(Buffer& buffer, std::string_view type_name) {
  if (buffer.type_name != type_name || buffer.slots.empty()) return std::nullopt;
  Point3 p = buffer.slots.front();
  buffer.slots.pop_front();
  return p;
}

const char* to_string(Mode m) {
  switch (m) {
    case Mode::kVirtual: return "virtual";
    case Mode::kPhysical: return "physical";
    case Mode::kBoth: return "both";
  }
  return "?";
}

std::optional<Mode> mode_from_string(std::string_view s) {
  for (auto m : {Mode::kVirtual, Mode::kPhysical, Mode::kBoth}) {
    if (s == to_string(m)) return m;
  }
  return std::nullopt;
}

std::string TraceEvent::to_line() const {
  ojson j;
  j["tick"] = tick;
  j["entity"] = entity;
  j["event"] = event;
  if (part) j["part"] = *part;
  if (pose) j["pose"] = pose_object(*pose);
  if (detail) j["detail"] = *detail;
  return j.dump();
}

std::pair<Aabb, Aabb> arm_envelope(const DigitalPart& part, const Pose& pose, const Point3& column_half_extents) {
  const Aabb box = aabb_at(part.half_extents, pose);
  Aabb column{box.center + Point3(0.0, box.half_extents.y() + column_half_extents.y(), 0.0), column_half_extents};
  return {box, column};
}

SimState make_state(DigitalTwin twin, const CellGeometry& geometry, Mode mode) {
  if (!twin.resolved()) resolve_assembly(twin);
  SimState s;
  s.mode = mode;
  for (auto& p : twin.parts) {
    p.assembled = false;
    p.delivered = false;
    p.pose.reset();
  }
  s.twin = std::move(twin);
  s.geometry = geometry;
  s.arm.effector = geometry.robot_home;
  s.mobile.position = geometry.drop_zone;
  if (mode == Mode::kPhysical) {
    for (const auto& def : geometry.buffers) s.buffers.push_back(stock_buffer(def));
  }
  return s;
}

// --- stepping ------------------------------------------------------------

std::vector<TraceEvent> mobile_step(SimState& s) {
  std::vector<TraceEvent> ev;
  if (s.mode != Mode::kPhysical || s.mobile.halted) return ev;
  MobileRobot& r = s.mobile;
  auto event = [&](const char* name, std::size_t part, const Point3& at, std::string detail) {
    auto e = make_event(s, "mobile", name);
    e.part = name_of(s, part);
    e.pose = Pose{at, Orientation()};
    e.detail = std::move(detail);
    ev.push_back(std::move(e));
  };
  switch (r.phase) {
    case MobilePhase::kIdle: {
      if (r.queue.empty()) break;
      const std::size_t part = r.queue.front();
      const auto& type = s.twin.parts[part].type_name;
      for (std::size_t b = 0; b < s.buffers.size(); ++b) {
        if (s.buffers[b].type_name == type && !s.buffers[b].slots.empty()) {
          r.buffer = b;
          break;
        }
      }
      if (!r.buffer) {
        auto e = make_event(s, "mobile", "starvation");
        e.part = name_of(s, part);
        e.detail = "no buffer holds type " + type;
        ev.push_back(std::move(e));
        r.halted = true;
        s.failure = true;
        s.failure_reason = "starvation: no buffer holds type " + type;
        break;
      }
      r.goal = s.buffers[*r.buffer].slots.front();
      r.phase = MobilePhase::kToBuffer;
      event("move", part, r.goal, s.buffers[*r.buffer].id);
      break;
    }
    case MobilePhase::kToBuffer:
      if (step_toward(r.position, r.goal, s.geometry.mobile_speed)) r.phase = MobilePhase::kPicking;
      break;
    case MobilePhase::kPicking: {
      const std::size_t part = r.queue.front();
      Buffer& buf = s.buffers[*r.buffer];
      const Point3 at = *buffer_give_part(buf, s.twin.parts[part].type_name);
      r.queue.pop_front();
      r.carried = part;
      r.buffer.reset();
      s.twin.parts[part].pose = Pose{at, Orientation()};
      event("pick", part, at, buf.id);
      r.goal = s.geometry.drop_zone;
      r.phase = MobilePhase::kToStation;
      event("move", part, r.goal, "station");
      break;
    }
    case MobilePhase::kToStation:
      if (step_toward(r.position, r.goal, s.geometry.mobile_speed)) r.phase = MobilePhase::kDropping;
      s.twin.parts[*r.carried].pose = Pose{r.position, Orientation()};
      break;
    case MobilePhase::kDropping: {
      // Single-slot drop zone: wait for the arm to take the previous part.
      if (s.drop_zone_occupant) break;
      const std::size_t part = *r.carried;
      DigitalPart& p = s.twin.parts[part];
      p.delivered = true;
      p.pose = Pose{s.geometry.drop_zone, Orientation()};
      s.drop_zone_occupant = part;
      r.carried.reset();
      r.phase = MobilePhase::kIdle;
      event("drop", part, s.geometry.drop_zone, "station");
      break;
    }
  }
  return ev;
}

std::vector<TraceEvent> tick(SimState& s) {
  if (s.finished) return {};
  ++s.tick;
  std::vector<TraceEvent> ev;
  if (s.arm.motion) advance_arm(s, ev);
  else start_next(s, ev);
  if (s.mode == Mode::kPhysical && !s.finished) {
    auto m = mobile_step(s);
    ev.insert(ev.end(), m.begin(), m.end());
    if (s.mobile.halted) fail(s, ev, s.failure_reason);
  }
  return ev;
}

std::vector<std::size_t> assembly_order(DigitalTwin twin) {
  if (twin.parts.empty()) return {};
  if (!twin.resolved()) resolve_assembly(twin);
  for (auto& p : twin.parts) p.assembled = false;
  std::vector<std::size_t> order;
  while (auto next = next_unassembled_part(twin)) {
    twin.parts[*next].assembled = true;
    order.push_back(*next);
  }
  return order;
}

SimResult run_simulation(DigitalTwin twin, const CellGeometry& geometry, Mode mode, const SimObserver& observer) {
  SimResult result;
  if (twin.parts.empty()) {
    result.trace.push_back(TraceEvent{1, "twin", "done", std::nullopt, std::nullopt, std::string(to_string(mode))});
    return result;
  }
  if (!twin.resolved()) resolve_assembly(twin);

  auto run_phase = [&](SimState& st) {
    while (!st.finished) {
      auto ev = tick(st);
      if (!st.finished && st.tick >= geometry.tick_budget) {
        fail(st, ev, "tick budget of " + std::to_string(geometry.tick_budget) + " exceeded");
      }
      if (observer) observer(st, ev);
      result.trace.insert(result.trace.end(), ev.begin(), ev.end());
    }
    if (st.failure) {
      result.ok = false;
      result.failure = st.failure_reason;
    }
  };
  auto finals = [](const SimState& st, std::vector<std::string>& seq, std::map<std::string, Pose>& poses) {
    for (auto idx : st.connect_order) {
      seq.push_back(st.twin.parts[idx].instance_name);
      poses[st.twin.parts[idx].instance_name] = *st.twin.parts[idx].pose;
    }
  };

  long tick_offset = 0;
  std::map<std::size_t, Trajectory> recorded;
  std::vector<std::size_t> order;
  if (mode != Mode::kPhysical) {
    SimState st = make_state(twin, geometry, Mode::kVirtual);
    run_phase(st);
    finals(st, result.virtual_sequence, result.virtual_final);
    for (const auto& [idx, traj] : st.recorded) result.strategies[st.twin.parts[idx].instance_name] = traj.strategy;
    if (!result.ok || mode == Mode::kVirtual) return result;
    tick_offset = st.tick;
    recorded = st.recorded;
    order = st.connect_order;
  } else {
    order = assembly_order(twin);
  }

  SimState st = make_state(std::move(twin), geometry, Mode::kPhysical);
  st.tick = tick_offset;
  st.recorded = std::move(recorded);
  st.mobile.queue.assign(order.begin(), order.end());
  run_phase(st);
  finals(st, result.physical_sequence, result.physical_final);
  for (const auto& [idx, traj] : st.recorded) result.strategies[st.twin.parts[idx].instance_name] = traj.strategy;
  return result;
}

std::string snapshot_json(const SimState& s) {
  ojson j;
  j["tick"] = s.tick;
  j["mode"] = to_string(s.mode);
  j["parts"] = ojson::array();
  for (const auto& p : s.twin.parts) {
    ojson pj;
    pj["name"] = p.instance_name;
    pj["type"] = p.type_name;
    pj["color"] = p.color;
    pj["assembled"] = p.assembled;
    pj["delivered"] = p.delivered;
    if (p.pose) {
      pj["pose"] = pose_object(*p.pose);
      const Aabb box = aabb_at(p.half_extents, *p.pose);
      pj["aabb"] = {{"center", point_json(box.center)}, {"half_extents", point_json(box.half_extents)}};
    }
    j["parts"].push_back(std::move(pj));
  }
  ojson arm;
  arm["pose"] = pose_object(s.arm.effector);
  if (s.arm.held) arm["held"] = name_of(s, *s.arm.held);
  j["arm"] = arm;
  ojson mob;
  mob["position"] = point_json(s.mobile.position);
  if (s.mobile.carried) mob["carried"] = name_of(s, *s.mobile.carried);
  j["mobile"] = mob;
  j["buffers"] = ojson::array();
  for (const auto& b : s.buffers) j["buffers"].push_back({{"id", b.id}, {"remaining", b.slots.size()}});
  return j.dump(2) + "\n";
}

std::string pose_json(const Pose& p) { return pose_object(p).dump(); }

}  // namespace dtwin
