#include "dtwin/twin.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <deque>
#include <limits>
#include <sstream>

#include "dtwin/error.hpp"

namespace dtwin {

namespace {

constexpr double kHeightEps = 1e-6;

double to_real(const std::string& s) {
  double v = 0.0;
  std::from_chars(s.data(), s.data() + s.size(), v);
  return v;
}

Point3 world_point(const DigitalTwin& twin, const DigitalPart& part, const Pose& at, std::string_view name) {
  return at.position + rotate_point(twin.registry.at(part.type_name, name), at.orientation);
}

void push_translate(std::vector<Segment>& segs, Point3& cursor, const Point3& to) {
  if ((to - cursor).norm() == 0.0) return;
  segs.push_back(Translate{cursor, to});
  cursor = to;
}

}  // namespace

// --- ParamRegistry -------------------------------------------------------

std::string ParamRegistry::key(std::string_view type_name, std::string_view param) {
  std::string k(type_name);
  k += '.';
  k += param;
  return k;
}

void ParamRegistry::add(std::string_view type_name, std::string_view param, const Point3& value) {
  auto [it, inserted] = table_.emplace(key(type_name, param), value);
  if (!inserted && it->second != value) {
    throw Error(ErrorCode::kDuplicateParameter, "parameter " + it->first + " redefined with a different value");
  }
}

const Point3& ParamRegistry::at(std::string_view type_name, std::string_view param) const {
  auto it = table_.find(key(type_name, param));
  if (it == table_.end()) {
    throw Error(ErrorCode::kMissingParameter, "no parameter " + key(type_name, param));
  }
  return it->second;
}

bool ParamRegistry::contains(std::string_view type_name, std::string_view param) const {
  return table_.find(key(type_name, param)) != table_.end();
}

// --- DigitalTwin ---------------------------------------------------------

std::optional<std::size_t> DigitalTwin::find(std::string_view instance_name) const {
  for (std::size_t i = 0; i < parts.size(); ++i) {
    if (parts[i].instance_name == instance_name) return i;
  }
  return std::nullopt;
}

std::size_t DigitalTwin::degree(std::size_t part) const {
  return static_cast<std::size_t>(std::count_if(connections.begin(), connections.end(), [&](const Connection& c) {
    return c.part1 == part || c.part2 == part;
  }));
}

bool DigitalTwin::resolved() const {
  return std::all_of(parts.begin(), parts.end(), [](const DigitalPart& p) { return p.target.has_value(); });
}

DigitalTwin build_twin(const items::ItemStream& stream, const TypeExtents& extents) {
  items::check_stream(stream);
  DigitalTwin twin;
  for (const auto& it : stream.items) {
    const auto& f = it.fields;
    switch (it.kind) {
      case items::Kind::kParameter:
        twin.registry.add(f[0], f[1], Point3(to_real(f[2]), to_real(f[3]), to_real(f[4])));
        break;
      case items::Kind::kCreate: {
        auto ext = extents.find(f[0]);
        if (ext == extents.end()) {
          throw Error(ErrorCode::kUnknownType, "part '" + f[1] + "' has type '" + f[0] + "' with no geometry");
        }
        DigitalPart part;
        part.type_name = f[0];
        part.instance_name = f[1];
        part.color = f[2];
        part.orientation = *items::parse_orientation(f[3]);
        part.half_extents = ext->second;
        twin.parts.push_back(std::move(part));
        break;
      }
      case items::Kind::kConnection: {
        auto a = twin.find(f[0]);
        auto b = twin.find(f[2]);
        if (!a || !b) throw Error(ErrorCode::kBadReference, "connection references an unknown instance");
        if (*a == *b) throw Error(ErrorCode::kBadReference, "part '" + f[0] + "' connected to itself");
        twin.connections.push_back(Connection{*a, *b, f[1], f[3]});
        break;
      }
    }
  }

  // Connectivity over the undirected connection graph.
  std::vector<int> component(twin.parts.size(), -1);
  int count = 0;
  for (std::size_t seed = 0; seed < twin.parts.size(); ++seed) {
    if (component[seed] >= 0) continue;
    std::deque<std::size_t> frontier{seed};
    component[seed] = count;
    while (!frontier.empty()) {
      const std::size_t cur = frontier.front();
      frontier.pop_front();
      for (const auto& c : twin.connections) {
        for (auto [from, to] : {std::pair{c.part1, c.part2}, std::pair{c.part2, c.part1}}) {
          if (from == cur && component[to] < 0) {
            component[to] = count;
            frontier.push_back(to);
          }
        }
      }
    }
    ++count;
  }
  if (count > 1) {
    std::ostringstream msg;
    msg << "connection graph has " << count << " components:";
    for (int k = 0; k < count; ++k) {
      msg << " {";
      bool first = true;
      for (std::size_t i = 0; i < twin.parts.size(); ++i) {
        if (component[i] != k) continue;
        msg << (first ? "" : ",") << twin.parts[i].instance_name;
        first = false;
      }
      msg << "}";
    }
    throw Error(ErrorCode::kConnectivity, msg.str());
  }
  return twin;
}

Point3 get_connection_point(const DigitalTwin& twin, const DigitalPart& part, std::string_view name) {
  if (!part.pose) throw Error(ErrorCode::kInvalidGeometry, "part '" + part.instance_name + "' has no pose");
  return world_point(twin, part, *part.pose, name);
}

std::size_t select_base_part(const DigitalTwin& twin) {
  if (twin.parts.empty()) throw Error(ErrorCode::kEmptyProduct, "product has no parts");
  std::size_t best = 0;
  for (std::size_t i = 1; i < twin.parts.size(); ++i) {
    const auto di = twin.degree(i);
    const auto db = twin.degree(best);
    if (di > db || (di == db && twin.parts[i].instance_name < twin.parts[best].instance_name)) best = i;
  }
  return best;
}

std::vector<Pose> resolve_assembly(DigitalTwin& twin, const Point3& base_position) {
  const std::size_t base = select_base_part(twin);
  twin.base_part = base;
  for (auto& p : twin.parts) {
    p.assembled = false;
    p.pose.reset();
  }
  DigitalPart& b = twin.parts[base];
  b.pose = Pose{base_position, b.orientation};
  b.assembled = true;

  auto attach = [&](std::size_t fixed, std::string_view fixed_point, std::size_t moving, std::string_view moving_point) {
    DigitalPart& m = twin.parts[moving];
    const Point3 anchor = get_connection_point(twin, twin.parts[fixed], fixed_point);
    m.pose = Pose{anchor - rotate_point(twin.registry.at(m.type_name, moving_point), m.orientation), m.orientation};
    m.assembled = true;
  };

  bool progressed = true;
  while (progressed) {
    progressed = false;
    for (const auto& c : twin.connections) {
      const bool a1 = twin.parts[c.part1].assembled;
      const bool a2 = twin.parts[c.part2].assembled;
      if (a1 && !a2) {
        attach(c.part1, c.connection_point1, c.part2, c.connection_point2);
      } else if (a2 && !a1) {
        attach(c.part2, c.connection_point2, c.part1, c.connection_point1);
      } else {
        continue;
      }
      progressed = true;
      break;
    }
  }

  std::vector<Pose> targets;
  targets.reserve(twin.parts.size());
  for (auto& p : twin.parts) {
    if (!p.assembled) {
      throw Error(ErrorCode::kConnectivity, "part '" + p.instance_name + "' is unreachable from the base part");
    }
    p.target = p.pose;
    targets.push_back(*p.target);
  }
  for (auto& p : twin.parts) p.assembled = false;
  return targets;
}

std::optional<std::size_t> next_unassembled_part(const DigitalTwin& twin) {
  double global_min = std::numeric_limits<double>::infinity();
  for (const auto& p : twin.parts) global_min = std::min(global_min, p.target_box().min_height());

  for (std::size_t i = 0; i < twin.parts.size(); ++i) {
    const auto& p = twin.parts[i];
    if (!p.assembled && std::abs(p.target_box().min_height() - global_min) <= kHeightEps) return i;
  }

  std::optional<std::size_t> best;
  double best_height = 0.0;
  for (std::size_t i = 0; i < twin.parts.size(); ++i) {
    const auto& p = twin.parts[i];
    if (p.assembled) continue;
    const bool touches_assembly = std::any_of(twin.connections.begin(), twin.connections.end(), [&](const Connection& c) {
      return (c.part1 == i && twin.parts[c.part2].assembled) || (c.part2 == i && twin.parts[c.part1].assembled);
    });
    if (!touches_assembly) continue;
    const double h = p.target_box().min_height();
    if (!best || h < best_height - 1e-9 ||
        (std::abs(h - best_height) <= 1e-9 && p.instance_name < twin.parts[*best].instance_name)) {
      best = i;
      best_height = h;
    }
  }
  return best;
}

PlanningFailure::PlanningFailure(std::string part, std::vector<std::pair<Strategy, CollisionReport>> reports)
    : Error(ErrorCode::kPlanningFailure,
            [&] {
              std::ostringstream msg;
              msg << "no collision-free trajectory for part '" << part << "'";
              for (const auto& [s, r] : reports) {
                msg << "; " << to_string(s) << " hits " << r.obstacle_id << " in segment " << r.segment_index;
              }
              return msg.str();
            }()),
      part_(std::move(part)),
      reports_(std::move(reports)) {}

std::vector<Strategy> strategy_order(const DigitalTwin& twin, std::size_t part) {
  std::vector<Strategy> order{Strategy::kDown, Strategy::kLateralNegX, Strategy::kLateralPosX, Strategy::kUp};
  for (const auto& c : twin.connections) {
    std::optional<std::pair<std::size_t, std::string>> partner;
    if (c.part1 == part && twin.parts[c.part2].assembled) partner = {c.part2, c.connection_point2};
    if (c.part2 == part && twin.parts[c.part1].assembled) partner = {c.part1, c.connection_point1};
    if (!partner) continue;
    const DigitalPart& p = twin.parts[partner->first];
    const Point3 mate = world_point(twin, p, *p.target, partner->second);
    if (mate.y() < p.target->position.y() - 1e-9) {
      order = {Strategy::kUp, Strategy::kDown, Strategy::kLateralNegX, Strategy::kLateralPosX};
    }
    break;
  }
  return order;
}

double assembly_top(const DigitalTwin& twin) {
  double top = -std::numeric_limits<double>::infinity();
  for (const auto& p : twin.parts) top = std::max(top, p.target_box().max_height());
  return top;
}

Trajectory candidate_trajectory(const DigitalTwin& twin, std::size_t part, Strategy strategy,
                                const Pose& start, const PlanConfig& config) {
  const DigitalPart& p = twin.parts[part];
  const Pose& target = *p.target;
  const Point3 oriented = aabb_at(p.half_extents, Pose{Point3::Zero(), target.orientation}).half_extents;
  const double width = 2.0 * oriented.x();
  const double height = 2.0 * oriented.y();
  const double safe = assembly_top(twin) + config.safe_clearance;
  const double side = 2.0 * width + config.lateral_margin;
  const Point3& t = target.position;

  double approach_x = t.x();
  if (strategy == Strategy::kLateralNegX) approach_x = t.x() - side;
  if (strategy == Strategy::kLateralPosX || strategy == Strategy::kUp) approach_x = t.x() + side;

  Trajectory traj;
  traj.start = start;
  traj.strategy = strategy;
  Point3 cursor = start.position;
  push_translate(traj.segments, cursor, Point3(cursor.x(), safe, cursor.z()));
  push_translate(traj.segments, cursor, Point3(approach_x, safe, t.z()));
  if (!(start.orientation == target.orientation)) {
    traj.segments.push_back(Rotate{start.orientation, target.orientation});
  }
  switch (strategy) {
    case Strategy::kDown:
      break;
    case Strategy::kLateralNegX:
    case Strategy::kLateralPosX:
      push_translate(traj.segments, cursor, Point3(approach_x, t.y(), t.z()));
      break;
    case Strategy::kUp: {
      const double under = t.y() - 2.0 * height - config.under_margin;
      push_translate(traj.segments, cursor, Point3(approach_x, under, t.z()));
      push_translate(traj.segments, cursor, Point3(t.x(), under, t.z()));
      break;
    }
  }
  push_translate(traj.segments, cursor, t);
  return traj;
}

Trajectory plan_assembly_path(const DigitalTwin& twin, std::size_t part, std::span<const Obstacle> obstacles,
                              const PlanRequest& request) {
  const DigitalPart& p = twin.parts[part];
  if (!p.target) throw Error(ErrorCode::kInvalidGeometry, "part '" + p.instance_name + "' has no resolved target");
  std::vector<std::pair<Strategy, CollisionReport>> reports;
  for (Strategy s : strategy_order(twin, part)) {
    if (request.excluded.count(s)) continue;
    Trajectory traj = candidate_trajectory(twin, part, s, request.start, request.config);
    auto hit = sweep_check(p.half_extents, traj, obstacles, request.config.sweep);
    if (!hit) return traj;
    reports.emplace_back(s, *hit);
  }
  throw PlanningFailure(p.instance_name, std::move(reports));
}

std::vector<Obstacle> assembled_obstacles(const DigitalTwin& twin, std::optional<std::size_t> moving) {
  std::vector<Obstacle> out;
  for (std::size_t i = 0; i < twin.parts.size(); ++i) {
    const auto& p = twin.parts[i];
    if (p.assembled && i != moving) out.push_back(Obstacle{p.instance_name, p.target_box()});
  }
  return out;
}

std::vector<double> connection_residuals(const DigitalTwin& twin) {
  std::vector<double> out;
  out.reserve(twin.connections.size());
  for (const auto& c : twin.connections) {
    const auto& a = twin.parts[c.part1];
    const auto& b = twin.parts[c.part2];
    out.push_back((world_point(twin, a, *a.target, c.connection_point1) -
                   world_point(twin, b, *b.target, c.connection_point2))
                      .norm());
  }
  return out;
}

}  // namespace dtwin
