#include "dtwin/plan_document.hpp"

#include <json.hpp>

namespace dtwin {

namespace {

using ojson = nlohmann::ordered_json;

ojson pose_object(const Pose& p) {
  return {{"x", p.position.x()}, {"y", p.position.y()}, {"z", p.position.z()},
          {"yaw", p.orientation.yaw}, {"pitch", p.orientation.pitch}};
}

ojson segment_object(const Segment& seg) {
  if (const auto* t = std::get_if<Translate>(&seg)) {
    return {{"kind", "translate"},
            {"from", {t->from.x(), t->from.y(), t->from.z()}},
            {"to", {t->to.x(), t->to.y(), t->to.z()}}};
  }
  const auto& r = std::get<Rotate>(seg);
  return {{"kind", "rotate"}, {"from", {r.from.yaw, r.from.pitch}}, {"to", {r.to.yaw, r.to.pitch}}};
}

}  // namespace

std::vector<std::string> PlanDocument::sequence() const {
  std::vector<std::string> out;
  for (const auto& s : steps) out.push_back(s.part);
  return out;
}

std::string PlanDocument::to_json() const {
  ojson j;
  j["sequence"] = sequence();
  j["parts"] = ojson::array();
  for (const auto& s : steps) {
    ojson segs = ojson::array();
    for (const auto& seg : s.trajectory.segments) segs.push_back(segment_object(seg));
    j["parts"].push_back({{"name", s.part},
                          {"type", s.type_name},
                          {"target", pose_object(s.target)},
                          {"strategy", to_string(s.trajectory.strategy)},
                          {"start", pose_object(s.trajectory.start)},
                          {"segments", std::move(segs)}});
  }
  j["residuals"] = residuals;
  return j.dump(2) + "\n";
}

PlanDocument make_plan(DigitalTwin twin, const CellGeometry& geometry) {
  PlanDocument doc;
  if (twin.parts.empty()) return doc;
  if (!twin.resolved()) resolve_assembly(twin);
  const auto statics = geometry.static_obstacles();
  const Pose start{geometry.drop_zone, Orientation()};
  for (const std::size_t idx : assembly_order(twin)) {
    auto obstacles = assembled_obstacles(twin, idx);
    obstacles.insert(obstacles.end(), statics.begin(), statics.end());
    PlanRequest req{start, {}, geometry.planning};
    Trajectory traj = plan_assembly_path(twin, idx, obstacles, req);
    DigitalPart& p = twin.parts[idx];
    doc.steps.push_back(PlannedStep{p.instance_name, p.type_name, *p.target, std::move(traj)});
    p.assembled = true;
  }
  doc.residuals = connection_residuals(twin);
  return doc;
}

}  // namespace dtwin
