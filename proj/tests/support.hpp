#pragma once

#include <cmath>
#include <fstream>
#include <random>
#include <queue>
#include <sstream>
#include <string>

#include <Eigen/Geometry>

#include "dtwin/caex.hpp"
#include "dtwin/cell.hpp"
#include "dtwin/items.hpp"
#include "dtwin/twin.hpp"

namespace dtwin::test {

inline std::string fixture_path(const std::string& name) { return std::string(DTWIN_FIXTURES) + "/" + name; }

inline std::string read_fixture(const std::string& name) {
  std::ifstream in(fixture_path(name), std::ios::binary);
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

inline CellGeometry load_geometry(const std::string& name) { return CellGeometry::from_json(read_fixture(name)); }

inline DigitalTwin load_twin(const std::string& aml, const CellGeometry& geometry) {
  return build_twin(items::extract_items(caex::parse_caex(read_fixture(aml))), geometry.type_extents);
}

// Rotation built from Eigen's angle-axis, independent of rotation_matrix().
inline Eigen::Matrix3d oracle_rotation(const Orientation& o) {
  const double k = M_PI / 180.0;
  return (Eigen::AngleAxisd(o.pitch * k, Eigen::Vector3d::UnitX()) *
          Eigen::AngleAxisd(o.yaw * k, Eigen::Vector3d::UnitY()))
      .toRotationMatrix();
}

// Hull of the eight rotated corners.
inline Aabb oracle_aabb(const Point3& half, const Pose& pose) {
  const Eigen::Matrix3d r = oracle_rotation(pose.orientation);
  Point3 lo = Point3::Constant(INFINITY), hi = Point3::Constant(-INFINITY);
  for (int c = 0; c < 8; ++c) {
    const Point3 corner((c & 1 ? 1 : -1) * half.x(), (c & 2 ? 1 : -1) * half.y(), (c & 4 ? 1 : -1) * half.z());
    const Point3 p = r * corner;
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return Aabb{pose.position + (lo + hi) / 2.0, (hi - lo) / 2.0};
}

inline bool oracle_overlap(const Aabb& a, const Aabb& b, double tol) {
  for (int i = 0; i < 3; ++i) {
    if (a.half_extents[i] + b.half_extents[i] - std::abs(a.center[i] - b.center[i]) <= tol) return false;
  }
  return true;
}

// Dense sampling at `step`, linear in position and in each angle.
inline bool oracle_sweep_hits(const Point3& half, const Trajectory& path, std::span<const Obstacle> obstacles,
                              double step, double tol) {
  Pose cur = path.start;
  for (const auto& seg : path.segments) {
    Pose a = cur, b = cur;
    double len = 0.0;
    if (const auto* t = std::get_if<Translate>(&seg)) {
      a.position = t->from;
      b.position = t->to;
      len = (t->to - t->from).norm();
    } else {
      const auto& r = std::get<Rotate>(seg);
      a.orientation = r.from;
      b.orientation = r.to;
      const double dy = std::remainder(r.to.yaw - r.from.yaw, 360.0);
      const double dp = std::remainder(r.to.pitch - r.from.pitch, 360.0);
      len = std::max(std::abs(dy), std::abs(dp)) * M_PI / 180.0 * half.norm();
    }
    const int n = std::max(1, static_cast<int>(std::ceil(len / step)));
    for (int k = 0; k <= n; ++k) {
      const double t = static_cast<double>(k) / n;
      Pose p = a;
      p.position = a.position + (b.position - a.position) * t;
      const double dy = std::remainder(b.orientation.yaw - a.orientation.yaw, 360.0);
      const double dp = std::remainder(b.orientation.pitch - a.orientation.pitch, 360.0);
      p.orientation = Orientation(a.orientation.yaw + dy * t, a.orientation.pitch + dp * t);
      const Aabb box = oracle_aabb(half, p);
      for (const auto& ob : obstacles) {
        if (oracle_overlap(box, ob.box, tol)) return true;
      }
    }
    cur = b;
  }
  return false;
}


// Valid stream with random names, reals and orientations.
inline items::ItemStream random_stream(std::mt19937& rng) {
  using items::Item;
  using items::Kind;
  std::uniform_int_distribution<int> n_types(1, 4), n_params(1, 4), n_parts(0, 8);
  std::uniform_real_distribution<double> real(-1e3, 1e3), angle(0, 360);
  std::uniform_int_distribution<int> scale(-6, 7);
  auto r = [&] { return items::format_real(real(rng) * std::pow(10.0, scale(rng) - 3)); };
  items::ItemStream s;
  std::vector<std::pair<std::string, std::vector<std::string>>> types;
  const int nt = n_types(rng);
  for (int t = 0; t < nt; ++t) {
    std::vector<std::string> params;
    const int np = n_params(rng);
    for (int p = 0; p < np; ++p) {
      params.push_back("p" + std::to_string(p) + "_" + std::to_string(rng() % 100));
      if (std::find(params.begin(), params.end() - 1, params.back()) != params.end() - 1) {
        params.pop_back();
        continue;
      }
      s.items.push_back(Item{Kind::kParameter, {"Type" + std::to_string(t), params.back(), r(), r(), r()}});
    }
    types.emplace_back("Type" + std::to_string(t), params);
  }
  const char* colors[] = {"red", "gray", "light-blue", "#ff00aa"};
  std::vector<std::size_t> part_type;
  const int n = n_parts(rng);
  for (int i = 0; i < n; ++i) {
    part_type.push_back(rng() % types.size());
    s.items.push_back(Item{Kind::kCreate,
                           {types[part_type.back()].first, "part" + std::to_string(i), colors[rng() % 4],
                            items::format_real(Orientation(angle(rng), 0).yaw) + "," +
                                items::format_real(Orientation(angle(rng), 0).yaw)}});
  }
  for (int c = 0; n > 1 && c < n; ++c) {
    const std::size_t a = rng() % n, b = rng() % n;
    const auto& pa = types[part_type[a]].second;
    const auto& pb = types[part_type[b]].second;
    s.items.push_back(Item{Kind::kConnection, {"part" + std::to_string(a), pa[rng() % pa.size()],
                                               "part" + std::to_string(b), pb[rng() % pb.size()]}});
  }
  return s;
}

// Random connection tree: every part has its own type, part i > 0 hangs off a
// random earlier part, and link direction is random.
inline items::ItemStream random_tree(std::mt19937& rng, int parts, bool rotated) {
  using items::Item;
  using items::Kind;
  std::uniform_real_distribution<double> off(-3, 3);
  std::uniform_int_distribution<int> quarter(0, 3);
  auto r = [&] { return items::format_real(std::round(off(rng) * 1000) / 1000); };
  std::vector<Item> params, creates, links;
  for (int i = 0; i < parts; ++i) {
    const std::string type = "T" + std::to_string(i);
    params.push_back(Item{Kind::kParameter, {type, "up", r(), r(), r()}});
    for (int j = i + 1; j < parts; ++j) {
      params.push_back(Item{Kind::kParameter, {type, "c" + std::to_string(j), r(), r(), r()}});
    }
    const std::string o = rotated ? std::to_string(90 * quarter(rng)) + "," + std::to_string(90 * quarter(rng)) : "0,0";
    creates.push_back(Item{Kind::kCreate, {type, "n" + std::to_string(i), "gray", o}});
    if (i == 0) continue;
    const int parent = static_cast<int>(rng() % i);
    std::vector<std::string> a{"n" + std::to_string(parent), "c" + std::to_string(i)};
    std::vector<std::string> b{"n" + std::to_string(i), "up"};
    if (rng() % 2) std::swap(a, b);
    links.push_back(Item{Kind::kConnection, {a[0], a[1], b[0], b[1]}});
  }
  items::ItemStream s;
  for (auto* group : {&params, &creates, &links}) s.items.insert(s.items.end(), group->begin(), group->end());
  return s;
}

// Breadth-first placement from the base by summing rotated offsets.
inline std::vector<Point3> oracle_positions(const DigitalTwin& twin, std::size_t base) {
  std::vector<std::optional<Point3>> pos(twin.parts.size());
  pos[base] = Point3::Zero();
  std::queue<std::size_t> q;
  q.push(base);
  auto local = [&](std::size_t part, const std::string& point) {
    const auto& p = twin.parts[part];
    return Point3(oracle_rotation(p.orientation) * twin.registry.at(p.type_name, point));
  };
  while (!q.empty()) {
    const std::size_t u = q.front();
    q.pop();
    for (const auto& c : twin.connections) {
      std::size_t v;
      Point3 delta;
      if (c.part1 == u) {
        v = c.part2;
        delta = local(u, c.connection_point1) - local(v, c.connection_point2);
      } else if (c.part2 == u) {
        v = c.part1;
        delta = local(u, c.connection_point2) - local(v, c.connection_point1);
      } else {
        continue;
      }
      if (pos[v]) continue;
      pos[v] = *pos[u] + delta;
      q.push(v);
    }
  }
  std::vector<Point3> out;
  for (const auto& p : pos) out.push_back(*p);
  return out;
}

inline TypeExtents unit_extents(const items::ItemStream& s) {
  TypeExtents e;
  for (const auto& it : s.items) {
    if (it.kind == items::Kind::kCreate) e[it.fields[0]] = Point3::Constant(0.5);
  }
  return e;
}

}  // namespace dtwin::test
