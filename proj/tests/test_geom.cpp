#include <random>

#include <gtest/gtest.h>

#include "dtwin/error.hpp"
#include "dtwin/geom.hpp"
#include "support.hpp"

namespace dtwin {
namespace {

using test::oracle_aabb;
using test::oracle_rotation;

void expect_near(const Point3& a, const Point3& b, double tol) {
  EXPECT_LE((a - b).cwiseAbs().maxCoeff(), tol) << a.transpose() << " vs " << b.transpose();
}

TEST(Orientation, NormalizesIntoZeroTo360) {
  Orientation o(-90, 450);
  EXPECT_DOUBLE_EQ(o.yaw, 270);
  EXPECT_DOUBLE_EQ(o.pitch, 90);
  EXPECT_EQ(Orientation(360, -0.0), Orientation());
}

TEST(RotatePoint, QuarterTurnsAndIdentity) {
  expect_near(rotate_point({1, 0, 0}, Orientation()), {1, 0, 0}, 0);
  // Exact trig on quarter turns: no residue at all.
  EXPECT_EQ(rotate_point({1, 0, 0}, Orientation(90, 0)), Point3(0, 0, -1));
  EXPECT_EQ(rotate_point({0, 1, 0}, Orientation(180, 0)), Point3(0, 1, 0));
}

TEST(RotatePoint, MatchesAngleAxisOracleAndPreservesNorm) {
  std::mt19937 rng(7);
  std::uniform_real_distribution<double> ang(-720, 720), coord(-5, 5);
  for (int i = 0; i < 500; ++i) {
    const Orientation o(ang(rng), ang(rng));
    const Point3 p(coord(rng), coord(rng), coord(rng));
    const Point3 q = rotate_point(p, o);
    expect_near(q, oracle_rotation(o) * p, 1e-12);
    EXPECT_NEAR(q.norm(), p.norm(), 1e-9);
  }
}

TEST(AabbAt, CornerHullOracle) {
  EXPECT_EQ(aabb_at({1, 1, 1}, Pose{}).half_extents, Point3(1, 1, 1));
  EXPECT_EQ(aabb_at({2, 1, 1}, Pose{Point3::Zero(), Orientation(90, 0)}).half_extents, Point3(1, 1, 2));
  EXPECT_EQ(aabb_at({1, 1, 1}, Pose{Point3(0, 5, 0), Orientation()}).center, Point3(0, 5, 0));

  std::mt19937 rng(11);
  std::uniform_real_distribution<double> ang(0, 360), ext(0.1, 3), coord(-4, 4);
  for (int i = 0; i < 300; ++i) {
    const Point3 half(ext(rng), ext(rng), ext(rng));
    const Pose pose{Point3(coord(rng), coord(rng), coord(rng)), Orientation(ang(rng), ang(rng))};
    const Aabb got = aabb_at(half, pose);
    const Aabb want = oracle_aabb(half, pose);
    expect_near(got.center, want.center, 1e-12);
    expect_near(got.half_extents, want.half_extents, 1e-12);
  }
}

TEST(AabbAt, RejectsDegenerateExtents) {
  EXPECT_THROW(aabb_at({0, 1, 1}, Pose{}), Error);
  EXPECT_THROW(aabb_at({1, -1, 1}, Pose{}), Error);
  EXPECT_THROW(aabb_at({1, NAN, 1}, Pose{}), Error);
}

TEST(AabbsIntersect, ContactIsNotCollision) {
  const Aabb a{Point3::Zero(), Point3::Ones()};
  EXPECT_FALSE(aabbs_intersect(a, {Point3(3, 0, 0), Point3::Ones()}, 1e-3));
  EXPECT_FALSE(aabbs_intersect(a, {Point3(0, 2, 0), Point3::Ones()}, 1e-3));
  EXPECT_TRUE(aabbs_intersect(a, {Point3(0, 1.5, 0), Point3::Ones()}, 1e-3));
  // Penetration below the tolerance still counts as contact.
  EXPECT_FALSE(aabbs_intersect(a, {Point3(0, 1.9995, 0), Point3::Ones()}, 1e-3));
}

TEST(AabbsIntersect, Symmetric) {
  std::mt19937 rng(3);
  std::uniform_real_distribution<double> c(-2, 2), h(0.1, 1.5);
  for (int i = 0; i < 1000; ++i) {
    const Aabb a{Point3(c(rng), c(rng), c(rng)), Point3(h(rng), h(rng), h(rng))};
    const Aabb b{Point3(c(rng), c(rng), c(rng)), Point3(h(rng), h(rng), h(rng))};
    EXPECT_EQ(aabbs_intersect(a, b, 1e-3), aabbs_intersect(b, a, 1e-3));
    EXPECT_EQ(aabbs_intersect(a, b, 1e-3), test::oracle_overlap(a, b, 1e-3));
  }
}

Trajectory descent(double from_y, double to_y) {
  Trajectory t;
  t.start = Pose{Point3(0, from_y, 0), Orientation()};
  t.segments.push_back(Translate{Point3(0, from_y, 0), Point3(0, to_y, 0)});
  return t;
}

TEST(SweepCheck, EmptySceneIsClear) {
  EXPECT_FALSE(sweep_check(Point3::Constant(0.5), descent(10, 0), {}));
}

TEST(SweepCheck, ThinObstacleAcrossPathIsFound) {
  // 0.02 thick: a step of 0.05 alone could straddle it, but the 0.5 box
  // half-height always overlaps some sample.
  std::vector<Obstacle> obs{{"shelf", Aabb{Point3(0, 5, 0), Point3(2, 0.01, 2)}}};
  auto hit = sweep_check(Point3::Constant(0.5), descent(10, 0), obs);
  ASSERT_TRUE(hit);
  EXPECT_EQ(hit->obstacle_id, "shelf");
  EXPECT_EQ(hit->segment_index, 0u);
  EXPECT_GT(hit->sample_pose.position.y(), 5.0);
  EXPECT_TRUE(test::oracle_sweep_hits(Point3::Constant(0.5), descent(10, 0), obs, 0.005, 1e-3));
}

TEST(SweepCheck, StoppingAtFaceContactIsClear) {
  std::vector<Obstacle> obs{{"floor", Aabb{Point3(0, -0.5, 0), Point3(5, 0.5, 5)}}};
  EXPECT_FALSE(sweep_check(Point3::Constant(0.5), descent(10, 0.5), obs));
  EXPECT_TRUE(sweep_check(Point3::Constant(0.5), descent(10, 0.4), obs));
}

TEST(SweepCheck, SimultaneousHitsReportLowestId) {
  std::vector<Obstacle> obs{{"zeta", Aabb{Point3(0, 5, 0), Point3(1, 0.2, 1)}},
                            {"alpha", Aabb{Point3(0, 5, 0), Point3(1, 0.2, 1)}}};
  auto forward = sweep_check(Point3::Constant(0.5), descent(10, 0), obs);
  std::reverse(obs.begin(), obs.end());
  auto backward = sweep_check(Point3::Constant(0.5), descent(10, 0), obs);
  ASSERT_TRUE(forward && backward);
  EXPECT_EQ(forward->obstacle_id, "alpha");
  EXPECT_EQ(backward->obstacle_id, "alpha");
  EXPECT_EQ(forward->sample_pose, backward->sample_pose);
}

TEST(SweepCheck, RotationSweepsTheHull) {
  // A 2x0.2x0.2 bar rotating in place hits a post placed off its long axis.
  Trajectory t;
  t.start = Pose{Point3::Zero(), Orientation()};
  t.segments.push_back(Rotate{Orientation(0, 0), Orientation(90, 0)});
  std::vector<Obstacle> obs{{"post", Aabb{Point3(0, 0, 1.5), Point3(0.2, 0.2, 0.2)}}};
  auto hit = sweep_check(Point3(2, 0.2, 0.2), t, obs);
  ASSERT_TRUE(hit);
  EXPECT_GT(hit->sample_pose.orientation.yaw, 0.0);
}

TEST(SweepCheck, AgreesWithDenseOracleOnRandomScenes) {
  std::mt19937 rng(21);
  std::uniform_real_distribution<double> c(-3, 3), h(0.05, 0.8);
  int hits = 0;
  for (int i = 0; i < 300; ++i) {
    Trajectory t;
    t.start = Pose{Point3(c(rng), 4, c(rng)), Orientation()};
    const Point3 mid(c(rng), c(rng), c(rng));
    const Point3 end(c(rng), c(rng), c(rng));
    t.segments.push_back(Translate{t.start.position, mid});
    t.segments.push_back(Rotate{Orientation(), Orientation(90, 0)});
    t.segments.push_back(Translate{mid, end});
    std::vector<Obstacle> obs;
    for (int k = 0; k < 3; ++k) {
      obs.push_back({"o" + std::to_string(k), Aabb{Point3(c(rng), c(rng), c(rng)), Point3(h(rng), h(rng), h(rng))}});
    }
    const Point3 half(h(rng) + 0.2, h(rng) + 0.2, h(rng) + 0.2);
    const bool coarse = sweep_check(half, t, obs).has_value();
    const bool fine = test::oracle_sweep_hits(half, t, obs, 0.005, 1e-3);
    hits += fine;
    // Coarse sampling may only miss grazing hits; on these scenes it must agree.
    EXPECT_EQ(coarse, fine) << "scene " << i;
  }
  EXPECT_GT(hits, 30);
}

}  // namespace
}  // namespace dtwin
