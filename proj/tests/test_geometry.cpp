#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtamp/geometry.hpp"
#include "gtamp/util.hpp"
#include "oracles.hpp"

using namespace gtamp;
using namespace gtamp::test;

TEST_CASE("angle normalization") {
  CHECK(normalize_angle(0.0) == doctest::Approx(0.0));
  CHECK(normalize_angle(M_PI) == doctest::Approx(-M_PI));
  CHECK(normalize_angle(3 * M_PI) == doctest::Approx(-M_PI));
  CHECK(normalize_angle(-M_PI) == doctest::Approx(-M_PI));
  CHECK(normalize_angle(2 * M_PI) == doctest::Approx(0.0));
  CHECK_THROWS_AS(Pose2(0, 0, std::nan("")), std::invalid_argument);
}

TEST_CASE("pose composition round trip") {
  Pose2 a(1.5, -2.0, 0.7), b(0.3, 0.9, -1.2);
  Pose2 c = compose(a, b);
  Pose2 back = compose(inverse(a), c);
  CHECK(back.x == doctest::Approx(b.x).epsilon(1e-12));
  CHECK(back.y == doctest::Approx(b.y).epsilon(1e-12));
  CHECK(back.theta == doctest::Approx(b.theta).epsilon(1e-12));
}

TEST_CASE("disc-disc collision: separation and tangency") {
  Footprint a{Shape::disc(1.0), Pose2(0, 0, 0)};
  CHECK_FALSE(collides(a, {Shape::disc(1.0), Pose2(3, 0, 0)}));
  CHECK(collides(a, {Shape::disc(1.0), Pose2(2, 0, 0)}));  // tangent counts
}

TEST_CASE("rotated rectangle vs small disc near the corner gap") {
  // rect 2x2 rotated 45 degrees: corner reaches sqrt(2) ~ 1.414 along x.
  Footprint rect{Shape::rectangle(1.0, 1.0), Pose2(0, 0, M_PI / 4)};
  Footprint probe{Shape::disc(0.1), Pose2(1.35, 0, 0)};
  bool expected = oracle_collides(rect, probe);
  CHECK(collides(rect, probe) == expected);
  CHECK(expected);  // corner at 1.414 is within 0.1 of the disc at 1.35
  Footprint probe_far{Shape::disc(0.1), Pose2(1.55, 0, 0)};
  CHECK(collides(rect, probe_far) == oracle_collides(rect, probe_far));
  CHECK_FALSE(collides(rect, probe_far));
}

TEST_CASE("randomized collision queries agree with the sampling oracle") {
  Rng rng(2024);
  int checked = 0;
  for (int i = 0; i < 500; ++i) {
    auto random_fp = [&]() {
      Footprint f;
      if (rng.uniform() < 0.5)
        f.shape = Shape::disc(rng.uniform(0.1, 1.2));
      else
        f.shape = Shape::rectangle(rng.uniform(0.1, 1.2), rng.uniform(0.1, 1.2));
      f.pose = Pose2(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-M_PI, M_PI));
      return f;
    };
    Footprint a = random_fp(), b = random_fp();
    if (near_boundary(a, b)) continue;
    ++checked;
    CHECK(collides(a, b) == oracle_collides(a, b));
  }
  CHECK(checked > 400);
}

TEST_CASE("collision is symmetric and translation invariant") {
  Rng rng(99);
  for (int i = 0; i < 200; ++i) {
    Footprint a{rng.uniform() < 0.5 ? Shape::disc(rng.uniform(0.1, 1.0))
                                    : Shape::rectangle(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)),
                Pose2(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-M_PI, M_PI))};
    Footprint b{rng.uniform() < 0.5 ? Shape::disc(rng.uniform(0.1, 1.0))
                                    : Shape::rectangle(rng.uniform(0.1, 1.0), rng.uniform(0.1, 1.0)),
                Pose2(rng.uniform(-2, 2), rng.uniform(-2, 2), rng.uniform(-M_PI, M_PI))};
    CHECK(collides(a, b) == collides(b, a));
    double tx = rng.uniform(-5, 5), ty = rng.uniform(-5, 5);
    Footprint at = a, bt = b;
    at.pose = Pose2(a.pose.x + tx, a.pose.y + ty, a.pose.theta);
    bt.pose = Pose2(b.pose.x + tx, b.pose.y + ty, b.pose.theta);
    CHECK(collides(a, b) == collides(at, bt));
  }
}

TEST_CASE("containment basics") {
  Footprint region{Shape::rectangle(5.0, 5.0), Pose2(0, 0, 0)};
  CHECK(contains(region, {Shape::disc(1.0), Pose2(0, 0, 0)}));
  CHECK_FALSE(contains(region, {Shape::disc(1.0), Pose2(4.5, 0, 0)}));
  CHECK_THROWS_AS(contains({Shape::disc(1.0), Pose2()}, region), std::invalid_argument);
}

TEST_CASE("rotated rectangle containment near a corner matches the vertex oracle") {
  Footprint region{Shape::rectangle(2.0, 2.0), Pose2(0, 0, 0)};
  Rng rng(7);
  for (int i = 0; i < 200; ++i) {
    Footprint obj{Shape::rectangle(rng.uniform(0.2, 0.8), rng.uniform(0.2, 0.8)),
                  Pose2(rng.uniform(0.5, 2.2), rng.uniform(0.5, 2.2), rng.uniform(-M_PI, M_PI))};
    // oracle: all corners inside the region rectangle
    bool expected = true;
    double hw = obj.shape.half_width, hh = obj.shape.half_height;
    for (auto [u, v] : {std::pair{hw, hh}, {hw, -hh}, {-hw, hh}, {-hw, -hh}}) {
      Pose2 corner = compose(obj.pose, Pose2(u, v, 0));
      if (!point_in_shape(region, corner.x, corner.y)) expected = false;
    }
    CHECK(contains(region, obj) == expected);
  }
}

TEST_CASE("containment and collision are independent tests") {
  // object inside region; the region is not an obstacle
  Footprint region{Shape::rectangle(3.0, 3.0), Pose2(0, 0, 0)};
  Footprint obj{Shape::disc(0.5), Pose2(0.5, 0.5, 0)};
  CHECK(contains(region, obj));
  CHECK(collides(region, obj));  // geometric overlap exists regardless
}

TEST_CASE("sweep waypoint counts") {
  SweptVolume single = sweep({Pose2(1, 1, 0)}, Shape::disc(0.3), std::nullopt);
  CHECK(single.waypoints.size() == 1);
  CHECK(single.waypoints[0].size() == 1);

  // straight path of length 1.0 at 0.05 step: ceil(1/0.05) + 1 = 21 waypoints
  SweptVolume line = sweep({Pose2(0, 0, 0), Pose2(1, 0, 0)}, Shape::disc(0.3), std::nullopt, 0.05);
  CHECK(line.waypoints.size() == 21);
  CHECK_THROWS_AS(sweep({}, Shape::disc(0.3), std::nullopt), std::invalid_argument);
}

TEST_CASE("sweep collision equals per-waypoint brute force") {
  Rng rng(41);
  Shape robot = Shape::disc(0.3);
  for (int trial = 0; trial < 50; ++trial) {
    std::vector<Pose2> path;
    int n = 2 + rng.uniform_int(4);
    for (int i = 0; i < n; ++i)
      path.push_back(Pose2(rng.uniform(0, 10), rng.uniform(0, 10), 0));
    std::optional<Attached> att;
    if (rng.uniform() < 0.5) att = Attached{Shape::disc(0.2), Pose2(0.55, 0, 0)};
    SweptVolume vol = sweep(path, robot, att);
    Footprint obstacle{Shape::disc(rng.uniform(0.2, 0.8)),
                       Pose2(rng.uniform(0, 10), rng.uniform(0, 10), 0)};
    bool brute = false;
    for (const auto& wp : vol.waypoints)
      for (const auto& fp : wp)
        if (collides(fp, obstacle)) brute = true;
    CHECK(vol.intersects(obstacle) == brute);
  }
}

TEST_CASE("attached footprint rides at the grasp transform") {
  Attached att{Shape::disc(0.2), Pose2(0.65, 0, 0)};
  SweptVolume vol = sweep({Pose2(2, 2, 0)}, Shape::disc(0.3), att);
  REQUIRE(vol.waypoints.size() == 1);
  REQUIRE(vol.waypoints[0].size() == 2);
  CHECK(vol.waypoints[0][1].pose.x == doctest::Approx(2.65));
  CHECK(vol.waypoints[0][1].pose.y == doctest::Approx(2.0));
}
