#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtamp/util.hpp"
#include "gtamp/world.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gtamp;
using namespace gtamp::test;

TEST_CASE("pick config standoff geometry") {
  SceneBuilder sb;
  int o = sb.disc("obj", 0.2, 5.0, 5.0);
  Pose2 q = pick_config(sb.env, sb.state, o, 0.0);
  CHECK(q.x == doctest::Approx(5.55));
  CHECK(q.y == doctest::Approx(5.0));
  CHECK(q.theta == doctest::Approx(-M_PI));  // pi normalized to -pi

  Pose2 q2 = pick_config(sb.env, sb.state, o, M_PI);
  CHECK(q2.x == doctest::Approx(4.45));
  CHECK(q2.y == doctest::Approx(5.0));
  CHECK(std::abs(normalize_angle(q2.theta)) == doctest::Approx(0.0));
}

TEST_CASE("rectangle standoff uses the circumradius: no overlap on random bearings") {
  SceneBuilder sb;
  int o = sb.rect("box", 0.3, 0.2, 5.0, 5.0, 0.6);
  Rng rng(5);
  for (int i = 0; i < 100; ++i) {
    double chi = rng.uniform(-M_PI, M_PI);
    Pose2 q = pick_config(sb.env, sb.state, o, chi);
    Footprint robot{sb.env.robot_shape, q};
    CHECK_FALSE(collides(robot, object_footprint(sb.env, sb.state, o)));
  }
}

TEST_CASE("grasp transform places the object dead ahead") {
  SceneBuilder sb;
  int o = sb.disc("obj", 0.2, 5.0, 5.0);
  double chi = 1.1;
  Pose2 g = grasp_transform(sb.env, sb.state, o, chi);
  CHECK(g.x == doctest::Approx(0.55));
  CHECK(g.y == doctest::Approx(0.0).epsilon(1e-9));
  Pose2 q = pick_config(sb.env, sb.state, o, chi);
  Pose2 world = compose(q, g);
  CHECK(world.x == doctest::Approx(5.0));
  CHECK(world.y == doctest::Approx(5.0));
}

TEST_CASE("transition applies the pick-and-place update") {
  SceneBuilder sb;
  int o = sb.disc("obj", 0.2, 5.0, 5.0);
  int other = sb.disc("other", 0.2, 2.0, 2.0);
  sb.region("goal", 8, 5, 1.5, 1.5);
  ConcreteAction a;
  a.discrete = {o, 0};
  a.continuous.pick_bearing = 0.0;
  a.continuous.place_pose = Pose2(8.0, 5.0, 0.0);
  a.continuous.place_bearing = M_PI / 2;
  a.pre_path = {sb.state.robot, pick_config(sb.env, sb.state, o, 0.0)};
  a.manip_path = {a.pre_path.back(), place_config(sb.env, o, a.continuous.place_pose, a.continuous.place_bearing)};

  WorldState next = transition(sb.env, sb.state, a);
  CHECK(next.object_poses[o].x == doctest::Approx(8.0));
  CHECK(next.object_poses[other] == sb.state.object_poses[other]);
  CHECK(next.plan_trace.size() == 1);
  CHECK(next.robot.x == doctest::Approx(8.0));
  CHECK(next.robot.y == doctest::Approx(5.55));
  CHECK_FALSE(next.held.has_value());

  SUBCASE("missing paths raise InfeasibleAction") {
    ConcreteAction bad = a;
    bad.manip_path.clear();
    CHECK_THROWS_AS(transition(sb.env, sb.state, bad), InfeasibleAction);
  }

  SUBCASE("replaying the trace reproduces the state bit-exactly") {
    WorldState replay = sb.state;
    for (const auto& act : next.plan_trace) replay = transition(sb.env, sb.state, act);
    CHECK(replay.object_poses == next.object_poses);
    CHECK(replay.robot == next.robot);
  }
}

TEST_CASE("transition determinism") {
  SceneBuilder sb;
  int o = sb.disc("obj", 0.2, 5.0, 5.0);
  sb.region("goal", 8, 5, 1.5, 1.5);
  ConcreteAction a;
  a.discrete = {o, 0};
  a.continuous.place_pose = Pose2(7.7, 4.9, 0.0);
  a.continuous.place_bearing = 0.3;
  a.pre_path = {sb.state.robot};
  a.manip_path = {sb.state.robot};
  WorldState n1 = transition(sb.env, sb.state, a);
  WorldState n2 = transition(sb.env, sb.state, a);
  CHECK(n1.object_poses == n2.object_poses);
  CHECK(n1.robot == n2.robot);
}

TEST_CASE("goal test requires full containment") {
  SceneBuilder sb;
  int o = sb.disc("obj", 0.4, 8.0, 5.0);
  int r = sb.region("goal", 8, 5, 1.5, 1.5);
  GoalSpec goal{{{o, r}}};
  CHECK(is_goal(sb.env, sb.state, goal));
  sb.state.object_poses[o] = Pose2(9.2, 5.0, 0.0);  // crosses the region edge at 9.5
  CHECK_FALSE(is_goal(sb.env, sb.state, goal));
}

TEST_CASE("generated instances are deterministic and valid") {
  InstanceConfig cfg;
  cfg.n_movables = 6;
  cfg.n_goal_objects = 2;
  cfg.n_blockers = 2;
  Instance a = generate_instance(42, cfg);
  Instance b = generate_instance(42, cfg);
  CHECK(instance_to_json(a) == instance_to_json(b));
  CHECK(a.env.movables.size() == 6);
  CHECK(a.goal.pairs.size() == 2);

  // goal objects start outside their goal regions
  for (const auto& [obj, region] : a.goal.pairs)
    CHECK_FALSE(contains(a.env.regions[region].footprint, object_footprint(a.env, a.initial, obj)));

  // no placed-object overlaps
  for (std::size_t i = 0; i < a.env.movables.size(); ++i)
    for (std::size_t j = i + 1; j < a.env.movables.size(); ++j)
      CHECK_FALSE(collides(object_footprint(a.env, a.initial, static_cast<int>(i)),
                           object_footprint(a.env, a.initial, static_cast<int>(j))));
  for (std::size_t i = 0; i < a.env.movables.size(); ++i)
    for (const auto& f : a.env.fixed)
      CHECK_FALSE(collides(object_footprint(a.env, a.initial, static_cast<int>(i)), f));

  // different seeds differ
  Instance c = generate_instance(43, cfg);
  CHECK(instance_to_json(a) != instance_to_json(c));
}

TEST_CASE("blockers occlude the exit") {
  InstanceConfig cfg;
  cfg.n_movables = 5;
  cfg.n_goal_objects = 1;
  cfg.n_blockers = 2;
  Instance inst = generate_instance(7, cfg);
  SweptVolume door = sweep({Pose2(4, 5, 0), Pose2(6, 5, 0)}, inst.env.robot_shape, std::nullopt);
  bool occluded = false;
  for (std::size_t i = 0; i < inst.env.movables.size(); ++i)
    if (door.intersects(object_footprint(inst.env, inst.initial, static_cast<int>(i))))
      occluded = true;
  CHECK(occluded);
}

TEST_CASE("instance serialization round-trips byte-exactly") {
  InstanceConfig cfg;
  cfg.n_movables = 8;
  cfg.n_goal_objects = 1;
  cfg.n_blockers = 3;
  Instance inst = generate_instance(1234567, cfg);
  std::string once = instance_to_json(inst);
  std::string twice = instance_to_json(instance_from_json(once));
  CHECK(once == twice);
}

TEST_CASE("generation rejects impossible configs") {
  InstanceConfig cfg;
  cfg.n_movables = 2;
  cfg.n_goal_objects = 2;
  cfg.n_blockers = 2;
  CHECK_THROWS_AS(generate_instance(1, cfg), std::invalid_argument);
}
