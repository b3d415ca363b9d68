#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>

#include "gtamp/motion.hpp"
#include "gtamp/predicates.hpp"
#include "helpers.hpp"
#include "oracles.hpp"

using namespace gtamp;
using namespace gtamp::test;

namespace {

SceneBuilder door_scene() {
  SceneBuilder sb;  // wall at x=5, 2 m door at y in [4,6]
  sb.wall(5.0, 2.0, 0.3, 2.0);
  sb.wall(5.0, 8.0, 0.3, 2.0);
  sb.region("home", 2.3, 5.0, 2.2, 4.5);
  sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  return sb;
}

}  // namespace

TEST_CASE("reachable object: PreFree with no occluders") {
  SceneBuilder sb;
  sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int o = sb.disc("obj", 0.2, 3.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 400, 0.9, 3);
  GoalSpec goal{{{o, 0}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);
  CHECK(a.pre_free[o] == 1);
  for (int x = 0; x < a.n_obj; ++x) CHECK(a.occludes_pre[a.pair(x, o)] == 0);
  CHECK_FALSE(a.vpre[o].empty());
  CHECK(a.is_goal[o] == 1);
  CHECK(a.is_goal[a.n_obj + 0] == 1);
  CHECK(a.manip_free[a.pair(o, a.n_obj + 0)] == 1);
}

TEST_CASE("boxed-in object: PreFree false with ring occluders") {
  SceneBuilder sb;
  sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int target = sb.disc("target", 0.2, 5.0, 5.0);
  std::vector<int> ring;
  for (int i = 0; i < 8; ++i) {
    double a = 2 * M_PI * i / 8;
    ring.push_back(sb.disc("ring" + std::to_string(i), 0.35, 5.0 + 0.8 * std::cos(a),
                           5.0 + 0.8 * std::sin(a)));
  }
  Roadmap rm = build_roadmap(sb.env, 600, 0.9, 3);
  GoalSpec goal{{{target, 0}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);
  CHECK(a.pre_free[target] == 0);
  int occluders = 0;
  for (int x = 0; x < a.n_obj; ++x)
    if (a.occludes_pre[a.pair(x, target)]) {
      ++occluders;
      CHECK(x != target);  // never self-occluding
      // occluders must be ring members geometrically touching the volume
      CHECK(a.vpre[target].intersects(object_footprint(sb.env, sb.state, x)));
    }
  CHECK(occluders >= 1);
}

TEST_CASE("two tunnel blockers occlude exactly as the sweep oracle says") {
  // deep tunnel: walls from x in [3.8, 6.2], opening y in [4.4, 5.6]; every
  // traversal stays within robot-center band y in [4.7, 5.3] and must brush
  // both blockers sitting on the tunnel axis
  SceneBuilder sb;
  sb.wall(5.0, 2.2, 1.2, 2.2);
  sb.wall(5.0, 7.8, 1.2, 2.2);
  sb.region("home", 1.9, 5.0, 1.8, 4.5);
  sb.region("goal", 8.4, 5.0, 1.4, 1.4);
  int target = sb.disc("target", 0.25, 8.4, 5.0);
  int b1 = sb.disc("white1", 0.35, 4.3, 5.0);
  int b2 = sb.disc("white2", 0.35, 5.7, 5.0);
  int far_obj = sb.disc("far", 0.3, 1.0, 1.0);
  Roadmap rm = build_roadmap(sb.env, 1200, 0.8, 17);
  GoalSpec goal{{{target, 1}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);

  CHECK(a.pre_free[target] == 0);
  CHECK(a.occludes_pre[a.pair(b1, target)] == 1);
  CHECK(a.occludes_pre[a.pair(b2, target)] == 1);
  CHECK(a.occludes_pre[a.pair(far_obj, target)] == 0);

  // occlusion soundness: every reported occluder overlaps the stored volume
  for (int x = 0; x < a.n_obj; ++x)
    if (a.occludes_pre[a.pair(x, target)])
      CHECK(a.vpre[target].intersects(object_footprint(sb.env, sb.state, x)));
}

TEST_CASE("manip volume through a blocked door sets OccludesManip") {
  SceneBuilder sb = door_scene();
  int obj = sb.disc("obj", 0.25, 3.0, 5.0);
  int blocker = sb.disc("blocker", 0.45, 5.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 1200, 0.8, 17);
  GoalSpec goal{{{obj, 1}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);

  const int goal_region = 1;
  CHECK(a.manip_free[a.pair(obj, a.n_obj + goal_region)] == 0);
  CHECK(a.occludes_manip[a.tri(blocker, obj, goal_region)] == 1);
  // carrying to the home region needs no door crossing
  CHECK(a.manip_free[a.pair(obj, a.n_obj + 0)] == 1);
}

TEST_CASE("type rule: wrong-typed predicate slots are false") {
  SceneBuilder sb = door_scene();
  sb.disc("o1", 0.25, 3.0, 5.0);
  sb.disc("o2", 0.25, 2.0, 3.0);
  Roadmap rm = build_roadmap(sb.env, 400, 0.9, 3);
  GoalSpec goal{{{0, 1}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);
  for (int i = 0; i < a.n_ent(); ++i) {
    for (int j = 0; j < a.n_ent(); ++j) {
      bool obj_obj = a.is_object[i] && a.is_object[j];
      bool obj_reg = a.is_object[i] && a.is_region[j];
      if (!obj_reg) {
        CHECK(a.in_region[a.pair(i, j)] == 0);
        CHECK(a.manip_free[a.pair(i, j)] == 0);
      }
      if (!obj_obj) CHECK(a.occludes_pre[a.pair(i, j)] == 0);
    }
    CHECK((a.is_object[i] ^ a.is_region[i]) == 1);
    if (a.is_region[i]) CHECK(a.pre_free[i] == 0);
  }
}

TEST_CASE("incremental evaluation equals from-scratch over an action sequence") {
  SceneBuilder sb = door_scene();
  int o1 = sb.disc("o1", 0.25, 3.0, 5.0);
  int o2 = sb.disc("o2", 0.25, 2.0, 3.0);
  sb.disc("o3", 0.3, 5.0, 4.8);
  Roadmap rm = build_roadmap(sb.env, 800, 0.9, 3);
  GoalSpec goal{{{o1, 1}}};

  PredicateContext inc(sb.env, rm, sb.state);
  AbstractState prev = inc.compute(sb.state, goal);
  {
    AbstractState fresh = compute_abstract(sb.env, sb.state, goal, rm);
    CHECK(prev.bits_equal(fresh));
  }

  WorldState state = sb.state;
  auto apply = [&](int obj, double x, double y, double chi) {
    ConcreteAction act;
    act.discrete = {obj, 0};
    act.continuous.pick_bearing = 0.0;
    act.continuous.place_pose = Pose2(x, y, 0.0);
    act.continuous.place_bearing = chi;
    act.pre_path = {state.robot};
    act.manip_path = {state.robot};
    state = transition(sb.env, state, act);
    AbstractState next = inc.compute(state, goal, &prev, &act);
    AbstractState fresh = compute_abstract(sb.env, state, goal, rm);
    CHECK(next.bits_equal(fresh));
    prev = next;
  };

  apply(o2, 1.5, 7.0, 0.3);
  apply(o1, 3.5, 4.0, -0.8);
  apply(o2, 2.5, 2.0, 1.2);
}

TEST_CASE("reuse audit: null move reports zero changes") {
  SceneBuilder sb = door_scene();
  int o = sb.disc("obj", 0.25, 3.0, 5.0);
  sb.disc("other", 0.3, 2.0, 7.5);
  Roadmap rm = build_roadmap(sb.env, 600, 0.9, 3);
  GoalSpec goal{{{o, 1}}};

  // put the robot exactly where the null move will leave it
  double chi = M_PI / 2;
  sb.state.robot = place_config(sb.env, o, sb.state.object_poses[o], chi);
  PredicateContext ctx(sb.env, rm, sb.state);
  AbstractState prev = ctx.compute(sb.state, goal);

  ConcreteAction act;
  act.discrete = {o, 0};
  act.continuous.pick_bearing = chi;
  act.continuous.place_pose = sb.state.object_poses[o];
  act.continuous.place_bearing = chi;
  act.pre_path = {sb.state.robot};
  act.manip_path = {sb.state.robot};
  WorldState next_state = transition(sb.env, sb.state, act);
  CHECK(next_state.robot == sb.state.robot);

  AbstractState next = ctx.compute(next_state, goal, &prev, &act);
  ReuseReport report = reuse_audit(sb.env, sb.state, prev, act, next_state, next);
  CHECK(report.changes.empty());
  CHECK(report.consistent);
}

TEST_CASE("reuse audit: moving a far bystander leaves occlusion bits alone") {
  SceneBuilder sb = door_scene();
  int target = sb.disc("target", 0.25, 7.9, 5.0);
  int blocker = sb.disc("blocker", 0.45, 5.0, 5.0);
  int bystander = sb.disc("bystander", 0.25, 1.0, 8.8);
  Roadmap rm = build_roadmap(sb.env, 1000, 0.8, 17);
  GoalSpec goal{{{target, 1}}};

  PredicateContext ctx(sb.env, rm, sb.state);
  AbstractState prev = ctx.compute(sb.state, goal);
  REQUIRE(prev.occludes_pre[prev.pair(blocker, target)] == 1);

  ConcreteAction act;
  act.discrete = {bystander, 0};
  act.continuous.pick_bearing = 0.0;
  act.continuous.place_pose = Pose2(1.0, 1.2, 0.0);
  act.continuous.place_bearing = M_PI;
  act.pre_path = {sb.state.robot};
  act.manip_path = {sb.state.robot};
  WorldState next_state = transition(sb.env, sb.state, act);
  AbstractState next = ctx.compute(next_state, goal, &prev, &act);

  CHECK(next.occludes_pre[next.pair(blocker, target)] == 1);
  CHECK(next.pre_free[target] == prev.pre_free[target]);
  AbstractState fresh = compute_abstract(sb.env, next_state, goal, rm);
  CHECK(next.bits_equal(fresh));
}

TEST_CASE("reuse audit: removing the only blocker flips PreFree") {
  SceneBuilder sb = door_scene();
  int target = sb.disc("target", 0.25, 7.9, 5.0);
  int blocker = sb.disc("blocker", 0.45, 5.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 1500, 0.8, 17);
  GoalSpec goal{{{target, 1}}};

  // keep the robot fixed across the move so only the blocker's relocation
  // can affect the predicates
  double chi = M_PI;
  Pose2 new_pose(2.0, 8.0, 0.0);
  sb.state.robot = place_config(sb.env, blocker, new_pose, chi);

  PredicateContext ctx(sb.env, rm, sb.state);
  AbstractState prev = ctx.compute(sb.state, goal);
  REQUIRE(prev.pre_free[target] == 0);
  REQUIRE(prev.occludes_pre[prev.pair(blocker, target)] == 1);

  ConcreteAction act;
  act.discrete = {blocker, 0};
  act.continuous.pick_bearing = 0.0;
  act.continuous.place_pose = new_pose;
  act.continuous.place_bearing = chi;
  act.pre_path = {sb.state.robot};
  act.manip_path = {sb.state.robot};
  WorldState next_state = transition(sb.env, sb.state, act);
  CHECK(next_state.robot == sb.state.robot);

  AbstractState next = ctx.compute(next_state, goal, &prev, &act);
  CHECK(next.pre_free[target] == 1);
  CHECK(next.occludes_pre[next.pair(blocker, target)] == 0);

  ReuseReport report = reuse_audit(sb.env, sb.state, prev, act, next_state, next);
  CHECK(report.consistent);
  bool saw_preflip = false;
  for (const auto& c : report.changes)
    if (c.predicate == "PreFree" && c.a == target) saw_preflip = true;
  CHECK(saw_preflip);
}

TEST_CASE("unreachable object degrades to pessimistic values") {
  SceneBuilder sb;
  sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  // fully walled-in pocket around the object
  sb.wall(5.0, 4.0, 1.0, 0.2);
  sb.wall(5.0, 6.0, 1.0, 0.2);
  sb.wall(4.0, 5.0, 0.2, 1.2);
  sb.wall(6.0, 5.0, 0.2, 1.2);
  int o = sb.disc("obj", 0.2, 5.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 500, 0.9, 3);
  GoalSpec goal{{{o, 0}}};
  AbstractState a = compute_abstract(sb.env, sb.state, goal, rm);
  CHECK(a.pre_free[o] == 0);
  CHECK(a.vpre[o].empty());
  for (int x = 0; x < a.n_obj; ++x) CHECK(a.occludes_pre[a.pair(x, o)] == 0);
  CHECK(a.manip_free[a.pair(o, a.n_obj + 0)] == 0);
}
