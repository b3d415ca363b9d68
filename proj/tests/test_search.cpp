#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include <doctest.h>

#include <cmath>
#include <set>

#include "gtamp/search.hpp"
#include "gtamp/util.hpp"
#include "helpers.hpp"

using namespace gtamp;
using namespace gtamp::test;

namespace {

// Door world with one goal object in the left room and a blocker in the door.
struct BlockedDoor {
  SceneBuilder sb;
  int obj;
  int blocker;
  int goal_region;
  Roadmap rm;
  GoalSpec goal;

  BlockedDoor() {
    sb.wall(5.0, 2.0, 0.3, 2.0);
    sb.wall(5.0, 8.0, 0.3, 2.0);
    sb.region("home", 2.3, 5.0, 2.2, 4.5);
    goal_region = sb.region("goal", 7.9, 5.0, 1.6, 1.6);
    obj = sb.disc("obj", 0.25, 3.0, 5.0);
    blocker = sb.disc("blocker", 0.45, 5.0, 5.0);
    rm = build_roadmap(sb.env, 900, 0.9, 17);
    goal.pairs = {{obj, goal_region}};
  }
};

}  // namespace

TEST_CASE("smpl_cont finds parameters for an unobstructed move") {
  SceneBuilder sb;
  sb.region("home", 2.3, 5.0, 2.2, 4.5);
  int goal_region = sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int obj = sb.disc("obj", 0.25, 3.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 600, 0.9, 3);
  CollisionCache cache(rm, sb.env, sb.state);

  int successes = 0;
  for (int seed = 0; seed < 100; ++seed) {
    Rng rng(seed);
    auto res = smpl_cont(sb.env, rm, cache, sb.state, {obj, goal_region}, 2000, 5, rng);
    if (res) {
      ++successes;
      CHECK_FALSE(res->pre_path.empty());
      CHECK_FALSE(res->manip_path.empty());
      Footprint placed{sb.env.movables[obj].shape, res->kappa.place_pose};
      CHECK(contains(sb.env.regions[goal_region].footprint, placed));
    }
  }
  CHECK(successes >= 99);
}

TEST_CASE("smpl_cont on a walled-in object is infeasible with no motion calls") {
  SceneBuilder sb;
  sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  sb.wall(5.0, 4.2, 0.9, 0.2);
  sb.wall(5.0, 5.8, 0.9, 0.2);
  sb.wall(4.2, 5.0, 0.2, 1.0);
  sb.wall(5.8, 5.0, 0.2, 1.0);
  int obj = sb.disc("obj", 0.2, 5.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 400, 0.9, 3);
  CollisionCache cache(rm, sb.env, sb.state);
  Rng rng(1);
  long motion_calls = 0;
  auto res = smpl_cont(sb.env, rm, cache, sb.state, {obj, 0}, 500, 5, rng, nullptr, &motion_calls);
  CHECK_FALSE(res.has_value());
  CHECK(motion_calls == 0);  // every pick config collides with the pocket walls
}

TEST_CASE("smpl_cont respects the motion-plan budget") {
  BlockedDoor world;
  CollisionCache cache(world.rm, world.sb.env, world.sb.state);
  Rng rng(3);
  long calls = 0;
  // moving the goal object is partially feasible but the manip path through
  // the blocked door fails, so planner calls are spent without success
  auto res = smpl_cont(world.sb.env, world.rm, cache, world.sb.state,
                       {world.obj, world.goal_region}, 2000, 5, rng, nullptr, &calls, 0);
  CHECK_FALSE(res.has_value());
  CHECK(calls == 0);
}

TEST_CASE("sahs returns the empty plan when the start satisfies the goal") {
  SceneBuilder sb;
  int r = sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int obj = sb.disc("obj", 0.25, 7.9, 5.0);
  Roadmap rm = build_roadmap(sb.env, 300, 0.9, 3);
  SearchParams params;
  params.budget = {50, 30.0};
  SearchStats stats = sahs(sb.env, rm, sb.state, {{{obj, r}}}, params);
  CHECK(stats.solved);
  CHECK(stats.plan.empty());
  CHECK(stats.nodes_expanded == 0);
}

TEST_CASE("sahs solves the blocked door by moving the blocker then the object") {
  BlockedDoor world;
  SearchParams params;
  params.budget = {60, 60.0};
  params.seed = 4;
  params.log_pops = true;
  SearchStats stats = sahs(world.sb.env, world.rm, world.sb.state, world.goal, params);
  REQUIRE(stats.solved);
  CHECK(stats.plan.size() == 2);
  std::set<int> touched;
  for (const auto& a : stats.plan) touched.insert(a.discrete.object);
  CHECK(touched == std::set<int>{world.obj, world.blocker});
  CHECK(plan_replays_to_goal(world.sb.env, world.sb.state, world.goal, stats.plan));
  CHECK(stats.pops_were_minimal);
  CHECK(stats.nodes_expanded >= 2);
}

TEST_CASE("sahs is deterministic in the seed") {
  BlockedDoor world;
  SearchParams params;
  params.budget = {60, 60.0};
  params.seed = 9;
  SearchStats a = sahs(world.sb.env, world.rm, world.sb.state, world.goal, params);
  SearchStats b = sahs(world.sb.env, world.rm, world.sb.state, world.goal, params);
  CHECK(a.solved == b.solved);
  CHECK(a.nodes_expanded == b.nodes_expanded);
  CHECK(a.smplcont_calls == b.smplcont_calls);
  CHECK(a.plan.size() == b.plan.size());
}

TEST_CASE("max_len horizon blocks deep plans; pc-sahs escapes it by doubling") {
  BlockedDoor world;  // shortest solution length 2

  SearchParams capped;
  capped.budget = {80, 60.0};
  capped.max_len = 1;
  capped.seed = 2;
  SearchStats stats = sahs(world.sb.env, world.rm, world.sb.state, world.goal, capped);
  CHECK_FALSE(stats.solved);
  CHECK(stats.restarts >= 1);  // queue drains at depth 1 and restarts

  PcSearchParams pc;
  pc.initial_horizon = 1;
  pc.n_fc = 8;
  pc.budget = {400, 120.0};
  pc.seed = 2;
  SearchStats pcs = pc_sahs(world.sb.env, world.rm, world.sb.state, world.goal, pc);
  CHECK(pcs.solved);
  CHECK(pcs.restarts >= 1);  // unsolvable at iter 0
  REQUIRE(pcs.length_caps.size() >= 2);
  for (std::size_t i = 0; i < pcs.length_caps.size(); ++i)
    CHECK(pcs.length_caps[i] == (1L << i));
  CHECK(plan_replays_to_goal(world.sb.env, world.sb.state, world.goal, pcs.plan));
}

TEST_CASE("solvable-at-horizon instance behaves like plain sahs at iter 0") {
  SceneBuilder sb;
  sb.region("home", 2.3, 5.0, 2.2, 4.5);
  int r = sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int obj = sb.disc("obj", 0.25, 3.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 500, 0.9, 3);
  GoalSpec goal{{{obj, r}}};
  PcSearchParams pc;
  pc.initial_horizon = 2;
  pc.budget = {50, 30.0};
  pc.seed = 1;
  SearchStats stats = pc_sahs(sb.env, rm, sb.state, goal, pc);
  CHECK(stats.solved);
  CHECK(stats.restarts == 0);
  CHECK(stats.length_caps == std::vector<long>{2});
}

TEST_CASE("greedy executor distinguishes steps from resets and gives up") {
  BlockedDoor world;
  Rng rng(12);
  RankNet ranker(8, 8, rng);
  // sampler whose constant place head always lands inside the wall: every
  // drawn action is infeasible, so the executor resets until the cap
  LearnedSampler sampler;
  sampler.tau_v = 0.5;
  sampler.keyconfigs.configs = {Pose2(1, 1, 0)};
  sampler.keyconfigs.min_separation = 0.5;
  for (int region = 0; region < 2; ++region) {
    SamplerHead head;
    head.phase = Phase::Place;
    head.region = region;
    head.generator = nn::Mlp({2 * 1 + 3 + 4, 6}, nn::Activation::Relu, nn::Activation::Linear, rng);
    for (nn::Tensor* t : head.generator.param_tensors())
      for (double& v : t->data) v = 0.0;
    // zero weights: raw head output is the bias; tanh(0)=0 places at the
    // region center... bias the x-head hard toward the wall side instead
    head.generator.param_tensors()[1]->data[0] = 100.0;   // tanh -> +1 edge
    head.generator.param_tensors()[1]->data[1] = 100.0;
    head.critic = nn::Mlp({2 * 1 + 3 + 6, 4, 1}, nn::Activation::Tanh, nn::Activation::Linear, rng);
    sampler.heads[{static_cast<int>(Phase::Place), region}] = std::move(head);
  }

  GreedyParams gp;
  gp.max_steps = 6;
  gp.max_resets = 4;
  gp.seed = 3;
  SearchStats stats =
      greedy_execute(world.sb.env, world.rm, world.sb.state, world.goal, ranker, sampler, gp);
  CHECK((stats.restarts > 0 || stats.nodes_expanded > 0));
  CHECK(stats.restarts <= gp.max_resets + 1);
  CHECK(stats.nodes_expanded <= gp.max_steps);
  if (!stats.solved) CHECK((stats.restarts > gp.max_resets || stats.nodes_expanded >= gp.max_steps));
}

TEST_CASE("guided smpl_cont tries learned samples before uniform ones") {
  SceneBuilder sb;
  sb.region("home", 2.3, 5.0, 2.2, 4.5);
  int goal_region = sb.region("goal", 7.9, 5.0, 1.6, 1.6);
  int obj = sb.disc("obj", 0.25, 3.0, 5.0);
  Roadmap rm = build_roadmap(sb.env, 600, 0.9, 3);
  CollisionCache cache(rm, sb.env, sb.state);
  Rng rng(8);

  // constant generator heads: zero weights, biases chosen so the pick comes
  // from bearing atan2(1,0)=pi/2... wait wait, the pick head normalizes (bias0, bias1).
  LearnedSampler sampler;
  sampler.tau_v = 0.5;
  sampler.keyconfigs.configs = {Pose2(1, 1, 0)};
  sampler.keyconfigs.min_separation = 0.5;
  const int n_k = 1;
  {
    SamplerHead pick;
    pick.phase = Phase::Pick;
    pick.region = goal_region;
    pick.generator = nn::Mlp({2 * n_k + 3 + 4, 2}, nn::Activation::Relu, nn::Activation::Linear, rng);
    for (nn::Tensor* t : pick.generator.param_tensors())
      for (double& v : t->data) v = 0.0;
    pick.generator.param_tensors()[1]->data[0] = 1.0;  // bias = (1, 0) -> chi = 0
    pick.critic = nn::Mlp({2 * n_k + 3 + 2, 4, 1}, nn::Activation::Tanh, nn::Activation::Linear, rng);
    sampler.heads[{static_cast<int>(Phase::Pick), goal_region}] = std::move(pick);

    SamplerHead place;
    place.phase = Phase::Place;
    place.region = goal_region;
    place.generator = nn::Mlp({2 * n_k + 3 + 4, 6}, nn::Activation::Relu, nn::Activation::Linear, rng);
    for (nn::Tensor* t : place.generator.param_tensors())
      for (double& v : t->data) v = 0.0;
    // biases zero: place lands exactly at the region center, theta 0
    place.generator.param_tensors()[1]->data[2] = 1.0;  // cos-theta head
    place.generator.param_tensors()[1]->data[4] = 1.0;  // cos-chi head -> chi_place = 0
    place.critic = nn::Mlp({2 * n_k + 3 + 6, 4, 1}, nn::Activation::Tanh, nn::Activation::Linear, rng);
    sampler.heads[{static_cast<int>(Phase::Place), goal_region}] = std::move(place);
  }

  SamplingGuidance guidance;
  guidance.sampler = &sampler;
  guidance.phi = {0.0, 0.0};
  auto res = smpl_cont(sb.env, rm, cache, sb.state, {obj, goal_region}, 2000, 5, rng, &guidance);
  REQUIRE(res.has_value());
  // the first partially feasible slot is the deterministic guided draw
  CHECK(res->kappa.pick_bearing == doctest::Approx(0.0).epsilon(1e-9));
  CHECK(res->kappa.place_pose.x == doctest::Approx(7.9));
  CHECK(res->kappa.place_pose.y == doctest::Approx(5.0));
  CHECK(res->kappa.place_bearing == doctest::Approx(0.0).epsilon(1e-9));
}
