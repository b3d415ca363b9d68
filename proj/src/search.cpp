#include "gtamp/search.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>

#include "gtamp/scene_graph.hpp"
#include "gtamp/util.hpp"

namespace gtamp {

namespace {

using Clock = std::chrono::steady_clock;

double elapsed_seconds(Clock::time_point t0) {
  return std::chrono::duration<double>(Clock::now() - t0).count();
}

std::vector<DiscreteParams> all_deltas(const Environment& env) {
  std::vector<DiscreteParams> out;
  for (int o = 0; o < static_cast<int>(env.movables.size()); ++o)
    for (int r = 0; r < static_cast<int>(env.regions.size()); ++r) out.push_back({o, r});
  return out;
}

ContinuousParams uniform_kappa(const Environment& env, const DiscreteParams& delta, Rng& rng) {
  const Footprint& reg = env.regions[delta.region].footprint;
  const Shape& shape = env.movables[delta.object].shape;
  ContinuousParams k;
  k.pick_bearing = rng.uniform(-M_PI, M_PI);
  double lx = rng.uniform(-reg.shape.half_width, reg.shape.half_width);
  double ly = rng.uniform(-reg.shape.half_height, reg.shape.half_height);
  Pose2 pos = compose(reg.pose, Pose2(lx, ly, 0.0));
  double theta = shape.is_disc() ? 0.0 : rng.uniform(-M_PI, M_PI);
  k.place_pose = Pose2(pos.x, pos.y, theta);
  k.place_bearing = rng.uniform(-M_PI, M_PI);
  return k;
}

}  // namespace

std::optional<SmplContResult> smpl_cont(const Environment& env, const Roadmap& roadmap,
                                        const CollisionCache& cache, const WorldState& state,
                                        const DiscreteParams& delta, int n_smp, int n_mp, Rng& rng,
                                        const SamplingGuidance* guidance,
                                        long* motion_plan_counter, long motion_budget) {
  const int o = delta.object;
  const int r = delta.region;
  const Footprint& region_fp = env.regions[r].footprint;
  const int guided_slots =
      (guidance && guidance->sampler) ? (n_mp + 1) / 2 : 0;
  std::vector<double> obj_pose;
  if (guided_slots > 0) {
    const Pose2& p = state.object_poses[o];
    obj_pose = {p.x, p.y, p.theta};
  }

  struct Partial {
    ContinuousParams kappa;
    Pose2 q_pick;
    Pose2 q_place;
  };
  std::vector<Partial> partial;

  for (int draw = 0; draw < n_smp && static_cast<int>(partial.size()) < n_mp; ++draw) {
    ContinuousParams k;
    if (static_cast<int>(partial.size()) < guided_slots) {
      const LearnedSampler& s = *guidance->sampler;
      if (s.has(Phase::Pick, r))
        k.pick_bearing = decode_pick_kappa(
            s.draw_kappa(Phase::Pick, r, region_fp, guidance->phi, obj_pose, rng));
      else
        k.pick_bearing = rng.uniform(-M_PI, M_PI);
      if (s.has(Phase::Place, r)) {
        auto [pose, chi] = decode_place_kappa(
            s.draw_kappa(Phase::Place, r, region_fp, guidance->phi, obj_pose, rng));
        k.place_pose = pose;
        k.place_bearing = chi;
      } else {
        ContinuousParams u = uniform_kappa(env, delta, rng);
        k.place_pose = u.place_pose;
        k.place_bearing = u.place_bearing;
      }
    } else {
      k = uniform_kappa(env, delta, rng);
    }

    Pose2 q_pick = pick_config(env, state, o, k.pick_bearing);
    if (!robot_clear_of_fixed(env, q_pick)) continue;
    if (robot_in_collision(env, state, q_pick)) continue;
    Footprint obj_fp{env.movables[o].shape, k.place_pose};
    if (!contains(region_fp, obj_fp)) continue;
    if (placement_in_collision(env, state, o, k.place_pose)) continue;
    Pose2 q_place = place_config(env, o, k.place_pose, k.place_bearing);
    if (!robot_clear_of_fixed(env, q_place)) continue;
    if (robot_in_collision(env, state, q_place, o)) continue;
    partial.push_back({k, q_pick, q_place});
  }
  if (partial.empty()) return std::nullopt;

  long used = 0;
  auto spend = [&]() {
    if (motion_budget >= 0 && used >= motion_budget) return false;
    ++used;
    if (motion_plan_counter) ++*motion_plan_counter;
    return true;
  };

  for (const Partial& p : partial) {
    if (!spend()) return std::nullopt;
    PathQuery pre{state.robot, p.q_pick, std::nullopt, -1, QueryMode::Strict};
    auto pre_res = query(roadmap, cache, env, state, pre);
    if (!pre_res) continue;
    if (!spend()) return std::nullopt;
    Pose2 g = grasp_transform(env, state, o, p.kappa.pick_bearing);
    PathQuery man{p.q_pick, p.q_place, Attached{env.movables[o].shape, g}, o, QueryMode::Strict};
    auto man_res = query(roadmap, cache, env, state, man);
    if (!man_res) continue;
    return SmplContResult{p.kappa, pre_res->path, man_res->path};
  }
  return std::nullopt;
}

namespace {

struct NodeRec {
  WorldState state;
  AbstractState abstract;
  std::vector<double> phi;  // filled when a learned sampler guides the search
};

struct QueueEdge {
  std::shared_ptr<const NodeRec> node;
  DiscreteParams delta;
  EdgePriority priority;
  std::uint64_t seq = 0;
};

// Min-heap ordering: lowest priority value first, FIFO on ties.
struct EdgeWorse {
  bool operator()(const QueueEdge& a, const QueueEdge& b) const {
    if (a.priority.value != b.priority.value) return a.priority.value > b.priority.value;
    return a.seq > b.seq;
  }
};

std::vector<const SweptVolume*> goal_volumes(const AbstractState& abstract, const GoalSpec& goal) {
  std::vector<const SweptVolume*> out;
  for (const auto& [go, gr] : goal.pairs) out.push_back(&abstract.vmanip[abstract.or_index(go, gr)]);
  return out;
}

struct SahsDriver {
  const Environment& env;
  const Roadmap& roadmap;
  const WorldState& s0;
  const GoalSpec& goal;
  int n_smp;
  int n_mp;
  SearchBudget budget;
  std::uint64_t seed;
  const RankNet* ranker;
  const LearnedSampler* guidance;
  bool log_pops;
  // plain mode: fixed caps; doubling mode: caps scale with the iteration
  bool doubling = false;
  long fixed_len_cap = -1;  // max_len for plain sahs
  long L = 1;
  long n_fc = 8;

  SearchStats run() {
    SearchStats stats;
    const auto t0 = Clock::now();
    auto budget_reached = [&]() {
      if (budget.max_nodes >= 0 && stats.nodes_expanded >= budget.max_nodes) return true;
      if (budget.max_seconds >= 0 && elapsed_seconds(t0) >= budget.max_seconds) return true;
      return false;
    };

    if (is_goal(env, s0, goal)) {
      stats.solved = true;
      stats.wall_seconds = elapsed_seconds(t0);
      return stats;
    }

    PredicateContext ctx(env, roadmap, s0);
    AbstractState abstract0 = ctx.compute(s0, goal);
    const std::vector<DiscreteParams> deltas = all_deltas(env);

    std::vector<QueueEdge> heap;
    std::uint64_t next_seq = 0;

    auto make_node = [&](WorldState&& state, AbstractState&& abstract) {
      auto node = std::make_shared<NodeRec>();
      node->state = std::move(state);
      node->abstract = std::move(abstract);
      if (guidance) {
        KeyConfigMatrix m = encode_state(env, node->state, guidance->keyconfigs,
                                         goal_volumes(node->abstract, goal), guidance->tau_v);
        node->phi = m.flatten();
      }
      return node;
    };

    auto push_edges = [&](const std::shared_ptr<const NodeRec>& node) {
      RankMatrix ranks;
      if (ranker) ranks = ranker->forward(encode(node->abstract));
      for (const DiscreteParams& d : deltas) {
        QueueEdge e;
        e.node = node;
        e.delta = d;
        e.priority = ranker ? h_rank(node->abstract, d, goal, ranks)
                            : h_edge(node->abstract, d, goal);
        e.seq = next_seq++;
        heap.push_back(std::move(e));
        std::push_heap(heap.begin(), heap.end(), EdgeWorse{});
      }
    };

    long iter = 0;
    long pop_index = 0;
    while (!budget_reached()) {
      const long len_cap = doubling ? (L << std::min<long>(iter, 40)) : fixed_len_cap;
      const long mp_budget = doubling ? (n_fc << std::min<long>(iter, 40)) : -1;
      stats.length_caps.push_back(len_cap);

      heap.clear();
      {
        WorldState root_state = s0;
        AbstractState root_abs = abstract0;
        push_edges(make_node(std::move(root_state), std::move(root_abs)));
      }

      while (!heap.empty() && !budget_reached()) {
        std::pop_heap(heap.begin(), heap.end(), EdgeWorse{});
        QueueEdge edge = std::move(heap.back());
        heap.pop_back();
        if (log_pops) {
          for (const QueueEdge& rest : heap) {
            if (rest.priority.value < edge.priority.value ||
                (rest.priority.value == edge.priority.value && rest.seq < edge.seq))
              stats.pops_were_minimal = false;
          }
        }
        ++pop_index;

        Rng edge_rng(mix64(mix64(seed, static_cast<std::uint64_t>(iter)),
                           static_cast<std::uint64_t>(pop_index)));
        ctx.sync(edge.node->state);
        SamplingGuidance sg;
        const SamplingGuidance* sgp = nullptr;
        if (guidance) {
          sg.sampler = guidance;
          sg.phi = edge.node->phi;
          sgp = &sg;
        }
        ++stats.smplcont_calls;
        auto res = smpl_cont(env, roadmap, ctx.cache(), edge.node->state, edge.delta, n_smp, n_mp,
                             edge_rng, sgp, &stats.motion_plans, mp_budget);
        int outcome = 0;
        if (res) {
          ConcreteAction action;
          action.discrete = edge.delta;
          action.continuous = res->kappa;
          action.pre_path = res->pre_path;
          action.manip_path = res->manip_path;
          WorldState next = transition(env, edge.node->state, action);
          ++stats.nodes_expanded;
          if (is_goal(env, next, goal)) {
            stats.plan = next.plan_trace;
            stats.solved = true;
            if (!plan_replays_to_goal(env, s0, goal, stats.plan))
              throw std::logic_error("sahs: solved plan fails replay");
            outcome = 2;
            if (log_pops)
              stats.pop_log.push_back({pop_index, edge.seq, edge.priority, outcome});
            stats.wall_seconds = elapsed_seconds(t0);
            return stats;
          }
          outcome = 1;
          if (len_cap < 0 || static_cast<long>(next.plan_trace.size()) < len_cap) {
            AbstractState abs_next = ctx.compute(next, goal, &edge.node->abstract, &action);
            push_edges(make_node(std::move(next), std::move(abs_next)));
          }
        }
        if (log_pops) stats.pop_log.push_back({pop_index, edge.seq, edge.priority, outcome});
      }
      if (budget_reached()) break;
      ++iter;
      ++stats.restarts;
    }
    stats.wall_seconds = elapsed_seconds(t0);
    return stats;
  }
};

}  // namespace

SearchStats sahs(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                 const GoalSpec& goal, const SearchParams& params) {
  SahsDriver d{env,
               roadmap,
               s0,
               goal,
               params.n_smp,
               params.n_mp,
               params.budget,
               params.seed,
               params.ranker,
               params.guidance,
               params.log_pops};
  d.doubling = false;
  d.fixed_len_cap = params.max_len ? static_cast<long>(*params.max_len) : -1;
  return d.run();
}

SearchStats pc_sahs(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                    const GoalSpec& goal, const PcSearchParams& params) {
  SahsDriver d{env,
               roadmap,
               s0,
               goal,
               params.n_smp,
               params.n_mp,
               params.budget,
               params.seed,
               params.ranker,
               params.guidance,
               false};
  d.doubling = true;
  d.L = params.initial_horizon;
  d.n_fc = params.n_fc;
  return d.run();
}

SearchStats greedy_execute(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                           const GoalSpec& goal, const RankNet& ranker,
                           const LearnedSampler& sampler, const GreedyParams& params) {
  SearchStats stats;
  const auto t0 = Clock::now();
  PredicateContext ctx(env, roadmap, s0);
  Rng rng(mix64(params.seed, 0x6eed));
  WorldState state = s0;

  while (true) {
    if (is_goal(env, state, goal)) {
      stats.solved = true;
      stats.plan = state.plan_trace;
      break;
    }
    if (stats.nodes_expanded >= params.max_steps || stats.restarts > params.max_resets) break;

    AbstractState abstract = ctx.compute(state, goal);
    RankMatrix ranks = ranker.forward(encode(abstract));
    int best = 0;
    for (std::size_t i = 1; i < ranks.size(); ++i)
      if (ranks[i] > ranks[best]) best = static_cast<int>(i);
    DiscreteParams delta{best / abstract.n_reg, best % abstract.n_reg};

    KeyConfigMatrix m =
        encode_state(env, state, sampler.keyconfigs, goal_volumes(abstract, goal), sampler.tau_v);
    std::vector<double> phi = m.flatten();
    const Pose2& op = state.object_poses[delta.object];
    std::vector<double> obj_pose{op.x, op.y, op.theta};
    const Footprint& region_fp = env.regions[delta.region].footprint;

    ContinuousParams k;
    if (sampler.has(Phase::Pick, delta.region))
      k.pick_bearing =
          decode_pick_kappa(sampler.draw_kappa(Phase::Pick, delta.region, region_fp, phi, obj_pose, rng));
    else
      k.pick_bearing = rng.uniform(-M_PI, M_PI);
    if (sampler.has(Phase::Place, delta.region)) {
      auto [pose, chi] = decode_place_kappa(
          sampler.draw_kappa(Phase::Place, delta.region, region_fp, phi, obj_pose, rng));
      k.place_pose = pose;
      k.place_bearing = chi;
    } else {
      ContinuousParams u = uniform_kappa(env, delta, rng);
      k.place_pose = u.place_pose;
      k.place_bearing = u.place_bearing;
    }

    bool feasible = false;
    ConcreteAction action;
    action.discrete = delta;
    action.continuous = k;
    do {
      Pose2 q_pick = pick_config(env, state, delta.object, k.pick_bearing);
      if (!robot_clear_of_fixed(env, q_pick) || robot_in_collision(env, state, q_pick)) break;
      Footprint obj_fp{env.movables[delta.object].shape, k.place_pose};
      if (!contains(region_fp, obj_fp)) break;
      if (placement_in_collision(env, state, delta.object, k.place_pose)) break;
      Pose2 q_place = place_config(env, delta.object, k.place_pose, k.place_bearing);
      if (!robot_clear_of_fixed(env, q_place) ||
          robot_in_collision(env, state, q_place, delta.object))
        break;
      ctx.sync(state);
      PathQuery pre{state.robot, q_pick, std::nullopt, -1, QueryMode::Strict};
      auto pre_res = query(roadmap, ctx.cache(), env, state, pre);
      ++stats.motion_plans;
      if (!pre_res) break;
      Pose2 g = grasp_transform(env, state, delta.object, k.pick_bearing);
      PathQuery man{q_pick, q_place, Attached{env.movables[delta.object].shape, g}, delta.object,
                    QueryMode::Strict};
      auto man_res = query(roadmap, ctx.cache(), env, state, man);
      ++stats.motion_plans;
      if (!man_res) break;
      action.pre_path = pre_res->path;
      action.manip_path = man_res->path;
      feasible = true;
    } while (false);

    if (feasible) {
      state = transition(env, state, action);
      ++stats.nodes_expanded;
    } else {
      state = s0;
      ++stats.restarts;
    }
  }
  stats.wall_seconds = elapsed_seconds(t0);
  return stats;
}

bool plan_replays_to_goal(const Environment& env, const WorldState& s0, const GoalSpec& goal,
                          const std::vector<ConcreteAction>& plan) {
  WorldState state = s0;
  for (const ConcreteAction& a : plan) {
    try {
      state = transition(env, state, a);
    } catch (const InfeasibleAction&) {
      return false;
    }
  }
  return is_goal(env, state, goal);
}

}  // namespace gtamp
