#pragma once

#include <cstdint>
#include <memory>
#include <optional>
#include <vector>

#include "gtamp/heuristic.hpp"
#include "gtamp/motion.hpp"
#include "gtamp/predicates.hpp"
#include "gtamp/ranknet.hpp"
#include "gtamp/sampler.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

struct SearchBudget {
  long max_nodes = -1;       // generated states; -1 = unbounded
  double max_seconds = -1.0; // wall clock; -1 = unbounded
};

struct PopRecord {
  long pop_index = 0;
  std::uint64_t insertion_seq = 0;
  EdgePriority priority;
  int outcome = 0;  // 0 infeasible, 1 expanded, 2 reached goal
};

struct SearchStats {
  bool solved = false;
  std::vector<ConcreteAction> plan;
  long nodes_expanded = 0;
  long smplcont_calls = 0;
  long motion_plans = 0;
  int restarts = 0;
  double wall_seconds = 0.0;
  std::vector<long> length_caps;  // per outer iteration (pc-sahs doubling audit)
  std::vector<PopRecord> pop_log;
  bool pops_were_minimal = true;  // queue-discipline audit (when logging)
};

struct SmplContResult {
  ContinuousParams kappa;
  std::vector<Pose2> pre_path;
  std::vector<Pose2> manip_path;
};

struct SamplingGuidance {
  const LearnedSampler* sampler = nullptr;
  std::vector<double> phi;  // key-config encoding of the edge's state
};

// Sample continuous parameters for one abstract action: up to n_smp draws,
// keep the first n_mp passing the cheap endpoint checks, then motion-plan
// them in order and return the first fully feasible one. motion_budget < 0
// means unbounded; otherwise at most that many planner calls are spent.
std::optional<SmplContResult> smpl_cont(const Environment& env, const Roadmap& roadmap,
                                        const CollisionCache& cache, const WorldState& state,
                                        const DiscreteParams& delta, int n_smp, int n_mp, Rng& rng,
                                        const SamplingGuidance* guidance = nullptr,
                                        long* motion_plan_counter = nullptr,
                                        long motion_budget = -1);

struct SearchParams {
  int n_smp = 2000;  // continuous-parameter draws per edge
  int n_mp = 5;      // partially feasible samples sent to the motion planner
  SearchBudget budget;
  std::optional<int> max_len;  // plan-length horizon; none by default
  std::uint64_t seed = 0;
  const RankNet* ranker = nullptr;          // adds the softmax rank bonus
  const LearnedSampler* guidance = nullptr; // biases smpl_cont draws
  bool log_pops = false;
};

// Greedy abstract-edge search with restarts. Deterministic per seed.
SearchStats sahs(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                 const GoalSpec& goal, const SearchParams& params);

struct PcSearchParams {
  int initial_horizon = 1;  // L
  int n_fc = 8;             // motion-planner call budget unit per smpl_cont
  int n_smp = 2000;
  int n_mp = 5;
  SearchBudget budget;  // optional outer bound; pc-sahs may run unbounded
  std::uint64_t seed = 0;
  const RankNet* ranker = nullptr;
  const LearnedSampler* guidance = nullptr;
};

// Probabilistically complete variant: per outer iteration the plan-length cap
// is L * 2^iter and the per-edge motion budget is n_fc * 2^iter.
SearchStats pc_sahs(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                    const GoalSpec& goal, const PcSearchParams& params);

struct GreedyParams {
  int max_steps = 20;
  int max_resets = 10;
  std::uint64_t seed = 0;
};

// Pure-learning baseline: argmax-rank abstract action, one learned draw of
// continuous parameters, reset to s0 on infeasibility. nodes_expanded counts
// executed steps; restarts counts resets.
SearchStats greedy_execute(const Environment& env, const Roadmap& roadmap, const WorldState& s0,
                           const GoalSpec& goal, const RankNet& ranker,
                           const LearnedSampler& sampler, const GreedyParams& params);

// Replays the plan through the transition model and checks the goal.
bool plan_replays_to_goal(const Environment& env, const WorldState& s0, const GoalSpec& goal,
                          const std::vector<ConcreteAction>& plan);

}  // namespace gtamp
