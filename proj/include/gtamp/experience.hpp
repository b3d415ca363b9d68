#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "gtamp/predicates.hpp"
#include "gtamp/ranknet.hpp"
#include "gtamp/sampler.hpp"
#include "gtamp/search.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

// One recorded plan step: the state and abstract representation before the
// action, plus the action taken. Swept volumes are stored for goal pairs
// only (all the downstream consumers need).
struct EpisodeStep {
  std::vector<Pose2> object_poses;
  Pose2 robot;
  AbstractState abstract;  // bits always; vpre/vmanip populated for goal entities only
  DiscreteParams delta;
  ContinuousParams kappa;
  std::vector<Pose2> pre_path;
  std::vector<Pose2> manip_path;
};

struct Episode {
  Instance instance;  // self-contained: environment, initial state, goal
  std::uint64_t planner_seed = 0;
  bool solved = false;
  std::vector<EpisodeStep> steps;
  // terminal state (after the last action) with its goal volumes
  std::vector<Pose2> final_poses;
  Pose2 final_robot;
  AbstractState final_abstract;
  long nodes_expanded = 0;
  long smplcont_calls = 0;
  long motion_plans = 0;
  double wall_seconds = 0.0;

  std::uint64_t id() const;  // stable hash of (instance seed, planner seed)
};

// Run the planner on one instance and record the episode. Solved episodes
// carry per-step abstract states recomputed along the plan.
Episode run_episode(const Instance& inst, const Roadmap& roadmap, const SearchParams& params);

std::string episode_to_json(const Episode& ep);
Episode episode_from_json(const std::string& text);
void save_episode(const Episode& ep, const std::string& path);
Episode load_episode(const std::string& path);  // re-verifies solved episodes

// One rank example per plan step of each solved episode.
std::vector<RankExample> build_rank_dataset(const std::vector<Episode>& episodes);

// Key-config records filtered by the occlusion-decrease rule: a step is kept
// only when it strictly reduces the mover's collisions with goal volumes.
CleanedDataset build_sampler_dataset(const std::vector<Episode>& episodes,
                                     const KeyConfigSet& keyconfigs, double tau_v);

// All pre/manip paths of the solved episodes, for key-config extraction.
std::vector<std::vector<Pose2>> episode_paths(const std::vector<Episode>& episodes);

// Deterministic 80/20 split on instance id hash; holdout gets hash % 5 == 0.
bool is_holdout_instance(std::uint64_t instance_seed);

}  // namespace gtamp
