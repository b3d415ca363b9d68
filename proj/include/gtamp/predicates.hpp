#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <unordered_map>
#include <vector>

#include "gtamp/geometry.hpp"
#include "gtamp/motion.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

// Predicate bits for one state, plus the swept volumes that produced them.
// Entities are indexed objects-first: 0..n_obj-1 objects, then regions.
struct AbstractState {
  int n_obj = 0;
  int n_reg = 0;

  // unary, per entity
  std::vector<char> is_object, is_region, is_goal, pre_free;
  // binary, per ordered entity pair (i * n_ent + j)
  std::vector<char> in_region, occludes_pre, manip_free;
  // ternary, per (object, object, region) with the region index local
  std::vector<char> occludes_manip;

  std::vector<SweptVolume> vpre;    // per object; empty when planning failed
  std::vector<SweptVolume> vmanip;  // per (object, region); includes the placed footprint

  // Pick start config backing each object's manip volumes (diagnostic).
  std::vector<Pose2> pick_start;
  std::vector<char> pick_start_valid;

  int n_ent() const { return n_obj + n_reg; }
  int pair(int i, int j) const { return i * n_ent() + j; }
  int tri(int oi, int oj, int rk) const { return (oi * n_obj + oj) * n_reg + rk; }
  int or_index(int o, int rk) const { return o * n_reg + rk; }

  bool InRegion(int ei, int ej) const { return in_region[pair(ei, ej)]; }
  bool OccludesPre(int ei, int ej) const { return occludes_pre[pair(ei, ej)]; }
  bool ManipFree(int ei, int ej) const { return manip_free[pair(ei, ej)]; }
  bool OccludesManip(int oi, int oj, int rk) const { return occludes_manip[tri(oi, oj, rk)]; }

  bool bits_equal(const AbstractState& other) const;
};

struct PredicateParams {
  int n_bearings = 16;  // evenly spaced pick approach angles
  int n_place = 10;     // placement candidates per (object, region)
  int placement_attempts_factor = 40;
};

// Per-instance predicate evaluator. Owns the collision cache and the caches
// of candidate placements, nominal paths, and sweep-vs-object tests so that
// successive states recompute only what an action could have changed.
// Single writer; concurrent use requires one context per worker.
class PredicateContext {
 public:
  PredicateContext(const Environment& env, const Roadmap& roadmap, const WorldState& initial,
                   PredicateParams params = {});

  // prev/last_action enable cheap copies of pose-derived predicates; the
  // result is bit-identical to a from-scratch evaluation either way.
  AbstractState compute(const WorldState& state, const GoalSpec& goal,
                        const AbstractState* prev = nullptr,
                        const ConcreteAction* last_action = nullptr);

  CollisionCache& cache() { return cache_; }
  const Environment& env() const { return *env_; }
  const Roadmap& roadmap() const { return *roadmap_; }
  const PredicateParams& params() const { return params_; }

  // Refresh the collision cache to match the given state.
  void sync(const WorldState& state) { sync_cache(state); }

  struct PlacementCandidate {
    Pose2 place_pose;
    double chi_place = 0.0;
    Pose2 robot_config;
  };
  // Deterministic per (env.seed, object, region); rejection against fixed
  // obstacles only.
  const std::vector<PlacementCandidate>& placements(int object, int region);

 private:
  struct ManipNominal {
    Pose2 o_pose;  // object pose the entry was computed for
    bool route = false;
    std::vector<Pose2> path;
    double length = 0.0;
    SweptVolume volume;  // robot + carried object + placed footprint
    std::uint64_t volume_id = 0;
  };

  void sync_cache(const WorldState& state);
  bool volume_hits(const SweptVolume& vol, std::uint64_t volume_id, int object,
                   const Footprint& fp);
  const ManipNominal& manip_nominal(const WorldState& state, int object, int region, int bearing,
                                    int placement);

  const Environment* env_;
  const Roadmap* roadmap_;
  PredicateParams params_;
  CollisionCache cache_;

  struct HitKey {
    std::uint64_t volume_id = 0;
    int object = -1;
    Pose2 pose;
    bool operator==(const HitKey&) const = default;
  };
  struct HitKeyHash {
    std::size_t operator()(const HitKey& k) const;
  };

  std::unordered_map<std::uint64_t, std::vector<PlacementCandidate>> placements_;
  std::unordered_map<std::uint64_t, ManipNominal> manip_nominals_;
  std::unordered_map<HitKey, bool, HitKeyHash> hit_memo_;
  std::uint64_t next_volume_id_ = 1;
};

// From-scratch evaluation with a fresh context.
AbstractState compute_abstract(const Environment& env, const WorldState& state,
                               const GoalSpec& goal, const Roadmap& roadmap,
                               PredicateParams params = {});

// Report of predicate changes between consecutive states.
struct ReuseReport {
  struct Change {
    std::string predicate;
    int a = -1, b = -1, c = -1;
    bool before = false, after = false;
    bool explained = false;  // involves the moved object or its footprints hit the volume
  };
  std::vector<Change> changes;
  bool consistent = true;  // every change explained
};

ReuseReport reuse_audit(const Environment& env, const WorldState& prev_state,
                        const AbstractState& prev, const ConcreteAction& action,
                        const WorldState& next_state, const AbstractState& next);

}  // namespace gtamp
