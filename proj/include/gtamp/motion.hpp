#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include "gtamp/geometry.hpp"
#include "gtamp/world.hpp"

namespace gtamp {

struct RoadmapEdge {
  int u = -1;
  int v = -1;
  double length = 0.0;
  std::vector<Pose2> samples;  // interpolated poses including both endpoints
};

// PRM over fixed obstacles only. Immutable after build.
struct Roadmap {
  std::vector<Pose2> vertices;
  std::vector<RoadmapEdge> edges;
  std::vector<std::vector<std::pair<int, int>>> adjacency;  // vertex -> (neighbor, edge id)
  double connect_radius = 0.0;
  double interp_step = kDefaultInterpStep;
  std::uint64_t env_hash = 0;
  std::uint64_t seed = 0;
};

Roadmap build_roadmap(const Environment& env, int n_vertices, double connect_radius,
                      std::uint64_t seed);

std::string roadmap_to_json(const Roadmap& rm);
Roadmap roadmap_from_json(const std::string& text);
void save_roadmap(const Roadmap& rm, const std::string& path);
Roadmap load_roadmap(const std::string& path);

// Which roadmap vertices/edges each movable object currently blocks.
// Entries are valid for the stamped pose only; update() refreshes exactly one
// object. Single writer; snapshot per worker for concurrent reads.
class CollisionCache {
 public:
  CollisionCache(const Roadmap& roadmap, const Environment& env, const WorldState& state);

  void update(int object, const Pose2& new_pose);

  bool vertex_blocked_by(int object, int vertex) const;
  bool edge_blocked_by(int object, int edge) const;
  const Pose2& stamp(int object) const { return stamps_[object]; }

  // OR of all per-object masks, skipping ignore_object.
  void combined(int ignore_object, std::vector<std::uint64_t>& vertex_bits,
                std::vector<std::uint64_t>& edge_bits) const;

  int n_objects() const { return static_cast<int>(stamps_.size()); }

 private:
  void recompute(int object);

  const Roadmap* roadmap_;
  const Environment* env_;
  std::vector<Pose2> stamps_;
  std::vector<std::vector<std::uint64_t>> vertex_bits_;  // per object
  std::vector<std::vector<std::uint64_t>> edge_bits_;
};

enum class QueryMode { Strict, McrRelaxed };

struct PathQuery {
  Pose2 start;
  Pose2 goal;
  std::optional<Attached> attached;
  int ignore_object = -1;  // held object, excluded from the obstacle set
  QueryMode mode = QueryMode::Strict;
};

struct PathResult {
  std::vector<Pose2> path;
  std::vector<int> colliding_movables;  // sorted, only populated in relaxed mode
  QueryMode mode = QueryMode::Strict;
};

// Plan start -> goal on the roadmap. Strict mode treats every movable (via
// the cache) plus any attached body as an obstacle; relaxed mode ignores
// movables during search and reports the ones the swept path would hit.
// Returns nullopt when no fixed-obstacle-free route exists.
std::optional<PathResult> query(const Roadmap& roadmap, const CollisionCache& cache,
                                const Environment& env, const WorldState& state,
                                const PathQuery& q);

struct KeyConfigSet {
  std::vector<Pose2> configs;
  double min_separation = 0.0;
};

// Greedy thinning of path waypoints in insertion order; retained configs are
// pairwise at least min_separation apart.
KeyConfigSet extract_key_configs(const std::vector<std::vector<Pose2>>& paths,
                                 double min_separation);

std::string key_configs_to_json(const KeyConfigSet& kc);
KeyConfigSet key_configs_from_json(const std::string& text);

}  // namespace gtamp
