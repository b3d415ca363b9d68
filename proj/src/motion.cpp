#include "gtamp/motion.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <queue>
#include <sstream>

#include <json.hpp>

#include "gtamp/util.hpp"

namespace gtamp {

using nlohmann::json;

namespace {

inline void set_bit(std::vector<std::uint64_t>& bits, int i) {
  bits[static_cast<std::size_t>(i) >> 6] |= (1ULL << (i & 63));
}

inline bool get_bit(const std::vector<std::uint64_t>& bits, int i) {
  return (bits[static_cast<std::size_t>(i) >> 6] >> (i & 63)) & 1ULL;
}

double point_segment_distance(double px, double py, const Pose2& a, const Pose2& b) {
  double vx = b.x - a.x, vy = b.y - a.y;
  double len2 = vx * vx + vy * vy;
  double t = len2 > 0 ? ((px - a.x) * vx + (py - a.y) * vy) / len2 : 0.0;
  t = std::clamp(t, 0.0, 1.0);
  return std::hypot(px - (a.x + t * vx), py - (a.y + t * vy));
}

bool segment_fixed_free(const Environment& env, const Pose2& a, const Pose2& b,
                        double interp_step) {
  for (const Pose2& q : interpolate_path({a, b}, interp_step))
    if (!robot_clear_of_fixed(env, q)) return false;
  return true;
}

}  // namespace

Roadmap build_roadmap(const Environment& env, int n_vertices, double connect_radius,
                      std::uint64_t seed) {
  if (n_vertices < 1) throw std::invalid_argument("build_roadmap: n_vertices must be >= 1");
  Roadmap rm;
  rm.connect_radius = connect_radius;
  rm.env_hash = env.hash();
  rm.seed = seed;

  Rng rng(mix64(seed, 0x70a9));
  const Footprint& ws = env.workspace;
  const double x_lo = ws.pose.x - ws.shape.half_width, x_hi = ws.pose.x + ws.shape.half_width;
  const double y_lo = ws.pose.y - ws.shape.half_height, y_hi = ws.pose.y + ws.shape.half_height;
  const long max_attempts = 1000L * n_vertices + 100000L;
  long attempts = 0;
  while (static_cast<int>(rm.vertices.size()) < n_vertices && attempts < max_attempts) {
    ++attempts;
    Pose2 q(rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi), 0.0);
    if (robot_clear_of_fixed(env, q)) rm.vertices.push_back(q);
  }

  rm.adjacency.resize(rm.vertices.size());
  if (connect_radius > 0) {
    for (std::size_t i = 0; i < rm.vertices.size(); ++i) {
      for (std::size_t j = i + 1; j < rm.vertices.size(); ++j) {
        double len = distance_xy(rm.vertices[i], rm.vertices[j]);
        if (len > connect_radius) continue;
        if (!segment_fixed_free(env, rm.vertices[i], rm.vertices[j], rm.interp_step)) continue;
        RoadmapEdge e;
        e.u = static_cast<int>(i);
        e.v = static_cast<int>(j);
        e.length = len;
        e.samples = interpolate_path({rm.vertices[i], rm.vertices[j]}, rm.interp_step);
        int id = static_cast<int>(rm.edges.size());
        rm.edges.push_back(std::move(e));
        rm.adjacency[i].emplace_back(static_cast<int>(j), id);
        rm.adjacency[j].emplace_back(static_cast<int>(i), id);
      }
    }
  }
  return rm;
}

CollisionCache::CollisionCache(const Roadmap& roadmap, const Environment& env,
                               const WorldState& state)
    : roadmap_(&roadmap), env_(&env) {
  const int n = static_cast<int>(env.movables.size());
  stamps_.resize(n);
  vertex_bits_.resize(n);
  edge_bits_.resize(n);
  for (int i = 0; i < n; ++i) {
    stamps_[i] = state.object_poses.at(i);
    recompute(i);
  }
}

void CollisionCache::recompute(int object) {
  const Roadmap& rm = *roadmap_;
  const std::size_t vwords = (rm.vertices.size() + 63) / 64;
  const std::size_t ewords = (rm.edges.size() + 63) / 64;
  auto& vb = vertex_bits_[object];
  auto& eb = edge_bits_[object];
  vb.assign(vwords, 0);
  eb.assign(ewords, 0);

  const Footprint fp{env_->movables[object].shape, stamps_[object]};
  const double reach = env_->robot_shape.radius + fp.shape.circumradius() + 1e-9;
  for (std::size_t i = 0; i < rm.vertices.size(); ++i) {
    const Pose2& v = rm.vertices[i];
    if (std::hypot(v.x - fp.pose.x, v.y - fp.pose.y) > reach) continue;
    if (collides({env_->robot_shape, v}, fp)) set_bit(vb, static_cast<int>(i));
  }
  for (std::size_t e = 0; e < rm.edges.size(); ++e) {
    const RoadmapEdge& edge = rm.edges[e];
    if (point_segment_distance(fp.pose.x, fp.pose.y, rm.vertices[edge.u], rm.vertices[edge.v]) >
        reach)
      continue;
    for (const Pose2& q : edge.samples) {
      if (collides({env_->robot_shape, q}, fp)) {
        set_bit(eb, static_cast<int>(e));
        break;
      }
    }
  }
}

void CollisionCache::update(int object, const Pose2& new_pose) {
  if (stamps_.at(object) == new_pose) return;
  stamps_[object] = new_pose;
  recompute(object);
}

bool CollisionCache::vertex_blocked_by(int object, int vertex) const {
  return get_bit(vertex_bits_.at(object), vertex);
}

bool CollisionCache::edge_blocked_by(int object, int edge) const {
  return get_bit(edge_bits_.at(object), edge);
}

void CollisionCache::combined(int ignore_object, std::vector<std::uint64_t>& vertex_bits,
                              std::vector<std::uint64_t>& edge_bits) const {
  const std::size_t vwords = (roadmap_->vertices.size() + 63) / 64;
  const std::size_t ewords = (roadmap_->edges.size() + 63) / 64;
  vertex_bits.assign(vwords, 0);
  edge_bits.assign(ewords, 0);
  for (int o = 0; o < n_objects(); ++o) {
    if (o == ignore_object) continue;
    for (std::size_t w = 0; w < vwords; ++w) vertex_bits[w] |= vertex_bits_[o][w];
    for (std::size_t w = 0; w < ewords; ++w) edge_bits[w] |= edge_bits_[o][w];
  }
}

namespace {

// Per-query lazy evaluation of carried-object clearance along roadmap
// elements. Results are memoized because strict search revisits edges.
class AttachedChecker {
 public:
  AttachedChecker(const Roadmap& rm, const Environment& env, const WorldState& state,
                  const PathQuery& q, double carry_theta)
      : rm_(rm), env_(env), state_(state), q_(q), carry_theta_(carry_theta) {
    vertex_memo_.assign(rm.vertices.size(), -1);
    edge_memo_.assign(rm.edges.size(), -1);
  }

  bool pose_ok(const Pose2& robot_pose, bool check_movables) const {
    if (!q_.attached) return true;
    Pose2 carry(robot_pose.x, robot_pose.y, carry_theta_);
    Footprint obj{q_.attached->shape, compose(carry, q_.attached->grasp_transform)};
    if (!contains(env_.workspace, obj)) return false;
    for (const auto& f : env_.fixed)
      if (collides(obj, f)) return false;
    if (check_movables) {
      for (std::size_t i = 0; i < env_.movables.size(); ++i) {
        if (static_cast<int>(i) == q_.ignore_object) continue;
        if (collides(obj, object_footprint(env_, state_, static_cast<int>(i)))) return false;
      }
    }
    return true;
  }

  bool vertex_ok(int v, bool check_movables) {
    if (!q_.attached) return true;
    if (vertex_memo_[v] < 0) vertex_memo_[v] = pose_ok(rm_.vertices[v], check_movables) ? 1 : 0;
    return vertex_memo_[v] == 1;
  }

  bool edge_ok(int e, bool check_movables) {
    if (!q_.attached) return true;
    if (edge_memo_[e] < 0) {
      bool ok = true;
      for (const Pose2& s : rm_.edges[e].samples)
        if (!pose_ok(s, check_movables)) { ok = false; break; }
      edge_memo_[e] = ok ? 1 : 0;
    }
    return edge_memo_[e] == 1;
  }

 private:
  const Roadmap& rm_;
  const Environment& env_;
  const WorldState& state_;
  const PathQuery& q_;
  double carry_theta_;
  std::vector<std::int8_t> vertex_memo_;
  std::vector<std::int8_t> edge_memo_;
};

struct Connector {
  int vertex = -1;
  double cost = 0.0;
};

}  // namespace

std::optional<PathResult> query(const Roadmap& rm, const CollisionCache& cache,
                                const Environment& env, const WorldState& state,
                                const PathQuery& q) {
  const bool strict = q.mode == QueryMode::Strict;
  const double carry_theta = q.start.theta;
  if (!robot_clear_of_fixed(env, q.start) || !robot_clear_of_fixed(env, q.goal))
    return std::nullopt;

  AttachedChecker att(rm, env, state, q, carry_theta);

  auto segment_ok = [&](const Pose2& a, const Pose2& b) {
    for (const Pose2& s : interpolate_path({a, b}, rm.interp_step)) {
      if (!robot_clear_of_fixed(env, s)) return false;
      if (!att.pose_ok(Pose2(s.x, s.y, carry_theta), strict)) return false;
      if (strict) {
        Footprint robot{env.robot_shape, s};
        for (std::size_t i = 0; i < env.movables.size(); ++i) {
          if (static_cast<int>(i) == q.ignore_object) continue;
          if (collides(robot, object_footprint(env, state, static_cast<int>(i)))) return false;
        }
      }
    }
    return true;
  };

  auto finish = [&](std::vector<Pose2> path) -> PathResult {
    for (Pose2& p : path) p.theta = carry_theta;
    PathResult res;
    res.mode = q.mode;
    if (!strict) {
      std::optional<Attached> sweep_att;
      if (q.attached) sweep_att = *q.attached;
      SweptVolume vol = sweep(path, env.robot_shape, sweep_att, rm.interp_step);
      for (std::size_t i = 0; i < env.movables.size(); ++i) {
        if (static_cast<int>(i) == q.ignore_object) continue;
        if (vol.intersects(object_footprint(env, state, static_cast<int>(i))))
          res.colliding_movables.push_back(static_cast<int>(i));
      }
    }
    res.path = std::move(path);
    return res;
  };

  // Trivial and direct connections first.
  if (distance_xy(q.start, q.goal) < 1e-12) return finish({q.start});
  if (distance_xy(q.start, q.goal) <= rm.connect_radius && segment_ok(q.start, q.goal))
    return finish({q.start, q.goal});

  std::vector<std::uint64_t> blocked_v, blocked_e;
  if (strict) cache.combined(q.ignore_object, blocked_v, blocked_e);

  auto vertex_usable = [&](int v) {
    if (strict && get_bit(blocked_v, v)) return false;
    return att.vertex_ok(v, strict);
  };
  auto edge_usable = [&](int e) {
    if (strict && get_bit(blocked_e, e)) return false;
    return att.edge_ok(e, strict);
  };

  // Candidate connectors in distance order; keep the first few whose
  // connecting segment passes the mode's checks.
  auto connectors = [&](const Pose2& p) {
    std::vector<int> order(rm.vertices.size());
    for (std::size_t i = 0; i < order.size(); ++i) order[i] = static_cast<int>(i);
    std::sort(order.begin(), order.end(), [&](int a, int b) {
      double da = distance_xy(p, rm.vertices[a]);
      double db = distance_xy(p, rm.vertices[b]);
      return da != db ? da < db : a < b;
    });
    std::vector<Connector> found;
    int tried = 0;
    for (int v : order) {
      if (static_cast<int>(found.size()) >= 8 || tried >= 96) break;
      ++tried;
      if (!vertex_usable(v)) continue;
      if (!segment_ok(p, rm.vertices[v])) continue;
      found.push_back({v, distance_xy(p, rm.vertices[v])});
    }
    return found;
  };

  std::vector<Connector> starts = connectors(q.start);
  if (starts.empty()) return std::nullopt;
  std::vector<Connector> goals = connectors(q.goal);
  if (goals.empty()) return std::nullopt;

  std::vector<double> goal_cost(rm.vertices.size(), -1.0);
  for (const Connector& c : goals) goal_cost[c.vertex] = c.cost;

  // Uniform-cost search, ties broken by vertex index.
  const double inf = 1e300;
  std::vector<double> dist(rm.vertices.size(), inf);
  std::vector<int> parent(rm.vertices.size(), -1);
  using Item = std::pair<double, int>;
  auto cmp = [](const Item& a, const Item& b) {
    return a.first != b.first ? a.first > b.first : a.second > b.second;
  };
  std::priority_queue<Item, std::vector<Item>, decltype(cmp)> pq(cmp);
  for (const Connector& c : starts) {
    if (c.cost < dist[c.vertex]) {
      dist[c.vertex] = c.cost;
      parent[c.vertex] = -1;
      pq.push({c.cost, c.vertex});
    }
  }

  int best_goal = -1;
  double best_total = inf;
  while (!pq.empty()) {
    auto [d, u] = pq.top();
    pq.pop();
    if (d > dist[u] + 1e-15) continue;
    if (d >= best_total) break;
    if (goal_cost[u] >= 0) {
      double total = d + goal_cost[u];
      if (total < best_total || (total == best_total && (best_goal < 0 || u < best_goal))) {
        best_total = total;
        best_goal = u;
      }
    }
    for (const auto& [v, e] : rm.adjacency[u]) {
      if (!vertex_usable(v) || !edge_usable(e)) continue;
      double nd = d + rm.edges[e].length;
      if (nd < dist[v] - 1e-15) {
        dist[v] = nd;
        parent[v] = u;
        pq.push({nd, v});
      }
    }
  }
  if (best_goal < 0) return std::nullopt;

  std::vector<Pose2> chain;
  for (int v = best_goal; v >= 0; v = parent[v]) chain.push_back(rm.vertices[v]);
  std::reverse(chain.begin(), chain.end());
  std::vector<Pose2> path;
  path.push_back(q.start);
  for (const Pose2& p : chain)
    if (distance_xy(path.back(), p) > 1e-12) path.push_back(p);
  if (distance_xy(path.back(), q.goal) > 1e-12) path.push_back(q.goal);
  return finish(std::move(path));
}

KeyConfigSet extract_key_configs(const std::vector<std::vector<Pose2>>& paths,
                                 double min_separation) {
  KeyConfigSet kc;
  kc.min_separation = min_separation;
  for (const auto& path : paths) {
    for (const Pose2& q : path) {
      bool keep = true;
      for (const Pose2& k : kc.configs) {
        if (distance_xy(q, k) < min_separation) {
          keep = false;
          break;
        }
      }
      if (keep) kc.configs.push_back(q);
    }
  }
  return kc;
}

namespace {

json pose_json(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }
Pose2 pose_from(const json& j) {
  return Pose2(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

}  // namespace

std::string roadmap_to_json(const Roadmap& rm) {
  json j;
  j["format"] = "gtamp-roadmap-v1";
  j["env_hash"] = rm.env_hash;
  j["seed"] = rm.seed;
  j["connect_radius"] = rm.connect_radius;
  j["interp_step"] = rm.interp_step;
  json verts = json::array();
  for (const auto& v : rm.vertices) verts.push_back(pose_json(v));
  j["vertices"] = verts;
  json edges = json::array();
  for (const auto& e : rm.edges) edges.push_back(json::array({e.u, e.v}));
  j["edges"] = edges;
  return j.dump() + "\n";
}

Roadmap roadmap_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "gtamp-roadmap-v1") throw std::runtime_error("unsupported roadmap format");
  Roadmap rm;
  rm.env_hash = j.at("env_hash").get<std::uint64_t>();
  rm.seed = j.at("seed").get<std::uint64_t>();
  rm.connect_radius = j.at("connect_radius").get<double>();
  rm.interp_step = j.at("interp_step").get<double>();
  for (const auto& v : j.at("vertices")) rm.vertices.push_back(pose_from(v));
  rm.adjacency.resize(rm.vertices.size());
  for (const auto& ej : j.at("edges")) {
    RoadmapEdge e;
    e.u = ej.at(0).get<int>();
    e.v = ej.at(1).get<int>();
    e.length = distance_xy(rm.vertices.at(e.u), rm.vertices.at(e.v));
    e.samples = interpolate_path({rm.vertices[e.u], rm.vertices[e.v]}, rm.interp_step);
    int id = static_cast<int>(rm.edges.size());
    rm.edges.push_back(std::move(e));
    rm.adjacency[rm.edges[id].u].emplace_back(rm.edges[id].v, id);
    rm.adjacency[rm.edges[id].v].emplace_back(rm.edges[id].u, id);
  }
  return rm;
}

void save_roadmap(const Roadmap& rm, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << roadmap_to_json(rm);
}

Roadmap load_roadmap(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return roadmap_from_json(ss.str());
}

std::string key_configs_to_json(const KeyConfigSet& kc) {
  json j;
  j["format"] = "gtamp-keyconfigs-v1";
  j["min_separation"] = kc.min_separation;
  json configs = json::array();
  for (const auto& c : kc.configs) configs.push_back(pose_json(c));
  j["configs"] = configs;
  return j.dump() + "\n";
}

KeyConfigSet key_configs_from_json(const std::string& text) {
  json j = json::parse(text);
  KeyConfigSet kc;
  kc.min_separation = j.at("min_separation").get<double>();
  for (const auto& c : j.at("configs")) kc.configs.push_back(pose_from(c));
  return kc;
}

}  // namespace gtamp
