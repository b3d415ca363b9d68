#include "gtamp/predicates.hpp"

#include <algorithm>
#include <cmath>

#include "gtamp/util.hpp"

namespace gtamp {

bool AbstractState::bits_equal(const AbstractState& other) const {
  return n_obj == other.n_obj && n_reg == other.n_reg && is_object == other.is_object &&
         is_region == other.is_region && is_goal == other.is_goal && pre_free == other.pre_free &&
         in_region == other.in_region && occludes_pre == other.occludes_pre &&
         manip_free == other.manip_free && occludes_manip == other.occludes_manip;
}

namespace {

std::uint64_t pose_bits(const Pose2& p) {
  return hash_combine(hash_combine(hash_double(p.x), hash_double(p.y)), hash_double(p.theta));
}

struct Candidate {
  int collisions = 0;
  double length = 0.0;
  int index = -1;

  bool better_than(const Candidate& o) const {
    if (collisions != o.collisions) return collisions < o.collisions;
    if (length != o.length) return length < o.length;
    return index < o.index;
  }
};

double path_length(const std::vector<Pose2>& path) {
  double len = 0.0;
  for (std::size_t i = 0; i + 1 < path.size(); ++i) len += distance_xy(path[i], path[i + 1]);
  return len;
}

}  // namespace

PredicateContext::PredicateContext(const Environment& env, const Roadmap& roadmap,
                                   const WorldState& initial, PredicateParams params)
    : env_(&env), roadmap_(&roadmap), params_(params), cache_(roadmap, env, initial) {}

void PredicateContext::sync_cache(const WorldState& state) {
  for (int o = 0; o < cache_.n_objects(); ++o) cache_.update(o, state.object_poses.at(o));
}

const std::vector<PredicateContext::PlacementCandidate>& PredicateContext::placements(int object,
                                                                                      int region) {
  const std::uint64_t key =
      static_cast<std::uint64_t>(object) * env_->regions.size() + static_cast<std::uint64_t>(region);
  auto it = placements_.find(key);
  if (it != placements_.end()) return it->second;

  Rng rng(mix64(mix64(env_->seed, 0x9a17c3), key));
  const Footprint& reg = env_->regions.at(region).footprint;
  const Shape& shape = env_->movables.at(object).shape;
  std::vector<PlacementCandidate> out;
  const int max_attempts = params_.placement_attempts_factor * params_.n_place;
  for (int t = 0; t < max_attempts && static_cast<int>(out.size()) < params_.n_place; ++t) {
    double lx = rng.uniform(-reg.shape.half_width, reg.shape.half_width);
    double ly = rng.uniform(-reg.shape.half_height, reg.shape.half_height);
    double theta = shape.is_disc() ? 0.0 : rng.uniform(-M_PI, M_PI);
    double chi = rng.uniform(-M_PI, M_PI);
    Pose2 pose = compose(reg.pose, Pose2(lx, ly, 0.0));
    pose = Pose2(pose.x, pose.y, theta);
    Footprint fp{shape, pose};
    if (!contains(reg, fp) || !contains(env_->workspace, fp)) continue;
    bool hit_fixed = false;
    for (const auto& f : env_->fixed)
      if (collides(fp, f)) { hit_fixed = true; break; }
    if (hit_fixed) continue;
    out.push_back({pose, chi, place_config(*env_, object, pose, chi)});
  }
  return placements_.emplace(key, std::move(out)).first->second;
}

std::size_t PredicateContext::HitKeyHash::operator()(const HitKey& k) const {
  return mix64(mix64(k.volume_id, static_cast<std::uint64_t>(k.object)), pose_bits(k.pose));
}

bool PredicateContext::volume_hits(const SweptVolume& vol, std::uint64_t volume_id, int object,
                                   const Footprint& fp) {
  if (volume_id == 0) return vol.intersects(fp);
  HitKey key{volume_id, object, fp.pose};
  auto it = hit_memo_.find(key);
  if (it != hit_memo_.end()) return it->second;
  bool hit = vol.intersects(fp);
  hit_memo_.emplace(key, hit);
  return hit;
}

const PredicateContext::ManipNominal& PredicateContext::manip_nominal(const WorldState& state,
                                                                      int object, int region,
                                                                      int bearing, int placement) {
  const std::uint64_t key =
      ((static_cast<std::uint64_t>(object) * env_->regions.size() + region) * params_.n_bearings +
       bearing) * params_.n_place + placement;
  const Pose2& obj_pose = state.object_poses.at(object);
  auto it = manip_nominals_.find(key);
  if (it != manip_nominals_.end() && it->second.o_pose == obj_pose) return it->second;

  ManipNominal mn;
  mn.o_pose = obj_pose;
  const double chi = -M_PI + 2.0 * M_PI * bearing / params_.n_bearings;
  const Pose2 start = pick_config(*env_, state, object, chi);
  const Pose2 g = grasp_transform(*env_, state, object, chi);
  const auto& cand = placements(object, region)[placement];

  PathQuery q;
  q.start = start;
  q.goal = cand.robot_config;
  q.attached = Attached{env_->movables[object].shape, g};
  q.ignore_object = object;
  q.mode = QueryMode::McrRelaxed;
  auto res = query(*roadmap_, cache_, *env_, state, q);
  if (res) {
    mn.route = true;
    mn.path = res->path;
    mn.length = path_length(res->path);
    mn.volume = sweep(res->path, env_->robot_shape, Attached{env_->movables[object].shape, g},
                      roadmap_->interp_step);
    mn.volume.waypoints.push_back({Footprint{env_->movables[object].shape, cand.place_pose}});
    mn.volume_id = next_volume_id_++;
  }
  return manip_nominals_.insert_or_assign(key, std::move(mn)).first->second;
}

AbstractState PredicateContext::compute(const WorldState& state, const GoalSpec& goal,
                                        const AbstractState* prev,
                                        const ConcreteAction* last_action) {
  sync_cache(state);
  const int n_obj = static_cast<int>(env_->movables.size());
  const int n_reg = static_cast<int>(env_->regions.size());
  const int n_ent = n_obj + n_reg;

  AbstractState out;
  out.n_obj = n_obj;
  out.n_reg = n_reg;
  out.is_object.assign(n_ent, 0);
  out.is_region.assign(n_ent, 0);
  out.is_goal.assign(n_ent, 0);
  out.pre_free.assign(n_ent, 0);
  out.in_region.assign(n_ent * n_ent, 0);
  out.occludes_pre.assign(n_ent * n_ent, 0);
  out.manip_free.assign(n_ent * n_ent, 0);
  out.occludes_manip.assign(n_obj * n_obj * n_reg, 0);
  out.vpre.resize(n_obj);
  out.vmanip.resize(n_obj * n_reg);
  out.pick_start.resize(n_obj);
  out.pick_start_valid.assign(n_obj, 0);

  for (int o = 0; o < n_obj; ++o) out.is_object[o] = 1;
  for (int r = 0; r < n_reg; ++r) out.is_region[n_obj + r] = 1;
  for (const auto& [go, gr] : goal.pairs) {
    out.is_goal[go] = 1;
    out.is_goal[n_obj + gr] = 1;
  }

  const int moved = (prev && last_action) ? last_action->discrete.object : -1;
  for (int o = 0; o < n_obj; ++o) {
    if (moved >= 0 && o != moved) {
      for (int r = 0; r < n_reg; ++r)
        out.in_region[out.pair(o, n_obj + r)] = prev->in_region[prev->pair(o, n_obj + r)];
      continue;
    }
    Footprint fp = object_footprint(*env_, state, o);
    for (int r = 0; r < n_reg; ++r)
      out.in_region[out.pair(o, n_obj + r)] = contains(env_->regions[r].footprint, fp) ? 1 : 0;
  }

  std::vector<int> chosen_bearing(n_obj, -1);

  // PREFREE / OCCLUDESPRE: strict tier first, then the relaxed nominal path
  // with the fewest colliding movables.
  for (int o = 0; o < n_obj; ++o) {
    Candidate best;
    bool have_best = false;
    std::vector<Pose2> best_path;

    for (int b = 0; b < params_.n_bearings; ++b) {
      const double chi = -M_PI + 2.0 * M_PI * b / params_.n_bearings;
      Pose2 q = pick_config(*env_, state, o, chi);
      if (!robot_clear_of_fixed(*env_, q)) continue;
      if (robot_in_collision(*env_, state, q)) continue;
      PathQuery pq{state.robot, q, std::nullopt, -1, QueryMode::Strict};
      auto res = query(*roadmap_, cache_, *env_, state, pq);
      if (!res) continue;
      Candidate c{0, path_length(res->path), b};
      if (!have_best || c.better_than(best)) {
        best = c;
        best_path = res->path;
        have_best = true;
      }
    }

    if (have_best) {
      out.pre_free[o] = 1;
      out.vpre[o] = sweep(best_path, env_->robot_shape, std::nullopt, roadmap_->interp_step);
      out.pick_start[o] = pick_config(*env_, state, o, -M_PI + 2.0 * M_PI * best.index / params_.n_bearings);
      out.pick_start_valid[o] = 1;
      chosen_bearing[o] = best.index;
      continue;
    }

    std::vector<int> best_colliding;
    for (int b = 0; b < params_.n_bearings; ++b) {
      const double chi = -M_PI + 2.0 * M_PI * b / params_.n_bearings;
      Pose2 q = pick_config(*env_, state, o, chi);
      if (!robot_clear_of_fixed(*env_, q)) continue;
      PathQuery pq{state.robot, q, std::nullopt, -1, QueryMode::McrRelaxed};
      auto res = query(*roadmap_, cache_, *env_, state, pq);
      if (!res) continue;
      std::vector<int> colliding;
      for (int x : res->colliding_movables)
        if (x != o) colliding.push_back(x);
      Candidate c{static_cast<int>(colliding.size()), path_length(res->path), b};
      if (!have_best || c.better_than(best)) {
        best = c;
        best_path = res->path;
        best_colliding = std::move(colliding);
        have_best = true;
      }
    }
    if (have_best) {
      out.vpre[o] = sweep(best_path, env_->robot_shape, std::nullopt, roadmap_->interp_step);
      for (int x : best_colliding) out.occludes_pre[out.pair(x, o)] = 1;
      out.pick_start[o] =
          pick_config(*env_, state, o, -M_PI + 2.0 * M_PI * best.index / params_.n_bearings);
      out.pick_start_valid[o] = 1;
      chosen_bearing[o] = best.index;
    }
    // else: even relaxed planning failed; volumes empty, bits pessimistic
  }

  // MANIPFREE / OCCLUDESMANIP from the chosen pick config.
  for (int o = 0; o < n_obj; ++o) {
    if (!out.pick_start_valid[o]) continue;
    const int bearing = chosen_bearing[o];
    const double chi = -M_PI + 2.0 * M_PI * bearing / params_.n_bearings;
    const Pose2 g = grasp_transform(*env_, state, o, chi);

    for (int r = 0; r < n_reg; ++r) {
      const auto& cands = placements(o, r);
      Candidate best;
      bool have_best = false;
      std::vector<Pose2> best_path;
      int strict_winner = -1;

      for (int j = 0; j < static_cast<int>(cands.size()); ++j) {
        const auto& cand = cands[j];
        if (!robot_clear_of_fixed(*env_, cand.robot_config)) continue;
        if (placement_in_collision(*env_, state, o, cand.place_pose)) continue;
        if (robot_in_collision(*env_, state, cand.robot_config, o)) continue;
        PathQuery pq{out.pick_start[o], cand.robot_config,
                     Attached{env_->movables[o].shape, g}, o, QueryMode::Strict};
        auto res = query(*roadmap_, cache_, *env_, state, pq);
        if (!res) continue;
        Candidate c{0, path_length(res->path), j};
        if (!have_best || c.better_than(best)) {
          best = c;
          best_path = res->path;
          have_best = true;
          strict_winner = j;
        }
      }

      if (have_best) {
        out.manip_free[out.pair(o, n_obj + r)] = 1;
        SweptVolume vol = sweep(best_path, env_->robot_shape,
                                Attached{env_->movables[o].shape, g}, roadmap_->interp_step);
        vol.waypoints.push_back(
            {Footprint{env_->movables[o].shape, cands[strict_winner].place_pose}});
        out.vmanip[out.or_index(o, r)] = std::move(vol);
        continue;
      }

      int best_j = -1;
      for (int j = 0; j < static_cast<int>(cands.size()); ++j) {
        if (!robot_clear_of_fixed(*env_, cands[j].robot_config)) continue;
        const ManipNominal& mn = manip_nominal(state, o, r, bearing, j);
        if (!mn.route) continue;
        int collisions = 0;
        for (int x = 0; x < n_obj; ++x) {
          if (x == o) continue;
          if (volume_hits(mn.volume, mn.volume_id, x, object_footprint(*env_, state, x)))
            ++collisions;
        }
        Candidate c{collisions, mn.length, j};
        if (!have_best || c.better_than(best)) {
          best = c;
          best_j = j;
          have_best = true;
        }
      }
      if (have_best) {
        const ManipNominal& mn = manip_nominal(state, o, r, bearing, best_j);
        out.vmanip[out.or_index(o, r)] = mn.volume;
        for (int x = 0; x < n_obj; ++x) {
          if (x == o) continue;
          if (volume_hits(mn.volume, mn.volume_id, x, object_footprint(*env_, state, x)))
            out.occludes_manip[out.tri(x, o, r)] = 1;
        }
      }
    }
  }
  return out;
}

AbstractState compute_abstract(const Environment& env, const WorldState& state,
                               const GoalSpec& goal, const Roadmap& roadmap,
                               PredicateParams params) {
  PredicateContext ctx(env, roadmap, state, params);
  return ctx.compute(state, goal);
}

namespace {

bool hits_any(const Environment& env, const SweptVolume& prev_vol, const SweptVolume& next_vol,
              int moved, const Pose2& old_pose, const Pose2& new_pose) {
  Footprint old_fp{env.movables[moved].shape, old_pose};
  Footprint new_fp{env.movables[moved].shape, new_pose};
  return prev_vol.intersects(old_fp) || prev_vol.intersects(new_fp) ||
         next_vol.intersects(old_fp) || next_vol.intersects(new_fp);
}

}  // namespace

ReuseReport reuse_audit(const Environment& env, const WorldState& prev_state,
                        const AbstractState& prev, const ConcreteAction& action,
                        const WorldState& next_state, const AbstractState& next) {
  ReuseReport report;
  const int moved = action.discrete.object;
  const Pose2& old_pose = prev_state.object_poses.at(moved);
  const Pose2& new_pose = next_state.object_poses.at(moved);
  const int n_obj = prev.n_obj, n_reg = prev.n_reg, n_ent = prev.n_ent();

  auto add = [&](const std::string& name, int a, int b, int c, bool before, bool after,
                 bool explained) {
    report.changes.push_back({name, a, b, c, before, after, explained});
    if (!explained) report.consistent = false;
  };

  for (int e = 0; e < n_ent; ++e) {
    if (prev.is_goal[e] != next.is_goal[e]) add("IsGoal", e, -1, -1, prev.is_goal[e], next.is_goal[e], false);
    if (prev.pre_free[e] != next.pre_free[e]) {
      bool ok = e == moved ||
                (e < n_obj && hits_any(env, prev.vpre[e], next.vpre[e], moved, old_pose, new_pose));
      add("PreFree", e, -1, -1, prev.pre_free[e], next.pre_free[e], ok);
    }
  }
  for (int i = 0; i < n_ent; ++i) {
    for (int j = 0; j < n_ent; ++j) {
      int p = prev.pair(i, j);
      if (prev.in_region[p] != next.in_region[p])
        add("InRegion", i, j, -1, prev.in_region[p], next.in_region[p], i == moved);
      if (prev.occludes_pre[p] != next.occludes_pre[p]) {
        bool ok = i == moved || j == moved ||
                  (j < n_obj && hits_any(env, prev.vpre[j], next.vpre[j], moved, old_pose, new_pose));
        add("OccludesPre", i, j, -1, prev.occludes_pre[p], next.occludes_pre[p], ok);
      }
      if (prev.manip_free[p] != next.manip_free[p]) {
        bool ok = i == moved;
        if (!ok && i < n_obj && j >= n_obj) {
          int r = j - n_obj;
          ok = hits_any(env, prev.vmanip[prev.or_index(i, r)], next.vmanip[next.or_index(i, r)],
                        moved, old_pose, new_pose);
        }
        add("ManipFree", i, j, -1, prev.manip_free[p], next.manip_free[p], ok);
      }
    }
  }
  for (int i = 0; i < n_obj; ++i) {
    for (int j = 0; j < n_obj; ++j) {
      for (int r = 0; r < n_reg; ++r) {
        int t = prev.tri(i, j, r);
        if (prev.occludes_manip[t] != next.occludes_manip[t]) {
          bool ok = i == moved || j == moved ||
                    hits_any(env, prev.vmanip[prev.or_index(j, r)], next.vmanip[next.or_index(j, r)],
                             moved, old_pose, new_pose);
          add("OccludesManip", i, j, r, prev.occludes_manip[t], next.occludes_manip[t], ok);
        }
      }
    }
  }
  return report;
}

}  // namespace gtamp
