#include "gtamp/experience.hpp"

#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gtamp/scene_graph.hpp"
#include "gtamp/util.hpp"

namespace gtamp {

using nlohmann::json;

std::uint64_t Episode::id() const { return mix64(instance.env.seed, planner_seed); }

namespace {

// Keep only the goal entities' volumes; the bits stay complete.
void thin_volumes(AbstractState& a, const GoalSpec& goal) {
  std::vector<char> keep_obj(a.n_obj, 0);
  std::vector<char> keep_pair(a.n_obj * a.n_reg, 0);
  for (const auto& [go, gr] : goal.pairs) {
    keep_obj[go] = 1;
    keep_pair[a.or_index(go, gr)] = 1;
  }
  for (int o = 0; o < a.n_obj; ++o)
    if (!keep_obj[o]) a.vpre[o] = SweptVolume{};
  for (int o = 0; o < a.n_obj; ++o)
    for (int r = 0; r < a.n_reg; ++r)
      if (!keep_pair[a.or_index(o, r)]) a.vmanip[a.or_index(o, r)] = SweptVolume{};
}

}  // namespace

Episode run_episode(const Instance& inst, const Roadmap& roadmap, const SearchParams& params) {
  Episode ep;
  ep.instance = inst;
  ep.planner_seed = params.seed;

  SearchStats stats = sahs(inst.env, roadmap, inst.initial, inst.goal, params);
  ep.solved = stats.solved;
  ep.nodes_expanded = stats.nodes_expanded;
  ep.smplcont_calls = stats.smplcont_calls;
  ep.motion_plans = stats.motion_plans;
  ep.wall_seconds = stats.wall_seconds;
  if (!stats.solved) return ep;

  PredicateContext ctx(inst.env, roadmap, inst.initial);
  WorldState state = inst.initial;
  const AbstractState* prev = nullptr;
  AbstractState prev_abs;
  for (const ConcreteAction& action : stats.plan) {
    EpisodeStep step;
    step.object_poses = state.object_poses;
    step.robot = state.robot;
    step.abstract = ctx.compute(state, inst.goal, prev, prev ? &state.plan_trace.back() : nullptr);
    prev_abs = step.abstract;
    prev = &prev_abs;
    thin_volumes(step.abstract, inst.goal);
    step.delta = action.discrete;
    step.kappa = action.continuous;
    step.pre_path = action.pre_path;
    step.manip_path = action.manip_path;
    ep.steps.push_back(std::move(step));
    state = transition(inst.env, state, action);
  }
  ep.final_poses = state.object_poses;
  ep.final_robot = state.robot;
  ep.final_abstract = ctx.compute(state, inst.goal, prev, &state.plan_trace.back());
  thin_volumes(ep.final_abstract, inst.goal);
  if (!is_goal(inst.env, state, inst.goal))
    throw std::logic_error("run_episode: solved plan does not reach the goal");
  return ep;
}

namespace {

json pose_json(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }
Pose2 pose_from(const json& j) {
  return Pose2(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

json path_json(const std::vector<Pose2>& path) {
  json out = json::array();
  for (const auto& p : path) out.push_back(pose_json(p));
  return out;
}

std::vector<Pose2> path_from(const json& j) {
  std::vector<Pose2> out;
  for (const auto& p : j) out.push_back(pose_from(p));
  return out;
}

json shape_json(const Shape& s) {
  if (s.is_disc()) return json{{"kind", "disc"}, {"radius", s.radius}};
  return json{{"kind", "rect"}, {"half_width", s.half_width}, {"half_height", s.half_height}};
}

Shape shape_from(const json& j) {
  if (j.at("kind") == "disc") return Shape::disc(j.at("radius").get<double>());
  return Shape::rectangle(j.at("half_width").get<double>(), j.at("half_height").get<double>());
}

json volume_json(const SweptVolume& v) {
  json out = json::array();
  for (const auto& wp : v.waypoints) {
    json set = json::array();
    for (const auto& fp : wp)
      set.push_back(json{{"shape", shape_json(fp.shape)}, {"pose", pose_json(fp.pose)}});
    out.push_back(set);
  }
  return out;
}

SweptVolume volume_from(const json& j) {
  SweptVolume v;
  for (const auto& set : j) {
    std::vector<Footprint> fps;
    for (const auto& fp : set) fps.push_back({shape_from(fp.at("shape")), pose_from(fp.at("pose"))});
    v.waypoints.push_back(std::move(fps));
  }
  return v;
}

json bits_json(const std::vector<char>& bits) {
  json out = json::array();
  for (char b : bits) out.push_back(static_cast<int>(b));
  return out;
}

std::vector<char> bits_from(const json& j) {
  std::vector<char> out;
  for (const auto& b : j) out.push_back(static_cast<char>(b.get<int>()));
  return out;
}

json abstract_json(const AbstractState& a) {
  json j;
  j["n_obj"] = a.n_obj;
  j["n_reg"] = a.n_reg;
  j["is_object"] = bits_json(a.is_object);
  j["is_region"] = bits_json(a.is_region);
  j["is_goal"] = bits_json(a.is_goal);
  j["pre_free"] = bits_json(a.pre_free);
  j["in_region"] = bits_json(a.in_region);
  j["occludes_pre"] = bits_json(a.occludes_pre);
  j["manip_free"] = bits_json(a.manip_free);
  j["occludes_manip"] = bits_json(a.occludes_manip);
  json vpre = json::array();
  for (const auto& v : a.vpre) vpre.push_back(volume_json(v));
  j["vpre"] = vpre;
  json vmanip = json::array();
  for (const auto& v : a.vmanip) vmanip.push_back(volume_json(v));
  j["vmanip"] = vmanip;
  return j;
}

AbstractState abstract_from(const json& j) {
  AbstractState a;
  a.n_obj = j.at("n_obj").get<int>();
  a.n_reg = j.at("n_reg").get<int>();
  a.is_object = bits_from(j.at("is_object"));
  a.is_region = bits_from(j.at("is_region"));
  a.is_goal = bits_from(j.at("is_goal"));
  a.pre_free = bits_from(j.at("pre_free"));
  a.in_region = bits_from(j.at("in_region"));
  a.occludes_pre = bits_from(j.at("occludes_pre"));
  a.manip_free = bits_from(j.at("manip_free"));
  a.occludes_manip = bits_from(j.at("occludes_manip"));
  for (const auto& v : j.at("vpre")) a.vpre.push_back(volume_from(v));
  for (const auto& v : j.at("vmanip")) a.vmanip.push_back(volume_from(v));
  a.pick_start.resize(a.n_obj);
  a.pick_start_valid.assign(a.n_obj, 0);
  return a;
}

}  // namespace

std::string episode_to_json(const Episode& ep) {
  json j;
  j["format"] = "gtamp-episode-v1";
  j["instance"] = json::parse(instance_to_json(ep.instance));
  j["planner_seed"] = ep.planner_seed;
  j["solved"] = ep.solved;
  j["nodes_expanded"] = ep.nodes_expanded;
  j["smplcont_calls"] = ep.smplcont_calls;
  j["motion_plans"] = ep.motion_plans;
  j["wall_seconds"] = ep.wall_seconds;
  json steps = json::array();
  for (const auto& s : ep.steps) {
    json sj;
    json poses = json::array();
    for (const auto& p : s.object_poses) poses.push_back(pose_json(p));
    sj["object_poses"] = poses;
    sj["robot"] = pose_json(s.robot);
    sj["abstract"] = abstract_json(s.abstract);
    sj["delta"] = json::array({s.delta.object, s.delta.region});
    sj["kappa"] = json{{"pick_bearing", s.kappa.pick_bearing},
                       {"place_pose", pose_json(s.kappa.place_pose)},
                       {"place_bearing", s.kappa.place_bearing}};
    sj["pre_path"] = path_json(s.pre_path);
    sj["manip_path"] = path_json(s.manip_path);
    steps.push_back(std::move(sj));
  }
  j["steps"] = steps;
  if (ep.solved) {
    json poses = json::array();
    for (const auto& p : ep.final_poses) poses.push_back(pose_json(p));
    j["final_poses"] = poses;
    j["final_robot"] = pose_json(ep.final_robot);
    j["final_abstract"] = abstract_json(ep.final_abstract);
  }
  return j.dump() + "\n";
}

Episode episode_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "gtamp-episode-v1") throw std::runtime_error("unsupported episode format");
  Episode ep;
  ep.instance = instance_from_json(j.at("instance").dump());
  ep.planner_seed = j.at("planner_seed").get<std::uint64_t>();
  ep.solved = j.at("solved").get<bool>();
  ep.nodes_expanded = j.at("nodes_expanded").get<long>();
  ep.smplcont_calls = j.at("smplcont_calls").get<long>();
  ep.motion_plans = j.at("motion_plans").get<long>();
  ep.wall_seconds = j.at("wall_seconds").get<double>();
  for (const auto& sj : j.at("steps")) {
    EpisodeStep s;
    for (const auto& p : sj.at("object_poses")) s.object_poses.push_back(pose_from(p));
    s.robot = pose_from(sj.at("robot"));
    s.abstract = abstract_from(sj.at("abstract"));
    s.delta = {sj.at("delta").at(0).get<int>(), sj.at("delta").at(1).get<int>()};
    s.kappa.pick_bearing = sj.at("kappa").at("pick_bearing").get<double>();
    s.kappa.place_pose = pose_from(sj.at("kappa").at("place_pose"));
    s.kappa.place_bearing = sj.at("kappa").at("place_bearing").get<double>();
    s.pre_path = path_from(sj.at("pre_path"));
    s.manip_path = path_from(sj.at("manip_path"));
    ep.steps.push_back(std::move(s));
  }
  if (ep.solved) {
    for (const auto& p : j.at("final_poses")) ep.final_poses.push_back(pose_from(p));
    ep.final_robot = pose_from(j.at("final_robot"));
    ep.final_abstract = abstract_from(j.at("final_abstract"));
    WorldState final_state;
    final_state.object_poses = ep.final_poses;
    final_state.robot = ep.final_robot;
    if (!is_goal(ep.instance.env, final_state, ep.instance.goal))
      throw std::runtime_error("episode marked solved but final state misses the goal");
  }
  return ep;
}

void save_episode(const Episode& ep, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << episode_to_json(ep);
}

Episode load_episode(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return episode_from_json(ss.str());
}

std::vector<RankExample> build_rank_dataset(const std::vector<Episode>& episodes) {
  std::vector<RankExample> out;
  for (const Episode& ep : episodes) {
    if (!ep.solved) continue;
    const int T = static_cast<int>(ep.steps.size());
    for (int t = 0; t < T; ++t) {
      const EpisodeStep& s = ep.steps[t];
      RankExample ex;
      ex.graph = encode(s.abstract);
      ex.expert_index = s.abstract.or_index(s.delta.object, s.delta.region);
      ex.steps_to_goal = static_cast<double>(T - t);
      out.push_back(std::move(ex));
    }
  }
  return out;
}

CleanedDataset build_sampler_dataset(const std::vector<Episode>& episodes,
                                     const KeyConfigSet& keyconfigs, double tau_v) {
  CleanedDataset ds;
  ds.n_k = static_cast<int>(keyconfigs.configs.size());
  for (const Episode& ep : episodes) {
    if (!ep.solved) continue;
    const Environment& env = ep.instance.env;
    const GoalSpec& goal = ep.instance.goal;

    auto goal_vols = [&](const AbstractState& a) {
      std::vector<const SweptVolume*> vols;
      for (const auto& [go, gr] : goal.pairs) {
        vols.push_back(&a.vpre[go]);
        vols.push_back(&a.vmanip[a.or_index(go, gr)]);
      }
      return vols;
    };

    for (std::size_t t = 0; t < ep.steps.size(); ++t) {
      const EpisodeStep& s = ep.steps[t];
      const int o = s.delta.object;
      Footprint fp_t{env.movables[o].shape, s.object_poses[o]};
      const AbstractState& next_abs =
          t + 1 < ep.steps.size() ? ep.steps[t + 1].abstract : ep.final_abstract;
      const Pose2& next_pose =
          t + 1 < ep.steps.size() ? ep.steps[t + 1].object_poses[o] : ep.final_poses[o];
      Footprint fp_t1{env.movables[o].shape, next_pose};
      int m_t = occlusion_count(fp_t, goal_vols(s.abstract));
      int m_t1 = occlusion_count(fp_t1, goal_vols(next_abs));
      if (m_t - m_t1 <= 0) continue;

      WorldState state;
      state.object_poses = s.object_poses;
      state.robot = s.robot;
      KeyConfigMatrix phi =
          encode_state(env, state, keyconfigs, goal_vols(s.abstract), tau_v);
      const Pose2& op = s.object_poses[o];

      SamplerRecord base;
      base.phi = phi.flatten();
      base.obj_pose = {op.x, op.y, op.theta};
      base.object = o;
      base.region = s.delta.region;
      base.episode_id = ep.id();
      base.step = static_cast<int>(t);

      SamplerRecord pick = base;
      pick.phase = Phase::Pick;
      pick.kappa = encode_pick_kappa(s.kappa.pick_bearing);
      ds.records.push_back(std::move(pick));

      SamplerRecord place = base;
      place.phase = Phase::Place;
      place.kappa = encode_place_kappa(s.kappa.place_pose, s.kappa.place_bearing);
      ds.records.push_back(std::move(place));
    }
  }
  return ds;
}

std::vector<std::vector<Pose2>> episode_paths(const std::vector<Episode>& episodes) {
  std::vector<std::vector<Pose2>> out;
  for (const Episode& ep : episodes) {
    if (!ep.solved) continue;
    for (const EpisodeStep& s : ep.steps) {
      out.push_back(s.pre_path);
      out.push_back(s.manip_path);
    }
  }
  return out;
}

bool is_holdout_instance(std::uint64_t instance_seed) {
  return mix64(instance_seed, 0x5b1d) % 5 == 0;
}

}  // namespace gtamp
