#include "gtamp/world.hpp"

#include <algorithm>
#include <cmath>
#include <fstream>
#include <sstream>

#include <json.hpp>

#include "gtamp/util.hpp"

namespace gtamp {

using nlohmann::json;

int Environment::object_index(const std::string& name) const {
  for (std::size_t i = 0; i < movables.size(); ++i)
    if (movables[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("unknown object: " + name);
}

int Environment::region_index(const std::string& name) const {
  for (std::size_t i = 0; i < regions.size(); ++i)
    if (regions[i].name == name) return static_cast<int>(i);
  throw std::out_of_range("unknown region: " + name);
}

void Environment::validate() const {
  if (!robot_shape.is_disc()) throw std::invalid_argument("robot must be a disc");
  if (workspace.shape.is_disc()) throw std::invalid_argument("workspace must be a rectangle");
  std::vector<std::string> names;
  for (const auto& m : movables) names.push_back(m.name);
  for (const auto& r : regions) names.push_back(r.name);
  std::sort(names.begin(), names.end());
  if (std::adjacent_find(names.begin(), names.end()) != names.end())
    throw std::invalid_argument("entity names must be unique");
  for (const auto& r : regions)
    if (!contains(workspace, r.footprint))
      throw std::invalid_argument("region outside workspace: " + r.name);
  for (const auto& f : fixed)
    if (!contains(workspace, f)) throw std::invalid_argument("fixed obstacle outside workspace");
}

std::uint64_t Environment::hash() const {
  std::uint64_t h = mix64(seed);
  auto add_shape = [&](const Shape& s) {
    h = hash_combine(h, static_cast<std::uint64_t>(s.kind));
    h = hash_combine(h, hash_double(s.radius));
    h = hash_combine(h, hash_double(s.half_width));
    h = hash_combine(h, hash_double(s.half_height));
  };
  auto add_pose = [&](const Pose2& p) {
    h = hash_combine(h, hash_double(p.x));
    h = hash_combine(h, hash_double(p.y));
    h = hash_combine(h, hash_double(p.theta));
  };
  for (const auto& m : movables) {
    h = hash_combine(h, hash_string(m.name));
    add_shape(m.shape);
  }
  for (const auto& f : fixed) {
    add_shape(f.shape);
    add_pose(f.pose);
  }
  for (const auto& r : regions) {
    h = hash_combine(h, hash_string(r.name));
    add_shape(r.footprint.shape);
    add_pose(r.footprint.pose);
  }
  add_shape(workspace.shape);
  add_pose(workspace.pose);
  add_shape(robot_shape);
  return h;
}

Footprint object_footprint(const Environment& env, const WorldState& state, int object) {
  return {env.movables.at(object).shape, state.object_poses.at(object)};
}

static double standoff_distance(const Environment& env, int object) {
  return env.robot_shape.radius + env.movables.at(object).shape.circumradius() + kGraspStandoff;
}

Pose2 pick_config(const Environment& env, const WorldState& state, int object, double chi_pick) {
  const Pose2& obj = state.object_poses.at(object);
  double d = standoff_distance(env, object);
  return Pose2(obj.x + d * std::cos(chi_pick), obj.y + d * std::sin(chi_pick), chi_pick + M_PI);
}

Pose2 place_config(const Environment& env, int object, const Pose2& place_pose, double chi_place) {
  double d = standoff_distance(env, object);
  return Pose2(place_pose.x + d * std::cos(chi_place), place_pose.y + d * std::sin(chi_place),
               chi_place + M_PI);
}

Pose2 grasp_transform(const Environment& env, const WorldState& state, int object,
                      double chi_pick) {
  Pose2 q = pick_config(env, state, object, chi_pick);
  return compose(inverse(q), state.object_poses.at(object));
}

bool robot_clear_of_fixed(const Environment& env, const Pose2& robot_pose) {
  Footprint robot{env.robot_shape, robot_pose};
  if (!contains(env.workspace, robot)) return false;
  for (const auto& f : env.fixed)
    if (collides(robot, f)) return false;
  return true;
}

bool robot_in_collision(const Environment& env, const WorldState& state, const Pose2& robot_pose,
                        int ignore_object) {
  if (!robot_clear_of_fixed(env, robot_pose)) return true;
  Footprint robot{env.robot_shape, robot_pose};
  for (std::size_t i = 0; i < env.movables.size(); ++i) {
    if (static_cast<int>(i) == ignore_object) continue;
    if (collides(robot, object_footprint(env, state, static_cast<int>(i)))) return true;
  }
  return false;
}

bool placement_in_collision(const Environment& env, const WorldState& state, int object,
                            const Pose2& pose, int ignore_object) {
  Footprint fp{env.movables.at(object).shape, pose};
  if (!contains(env.workspace, fp)) return true;
  for (const auto& f : env.fixed)
    if (collides(fp, f)) return true;
  for (std::size_t i = 0; i < env.movables.size(); ++i) {
    if (static_cast<int>(i) == object || static_cast<int>(i) == ignore_object) continue;
    if (collides(fp, object_footprint(env, state, static_cast<int>(i)))) return true;
  }
  return false;
}

WorldState transition(const Environment& env, const WorldState& state,
                      const ConcreteAction& action) {
  if (action.pre_path.empty() || action.manip_path.empty())
    throw InfeasibleAction("transition: action lacks motion plans");
  const int obj = action.discrete.object;
  if (obj < 0 || obj >= static_cast<int>(env.movables.size()))
    throw InfeasibleAction("transition: bad object index");
  WorldState next = state;
  next.object_poses[obj] = action.continuous.place_pose;
  next.robot = place_config(env, obj, action.continuous.place_pose, action.continuous.place_bearing);
  next.held.reset();
  next.plan_trace.push_back(action);
  return next;
}

bool is_goal(const Environment& env, const WorldState& state, const GoalSpec& goal) {
  for (const auto& [obj, region] : goal.pairs)
    if (!contains(env.regions.at(region).footprint, object_footprint(env, state, obj)))
      return false;
  return true;
}

namespace {

// Sample a pose for shape inside an axis-aligned box, clear of fixed
// obstacles and already-placed footprints.
std::optional<Pose2> sample_placement(Rng& rng, const Environment& env, const Shape& shape,
                                      double x_lo, double x_hi, double y_lo, double y_hi,
                                      const std::vector<Footprint>& placed, int attempts) {
  for (int t = 0; t < attempts; ++t) {
    double theta = shape.is_disc() ? 0.0 : rng.uniform(-M_PI, M_PI);
    Pose2 pose(rng.uniform(x_lo, x_hi), rng.uniform(y_lo, y_hi), theta);
    Footprint fp{shape, pose};
    if (!contains(env.workspace, fp)) continue;
    bool bad = false;
    for (const auto& f : env.fixed)
      if (collides(fp, f)) { bad = true; break; }
    if (bad) continue;
    for (const auto& p : placed)
      if (collides(fp, p)) { bad = true; break; }
    if (!bad) return pose;
  }
  return std::nullopt;
}

Shape sample_object_shape(Rng& rng) {
  if (rng.uniform() < 0.75) return Shape::disc(rng.uniform(0.25, 0.35));
  return Shape::rectangle(rng.uniform(0.2, 0.3), rng.uniform(0.2, 0.3));
}

}  // namespace

Instance generate_instance(std::uint64_t seed, const InstanceConfig& config) {
  if (config.n_goal_objects + config.n_blockers > config.n_movables)
    throw std::invalid_argument("generate_instance: counts exceed n_movables");
  Rng rng(mix64(seed, 0x67a1f3));

  Instance inst;
  Environment& env = inst.env;
  env.seed = seed;
  env.robot_shape = Shape::disc(0.3);
  env.workspace = {Shape::rectangle(5.0, 5.0), Pose2(5.0, 5.0, 0.0)};
  // Vertical wall at x=5 with a 2 m door centered at y=5.
  env.fixed.push_back({Shape::rectangle(0.3, 2.0), Pose2(5.0, 2.0, 0.0)});
  env.fixed.push_back({Shape::rectangle(0.3, 2.0), Pose2(5.0, 8.0, 0.0)});
  env.regions.push_back({"home", {Shape::rectangle(2.2, 4.5), Pose2(2.3, 5.0, 0.0)}});
  env.regions.push_back({"goal", {Shape::rectangle(1.6, 1.6), Pose2(7.9, 5.0, 0.0)}});
  const Footprint& home = env.regions[0].footprint;

  const int n_extras = config.n_movables - config.n_goal_objects - config.n_blockers;
  std::vector<Footprint> placed;

  auto place_in = [&](const Shape& shape, double x_lo, double x_hi, double y_lo,
                      double y_hi) -> Pose2 {
    auto pose = sample_placement(rng, env, shape, x_lo, x_hi, y_lo, y_hi, placed,
                                 config.max_rejections);
    if (!pose) throw GenerationFailed("generate_instance: placement rejection budget exhausted");
    placed.push_back({shape, *pose});
    return *pose;
  };

  // Goal objects and extras live in the home room; blockers sit in the exit
  // strip so the door passage is occluded.
  const double home_x_lo = home.pose.x - home.shape.half_width + 0.4;
  const double home_x_hi = home.pose.x + home.shape.half_width - 0.4;
  const double home_y_lo = home.pose.y - home.shape.half_height + 0.4;
  const double home_y_hi = home.pose.y + home.shape.half_height - 0.4;

  std::vector<Pose2> poses;
  for (int i = 0; i < config.n_goal_objects; ++i) {
    Shape s = sample_object_shape(rng);
    env.movables.push_back({"obj" + std::to_string(i), s});
    poses.push_back(place_in(s, home_x_lo, home_x_hi, home_y_lo, home_y_hi));
  }
  for (int i = 0; i < config.n_blockers; ++i) {
    Shape s = sample_object_shape(rng);
    env.movables.push_back({"blk" + std::to_string(i), s});
    if (i == 0)
      poses.push_back(place_in(s, 4.6, 5.4, 4.3, 5.7));
    else
      poses.push_back(place_in(s, 4.0, 6.0, 3.6, 6.4));
  }
  for (int i = 0; i < n_extras; ++i) {
    Shape s = sample_object_shape(rng);
    env.movables.push_back({"ext" + std::to_string(i), s});
    poses.push_back(place_in(s, home_x_lo, home_x_hi, home_y_lo, home_y_hi));
  }

  inst.initial.object_poses = poses;
  inst.initial.held.reset();

  // Robot start in the home room, clear of everything.
  auto robot_pose = sample_placement(rng, env, env.robot_shape, 0.8, 3.6, 1.0, 9.0, placed,
                                     config.max_rejections);
  if (!robot_pose) throw GenerationFailed("generate_instance: no free robot start");
  inst.initial.robot = *robot_pose;

  const int goal_region = env.region_index("goal");
  for (int i = 0; i < config.n_goal_objects; ++i) inst.goal.pairs.emplace_back(i, goal_region);

  env.validate();
  for (const auto& [obj, region] : inst.goal.pairs)
    if (contains(env.regions[region].footprint, object_footprint(env, inst.initial, obj)))
      throw GenerationFailed("generate_instance: goal object already satisfied");

  if (config.n_blockers > 0) {
    // The door axis must be blocked by at least one movable.
    SweptVolume door = sweep({Pose2(4.0, 5.0, 0.0), Pose2(6.0, 5.0, 0.0)}, env.robot_shape,
                             std::nullopt);
    bool occluded = false;
    for (int i = config.n_goal_objects; i < config.n_goal_objects + config.n_blockers; ++i)
      if (door.intersects(object_footprint(env, inst.initial, i))) occluded = true;
    if (!occluded) throw GenerationFailed("generate_instance: exit not occluded");
  }
  return inst;
}

namespace {

json shape_to_json(const Shape& s) {
  if (s.is_disc()) return json{{"kind", "disc"}, {"radius", s.radius}};
  return json{{"kind", "rect"}, {"half_width", s.half_width}, {"half_height", s.half_height}};
}

Shape shape_from_json(const json& j) {
  if (j.at("kind") == "disc") return Shape::disc(j.at("radius").get<double>());
  return Shape::rectangle(j.at("half_width").get<double>(), j.at("half_height").get<double>());
}

json pose_to_json(const Pose2& p) { return json::array({p.x, p.y, p.theta}); }

Pose2 pose_from_json(const json& j) {
  return Pose2(j.at(0).get<double>(), j.at(1).get<double>(), j.at(2).get<double>());
}

json footprint_to_json(const Footprint& f) {
  return json{{"shape", shape_to_json(f.shape)}, {"pose", pose_to_json(f.pose)}};
}

Footprint footprint_from_json(const json& j) {
  return {shape_from_json(j.at("shape")), pose_from_json(j.at("pose"))};
}

}  // namespace

std::string instance_to_json(const Instance& inst) {
  json j;
  j["format"] = "gtamp-instance-v1";
  j["seed"] = inst.env.seed;
  j["robot"] = shape_to_json(inst.env.robot_shape);
  j["workspace"] = footprint_to_json(inst.env.workspace);
  json movables = json::array();
  for (const auto& m : inst.env.movables)
    movables.push_back({{"name", m.name}, {"shape", shape_to_json(m.shape)}});
  j["movables"] = movables;
  json fixed = json::array();
  for (const auto& f : inst.env.fixed) fixed.push_back(footprint_to_json(f));
  j["fixed"] = fixed;
  json regions = json::array();
  for (const auto& r : inst.env.regions)
    regions.push_back({{"name", r.name}, {"footprint", footprint_to_json(r.footprint)}});
  j["regions"] = regions;
  json poses = json::array();
  for (const auto& p : inst.initial.object_poses) poses.push_back(pose_to_json(p));
  j["initial"] = {{"robot", pose_to_json(inst.initial.robot)}, {"object_poses", poses}};
  json goal = json::array();
  for (const auto& [obj, region] : inst.goal.pairs)
    goal.push_back(json::array({inst.env.movables.at(obj).name, inst.env.regions.at(region).name}));
  j["goal"] = goal;
  return j.dump(2) + "\n";
}

Instance instance_from_json(const std::string& text) {
  json j = json::parse(text);
  if (j.at("format") != "gtamp-instance-v1")
    throw std::runtime_error("unsupported instance format");
  Instance inst;
  inst.env.seed = j.at("seed").get<std::uint64_t>();
  inst.env.robot_shape = shape_from_json(j.at("robot"));
  inst.env.workspace = footprint_from_json(j.at("workspace"));
  for (const auto& m : j.at("movables"))
    inst.env.movables.push_back({m.at("name").get<std::string>(), shape_from_json(m.at("shape"))});
  for (const auto& f : j.at("fixed")) inst.env.fixed.push_back(footprint_from_json(f));
  for (const auto& r : j.at("regions"))
    inst.env.regions.push_back(
        {r.at("name").get<std::string>(), footprint_from_json(r.at("footprint"))});
  inst.initial.robot = pose_from_json(j.at("initial").at("robot"));
  for (const auto& p : j.at("initial").at("object_poses"))
    inst.initial.object_poses.push_back(pose_from_json(p));
  for (const auto& g : j.at("goal"))
    inst.goal.pairs.emplace_back(inst.env.object_index(g.at(0).get<std::string>()),
                                 inst.env.region_index(g.at(1).get<std::string>()));
  inst.env.validate();
  return inst;
}

void save_instance(const Instance& inst, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw std::runtime_error("cannot write " + path);
  out << instance_to_json(inst);
}

Instance load_instance(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot read " + path);
  std::stringstream ss;
  ss << in.rdbuf();
  return instance_from_json(ss.str());
}

}  // namespace gtamp
