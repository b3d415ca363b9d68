#pragma once

#include <cstdint>
#include <optional>
#include <stdexcept>
#include <string>
#include <utility>
#include <vector>

#include "gtamp/geometry.hpp"

namespace gtamp {

constexpr double kGraspStandoff = 0.05;  // clearance between robot and grasped object

struct Movable {
  std::string name;
  Shape shape;
};

struct Region {
  std::string name;
  Footprint footprint;  // rectangle
};

// Static problem description: shapes, fixed obstacles, regions, workspace.
// Immutable after construction; object/region references are indices.
struct Environment {
  std::vector<Movable> movables;
  std::vector<Footprint> fixed;
  std::vector<Region> regions;
  Footprint workspace;  // axis-aligned rectangle bound
  Shape robot_shape;    // disc
  std::uint64_t seed = 0;  // instance seed; also salts predicate sampling

  int object_index(const std::string& name) const;
  int region_index(const std::string& name) const;
  void validate() const;
  std::uint64_t hash() const;
};

struct HeldObject {
  int object = -1;
  Pose2 grasp_transform;  // object pose in the robot frame
};

struct DiscreteParams {
  int object = -1;
  int region = -1;
  bool operator==(const DiscreteParams&) const = default;
};

struct ContinuousParams {
  double pick_bearing = 0.0;   // chi_pick in [-pi, pi)
  Pose2 place_pose;            // object pose in the world frame
  double place_bearing = 0.0;  // chi_place in [-pi, pi)
};

struct ConcreteAction {
  DiscreteParams discrete;
  ContinuousParams continuous;
  std::vector<Pose2> pre_path;    // robot alone, current config -> pick config
  std::vector<Pose2> manip_path;  // robot + attached object, pick config -> place config
};

struct GoalSpec {
  std::vector<std::pair<int, int>> pairs;  // (object, region)
};

struct WorldState {
  std::vector<Pose2> object_poses;
  Pose2 robot;
  std::optional<HeldObject> held;
  std::vector<ConcreteAction> plan_trace;
};

class InfeasibleAction : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

class GenerationFailed : public std::runtime_error {
 public:
  using std::runtime_error::runtime_error;
};

Footprint object_footprint(const Environment& env, const WorldState& state, int object);

// Robot pose at standoff distance from the object along bearing chi, facing
// the object. Pure geometry; feasibility is checked elsewhere.
Pose2 pick_config(const Environment& env, const WorldState& state, int object, double chi_pick);

// Same standoff geometry around the prospective placement.
Pose2 place_config(const Environment& env, int object, const Pose2& place_pose, double chi_place);

// Object pose in the robot frame implied by pick_config.
Pose2 grasp_transform(const Environment& env, const WorldState& state, int object, double chi_pick);

// Deterministic pick-and-place update. The action must carry valid paths.
WorldState transition(const Environment& env, const WorldState& state, const ConcreteAction& action);

bool is_goal(const Environment& env, const WorldState& state, const GoalSpec& goal);

// True iff the object/robot placement collides with fixed obstacles, leaves
// the workspace, or overlaps another placed movable.
bool placement_in_collision(const Environment& env, const WorldState& state, int object,
                            const Pose2& pose, int ignore_object = -1);
bool robot_in_collision(const Environment& env, const WorldState& state, const Pose2& robot_pose,
                        int ignore_object = -1);
bool robot_clear_of_fixed(const Environment& env, const Pose2& robot_pose);

struct InstanceConfig {
  int n_movables = 8;
  int n_goal_objects = 1;
  int n_blockers = 3;
  int max_rejections = 20000;
};

struct Instance {
  Environment env;
  WorldState initial;
  GoalSpec goal;
};

// Corridor-and-rooms problem generator; deterministic in seed.
Instance generate_instance(std::uint64_t seed, const InstanceConfig& config);

std::string instance_to_json(const Instance& inst);
Instance instance_from_json(const std::string& text);
void save_instance(const Instance& inst, const std::string& path);
Instance load_instance(const std::string& path);

}  // namespace gtamp
