// Small scene construction helpers shared by the test suites.
#pragma once

#include <string>

#include "gtamp/world.hpp"

namespace gtamp::test {

// Open 10x10 workspace, disc robot r=0.3 at (1,5), no fixed obstacles.
struct SceneBuilder {
  Environment env;
  WorldState state;

  SceneBuilder() {
    env.robot_shape = Shape::disc(0.3);
    env.workspace = {Shape::rectangle(5.0, 5.0), Pose2(5.0, 5.0, 0.0)};
    env.seed = 12345;
    state.robot = Pose2(1.0, 5.0, 0.0);
  }

  SceneBuilder& robot_at(double x, double y) {
    state.robot = Pose2(x, y, 0.0);
    return *this;
  }

  SceneBuilder& wall(double cx, double cy, double hw, double hh) {
    env.fixed.push_back({Shape::rectangle(hw, hh), Pose2(cx, cy, 0.0)});
    return *this;
  }

  int disc(const std::string& name, double r, double x, double y) {
    env.movables.push_back({name, Shape::disc(r)});
    state.object_poses.push_back(Pose2(x, y, 0.0));
    return static_cast<int>(env.movables.size()) - 1;
  }

  int rect(const std::string& name, double hw, double hh, double x, double y, double theta) {
    env.movables.push_back({name, Shape::rectangle(hw, hh)});
    state.object_poses.push_back(Pose2(x, y, theta));
    return static_cast<int>(env.movables.size()) - 1;
  }

  int region(const std::string& name, double cx, double cy, double hw, double hh) {
    env.regions.push_back({name, {Shape::rectangle(hw, hh), Pose2(cx, cy, 0.0)}});
    return static_cast<int>(env.regions.size()) - 1;
  }
};

}  // namespace gtamp::test
