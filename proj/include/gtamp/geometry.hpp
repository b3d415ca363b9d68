#pragma once

#include <optional>
#include <vector>

namespace gtamp {

constexpr double kDefaultInterpStep = 0.05;  // meters between swept-volume waypoints

// Normalize an angle into [-pi, pi).
double normalize_angle(double theta);

// Planar rigid pose. theta is kept normalized to [-pi, pi).
struct Pose2 {
  double x = 0.0;
  double y = 0.0;
  double theta = 0.0;

  Pose2() = default;
  Pose2(double x_, double y_, double theta_);

  bool operator==(const Pose2&) const = default;
};

// a then b: the pose of b expressed in a's frame, mapped to the world.
Pose2 compose(const Pose2& a, const Pose2& b);
Pose2 inverse(const Pose2& p);
double distance_xy(const Pose2& a, const Pose2& b);

struct Shape {
  enum class Kind { Disc, Rectangle };
  Kind kind = Kind::Disc;
  double radius = 0.0;       // disc
  double half_width = 0.0;   // rectangle
  double half_height = 0.0;  // rectangle

  static Shape disc(double radius);
  static Shape rectangle(double half_width, double half_height);

  bool is_disc() const { return kind == Kind::Disc; }
  // Radius of the smallest origin-centered disc containing the shape.
  double circumradius() const;

  bool operator==(const Shape&) const = default;
};

// A shape placed in the workspace.
struct Footprint {
  Shape shape;
  Pose2 pose;

  bool operator==(const Footprint&) const = default;
};

// Closed-set intersection test; tangency counts as collision.
bool collides(const Footprint& a, const Footprint& b);

// True iff obj lies entirely inside region. region must be a rectangle.
bool contains(const Footprint& region, const Footprint& obj);

// Workspace occupancy of the robot (and an optionally attached body) along a
// path, one footprint set per interpolated waypoint.
struct SweptVolume {
  std::vector<std::vector<Footprint>> waypoints;

  bool empty() const { return waypoints.empty(); }
  // True iff any waypoint footprint collides with obs.
  bool intersects(const Footprint& obs) const;
};

struct Attached {
  Shape shape;
  Pose2 grasp_transform;  // body pose in the robot frame
};

// Interpolate path at interp_step and stamp the robot (plus attachment) at
// every waypoint. path must be nonempty.
SweptVolume sweep(const std::vector<Pose2>& path, const Shape& robot,
                  const std::optional<Attached>& attached,
                  double interp_step = kDefaultInterpStep);

// Densify a polyline so consecutive poses are at most interp_step apart.
std::vector<Pose2> interpolate_path(const std::vector<Pose2>& path, double interp_step);

}  // namespace gtamp
