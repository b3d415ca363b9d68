#include "gtamp/geometry.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <stdexcept>

namespace gtamp {

double normalize_angle(double theta) {
  if (!std::isfinite(theta)) throw std::invalid_argument("angle must be finite");
  double t = std::fmod(theta + M_PI, 2.0 * M_PI);
  if (t < 0) t += 2.0 * M_PI;
  return t - M_PI;
}

Pose2::Pose2(double x_, double y_, double theta_) : x(x_), y(y_), theta(normalize_angle(theta_)) {
  if (!std::isfinite(x) || !std::isfinite(y)) throw std::invalid_argument("pose must be finite");
}

Pose2 compose(const Pose2& a, const Pose2& b) {
  double c = std::cos(a.theta), s = std::sin(a.theta);
  return Pose2(a.x + c * b.x - s * b.y, a.y + s * b.x + c * b.y, a.theta + b.theta);
}

Pose2 inverse(const Pose2& p) {
  double c = std::cos(p.theta), s = std::sin(p.theta);
  return Pose2(-(c * p.x + s * p.y), -(-s * p.x + c * p.y), -p.theta);
}

double distance_xy(const Pose2& a, const Pose2& b) {
  return std::hypot(a.x - b.x, a.y - b.y);
}

Shape Shape::disc(double radius) {
  if (!(radius > 0.0)) throw std::invalid_argument("disc radius must be positive");
  Shape s;
  s.kind = Kind::Disc;
  s.radius = radius;
  return s;
}

Shape Shape::rectangle(double half_width, double half_height) {
  if (!(half_width > 0.0) || !(half_height > 0.0))
    throw std::invalid_argument("rectangle extents must be positive");
  Shape s;
  s.kind = Kind::Rectangle;
  s.half_width = half_width;
  s.half_height = half_height;
  return s;
}

double Shape::circumradius() const {
  return is_disc() ? radius : std::hypot(half_width, half_height);
}

namespace {

std::array<Pose2, 4> rect_corners(const Footprint& f) {
  const double hw = f.shape.half_width, hh = f.shape.half_height;
  return {compose(f.pose, Pose2(hw, hh, 0)), compose(f.pose, Pose2(-hw, hh, 0)),
          compose(f.pose, Pose2(-hw, -hh, 0)), compose(f.pose, Pose2(hw, -hh, 0))};
}

bool disc_disc(const Footprint& a, const Footprint& b) {
  return distance_xy(a.pose, b.pose) <= a.shape.radius + b.shape.radius;
}

// Closest-point distance from the disc center to the rectangle.
bool disc_rect(const Footprint& disc, const Footprint& rect) {
  Pose2 local = compose(inverse(rect.pose), disc.pose);
  double dx = std::max(std::abs(local.x) - rect.shape.half_width, 0.0);
  double dy = std::max(std::abs(local.y) - rect.shape.half_height, 0.0);
  return std::hypot(dx, dy) <= disc.shape.radius;
}

// Separating-axis test over both rectangles' axes.
bool rect_rect(const Footprint& a, const Footprint& b) {
  auto ca = rect_corners(a);
  auto cb = rect_corners(b);
  const double axes[4][2] = {{std::cos(a.pose.theta), std::sin(a.pose.theta)},
                             {-std::sin(a.pose.theta), std::cos(a.pose.theta)},
                             {std::cos(b.pose.theta), std::sin(b.pose.theta)},
                             {-std::sin(b.pose.theta), std::cos(b.pose.theta)}};
  for (const auto& ax : axes) {
    double amin = 1e300, amax = -1e300, bmin = 1e300, bmax = -1e300;
    for (const auto& p : ca) {
      double v = p.x * ax[0] + p.y * ax[1];
      amin = std::min(amin, v);
      amax = std::max(amax, v);
    }
    for (const auto& p : cb) {
      double v = p.x * ax[0] + p.y * ax[1];
      bmin = std::min(bmin, v);
      bmax = std::max(bmax, v);
    }
    if (amax < bmin || bmax < amin) return false;  // strict gap => separated
  }
  return true;
}

}  // namespace

bool collides(const Footprint& a, const Footprint& b) {
  if (a.shape.is_disc() && b.shape.is_disc()) return disc_disc(a, b);
  if (a.shape.is_disc()) return disc_rect(a, b);
  if (b.shape.is_disc()) return disc_rect(b, a);
  return rect_rect(a, b);
}

bool contains(const Footprint& region, const Footprint& obj) {
  if (region.shape.is_disc()) throw std::invalid_argument("contains: region must be a rectangle");
  const double hw = region.shape.half_width, hh = region.shape.half_height;
  if (obj.shape.is_disc()) {
    Pose2 local = compose(inverse(region.pose), obj.pose);
    return std::abs(local.x) + obj.shape.radius <= hw && std::abs(local.y) + obj.shape.radius <= hh;
  }
  // Convex region: the rectangle is inside iff all corners are.
  Pose2 inv = inverse(region.pose);
  for (const auto& corner : rect_corners(obj)) {
    Pose2 local = compose(inv, corner);
    if (std::abs(local.x) > hw || std::abs(local.y) > hh) return false;
  }
  return true;
}

bool SweptVolume::intersects(const Footprint& obs) const {
  for (const auto& wp : waypoints)
    for (const auto& f : wp)
      if (collides(f, obs)) return true;
  return false;
}

std::vector<Pose2> interpolate_path(const std::vector<Pose2>& path, double interp_step) {
  if (path.empty()) throw std::invalid_argument("interpolate_path: empty path");
  std::vector<Pose2> out;
  out.push_back(path.front());
  for (std::size_t i = 0; i + 1 < path.size(); ++i) {
    const Pose2& a = path[i];
    const Pose2& b = path[i + 1];
    double len = distance_xy(a, b);
    int steps = std::max(1, static_cast<int>(std::ceil(len / interp_step)));
    double dtheta = normalize_angle(b.theta - a.theta);
    for (int k = 1; k <= steps; ++k) {
      double t = static_cast<double>(k) / steps;
      out.emplace_back(a.x + t * (b.x - a.x), a.y + t * (b.y - a.y), a.theta + t * dtheta);
    }
  }
  return out;
}

SweptVolume sweep(const std::vector<Pose2>& path, const Shape& robot,
                  const std::optional<Attached>& attached, double interp_step) {
  std::vector<Pose2> dense = interpolate_path(path, interp_step);
  SweptVolume vol;
  vol.waypoints.reserve(dense.size());
  for (const Pose2& q : dense) {
    std::vector<Footprint> fps;
    fps.push_back({robot, q});
    if (attached) fps.push_back({attached->shape, compose(q, attached->grasp_transform)});
    vol.waypoints.push_back(std::move(fps));
  }
  return vol;
}

}  // namespace gtamp
