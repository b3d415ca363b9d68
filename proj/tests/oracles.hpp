// Test-only oracles, independent of the library's collision and search code:
// point-membership boundary sampling for collision, grid BFS for
// reachability, central finite differences for gradients.
#pragma once

#include <cmath>
#include <deque>
#include <functional>
#include <vector>

#include "gtamp/geometry.hpp"
#include "gtamp/world.hpp"

namespace gtamp::test {

inline bool point_in_shape(const Footprint& f, double x, double y) {
  if (f.shape.is_disc())
    return std::hypot(x - f.pose.x, y - f.pose.y) <= f.shape.radius;
  double c = std::cos(f.pose.theta), s = std::sin(f.pose.theta);
  double dx = x - f.pose.x, dy = y - f.pose.y;
  double u = c * dx + s * dy, v = -s * dx + c * dy;
  return std::abs(u) <= f.shape.half_width && std::abs(v) <= f.shape.half_height;
}

inline std::vector<std::pair<double, double>> boundary_points(const Footprint& f, double step) {
  std::vector<std::pair<double, double>> pts;
  if (f.shape.is_disc()) {
    double r = f.shape.radius;
    int n = std::max(8, static_cast<int>(std::ceil(2 * M_PI * r / step)));
    for (int i = 0; i < n; ++i) {
      double a = 2 * M_PI * i / n;
      pts.emplace_back(f.pose.x + r * std::cos(a), f.pose.y + r * std::sin(a));
    }
  } else {
    double hw = f.shape.half_width, hh = f.shape.half_height;
    double c = std::cos(f.pose.theta), s = std::sin(f.pose.theta);
    auto emit = [&](double u, double v) {
      pts.emplace_back(f.pose.x + c * u - s * v, f.pose.y + s * u + c * v);
    };
    int nx = std::max(2, static_cast<int>(std::ceil(2 * hw / step)));
    int ny = std::max(2, static_cast<int>(std::ceil(2 * hh / step)));
    for (int i = 0; i <= nx; ++i) {
      double u = -hw + 2 * hw * i / nx;
      emit(u, hh);
      emit(u, -hh);
    }
    for (int i = 0; i <= ny; ++i) {
      double v = -hh + 2 * hh * i / ny;
      emit(hw, v);
      emit(-hw, v);
    }
  }
  return pts;
}

// Dense boundary/center sampling oracle. For convex shapes, intersection
// implies either one center is inside the other shape or one boundary
// crosses the other's interior.
inline bool oracle_collides(const Footprint& a, const Footprint& b, double step = 1e-3) {
  if (point_in_shape(b, a.pose.x, a.pose.y) || point_in_shape(a, b.pose.x, b.pose.y)) return true;
  for (const auto& [x, y] : boundary_points(a, step))
    if (point_in_shape(b, x, y)) return true;
  for (const auto& [x, y] : boundary_points(b, step))
    if (point_in_shape(a, x, y)) return true;
  return false;
}

inline Footprint inflate(const Footprint& f, double d) {
  Footprint out = f;
  if (out.shape.is_disc())
    out.shape.radius = std::max(1e-9, out.shape.radius + d);
  else {
    out.shape.half_width = std::max(1e-9, out.shape.half_width + d);
    out.shape.half_height = std::max(1e-9, out.shape.half_height + d);
  }
  return out;
}

// True when the pair sits within +/- band of tangency: the oracle verdict
// flips under inflation/deflation, so disagreement there is unscored.
inline bool near_boundary(const Footprint& a, const Footprint& b, double band = 1e-3) {
  return oracle_collides(inflate(a, band), b) != oracle_collides(inflate(a, -band), b);
}

// 4-connected grid BFS over robot positions; treats the robot as a disc at
// each cell center. include_movables adds the state's objects as obstacles.
inline bool grid_reachable(const Environment& env, const WorldState& state, const Pose2& start,
                           const Pose2& goal, double cell, bool include_movables) {
  const Footprint& ws = env.workspace;
  double x0 = ws.pose.x - ws.shape.half_width, y0 = ws.pose.y - ws.shape.half_height;
  int nx = static_cast<int>(std::floor(2 * ws.shape.half_width / cell));
  int ny = static_cast<int>(std::floor(2 * ws.shape.half_height / cell));
  auto free_cell = [&](int ix, int iy) {
    Pose2 q(x0 + (ix + 0.5) * cell, y0 + (iy + 0.5) * cell, 0.0);
    if (!robot_clear_of_fixed(env, q)) return false;
    if (include_movables) {
      Footprint robot{env.robot_shape, q};
      for (std::size_t i = 0; i < env.movables.size(); ++i)
        if (collides(robot, object_footprint(env, state, static_cast<int>(i)))) return false;
    }
    return true;
  };
  auto cell_of = [&](const Pose2& p) {
    return std::pair<int, int>{static_cast<int>((p.x - x0) / cell),
                               static_cast<int>((p.y - y0) / cell)};
  };
  auto [sx, sy] = cell_of(start);
  auto [gx, gy] = cell_of(goal);
  if (sx < 0 || sy < 0 || gx < 0 || gy < 0 || sx >= nx || sy >= ny || gx >= nx || gy >= ny)
    return false;
  if (!free_cell(sx, sy) || !free_cell(gx, gy)) return false;
  std::vector<char> seen(static_cast<std::size_t>(nx) * ny, 0);
  std::deque<std::pair<int, int>> queue{{sx, sy}};
  seen[sy * nx + sx] = 1;
  while (!queue.empty()) {
    auto [x, y] = queue.front();
    queue.pop_front();
    if (x == gx && y == gy) return true;
    const int dx[4] = {1, -1, 0, 0}, dy[4] = {0, 0, 1, -1};
    for (int d = 0; d < 4; ++d) {
      int ax = x + dx[d], ay = y + dy[d];
      if (ax < 0 || ay < 0 || ax >= nx || ay >= ny) continue;
      if (seen[ay * nx + ax] || !free_cell(ax, ay)) continue;
      seen[ay * nx + ax] = 1;
      queue.emplace_back(ax, ay);
    }
  }
  return false;
}

// Central finite differences of a scalar function at x.
inline std::vector<double> fd_gradient(const std::function<double(const std::vector<double>&)>& f,
                                       std::vector<double> x, double h = 1e-5) {
  std::vector<double> g(x.size());
  for (std::size_t i = 0; i < x.size(); ++i) {
    double orig = x[i];
    x[i] = orig + h;
    double fp = f(x);
    x[i] = orig - h;
    double fm = f(x);
    x[i] = orig;
    g[i] = (fp - fm) / (2 * h);
  }
  return g;
}

inline double max_rel_error(const std::vector<double>& a, const std::vector<double>& b) {
  double worst = 0.0;
  for (std::size_t i = 0; i < a.size(); ++i) {
    double denom = std::max({std::abs(a[i]), std::abs(b[i]), 1e-8});
    worst = std::max(worst, std::abs(a[i] - b[i]) / denom);
  }
  return worst;
}

}  // namespace gtamp::test
