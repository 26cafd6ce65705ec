#include <cmath>

#include "fracshape/geometry.hpp"

namespace fracshape {

Polyline koch_prefractal(const Polyline& base, int level, double bump_angle) {
  if (level < 0) throw Error("level must be nonnegative");
  if (!(bump_angle > 0.0 && bump_angle < 0.5 * M_PI)) throw Error("bump angle must lie in (0, pi/2)");
  if (base.size() < 2) throw Error("Koch base needs at least two points");
  const double rise = std::tan(bump_angle) / 6.0;
  std::vector<Point> cur = base.points();
  for (int l = 0; l < level; ++l) {
    std::vector<Point> next;
    next.reserve(4 * (cur.size() - 1) + 1);
    next.push_back(cur.front());
    for (std::size_t i = 0; i + 1 < cur.size(); ++i) {
      const Point a = cur[i];
      const Point b = cur[i + 1];
      const Point d = b - a;
      const Point left{-d.y, d.x};
      next.push_back(a + (1.0 / 3.0) * d);
      next.push_back(a + 0.5 * d + rise * left);
      next.push_back(a + (2.0 / 3.0) * d);
      next.push_back(b);
    }
    cur = std::move(next);
  }
  const bool closed = cur.size() > 2 && cur.front() == cur.back();
  std::span<const Point> chain(cur.data(), closed ? cur.size() - 1 : cur.size());
  if (!is_simple_chain(chain, closed)) throw Error("generator overlaps");
  return Polyline(std::move(cur));
}

Polygon koch_snowflake(int level, double side, Point center, double bump_angle) {
  if (!(side > 0.0)) throw Error("side must be positive");
  const double r = side / std::sqrt(3.0);
  std::vector<Point> tri(3);
  for (int k = 0; k < 3; ++k) {
    const double t = 0.5 * M_PI + 2.0 * M_PI * k / 3.0;
    tri[static_cast<std::size_t>(k)] = {center.x + r * std::cos(t), center.y + r * std::sin(t)};
  }
  // Clockwise traversal puts the exterior on the left, where the bumps go.
  const Polyline cw({tri[0], tri[2], tri[1], tri[0]});
  const Polyline curve = koch_prefractal(cw, level, bump_angle);
  std::vector<Point> pts(curve.points().rbegin(), curve.points().rend());
  pts.pop_back();
  return Polygon(std::move(pts));
}

}  // namespace fracshape
