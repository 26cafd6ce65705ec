#pragma once

// Seeded generators for property tests. Every test fixes its seed so failures
// reproduce exactly.

#include <algorithm>
#include <cmath>
#include <numbers>
#include <random>
#include <vector>

#include "fracshape/boundary_measure.hpp"
#include "fracshape/geometry.hpp"

namespace fracshape::prop {

class Gen {
 public:
  explicit Gen(std::uint64_t seed) : rng_(seed) {}

  double uniform(double a, double b) { return std::uniform_real_distribution<double>(a, b)(rng_); }
  int integer(int a, int b) { return std::uniform_int_distribution<int>(a, b)(rng_); }
  double normal() { return std::normal_distribution<double>()(rng_); }

  Point point(Point lo, Point hi) { return {uniform(lo.x, hi.x), uniform(lo.y, hi.y)}; }

  /// Star-shaped simple polygon around `c` with n vertices at increasing angles
  /// and radii in [r0, r1]; counterclockwise by construction.
  Polygon star(Point c, double r0, double r1, int n) {
    std::vector<double> angles(static_cast<std::size_t>(n));
    for (int k = 0; k < n; ++k) {
      angles[static_cast<std::size_t>(k)] = 2.0 * std::numbers::pi * (k + uniform(0.1, 0.9)) / n;
    }
    std::vector<Point> v;
    for (double t : angles) {
      const double r = uniform(r0, r1);
      v.push_back({c.x + r * std::cos(t), c.y + r * std::sin(t)});
    }
    return Polygon(std::move(v));
  }

  /// x-monotone polyline with n points over [0, 1] and heights in [-a, a].
  Polyline monotone_polyline(int n, double a) {
    std::vector<Point> pts;
    for (int k = 0; k < n; ++k) pts.push_back({static_cast<double>(k) / (n - 1), uniform(-a, a)});
    return Polyline(std::move(pts));
  }

  std::vector<Point> cloud(int n, Point lo, Point hi) {
    std::vector<Point> pts;
    for (int k = 0; k < n; ++k) pts.push_back(point(lo, hi));
    return pts;
  }

  std::mt19937_64& engine() { return rng_; }

 private:
  std::mt19937_64 rng_;
};

/// Brute-force directed distance sup_a min_b |a - b|.
inline double brute_directed(const std::vector<Point>& a, const std::vector<Point>& b) {
  double worst = 0.0;
  for (Point p : a) {
    double best = INFINITY;
    for (Point q : b) best = std::min(best, distance(p, q));
    worst = std::max(worst, best);
  }
  return worst;
}

/// Unit square with Dirichlet on the left edge, Robin on the right edge and
/// Neumann walls; the boundary measure has unit density everywhere.
inline PolygonalDomain strip_domain() {
  const Polygon p({{0.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}, {1.0, 1.0}});
  return PolygonalDomain(p, {BoundaryLabel::Dirichlet, BoundaryLabel::Neumann, BoundaryLabel::Robin,
                             BoundaryLabel::Neumann});
}

/// u'' + ω²u = 0 on (0, 1), u(0) = 1, u'(1) + α u(1) = 0.
struct StripSolution {
  double omega;
  Complex alpha, A;
  StripSolution(double w, Complex a)
      : omega(w), alpha(a), A((w * std::sin(w) - a * std::cos(w)) / (w * std::cos(w) + a * std::sin(w))) {}
  Complex operator()(Point p) const { return std::cos(omega * p.x) + A * std::sin(omega * p.x); }
};

}  // namespace fracshape::prop
