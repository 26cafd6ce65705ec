#include "fracshape/predicates.hpp"

#include <gmpxx.h>

#include <limits>

namespace fracshape::predicates {
namespace {

constexpr double kEps = std::numeric_limits<double>::epsilon();
// Error-bound coefficients after Shewchuk's static filters.
constexpr double kOrientBound = (3.0 + 16.0 * kEps) * kEps;
constexpr double kIncircleBound = (10.0 + 96.0 * kEps) * kEps;

int sign(const mpq_class& v) { return sgn(v); }

int orient_exact(Point a, Point b, Point c) {
  const mpq_class ax(a.x), ay(a.y), bx(b.x), by(b.y), cx(c.x), cy(c.y);
  const mpq_class det = (bx - ax) * (cy - ay) - (by - ay) * (cx - ax);
  return sign(det);
}

int incircle_exact(Point a, Point b, Point c, Point d) {
  const mpq_class dx(d.x), dy(d.y);
  const mpq_class adx = mpq_class(a.x) - dx, ady = mpq_class(a.y) - dy;
  const mpq_class bdx = mpq_class(b.x) - dx, bdy = mpq_class(b.y) - dy;
  const mpq_class cdx = mpq_class(c.x) - dx, cdy = mpq_class(c.y) - dy;
  const mpq_class alift = adx * adx + ady * ady;
  const mpq_class blift = bdx * bdx + bdy * bdy;
  const mpq_class clift = cdx * cdx + cdy * cdy;
  const mpq_class det = alift * (bdx * cdy - cdx * bdy) + blift * (cdx * ady - adx * cdy) +
                        clift * (adx * bdy - bdx * ady);
  return sign(det);
}

}  // namespace

int orient(Point a, Point b, Point c) {
  const double detleft = (b.x - a.x) * (c.y - a.y);
  const double detright = (b.y - a.y) * (c.x - a.x);
  const double det = detleft - detright;
  const double detsum = std::abs(detleft) + std::abs(detright);
  if (std::abs(det) > kOrientBound * detsum) return det > 0 ? 1 : -1;
  return orient_exact(a, b, c);
}

int incircle(Point a, Point b, Point c, Point d) {
  const double adx = a.x - d.x, ady = a.y - d.y;
  const double bdx = b.x - d.x, bdy = b.y - d.y;
  const double cdx = c.x - d.x, cdy = c.y - d.y;
  const double bdxcdy = bdx * cdy, cdxbdy = cdx * bdy;
  const double cdxady = cdx * ady, adxcdy = adx * cdy;
  const double adxbdy = adx * bdy, bdxady = bdx * ady;
  const double alift = adx * adx + ady * ady;
  const double blift = bdx * bdx + bdy * bdy;
  const double clift = cdx * cdx + cdy * cdy;
  const double det = alift * (bdxcdy - cdxbdy) + blift * (cdxady - adxcdy) + clift * (adxbdy - bdxady);
  const double permanent = (std::abs(bdxcdy) + std::abs(cdxbdy)) * alift +
                           (std::abs(cdxady) + std::abs(adxcdy)) * blift +
                           (std::abs(adxbdy) + std::abs(bdxady)) * clift;
  // The relative filter is only valid away from overflow/underflow; exact
  // arithmetic handles everything else.
  if (std::isfinite(permanent) && std::abs(det) > kIncircleBound * permanent) return det > 0 ? 1 : -1;
  return incircle_exact(a, b, c, d);
}

bool on_segment(Point p, Point a, Point b) {
  if (orient(a, b, p) != 0) return false;
  return std::min(a.x, b.x) <= p.x && p.x <= std::max(a.x, b.x) && std::min(a.y, b.y) <= p.y &&
         p.y <= std::max(a.y, b.y);
}

bool segments_intersect(Point a, Point b, Point c, Point d) {
  const int o1 = orient(a, b, c);
  const int o2 = orient(a, b, d);
  const int o3 = orient(c, d, a);
  const int o4 = orient(c, d, b);
  if (o1 * o2 < 0 && o3 * o4 < 0) return true;
  if (o1 == 0 && on_segment(c, a, b)) return true;
  if (o2 == 0 && on_segment(d, a, b)) return true;
  if (o3 == 0 && on_segment(a, c, d)) return true;
  if (o4 == 0 && on_segment(b, c, d)) return true;
  return false;
}

bool segments_cross_properly(Point a, Point b, Point c, Point d) {
  return orient(a, b, c) * orient(a, b, d) < 0 && orient(c, d, a) * orient(c, d, b) < 0;
}

}  // namespace fracshape::predicates
