#pragma once

#include "fracshape/types.hpp"

namespace fracshape::predicates {

// Sign-exact geometric predicates. A floating-point filter answers the easy
// cases; the rest fall back to rational arithmetic.

/// > 0 if (a, b, c) turn counterclockwise, < 0 clockwise, 0 collinear.
int orient(Point a, Point b, Point c);

/// > 0 if d lies strictly inside the circumcircle of the CCW triangle (a, b, c).
int incircle(Point a, Point b, Point c, Point d);

/// True if closed segments [a, b] and [c, d] share at least one point.
bool segments_intersect(Point a, Point b, Point c, Point d);

/// True if the segments cross at a single point interior to both.
bool segments_cross_properly(Point a, Point b, Point c, Point d);

/// True if p lies on the closed segment [a, b].
bool on_segment(Point p, Point a, Point b);

}  // namespace fracshape::predicates
