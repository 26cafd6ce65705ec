// Constrained Delaunay refinement: lattice seeding, conforming recovery of the
// boundary segments by splitting, flood-fill region tagging, then Ruppert
// circumcenter refinement with concentric-shell segment splits.

#include <algorithm>
#include <array>
#include <cmath>
#include <cstdint>
#include <deque>
#include <functional>
#include <limits>
#include <map>
#include <optional>
#include <unordered_map>

#include "fracshape/mesh.hpp"
#include "fracshape/predicates.hpp"

namespace fracshape {

namespace pred = predicates;

namespace {

constexpr double kPi = 3.14159265358979323846;

/// Which loop (0 = outer/hold-all, 1 = inner domain) a segment belongs to,
/// with its label, parent edge, and whether a -> b follows the loop orientation.
struct LoopTag {
  bool present = false;
  BoundaryLabel label = BoundaryLabel::Neumann;
  std::size_t parent = 0;
  bool forward = true;
};

struct Segment {
  int a = 0, b = 0;
  std::array<LoopTag, 2> tags;
  bool alive = true;
};

struct Tri {
  std::array<int, 3> v{};
  std::array<int, 3> n{-1, -1, -1};  // n[i] is across the edge opposite v[i]
  int region = -2;
  bool alive = true;
};

std::uint64_t edge_key(int a, int b) {
  const auto lo = static_cast<std::uint32_t>(std::min(a, b));
  const auto hi = static_cast<std::uint32_t>(std::max(a, b));
  return (static_cast<std::uint64_t>(hi) << 32) | lo;
}

double triangle_min_angle(Point a, Point b, Point c) {
  auto angle = [](Point p, Point q, Point r) { return std::atan2(std::abs(cross(q - p, r - p)), dot(q - p, r - p)); };
  return std::min({angle(a, b, c), angle(b, c, a), angle(c, a, b)});
}

double triangle_longest(Point a, Point b, Point c) {
  return std::sqrt(std::max({distance_sq(a, b), distance_sq(b, c), distance_sq(c, a)}));
}

Point circumcenter(Point a, Point b, Point c) {
  const Point ba = b - a;
  const Point ca = c - a;
  const double d = 2.0 * cross(ba, ca);
  const double bl = dot(ba, ba);
  const double cl = dot(ca, ca);
  return {a.x + (ca.y * bl - ba.y * cl) / d, a.y + (ba.x * cl - ca.x * bl) / d};
}

class Triangulator {
 public:
  Triangulator(BBox box, const MeshOptions& options) : options_(options) {
    const double span = std::max({box.width(), box.height(), 1e-9});
    const Point c{0.5 * (box.lo.x + box.hi.x), 0.5 * (box.lo.y + box.hi.y)};
    const double r = 64.0 * span;
    pts_ = {{c.x - 2.0 * r, c.y - r}, {c.x + 2.0 * r, c.y - r}, {c.x, c.y + 2.0 * r}};
    input_ = {0, 0, 0};
    tris_.push_back(Tri{{0, 1, 2}, {-1, -1, -1}, -2, true});
    vtri_ = {0, 0, 0};
  }

  int vertex_count() const { return static_cast<int>(pts_.size()); }
  Point point(int v) const { return pts_[static_cast<std::size_t>(v)]; }

  /// Inserts a point that is not on any constrained edge.
  int insert(Point p, bool input) {
    const int t = locate(p, hint_);
    return insert_located(p, input, t, -1);
  }

  int add_segment(int a, int b, const std::array<LoopTag, 2>& tags) {
    segs_.push_back(Segment{a, b, tags, true});
    return static_cast<int>(segs_.size()) - 1;
  }

  // --- phase 2: conformity ---------------------------------------------------

  void recover_segments() {
    bool changed = true;
    while (changed) {
      changed = false;
      for (std::size_t s = 0; s < segs_.size(); ++s) {
        if (!segs_[s].alive) continue;
        if (!find_edge(segs_[s].a, segs_[s].b) || encroached(static_cast<int>(s))) {
          split_segment(static_cast<int>(s));
          changed = true;
        }
      }
    }
    for (std::size_t s = 0; s < segs_.size(); ++s) {
      if (segs_[s].alive) constrained_[edge_key(segs_[s].a, segs_[s].b)] = static_cast<int>(s);
    }
    constrained_mode_ = true;
  }

  // --- phase 3: regions ------------------------------------------------------

  void tag_regions(const std::function<int(Point)>& classify) {
    for (Tri& t : tris_) t.region = -2;
    // Outside: everything reachable from the super vertices without crossing a segment.
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (tris_[i].alive && tris_[i].region == -2 && touches_super(tris_[i])) flood(static_cast<int>(i), -1);
    }
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      if (!tris_[i].alive || tris_[i].region != -2) continue;
      const auto& v = tris_[i].v;
      const Point c = (1.0 / 3.0) * (point(v[0]) + point(v[1]) + point(v[2]));
      flood(static_cast<int>(i), classify(c));
    }
  }

  // --- phase 4: quality refinement -------------------------------------------

  void refine(double h) {
    const double min_angle = options_.min_angle_deg * kPi / 180.0;
    const double max_len = options_.size_factor * h;
    std::deque<int> queue;
    for (std::size_t i = 0; i < tris_.size(); ++i) queue.push_back(static_cast<int>(i));
    while (!queue.empty()) {
      const int t = queue.front();
      queue.pop_front();
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      if (!tri.alive || tri.region < 0) continue;
      const Point a = point(tri.v[0]), b = point(tri.v[1]), c = point(tri.v[2]);
      const bool too_long = triangle_longest(a, b, c) > max_len;
      const bool skinny = triangle_min_angle(a, b, c) < min_angle && !small_input_angle(t);
      if (!too_long && !skinny) continue;
      check_budget();
      const std::size_t before = tris_.size();
      if (!refine_triangle(t)) continue;
      for (std::size_t i = before; i < tris_.size(); ++i) queue.push_back(static_cast<int>(i));
    }
  }

  /// Alive triangles with region >= 0, segments and vertices for extraction.
  const std::vector<Tri>& triangles() const { return tris_; }
  const std::vector<Segment>& segments() const { return segs_; }

 private:
  // --- basic queries -----------------------------------------------------------

  bool touches_super(const Tri& t) const { return t.v[0] < 3 || t.v[1] < 3 || t.v[2] < 3; }

  bool is_constrained(int a, int b) const {
    return constrained_mode_ && constrained_.count(edge_key(a, b)) > 0;
  }

  static int index_of(const Tri& t, int v) {
    for (int i = 0; i < 3; ++i) {
      if (t.v[static_cast<std::size_t>(i)] == v) return i;
    }
    return -1;
  }

  /// A triangle having edge {a, b} and the index of its vertex opposite that edge.
  std::optional<std::pair<int, int>> find_edge(int a, int b) const {
    const int t0 = vtri_[static_cast<std::size_t>(a)];
    int t = t0;
    for (int guard = 0; guard < 4096; ++guard) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      const int i = index_of(tri, a);
      const int p = tri.v[static_cast<std::size_t>((i + 1) % 3)];
      const int q = tri.v[static_cast<std::size_t>((i + 2) % 3)];
      if (p == b) return std::pair{t, (i + 2) % 3};  // edge (a, p) is opposite q
      if (q == b) return std::pair{t, (i + 1) % 3};
      t = tri.n[static_cast<std::size_t>((i + 1) % 3)];
      if (t < 0 || t == t0) break;
    }
    return std::nullopt;
  }

  int locate(Point p, int start) const {
    int t = start;
    if (t < 0 || !tris_[static_cast<std::size_t>(t)].alive) t = any_alive();
    const std::size_t cap = 4 * tris_.size() + 64;
    for (std::size_t step = 0; step < cap; ++step) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      bool moved = false;
      for (int k = 0; k < 3; ++k) {
        const int i = static_cast<int>((k + step) % 3);
        const int a = tri.v[static_cast<std::size_t>((i + 1) % 3)];
        const int b = tri.v[static_cast<std::size_t>((i + 2) % 3)];
        if (pred::orient(point(a), point(b), p) < 0) {
          const int nb = tri.n[static_cast<std::size_t>(i)];
          if (nb < 0) throw Error("mesh: point outside the bounding triangle");
          t = nb;
          moved = true;
          break;
        }
      }
      if (!moved) return t;
    }
    for (std::size_t i = 0; i < tris_.size(); ++i) {
      const Tri& tri = tris_[i];
      if (!tri.alive) continue;
      if (pred::orient(point(tri.v[0]), point(tri.v[1]), p) >= 0 && pred::orient(point(tri.v[1]), point(tri.v[2]), p) >= 0 &&
          pred::orient(point(tri.v[2]), point(tri.v[0]), p) >= 0) {
        return static_cast<int>(i);
      }
    }
    throw Error("mesh: point location failed");
  }

  int any_alive() const {
    for (std::size_t i = tris_.size(); i-- > 0;) {
      if (tris_[i].alive) return static_cast<int>(i);
    }
    throw Error("mesh: empty triangulation");
  }

  bool in_circle(const Tri& t, Point p) const {
    return pred::incircle(point(t.v[0]), point(t.v[1]), point(t.v[2]), p) > 0;
  }

  // --- cavity ------------------------------------------------------------------

  /// Triangles whose circumcircle contains p, grown from `seeds` without crossing
  /// constrained edges.
  std::vector<int> cavity(Point p, const std::vector<int>& seeds) {
    ++stamp_;
    if (mark_.size() < tris_.size()) mark_.resize(tris_.size(), 0);
    std::vector<int> out;
    for (int s : seeds) {
      if (mark_[static_cast<std::size_t>(s)] != stamp_) {
        mark_[static_cast<std::size_t>(s)] = stamp_;
        out.push_back(s);
      }
    }
    for (std::size_t k = 0; k < out.size(); ++k) {
      const Tri& tri = tris_[static_cast<std::size_t>(out[k])];
      for (int i = 0; i < 3; ++i) {
        const int nb = tri.n[static_cast<std::size_t>(i)];
        if (nb < 0 || mark_[static_cast<std::size_t>(nb)] == stamp_) continue;
        if (is_constrained(tri.v[static_cast<std::size_t>((i + 1) % 3)], tri.v[static_cast<std::size_t>((i + 2) % 3)])) {
          continue;
        }
        if (in_circle(tris_[static_cast<std::size_t>(nb)], p)) {
          mark_[static_cast<std::size_t>(nb)] = stamp_;
          out.push_back(nb);
        }
      }
    }
    return out;
  }

  int insert_located(Point p, bool input, int t, int split_seg) {
    const Tri& home = tris_[static_cast<std::size_t>(t)];
    for (int v : home.v) {
      if (point(v) == p) return v;
    }
    std::vector<int> seeds{t};
    if (split_seg >= 0) {
      const Segment& s = segs_[static_cast<std::size_t>(split_seg)];
      if (auto e = find_edge(s.a, s.b)) {
        constrained_.erase(edge_key(s.a, s.b));
        seeds = {e->first};
        const int other = tris_[static_cast<std::size_t>(e->first)].n[static_cast<std::size_t>(e->second)];
        if (other >= 0) seeds.push_back(other);
      }
    } else if (constrained_mode_) {
      // A point on a constrained edge must go through split_segment.
      for (int i = 0; i < 3; ++i) {
        const int a = home.v[static_cast<std::size_t>((i + 1) % 3)];
        const int b = home.v[static_cast<std::size_t>((i + 2) % 3)];
        if (is_constrained(a, b) && pred::orient(point(a), point(b), p) == 0) {
          throw Error("mesh: point lies on a constrained edge");
        }
      }
    }
    const std::vector<int> cav = cavity(p, seeds);

    const int v = vertex_count();
    pts_.push_back(p);
    input_.push_back(input ? 1 : 0);
    vtri_.push_back(-1);

    struct Rim {
      int a, b, outer, region;
    };
    std::vector<Rim> rim;
    for (int c : cav) {
      const Tri& tri = tris_[static_cast<std::size_t>(c)];
      for (int i = 0; i < 3; ++i) {
        const int nb = tri.n[static_cast<std::size_t>(i)];
        if (nb >= 0 && mark_[static_cast<std::size_t>(nb)] == stamp_) continue;
        rim.push_back({tri.v[static_cast<std::size_t>((i + 1) % 3)], tri.v[static_cast<std::size_t>((i + 2) % 3)], nb,
                       tri.region});
      }
    }
    std::unordered_map<int, int> starts, ends;
    const int first_new = static_cast<int>(tris_.size());
    for (const Rim& r : rim) {
      if (pred::orient(point(r.a), point(r.b), p) <= 0) throw Error("mesh: cavity is not star-shaped");
      const int id = static_cast<int>(tris_.size());
      tris_.push_back(Tri{{r.a, r.b, v}, {-1, -1, r.outer}, r.region, true});
      starts[r.a] = id;
      ends[r.b] = id;
      if (r.outer >= 0) {
        Tri& o = tris_[static_cast<std::size_t>(r.outer)];
        for (int j = 0; j < 3; ++j) {
          if (edge_matches(o, j, r.a, r.b)) o.n[static_cast<std::size_t>(j)] = id;
        }
      }
    }
    for (int id = first_new; id < static_cast<int>(tris_.size()); ++id) {
      Tri& tri = tris_[static_cast<std::size_t>(id)];
      tri.n[0] = starts.at(tri.v[1]);  // across (b, p)
      tri.n[1] = ends.at(tri.v[0]);    // across (p, a)
      for (int w : tri.v) vtri_[static_cast<std::size_t>(w)] = id;
    }
    for (int c : cav) tris_[static_cast<std::size_t>(c)].alive = false;
    hint_ = first_new;

    if (split_seg >= 0) {
      Segment old = segs_[static_cast<std::size_t>(split_seg)];
      segs_[static_cast<std::size_t>(split_seg)].alive = false;
      const int s1 = add_segment(old.a, v, old.tags);
      const int s2 = add_segment(v, old.b, old.tags);
      if (constrained_mode_) {
        constrained_[edge_key(old.a, v)] = s1;
        constrained_[edge_key(v, old.b)] = s2;
      }
    }
    return v;
  }

  static bool edge_matches(const Tri& t, int i, int a, int b) {
    const int p = t.v[static_cast<std::size_t>((i + 1) % 3)];
    const int q = t.v[static_cast<std::size_t>((i + 2) % 3)];
    return (p == a && q == b) || (p == b && q == a);
  }

  // --- segments ----------------------------------------------------------------

  bool encroaches(Point c, const Segment& s) const {
    return dot(point(s.a) - c, point(s.b) - c) <= 0.0;
  }

  bool encroached(int s) const {
    const Segment& seg = segs_[static_cast<std::size_t>(s)];
    const auto e = find_edge(seg.a, seg.b);
    if (!e) return true;
    const Tri& t = tris_[static_cast<std::size_t>(e->first)];
    const int apex = t.v[static_cast<std::size_t>(e->second)];
    if (apex >= 3 && encroaches(point(apex), seg)) return true;
    const int nb = t.n[static_cast<std::size_t>(e->second)];
    if (nb >= 0) {
      const Tri& o = tris_[static_cast<std::size_t>(nb)];
      for (int w : o.v) {
        if (w != seg.a && w != seg.b && w >= 3 && encroaches(point(w), seg)) return true;
      }
    }
    return false;
  }

  Point split_point(const Segment& s) const {
    const Point a = point(s.a), b = point(s.b);
    const bool ia = input_[static_cast<std::size_t>(s.a)] != 0;
    const bool ib = input_[static_cast<std::size_t>(s.b)] != 0;
    if (ia == ib) return lerp(a, b, 0.5);
    // Concentric shells around the input vertex keep splits near sharp corners balanced.
    const double len = distance(a, b);
    const double r = std::exp2(std::round(std::log2(0.5 * len)));
    double t = r / len;
    if (t < 0.25 || t > 0.75) t = 0.5;
    return ia ? lerp(a, b, t) : lerp(b, a, t);
  }

  void split_segment(int s) {
    check_budget();
    const Segment seg = segs_[static_cast<std::size_t>(s)];
    const Point p = split_point(seg);
    int start = hint_;
    if (auto e = find_edge(seg.a, seg.b)) start = e->first;
    const int t = constrained_mode_ ? find_edge(seg.a, seg.b).value().first : locate(p, start);
    insert_located(p, false, t, s);
  }

  // --- refinement --------------------------------------------------------------

  /// True if the smallest angle of t sits between two segments meeting at an
  /// input vertex at less than 60 degrees; such angles cannot be improved.
  bool small_input_angle(int t) const {
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    double best = std::numeric_limits<double>::infinity();
    int at = 0;
    for (int i = 0; i < 3; ++i) {
      const Point p = point(tri.v[static_cast<std::size_t>(i)]);
      const Point q = point(tri.v[static_cast<std::size_t>((i + 1) % 3)]);
      const Point r = point(tri.v[static_cast<std::size_t>((i + 2) % 3)]);
      const double ang = std::atan2(std::abs(cross(q - p, r - p)), dot(q - p, r - p));
      if (ang < best) {
        best = ang;
        at = i;
      }
    }
    const int v = tri.v[static_cast<std::size_t>(at)];
    const int q = tri.v[static_cast<std::size_t>((at + 1) % 3)];
    const int r = tri.v[static_cast<std::size_t>((at + 2) % 3)];
    if (!is_constrained(v, q) || !is_constrained(v, r)) return false;
    const auto [a, b] = segment_directions(v);
    return a && b && angle_between(*a, *b) < kPi / 3.0 + 1e-9;
  }

  /// Directions of the first two segments found at vertex v.
  std::pair<std::optional<Point>, std::optional<Point>> segment_directions(int v) const {
    std::optional<Point> d1, d2;
    const int t0 = vtri_[static_cast<std::size_t>(v)];
    int t = t0;
    for (int guard = 0; guard < 4096; ++guard) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      const int i = index_of(tri, v);
      const int p = tri.v[static_cast<std::size_t>((i + 1) % 3)];
      if (is_constrained(v, p)) {
        const Point d = point(p) - point(v);
        if (!d1) {
          d1 = d;
        } else if (!d2) {
          d2 = d;
        } else {
          // More than two segments: report the smallest pairwise angle.
          if (angle_between(d, *d1) < angle_between(*d1, *d2)) d2 = d;
        }
      }
      t = tri.n[static_cast<std::size_t>((i + 1) % 3)];
      if (t < 0 || t == t0) break;
    }
    return {d1, d2};
  }

  static double angle_between(Point u, Point v) { return std::atan2(std::abs(cross(u, v)), dot(u, v)); }

  /// Straight walk from triangle t toward p. Returns the containing triangle or
  /// the first constrained segment blocking the way.
  std::pair<int, int> walk_to(int t, Point p) const {
    const Tri& start = tris_[static_cast<std::size_t>(t)];
    const Point o = (1.0 / 3.0) * (point(start.v[0]) + point(start.v[1]) + point(start.v[2]));
    int prev = -1;
    for (std::size_t step = 0; step < tris_.size() + 8; ++step) {
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      int exit = -1;
      for (int i = 0; i < 3; ++i) {
        const int a = tri.v[static_cast<std::size_t>((i + 1) % 3)];
        const int b = tri.v[static_cast<std::size_t>((i + 2) % 3)];
        if (tri.n[static_cast<std::size_t>(i)] == prev && prev >= 0) continue;
        if (pred::orient(point(a), point(b), p) < 0 && pred::segments_intersect(o, p, point(a), point(b))) {
          exit = i;
          break;
        }
      }
      if (exit < 0) return {t, -1};
      const int a = tri.v[static_cast<std::size_t>((exit + 1) % 3)];
      const int b = tri.v[static_cast<std::size_t>((exit + 2) % 3)];
      if (is_constrained(a, b)) return {-1, constrained_.at(edge_key(a, b))};
      prev = t;
      t = tri.n[static_cast<std::size_t>(exit)];
      if (t < 0) return {-1, -1};
    }
    return {-1, -1};
  }

  bool refine_triangle(int t) {
    const Tri& tri = tris_[static_cast<std::size_t>(t)];
    const Point c = circumcenter(point(tri.v[0]), point(tri.v[1]), point(tri.v[2]));
    if (!std::isfinite(c.x) || !std::isfinite(c.y)) return false;
    const auto [home, blocker] = walk_to(t, c);
    if (blocker >= 0) {
      split_segment(blocker);
      return true;
    }
    if (home < 0) return false;
    // Segments on the cavity rim that c encroaches are split instead.
    const std::vector<int> cav = cavity(c, {home});
    std::vector<int> hit;
    for (int k : cav) {
      const Tri& ct = tris_[static_cast<std::size_t>(k)];
      for (int i = 0; i < 3; ++i) {
        const int a = ct.v[static_cast<std::size_t>((i + 1) % 3)];
        const int b = ct.v[static_cast<std::size_t>((i + 2) % 3)];
        if (!is_constrained(a, b)) continue;
        const int s = constrained_.at(edge_key(a, b));
        if (encroaches(c, segs_[static_cast<std::size_t>(s)])) hit.push_back(s);
      }
    }
    if (!hit.empty()) {
      std::sort(hit.begin(), hit.end());
      hit.erase(std::unique(hit.begin(), hit.end()), hit.end());
      for (int s : hit) {
        if (segs_[static_cast<std::size_t>(s)].alive) split_segment(s);
      }
      return true;
    }
    if (tris_[static_cast<std::size_t>(home)].region < 0) return false;
    insert_located(c, false, home, -1);
    return true;
  }

  void flood(int start, int region) {
    std::vector<int> stack{start};
    tris_[static_cast<std::size_t>(start)].region = region;
    while (!stack.empty()) {
      const int t = stack.back();
      stack.pop_back();
      const Tri& tri = tris_[static_cast<std::size_t>(t)];
      for (int i = 0; i < 3; ++i) {
        const int nb = tri.n[static_cast<std::size_t>(i)];
        if (nb < 0 || tris_[static_cast<std::size_t>(nb)].region != -2) continue;
        if (is_constrained(tri.v[static_cast<std::size_t>((i + 1) % 3)], tri.v[static_cast<std::size_t>((i + 2) % 3)])) {
          continue;
        }
        tris_[static_cast<std::size_t>(nb)].region = region;
        stack.push_back(nb);
      }
    }
  }

  void check_budget() const {
    if (pts_.size() > options_.max_vertices) {
      throw Error("quality bound failed: vertex budget exhausted; shrink h or relax the angle bound");
    }
  }

  MeshOptions options_;
  std::vector<Point> pts_;
  std::vector<char> input_;
  std::vector<int> vtri_;
  std::vector<Tri> tris_;
  std::vector<Segment> segs_;
  std::unordered_map<std::uint64_t, int> constrained_;
  bool constrained_mode_ = false;
  std::vector<std::uint32_t> mark_;
  std::uint32_t stamp_ = 0;
  int hint_ = 0;
};

// ---------------------------------------------------------------------------
// Input graph: one or two polygon loops, overlapping edges merged.

struct Piece {
  Point a, b;
  std::array<LoopTag, 2> tags;
};

struct Loop {
  const Polygon* polygon;
  std::vector<BoundaryLabel> labels;
};

bool point_less(Point p, Point q) { return p.x < q.x || (p.x == q.x && p.y < q.y); }

std::vector<Piece> build_pieces(const std::vector<Loop>& loops) {
  std::vector<Point> all_vertices;
  for (const Loop& l : loops) all_vertices.insert(all_vertices.end(), l.polygon->vertices().begin(), l.polygon->vertices().end());
  std::map<std::pair<std::pair<double, double>, std::pair<double, double>>, std::size_t> index;
  std::vector<Piece> pieces;
  for (std::size_t k = 0; k < loops.size(); ++k) {
    const Polygon& poly = *loops[k].polygon;
    for (std::size_t e = 0; e < poly.size(); ++e) {
      const auto [a, b] = poly.edge(e);
      std::vector<double> cuts{0.0, 1.0};
      for (Point v : all_vertices) {
        if (v == a || v == b || !pred::on_segment(v, a, b)) continue;
        cuts.push_back(dot(v - a, b - a) / distance_sq(a, b));
      }
      std::sort(cuts.begin(), cuts.end());
      cuts.erase(std::unique(cuts.begin(), cuts.end()), cuts.end());
      std::vector<Point> stops;
      for (double t : cuts) stops.push_back(t == 0.0 ? a : (t == 1.0 ? b : Point{}));
      // Interior cut points are the exact vertices that produced them.
      for (std::size_t i = 1; i + 1 < cuts.size(); ++i) {
        for (Point v : all_vertices) {
          if (v != a && v != b && pred::on_segment(v, a, b) && dot(v - a, b - a) / distance_sq(a, b) == cuts[i]) {
            stops[i] = v;
            break;
          }
        }
      }
      for (std::size_t i = 0; i + 1 < stops.size(); ++i) {
        Point p = stops[i], q = stops[i + 1];
        const bool forward = point_less(p, q);
        if (!forward) std::swap(p, q);
        const auto key = std::pair{std::pair{p.x, p.y}, std::pair{q.x, q.y}};
        auto [it, fresh] = index.emplace(key, pieces.size());
        if (fresh) pieces.push_back(Piece{p, q, {}});
        LoopTag& tag = pieces[it->second].tags[k];
        tag = {true, loops[k].labels[e], e, forward};
      }
    }
  }
  return pieces;
}

struct Built {
  Mesh mesh;
  std::vector<int> region;
  std::vector<std::array<LoopTag, 2>> seg_tags;  // parallel to mesh boundary candidates
  std::vector<std::array<int, 2>> seg_ends;
};

Built run(const std::vector<Loop>& loops, const Polygon& outer, double h, const MeshOptions& options,
          const std::function<int(Point)>& classify) {
  if (!(h > 0.0) || !std::isfinite(h)) throw Error("mesh size h must be positive");
  const std::vector<Piece> pieces = build_pieces(loops);
  Triangulator tr(outer.bbox(), options);

  std::map<std::pair<double, double>, int> vertex_of;
  auto vertex = [&](Point p, bool input) {
    auto it = vertex_of.find({p.x, p.y});
    if (it != vertex_of.end()) return it->second;
    const int v = tr.insert(p, input);
    vertex_of[{p.x, p.y}] = v;
    return v;
  };
  for (const Loop& l : loops) {
    for (Point p : l.polygon->vertices()) vertex(p, true);
  }
  std::vector<std::pair<Point, Point>> all_segments;
  for (const Piece& pc : pieces) {
    const double len = distance(pc.a, pc.b);
    const auto n = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / h - 1e-9)));
    int prev = vertex(pc.a, true);
    for (std::size_t k = 1; k <= n; ++k) {
      const Point p = k == n ? pc.b : lerp(pc.a, pc.b, static_cast<double>(k) / static_cast<double>(n));
      const int cur = vertex(p, k == n);
      tr.add_segment(prev, cur, pc.tags);
      prev = cur;
    }
    all_segments.emplace_back(pc.a, pc.b);
  }
  // Interior lattice seeds aligned with the outer bounding box.
  const SegmentIndex walls(all_segments);
  const BBox box = outer.bbox();
  const auto nx = static_cast<long>(std::floor(box.width() / h));
  const auto ny = static_cast<long>(std::floor(box.height() / h));
  for (long j = 1; j <= ny; ++j) {
    for (long i = 1; i <= nx; ++i) {
      const Point p{box.lo.x + static_cast<double>(i) * h, box.lo.y + static_cast<double>(j) * h};
      if (!outer.contains(p) || walls.distance(p) < options.seed_clearance * h) continue;
      if (vertex_of.count({p.x, p.y}) == 0) vertex(p, false);
    }
  }

  tr.recover_segments();
  tr.tag_regions(classify);
  tr.refine(h);

  // Extraction.
  Built out;
  std::vector<int> remap(static_cast<std::size_t>(tr.vertex_count()), -1);
  std::vector<int> used(static_cast<std::size_t>(tr.vertex_count()), 0);
  for (const Tri& t : tr.triangles()) {
    if (!t.alive || t.region < 0) continue;
    for (int v : t.v) used[static_cast<std::size_t>(v)] = 1;
  }
  for (int v = 0; v < tr.vertex_count(); ++v) {
    if (!used[static_cast<std::size_t>(v)]) continue;
    remap[static_cast<std::size_t>(v)] = static_cast<int>(out.mesh.vertices.size());
    out.mesh.vertices.push_back(tr.point(v));
  }
  for (const Tri& t : tr.triangles()) {
    if (!t.alive || t.region < 0) continue;
    out.mesh.triangles.push_back(
        {remap[static_cast<std::size_t>(t.v[0])], remap[static_cast<std::size_t>(t.v[1])], remap[static_cast<std::size_t>(t.v[2])]});
    out.region.push_back(t.region);
  }
  for (const Segment& s : tr.segments()) {
    if (!s.alive) continue;
    out.seg_tags.push_back(s.tags);
    out.seg_ends.push_back({remap[static_cast<std::size_t>(s.a)], remap[static_cast<std::size_t>(s.b)]});
  }
  out.mesh.h = out.mesh.longest_edge();

  const double bound = options.min_angle_deg - 1e-9;
  if (out.mesh.min_angle_deg() < bound) {
    throw Error("quality bound failed: minimum angle below " + std::to_string(options.min_angle_deg) +
                " degrees; an input angle is too sharp at this h, try a smaller h");
  }
  return out;
}

/// Boundary edges of one loop, oriented along it, grouped by parent edge and
/// chained from the parent's start vertex.
std::vector<BoundaryEdge> loop_edges(const Built& b, std::size_t loop, const std::vector<int>* remap) {
  std::vector<BoundaryEdge> edges;
  for (std::size_t s = 0; s < b.seg_tags.size(); ++s) {
    const LoopTag& tag = b.seg_tags[s][loop];
    if (!tag.present) continue;
    int a = b.seg_ends[s][0], c = b.seg_ends[s][1];
    if (remap) {
      a = (*remap)[static_cast<std::size_t>(a)];
      c = (*remap)[static_cast<std::size_t>(c)];
    }
    if (a < 0 || c < 0) throw Error("mesh: boundary segment lost during extraction");
    // Pieces store their ends in lexicographic order; restore the loop direction.
    if (!tag.forward) std::swap(a, c);
    edges.push_back(BoundaryEdge{a, c, tag.label, tag.parent});
  }
  std::stable_sort(edges.begin(), edges.end(),
                   [](const BoundaryEdge& x, const BoundaryEdge& y) { return x.parent < y.parent; });
  std::vector<BoundaryEdge> chained;
  for (std::size_t i = 0; i < edges.size();) {
    std::size_t j = i;
    while (j < edges.size() && edges[j].parent == edges[i].parent) ++j;
    std::unordered_map<int, std::size_t> by_start;
    std::unordered_map<int, int> indegree;
    for (std::size_t k = i; k < j; ++k) {
      by_start[edges[k].a] = k;
      indegree[edges[k].b] += 1;
    }
    int head = edges[i].a;
    for (std::size_t k = i; k < j; ++k) {
      if (indegree.count(edges[k].a) == 0) {
        head = edges[k].a;
        break;
      }
    }
    for (std::size_t k = i; k < j; ++k) {
      const auto it = by_start.find(head);
      if (it == by_start.end()) throw Error("mesh: broken boundary chain");
      chained.push_back(edges[it->second]);
      head = edges[it->second].b;
    }
    i = j;
  }
  return chained;
}

}  // namespace

Mesh triangulate(const PolygonalDomain& omega, double h, const MeshOptions& options) {
  const std::vector<Loop> loops{{&omega.outer(), omega.labels()}};
  Built b = run(loops, omega.outer(), h, options, [](Point) { return 0; });
  b.mesh.boundary_edges = loop_edges(b, 0, nullptr);
  return std::move(b.mesh);
}

HoldallMesh triangulate_holdall(const Polygon& holdall, const PolygonalDomain& omega, double h,
                                const MeshOptions& options) {
  if (!holdall.contains_polygon(omega.outer())) throw Error("domain escapes hold-all");
  const std::vector<Loop> loops{{&holdall, std::vector<BoundaryLabel>(holdall.size(), BoundaryLabel::Neumann)},
                                {&omega.outer(), omega.labels()}};
  const Polygon& inner = omega.outer();
  Built b = run(loops, holdall, h, options, [&](Point c) { return inner.contains(c) ? 1 : 0; });
  HoldallMesh out;
  out.mesh = b.mesh;
  out.mesh.boundary_edges = loop_edges(b, 0, nullptr);
  out.region = b.region;

  std::vector<int> to_inner(b.mesh.vertices.size(), -1);
  for (std::size_t t = 0; t < b.mesh.triangles.size(); ++t) {
    if (b.region[t] != 1) continue;
    for (int v : b.mesh.triangles[t]) to_inner[static_cast<std::size_t>(v)] = 0;
  }
  for (std::size_t v = 0; v < to_inner.size(); ++v) {
    if (to_inner[v] < 0) continue;
    to_inner[v] = static_cast<int>(out.inner.vertices.size());
    out.inner.vertices.push_back(b.mesh.vertices[v]);
    out.inner_to_outer.push_back(static_cast<int>(v));
  }
  for (std::size_t t = 0; t < b.mesh.triangles.size(); ++t) {
    if (b.region[t] != 1) continue;
    const auto& tri = b.mesh.triangles[t];
    out.inner.triangles.push_back({to_inner[static_cast<std::size_t>(tri[0])], to_inner[static_cast<std::size_t>(tri[1])],
                                   to_inner[static_cast<std::size_t>(tri[2])]});
  }
  out.inner.boundary_edges = loop_edges(b, 1, &to_inner);
  out.inner.h = out.inner.longest_edge();
  return out;
}

}  // namespace fracshape
