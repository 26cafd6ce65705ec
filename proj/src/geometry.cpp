#include "fracshape/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <numeric>

#include "fracshape/kernels.hpp"
#include "fracshape/predicates.hpp"

namespace fracshape {

namespace pred = predicates;

std::string_view label_tag(BoundaryLabel label) {
  switch (label) {
    case BoundaryLabel::Dirichlet:
      return "dir";
    case BoundaryLabel::Neumann:
      return "neu";
    case BoundaryLabel::Robin:
      return "rob";
  }
  return "?";
}

BoundaryLabel parse_label(std::string_view tag) {
  if (tag == "dir") return BoundaryLabel::Dirichlet;
  if (tag == "neu") return BoundaryLabel::Neumann;
  if (tag == "rob") return BoundaryLabel::Robin;
  throw Error("unknown boundary label '" + std::string(tag) + "' (expected dir|neu|rob)");
}

// ---------------------------------------------------------------------------

bool is_simple_chain(std::span<const Point> pts, bool closed) {
  const std::size_t n = pts.size();
  if (n < 2) return true;
  const std::size_t m = closed ? n : n - 1;
  auto seg = [&](std::size_t e) { return std::pair{pts[e], pts[(e + 1) % n]}; };
  for (std::size_t e = 0; e < m; ++e) {
    auto [a, b] = seg(e);
    if (a == b) return false;
  }
  auto adjacent = [&](std::size_t e, std::size_t f) {
    if (e > f) std::swap(e, f);
    if (f == e + 1) return true;
    return closed && e == 0 && f == m - 1;
  };
  // Consecutive edges may only share their common endpoint.
  for (std::size_t e = 0; e < m; ++e) {
    if (e + 1 == m && !closed) break;
    const std::size_t f = (e + 1) % m;
    if (f == e) break;
    auto [a, b] = seg(e);
    auto [c, d] = seg(f);
    if (pred::orient(a, b, d) == 0 && dot(b - a, d - c) < 0.0) return false;
  }
  std::vector<std::size_t> order(m);
  std::iota(order.begin(), order.end(), 0);
  std::vector<double> xmin(m), xmax(m);
  for (std::size_t e = 0; e < m; ++e) {
    auto [a, b] = seg(e);
    xmin[e] = std::min(a.x, b.x);
    xmax[e] = std::max(a.x, b.x);
  }
  std::sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return xmin[i] < xmin[j]; });
  for (std::size_t oi = 0; oi < m; ++oi) {
    const std::size_t e = order[oi];
    auto [a, b] = seg(e);
    const double ylo = std::min(a.y, b.y), yhi = std::max(a.y, b.y);
    for (std::size_t oj = oi + 1; oj < m && xmin[order[oj]] <= xmax[e]; ++oj) {
      const std::size_t f = order[oj];
      auto [c, d] = seg(f);
      if (std::max(c.y, d.y) < ylo || std::min(c.y, d.y) > yhi) continue;
      if (adjacent(e, f)) continue;
      if (pred::segments_intersect(a, b, c, d)) return false;
    }
  }
  return true;
}

// ---------------------------------------------------------------------------

Polygon::Polygon(std::vector<Point> vertices) : vertices_(std::move(vertices)) {
  if (vertices_.size() < 3) throw Error("polygon needs at least 3 vertices");
  for (Point p : vertices_) {
    if (!std::isfinite(p.x) || !std::isfinite(p.y)) throw Error("polygon vertex is not finite");
  }
  if (!is_simple_chain(vertices_, true)) throw Error("polygon is not simple");
  if (!(area() > 0.0)) throw Error("polygon must be counterclockwise with positive area");
}

Polygon Polygon::rectangle(Point lo, Point hi) {
  return Polygon({lo, {hi.x, lo.y}, hi, {lo.x, hi.y}});
}

Polygon Polygon::regular(Point center, double radius, std::size_t n) {
  std::vector<Point> v(n);
  for (std::size_t k = 0; k < n; ++k) {
    const double t = 2.0 * M_PI * static_cast<double>(k) / static_cast<double>(n);
    v[k] = {center.x + radius * std::cos(t), center.y + radius * std::sin(t)};
  }
  return Polygon(std::move(v));
}

double Polygon::area() const {
  double a = 0.0;
  const std::size_t n = vertices_.size();
  for (std::size_t i = 0; i < n; ++i) a += cross(vertices_[i], vertices_[(i + 1) % n]);
  return 0.5 * a;
}

double Polygon::perimeter() const {
  double p = 0.0;
  for (std::size_t i = 0; i < size(); ++i) p += distance(vertex(i), vertex(i + 1));
  return p;
}

BBox Polygon::bbox() const {
  BBox b;
  for (Point p : vertices_) b.extend(p);
  return b;
}

double Polygon::diameter() const {
  double best = 0.0;
  for (std::size_t i = 0; i < size(); ++i) {
    for (std::size_t j = i + 1; j < size(); ++j) best = std::max(best, distance_sq(vertices_[i], vertices_[j]));
  }
  return std::sqrt(best);
}

bool Polygon::on_boundary(Point p) const {
  for (std::size_t i = 0; i < size(); ++i) {
    auto [a, b] = edge(i);
    if (p.x < std::min(a.x, b.x) || p.x > std::max(a.x, b.x) || p.y < std::min(a.y, b.y) ||
        p.y > std::max(a.y, b.y)) {
      continue;
    }
    if (pred::on_segment(p, a, b)) return true;
  }
  return false;
}

bool Polygon::contains(Point p) const {
  int winding = 0;
  for (std::size_t i = 0; i < size(); ++i) {
    auto [a, b] = edge(i);
    if (a.y <= p.y) {
      if (b.y > p.y) {
        const int o = pred::orient(a, b, p);
        if (o == 0) return false;
        if (o > 0) ++winding;
      }
    } else if (b.y <= p.y) {
      const int o = pred::orient(a, b, p);
      if (o == 0) return false;
      if (o < 0) --winding;
    }
  }
  return winding != 0 && !on_boundary(p);
}

bool Polygon::contains_closed(Point p) const { return on_boundary(p) || contains(p); }

double Polygon::boundary_distance(Point p) const {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < size(); ++i) {
    auto [a, b] = edge(i);
    best = std::min(best, point_segment_distance(p, a, b));
  }
  return best;
}

bool Polygon::contains_polygon(const Polygon& inner) const {
  for (Point p : inner.vertices()) {
    if (!contains_closed(p)) return false;
  }
  const BBox mine = bbox();
  for (std::size_t i = 0; i < inner.size(); ++i) {
    auto [a, b] = inner.edge(i);
    std::vector<double> cuts{0.0, 1.0};
    for (std::size_t j = 0; j < size(); ++j) {
      auto [c, d] = edge(j);
      if (pred::segments_cross_properly(a, b, c, d)) return false;
      if (pred::on_segment(c, a, b)) {
        const Point ab = b - a;
        cuts.push_back(dot(c - a, ab) / dot(ab, ab));
      }
    }
    std::sort(cuts.begin(), cuts.end());
    for (std::size_t k = 0; k + 1 < cuts.size(); ++k) {
      if (cuts[k + 1] - cuts[k] <= 0.0) continue;
      const Point mid = lerp(a, b, 0.5 * (cuts[k] + cuts[k + 1]));
      if (mid.x < mine.lo.x || mid.x > mine.hi.x || mid.y < mine.lo.y || mid.y > mine.hi.y) return false;
      if (!contains_closed(mid)) return false;
    }
  }
  return true;
}

bool Polygon::disjoint_from(const Polygon& other) const {
  for (std::size_t i = 0; i < size(); ++i) {
    auto [a, b] = edge(i);
    for (std::size_t j = 0; j < other.size(); ++j) {
      auto [c, d] = other.edge(j);
      if (pred::segments_intersect(a, b, c, d)) return false;
    }
  }
  return !other.contains_closed(vertices_.front()) && !contains_closed(other.vertices().front());
}

Polygon Polygon::translated(Point offset) const {
  std::vector<Point> v = vertices_;
  for (Point& p : v) p = p + offset;
  return Polygon(std::move(v));
}

Polygon Polygon::scaled(double factor, Point about) const {
  std::vector<Point> v = vertices_;
  for (Point& p : v) p = about + factor * (p - about);
  return Polygon(std::move(v));
}

// ---------------------------------------------------------------------------

Polyline::Polyline(std::vector<Point> points) : points_(std::move(points)) {
  cumulative_.resize(points_.size(), 0.0);
  for (std::size_t i = 1; i < points_.size(); ++i) {
    cumulative_[i] = cumulative_[i - 1] + distance(points_[i - 1], points_[i]);
  }
}

Point Polyline::at(double s) const {
  if (points_.empty()) throw Error("empty polyline");
  if (s <= 0.0) return points_.front();
  if (s >= length()) return points_.back();
  const auto it = std::upper_bound(cumulative_.begin(), cumulative_.end(), s);
  const std::size_t i = static_cast<std::size_t>(it - cumulative_.begin());
  const double seg = cumulative_[i] - cumulative_[i - 1];
  const double t = seg > 0.0 ? (s - cumulative_[i - 1]) / seg : 0.0;
  return lerp(points_[i - 1], points_[i], t);
}

std::vector<Point> Polyline::equispaced(std::size_t n) const {
  if (n < 2) throw Error("need at least two samples");
  std::vector<Point> out(n);
  const double len = length();
  for (std::size_t k = 0; k < n; ++k) {
    out[k] = at(len * static_cast<double>(k) / static_cast<double>(n - 1));
  }
  out.front() = points_.front();
  out.back() = points_.back();
  return out;
}

Polyline Polyline::refined(double spacing) const {
  if (!(spacing > 0.0)) throw Error("refinement spacing must be positive");
  if (points_.size() < 2) return *this;
  std::vector<Point> out{points_.front()};
  for (std::size_t i = 1; i < points_.size(); ++i) {
    const double len = distance(points_[i - 1], points_[i]);
    const auto pieces = std::max<std::size_t>(1, static_cast<std::size_t>(std::ceil(len / spacing)));
    for (std::size_t k = 1; k < pieces; ++k) {
      out.push_back(lerp(points_[i - 1], points_[i], static_cast<double>(k) / static_cast<double>(pieces)));
    }
    out.push_back(points_[i]);
  }
  return Polyline(std::move(out));
}

Polyline Polyline::reversed() const {
  std::vector<Point> p(points_.rbegin(), points_.rend());
  return Polyline(std::move(p));
}

Polyline boundary_polyline(const Polygon& polygon) {
  std::vector<Point> pts = polygon.vertices();
  pts.push_back(pts.front());
  return Polyline(std::move(pts));
}

PointSample::PointSample(std::vector<Point> pts, double res) : points(std::move(pts)), resolution(res) {
  if (!(resolution > 0.0)) throw Error("sample resolution must be positive");
}

PointSample sample_polyline(const Polyline& curve, double resolution) {
  return PointSample(curve.refined(resolution).points(), resolution);
}

PointSample sample_boundary(const Polygon& polygon, double resolution) {
  auto pts = boundary_polyline(polygon).refined(resolution).points();
  pts.pop_back();
  return PointSample(std::move(pts), resolution);
}

// ---------------------------------------------------------------------------

PolygonalDomain::PolygonalDomain(Polygon outer, std::vector<BoundaryLabel> edge_labels,
                                 std::optional<Polygon> design_region)
    : outer_(std::move(outer)), labels_(std::move(edge_labels)), design_region_(std::move(design_region)) {
  if (labels_.size() != outer_.size()) throw Error("every polygon edge needs exactly one label");
  if (design_region_) {
    for (std::size_t i = 0; i < outer_.size(); ++i) {
      if (labels_[i] != BoundaryLabel::Dirichlet) continue;
      auto [a, b] = outer_.edge(i);
      bool touches = design_region_->contains_closed(a) || design_region_->contains_closed(b);
      for (std::size_t j = 0; j < design_region_->size() && !touches; ++j) {
        auto [c, d] = design_region_->edge(j);
        touches = pred::segments_intersect(a, b, c, d);
      }
      if (touches) throw Error("Dirichlet edge meets the design region");
    }
  }
}

PolygonalDomain PolygonalDomain::uniform(Polygon outer, BoundaryLabel label) {
  std::vector<BoundaryLabel> labels(outer.size(), label);
  return PolygonalDomain(std::move(outer), std::move(labels));
}

bool PolygonalDomain::has_label(BoundaryLabel label) const {
  return std::find(labels_.begin(), labels_.end(), label) != labels_.end();
}

double PolygonalDomain::labeled_length(BoundaryLabel label) const {
  double total = 0.0;
  for (std::size_t i = 0; i < outer_.size(); ++i) {
    if (labels_[i] == label) total += distance(outer_.vertex(i), outer_.vertex(i + 1));
  }
  return total;
}

// ---------------------------------------------------------------------------

SegmentIndex::SegmentIndex(std::vector<std::pair<Point, Point>> segments) : segments_(std::move(segments)) {
  if (segments_.empty()) throw Error("segment index needs at least one segment");
  double total = 0.0;
  for (auto [a, b] : segments_) {
    box_.extend(a);
    box_.extend(b);
    total += fracshape::distance(a, b);
  }
  const double n = static_cast<double>(segments_.size());
  cell_ = std::max({total / n, box_.diagonal() / std::sqrt(n), 1e-12});
  nx_ = std::min(1024, static_cast<int>(box_.width() / cell_) + 1);
  ny_ = std::min(1024, static_cast<int>(box_.height() / cell_) + 1);
  cell_ = std::max({cell_, box_.width() / nx_, box_.height() / ny_});
  cells_.assign(static_cast<std::size_t>(nx_ * ny_), {});
  for (std::size_t s = 0; s < segments_.size(); ++s) {
    BBox sb;
    sb.extend(segments_[s].first);
    sb.extend(segments_[s].second);
    visit_cells(sb, [&](std::size_t c) { cells_[c].push_back(s); });
  }
}

SegmentIndex::SegmentIndex(const Polygon& polygon)
    : SegmentIndex([&] {
        std::vector<std::pair<Point, Point>> s;
        for (std::size_t i = 0; i < polygon.size(); ++i) s.push_back(polygon.edge(i));
        return s;
      }()) {}

template <typename Fn>
void SegmentIndex::visit_cells(BBox b, Fn&& fn) const {
  const int i0 = std::clamp(static_cast<int>(std::floor((b.lo.x - box_.lo.x) / cell_)), 0, nx_ - 1);
  const int i1 = std::clamp(static_cast<int>(std::floor((b.hi.x - box_.lo.x) / cell_)), 0, nx_ - 1);
  const int j0 = std::clamp(static_cast<int>(std::floor((b.lo.y - box_.lo.y) / cell_)), 0, ny_ - 1);
  const int j1 = std::clamp(static_cast<int>(std::floor((b.hi.y - box_.lo.y) / cell_)), 0, ny_ - 1);
  if (b.hi.x < box_.lo.x || b.lo.x > box_.hi.x || b.hi.y < box_.lo.y || b.lo.y > box_.hi.y) return;
  for (int j = j0; j <= j1; ++j) {
    for (int i = i0; i <= i1; ++i) fn(static_cast<std::size_t>(j * nx_ + i));
  }
}

double SegmentIndex::distance(Point p) const {
  const long ci = static_cast<long>(std::floor((p.x - box_.lo.x) / cell_));
  const long cj = static_cast<long>(std::floor((p.y - box_.lo.y) / cell_));
  const long di = ci < 0 ? -ci : (ci >= nx_ ? ci - nx_ + 1 : 0);
  const long dj = cj < 0 ? -cj : (cj >= ny_ ? cj - ny_ + 1 : 0);
  const long kmin = std::max(di, dj);
  const long kmax = std::max({std::abs(ci) + 1, std::abs(nx_ - ci), std::abs(cj) + 1, std::abs(ny_ - cj)}) + 1;
  double best = std::numeric_limits<double>::infinity();
  for (long k = kmin; k <= kmax; ++k) {
    if (k > 0 && static_cast<double>(k - 1) * cell_ >= best) break;
    for (long j = cj - k; j <= cj + k; ++j) {
      if (j < 0 || j >= ny_) continue;
      const bool full_row = (j == cj - k || j == cj + k);
      const long step = full_row || k == 0 ? 1 : 2 * k;
      for (long i = ci - k; i <= ci + k; i += step) {
        if (i < 0 || i >= nx_) continue;
        for (std::size_t s : cells_[static_cast<std::size_t>(j * nx_ + i)]) {
          best = std::min(best, point_segment_distance(p, segments_[s].first, segments_[s].second));
        }
      }
    }
  }
  return best;
}

bool SegmentIndex::intersects(Point a, Point b) const {
  BBox sb;
  sb.extend(a);
  sb.extend(b);
  bool hit = false;
  visit_cells(sb, [&](std::size_t c) {
    if (hit) return;
    for (std::size_t s : cells_[c]) {
      if (pred::segments_intersect(a, b, segments_[s].first, segments_[s].second)) {
        hit = true;
        return;
      }
    }
  });
  return hit;
}

// ---------------------------------------------------------------------------

double hausdorff_distance(const PointSample& a, const PointSample& b) {
  if (a.points.empty() || b.points.empty()) throw Error("empty set");
  return std::max(kernels::omp::directed_hausdorff(a.points, b.points),
                  kernels::omp::directed_hausdorff(b.points, a.points));
}

double domain_hausdorff_distance(const PolygonalDomain& omega1, const PolygonalDomain& omega2,
                                 const Polygon& holdall, double resolution) {
  if (!holdall.contains_polygon(omega1.outer()) || !holdall.contains_polygon(omega2.outer())) {
    throw Error("domain escapes hold-all");
  }
  const PixelGrid grid = PixelGrid::covering(holdall.bbox(), resolution);
  const Mask hold = kernels::omp::rasterize(holdall, grid);
  Mask c1 = kernels::omp::rasterize(omega1.outer(), grid);
  Mask c2 = kernels::omp::rasterize(omega2.outer(), grid);
  bool any1 = false, any2 = false;
  for (std::size_t k = 0; k < grid.count(); ++k) {
    c1[k] = hold[k] && !c1[k];
    c2[k] = hold[k] && !c2[k];
    any1 = any1 || c1[k];
    any2 = any2 || c2[k];
  }
  if (!any1 && !any2) return 0.0;
  if (!any1 || !any2) return std::numeric_limits<double>::infinity();
  const auto d2 = kernels::omp::distance_transform(c2, grid);
  const auto d1 = kernels::omp::distance_transform(c1, grid);
  double worst = 0.0;
  for (std::size_t k = 0; k < grid.count(); ++k) {
    if (c1[k]) worst = std::max(worst, d2[k]);
    if (c2[k]) worst = std::max(worst, d1[k]);
  }
  return worst;
}

double frechet_distance(const Polyline& a, const Polyline& b) {
  if (a.size() < 2 || b.size() < 2) throw Error("degenerate polyline: Fréchet distance needs at least two points");
  const auto& p = a.points();
  const auto& q = b.points();
  const std::size_t m = q.size();
  std::vector<double> prev(m), cur(m);
  for (std::size_t i = 0; i < p.size(); ++i) {
    for (std::size_t j = 0; j < m; ++j) {
      const double d = distance(p[i], q[j]);
      double reach;
      if (i == 0 && j == 0) {
        reach = d;
      } else if (i == 0) {
        reach = std::max(cur[j - 1], d);
      } else if (j == 0) {
        reach = std::max(prev[0], d);
      } else {
        reach = std::max(std::min({prev[j], prev[j - 1], cur[j - 1]}), d);
      }
      cur[j] = reach;
    }
    std::swap(prev, cur);
  }
  return prev[m - 1];
}

double char_fn_distance(const PolygonalDomain& omega1, const PolygonalDomain& omega2, double p, double pitch) {
  if (!(p >= 1.0) || !std::isfinite(p)) throw Error("exponent p must lie in [1, inf)");
  if (!(pitch > 0.0)) throw Error("pitch must be positive");
  BBox box = omega1.outer().bbox();
  const BBox b2 = omega2.outer().bbox();
  box.extend(b2.lo);
  box.extend(b2.hi);
  const PixelGrid grid = PixelGrid::covering(box, pitch);
  const Mask m1 = kernels::omp::rasterize(omega1.outer(), grid);
  const Mask m2 = kernels::omp::rasterize(omega2.outer(), grid);
  std::size_t differing = 0;
  for (std::size_t k = 0; k < grid.count(); ++k) differing += (m1[k] != m2[k]);
  const double area = static_cast<double>(differing) * pitch * pitch;
  return std::pow(area, 1.0 / p);
}

// ---------------------------------------------------------------------------

bool CompactsReport::all_pass() const {
  auto ok = [](const auto& v) { return std::all_of(v.begin(), v.end(), [](const auto& o) { return o.has_value(); }); };
  return ok(inside) && ok(outside);
}

namespace {

std::optional<std::size_t> first_stable_index(std::span<const PolygonalDomain> seq,
                                              const std::function<bool(const Polygon&)>& holds) {
  std::optional<std::size_t> first;
  for (std::size_t k = seq.size(); k-- > 0;) {
    if (!holds(seq[k].outer())) break;
    first = k;
  }
  return first;
}

}  // namespace

CompactsReport compacts_convergence_check(std::span<const PolygonalDomain> sequence, const PolygonalDomain& limit,
                                          std::span<const Polygon> probes_in, std::span<const Polygon> probes_out) {
  for (const Polygon& probe : probes_in) {
    if (!limit.outer().contains_polygon(probe)) throw Error("invalid probe: inside probe not contained in the limit");
  }
  for (const Polygon& probe : probes_out) {
    if (!limit.outer().disjoint_from(probe)) throw Error("invalid probe: outside probe meets the limit closure");
  }
  CompactsReport report;
  for (const Polygon& probe : probes_in) {
    report.inside.push_back(
        first_stable_index(sequence, [&](const Polygon& member) { return member.contains_polygon(probe); }));
  }
  for (const Polygon& probe : probes_out) {
    report.outside.push_back(
        first_stable_index(sequence, [&](const Polygon& member) { return member.disjoint_from(probe); }));
  }
  return report;
}

}  // namespace fracshape
