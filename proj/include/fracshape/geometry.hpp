#pragma once

#include <cstddef>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fracshape/types.hpp"

namespace fracshape {

enum class BoundaryLabel { Dirichlet, Neumann, Robin };

/// Serialized tags: "dir", "neu", "rob".
std::string_view label_tag(BoundaryLabel label);
BoundaryLabel parse_label(std::string_view tag);

/// Simple, counterclockwise, closed polygon. Validated on construction.
class Polygon {
 public:
  explicit Polygon(std::vector<Point> vertices);

  static Polygon rectangle(Point lo, Point hi);
  static Polygon regular(Point center, double radius, std::size_t n);

  const std::vector<Point>& vertices() const { return vertices_; }
  std::size_t size() const { return vertices_.size(); }
  Point vertex(std::size_t i) const { return vertices_[i % vertices_.size()]; }
  std::pair<Point, Point> edge(std::size_t i) const { return {vertex(i), vertex(i + 1)}; }

  double area() const;
  double perimeter() const;
  BBox bbox() const;
  /// Largest vertex-to-vertex distance (the polygon's diameter).
  double diameter() const;

  bool on_boundary(Point p) const;
  /// Strict interior.
  bool contains(Point p) const;
  /// Interior or boundary.
  bool contains_closed(Point p) const;
  double boundary_distance(Point p) const;

  /// Closed containment: every point of `inner` lies in the closure of this polygon.
  bool contains_polygon(const Polygon& inner) const;
  /// True when the closures are disjoint.
  bool disjoint_from(const Polygon& other) const;

  Polygon translated(Point offset) const;
  Polygon scaled(double factor, Point about = {0.0, 0.0}) const;

 private:
  std::vector<Point> vertices_;
};

/// True if the closed chain has no intersections other than shared endpoints
/// of consecutive edges. O(n^2) worst case with an x-sweep prefilter.
bool is_simple_chain(std::span<const Point> points, bool closed);

/// Ordered point chain with cumulative arclength.
class Polyline {
 public:
  Polyline() = default;
  explicit Polyline(std::vector<Point> points);

  const std::vector<Point>& points() const { return points_; }
  const std::vector<double>& arclength() const { return cumulative_; }
  std::size_t size() const { return points_.size(); }
  double length() const { return cumulative_.empty() ? 0.0 : cumulative_.back(); }
  Point front() const { return points_.front(); }
  Point back() const { return points_.back(); }

  /// Point at arclength s (clamped to [0, length]).
  Point at(double s) const;
  /// Points at n arclength-equispaced parameters, endpoints included (n >= 2).
  std::vector<Point> equispaced(std::size_t n) const;
  /// Inserts points so that consecutive spacing is at most `spacing`; keeps all vertices.
  Polyline refined(double spacing) const;
  Polyline reversed() const;

 private:
  std::vector<Point> points_;
  std::vector<double> cumulative_;
};

/// Closed boundary of a polygon as a polyline whose last point repeats the first.
Polyline boundary_polyline(const Polygon& polygon);

/// Finite stand-in for a compact set, with the producer's sampling pitch.
struct PointSample {
  std::vector<Point> points;
  double resolution = 0.0;

  PointSample(std::vector<Point> pts, double res);
};

PointSample sample_polyline(const Polyline& curve, double resolution);
PointSample sample_boundary(const Polygon& polygon, double resolution);

class PolygonalDomain {
 public:
  PolygonalDomain(Polygon outer, std::vector<BoundaryLabel> edge_labels,
                  std::optional<Polygon> design_region = std::nullopt);
  /// All edges carry the same label.
  static PolygonalDomain uniform(Polygon outer, BoundaryLabel label);

  const Polygon& outer() const { return outer_; }
  const std::vector<BoundaryLabel>& labels() const { return labels_; }
  BoundaryLabel label(std::size_t edge) const { return labels_[edge]; }
  const std::optional<Polygon>& design_region() const { return design_region_; }
  bool has_label(BoundaryLabel label) const;
  double labeled_length(BoundaryLabel label) const;

 private:
  Polygon outer_;
  std::vector<BoundaryLabel> labels_;
  std::optional<Polygon> design_region_;
};

/// Uniform-grid bucket index over a set of segments for nearest-distance and
/// crossing queries.
class SegmentIndex {
 public:
  SegmentIndex(std::vector<std::pair<Point, Point>> segments);
  explicit SegmentIndex(const Polygon& polygon);

  double distance(Point p) const;
  /// True if [a, b] meets any indexed segment (closed intersection).
  bool intersects(Point a, Point b) const;
  std::size_t size() const { return segments_.size(); }

 private:
  template <typename Fn>
  void visit_cells(BBox box, Fn&& fn) const;

  std::vector<std::pair<Point, Point>> segments_;
  BBox box_;
  double cell_ = 1.0;
  int nx_ = 1, ny_ = 1;
  std::vector<std::vector<std::size_t>> cells_;
};

// ---------------------------------------------------------------------------
// Distances between compact sets and curves.

/// Sample Hausdorff distance (exact for the samples).
double hausdorff_distance(const PointSample& a, const PointSample& b);

/// Hausdorff distance between grid discretizations of cl(D) \ Ω1 and cl(D) \ Ω2.
double domain_hausdorff_distance(const PolygonalDomain& omega1, const PolygonalDomain& omega2,
                                 const Polygon& holdall, double resolution);

/// Discrete Fréchet distance over vertex pairs.
double frechet_distance(const Polyline& a, const Polyline& b);

/// L^p norm of the difference of indicator functions, by pixel counting.
double char_fn_distance(const PolygonalDomain& omega1, const PolygonalDomain& omega2, double p,
                        double pitch);

// ---------------------------------------------------------------------------
// Cigar condition and ε estimation.

struct CigarProfile {
  Point x, y;
  std::vector<Point> z;
  std::vector<double> lambda;
};

/// λ(z) = |x-z||y-z|/|x-y| at n arclength-equispaced samples of the curve.
CigarProfile cigar_profile(const Polyline& curve, std::size_t n_samples);

bool cigar_contained(const Polyline& curve, Point x, Point y, double epsilon,
                     const PolygonalDomain& omega, std::size_t n_samples);

/// Largest ε that the sampled cigar test accepts for this curve (0 when none).
double cigar_epsilon(const Polyline& curve, const SegmentIndex& boundary, const Polygon& polygon,
                     std::size_t n_samples);

enum class CurveFamily { Segment, GridShortestPath, Both };

struct EpsilonOptions {
  std::size_t pair_grid = 16;
  CurveFamily family = CurveFamily::Both;
  std::size_t n_samples = 64;
  /// Path graph pitch is at most diam(Ω) / path_resolution.
  std::size_t path_resolution = 256;
  std::size_t epsilon_grid = 64;
  double epsilon_min = 1e-3;
  double epsilon_max = 1.0;
  /// Pattern-search budget per pair in the bottleneck refinement; 0 skips it.
  std::size_t refine_evaluations = 6000;
};

struct PairCertificate {
  Point x, y;
  double epsilon = 0.0;  ///< largest grid value passed by `curve`
  Polyline curve;
};

struct EpsilonEstimate {
  double value = 0.0;
  std::size_t worst_pair = 0;
  std::vector<PairCertificate> pairs;
  std::vector<double> grid;
};

/// Logarithmic ε grid from the options.
std::vector<double> epsilon_grid(const EpsilonOptions& options);

EpsilonEstimate estimate_epsilon(const PolygonalDomain& omega, const EpsilonOptions& options = {});

// ---------------------------------------------------------------------------
// Prefractals.

/// Koch generator applied `level` times; bumps sit on the left of travel.
Polyline koch_prefractal(const Polyline& base, int level, double bump_angle);

/// Koch snowflake built outward on an equilateral triangle with the given side,
/// centered at `center`; counterclockwise.
Polygon koch_snowflake(int level, double side = 1.0, Point center = {0.0, 0.0},
                       double bump_angle = 1.0471975511965976);

// ---------------------------------------------------------------------------
// Convergence in the sense of compacts.

struct CompactsReport {
  /// First sequence index from which the probe is contained in every later member.
  std::vector<std::optional<std::size_t>> inside;
  std::vector<std::optional<std::size_t>> outside;
  bool all_pass() const;
};

CompactsReport compacts_convergence_check(std::span<const PolygonalDomain> sequence,
                                          const PolygonalDomain& limit,
                                          std::span<const Polygon> probes_in,
                                          std::span<const Polygon> probes_out);

}  // namespace fracshape
