#pragma once

#include <cstddef>
#include <functional>
#include <optional>
#include <span>
#include <string_view>
#include <utility>
#include <vector>

#include "fracshape/geometry.hpp"
#include "fracshape/kernels.hpp"

namespace fracshape {

/// One polyline carrier with a positive mass density on each segment.
struct MeasurePiece {
  Polyline carrier;
  std::vector<double> densities;
};

/// Finite Borel measure with piecewise-constant edge densities on polyline
/// carriers. Default-constructed measures are zero.
class BoundaryMeasure {
 public:
  BoundaryMeasure() = default;
  BoundaryMeasure(Polyline carrier, std::vector<double> densities);
  explicit BoundaryMeasure(std::vector<MeasurePiece> pieces);

  static BoundaryMeasure uniform(Polyline carrier, double density = 1.0);
  /// Every segment carries the same mass.
  static BoundaryMeasure equal_edge_mass(Polyline carrier, double edge_mass);
  /// Boundary volume of a polygon: a closed carrier through every vertex.
  static BoundaryMeasure on_boundary(const Polygon& polygon, double density = 1.0);

  const std::vector<MeasurePiece>& pieces() const { return pieces_; }
  std::span<const WeightedSegment> segments() const { return segments_; }
  bool is_zero() const { return segments_.empty(); }
  double total_mass() const { return total_mass_; }
  double carrier_length() const;
  /// Largest distance between carrier vertices.
  double diameter() const;
  BBox bbox() const;

  /// μ(B(x, r)). Open and closed discs carry the same mass because circles meet
  /// the carrier in finitely many points, so `closed` only documents intent.
  double ball_mass(Point x, double r, bool closed = false) const;

  /// n points equally spaced in arclength over the concatenated carrier,
  /// including the first and last carrier points.
  std::vector<Point> arclength_samples(std::size_t n) const;

  /// ∫ f dμ with 5-point Gauss-Legendre quadrature per segment.
  double integrate(const std::function<double(Point)>& f) const;

 private:
  void rebuild();

  std::vector<MeasurePiece> pieces_;
  std::vector<WeightedSegment> segments_;
  double total_mass_ = 0.0;
};

/// Concatenates carriers; masses add.
BoundaryMeasure sum_measures(const BoundaryMeasure& a, const BoundaryMeasure& b);

/// Level-m Koch curve over `base` with mass 4^-m on every edge (total 1).
BoundaryMeasure koch_natural_measure(int level, const Polyline& base = Polyline({{0.0, 0.0}, {1.0, 0.0}}));

/// Level-m snowflake boundary with mass 4^-m on every edge (mass 1 per side).
BoundaryMeasure koch_snowflake_measure(int level, double side = 1.0, Point center = {0.0, 0.0});

// ---------------------------------------------------------------------------
// Scaling conditions.

enum class ScalingCondition { LowerAhlfors, LowerAhlforsClosed, UpperAhlfors, Ds, Ld, Normalized };
std::string_view condition_name(ScalingCondition condition);

/// Declared sampling for every scaling sweep.
struct SamplingGrid {
  std::size_t centers = 200;
  std::size_t radii = 40;
  /// Smallest radius as a fraction of the carrier diameter.
  double r_min_factor = 1e-3;
  double r_max = 1.0;
  /// Multipliers k = 2^j for j = 0..k_max_exponent, restricted to k r <= r_max.
  int k_max_exponent = 10;

  std::vector<double> radius_values(double diameter) const;
  std::vector<double> multipliers() const;
};

struct Witness {
  Point center;
  double radius = 0.0;
  double k = 1.0;
};

struct ScalingReport {
  ScalingCondition condition = ScalingCondition::LowerAhlfors;
  double exponent = 0.0;
  /// Empirical extremum over the grid (c1 for the normalized condition).
  double best_constant = 0.0;
  Witness witness;
  /// Normalized condition only: c2 and its witness.
  std::optional<double> upper_constant;
  std::optional<Witness> upper_witness;
  bool pass = true;
  SamplingGrid grid;
};

ScalingReport verify_lower_ahlfors(const BoundaryMeasure& mu, double s, bool closed, const SamplingGrid& grid = {},
                                   std::optional<double> threshold = std::nullopt);
ScalingReport verify_upper_ahlfors(const BoundaryMeasure& mu, double d, const SamplingGrid& grid = {},
                                   std::optional<double> threshold = std::nullopt);
ScalingReport verify_Ds(const BoundaryMeasure& mu, double s, const SamplingGrid& grid = {},
                        std::optional<double> threshold = std::nullopt);
ScalingReport verify_Ld(const BoundaryMeasure& mu, double d, const SamplingGrid& grid = {},
                        std::optional<double> threshold = std::nullopt);
/// c1 = min and c2 = max of μ(B(x, 1)) over sampled centers; passes when
/// bounds.first <= c1 and c2 <= bounds.second.
ScalingReport verify_normalized(const BoundaryMeasure& mu, const SamplingGrid& grid = {},
                                std::optional<std::pair<double, double>> bounds = std::nullopt);

/// The ratio a witness certifies, recomputed from scratch.
double witness_ratio(const BoundaryMeasure& mu, ScalingCondition condition, double exponent, const Witness& w);

// ---------------------------------------------------------------------------
// Weak convergence.

enum class TestFamily { MonomialsDeg4, Gaussians };

struct WeakGapReport {
  double gap = 0.0;
  std::size_t worst_function = 0;
  double carrier_hausdorff = 0.0;
};

/// Test functions of the family over the given box (Gaussians are centered on a
/// 3x3 lattice of the box with width a quarter of its diagonal).
std::vector<std::function<double(Point)>> test_family(TestFamily family, BBox box);

/// max_f |∫ f dμ_m - ∫ f dμ| over the family, plus the sampled Hausdorff
/// distance between carriers at `resolution` (default: 1% of the shortest edge).
WeakGapReport weak_convergence_gap(const BoundaryMeasure& mu_m, const BoundaryMeasure& mu, TestFamily family,
                                   std::optional<double> resolution = std::nullopt);

}  // namespace fracshape
