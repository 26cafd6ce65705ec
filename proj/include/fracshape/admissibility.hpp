#pragma once

#include <optional>
#include <tuple>
#include <span>
#include <vector>

#include "fracshape/boundary_measure.hpp"
#include "fracshape/geometry.hpp"

namespace fracshape {

/// Parameters (D, D0, ε, s, d, lower and upper Ahlfors constants) of a class
/// of shape admissible domains.
struct ShapeClassParams {
  Polygon holdall;
  Polygon kernel;
  double epsilon = 0.0;
  double s = 1.0;
  double d = 1.0;
  double lower_constant = 0.0;
  double upper_constant = 0.0;

  /// Throws on D0 not inside D, ε <= 0, or exponents outside 1 <= s < 2, 0 <= d <= s.
  void validate() const;
};

/// Extra constants for the Jonsson variant: Ds, Ld and the normalization window.
struct JonssonParams {
  double c_s = 0.0;
  double c_d = 0.0;
  double c1_lower = 0.0;
  double c2_upper = 0.0;
};

struct AdmissibilityReport {
  bool contains_kernel = false;
  bool inside_holdall = false;
  bool epsilon_certified = false;
  bool lower_ok = false;
  bool upper_ok = false;
  double epsilon_estimate = 0.0;
  double lower_constant = 0.0;
  double upper_constant = 0.0;
  /// Jonsson variant only.
  std::optional<ScalingReport> ds, ld, normalized;
  bool verdict = false;
};

/// Sampling used by the admissibility checks.
struct AdmissibilityOptions {
  EpsilonOptions epsilon;
  SamplingGrid grid;
};

/// Throws "measure not a boundary volume" unless the carrier traces ∂Ω.
void require_boundary_volume(const PolygonalDomain& omega, const BoundaryMeasure& mu);

AdmissibilityReport check_shape_admissible(const PolygonalDomain& omega, const BoundaryMeasure& mu,
                                           const ShapeClassParams& params, const AdmissibilityOptions& options = {});

/// Containment and ε as above; the measure checks are Ds <= c_s, Ld >= c_d and
/// c1_lower <= μ(B(x, 1)) <= c2_upper.
AdmissibilityReport check_jonsson_admissible(const PolygonalDomain& omega, const BoundaryMeasure& mu,
                                             const ShapeClassParams& params, const JonssonParams& jonsson,
                                             const AdmissibilityOptions& options = {});

// ---------------------------------------------------------------------------

struct DomainWithMeasure {
  PolygonalDomain domain;
  BoundaryMeasure measure;
};

struct ConvergenceRow {
  double hausdorff_to_limit = 0.0;
  double charfn_p1 = 0.0;
  double charfn_p2 = 0.0;
  double measure_gap = 0.0;
  double carrier_hausdorff = 0.0;
};

struct ConvergenceDiagnostics {
  std::vector<ConvergenceRow> rows;
  CompactsReport compacts;
  std::vector<Polygon> probes_in, probes_out;
  double pitch = 0.0;
};

/// Four axis-aligned squares inside `kernel` and four in D minus the closure
/// of `limit`, each at least 2 pitches from every boundary involved.
std::pair<std::vector<Polygon>, std::vector<Polygon>> default_probes(const Polygon& holdall, const Polygon& kernel,
                                                                     const Polygon& limit, double pitch);

/// Per-member distances to the limit in all four convergence modes. `pitch`
/// drives the pixel metrics. Compact probes come from `default_probes`; without
/// a kernel, a square centered at the limit's centroid is used.
ConvergenceDiagnostics sequence_diagnostics(std::span<const DomainWithMeasure> sequence,
                                            const DomainWithMeasure& limit, const Polygon& holdall, double pitch,
                                            std::optional<Polygon> kernel = std::nullopt,
                                            TestFamily family = TestFamily::MonomialsDeg4);

}  // namespace fracshape
