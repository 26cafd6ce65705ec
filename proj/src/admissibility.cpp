#include "fracshape/admissibility.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace fracshape {

void ShapeClassParams::validate() const {
  if (!holdall.contains_polygon(kernel)) throw Error("kernel D0 must lie inside the hold-all D");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (!(s >= 1.0 && s < 2.0)) throw Error("s must satisfy 1 <= s < 2");
  if (!(d >= 0.0 && d <= s)) throw Error("d must satisfy 0 <= d <= s");
}

void require_boundary_volume(const PolygonalDomain& omega, const BoundaryMeasure& mu) {
  const Polygon& poly = omega.outer();
  const double tol = 1e-10 * std::max(1.0, poly.diameter());
  bool ok = !mu.is_zero() && std::abs(mu.carrier_length() - poly.perimeter()) <= 1e-9 * poly.perimeter();
  for (const WeightedSegment& s : mu.segments()) {
    if (!ok) break;
    ok = poly.boundary_distance(s.a) <= tol && poly.boundary_distance(lerp(s.a, s.b, 0.5)) <= tol;
  }
  if (ok) {
    for (Point v : poly.vertices()) {
      const bool hit = std::any_of(mu.segments().begin(), mu.segments().end(),
                                   [&](const WeightedSegment& s) { return point_segment_distance(v, s.a, s.b) <= tol; });
      if (!hit) {
        ok = false;
        break;
      }
    }
  }
  if (!ok) throw Error("measure not a boundary volume");
}

namespace {

AdmissibilityReport geometric_checks(const PolygonalDomain& omega, const BoundaryMeasure& mu,
                                     const ShapeClassParams& params, const AdmissibilityOptions& options) {
  params.validate();
  require_boundary_volume(omega, mu);
  AdmissibilityReport rep;
  rep.contains_kernel = omega.outer().contains_polygon(params.kernel);
  rep.inside_holdall = params.holdall.contains_polygon(omega.outer());
  rep.epsilon_estimate = estimate_epsilon(omega, options.epsilon).value;
  rep.epsilon_certified = rep.epsilon_estimate >= params.epsilon;
  return rep;
}

}  // namespace

AdmissibilityReport check_shape_admissible(const PolygonalDomain& omega, const BoundaryMeasure& mu,
                                           const ShapeClassParams& params, const AdmissibilityOptions& options) {
  AdmissibilityReport rep = geometric_checks(omega, mu, params, options);
  const auto lower = verify_lower_ahlfors(mu, params.s, true, options.grid, params.lower_constant);
  const auto upper = verify_upper_ahlfors(mu, params.d, options.grid, params.upper_constant);
  rep.lower_constant = lower.best_constant;
  rep.upper_constant = upper.best_constant;
  rep.lower_ok = lower.pass;
  rep.upper_ok = upper.pass;
  rep.verdict = rep.contains_kernel && rep.inside_holdall && rep.epsilon_certified && rep.lower_ok && rep.upper_ok;
  return rep;
}

AdmissibilityReport check_jonsson_admissible(const PolygonalDomain& omega, const BoundaryMeasure& mu,
                                             const ShapeClassParams& params, const JonssonParams& jonsson,
                                             const AdmissibilityOptions& options) {
  AdmissibilityReport rep = geometric_checks(omega, mu, params, options);
  rep.ds = verify_Ds(mu, params.s, options.grid, jonsson.c_s);
  rep.ld = verify_Ld(mu, params.d, options.grid, jonsson.c_d);
  rep.normalized = verify_normalized(mu, options.grid, std::pair{jonsson.c1_lower, jonsson.c2_upper});
  rep.upper_constant = rep.ds->best_constant;
  rep.lower_constant = rep.ld->best_constant;
  rep.upper_ok = rep.ds->pass;
  rep.lower_ok = rep.ld->pass && rep.normalized->pass;
  rep.verdict = rep.contains_kernel && rep.inside_holdall && rep.epsilon_certified && rep.lower_ok && rep.upper_ok;
  return rep;
}

// ---------------------------------------------------------------------------

namespace {

/// Distance between the boundaries of two polygons.
double boundary_gap(const Polygon& a, const Polygon& b) {
  double best = std::numeric_limits<double>::infinity();
  for (std::size_t i = 0; i < a.size(); ++i) {
    const auto [p, q] = a.edge(i);
    for (std::size_t j = 0; j < b.size(); ++j) {
      const auto [r, s] = b.edge(j);
      best = std::min({best, point_segment_distance(p, r, s), point_segment_distance(r, p, q)});
    }
  }
  return best;
}

Polygon square(Point c, double side) {
  return Polygon::rectangle({c.x - 0.5 * side, c.y - 0.5 * side}, {c.x + 0.5 * side, c.y + 0.5 * side});
}

/// Largest square (by halving) centered at c with closed containment and the
/// required boundary margin.
std::optional<Polygon> fit_inside(const Polygon& host, Point c, double side, double margin) {
  for (int t = 0; t < 12 && side > 0.0; ++t, side *= 0.5) {
    if (!host.contains(c)) return std::nullopt;
    Polygon sq = square(c, side);
    if (host.contains_polygon(sq) && boundary_gap(host, sq) >= margin) return sq;
  }
  return std::nullopt;
}

Point area_centroid(const Polygon& p) {
  double cx = 0.0, cy = 0.0, a = 0.0;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto [u, v] = p.edge(i);
    const double w = cross(u, v);
    a += w;
    cx += (u.x + v.x) * w;
    cy += (u.y + v.y) * w;
  }
  return {cx / (3.0 * a), cy / (3.0 * a)};
}

}  // namespace

std::pair<std::vector<Polygon>, std::vector<Polygon>> default_probes(const Polygon& holdall, const Polygon& kernel,
                                                                     const Polygon& limit, double pitch) {
  const double margin = 2.0 * pitch;
  std::vector<Polygon> in, out;
  const BBox kb = kernel.bbox();
  const double kside = 0.25 * std::min(kb.width(), kb.height());
  for (int j = 0; j < 2; ++j) {
    for (int i = 0; i < 2; ++i) {
      const Point c{kb.lo.x + (0.25 + 0.5 * i) * kb.width(), kb.lo.y + (0.25 + 0.5 * j) * kb.height()};
      if (auto sq = fit_inside(kernel, c, kside, margin)) in.push_back(std::move(*sq));
    }
  }
  // One probe in the middle of each gap between the limit's box and the hold-all's box.
  const BBox lb = limit.bbox();
  const BBox hb = holdall.bbox();
  const Point mid{0.5 * (lb.lo.x + lb.hi.x), 0.5 * (lb.lo.y + lb.hi.y)};
  const std::pair<Point, double> gaps[4] = {
      {{0.5 * (hb.lo.x + lb.lo.x), mid.y}, lb.lo.x - hb.lo.x},
      {{0.5 * (hb.hi.x + lb.hi.x), mid.y}, hb.hi.x - lb.hi.x},
      {{mid.x, 0.5 * (hb.lo.y + lb.lo.y)}, lb.lo.y - hb.lo.y},
      {{mid.x, 0.5 * (hb.hi.y + lb.hi.y)}, hb.hi.y - lb.hi.y},
  };
  for (const auto& [c, gap] : gaps) {
    if (gap <= 2.0 * margin) continue;
    auto sq = fit_inside(holdall, c, 0.5 * gap, margin);
    if (sq && limit.disjoint_from(*sq) && boundary_gap(limit, *sq) >= margin) out.push_back(std::move(*sq));
  }
  return {std::move(in), std::move(out)};
}

ConvergenceDiagnostics sequence_diagnostics(std::span<const DomainWithMeasure> sequence,
                                            const DomainWithMeasure& limit, const Polygon& holdall, double pitch,
                                            std::optional<Polygon> kernel, TestFamily family) {
  if (!(pitch > 0.0)) throw Error("pixel pitch must be positive");
  const Polygon& lim = limit.domain.outer();
  if (!kernel) {
    const BBox lb = lim.bbox();
    kernel = fit_inside(lim, area_centroid(lim), 0.5 * std::min(lb.width(), lb.height()), 2.0 * pitch);
    if (!kernel) throw Error("no default kernel fits inside the limit");
  }
  ConvergenceDiagnostics diag;
  diag.pitch = pitch;
  std::tie(diag.probes_in, diag.probes_out) = default_probes(holdall, *kernel, lim, pitch);
  diag.rows.resize(sequence.size());
  for (std::size_t m = 0; m < sequence.size(); ++m) {
    const DomainWithMeasure& member = sequence[m];
    ConvergenceRow& row = diag.rows[m];
    row.hausdorff_to_limit = domain_hausdorff_distance(member.domain, limit.domain, holdall, pitch);
    row.charfn_p1 = char_fn_distance(member.domain, limit.domain, 1.0, pitch);
    row.charfn_p2 = char_fn_distance(member.domain, limit.domain, 2.0, pitch);
    const WeakGapReport gap = weak_convergence_gap(member.measure, limit.measure, family);
    row.measure_gap = gap.gap;
    row.carrier_hausdorff = gap.carrier_hausdorff;
  }
  std::vector<PolygonalDomain> domains;
  for (const auto& member : sequence) domains.push_back(member.domain);
  diag.compacts = compacts_convergence_check(domains, limit.domain, diag.probes_in, diag.probes_out);
  return diag;
}

}  // namespace fracshape
