#include "fracshape/boundary_measure.hpp"

#include <algorithm>
#include <array>
#include <cmath>
#include <limits>

namespace fracshape {

namespace {

void check_carrier(const Polyline& carrier, const std::vector<double>& densities) {
  if (carrier.size() < 2) throw Error("measure carrier needs at least two points");
  if (densities.size() + 1 != carrier.size()) throw Error("one density per carrier segment required");
  for (double d : densities) {
    if (!(d > 0.0) || !std::isfinite(d)) throw Error("densities must be positive and finite");
  }
}

// Andrew's monotone chain; used only to bound the diameter computation.
std::vector<Point> convex_hull(std::vector<Point> pts) {
  std::sort(pts.begin(), pts.end(), [](Point a, Point b) { return a.x < b.x || (a.x == b.x && a.y < b.y); });
  pts.erase(std::unique(pts.begin(), pts.end()), pts.end());
  if (pts.size() < 3) return pts;
  std::vector<Point> hull(2 * pts.size());
  std::size_t k = 0;
  for (Point p : pts) {
    while (k >= 2 && cross(hull[k - 1] - hull[k - 2], p - hull[k - 2]) <= 0.0) --k;
    hull[k++] = p;
  }
  for (std::size_t i = pts.size() - 1, t = k + 1; i-- > 0;) {
    while (k >= t && cross(hull[k - 1] - hull[k - 2], pts[i] - hull[k - 2]) <= 0.0) --k;
    hull[k++] = pts[i];
  }
  hull.resize(k - 1);
  return hull;
}

constexpr std::array<double, 5> kGaussNodes = {-0.9061798459386640, -0.5384693101056831, 0.0, 0.5384693101056831,
                                               0.9061798459386640};
constexpr std::array<double, 5> kGaussWeights = {0.2369268850561891, 0.4786286704993665, 0.5688888888888889,
                                                 0.4786286704993665, 0.2369268850561891};

void require_mass(const BoundaryMeasure& mu) {
  if (mu.is_zero()) throw Error("zero total mass");
}

}  // namespace

BoundaryMeasure::BoundaryMeasure(Polyline carrier, std::vector<double> densities) {
  check_carrier(carrier, densities);
  pieces_.push_back({std::move(carrier), std::move(densities)});
  rebuild();
}

BoundaryMeasure::BoundaryMeasure(std::vector<MeasurePiece> pieces) : pieces_(std::move(pieces)) {
  for (const auto& p : pieces_) check_carrier(p.carrier, p.densities);
  rebuild();
}

BoundaryMeasure BoundaryMeasure::uniform(Polyline carrier, double density) {
  std::vector<double> dens(carrier.size() > 0 ? carrier.size() - 1 : 0, density);
  return BoundaryMeasure(std::move(carrier), std::move(dens));
}

BoundaryMeasure BoundaryMeasure::equal_edge_mass(Polyline carrier, double edge_mass) {
  std::vector<double> dens;
  const auto& pts = carrier.points();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) dens.push_back(edge_mass / distance(pts[i], pts[i + 1]));
  return BoundaryMeasure(std::move(carrier), std::move(dens));
}

BoundaryMeasure BoundaryMeasure::on_boundary(const Polygon& polygon, double density) {
  return uniform(boundary_polyline(polygon), density);
}

void BoundaryMeasure::rebuild() {
  segments_.clear();
  total_mass_ = 0.0;
  for (const auto& piece : pieces_) {
    const auto& pts = piece.carrier.points();
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      segments_.push_back({pts[i], pts[i + 1], piece.densities[i]});
      total_mass_ += piece.densities[i] * distance(pts[i], pts[i + 1]);
    }
  }
}

double BoundaryMeasure::carrier_length() const {
  double total = 0.0;
  for (const auto& p : pieces_) total += p.carrier.length();
  return total;
}

double BoundaryMeasure::diameter() const {
  std::vector<Point> all;
  for (const auto& p : pieces_) all.insert(all.end(), p.carrier.points().begin(), p.carrier.points().end());
  const auto hull = convex_hull(std::move(all));
  double best = 0.0;
  for (std::size_t i = 0; i < hull.size(); ++i) {
    for (std::size_t j = i + 1; j < hull.size(); ++j) best = std::max(best, distance(hull[i], hull[j]));
  }
  return best;
}

BBox BoundaryMeasure::bbox() const {
  BBox box;
  for (const auto& p : pieces_) {
    for (Point q : p.carrier.points()) box.extend(q);
  }
  return box;
}

double BoundaryMeasure::ball_mass(Point x, double r, bool /*closed*/) const {
  if (!(r > 0.0)) throw Error("radius must be positive");
  double m = 0.0;
  for (const WeightedSegment& s : segments_) m += segment_ball_mass(s, x, r);
  return m;
}

std::vector<Point> BoundaryMeasure::arclength_samples(std::size_t n) const {
  if (n < 2) throw Error("need at least two samples");
  require_mass(*this);
  const double total = carrier_length();
  std::vector<Point> out;
  out.reserve(n);
  std::size_t piece = 0;
  double offset = 0.0;  // arclength before the current piece
  for (std::size_t k = 0; k < n; ++k) {
    const double s = k + 1 == n ? total : total * static_cast<double>(k) / static_cast<double>(n - 1);
    while (piece + 1 < pieces_.size() && s > offset + pieces_[piece].carrier.length()) {
      offset += pieces_[piece].carrier.length();
      ++piece;
    }
    out.push_back(k + 1 == n ? pieces_.back().carrier.back() : pieces_[piece].carrier.at(s - offset));
  }
  return out;
}

double BoundaryMeasure::integrate(const std::function<double(Point)>& f) const {
  double total = 0.0;
  for (const WeightedSegment& s : segments_) {
    const double half = 0.5 * distance(s.a, s.b);
    double acc = 0.0;
    for (std::size_t q = 0; q < kGaussNodes.size(); ++q) acc += kGaussWeights[q] * f(lerp(s.a, s.b, 0.5 * (1.0 + kGaussNodes[q])));
    total += s.density * half * acc;
  }
  return total;
}

BoundaryMeasure sum_measures(const BoundaryMeasure& a, const BoundaryMeasure& b) {
  std::vector<MeasurePiece> pieces = a.pieces();
  pieces.insert(pieces.end(), b.pieces().begin(), b.pieces().end());
  return BoundaryMeasure(std::move(pieces));
}

BoundaryMeasure koch_natural_measure(int level, const Polyline& base) {
  return BoundaryMeasure::equal_edge_mass(koch_prefractal(base, level, M_PI / 3.0), std::pow(4.0, -level));
}

BoundaryMeasure koch_snowflake_measure(int level, double side, Point center) {
  return BoundaryMeasure::equal_edge_mass(boundary_polyline(koch_snowflake(level, side, center)), std::pow(4.0, -level));
}

// ---------------------------------------------------------------------------

std::string_view condition_name(ScalingCondition condition) {
  switch (condition) {
    case ScalingCondition::LowerAhlfors: return "lower_ahlfors";
    case ScalingCondition::LowerAhlforsClosed: return "lower_ahlfors_closed";
    case ScalingCondition::UpperAhlfors: return "upper_ahlfors";
    case ScalingCondition::Ds: return "Ds";
    case ScalingCondition::Ld: return "Ld";
    case ScalingCondition::Normalized: return "normalized";
  }
  return "unknown";
}

std::vector<double> SamplingGrid::radius_values(double diameter) const {
  if (radii < 2) throw Error("radius grid needs at least two values");
  const double lo = r_min_factor * diameter;
  if (!(lo > 0.0) || !(lo < r_max)) throw Error("empty radius range");
  std::vector<double> out(radii);
  const double l0 = std::log(lo);
  const double l1 = std::log(r_max);
  for (std::size_t k = 0; k < radii; ++k) {
    out[k] = std::exp(l0 + (l1 - l0) * static_cast<double>(k) / static_cast<double>(radii - 1));
  }
  out.front() = lo;
  out.back() = r_max;
  return out;
}

std::vector<double> SamplingGrid::multipliers() const {
  std::vector<double> out;
  for (int j = 0; j <= k_max_exponent; ++j) out.push_back(std::ldexp(1.0, j));
  return out;
}

namespace {

struct Sweep {
  std::vector<Point> centers;
  std::vector<double> radii;
  std::vector<double> table;  // centers x radii
};

Sweep ball_sweep(const BoundaryMeasure& mu, const SamplingGrid& grid, std::vector<double> radii) {
  Sweep sw;
  sw.centers = mu.arclength_samples(grid.centers);
  sw.radii = std::move(radii);
  sw.table = kernels::omp::ball_mass_table(mu.segments(), sw.centers, sw.radii);
  return sw;
}

ScalingReport single_scale(const BoundaryMeasure& mu, ScalingCondition cond, double exponent,
                           const SamplingGrid& grid, bool minimize) {
  require_mass(mu);
  const Sweep sw = ball_sweep(mu, grid, grid.radius_values(mu.diameter()));
  ScalingReport rep;
  rep.condition = cond;
  rep.exponent = exponent;
  rep.grid = grid;
  rep.best_constant = minimize ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  const std::size_t nr = sw.radii.size();
  for (std::size_t c = 0; c < sw.centers.size(); ++c) {
    for (std::size_t k = 0; k < nr; ++k) {
      const double ratio = sw.table[c * nr + k] / std::pow(sw.radii[k], exponent);
      if (minimize ? ratio < rep.best_constant : ratio > rep.best_constant) {
        rep.best_constant = ratio;
        rep.witness = {sw.centers[c], sw.radii[k], 1.0};
      }
    }
  }
  return rep;
}

ScalingReport multi_scale(const BoundaryMeasure& mu, ScalingCondition cond, double exponent,
                          const SamplingGrid& grid, bool minimize) {
  require_mass(mu);
  const auto base = grid.radius_values(mu.diameter());
  const auto ks = grid.multipliers();
  // Column layout: for each base radius, the multipliers with k r <= r_max.
  std::vector<double> radii;
  std::vector<std::pair<std::size_t, std::size_t>> combos;  // (radius index, k index)
  for (std::size_t i = 0; i < base.size(); ++i) {
    for (std::size_t j = 0; j < ks.size(); ++j) {
      if (ks[j] * base[i] > grid.r_max * (1.0 + 1e-12)) break;
      combos.emplace_back(i, j);
      radii.push_back(ks[j] * base[i]);
    }
  }
  std::vector<std::size_t> k1_column(base.size());
  for (std::size_t col = 0; col < combos.size(); ++col) {
    if (combos[col].second == 0) k1_column[combos[col].first] = col;
  }
  const Sweep sw = ball_sweep(mu, grid, radii);
  ScalingReport rep;
  rep.condition = cond;
  rep.exponent = exponent;
  rep.grid = grid;
  rep.best_constant = minimize ? std::numeric_limits<double>::infinity() : -std::numeric_limits<double>::infinity();
  const std::size_t nr = radii.size();
  for (std::size_t c = 0; c < sw.centers.size(); ++c) {
    for (std::size_t col = 0; col < combos.size(); ++col) {
      const auto [i, j] = combos[col];
      const double small = sw.table[c * nr + k1_column[i]];
      if (!(small > 0.0)) throw Error("support violation");
      const double ratio = sw.table[c * nr + col] / (std::pow(ks[j], exponent) * small);
      if (minimize ? ratio < rep.best_constant : ratio > rep.best_constant) {
        rep.best_constant = ratio;
        rep.witness = {sw.centers[c], base[i], ks[j]};
      }
    }
  }
  return rep;
}

void check_exponent(double e, double lo, double hi, bool open_lo) {
  if (!std::isfinite(e) || e > hi || (open_lo ? e <= lo : e < lo)) throw Error("exponent out of range");
}

}  // namespace

ScalingReport verify_lower_ahlfors(const BoundaryMeasure& mu, double s, bool closed, const SamplingGrid& grid,
                                   std::optional<double> threshold) {
  check_exponent(s, 0.0, 2.0, true);
  auto rep = single_scale(mu, closed ? ScalingCondition::LowerAhlforsClosed : ScalingCondition::LowerAhlfors, s, grid,
                          true);
  rep.pass = !threshold || rep.best_constant >= *threshold;
  return rep;
}

ScalingReport verify_upper_ahlfors(const BoundaryMeasure& mu, double d, const SamplingGrid& grid,
                                   std::optional<double> threshold) {
  check_exponent(d, 0.0, 2.0, false);
  auto rep = single_scale(mu, ScalingCondition::UpperAhlfors, d, grid, false);
  rep.pass = !threshold || rep.best_constant <= *threshold;
  return rep;
}

ScalingReport verify_Ds(const BoundaryMeasure& mu, double s, const SamplingGrid& grid,
                        std::optional<double> threshold) {
  check_exponent(s, 0.0, 2.0, true);
  auto rep = multi_scale(mu, ScalingCondition::Ds, s, grid, false);
  rep.pass = !threshold || rep.best_constant <= *threshold;
  return rep;
}

ScalingReport verify_Ld(const BoundaryMeasure& mu, double d, const SamplingGrid& grid,
                        std::optional<double> threshold) {
  check_exponent(d, 0.0, 2.0, false);
  auto rep = multi_scale(mu, ScalingCondition::Ld, d, grid, true);
  rep.pass = !threshold || rep.best_constant >= *threshold;
  return rep;
}

ScalingReport verify_normalized(const BoundaryMeasure& mu, const SamplingGrid& grid,
                                std::optional<std::pair<double, double>> bounds) {
  require_mass(mu);
  const Sweep sw = ball_sweep(mu, grid, {1.0});
  ScalingReport rep;
  rep.condition = ScalingCondition::Normalized;
  rep.grid = grid;
  rep.best_constant = std::numeric_limits<double>::infinity();
  double hi = -std::numeric_limits<double>::infinity();
  Witness hi_w;
  for (std::size_t c = 0; c < sw.centers.size(); ++c) {
    const double m = sw.table[c];
    if (m < rep.best_constant) {
      rep.best_constant = m;
      rep.witness = {sw.centers[c], 1.0, 1.0};
    }
    if (m > hi) {
      hi = m;
      hi_w = {sw.centers[c], 1.0, 1.0};
    }
  }
  rep.upper_constant = hi;
  rep.upper_witness = hi_w;
  rep.pass = !bounds || (rep.best_constant >= bounds->first && hi <= bounds->second);
  return rep;
}

double witness_ratio(const BoundaryMeasure& mu, ScalingCondition condition, double exponent, const Witness& w) {
  switch (condition) {
    case ScalingCondition::LowerAhlfors:
    case ScalingCondition::LowerAhlforsClosed:
    case ScalingCondition::UpperAhlfors:
      return mu.ball_mass(w.center, w.radius) / std::pow(w.radius, exponent);
    case ScalingCondition::Ds:
    case ScalingCondition::Ld:
      return mu.ball_mass(w.center, w.k * w.radius) / (std::pow(w.k, exponent) * mu.ball_mass(w.center, w.radius));
    case ScalingCondition::Normalized:
      return mu.ball_mass(w.center, 1.0);
  }
  return 0.0;
}

// ---------------------------------------------------------------------------

std::vector<std::function<double(Point)>> test_family(TestFamily family, BBox box) {
  std::vector<std::function<double(Point)>> out;
  if (family == TestFamily::MonomialsDeg4) {
    for (int deg = 0; deg <= 4; ++deg) {
      for (int a = deg; a >= 0; --a) {
        const int b = deg - a;
        out.emplace_back([a, b](Point p) { return std::pow(p.x, a) * std::pow(p.y, b); });
      }
    }
    return out;
  }
  const double sigma = std::max(0.25 * box.diagonal(), 1e-12);
  for (int j = 0; j < 3; ++j) {
    for (int i = 0; i < 3; ++i) {
      const Point c{box.lo.x + 0.5 * i * box.width(), box.lo.y + 0.5 * j * box.height()};
      out.emplace_back([c, sigma](Point p) { return std::exp(-distance_sq(p, c) / (2.0 * sigma * sigma)); });
    }
  }
  return out;
}

namespace {

PointSample carrier_sample(const BoundaryMeasure& mu, double resolution) {
  std::vector<Point> pts;
  for (const auto& piece : mu.pieces()) {
    const auto part = piece.carrier.refined(resolution).points();
    pts.insert(pts.end(), part.begin(), part.end());
  }
  return PointSample(std::move(pts), resolution);
}

double shortest_edge(const BoundaryMeasure& mu) {
  double best = std::numeric_limits<double>::infinity();
  for (const WeightedSegment& s : mu.segments()) {
    const double len = distance(s.a, s.b);
    if (len > 0.0) best = std::min(best, len);
  }
  return best;
}

}  // namespace

WeakGapReport weak_convergence_gap(const BoundaryMeasure& mu_m, const BoundaryMeasure& mu, TestFamily family,
                                   std::optional<double> resolution) {
  WeakGapReport rep;
  BBox box = mu_m.bbox();
  const BBox other = mu.bbox();
  if (!mu.is_zero()) {
    box.extend(other.lo);
    box.extend(other.hi);
  }
  const auto fns = test_family(family, box);
  for (std::size_t i = 0; i < fns.size(); ++i) {
    const double g = std::abs(mu_m.integrate(fns[i]) - mu.integrate(fns[i]));
    if (g > rep.gap) {
      rep.gap = g;
      rep.worst_function = i;
    }
  }
  if (!mu_m.is_zero() && !mu.is_zero()) {
    const double res = resolution.value_or(0.1 * std::min(shortest_edge(mu_m), shortest_edge(mu)));
    rep.carrier_hausdorff = hausdorff_distance(carrier_sample(mu_m, res), carrier_sample(mu, res));
  }
  return rep;
}

}  // namespace fracshape
