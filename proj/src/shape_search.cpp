#include "fracshape/shape_search.hpp"

#include <cmath>
#include <limits>

namespace fracshape {

Polygon ShapeFamily::holdall() { return Polygon::rectangle({0.0, 0.0}, {1.5, 1.0}); }

Polygon ShapeFamily::kernel() {
  return Polygon({{0.0, 0.0}, {1.0, 0.0}, {0.35, 0.25}, {0.35, 0.75}, {1.0, 1.0}, {0.0, 1.0}});
}

Polygon ShapeFamily::design_region() {
  return Polygon({{1.0, 0.0}, {1.5, 0.0}, {1.5, 1.0}, {1.0, 1.0}, {0.35, 0.75}, {0.35, 0.25}});
}

ShapeInstance ShapeFamily::from_wall(Polyline wall, BoundaryMeasure wall_measure) {
  const auto& w = wall.points();
  if (w.size() < 2 || !(w.front() == Point{1.0, 1.0}) || !(w.back() == Point{1.0, 0.0})) {
    throw Error("wall must run from (1, 1) to (1, 0)");
  }
  // Counterclockwise: bottom, wall upward, top, left.
  std::vector<Point> v{{0.0, 0.0}};
  v.insert(v.end(), w.rbegin(), w.rend());
  v.push_back({0.0, 1.0});
  std::vector<BoundaryLabel> labels(v.size(), BoundaryLabel::Robin);
  labels.front() = BoundaryLabel::Neumann;
  labels[labels.size() - 2] = BoundaryLabel::Neumann;
  labels.back() = BoundaryLabel::Dirichlet;
  ShapeInstance s{PolygonalDomain(Polygon(std::move(v)), std::move(labels), design_region()), {}, {}, {}};
  const BoundaryMeasure fixed = BoundaryMeasure::uniform(Polyline({{1.0, 1.0}, {0.0, 1.0}, {0.0, 0.0}, {1.0, 0.0}}));
  s.boundary_volume = sum_measures(fixed, wall_measure);
  s.robin_measure = std::move(wall_measure);
  s.wall = std::move(wall);
  return s;
}

BumpWallFamily::BumpWallFamily(double amplitude) : amplitude_(amplitude) {
  if (!(amplitude > 0.0 && amplitude <= 0.5)) throw Error("bump amplitude must lie in (0, 0.5]");
}

std::vector<double> BumpWallFamily::lower() const { return {-amplitude_, -amplitude_, -amplitude_}; }
std::vector<double> BumpWallFamily::upper() const { return {amplitude_, amplitude_, amplitude_}; }

ShapeInstance BumpWallFamily::build(std::span<const double> theta) const {
  if (theta.size() != 3) throw Error("bump wall takes three parameters");
  Polyline wall({{1.0, 1.0}, {1.0 + theta[2], 0.75}, {1.0 + theta[1], 0.5}, {1.0 + theta[0], 0.25}, {1.0, 0.0}});
  BoundaryMeasure mu = BoundaryMeasure::uniform(wall);
  return from_wall(std::move(wall), std::move(mu));
}

KochWallFamily::KochWallFamily(int max_level, double min_angle, double max_angle)
    : max_level_(max_level), min_angle_(min_angle), max_angle_(max_angle) {
  if (max_level < 0) throw Error("max level must be nonnegative");
  if (!(min_angle > 0.0 && min_angle <= max_angle && max_angle < 0.5 * M_PI)) throw Error("invalid bump angle range");
}

std::vector<double> KochWallFamily::lower() const { return {0.0, min_angle_}; }
std::vector<double> KochWallFamily::upper() const { return {static_cast<double>(max_level_), max_angle_}; }

ShapeInstance KochWallFamily::build(std::span<const double> theta) const {
  if (theta.size() != 2) throw Error("Koch wall takes two parameters");
  const int level = std::clamp(static_cast<int>(std::lround(theta[0])), 0, max_level_);
  Polyline wall = koch_prefractal(Polyline({{1.0, 1.0}, {1.0, 0.0}}), level, theta[1]);
  BoundaryMeasure mu = BoundaryMeasure::equal_edge_mass(wall, 1.0 / static_cast<double>(wall.size() - 1));
  return from_wall(std::move(wall), std::move(mu));
}

ShapeSearchOptions ShapeSearchOptions::fast() {
  ShapeSearchOptions o;
  o.admissibility.epsilon.pair_grid = 6;
  o.admissibility.epsilon.path_resolution = 64;
  o.admissibility.epsilon.n_samples = 32;
  o.admissibility.epsilon.epsilon_grid = 32;
  o.admissibility.epsilon.refine_evaluations = 200;
  return o;
}

// ---------------------------------------------------------------------------

namespace {

Eigen::VectorXcd nodal(const Mesh& mesh, const std::function<Complex(Point)>& fn) {
  if (!fn) return {};
  return ComplexField::interpolate(mesh, fn).values;
}

}  // namespace

ShapeEvaluation evaluate_shape(const ShapeFamily& family, std::span<const double> theta, const ShapeData& data,
                               const ObjectiveWeights& weights, const ShapeClassParams& params,
                               const ShapeSearchOptions& options) {
  const std::vector<double> lo = family.lower(), hi = family.upper();
  if (theta.size() != lo.size()) throw Error("parameter vector has the wrong dimension");
  for (std::size_t k = 0; k < theta.size(); ++k) {
    if (!(theta[k] >= lo[k] && theta[k] <= hi[k])) throw Error("parameter outside the family box");
  }
  ShapeEvaluation ev;
  ev.theta.assign(theta.begin(), theta.end());
  std::optional<ShapeInstance> built;
  try {
    built = family.build(theta);
  } catch (const Error& e) {
    ev.error = std::string("degenerate member: ") + e.what();
    return ev;
  }
  const ShapeInstance& inst = *built;
  try {
    ev.admissibility = check_shape_admissible(inst.domain, inst.boundary_volume, params, options.admissibility);
    ev.admissible = ev.admissibility.verdict;
    if (!ev.admissible) ev.error = "inadmissible";
  } catch (const Error& e) {
    ev.error = std::string("admissibility check failed: ") + e.what();
  }
  try {
    const Mesh mesh = triangulate(inst.domain, options.h, options.mesh);
    HelmholtzData hd(data.omega, {data.alpha});
    hd.f = nodal(mesh, data.f);
    hd.g = nodal(mesh, data.g);
    hd.h = nodal(mesh, data.h);
    const SolveReport rep = solve_helmholtz(mesh, hd, inst.robin_measure);
    ev.linear_residual = rep.linear_residual;
    ev.energy_defect = rep.energy_defect();
    ev.apriori_ratio = rep.apriori_ratio;
    const EnergyFunctional j{weights.A, weights.B, weights.C, inst.domain, inst.robin_measure, {}};
    const EnergyValue value = energy_J(j, rep.solution);
    if (!value.infinite) ev.J = value.value;
  } catch (const Error& e) {
    ev.admissible = false;
    ev.error = std::string("solve failed: ") + e.what();
  }
  if (!ev.J) ev.admissible = false;
  return ev;
}

std::vector<std::vector<double>> parameter_lattice(const ShapeFamily& family, std::size_t per_dimension) {
  if (per_dimension == 0) throw Error("lattice needs at least one point per coordinate");
  const std::vector<double> lo = family.lower(), hi = family.upper();
  std::vector<std::vector<double>> axes;
  std::size_t total = 1;
  for (std::size_t k = 0; k < lo.size(); ++k) {
    std::vector<double> axis;
    if (lo[k] == hi[k] || per_dimension == 1) {
      axis.push_back(lo[k]);
    } else {
      for (std::size_t i = 0; i < per_dimension; ++i) {
        axis.push_back(lo[k] + (hi[k] - lo[k]) * static_cast<double>(i) / static_cast<double>(per_dimension - 1));
      }
    }
    total *= axis.size();
    axes.push_back(std::move(axis));
  }
  std::vector<std::vector<double>> out;
  out.reserve(total);
  for (std::size_t flat = 0; flat < total; ++flat) {
    std::vector<double> theta(lo.size());
    std::size_t rest = flat;
    for (std::size_t k = lo.size(); k-- > 0;) {
      theta[k] = axes[k][rest % axes[k].size()];
      rest /= axes[k].size();
    }
    out.push_back(std::move(theta));
  }
  return out;
}

namespace {

/// Golden-section search on coordinate k over [a, b], at most `budget` calls.
/// `eval` returns the objective at a new point.
template <typename Eval>
void golden_section(std::vector<double> base, std::size_t k, double a, double b, std::size_t budget, Eval&& eval) {
  constexpr double kInvPhi = 0.6180339887498949;
  auto at = [&](double t) {
    base[k] = t;
    return eval(base);
  };
  if (budget == 0) return;
  double c = b - kInvPhi * (b - a), d = a + kInvPhi * (b - a);
  double fc = at(c);
  if (--budget == 0) return;
  double fd = at(d);
  --budget;
  while (budget > 0) {
    if (fc <= fd) {
      b = d;
      d = c;
      fd = fc;
      c = b - kInvPhi * (b - a);
      fc = at(c);
    } else {
      a = c;
      c = d;
      fc = fd;
      d = a + kInvPhi * (b - a);
      fd = at(d);
    }
    --budget;
  }
}

constexpr std::size_t kLineSearchCalls = 8;

}  // namespace

SearchReport minimize_shape(const ShapeFamily& family, const ShapeData& data, const ObjectiveWeights& weights,
                            const ShapeClassParams& params, SearchStrategy strategy, std::size_t budget,
                            const ShapeSearchOptions& options) {
  if (budget < 1) throw Error("search budget must be at least 1");
  params.validate();
  const std::vector<std::vector<double>> lattice = parameter_lattice(family, options.lattice);
  SearchReport rep;
  rep.log.resize(lattice.size());
  std::vector<std::string> errors(lattice.size());
  const auto count = static_cast<std::ptrdiff_t>(lattice.size());
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t i = 0; i < count; ++i) {
    const auto u = static_cast<std::size_t>(i);
    try {
      rep.log[u] = evaluate_shape(family, lattice[u], data, weights, params, options);
    } catch (const std::exception& e) {
      errors[u] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error(e);
  }
  rep.grid_evaluations = lattice.size();

  // First strict improvement in lattice order keeps the lexicographically smallest θ.
  std::optional<std::size_t> best;
  for (std::size_t i = 0; i < rep.log.size(); ++i) {
    const ShapeEvaluation& e = rep.log[i];
    if (e.admissible && e.J && (!best || *e.J < *rep.log[*best].J)) best = i;
  }
  if (!best) throw Error("empty admissible set at this resolution");
  rep.iterates.push_back(*best);

  if (strategy == SearchStrategy::CoordinateDescent) {
    const std::vector<double> lo = family.lower(), hi = family.upper();
    std::vector<double> step(lo.size());
    for (std::size_t k = 0; k < lo.size(); ++k) {
      step[k] = options.lattice > 1 ? (hi[k] - lo[k]) / static_cast<double>(options.lattice - 1) : 0.0;
    }
    std::size_t left = budget;
    auto eval = [&](const std::vector<double>& theta) {
      rep.log.push_back(evaluate_shape(family, theta, data, weights, params, options));
      --left;
      const ShapeEvaluation& e = rep.log.back();
      const double value = e.admissible && e.J ? *e.J : std::numeric_limits<double>::infinity();
      if (value < *rep.log[*best].J) best = rep.log.size() - 1;
      return value;
    };
    bool moved = true;
    while (left > 0 && moved) {
      moved = false;
      for (std::size_t k = 0; k < lo.size() && left > 0; ++k) {
        if (!(step[k] > 0.0)) continue;
        const std::vector<double> x = rep.log[*best].theta;
        const double a = std::max(lo[k], x[k] - step[k]);
        const double b = std::min(hi[k], x[k] + step[k]);
        golden_section(x, k, a, b, std::min(left, kLineSearchCalls), eval);
        rep.iterates.push_back(*best);
        moved = true;
      }
      for (double& s : step) s *= 0.5;
    }
  }

  rep.best_theta = rep.log[*best].theta;
  rep.best_J = *rep.log[*best].J;

  std::vector<DomainWithMeasure> seq;
  for (std::size_t i : rep.iterates) {
    ShapeInstance inst = family.build(rep.log[i].theta);
    seq.push_back({std::move(inst.domain), std::move(inst.boundary_volume)});
  }
  const Polygon d = ShapeFamily::holdall();
  for (std::size_t i = 0; i + 1 < seq.size(); ++i) {
    rep.iterate_distances.push_back(domain_hausdorff_distance(seq[i].domain, seq[i + 1].domain, d, options.distance_pitch));
  }
  rep.diagnostics = sequence_diagnostics(seq, seq.back(), d, options.pitch, params.kernel);
  return rep;
}

}  // namespace fracshape
