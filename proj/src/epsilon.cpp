#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>
#include <queue>

#include "fracshape/geometry.hpp"

namespace fracshape {

CigarProfile cigar_profile(const Polyline& curve, std::size_t n_samples) {
  CigarProfile profile;
  profile.x = curve.front();
  profile.y = curve.back();
  profile.z = curve.equispaced(n_samples);
  const double dxy = distance(profile.x, profile.y);
  profile.lambda.resize(profile.z.size());
  for (std::size_t k = 0; k < profile.z.size(); ++k) {
    profile.lambda[k] = distance(profile.x, profile.z[k]) * distance(profile.y, profile.z[k]) / dxy;
  }
  profile.lambda.front() = 0.0;
  profile.lambda.back() = 0.0;
  return profile;
}

bool cigar_contained(const Polyline& curve, Point x, Point y, double epsilon, const PolygonalDomain& omega,
                     std::size_t n_samples) {
  if (x == y) throw Error("coincident endpoints");
  if (!(epsilon > 0.0)) throw Error("epsilon must be positive");
  if (curve.size() < 2 || curve.front() != x || curve.back() != y) throw Error("curve must join x to y");
  const double dxy = distance(x, y);
  if (curve.length() > dxy / epsilon) return false;
  const CigarProfile profile = cigar_profile(curve, n_samples);
  const Polygon& polygon = omega.outer();
  for (std::size_t k = 0; k < profile.z.size(); ++k) {
    const Point z = profile.z[k];
    if (!polygon.contains_closed(z)) return false;
    if (polygon.boundary_distance(z) < epsilon * profile.lambda[k]) return false;
  }
  return true;
}

double cigar_epsilon(const Polyline& curve, const SegmentIndex& boundary, const Polygon& polygon,
                     std::size_t n_samples) {
  const Point x = curve.front();
  const Point y = curve.back();
  if (x == y || !polygon.contains(x) || !polygon.contains(y)) return 0.0;
  const auto& pts = curve.points();
  for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
    if (boundary.intersects(pts[i], pts[i + 1])) return 0.0;
  }
  const CigarProfile profile = cigar_profile(curve, n_samples);
  double eps = distance(x, y) / curve.length();
  for (std::size_t k = 1; k + 1 < profile.z.size(); ++k) {
    if (profile.lambda[k] <= 0.0) continue;
    eps = std::min(eps, boundary.distance(profile.z[k]) / profile.lambda[k]);
  }
  return eps;
}

std::vector<double> epsilon_grid(const EpsilonOptions& options) {
  if (options.epsilon_grid < 2) throw Error("epsilon grid needs at least two points");
  std::vector<double> grid(options.epsilon_grid);
  const double l0 = std::log10(options.epsilon_min);
  const double l1 = std::log10(options.epsilon_max);
  for (std::size_t k = 0; k < grid.size(); ++k) {
    grid[k] = std::pow(10.0, l0 + (l1 - l0) * static_cast<double>(k) / static_cast<double>(grid.size() - 1));
  }
  grid.front() = options.epsilon_min;
  grid.back() = options.epsilon_max;
  return grid;
}

namespace {

/// Largest grid value not exceeding `eps` (0 if none).
double snap_down(const std::vector<double>& grid, double eps) {
  const double target = eps * (1.0 - 1e-12);
  auto it = std::upper_bound(grid.begin(), grid.end(), target);
  if (it == grid.begin()) return 0.0;
  return *std::prev(it);
}

// Uniform 8-connected node lattice restricted to the domain. Pair points are
// lattice nodes, so paths start and end exactly at x and y.
class PathGraph {
 public:
  PathGraph(const Polygon& polygon, const SegmentIndex& boundary, Point origin, double sx, double sy, std::size_t nx,
            std::size_t ny)
      : origin_(origin), sx_(sx), sy_(sy), nx_(nx), ny_(ny), clearance_(nx * ny, 0.0), links_(nx * ny, 0) {
    const long total = static_cast<long>(nx * ny);
#pragma omp parallel for schedule(dynamic, 256)
    for (long id = 0; id < total; ++id) {
      const Point p = node(static_cast<std::size_t>(id));
      if (polygon.contains(p)) clearance_[static_cast<std::size_t>(id)] = boundary.distance(p);
    }
#pragma omp parallel for schedule(dynamic, 256)
    for (long id = 0; id < total; ++id) {
      const auto u = static_cast<std::size_t>(id);
      if (clearance_[u] <= 0.0) continue;
      std::uint8_t mask = 0;
      for (int dir = 0; dir < 8; ++dir) {
        const auto v = neighbour(u, dir);
        if (!v || clearance_[*v] <= 0.0) continue;
        const double len = distance(node(u), node(*v));
        // Clearance beyond the edge length rules out any crossing.
        if (clearance_[u] > len || !boundary.intersects(node(u), node(*v))) mask |= std::uint8_t(1u << dir);
      }
      links_[u] = mask;
    }
  }

  Point node(std::size_t id) const {
    return {origin_.x + static_cast<double>(id % nx_) * sx_, origin_.y + static_cast<double>(id / nx_) * sy_};
  }
  std::size_t id(std::size_t i, std::size_t j) const { return j * nx_ + i; }
  double clearance(std::size_t id) const { return clearance_[id]; }
  std::size_t size() const { return clearance_.size(); }

  std::optional<std::size_t> neighbour(std::size_t u, int dir) const {
    static constexpr int dx[8] = {1, 1, 0, -1, -1, -1, 0, 1};
    static constexpr int dy[8] = {0, 1, 1, 1, 0, -1, -1, -1};
    const long i = static_cast<long>(u % nx_) + dx[dir];
    const long j = static_cast<long>(u / nx_) + dy[dir];
    if (i < 0 || j < 0 || i >= static_cast<long>(nx_) || j >= static_cast<long>(ny_)) return std::nullopt;
    return static_cast<std::size_t>(j) * nx_ + static_cast<std::size_t>(i);
  }
  bool linked(std::size_t u, int dir) const { return (links_[u] >> dir) & 1u; }

  /// Connected-component labels over linked nodes (-1 for nodes outside).
  std::vector<int> components() const {
    std::vector<int> comp(size(), -1);
    int next = 0;
    for (std::size_t s = 0; s < size(); ++s) {
      if (clearance_[s] <= 0.0 || comp[s] >= 0) continue;
      std::vector<std::size_t> stack{s};
      comp[s] = next;
      while (!stack.empty()) {
        const std::size_t u = stack.back();
        stack.pop_back();
        for (int dir = 0; dir < 8; ++dir) {
          if (!linked(u, dir)) continue;
          const std::size_t v = *neighbour(u, dir);
          if (comp[v] < 0) {
            comp[v] = next;
            stack.push_back(v);
          }
        }
      }
      ++next;
    }
    return comp;
  }

  /// A* under the metric len * (1 + kappa * max(0, 1 - clearance / (t * m(z)))),
  /// m(z) = min(|z - source|, |z - target|): a cigar-shaped clearance demand.
  /// t = 0 gives the plain grid-shortest path. Returns node ids from source to target.
  std::vector<std::size_t> shortest_path(std::size_t source, std::size_t target, double t) const {
    constexpr double kappa = 3.0;
    const Point goal = node(target);
    std::vector<double> g(size(), std::numeric_limits<double>::infinity());
    std::vector<std::size_t> parent(size(), std::numeric_limits<std::size_t>::max());
    using Item = std::pair<double, std::size_t>;
    std::priority_queue<Item, std::vector<Item>, std::greater<>> open;
    g[source] = 0.0;
    open.push({distance(node(source), goal), source});
    const Point start = node(source);
    auto penalty = [&](std::size_t v) {
      if (t <= 0.0) return 1.0;
      const Point z = node(v);
      const double demand = t * std::min(distance(z, start), distance(z, goal));
      if (demand <= clearance_[v]) return 1.0;
      return 1.0 + kappa * (1.0 - clearance_[v] / demand);
    };
    while (!open.empty()) {
      auto [f, u] = open.top();
      open.pop();
      if (u == target) break;
      if (f > g[u] + distance(node(u), goal) + 1e-15) continue;
      for (int dir = 0; dir < 8; ++dir) {
        if (!linked(u, dir)) continue;
        const std::size_t v = *neighbour(u, dir);
        const double cand = g[u] + distance(node(u), node(v)) * penalty(v);
        if (cand < g[v]) {
          g[v] = cand;
          parent[v] = u;
          open.push({cand + distance(node(v), goal), v});
        }
      }
    }
    std::vector<std::size_t> path;
    if (!std::isfinite(g[target])) return path;
    for (std::size_t u = target; u != source; u = parent[u]) path.push_back(u);
    path.push_back(source);
    std::reverse(path.begin(), path.end());
    return path;
  }

 private:
  Point origin_;
  double sx_, sy_;
  std::size_t nx_, ny_;
  std::vector<double> clearance_;
  std::vector<std::uint8_t> links_;
};

/// Chaikin corner cutting; a round is kept only if no new edge meets the boundary.
Polyline corner_cut(std::vector<Point> pts, const SegmentIndex& boundary, int rounds) {
  for (int r = 0; r < rounds && pts.size() > 2; ++r) {
    std::vector<Point> next{pts.front()};
    for (std::size_t i = 0; i + 1 < pts.size(); ++i) {
      const Point a = pts[i], b = pts[i + 1];
      if (i > 0) next.push_back(lerp(a, b, 0.25));
      if (i + 2 < pts.size()) next.push_back(lerp(a, b, 0.75));
    }
    next.push_back(pts.back());
    bool ok = true;
    for (std::size_t i = 0; i + 1 < next.size() && ok; ++i) ok = !boundary.intersects(next[i], next[i + 1]);
    if (!ok) break;
    pts = std::move(next);
  }
  return Polyline(std::move(pts));
}

/// Pattern search on a resampled control polygon, maximizing the sampled cigar
/// value. Scoring also at 4x the sample count keeps the search from threading
/// the boundary between samples.
Polyline improve_curve(const Polyline& start, const SegmentIndex& boundary, const Polygon& polygon,
                       std::size_t n_samples, std::size_t max_evaluations) {
  auto score = [&](const std::vector<Point>& pts) {
    const Polyline c(pts);
    return std::min(cigar_epsilon(c, boundary, polygon, n_samples), cigar_epsilon(c, boundary, polygon, 4 * n_samples));
  };
  std::vector<Point> pts;
  double cur = 0.0;
  for (std::size_t k : {17, 33}) {
    pts = start.equispaced(k);
    cur = score(pts);
    if (cur > 0.0) break;
  }
  if (!(cur > 0.0)) return start;
  const double dxy = distance(start.front(), start.back());
  static constexpr double dirs[8][2] = {{1, 0},  {0.7071067811865476, 0.7071067811865476},   {0, 1},  {-0.7071067811865476, 0.7071067811865476},
                                        {-1, 0}, {-0.7071067811865476, -0.7071067811865476}, {0, -1}, {0.7071067811865476, -0.7071067811865476}};
  std::size_t evaluations = 0;
  for (double step = 0.05 * dxy; step > 1e-4 * dxy && evaluations < max_evaluations;) {
    bool improved = false;
    for (std::size_t i = 1; i + 1 < pts.size(); ++i) {
      const Point keep = pts[i];
      for (const auto& d : dirs) {
        pts[i] = {keep.x + step * d[0], keep.y + step * d[1]};
        const double trial = score(pts);
        ++evaluations;
        if (trial > cur) {
          cur = trial;
          improved = true;
          break;
        }
        pts[i] = keep;
      }
    }
    if (!improved) step *= 0.5;
  }
  return Polyline(std::move(pts));
}

}  // namespace

EpsilonEstimate estimate_epsilon(const PolygonalDomain& omega, const EpsilonOptions& options) {
  if (options.pair_grid < 2) throw Error("pair_grid must be at least 2");
  const Polygon& polygon = omega.outer();
  const SegmentIndex boundary(polygon);
  const BBox box = polygon.bbox();
  const std::size_t g = options.pair_grid;
  const double cw = box.width() / static_cast<double>(g);
  const double ch = box.height() / static_cast<double>(g);

  std::vector<Point> points;
  std::vector<std::pair<std::size_t, std::size_t>> lattice_index;
  for (std::size_t j = 0; j < g; ++j) {
    for (std::size_t i = 0; i < g; ++i) {
      const Point p{box.lo.x + (static_cast<double>(i) + 0.5) * cw, box.lo.y + (static_cast<double>(j) + 0.5) * ch};
      if (polygon.contains(p)) {
        points.push_back(p);
        lattice_index.emplace_back(i, j);
      }
    }
  }
  if (points.size() < 2) throw Error("fewer than two interior pair points at this pair_grid");

  EpsilonEstimate est;
  est.grid = epsilon_grid(options);
  std::vector<std::pair<std::size_t, std::size_t>> pairs;
  for (std::size_t a = 0; a < points.size(); ++a) {
    for (std::size_t b = a + 1; b < points.size(); ++b) pairs.emplace_back(a, b);
  }
  const long npairs = static_cast<long>(pairs.size());

  const bool use_segment = options.family != CurveFamily::GridShortestPath;
  const bool use_paths = options.family != CurveFamily::Segment;

  std::vector<double> seg_eps(pairs.size(), 0.0);
  if (use_segment) {
#pragma omp parallel for schedule(dynamic, 64)
    for (long k = 0; k < npairs; ++k) {
      const auto [a, b] = pairs[static_cast<std::size_t>(k)];
      const Polyline seg({points[a], points[b]});
      seg_eps[static_cast<std::size_t>(k)] = snap_down(est.grid, cigar_epsilon(seg, boundary, polygon, options.n_samples));
    }
  }

  std::vector<double> best(seg_eps);
  std::vector<Polyline> curve(pairs.size());

  if (use_paths) {
    const double target_pitch = polygon.diameter() / static_cast<double>(options.path_resolution);
    const auto kx = 2 * static_cast<std::size_t>(std::ceil(cw / (2.0 * target_pitch)));
    const auto ky = 2 * static_cast<std::size_t>(std::ceil(ch / (2.0 * target_pitch)));
    const PathGraph graph(polygon, boundary, box.lo, cw / static_cast<double>(kx), ch / static_cast<double>(ky),
                          g * kx + 1, g * ky + 1);
    std::vector<std::size_t> node_of(points.size());
    for (std::size_t p = 0; p < points.size(); ++p) {
      node_of[p] = graph.id(lattice_index[p].first * kx + kx / 2, lattice_index[p].second * ky + ky / 2);
    }
    const auto comp = graph.components();
    for (std::size_t p = 0; p < points.size(); ++p) {
      if (comp[node_of[p]] < 0 || comp[node_of[p]] != comp[node_of[0]]) {
        throw Error("not path-connected at resolution");
      }
    }

    auto path_candidates = [&](std::size_t k) {
      const auto [a, b] = pairs[k];
      double top = 0.0;
      Polyline top_curve;
      for (double t : {0.0, 0.25, 0.5, 0.75}) {
        const auto ids = graph.shortest_path(node_of[a], node_of[b], t);
        if (ids.size() < 2) continue;
        std::vector<Point> raw;
        raw.reserve(ids.size());
        for (std::size_t id : ids) raw.push_back(graph.node(id));
        raw.front() = points[a];
        raw.back() = points[b];
        Polyline smooth = corner_cut(std::move(raw), boundary, 3);
        const double e = snap_down(est.grid, cigar_epsilon(smooth, boundary, polygon, options.n_samples));
        if (e > top) {
          top = e;
          top_curve = std::move(smooth);
        }
      }
      return std::pair{top, std::move(top_curve)};
    };

    // Per-pair value is max(segment, path). Pairs are visited by increasing
    // segment value; once a segment value reaches the running minimum no later
    // pair can lower it, so the remaining pairs keep their segment certificate.
    std::vector<std::size_t> order(pairs.size());
    std::iota(order.begin(), order.end(), 0);
    std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return seg_eps[i] < seg_eps[j]; });
    double running = std::numeric_limits<double>::infinity();
    std::size_t pos = 0;
    constexpr std::size_t kBatch = 32;
    while (pos < order.size()) {
      if (use_segment && seg_eps[order[pos]] >= running) break;
      const std::size_t end = std::min(order.size(), pos + kBatch);
      const long nb = static_cast<long>(end - pos);
#pragma omp parallel for schedule(dynamic, 1)
      for (long t = 0; t < nb; ++t) {
        const std::size_t k = order[pos + static_cast<std::size_t>(t)];
        auto [e, c] = path_candidates(k);
        if (!use_segment || e > best[k]) {
          best[k] = e;
          curve[k] = std::move(c);
        }
      }
      for (std::size_t t = pos; t < end; ++t) running = std::min(running, best[order[t]]);
      pos = end;
    }
  }

  if (use_paths && options.refine_evaluations > 0) {
    // Bottleneck refinement: improve the lowest pairs until the minimum is held
    // by a pair whose curve has already been optimized.
    std::vector<char> done(pairs.size(), 0);
    constexpr std::size_t kBatch = 16;
    while (true) {
      std::vector<std::size_t> order(pairs.size());
      std::iota(order.begin(), order.end(), 0);
      std::stable_sort(order.begin(), order.end(), [&](std::size_t i, std::size_t j) { return best[i] < best[j]; });
      if (done[order.front()]) break;
      std::vector<std::size_t> batch;
      for (std::size_t k : order) {
        if (batch.size() == kBatch) break;
        if (!done[k]) batch.push_back(k);
      }
      const long nb = static_cast<long>(batch.size());
#pragma omp parallel for schedule(dynamic, 1)
      for (long t = 0; t < nb; ++t) {
        const std::size_t k = batch[static_cast<std::size_t>(t)];
        const auto [a, b] = pairs[k];
        const Polyline from = curve[k].size() >= 2 ? curve[k] : Polyline({points[a], points[b]});
        Polyline better = improve_curve(from, boundary, polygon, options.n_samples, options.refine_evaluations);
        const double e = snap_down(est.grid, cigar_epsilon(better, boundary, polygon, options.n_samples));
        if (e > best[k]) {
          best[k] = e;
          curve[k] = std::move(better);
        }
        done[k] = 1;
      }
    }
  }

  est.pairs.resize(pairs.size());
  est.value = std::numeric_limits<double>::infinity();
  for (std::size_t k = 0; k < pairs.size(); ++k) {
    const auto [a, b] = pairs[k];
    PairCertificate& cert = est.pairs[k];
    cert.x = points[a];
    cert.y = points[b];
    cert.epsilon = best[k];
    cert.curve = curve[k].size() >= 2 ? std::move(curve[k]) : Polyline({points[a], points[b]});
    if (best[k] < est.value) {
      est.value = best[k];
      est.worst_pair = k;
    }
  }
  return est;
}

}  // namespace fracshape
