#include "fracshape/kernels.hpp"

#include <omp.h>

#include <algorithm>
#include <cmath>
#include <limits>

#include "fracshape/geometry.hpp"

namespace fracshape {

double segment_disc_length(Point a, Point b, Point x, double r) {
  const Point d = b - a;
  const double len2 = dot(d, d);
  if (len2 == 0.0 || r <= 0.0) return 0.0;
  const double r2 = r * r;
  const double len = std::sqrt(len2);
  const bool a_in = distance_sq(a, x) < r2;
  const bool b_in = distance_sq(b, x) < r2;
  if (a_in && b_in) return len;
  // Chord around the foot of the perpendicular; avoids the cancellation in
  // the quadratic's discriminant when r is small against |a - x|.
  const double tp = dot(x - a, d) / len2;
  const Point foot = a + tp * d;
  const double p2 = distance_sq(foot, x);
  if (p2 >= r2) return 0.0;
  const double half = std::sqrt((r - std::sqrt(p2)) * (r + std::sqrt(p2))) / len;
  const double t0 = std::clamp(tp - half, 0.0, 1.0);
  const double t1 = std::clamp(tp + half, 0.0, 1.0);
  return std::max(0.0, t1 - t0) * len;
}

double segment_ball_mass(const WeightedSegment& s, Point x, double r) {
  const double dmin = point_segment_distance(x, s.a, s.b);
  if (r <= dmin) return 0.0;
  const double dmax = std::sqrt(std::max(distance_sq(x, s.a), distance_sq(x, s.b)));
  if (r > dmax) return distance(s.a, s.b) * s.density;
  return segment_disc_length(s.a, s.b, x, r) * s.density;
}

PixelGrid PixelGrid::covering(BBox box, double pitch) {
  if (!(pitch > 0.0)) throw Error("pixel pitch must be positive");
  PixelGrid g;
  g.pitch = pitch;
  g.nx = static_cast<std::size_t>(std::ceil(box.width() / pitch)) + 1;
  g.ny = static_cast<std::size_t>(std::ceil(box.height() / pitch)) + 1;
  // Center the lattice on the box.
  const double extra_x = static_cast<double>(g.nx) * pitch - box.width();
  const double extra_y = static_cast<double>(g.ny) * pitch - box.height();
  g.origin = {box.lo.x - 0.5 * extra_x, box.lo.y - 0.5 * extra_y};
  return g;
}

namespace kernels {
namespace {

constexpr double kInf = std::numeric_limits<double>::infinity();

void fill_row(const Polygon& polygon, const PixelGrid& grid, std::size_t j, std::vector<double>& xs,
              std::uint8_t* row) {
  const double y = grid.origin.y + (static_cast<double>(j) + 0.5) * grid.pitch;
  xs.clear();
  const auto& v = polygon.vertices();
  const std::size_t n = v.size();
  for (std::size_t e = 0; e < n; ++e) {
    const Point p = v[e];
    const Point q = v[(e + 1) % n];
    if ((p.y <= y && y < q.y) || (q.y <= y && y < p.y)) {
      xs.push_back(p.x + (y - p.y) * (q.x - p.x) / (q.y - p.y));
    }
  }
  std::sort(xs.begin(), xs.end());
  const double inv = 1.0 / grid.pitch;
  for (std::size_t k = 0; k + 1 < xs.size(); k += 2) {
    const double lo = (xs[k] - grid.origin.x) * inv - 0.5;
    const double hi = (xs[k + 1] - grid.origin.x) * inv - 0.5;
    long i0 = static_cast<long>(std::floor(lo)) + 1;
    long i1 = static_cast<long>(std::ceil(hi)) - 1;
    i0 = std::max(i0, 0L);
    i1 = std::min(i1, static_cast<long>(grid.nx) - 1);
    for (long i = i0; i <= i1; ++i) row[i] = 1;
  }
}

// Felzenszwalb-Huttenlocher 1D squared distance transform in place.
void edt_1d(double* f, std::size_t n, std::size_t stride, std::vector<double>& d, std::vector<std::size_t>& v,
            std::vector<double>& z) {
  d.resize(n);
  v.resize(n);
  z.resize(n + 1);
  std::size_t k = 0;
  std::size_t first = n;
  for (std::size_t q = 0; q < n; ++q) {
    if (std::isfinite(f[q * stride])) {
      first = q;
      break;
    }
  }
  if (first == n) return;
  v[0] = first;
  z[0] = -kInf;
  z[1] = kInf;
  for (std::size_t q = first + 1; q < n; ++q) {
    const double fq = f[q * stride];
    if (!std::isfinite(fq)) continue;
    const double qd = static_cast<double>(q);
    double s;
    while (true) {
      const double vk = static_cast<double>(v[k]);
      s = ((fq + qd * qd) - (f[v[k] * stride] + vk * vk)) / (2.0 * qd - 2.0 * vk);
      if (s > z[k]) break;
      --k;  // z[0] = -inf stops this at k = 0
    }
    ++k;
    v[k] = q;
    z[k] = s;
    z[k + 1] = kInf;
  }
  k = 0;
  for (std::size_t q = 0; q < n; ++q) {
    const double qd = static_cast<double>(q);
    while (z[k + 1] < qd) ++k;
    const double diff = qd - static_cast<double>(v[k]);
    d[q] = diff * diff + f[v[k] * stride];
  }
  for (std::size_t q = 0; q < n; ++q) f[q * stride] = d[q];
}

std::vector<double> distance_transform_impl(const Mask& target, const PixelGrid& grid, bool parallel) {
  const std::size_t nx = grid.nx, ny = grid.ny;
  std::vector<double> f(nx * ny);
  bool any = false;
  for (std::size_t idx = 0; idx < f.size(); ++idx) {
    f[idx] = target[idx] ? 0.0 : kInf;
    any = any || target[idx];
  }
  if (!any) return f;
  const long lnx = static_cast<long>(nx), lny = static_cast<long>(ny);
#pragma omp parallel if (parallel)
  {
    std::vector<double> d;
    std::vector<std::size_t> v;
    std::vector<double> z;
#pragma omp for schedule(static)
    for (long i = 0; i < lnx; ++i) edt_1d(f.data() + i, ny, nx, d, v, z);
#pragma omp for schedule(static)
    for (long j = 0; j < lny; ++j) edt_1d(f.data() + j * lnx, nx, 1, d, v, z);
  }
  const double p = grid.pitch;
  for (double& x : f) x = std::isfinite(x) ? std::sqrt(x) * p : kInf;
  return f;
}

struct PointBuckets {
  BBox box;
  double cell = 1.0;
  long nx = 1, ny = 1;
  std::vector<std::size_t> start;
  std::vector<Point> pts;

  explicit PointBuckets(std::span<const Point> points) {
    for (Point p : points) box.extend(p);
    // About one point per cell for both area-filling and curve-like samples.
    const double n = static_cast<double>(points.size());
    cell = std::max(2.0 * std::sqrt(box.width() * box.height() / n), 2.0 * std::max(box.width(), box.height()) / n);
    if (!(cell > 1e-12 * std::max(1.0, box.diagonal()))) cell = std::max(1.0, box.diagonal());
    nx = std::max(1L, static_cast<long>(std::floor(box.width() / cell)) + 1);
    ny = std::max(1L, static_cast<long>(std::floor(box.height() / cell)) + 1);
    std::vector<std::size_t> counts(static_cast<std::size_t>(nx * ny) + 1, 0);
    auto cell_of = [&](Point p) {
      const long i = std::clamp(static_cast<long>((p.x - box.lo.x) / cell), 0L, nx - 1);
      const long j = std::clamp(static_cast<long>((p.y - box.lo.y) / cell), 0L, ny - 1);
      return static_cast<std::size_t>(j * nx + i);
    };
    for (Point p : points) ++counts[cell_of(p) + 1];
    for (std::size_t c = 1; c < counts.size(); ++c) counts[c] += counts[c - 1];
    start = counts;
    pts.resize(points.size());
    std::vector<std::size_t> fill(counts.begin(), counts.end() - 1);
    for (Point p : points) pts[fill[cell_of(p)]++] = p;
  }

  double nearest_sq(Point a) const {
    const long ci = static_cast<long>(std::floor((a.x - box.lo.x) / cell));
    const long cj = static_cast<long>(std::floor((a.y - box.lo.y) / cell));
    const long di = ci < 0 ? -ci : (ci >= nx ? ci - nx + 1 : 0);
    const long dj = cj < 0 ? -cj : (cj >= ny ? cj - ny + 1 : 0);
    const long kmin = std::max(di, dj);
    const long kmax = std::max({ci + 1, nx - ci, cj + 1, ny - cj}) + 1;
    double best = kInf;
    for (long k = kmin; k <= kmax; ++k) {
      const double bound = static_cast<double>(k - 1) * cell;
      if (k > 0 && bound > 0.0 && bound * bound >= best) break;
      // Visit only the ring cells that lie inside the grid.
      const long j0 = std::max(0L, cj - k), j1 = std::min(ny - 1, cj + k);
      for (long j = j0; j <= j1; ++j) {
        const bool edge_row = (j == cj - k || j == cj + k);
        auto visit = [&](long i) {
          if (i < 0 || i >= nx) return;
          const std::size_t c = static_cast<std::size_t>(j * nx + i);
          for (std::size_t m = start[c]; m < start[c + 1]; ++m) best = std::min(best, distance_sq(a, pts[m]));
        };
        if (edge_row) {
          for (long i = std::max(0L, ci - k), i1 = std::min(nx - 1, ci + k); i <= i1; ++i) visit(i);
        } else {
          visit(ci - k);
          if (k > 0) visit(ci + k);
        }
      }
    }
    return best;
  }
};

std::vector<double> ball_mass_impl(std::span<const WeightedSegment> measure, std::span<const Point> centers,
                                   std::span<const double> radii, bool parallel) {
  const std::size_t nr = radii.size();
  std::vector<double> out(centers.size() * nr, 0.0);
  const double rmax = radii.empty() ? 0.0 : *std::max_element(radii.begin(), radii.end());
  const long nc = static_cast<long>(centers.size());
#pragma omp parallel for schedule(dynamic, 4) if (parallel)
  for (long c = 0; c < nc; ++c) {
    const Point x = centers[static_cast<std::size_t>(c)];
    double* row = out.data() + static_cast<std::size_t>(c) * nr;
    for (const WeightedSegment& s : measure) {
      // Skip segments entirely outside the largest ball.
      if (point_segment_distance(x, s.a, s.b) >= rmax) continue;
      for (std::size_t k = 0; k < nr; ++k) row[k] += segment_ball_mass(s, x, radii[k]);
    }
  }
  return out;
}

}  // namespace

namespace serial {

double directed_hausdorff(std::span<const Point> a, std::span<const Point> b) {
  double worst = 0.0;
  for (Point p : a) {
    double best = kInf;
    for (Point q : b) best = std::min(best, distance_sq(p, q));
    worst = std::max(worst, best);
  }
  return std::sqrt(worst);
}

Mask rasterize(const Polygon& polygon, const PixelGrid& grid) {
  Mask mask(grid.count(), 0);
  std::vector<double> xs;
  for (std::size_t j = 0; j < grid.ny; ++j) fill_row(polygon, grid, j, xs, mask.data() + j * grid.nx);
  return mask;
}

std::vector<double> distance_transform(const Mask& target, const PixelGrid& grid) {
  return distance_transform_impl(target, grid, false);
}

std::vector<double> ball_mass_table(std::span<const WeightedSegment> measure, std::span<const Point> centers,
                                    std::span<const double> radii) {
  std::vector<double> out(centers.size() * radii.size(), 0.0);
  for (std::size_t c = 0; c < centers.size(); ++c) {
    for (std::size_t k = 0; k < radii.size(); ++k) {
      double m = 0.0;
      for (const WeightedSegment& s : measure) m += segment_ball_mass(s, centers[c], radii[k]);
      out[c * radii.size() + k] = m;
    }
  }
  return out;
}

}  // namespace serial

namespace omp {

double directed_hausdorff(std::span<const Point> a, std::span<const Point> b) {
  if (a.empty() || b.empty()) return kInf;
  const PointBuckets buckets(b);
  double worst = 0.0;
  const long n = static_cast<long>(a.size());
#pragma omp parallel for reduction(max : worst) schedule(static)
  for (long i = 0; i < n; ++i) worst = std::max(worst, buckets.nearest_sq(a[static_cast<std::size_t>(i)]));
  return std::sqrt(worst);
}

Mask rasterize(const Polygon& polygon, const PixelGrid& grid) {
  Mask mask(grid.count(), 0);
  const long ny = static_cast<long>(grid.ny);
#pragma omp parallel
  {
    std::vector<double> xs;
#pragma omp for schedule(static)
    for (long j = 0; j < ny; ++j) {
      fill_row(polygon, grid, static_cast<std::size_t>(j), xs, mask.data() + static_cast<std::size_t>(j) * grid.nx);
    }
  }
  return mask;
}

std::vector<double> distance_transform(const Mask& target, const PixelGrid& grid) {
  return distance_transform_impl(target, grid, true);
}

std::vector<double> ball_mass_table(std::span<const WeightedSegment> measure, std::span<const Point> centers,
                                    std::span<const double> radii) {
  return ball_mass_impl(measure, centers, radii, true);
}

}  // namespace omp

void set_threads(int n) {
  if (n > 0) omp_set_num_threads(n);
}

int max_threads() { return omp_get_max_threads(); }

}  // namespace kernels
}  // namespace fracshape
