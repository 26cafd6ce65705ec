#pragma once

// Data-parallel inner loops. Every kernel has a plain serial reference in
// `kernels::serial` and an OpenMP version in `kernels::omp` with the same
// signature; tests compare the two and bench/ times them.

#include <cstddef>
#include <cstdint>
#include <span>
#include <vector>

#include "fracshape/types.hpp"

namespace fracshape {

class Polygon;

struct WeightedSegment {
  Point a, b;
  double density = 1.0;
};

/// Length of the part of [a, b] inside the disc B(x, r) (open and closed agree).
double segment_disc_length(Point a, Point b, Point x, double r);

/// μ-mass of one weighted segment inside B(x, r). Every ball-mass code path
/// sums these in segment order, so results agree bit for bit.
double segment_ball_mass(const WeightedSegment& s, Point x, double r);

/// Pixel-center lattice. Pixel (i, j) has center origin + ((i + 1/2), (j + 1/2)) * pitch.
struct PixelGrid {
  Point origin;
  double pitch = 1.0;
  std::size_t nx = 0, ny = 0;

  static PixelGrid covering(BBox box, double pitch);
  Point center(std::size_t i, std::size_t j) const {
    return {origin.x + (static_cast<double>(i) + 0.5) * pitch, origin.y + (static_cast<double>(j) + 0.5) * pitch};
  }
  std::size_t count() const { return nx * ny; }
};

using Mask = std::vector<std::uint8_t>;

namespace kernels {
namespace serial {

/// sup_{a in A} min_{b in B} |a - b| by exhaustive search.
double directed_hausdorff(std::span<const Point> a, std::span<const Point> b);

/// Pixel centers strictly inside the polygon (even-odd scanline fill).
Mask rasterize(const Polygon& polygon, const PixelGrid& grid);

/// Exact Euclidean distance (in length units) from every pixel to the nearest
/// pixel set in `target`; +inf everywhere when `target` is empty.
std::vector<double> distance_transform(const Mask& target, const PixelGrid& grid);

/// out[c * radii.size() + k] = μ(B(centers[c], radii[k])).
std::vector<double> ball_mass_table(std::span<const WeightedSegment> measure, std::span<const Point> centers,
                                    std::span<const double> radii);

}  // namespace serial

namespace omp {

/// Bucketed nearest-neighbour search, parallel over A.
double directed_hausdorff(std::span<const Point> a, std::span<const Point> b);
Mask rasterize(const Polygon& polygon, const PixelGrid& grid);
std::vector<double> distance_transform(const Mask& target, const PixelGrid& grid);
/// Parallel over centers; only segments near each center are visited.
std::vector<double> ball_mass_table(std::span<const WeightedSegment> measure, std::span<const Point> centers,
                                    std::span<const double> radii);

}  // namespace omp

/// Sets the OpenMP thread count used by the `omp` kernels (0 keeps the default).
void set_threads(int n);
int max_threads();

}  // namespace kernels
}  // namespace fracshape
