#include <benchmark/benchmark.h>

#include <random>
#include <vector>

#include "fracshape/boundary_measure.hpp"
#include "fracshape/geometry.hpp"
#include "fracshape/kernels.hpp"

using namespace fracshape;

namespace {

std::vector<Point> cloud(std::size_t n, std::uint64_t seed) {
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> u(0.0, 1.0);
  std::vector<Point> pts(n);
  for (Point& p : pts) p = {u(rng), u(rng)};
  return pts;
}

template <double (*Fn)(std::span<const Point>, std::span<const Point>)>
void BM_DirectedHausdorff(benchmark::State& state) {
  const auto n = static_cast<std::size_t>(state.range(0));
  const auto a = cloud(n, 1), b = cloud(n, 2);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(a, b));
}
BENCHMARK(BM_DirectedHausdorff<kernels::serial::directed_hausdorff>)->Name("directed_hausdorff/serial")->Arg(1000)->Arg(4000);
BENCHMARK(BM_DirectedHausdorff<kernels::omp::directed_hausdorff>)->Name("directed_hausdorff/omp")->Arg(1000)->Arg(4000)->Arg(64000);

template <Mask (*Fn)(const Polygon&, const PixelGrid&)>
void BM_Rasterize(benchmark::State& state) {
  const Polygon flake = koch_snowflake(5);
  const PixelGrid grid = PixelGrid::covering(flake.bbox(), 1.0 / static_cast<double>(state.range(0)));
  for (auto _ : state) benchmark::DoNotOptimize(Fn(flake, grid));
}
BENCHMARK(BM_Rasterize<kernels::serial::rasterize>)->Name("rasterize/serial")->Arg(512)->Arg(2048);
BENCHMARK(BM_Rasterize<kernels::omp::rasterize>)->Name("rasterize/omp")->Arg(512)->Arg(2048);

template <std::vector<double> (*Fn)(const Mask&, const PixelGrid&)>
void BM_DistanceTransform(benchmark::State& state) {
  const Polygon flake = koch_snowflake(4);
  const PixelGrid grid = PixelGrid::covering(flake.bbox(), 1.0 / static_cast<double>(state.range(0)));
  const Mask mask = kernels::omp::rasterize(flake, grid);
  for (auto _ : state) benchmark::DoNotOptimize(Fn(mask, grid));
}
BENCHMARK(BM_DistanceTransform<kernels::serial::distance_transform>)->Name("distance_transform/serial")->Arg(256)->Arg(1024);
BENCHMARK(BM_DistanceTransform<kernels::omp::distance_transform>)->Name("distance_transform/omp")->Arg(256)->Arg(1024);

template <std::vector<double> (*Fn)(std::span<const WeightedSegment>, std::span<const Point>, std::span<const double>)>
void BM_BallMassTable(benchmark::State& state) {
  const BoundaryMeasure mu = koch_snowflake_measure(static_cast<int>(state.range(0)));
  std::vector<Point> centers;
  const auto segs = mu.segments();
  for (std::size_t k = 0; k < segs.size(); k += 7) centers.push_back(segs[k].a);
  const std::vector<double> radii{1e-3, 4e-3, 1.6e-2, 6.4e-2, 0.256};
  for (auto _ : state) benchmark::DoNotOptimize(Fn(segs, centers, radii));
}
BENCHMARK(BM_BallMassTable<kernels::serial::ball_mass_table>)->Name("ball_mass_table/serial")->Arg(4)->Arg(5);
BENCHMARK(BM_BallMassTable<kernels::omp::ball_mass_table>)->Name("ball_mass_table/omp")->Arg(4)->Arg(5)->Arg(6);

}  // namespace

BENCHMARK_MAIN();
