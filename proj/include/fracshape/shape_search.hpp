#pragma once

#include <functional>
#include <memory>
#include <optional>
#include <span>
#include <string>
#include <vector>

#include "fracshape/admissibility.hpp"
#include "fracshape/helmholtz.hpp"
#include "fracshape/variational.hpp"

namespace fracshape {

/// One member Ω(θ): the labeled domain, its boundary volume (arclength on the
/// fixed parts plus μ_Γ on the wall) and μ_Γ alone.
struct ShapeInstance {
  PolygonalDomain domain;
  BoundaryMeasure boundary_volume;
  BoundaryMeasure robin_measure;
  Polyline wall;
};

/// Chamber D = (0, 1.5) × (0, 1) with kernel D0 left of the dashed polyline
/// (1, 0), (0.35, 0.25), (0.35, 0.75), (1, 1). Ω(θ) is the part of D left of a
/// Robin wall from (1, 0) to (1, 1); the left side x = 0 is Dirichlet, the
/// top and bottom of Ω are Neumann.
class ShapeFamily {
 public:
  virtual ~ShapeFamily() = default;
  virtual std::string name() const = 0;
  virtual std::size_t dimension() const = 0;
  virtual std::vector<double> lower() const = 0;
  virtual std::vector<double> upper() const = 0;
  /// Throws Error for degenerate parameters.
  virtual ShapeInstance build(std::span<const double> theta) const = 0;

  static Polygon holdall();
  static Polygon kernel();
  static Polygon design_region();
  /// Builds a member from a wall polyline running from (1, 1) down to (1, 0).
  static ShapeInstance from_wall(Polyline wall, BoundaryMeasure wall_measure);
};

/// Wall through (1, 0), (1 + θ1, 1/4), (1 + θ2, 1/2), (1 + θ3, 3/4), (1, 1)
/// with arclength measure. Every θ_k lies in [-amplitude, amplitude].
class BumpWallFamily : public ShapeFamily {
 public:
  explicit BumpWallFamily(double amplitude = 0.3);
  std::string name() const override { return "bump-wall"; }
  std::size_t dimension() const override { return 3; }
  std::vector<double> lower() const override;
  std::vector<double> upper() const override;
  ShapeInstance build(std::span<const double> theta) const override;

 private:
  double amplitude_;
};

/// Koch wall bulging into D1. θ = (level, bump angle); the level is rounded to
/// the nearest integer. Natural self-similar weights of total mass 1.
class KochWallFamily : public ShapeFamily {
 public:
  KochWallFamily(int max_level = 3, double min_angle = 0.2617993877991494, double max_angle = 1.0471975511965976);
  std::string name() const override { return "koch-wall"; }
  std::size_t dimension() const override { return 2; }
  std::vector<double> lower() const override;
  std::vector<double> upper() const override;
  ShapeInstance build(std::span<const double> theta) const override;

 private:
  int max_level_;
  double min_angle_, max_angle_;
};

/// Single member; lower() == upper() == {0}.
class ConstantFamily : public ShapeFamily {
 public:
  explicit ConstantFamily(ShapeInstance instance) : instance_(std::move(instance)) {}
  std::string name() const override { return "constant"; }
  std::size_t dimension() const override { return 1; }
  std::vector<double> lower() const override { return {0.0}; }
  std::vector<double> upper() const override { return {0.0}; }
  ShapeInstance build(std::span<const double>) const override { return instance_; }

 private:
  ShapeInstance instance_;
};

/// Helmholtz data as functions, interpolated on each member's mesh.
struct ShapeData {
  double omega = 1.0;
  Complex alpha{1.0, -1.0};
  std::function<Complex(Point)> f, g, h;  ///< empty means zero
};

struct ObjectiveWeights {
  double A = 1.0, B = 1.0, C = 1.0;
};

struct ShapeSearchOptions {
  double h = 0.05;
  MeshOptions mesh;
  AdmissibilityOptions admissibility;
  /// Lattice points per coordinate for the grid strategy.
  std::size_t lattice = 9;
  /// Pixel pitch of the sequence diagnostics.
  double pitch = 1.0 / 128.0;
  /// Raster pitch of the successive-iterate distances, finer than `pitch` so
  /// that sub-pixel moves register as sub-pixel distances.
  double distance_pitch = 1.0 / 1024.0;

  /// Coarser ε sampling that keeps one evaluation well under a second.
  static ShapeSearchOptions fast();
};

struct ShapeEvaluation {
  std::vector<double> theta;
  std::optional<double> J;  ///< empty when the member could not be built or solved
  bool admissible = false;
  AdmissibilityReport admissibility;
  double linear_residual = 0.0;
  double energy_defect = 0.0;
  double apriori_ratio = 0.0;
  std::string error;  ///< why J is missing or the member is inadmissible
};

/// Builds Ω(θ), checks admissibility, meshes, solves and evaluates
/// J = A ∫|u|² + B ∫|∇u|² + C ∫_Γ |Tr u|² dμ.
ShapeEvaluation evaluate_shape(const ShapeFamily& family, std::span<const double> theta, const ShapeData& data,
                               const ObjectiveWeights& weights, const ShapeClassParams& params,
                               const ShapeSearchOptions& options = {});

enum class SearchStrategy { Grid, CoordinateDescent };

struct SearchReport {
  std::vector<double> best_theta;
  double best_J = 0.0;
  /// Grid evaluations in lattice order, then descent evaluations in call order.
  std::vector<ShapeEvaluation> log;
  std::size_t grid_evaluations = 0;
  /// Log indices of the successive descent iterates (grid best first).
  std::vector<std::size_t> iterates;
  /// Hausdorff distance between successive iterates at `distance_pitch`.
  std::vector<double> iterate_distances;
  ConvergenceDiagnostics diagnostics;
};

/// Lattice points in lexicographic order, first coordinate slowest.
std::vector<std::vector<double>> parameter_lattice(const ShapeFamily& family, std::size_t per_dimension);

/// Grid: exhaustive over the lattice, ties broken by the lexicographically
/// smallest θ. Coordinate descent: the grid, then cyclic golden-section line
/// searches from the grid best, at most `budget` further evaluations.
/// Throws "empty admissible set at this resolution" when nothing is admissible.
SearchReport minimize_shape(const ShapeFamily& family, const ShapeData& data, const ObjectiveWeights& weights,
                            const ShapeClassParams& params, SearchStrategy strategy, std::size_t budget,
                            const ShapeSearchOptions& options = {});

}  // namespace fracshape
