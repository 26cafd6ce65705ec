#pragma once

#include <array>
#include <cstddef>
#include <iosfwd>
#include <span>
#include <vector>

#include "fracshape/boundary_measure.hpp"
#include "fracshape/geometry.hpp"

namespace fracshape {

/// Boundary sub-edge a -> b, oriented along its parent polygon edge.
struct BoundaryEdge {
  int a = 0, b = 0;
  BoundaryLabel label = BoundaryLabel::Neumann;
  std::size_t parent = 0;
};

struct Mesh {
  std::vector<Point> vertices;
  std::vector<std::array<int, 3>> triangles;  ///< counterclockwise
  std::vector<BoundaryEdge> boundary_edges;
  double h = 0.0;  ///< longest edge

  double triangle_area(std::size_t t) const;
  double area() const;
  /// Smallest interior angle over all triangles, in degrees.
  double min_angle_deg() const;
  double longest_edge() const;
  /// Sorted vertex ids on edges with the label.
  std::vector<int> boundary_nodes(BoundaryLabel label) const;
  bool has_label(BoundaryLabel label) const;
};

struct MeshOptions {
  double min_angle_deg = 20.0;
  /// Triangles longer than size_factor * h are refined.
  double size_factor = 2.0;
  /// Interior lattice seeds keep at least this multiple of h from every constraint.
  double seed_clearance = 0.6;
  std::size_t max_vertices = 2'000'000;
};

/// Conforming quality triangulation of the domain. Polygon edges are split into
/// ceil(L / h) equal sub-edges which inherit the edge label.
Mesh triangulate(const PolygonalDomain& omega, double h, const MeshOptions& options = {});

/// Triangulation of the hold-all with ∂Ω as an internal constraint.
struct HoldallMesh {
  Mesh mesh;                ///< all of D; boundary edges are those of ∂D (labeled Neumann)
  std::vector<int> region;  ///< per triangle of `mesh`: 1 inside Ω, 0 in D minus Ω
  Mesh inner;               ///< the Ω part with Ω's labels on its boundary edges
  std::vector<int> inner_to_outer;
};

HoldallMesh triangulate_holdall(const Polygon& holdall, const PolygonalDomain& omega, double h,
                                const MeshOptions& options = {});

/// Mesh invariants: every triangle has area > 1e-14 * polygon area, the areas
/// sum to the polygon area to relative 1e-12, and each boundary edge lies on
/// its parent polygon edge.
/// Throws a descriptive Error on the first violation.
void check_mesh(const Mesh& mesh, const Polygon& polygon);

// ---------------------------------------------------------------------------

/// μ-mass per labeled boundary edge. The P1 boundary mass matrix of an edge
/// with mass m is (m / 6) [[2, 1], [1, 2]]: Simpson's rule, exact for products
/// of two affine traces.
struct BoundaryQuadrature {
  BoundaryLabel label = BoundaryLabel::Robin;
  std::vector<std::size_t> edges;  ///< indices into mesh.boundary_edges
  std::vector<double> mass;
  double total = 0.0;
};

/// Throws "carrier mismatch" when μ does not cover every edge with the label.
BoundaryQuadrature boundary_quadrature(const Mesh& mesh, const BoundaryMeasure& mu, BoundaryLabel label);

/// ∫ u conj(v) dμ over the labeled edges for nodal values u, v.
template <typename T>
T boundary_product(const Mesh& mesh, const BoundaryQuadrature& q, std::span<const T> u, std::span<const T> v);

/// Plain-text dump: "vertices N" then "x y" rows, "triangles M" then "a b c"
/// rows, "boundary_edges K" then "a b label parent" rows.
void write_mesh_text(std::ostream& out, const Mesh& mesh);

}  // namespace fracshape
