#include <algorithm>
#include <cmath>
#include <limits>
#include <ostream>

#include "fracshape/mesh.hpp"

namespace fracshape {

double Mesh::triangle_area(std::size_t t) const {
  const auto& tri = triangles[t];
  const Point a = vertices[static_cast<std::size_t>(tri[0])];
  const Point b = vertices[static_cast<std::size_t>(tri[1])];
  const Point c = vertices[static_cast<std::size_t>(tri[2])];
  return 0.5 * cross(b - a, c - a);
}

double Mesh::area() const {
  double total = 0.0;
  for (std::size_t t = 0; t < triangles.size(); ++t) total += triangle_area(t);
  return total;
}

double Mesh::min_angle_deg() const {
  double best = 180.0;
  for (const auto& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      const Point p = vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])];
      const Point q = vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((i + 1) % 3)])];
      const Point r = vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((i + 2) % 3)])];
      const double ang = std::atan2(std::abs(cross(q - p, r - p)), dot(q - p, r - p)) * 180.0 / M_PI;
      best = std::min(best, ang);
    }
  }
  return best;
}

double Mesh::longest_edge() const {
  double best = 0.0;
  for (const auto& tri : triangles) {
    for (int i = 0; i < 3; ++i) {
      best = std::max(best, distance(vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>(i)])],
                                     vertices[static_cast<std::size_t>(tri[static_cast<std::size_t>((i + 1) % 3)])]));
    }
  }
  return best;
}

std::vector<int> Mesh::boundary_nodes(BoundaryLabel label) const {
  std::vector<int> out;
  for (const BoundaryEdge& e : boundary_edges) {
    if (e.label != label) continue;
    out.push_back(e.a);
    out.push_back(e.b);
  }
  std::sort(out.begin(), out.end());
  out.erase(std::unique(out.begin(), out.end()), out.end());
  return out;
}

bool Mesh::has_label(BoundaryLabel label) const {
  return std::any_of(boundary_edges.begin(), boundary_edges.end(),
                     [&](const BoundaryEdge& e) { return e.label == label; });
}

void check_mesh(const Mesh& mesh, const Polygon& polygon) {
  const double area = polygon.area();
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    if (!(mesh.triangle_area(t) > 1e-14 * area)) throw Error("mesh: degenerate or clockwise triangle " + std::to_string(t));
  }
  if (std::abs(mesh.area() - area) > 1e-12 * area) throw Error("mesh: triangle areas do not sum to the polygon area");
  // Subdivision points on slanted edges are rounded, hence the tolerance.
  const double tol = 1e-12 * std::max(1.0, polygon.diameter());
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    if (e.parent >= polygon.size()) throw Error("mesh: boundary edge with invalid parent");
    const auto [p, q] = polygon.edge(e.parent);
    const Point a = mesh.vertices[static_cast<std::size_t>(e.a)];
    const Point b = mesh.vertices[static_cast<std::size_t>(e.b)];
    if (point_segment_distance(a, p, q) > tol || point_segment_distance(b, p, q) > tol) {
      throw Error("mesh: boundary edge off its parent polygon edge");
    }
    if (dot(b - a, q - p) <= 0.0) throw Error("mesh: boundary edge against its parent orientation");
  }
}

// ---------------------------------------------------------------------------

BoundaryQuadrature boundary_quadrature(const Mesh& mesh, const BoundaryMeasure& mu, BoundaryLabel label) {
  BoundaryQuadrature q;
  q.label = label;
  const auto segs = mu.segments();
  for (std::size_t i = 0; i < mesh.boundary_edges.size(); ++i) {
    const BoundaryEdge& e = mesh.boundary_edges[i];
    if (e.label != label) continue;
    const Point a = mesh.vertices[static_cast<std::size_t>(e.a)];
    const Point b = mesh.vertices[static_cast<std::size_t>(e.b)];
    const Point d = b - a;
    const double len = norm(d);
    const double tol = 1e-10 * std::max(1.0, len);
    double mass = 0.0, covered = 0.0;
    for (const WeightedSegment& s : segs) {
      // Only carrier segments on the line of the edge contribute.
      if (std::abs(cross(d, s.a - a)) > tol * len || std::abs(cross(d, s.b - a)) > tol * len) continue;
      const double ta = dot(s.a - a, d) / (len * len);
      const double tb = dot(s.b - a, d) / (len * len);
      const double lo = std::max(0.0, std::min(ta, tb));
      const double hi = std::min(1.0, std::max(ta, tb));
      if (hi <= lo) continue;
      mass += s.density * (hi - lo) * len;
      covered += (hi - lo) * len;
    }
    if (covered < len * (1.0 - 1e-9)) throw Error("carrier mismatch: measure does not cover a labeled boundary edge");
    q.edges.push_back(i);
    q.mass.push_back(mass);
    q.total += mass;
  }
  return q;
}

namespace {
template <typename T>
T conj_if(T v) {
  if constexpr (std::is_same_v<T, Complex>) {
    return std::conj(v);
  } else {
    return v;
  }
}
}  // namespace

template <typename T>
T boundary_product(const Mesh& mesh, const BoundaryQuadrature& q, std::span<const T> u, std::span<const T> v) {
  T total{};
  for (std::size_t k = 0; k < q.edges.size(); ++k) {
    const BoundaryEdge& e = mesh.boundary_edges[q.edges[k]];
    const T ua = u[static_cast<std::size_t>(e.a)], ub = u[static_cast<std::size_t>(e.b)];
    const T va = conj_if(v[static_cast<std::size_t>(e.a)]), vb = conj_if(v[static_cast<std::size_t>(e.b)]);
    total += (q.mass[k] / 6.0) * (2.0 * ua * va + ua * vb + ub * va + 2.0 * ub * vb);
  }
  return total;
}

template double boundary_product<double>(const Mesh&, const BoundaryQuadrature&, std::span<const double>,
                                         std::span<const double>);
template Complex boundary_product<Complex>(const Mesh&, const BoundaryQuadrature&, std::span<const Complex>,
                                          std::span<const Complex>);

void write_mesh_text(std::ostream& out, const Mesh& mesh) {
  const auto old = out.precision(17);
  out << "vertices " << mesh.vertices.size() << '\n';
  for (Point p : mesh.vertices) out << p.x << ' ' << p.y << '\n';
  out << "triangles " << mesh.triangles.size() << '\n';
  for (const auto& t : mesh.triangles) out << t[0] << ' ' << t[1] << ' ' << t[2] << '\n';
  out << "boundary_edges " << mesh.boundary_edges.size() << '\n';
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    out << e.a << ' ' << e.b << ' ' << label_tag(e.label) << ' ' << e.parent << '\n';
  }
  out.precision(old);
}

}  // namespace fracshape
