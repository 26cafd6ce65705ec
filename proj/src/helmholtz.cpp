#include "fracshape/helmholtz.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <optional>
#include <random>
#include <sstream>

#include <Eigen/SparseLU>

#include "fracshape/kernels.hpp"

namespace fracshape {

namespace {

using Triplets = std::vector<Eigen::Triplet<double>>;

std::size_t idx(int v) { return static_cast<std::size_t>(v); }

SparseComplex to_complex(const SparseReal& a) { return a.cast<Complex>(); }

/// Rows and columns of `a` restricted to the index lists.
template <typename Scalar>
Eigen::SparseMatrix<Scalar> submatrix(const Eigen::SparseMatrix<Scalar>& a, const std::vector<int>& rows,
                                      const std::vector<int>& cols) {
  std::vector<int> rmap(static_cast<std::size_t>(a.rows()), -1), cmap(static_cast<std::size_t>(a.cols()), -1);
  for (std::size_t i = 0; i < rows.size(); ++i) rmap[idx(rows[i])] = static_cast<int>(i);
  for (std::size_t i = 0; i < cols.size(); ++i) cmap[idx(cols[i])] = static_cast<int>(i);
  std::vector<Eigen::Triplet<Scalar>> t;
  for (int k = 0; k < a.outerSize(); ++k) {
    for (typename Eigen::SparseMatrix<Scalar>::InnerIterator it(a, k); it; ++it) {
      const int r = rmap[idx(static_cast<int>(it.row()))];
      const int c = cmap[idx(static_cast<int>(it.col()))];
      if (r >= 0 && c >= 0) t.emplace_back(r, c, it.value());
    }
  }
  Eigen::SparseMatrix<Scalar> out(static_cast<Eigen::Index>(rows.size()), static_cast<Eigen::Index>(cols.size()));
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

Eigen::VectorXcd gather(const Eigen::VectorXcd& v, const std::vector<int>& ids) {
  Eigen::VectorXcd out(static_cast<Eigen::Index>(ids.size()));
  for (std::size_t i = 0; i < ids.size(); ++i) out[static_cast<Eigen::Index>(i)] = v[ids[i]];
  return out;
}

std::vector<int> complement(std::size_t n, const std::vector<int>& taken) {
  std::vector<char> mark(n, 0);
  for (int v : taken) mark[idx(v)] = 1;
  std::vector<int> out;
  for (std::size_t i = 0; i < n; ++i) {
    if (!mark[i]) out.push_back(static_cast<int>(i));
  }
  return out;
}

Eigen::VectorXcd data_or_zero(const Eigen::VectorXcd& v, std::size_t n, const char* name) {
  if (v.size() == 0) return Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  if (static_cast<std::size_t>(v.size()) != n) {
    throw Error(std::string("helmholtz data '") + name + "' must have one value per mesh vertex");
  }
  return v;
}

/// Real symmetric solve applied to the real and imaginary parts.
template <typename Solver>
Eigen::VectorXcd solve_split(const Solver& solver, const Eigen::VectorXcd& b) {
  const Eigen::VectorXd re = solver.solve(b.real().eval());
  const Eigen::VectorXd im = solver.solve(b.imag().eval());
  Eigen::VectorXcd x(b.size());
  x.real() = re;
  x.imag() = im;
  return x;
}

double quad_form(const SparseReal& a, const Eigen::VectorXcd& u) {
  return std::max(0.0, u.dot(a * u).real());
}

}  // namespace

ComplexField::ComplexField(const Mesh& m, Eigen::VectorXcd v) : mesh(&m), values(std::move(v)) {
  if (static_cast<std::size_t>(values.size()) != m.vertices.size()) {
    throw Error("field size does not match the mesh vertex count");
  }
}

ComplexField ComplexField::constant(const Mesh& m, Complex c) {
  return ComplexField(m, Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(m.vertices.size()), c));
}

ComplexField ComplexField::interpolate(const Mesh& m, const std::function<Complex(Point)>& fn) {
  Eigen::VectorXcd v(static_cast<Eigen::Index>(m.vertices.size()));
  for (std::size_t i = 0; i < m.vertices.size(); ++i) v[static_cast<Eigen::Index>(i)] = fn(m.vertices[i]);
  return ComplexField(m, std::move(v));
}

P1Matrices assemble_p1(const Mesh& mesh) {
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  Triplets k, m;
  k.reserve(9 * mesh.triangles.size());
  m.reserve(9 * mesh.triangles.size());
  for (const auto& t : mesh.triangles) {
    Point p[3];
    for (int i = 0; i < 3; ++i) p[i] = mesh.vertices[idx(t[static_cast<std::size_t>(i)])];
    const double area2 = cross(p[1] - p[0], p[2] - p[0]);
    const double area = 0.5 * area2;
    Point g[3];
    for (int i = 0; i < 3; ++i) {
      const Point a = p[(i + 1) % 3], b = p[(i + 2) % 3];
      g[i] = {(a.y - b.y) / area2, (b.x - a.x) / area2};
    }
    for (int i = 0; i < 3; ++i) {
      for (int j = 0; j < 3; ++j) {
        const int r = t[static_cast<std::size_t>(i)], c = t[static_cast<std::size_t>(j)];
        k.emplace_back(r, c, area * dot(g[i], g[j]));
        m.emplace_back(r, c, area / 12.0 * (i == j ? 2.0 : 1.0));
      }
    }
  }
  P1Matrices out;
  out.stiffness.resize(n, n);
  out.mass.resize(n, n);
  out.stiffness.setFromTriplets(k.begin(), k.end());
  out.mass.setFromTriplets(m.begin(), m.end());
  return out;
}

SparseComplex boundary_mass_matrix(const Mesh& mesh, const BoundaryQuadrature& q,
                                   const std::vector<Complex>& edge_weight) {
  if (!edge_weight.empty() && edge_weight.size() != q.edges.size()) {
    throw Error("boundary_mass_matrix: one weight per quadrature edge required");
  }
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  std::vector<Eigen::Triplet<Complex>> t;
  t.reserve(4 * q.edges.size());
  for (std::size_t k = 0; k < q.edges.size(); ++k) {
    const BoundaryEdge& e = mesh.boundary_edges[q.edges[k]];
    const Complex w = (edge_weight.empty() ? Complex(1.0) : edge_weight[k]) * (q.mass[k] / 6.0);
    t.emplace_back(e.a, e.a, 2.0 * w);
    t.emplace_back(e.b, e.b, 2.0 * w);
    t.emplace_back(e.a, e.b, w);
    t.emplace_back(e.b, e.a, w);
  }
  SparseComplex out(n, n);
  out.setFromTriplets(t.begin(), t.end());
  return out;
}

double l2_norm(const P1Matrices& m, const Eigen::VectorXcd& u) { return std::sqrt(quad_form(m.mass, u)); }
double gradient_norm(const P1Matrices& m, const Eigen::VectorXcd& u) { return std::sqrt(quad_form(m.stiffness, u)); }
double w12_norm(const P1Matrices& m, const Eigen::VectorXcd& u) {
  return std::sqrt(quad_form(m.mass, u) + quad_form(m.stiffness, u));
}

// ---------------------------------------------------------------------------

HelmholtzData::HelmholtzData(double omega, std::vector<Complex> alpha) : omega_(omega), alpha_(std::move(alpha)) {
  if (!(omega_ > 0.0)) throw Error("omega must be positive");
  if (alpha_.empty()) throw Error("at least one Robin coefficient is required");
  for (Complex a : alpha_) {
    if (!(a.real() > 0.0) || !(a.imag() < 0.0)) throw Error("Robin coefficient needs Re(alpha) > 0 and Im(alpha) < 0");
  }
}

Complex HelmholtzData::alpha(std::size_t parent_edge) const {
  if (alpha_.size() == 1) return alpha_.front();
  if (parent_edge >= alpha_.size()) throw Error("no Robin coefficient for this polygon edge");
  return alpha_[parent_edge];
}

namespace {

struct RobinParts {
  BoundaryQuadrature q;
  std::vector<Complex> alpha;  ///< per quadrature edge
};

RobinParts robin_parts(const Mesh& mesh, const HelmholtzData& data, const BoundaryMeasure& mu) {
  RobinParts r;
  r.q.label = BoundaryLabel::Robin;
  if (!mesh.has_label(BoundaryLabel::Robin)) return r;
  r.q = boundary_quadrature(mesh, mu, BoundaryLabel::Robin);
  for (std::size_t e : r.q.edges) r.alpha.push_back(data.alpha(mesh.boundary_edges[e].parent));
  return r;
}

std::vector<Complex> scaled_alpha(const std::vector<Complex>& alpha, Complex (*part)(Complex)) {
  std::vector<Complex> out;
  for (Complex a : alpha) out.push_back(part(a));
  return out;
}

Complex real_part(Complex a) { return {a.real(), 0.0}; }
Complex imag_part(Complex a) { return {0.0, a.imag()}; }

using LU = Eigen::SparseLU<SparseComplex, Eigen::COLAMDOrdering<int>>;

/// Factorize and solve, with up to three steps of iterative refinement.
Eigen::VectorXcd lu_solve(const SparseComplex& a, const Eigen::VectorXcd& b, double* residual) {
  if (a.rows() == 0) {
    *residual = 0.0;
    return {};
  }
  LU lu;
  lu.analyzePattern(a);
  lu.factorize(a);
  if (lu.info() != Eigen::Success) throw Error("discrete resonance or invalid data");
  Eigen::VectorXcd x = lu.solve(b);
  const double bn = b.norm();
  auto rel = [&](const Eigen::VectorXcd& r) { return bn > 0.0 ? r.norm() / bn : r.norm(); };
  Eigen::VectorXcd r = b - a * x;
  for (int it = 0; it < 3 && rel(r) > 0.1 * kSolverTolerance; ++it) {
    x += lu.solve(r);
    r = b - a * x;
  }
  *residual = rel(r);
  if (!std::isfinite(*residual) || *residual > kSolverTolerance) throw Error("discrete resonance or invalid data");
  return x;
}

/// Dirichlet-side piecewise-linear interpolant of g and its arclength measure.
double dirichlet_besov_norm(const Mesh& mesh, const Eigen::VectorXcd& g) {
  std::vector<MeasurePiece> pieces;
  std::vector<const BoundaryEdge*> edges;
  for (const BoundaryEdge& e : mesh.boundary_edges) {
    if (e.label != BoundaryLabel::Dirichlet) continue;
    pieces.push_back({Polyline({mesh.vertices[idx(e.a)], mesh.vertices[idx(e.b)]}), {1.0}});
    edges.push_back(&e);
  }
  if (pieces.empty() || g.cwiseAbs().maxCoeff() == 0.0) return 0.0;
  const BoundaryMeasure mu(std::move(pieces));
  auto phi = [&](Point p) {
    const BoundaryEdge* best = edges.front();
    double dist = std::numeric_limits<double>::infinity();
    for (const BoundaryEdge* e : edges) {
      const double d = point_segment_distance(p, mesh.vertices[idx(e->a)], mesh.vertices[idx(e->b)]);
      if (d < dist) dist = d, best = e;
    }
    const Point a = mesh.vertices[idx(best->a)], b = mesh.vertices[idx(best->b)];
    const double t = std::clamp(dot(p - a, b - a) / distance_sq(a, b), 0.0, 1.0);
    return (1.0 - t) * g[best->a] + t * g[best->b];
  };
  return besov_norm(phi, mu);
}

}  // namespace

LinearSystem assemble(const Mesh& mesh, const HelmholtzData& data, const BoundaryMeasure& mu_robin) {
  const std::size_t n = mesh.vertices.size();
  const Eigen::VectorXcd f = data_or_zero(data.f, n, "f");
  const Eigen::VectorXcd g = data_or_zero(data.g, n, "g");
  const Eigen::VectorXcd h = data_or_zero(data.h, n, "h");
  const P1Matrices p1 = assemble_p1(mesh);
  const RobinParts robin = robin_parts(mesh, data, mu_robin);
  const double w2 = data.omega() * data.omega();

  LinearSystem sys;
  sys.matrix = to_complex(p1.stiffness) - Complex(w2) * to_complex(p1.mass) +
               boundary_mass_matrix(mesh, robin.q, robin.alpha);
  sys.rhs = -(to_complex(p1.mass) * f) + boundary_mass_matrix(mesh, robin.q) * h;
  sys.dirichlet = mesh.boundary_nodes(BoundaryLabel::Dirichlet);
  sys.free = complement(n, sys.dirichlet);
  sys.lift = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(n));
  for (int v : sys.dirichlet) sys.lift[v] = g[v];
  sys.reduced = submatrix(sys.matrix, sys.free, sys.free);
  sys.reduced_rhs = gather(sys.rhs - sys.matrix * sys.lift, sys.free);
  return sys;
}

SolveReport solve_helmholtz(const Mesh& mesh, const HelmholtzData& data, const BoundaryMeasure& mu_robin,
                            SolveMode mode) {
  const std::size_t n = mesh.vertices.size();
  const LinearSystem sys = assemble(mesh, data, mu_robin);
  const P1Matrices p1 = assemble_p1(mesh);
  const RobinParts robin = robin_parts(mesh, data, mu_robin);
  const SparseComplex r_alpha = boundary_mass_matrix(mesh, robin.q, robin.alpha);
  const SparseComplex r_one = boundary_mass_matrix(mesh, robin.q);
  const Eigen::VectorXcd f = data_or_zero(data.f, n, "f");
  const Eigen::VectorXcd h = data_or_zero(data.h, n, "h");
  const double w2 = data.omega() * data.omega();

  Eigen::VectorXcd u = sys.lift;
  double residual = 0.0;
  if (mode == SolveMode::Lifted) {
    const Eigen::VectorXcd x = lu_solve(sys.reduced, sys.reduced_rhs, &residual);
    for (std::size_t i = 0; i < sys.free.size(); ++i) u[sys.free[i]] = x[static_cast<Eigen::Index>(i)];
  } else {
    // ĝ: harmonic, equal to g on Dirichlet nodes, ∂ĝ/∂n + Re(α) ĝ = 0 on Robin edges.
    Eigen::VectorXcd ghat = sys.lift;
    if (!sys.dirichlet.empty()) {
      const SparseComplex aux =
          to_complex(p1.stiffness) + boundary_mass_matrix(mesh, robin.q, scaled_alpha(robin.alpha, real_part));
      double aux_res = 0.0;
      const Eigen::VectorXcd x = lu_solve(submatrix(aux, sys.free, sys.free), gather(-(aux * sys.lift), sys.free),
                                          &aux_res);
      for (std::size_t i = 0; i < sys.free.size(); ++i) ghat[sys.free[i]] = x[static_cast<Eigen::Index>(i)];
    }
    // u − ĝ ∈ V solves the problem with f − ω²ĝ and h − i Im(α) ĝ.
    const Eigen::VectorXcd rhs = -(to_complex(p1.mass) * (f - w2 * ghat)) + r_one * h -
                                 boundary_mass_matrix(mesh, robin.q, scaled_alpha(robin.alpha, imag_part)) * ghat;
    double w_res = 0.0;
    const Eigen::VectorXcd w = lu_solve(sys.reduced, gather(rhs, sys.free), &w_res);
    u = ghat;
    for (std::size_t i = 0; i < sys.free.size(); ++i) u[sys.free[i]] += w[static_cast<Eigen::Index>(i)];
    // Residual of the one-step system at the combined solution.
    const Eigen::VectorXcd r = sys.reduced * gather(u, sys.free) - sys.reduced_rhs;
    const double bn = sys.reduced_rhs.norm();
    residual = bn > 0.0 ? r.norm() / bn : r.norm();
  }

  SolveReport rep;
  rep.solution = ComplexField(mesh, u);
  rep.linear_residual = residual;

  // Galerkin identity at v = u − lift, which lies in the test space.
  const Eigen::VectorXcd v = u - sys.lift;
  const Complex t_k = v.dot(p1.stiffness.cast<Complex>() * u);
  const Complex t_m = w2 * v.dot(p1.mass.cast<Complex>() * u);
  const Complex t_r = v.dot(r_alpha * u);
  const Complex t_f = v.dot(p1.mass.cast<Complex>() * f);
  const Complex t_h = v.dot(r_one * h);
  const Complex defect = (t_k - t_m + t_r) - (-t_f + t_h);
  const double scale = std::abs(t_k) + std::abs(t_m) + std::abs(t_r) + std::abs(t_f) + std::abs(t_h);
  rep.energy_defect_re = scale > 0.0 ? std::abs(defect.real()) / scale : 0.0;
  rep.energy_defect_im = scale > 0.0 ? std::abs(defect.imag()) / scale : 0.0;

  rep.acoustic_energy = quad_form(p1.mass, u);
  rep.gradient_energy = quad_form(p1.stiffness, u);
  rep.robin_trace_energy = std::max(0.0, u.dot(r_one * u).real());
  rep.robin_absorption = u.dot(r_alpha * u).imag();
  const Eigen::VectorXcd au = sys.matrix * u;
  for (int i : sys.dirichlet) rep.dirichlet_work += std::conj(sys.lift[i]) * au[i];

  const double data_norm = l2_norm(p1, f) + dirichlet_besov_norm(mesh, sys.lift) + w12_norm(p1, h);
  rep.apriori_ratio = data_norm > 0.0 ? w12_norm(p1, u) / data_norm : 0.0;
  return rep;
}

// ---------------------------------------------------------------------------

BoundaryTrace trace(const ComplexField& u, BoundaryLabel label, const BoundaryMeasure& mu) {
  if (u.mesh == nullptr) throw Error("trace of a field without a mesh");
  const Mesh& mesh = *u.mesh;
  BoundaryTrace t;
  t.nodes = mesh.boundary_nodes(label);
  for (int v : t.nodes) t.values.push_back(u.values[v]);
  if (t.nodes.empty()) return t;
  const BoundaryQuadrature q = boundary_quadrature(mesh, mu, label);
  const std::span<const Complex> s(u.values.data(), static_cast<std::size_t>(u.values.size()));
  t.norm = std::sqrt(std::max(0.0, boundary_product<Complex>(mesh, q, s, s).real()));
  return t;
}

double trace_ratio(const ComplexField& u, BoundaryLabel label, const BoundaryMeasure& mu) {
  const P1Matrices p1 = assemble_p1(*u.mesh);
  const double w = w12_norm(p1, u.values);
  return w > 0.0 ? trace(u, label, mu).norm / w : 0.0;
}

double trace_inequality_ratio(std::size_t samples, const Mesh& mesh, BoundaryLabel label, const BoundaryMeasure& mu,
                              std::uint64_t seed, const Mesh* field_space) {
  const P1Matrices p1 = assemble_p1(mesh);
  const BoundaryQuadrature q = boundary_quadrature(mesh, mu, label);
  const SparseComplex b = boundary_mass_matrix(mesh, q);
  const Mesh& space = field_space ? *field_space : mesh;
  std::optional<MeshLocator> locate;
  if (field_space) locate.emplace(*field_space);
  std::mt19937_64 rng(seed);
  std::normal_distribution<double> normal;
  double best = 0.0;
  Eigen::VectorXcd draw(static_cast<Eigen::Index>(space.vertices.size()));
  for (std::size_t s = 0; s < samples; ++s) {
    for (Eigen::Index i = 0; i < draw.size(); ++i) draw[i] = normal(rng);
    const Eigen::VectorXcd u = locate ? locate->transfer(ComplexField(space, draw), mesh).values : draw;
    const double w = w12_norm(p1, u);
    const double tr = std::sqrt(std::max(0.0, u.dot(b * u).real()));
    if (w > 0.0) best = std::max(best, tr / w);
  }
  return best;
}

double besov_norm(const std::function<Complex(Point)>& phi, const BoundaryMeasure& mu, const BesovOptions& options) {
  const double lo = (2.0 - options.d) / 2.0;
  const double hi = 1.0 + (2.0 - options.s) / 2.0;
  if (!(options.beta > lo && options.beta < hi)) {
    std::ostringstream msg;
    msg << "beta = " << options.beta << " outside the admissible window (" << lo << ", " << hi << ")";
    throw Error(msg.str());
  }
  if (mu.is_zero()) return 0.0;
  const double spacing = options.spacing > 0.0 ? options.spacing : mu.diameter() / 256.0;

  std::vector<Point> pts;
  std::vector<double> w;
  std::vector<Complex> val;
  for (const WeightedSegment& s : mu.segments()) {
    const double len = distance(s.a, s.b);
    const auto k = static_cast<std::size_t>(std::max(1.0, std::ceil(len / spacing)));
    for (std::size_t i = 0; i < k; ++i) {
      const Point p = lerp(s.a, s.b, (static_cast<double>(i) + 0.5) / static_cast<double>(k));
      pts.push_back(p);
      w.push_back(s.density * len / static_cast<double>(k));
      val.push_back(phi(p));
    }
  }
  double l2 = 0.0;
  for (std::size_t i = 0; i < pts.size(); ++i) l2 += w[i] * std::norm(val[i]);

  const int jmax = spacing < 1.0 ? static_cast<int>(std::ceil(std::log2(1.0 / spacing))) : 0;
  std::vector<double> radii;
  for (int j = 0; j <= jmax; ++j) radii.push_back(std::ldexp(1.0, -j));
  const std::vector<double> masses = kernels::omp::ball_mass_table(mu.segments(), pts, radii);
  const std::size_t nr = radii.size();

  // Per-point partial sums, then a serial reduction for a fixed summation order.
  std::vector<double> row(pts.size(), 0.0);
  const auto np = static_cast<std::ptrdiff_t>(pts.size());
#pragma omp parallel for schedule(dynamic, 16)
  for (std::ptrdiff_t a = 0; a < np; ++a) {
    const auto i = static_cast<std::size_t>(a);
    double acc = 0.0;
    for (std::size_t j = 0; j < nr; ++j) {
      const double r2 = radii[j] * radii[j];
      const double mi = masses[i * nr + j];
      double inner = 0.0;
      for (std::size_t k = 0; k < pts.size(); ++k) {
        if (k == i || distance_sq(pts[i], pts[k]) >= r2) continue;
        inner += w[k] * std::norm(val[i] - val[k]) / masses[k * nr + j];
      }
      acc += std::pow(2.0, static_cast<double>(j) * (options.beta - 1.0)) * w[i] * inner / mi;
    }
    row[i] = acc;
  }
  double semi = 0.0;
  for (double r : row) semi += r;
  return std::sqrt(l2) + std::sqrt(semi);
}

// ---------------------------------------------------------------------------

HarmonicExtender::HarmonicExtender(const Mesh& mesh, std::vector<int> nodes, ExtensionMode mode) : mesh_(&mesh) {
  std::sort(nodes.begin(), nodes.end());
  nodes.erase(std::unique(nodes.begin(), nodes.end()), nodes.end());
  if (nodes.empty()) throw Error("harmonic extension needs a nonempty boundary set");
  nodes_ = std::move(nodes);
  free_ = complement(mesh.vertices.size(), nodes_);
  const P1Matrices p1 = assemble_p1(mesh);
  const SparseReal a = mode == ExtensionMode::Bessel ? SparseReal(p1.stiffness + p1.mass) : p1.stiffness;
  coupling_ = submatrix(a, free_, nodes_);
  if (!free_.empty()) {
    solver_.compute(submatrix(a, free_, free_));
    if (solver_.info() != Eigen::Success) throw Error("harmonic extension: singular system");
  }
}

ComplexField HarmonicExtender::extend(const std::vector<Complex>& values) const {
  if (values.size() != nodes_.size()) throw Error("harmonic extension: one value per boundary node required");
  Eigen::VectorXcd u = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh_->vertices.size()));
  Eigen::VectorXcd fixed(static_cast<Eigen::Index>(values.size()));
  for (std::size_t i = 0; i < values.size(); ++i) {
    fixed[static_cast<Eigen::Index>(i)] = values[i];
    u[nodes_[i]] = values[i];
  }
  if (!free_.empty()) {
    const Eigen::VectorXcd x = solve_split(solver_, (-(coupling_.cast<Complex>() * fixed)).eval());
    for (std::size_t i = 0; i < free_.size(); ++i) u[free_[i]] = x[static_cast<Eigen::Index>(i)];
  }
  return ComplexField(*mesh_, std::move(u));
}

ComplexField harmonic_extension(const Mesh& mesh, BoundaryLabel label, const std::vector<Complex>& values,
                                ExtensionMode mode) {
  return HarmonicExtender(mesh, mesh.boundary_nodes(label), mode).extend(values);
}

ComplexField extension_to_holdall(const ComplexField& u, const HoldallMesh& holdall) {
  const Mesh& inner = holdall.inner;
  const Mesh& outer = holdall.mesh;
  if (static_cast<std::size_t>(u.values.size()) != inner.vertices.size() ||
      holdall.inner_to_outer.size() != inner.vertices.size() || holdall.region.size() != outer.triangles.size()) {
    throw Error("extension_to_holdall: field and hold-all meshes are incompatible");
  }
  std::vector<int> fixed;
  std::vector<Complex> values(outer.vertices.size(), Complex{});
  for (std::size_t i = 0; i < inner.vertices.size(); ++i) {
    const int o = holdall.inner_to_outer[i];
    if (o < 0 || idx(o) >= outer.vertices.size() || !(outer.vertices[idx(o)] == inner.vertices[i])) {
      throw Error("extension_to_holdall: field and hold-all meshes are incompatible");
    }
    fixed.push_back(o);
    values[idx(o)] = u.values[static_cast<Eigen::Index>(i)];
  }
  // Dirichlet-energy fill of the outer region with the Ω values held fixed.
  Mesh outside;
  outside.vertices = outer.vertices;
  for (std::size_t t = 0; t < outer.triangles.size(); ++t) {
    if (holdall.region[t] == 0) outside.triangles.push_back(outer.triangles[t]);
  }
  std::sort(fixed.begin(), fixed.end());
  std::vector<Complex> fixed_values;
  for (int o : fixed) fixed_values.push_back(values[idx(o)]);
  ComplexField filled = HarmonicExtender(outside, fixed, ExtensionMode::DirichletEnergy).extend(fixed_values);
  return ComplexField(outer, std::move(filled.values));
}

double poincare_constant(const Mesh& mesh) {
  const std::vector<int> dir = mesh.boundary_nodes(BoundaryLabel::Dirichlet);
  if (dir.empty()) throw Error("no Dirichlet data: Poincaré fails");
  const std::vector<int> free = complement(mesh.vertices.size(), dir);
  if (free.empty()) throw Error("no free nodes: every vertex is a Dirichlet node");
  const P1Matrices p1 = assemble_p1(mesh);
  const SparseReal k = submatrix(p1.stiffness, free, free);
  const SparseReal m = submatrix(p1.mass, free, free);
  Eigen::SimplicialLDLT<SparseReal> solver(k);
  if (solver.info() != Eigen::Success) throw Error("Poincaré: singular stiffness");

  Eigen::VectorXd x(static_cast<Eigen::Index>(free.size()));
  for (Eigen::Index i = 0; i < x.size(); ++i) x[i] = 1.0 + 0.01 * std::sin(static_cast<double>(i));
  double lambda = std::numeric_limits<double>::infinity();
  for (int it = 0; it < 1000; ++it) {
    Eigen::VectorXd y = solver.solve(m * x);
    const double mn = std::sqrt(y.dot(m * y));
    y /= mn;
    const double next = y.dot(k * y);
    x = std::move(y);
    const bool done = std::abs(next - lambda) <= 1e-12 * next;
    lambda = next;
    if (done) break;
  }
  return 1.0 / lambda;
}

Complex normal_derivative_pairing(const ComplexField& u, const Eigen::VectorXcd& laplacian_u, const ComplexField& v) {
  if (u.mesh == nullptr || u.mesh != v.mesh) throw Error("normal_derivative_pairing: fields on different meshes");
  if (laplacian_u.size() != u.values.size()) throw Error("normal_derivative_pairing: Laplacian size mismatch");
  const P1Matrices p1 = assemble_p1(*u.mesh);
  return v.values.dot(p1.mass.cast<Complex>() * laplacian_u + p1.stiffness.cast<Complex>() * u.values);
}

// ---------------------------------------------------------------------------

MeshLocator::MeshLocator(const Mesh& mesh) : mesh_(&mesh) {
  for (Point p : mesh.vertices) box_.extend(p);
  const double area = std::max(box_.width() * box_.height(), 1e-300);
  const double nt = static_cast<double>(std::max<std::size_t>(1, mesh.triangles.size()));
  cell_ = std::max(std::sqrt(area / nt) * 2.0, 1e-12 * std::max(1.0, box_.diagonal()));
  nx_ = static_cast<std::size_t>(box_.width() / cell_) + 1;
  ny_ = static_cast<std::size_t>(box_.height() / cell_) + 1;
  cells_.assign(nx_ * ny_, {});
  for (std::size_t t = 0; t < mesh.triangles.size(); ++t) {
    BBox tb;
    for (int v : mesh.triangles[t]) tb.extend(mesh.vertices[idx(v)]);
    const auto i0 = static_cast<std::size_t>((tb.lo.x - box_.lo.x) / cell_);
    const auto j0 = static_cast<std::size_t>((tb.lo.y - box_.lo.y) / cell_);
    const auto i1 = std::min(nx_ - 1, static_cast<std::size_t>((tb.hi.x - box_.lo.x) / cell_));
    const auto j1 = std::min(ny_ - 1, static_cast<std::size_t>((tb.hi.y - box_.lo.y) / cell_));
    for (std::size_t j = j0; j <= j1; ++j) {
      for (std::size_t i = i0; i <= i1; ++i) cells_[j * nx_ + i].push_back(static_cast<int>(t));
    }
  }
}

namespace {

std::array<double, 3> barycentric(const Mesh& mesh, int t, Point p) {
  const auto& tri = mesh.triangles[idx(t)];
  const Point a = mesh.vertices[idx(tri[0])], b = mesh.vertices[idx(tri[1])], c = mesh.vertices[idx(tri[2])];
  const double det = cross(b - a, c - a);
  const double l1 = cross(p - a, c - a) / det;
  const double l2 = cross(b - a, p - a) / det;
  return {1.0 - l1 - l2, l1, l2};
}

double triangle_distance(const Mesh& mesh, int t, Point p) {
  const auto l = barycentric(mesh, t, p);
  if (l[0] >= 0.0 && l[1] >= 0.0 && l[2] >= 0.0) return 0.0;
  const auto& tri = mesh.triangles[idx(t)];
  double d = std::numeric_limits<double>::infinity();
  for (int k = 0; k < 3; ++k) {
    d = std::min(d, point_segment_distance(p, mesh.vertices[idx(tri[static_cast<std::size_t>(k)])],
                                           mesh.vertices[idx(tri[static_cast<std::size_t>((k + 1) % 3)])]));
  }
  return d;
}

}  // namespace

int MeshLocator::find(Point p) const {
  const double fx = std::clamp((p.x - box_.lo.x) / cell_, 0.0, static_cast<double>(nx_ - 1));
  const double fy = std::clamp((p.y - box_.lo.y) / cell_, 0.0, static_cast<double>(ny_ - 1));
  const auto i = static_cast<std::size_t>(fx), j = static_cast<std::size_t>(fy);
  int best = -1;
  double dist = std::numeric_limits<double>::infinity();
  for (int t : cells_[j * nx_ + i]) {
    const double d = triangle_distance(*mesh_, t, p);
    if (d < dist) dist = d, best = t;
    if (d == 0.0) return t;
  }
  if (best >= 0 && dist <= 1e-9 * cell_) return best;
  // Outside every bucketed triangle: nearest triangle overall.
  for (std::size_t t = 0; t < mesh_->triangles.size(); ++t) {
    const double d = triangle_distance(*mesh_, static_cast<int>(t), p);
    if (d < dist) dist = d, best = static_cast<int>(t);
  }
  if (best < 0) throw Error("point location in an empty mesh");
  return best;
}

Complex MeshLocator::evaluate(const ComplexField& u, Point p) const {
  const int t = find(p);
  auto l = barycentric(*mesh_, t, p);
  double sum = 0.0;
  for (double& x : l) sum += (x = std::max(0.0, x));
  const auto& tri = mesh_->triangles[idx(t)];
  Complex out{};
  for (int k = 0; k < 3; ++k) out += (l[static_cast<std::size_t>(k)] / sum) * u.values[tri[static_cast<std::size_t>(k)]];
  return out;
}

ComplexField MeshLocator::transfer(const ComplexField& u, const Mesh& target) const {
  if (u.mesh != mesh_) throw Error("MeshLocator: field lives on a different mesh");
  return ComplexField::interpolate(target, [&](Point p) { return evaluate(u, p); });
}

}  // namespace fracshape
