#pragma once

#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Sparse>

#include "fracshape/boundary_measure.hpp"
#include "fracshape/mesh.hpp"

namespace fracshape {

using SparseReal = Eigen::SparseMatrix<double>;
using SparseComplex = Eigen::SparseMatrix<Complex>;

/// Nodal P1 coefficients on a mesh. The mesh is referenced, not owned, and
/// must outlive the field.
struct ComplexField {
  const Mesh* mesh = nullptr;
  Eigen::VectorXcd values;

  ComplexField() = default;
  /// Throws unless values.size() equals the vertex count.
  ComplexField(const Mesh& m, Eigen::VectorXcd v);
  static ComplexField constant(const Mesh& m, Complex c);
  static ComplexField interpolate(const Mesh& m, const std::function<Complex(Point)>& fn);
};

/// P1 stiffness and consistent mass matrices.
struct P1Matrices {
  SparseReal stiffness;
  SparseReal mass;
};

P1Matrices assemble_p1(const Mesh& mesh);

/// Boundary mass matrix of the quadrature's edges. `edge_weight`, when given,
/// scales each entry of q.edges (e.g. by α).
SparseComplex boundary_mass_matrix(const Mesh& mesh, const BoundaryQuadrature& q,
                                   const std::vector<Complex>& edge_weight = {});

double l2_norm(const P1Matrices& m, const Eigen::VectorXcd& u);
double gradient_norm(const P1Matrices& m, const Eigen::VectorXcd& u);
double w12_norm(const P1Matrices& m, const Eigen::VectorXcd& u);

// ---------------------------------------------------------------------------

/// Frequency, Robin coefficient and nodal data of the mixed problem
///   Δu + ω²u = f,  u = g on Dirichlet,  ∂u/∂n = 0 on Neumann,  ∂u/∂n + α u = h on Robin.
class HelmholtzData {
 public:
  /// `alpha` holds one value per polygon edge, or a single value used on every
  /// Robin edge. Throws unless ω > 0 and every α has Re > 0 and Im < 0.
  HelmholtzData(double omega, std::vector<Complex> alpha);

  double omega() const { return omega_; }
  Complex alpha(std::size_t parent_edge) const;
  const std::vector<Complex>& alpha_values() const { return alpha_; }

  /// Nodal source, Dirichlet datum (read on Dirichlet nodes only) and Robin
  /// datum. Empty vectors mean zero.
  Eigen::VectorXcd f, g, h;

 private:
  double omega_;
  std::vector<Complex> alpha_;
};

/// Full system before Dirichlet elimination, plus the reduced system on the
/// free nodes.
struct LinearSystem {
  SparseComplex matrix;  ///< K − ω²M + R_α over all nodes
  Eigen::VectorXcd rhs;  ///< −M f + R h over all nodes
  std::vector<int> dirichlet;
  std::vector<int> free;
  Eigen::VectorXcd lift;  ///< g on Dirichlet nodes, 0 elsewhere
  SparseComplex reduced;
  Eigen::VectorXcd reduced_rhs;
};

/// Throws "carrier mismatch" (from boundary_quadrature) if μ_Γ misses a Robin
/// edge, and when the data length differs from the vertex count.
LinearSystem assemble(const Mesh& mesh, const HelmholtzData& data, const BoundaryMeasure& mu_robin);

enum class SolveMode {
  Lifted,         ///< one solve with the nodal Dirichlet lift
  Superposition,  ///< Re(α)-harmonic lift of g first, then the shifted problem in V
};

struct SolveReport {
  ComplexField solution;
  double linear_residual = 0.0;
  /// Relative defect of a(u, v) = ℓ(v) at v = u − lift, real and imaginary parts.
  double energy_defect_re = 0.0;
  double energy_defect_im = 0.0;
  /// ‖u‖_{W12} / (‖f‖_{L2} + ‖g‖_{B} + ‖h‖_{W12}); 0 for zero data.
  double apriori_ratio = 0.0;
  double acoustic_energy = 0.0;     ///< ∫|u|²
  double gradient_energy = 0.0;     ///< ∫|∇u|²
  double robin_trace_energy = 0.0;  ///< ∫_Γ |Tr u|² dμ
  /// Σ_e Im(α_e) ∫_e |Tr u|² dμ over Robin edges.
  double robin_absorption = 0.0;
  /// Σ over Dirichlet nodes of conj(g_i) (A u)_i.
  Complex dirichlet_work{0.0, 0.0};

  double energy_defect() const { return std::max(energy_defect_re, energy_defect_im); }
};

inline constexpr double kSolverTolerance = 1e-10;

/// Sparse LU solve. Throws "discrete resonance or invalid data" if the
/// factorization fails or the residual stays above kSolverTolerance.
SolveReport solve_helmholtz(const Mesh& mesh, const HelmholtzData& data, const BoundaryMeasure& mu_robin,
                            SolveMode mode = SolveMode::Lifted);

// ---------------------------------------------------------------------------

struct BoundaryTrace {
  std::vector<int> nodes;  ///< sorted vertex ids on the labeled edges
  std::vector<Complex> values;
  double norm = 0.0;  ///< ‖Tr u‖_{L2(μ)}
};

BoundaryTrace trace(const ComplexField& u, BoundaryLabel label, const BoundaryMeasure& mu);

/// max over `samples` fields with i.i.d. standard normal nodal values of
/// ‖Tr u‖_{L2(μ)} / ‖u‖_{W12}. With `field_space`, the normal values live on
/// that mesh and are interpolated onto `mesh`, so ratios on different meshes
/// compare the same random fields; it must cover `mesh`.
double trace_inequality_ratio(std::size_t samples, const Mesh& mesh, BoundaryLabel label, const BoundaryMeasure& mu,
                              std::uint64_t seed = 1, const Mesh* field_space = nullptr);

/// Ratio for one given field.
double trace_ratio(const ComplexField& u, BoundaryLabel label, const BoundaryMeasure& mu);

struct BesovOptions {
  double beta = 1.0;
  double s = 1.0;  ///< exponents of the measure, used for the validity window
  double d = 1.0;
  double spacing = 0.0;  ///< quadrature spacing; 0 picks diameter / 256
};

/// ‖φ‖_{L2(μ)} + (Σ_j 2^{j(β−1)} ∬_{|x−y|<2^−j} |φ(x)−φ(y)|² / (μ(B(x,2^−j)) μ(B(y,2^−j))) dμ dμ)^{1/2}
/// by midpoint quadrature on pieces of at most `spacing`, j = 0..⌈log2(1/spacing)⌉.
/// Throws when β is outside ((2−d)/2, 1 + (2−s)/2).
double besov_norm(const std::function<Complex(Point)>& phi, const BoundaryMeasure& mu, const BesovOptions& options = {});

enum class ExtensionMode { DirichletEnergy, Bessel };

/// Minimizer of ∫|∇v|² (or ∫|v|² + |∇v|²) with prescribed values on `nodes`.
/// One factorization serves every right side.
class HarmonicExtender {
 public:
  HarmonicExtender(const Mesh& mesh, std::vector<int> nodes, ExtensionMode mode);
  ComplexField extend(const std::vector<Complex>& values) const;
  const std::vector<int>& nodes() const { return nodes_; }

 private:
  const Mesh* mesh_;
  std::vector<int> nodes_;
  std::vector<int> free_;
  SparseReal coupling_;  ///< free rows, fixed columns
  Eigen::SimplicialLDLT<SparseReal> solver_;
};

/// Extension of the trace on the nodes of `label` edges. Throws on an empty set.
ComplexField harmonic_extension(const Mesh& mesh, BoundaryLabel label, const std::vector<Complex>& values,
                                ExtensionMode mode);

/// Keeps u on Ω and fills D minus Ω with the Dirichlet-energy extension of the
/// ∂Ω trace. `u` must live on holdall.inner.
ComplexField extension_to_holdall(const ComplexField& u, const HoldallMesh& holdall);

/// 1 / λ_min of K x = λ M x on fields vanishing on Dirichlet nodes.
/// Throws "no Dirichlet data: Poincaré fails" without Dirichlet edges.
double poincare_constant(const Mesh& mesh);

/// ∫ conj(v) Δu + ∫ ∇conj(v)·∇u with Δu given as nodal values.
Complex normal_derivative_pairing(const ComplexField& u, const Eigen::VectorXcd& laplacian_u, const ComplexField& v);

// ---------------------------------------------------------------------------

/// Point location in a mesh with barycentric evaluation of P1 fields. Points
/// outside the mesh by rounding use the nearest triangle, clamped.
class MeshLocator {
 public:
  explicit MeshLocator(const Mesh& mesh);
  Complex evaluate(const ComplexField& u, Point p) const;
  /// P1 interpolant of u on another mesh.
  ComplexField transfer(const ComplexField& u, const Mesh& target) const;

 private:
  int find(Point p) const;
  const Mesh* mesh_;
  BBox box_;
  double cell_ = 1.0;
  std::size_t nx_ = 1, ny_ = 1;
  std::vector<std::vector<int>> cells_;
};

}  // namespace fracshape
