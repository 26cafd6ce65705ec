#pragma once

#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "fracshape/admissibility.hpp"
#include "fracshape/helmholtz.hpp"

namespace fracshape {

/// J(v) = A ‖v‖²_{L2(Ω)} + B ‖∇v‖²_{L2(Ω)} + C ‖Tr v‖²_{L2(Γ, μ)} with Γ the
/// Robin-labeled part of ∂Ω, and an optional load for minimization.
struct EnergyFunctional {
  double A = 1.0, B = 1.0, C = 1.0;
  PolygonalDomain domain;
  BoundaryMeasure mu_robin;
  std::function<Complex(Point)> load;  ///< empty means zero

  /// Throws unless A, B, C >= 0.
  void validate() const;
};

/// A value of J, or +∞ for fields that are not P1 functions on Ω.
struct EnergyValue {
  bool infinite = false;
  double value = 0.0;
  double l2_sq = 0.0, gradient_sq = 0.0, trace_sq = 0.0;
};

/// Evaluates J on the field's own mesh when that mesh triangulates Ω;
/// otherwise returns the infinite branch.
EnergyValue energy_J(const EnergyFunctional& functional, const ComplexField& v);

struct Minimizer {
  ComplexField u;
  double value = 0.0;      ///< J(u)
  double objective = 0.0;  ///< J(u) − 2 Re⟨f, u⟩ = −J(u) at the minimizer
  double euler_lagrange_residual = 0.0;
};

/// Minimizes J(v) − 2 Re⟨f, v⟩ over P1 fields on `mesh`, i.e. solves
/// (A M + B K + C R) u = M f. Throws "functional not coercive" unless B > 0
/// and either A > 0 or C > 0 with positive Robin mass.
Minimizer minimize_J_with_load(const EnergyFunctional& functional, const Mesh& mesh);

struct MoscoRow {
  std::size_t index = 0;
  double min_value = 0.0;       ///< J_m(u_m)
  double minimizer_norm = 0.0;  ///< ‖u_m‖_{W12(Ω_m)}
  double recovery_value = 0.0;  ///< J_m(Ext u*) restricted to Ω_m
  double liminf_value = 0.0;    ///< J(Ext u_m) restricted to the proxy limit
  double min_gap = 0.0;         ///< |J_m(u_m) − J(u*)|
  double relative_min_gap = 0.0;  ///< min_gap / J(u*)
  double recovery_gap = 0.0;    ///< |J_m(Ext u*) − J(u*)| / J(u*)
  double liminf_gap = 0.0;      ///< J(Ext u_m) − J(u*); tends to 0 along the sequence
};

struct MoscoReport {
  std::vector<MoscoRow> rows;
  double proxy_min = 0.0;
  double proxy_norm = 0.0;
  double final_min_gap = 0.0;
  double final_recovery_gap = 0.0;
  double final_liminf_gap = 0.0;
  /// Condition (1) is only checked along the member minimizers.
  std::string scope = "liminf checked along the sequence of member minimizers only";
};

struct MoscoOptions {
  double A = 1.0, B = 1.0, C = 1.0;
  std::function<Complex(Point)> load;
  double h = 0.05;
  MeshOptions mesh;
};

/// Minimizers on every member and on the proxy limit, recovery values of the
/// extended proxy minimizer, and liminf proxies of the extended member minimizers.
MoscoReport mosco_experiment(std::span<const DomainWithMeasure> sequence, const DomainWithMeasure& proxy_limit,
                             const Polygon& holdall, const MoscoOptions& options);

}  // namespace fracshape
