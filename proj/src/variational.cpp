#include "fracshape/variational.hpp"

#include <cmath>
#include <memory>

namespace fracshape {

void EnergyFunctional::validate() const {
  if (!(A >= 0.0 && B >= 0.0 && C >= 0.0)) throw Error("energy weights A, B, C must be nonnegative");
}

namespace {

struct Forms {
  P1Matrices p1;
  SparseComplex robin;  ///< boundary mass on Robin edges (empty when there are none)
  double robin_mass = 0.0;
};

Forms forms(const EnergyFunctional& functional, const Mesh& mesh) {
  Forms f;
  f.p1 = assemble_p1(mesh);
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  f.robin.resize(n, n);
  if (mesh.has_label(BoundaryLabel::Robin)) {
    const BoundaryQuadrature q = boundary_quadrature(mesh, functional.mu_robin, BoundaryLabel::Robin);
    f.robin = boundary_mass_matrix(mesh, q);
    f.robin_mass = q.total;
  }
  return f;
}

EnergyValue evaluate(const EnergyFunctional& functional, const Forms& f, const Eigen::VectorXcd& v) {
  EnergyValue e;
  e.l2_sq = std::max(0.0, v.dot(f.p1.mass * v).real());
  e.gradient_sq = std::max(0.0, v.dot(f.p1.stiffness * v).real());
  e.trace_sq = std::max(0.0, v.dot(f.robin * v).real());
  e.value = functional.A * e.l2_sq + functional.B * e.gradient_sq + functional.C * e.trace_sq;
  return e;
}

}  // namespace

EnergyValue energy_J(const EnergyFunctional& functional, const ComplexField& v) {
  functional.validate();
  if (v.mesh == nullptr) return {.infinite = true};
  try {
    check_mesh(*v.mesh, functional.domain.outer());
  } catch (const Error&) {
    return {.infinite = true};
  }
  return evaluate(functional, forms(functional, *v.mesh), v.values);
}

Minimizer minimize_J_with_load(const EnergyFunctional& functional, const Mesh& mesh) {
  functional.validate();
  const Forms f = forms(functional, mesh);
  const bool coercive = functional.B > 0.0 && (functional.A > 0.0 || (functional.C > 0.0 && f.robin_mass > 0.0));
  if (!coercive) throw Error("functional not coercive");

  const SparseReal q = functional.A * f.p1.mass + functional.B * f.p1.stiffness +
                       SparseReal(functional.C * f.robin.real());
  Eigen::VectorXcd load = Eigen::VectorXcd::Zero(static_cast<Eigen::Index>(mesh.vertices.size()));
  if (functional.load) load = ComplexField::interpolate(mesh, functional.load).values;
  const Eigen::VectorXcd rhs = f.p1.mass.cast<Complex>() * load;

  Eigen::SimplicialLDLT<SparseReal> solver(q);
  if (solver.info() != Eigen::Success) throw Error("functional not coercive");
  Eigen::VectorXcd u(rhs.size());
  u.real() = solver.solve(rhs.real().eval());
  u.imag() = solver.solve(rhs.imag().eval());

  Minimizer m;
  const double rn = rhs.norm();
  const Eigen::VectorXcd r = q.cast<Complex>() * u - rhs;
  m.euler_lagrange_residual = rn > 0.0 ? r.norm() / rn : r.norm();
  m.u = ComplexField(mesh, std::move(u));
  m.value = evaluate(functional, f, m.u.values).value;
  m.objective = m.value - 2.0 * m.u.values.dot(rhs).real();
  return m;
}

MoscoReport mosco_experiment(std::span<const DomainWithMeasure> sequence, const DomainWithMeasure& proxy_limit,
                             const Polygon& holdall, const MoscoOptions& options) {
  auto functional = [&](const DomainWithMeasure& dm) {
    EnergyFunctional f{options.A, options.B, options.C, dm.domain, dm.measure, options.load};
    f.validate();
    return f;
  };
  const std::size_t n = sequence.size();
  // Meshes are held by pointer so fields keep valid mesh references.
  std::vector<std::unique_ptr<HoldallMesh>> meshes(n);
  std::vector<Minimizer> minima(n);
  std::vector<std::string> errors(n);
  const auto count = static_cast<std::ptrdiff_t>(n);
#pragma omp parallel for schedule(dynamic, 1)
  for (std::ptrdiff_t k = 0; k < count; ++k) {
    const auto m = static_cast<std::size_t>(k);
    try {
      meshes[m] = std::make_unique<HoldallMesh>(
          triangulate_holdall(holdall, sequence[m].domain, options.h, options.mesh));
      minima[m] = minimize_J_with_load(functional(sequence[m]), meshes[m]->inner);
    } catch (const std::exception& e) {
      errors[m] = e.what();
    }
  }
  for (const std::string& e : errors) {
    if (!e.empty()) throw Error("mosco_experiment: " + e);
  }

  const HoldallMesh proxy_mesh = triangulate_holdall(holdall, proxy_limit.domain, options.h, options.mesh);
  const EnergyFunctional proxy_f = functional(proxy_limit);
  const Minimizer star = minimize_J_with_load(proxy_f, proxy_mesh.inner);
  const ComplexField ext_star = extension_to_holdall(star.u, proxy_mesh);
  const MeshLocator proxy_locator(proxy_mesh.mesh);

  MoscoReport rep;
  rep.proxy_min = star.value;
  rep.proxy_norm = w12_norm(assemble_p1(proxy_mesh.inner), star.u.values);
  for (std::size_t m = 0; m < n; ++m) {
    const EnergyFunctional fm = functional(sequence[m]);
    MoscoRow row;
    row.index = m;
    row.min_value = minima[m].value;
    row.minimizer_norm = w12_norm(assemble_p1(meshes[m]->inner), minima[m].u.values);
    row.recovery_value = energy_J(fm, proxy_locator.transfer(ext_star, meshes[m]->inner)).value;
    const ComplexField ext_m = extension_to_holdall(minima[m].u, *meshes[m]);
    row.liminf_value = energy_J(proxy_f, MeshLocator(meshes[m]->mesh).transfer(ext_m, proxy_mesh.inner)).value;
    row.min_gap = std::abs(row.min_value - star.value);
    row.relative_min_gap = star.value > 0.0 ? row.min_gap / star.value : 0.0;
    row.recovery_gap = star.value > 0.0 ? std::abs(row.recovery_value - star.value) / star.value : 0.0;
    row.liminf_gap = row.liminf_value - star.value;
    rep.rows.push_back(row);
  }
  if (!rep.rows.empty()) {
    rep.final_min_gap = rep.rows.back().min_gap;
    rep.final_recovery_gap = rep.rows.back().recovery_gap;
    rep.final_liminf_gap = rep.rows.back().liminf_gap;
  }
  return rep;
}

}  // namespace fracshape
