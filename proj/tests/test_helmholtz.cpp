#include <gtest/gtest.h>

#include <Eigen/Dense>
#include <cmath>
#include <numbers>

#include "fracshape/helmholtz.hpp"
#include "support.hpp"

using namespace fracshape;
using fracshape::prop::Gen;
using fracshape::prop::StripSolution;
using fracshape::prop::strip_domain;

namespace {

const Complex kAlpha{1.0, -1.0};
const Polygon kUnitSquare = Polygon::rectangle({0, 0}, {1, 1});
const double kKochDim = std::log(4.0) / std::log(3.0);

// Every solve in this suite must satisfy the discrete energy identity.
void expect_galerkin(const SolveReport& r) {
  EXPECT_LE(r.energy_defect_re, 1e-10);
  EXPECT_LE(r.energy_defect_im, 1e-10);
  EXPECT_LE(r.linear_residual, kSolverTolerance);
}

HelmholtzData strip_data(const Mesh& mesh, double omega = 1.0) {
  HelmholtzData d(omega, {kAlpha});
  d.g = Eigen::VectorXcd::Ones(static_cast<Eigen::Index>(mesh.vertices.size()));
  return d;
}

double strip_error(const Mesh& mesh, const SolveReport& r, double omega = 1.0) {
  const P1Matrices p1 = assemble_p1(mesh);
  const ComplexField exact = ComplexField::interpolate(mesh, StripSolution(omega, kAlpha));
  return l2_norm(p1, r.solution.values - exact.values) / l2_norm(p1, exact.values);
}

// Two triangles (0,1,2) and (0,2,3) on the unit square; Robin on the right edge.
Mesh two_triangle_square() {
  Mesh m;
  m.vertices = {{0, 0}, {1, 0}, {1, 1}, {0, 1}};
  m.triangles = {{0, 1, 2}, {0, 2, 3}};
  m.boundary_edges = {{0, 1, BoundaryLabel::Neumann, 0},
                      {1, 2, BoundaryLabel::Robin, 1},
                      {2, 3, BoundaryLabel::Neumann, 2},
                      {3, 0, BoundaryLabel::Neumann, 3}};
  m.h = std::numbers::sqrt2;
  return m;
}

PolygonalDomain left_dirichlet_square(const Polygon& p) {
  return PolygonalDomain(p, {BoundaryLabel::Neumann, BoundaryLabel::Neumann, BoundaryLabel::Neumann,
                             BoundaryLabel::Dirichlet});
}

PolygonalDomain koch_one_side_dirichlet(int level) {
  const Polygon flake = koch_snowflake(level);
  std::vector<BoundaryLabel> labels(flake.size(), BoundaryLabel::Robin);
  const std::size_t side = flake.size() / 3;
  for (std::size_t k = 0; k < side; ++k) labels[k] = BoundaryLabel::Dirichlet;
  return PolygonalDomain(flake, labels);
}

}  // namespace

// ---------------------------------------------------------------------------
// Assembly

TEST(Assemble, TwoTriangleSquareMatchesHandComputedMatrix) {
  const Mesh m = two_triangle_square();
  const HelmholtzData data(1.0, {kAlpha});
  const LinearSystem sys = assemble(m, data, BoundaryMeasure::on_boundary(kUnitSquare));
  // Right-angle vertices are 1 and 3; the diagonal 0-2 carries no stiffness.
  const double K[4][4] = {{1, -0.5, 0, -0.5}, {-0.5, 1, -0.5, 0}, {0, -0.5, 1, -0.5}, {-0.5, 0, -0.5, 1}};
  const double M[4][4] = {{1.0 / 6, 1.0 / 24, 1.0 / 12, 1.0 / 24},
                          {1.0 / 24, 1.0 / 12, 1.0 / 24, 0},
                          {1.0 / 12, 1.0 / 24, 1.0 / 6, 1.0 / 24},
                          {1.0 / 24, 0, 1.0 / 24, 1.0 / 12}};
  // Robin edge 1-2 of length 1: α/6 [[2, 1], [1, 2]].
  Complex R[4][4] = {};
  R[1][1] = R[2][2] = kAlpha / 3.0;
  R[1][2] = R[2][1] = kAlpha / 6.0;
  const Eigen::MatrixXcd dense(sys.matrix);
  for (int i = 0; i < 4; ++i) {
    for (int j = 0; j < 4; ++j) {
      EXPECT_NEAR(std::abs(dense(i, j) - (K[i][j] - M[i][j] + R[i][j])), 0.0, 1e-15) << i << "," << j;
    }
  }
  EXPECT_EQ(sys.rhs.norm(), 0.0);
}

TEST(Assemble, ScalingDataScalesOnlyTheRightSide) {
  const Mesh mesh = triangulate(strip_domain(), 0.25);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  HelmholtzData d = strip_data(mesh);
  d.f = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(mesh.vertices.size()), Complex(0.3, 0.1));
  d.h = d.f;
  const LinearSystem a = assemble(mesh, d, mu);
  d.f *= 2.0;
  d.g *= 2.0;
  d.h *= 2.0;
  const LinearSystem b = assemble(mesh, d, mu);
  EXPECT_EQ((Eigen::MatrixXcd(a.matrix) - Eigen::MatrixXcd(b.matrix)).norm(), 0.0);
  EXPECT_NEAR((b.rhs - 2.0 * a.rhs).norm(), 0.0, 1e-15 * b.rhs.norm());
  EXPECT_NEAR((b.lift - 2.0 * a.lift).norm(), 0.0, 0.0);
}

TEST(Assemble, RejectsMissingRobinCarrierAndBadData) {
  const Mesh mesh = triangulate(strip_domain(), 0.25);
  const BoundaryMeasure left = BoundaryMeasure::uniform(Polyline({{0, 1}, {0, 0}}));
  EXPECT_THROW(assemble(mesh, strip_data(mesh), left), Error);
  HelmholtzData d(1.0, {kAlpha});
  d.f = Eigen::VectorXcd::Ones(3);
  EXPECT_THROW(assemble(mesh, d, BoundaryMeasure::on_boundary(strip_domain().outer())), Error);
}

TEST(HelmholtzData, EnforcesFrequencyAndAbsorptionSigns) {
  EXPECT_THROW(HelmholtzData(0.0, {kAlpha}), Error);
  EXPECT_THROW(HelmholtzData(1.0, {Complex(0.0, -1.0)}), Error);
  EXPECT_THROW(HelmholtzData(1.0, {Complex(1.0, 0.0)}), Error);
  EXPECT_THROW(HelmholtzData(1.0, {Complex(1.0, 1.0)}), Error);
  EXPECT_NO_THROW(HelmholtzData(1.0, {kAlpha}));
}

// ---------------------------------------------------------------------------
// Solves

TEST(Solve, StripMatchesClosedForm) {
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 64);
  const SolveReport r = solve_helmholtz(mesh, strip_data(mesh), BoundaryMeasure::on_boundary(strip_domain().outer()));
  expect_galerkin(r);
  EXPECT_LE(strip_error(mesh, r), 1e-3);
}

TEST(Solve, StripConvergesAtSecondOrder) {
  std::vector<double> errors;
  for (int n : {8, 16, 32}) {
    const Mesh mesh = triangulate(strip_domain(), 1.0 / n);
    const auto r = solve_helmholtz(mesh, strip_data(mesh), BoundaryMeasure::on_boundary(strip_domain().outer()));
    expect_galerkin(r);
    errors.push_back(strip_error(mesh, r));
  }
  for (std::size_t k = 1; k < errors.size(); ++k) {
    const double rate = std::log2(errors[k - 1] / errors[k]);
    EXPECT_NEAR(rate, 2.0, 0.2) << k;
  }
}

TEST(Solve, ZeroDataGivesZeroField) {
  const Mesh mesh = triangulate(strip_domain(), 0.125);
  const auto r = solve_helmholtz(mesh, HelmholtzData(1.0, {kAlpha}), BoundaryMeasure::on_boundary(strip_domain().outer()));
  EXPECT_EQ(r.solution.values.norm(), 0.0);
  EXPECT_EQ(r.acoustic_energy, 0.0);
  EXPECT_EQ(r.gradient_energy, 0.0);
  EXPECT_EQ(r.robin_trace_energy, 0.0);
  EXPECT_EQ(r.apriori_ratio, 0.0);
}

TEST(Solve, LiftedAndSuperpositionAgree) {
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 16);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  HelmholtzData d = strip_data(mesh, 2.0);
  d.f = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(mesh.vertices.size()), Complex(0.5, -0.25));
  d.h = d.f;
  const auto a = solve_helmholtz(mesh, d, mu, SolveMode::Lifted);
  const auto b = solve_helmholtz(mesh, d, mu, SolveMode::Superposition);
  expect_galerkin(a);
  expect_galerkin(b);
  EXPECT_LE((a.solution.values - b.solution.values).norm(), 1e-8 * a.solution.values.norm());
}

TEST(Solve, RepeatedSolvesAreBitIdentical) {
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 16);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  const auto a = solve_helmholtz(mesh, strip_data(mesh), mu);
  const auto b = solve_helmholtz(mesh, strip_data(mesh), mu);
  EXPECT_TRUE(a.solution.values == b.solution.values);
  EXPECT_EQ(a.energy_defect_re, b.energy_defect_re);
  EXPECT_EQ(a.apriori_ratio, b.apriori_ratio);
}

TEST(SolveProperty, LinearInTheData) {
  Gen gen(51);
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 12);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  auto random_data = [&] {
    HelmholtzData d(1.5, {kAlpha});
    d.f.resize(n);
    d.g.resize(n);
    d.h.resize(n);
    for (Eigen::Index i = 0; i < n; ++i) {
      d.f[i] = {gen.normal(), gen.normal()};
      d.g[i] = {gen.normal(), gen.normal()};
      d.h[i] = {gen.normal(), gen.normal()};
    }
    return d;
  };
  for (int trial = 0; trial < 4; ++trial) {
    const HelmholtzData d1 = random_data(), d2 = random_data();
    const Complex a{gen.normal(), gen.normal()}, b{gen.normal(), gen.normal()};
    HelmholtzData mix(1.5, {kAlpha});
    mix.f = a * d1.f + b * d2.f;
    mix.g = a * d1.g + b * d2.g;
    mix.h = a * d1.h + b * d2.h;
    const auto u1 = solve_helmholtz(mesh, d1, mu), u2 = solve_helmholtz(mesh, d2, mu), u = solve_helmholtz(mesh, mix, mu);
    expect_galerkin(u);
    const Eigen::VectorXcd combo = a * u1.solution.values + b * u2.solution.values;
    EXPECT_LE((u.solution.values - combo).norm(), 1e-9 * combo.norm()) << trial;
  }
}

TEST(SolveProperty, DirichletWorkFeedsRobinAbsorption) {
  Gen gen(52);
  for (int trial = 0; trial < 4; ++trial) {
    const Mesh mesh = triangulate(strip_domain(), gen.uniform(0.05, 0.2));
    const Complex alpha{gen.uniform(0.2, 3.0), -gen.uniform(0.2, 3.0)};
    HelmholtzData d(gen.uniform(0.5, 4.0), {alpha});
    d.g = Eigen::VectorXcd::Constant(static_cast<Eigen::Index>(mesh.vertices.size()), Complex(gen.normal(), gen.normal()));
    const auto r = solve_helmholtz(mesh, d, BoundaryMeasure::on_boundary(strip_domain().outer()));
    expect_galerkin(r);
    EXPECT_GT(r.robin_trace_energy, 0.0);
    EXPECT_LT(r.robin_absorption, 0.0);
    EXPECT_NEAR(r.robin_absorption, r.dirichlet_work.imag(), 1e-10 * std::abs(r.robin_absorption)) << trial;
    EXPECT_NEAR(r.robin_absorption, alpha.imag() * r.robin_trace_energy, 1e-12 * std::abs(r.robin_absorption));
  }
}

// ---------------------------------------------------------------------------
// Traces

TEST(Trace, ConstantAndLinearFields) {
  const Mesh mesh = triangulate(strip_domain(), 0.1);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  EXPECT_NEAR(trace(ComplexField::constant(mesh, 1.0), BoundaryLabel::Robin, mu).norm, 1.0, 1e-14);

  const PolygonalDomain bottom(kUnitSquare, {BoundaryLabel::Robin, BoundaryLabel::Neumann, BoundaryLabel::Neumann,
                                             BoundaryLabel::Neumann});
  const Mesh m2 = triangulate(bottom, 0.1);
  const auto tr = trace(ComplexField::interpolate(m2, [](Point p) { return Complex(p.x); }), BoundaryLabel::Robin,
                        BoundaryMeasure::on_boundary(kUnitSquare));
  EXPECT_NEAR(tr.norm * tr.norm, 1.0 / 3.0, 1e-15);
  for (std::size_t k = 0; k < tr.nodes.size(); ++k) {
    EXPECT_EQ(tr.values[k], Complex(m2.vertices[static_cast<std::size_t>(tr.nodes[k])].x));
  }
}

TEST(Trace, StripSolutionOnTheRobinEdge) {
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 32);
  const auto r = solve_helmholtz(mesh, strip_data(mesh), BoundaryMeasure::on_boundary(strip_domain().outer()));
  const auto tr = trace(r.solution, BoundaryLabel::Robin, BoundaryMeasure::on_boundary(strip_domain().outer()));
  const double exact = std::abs(StripSolution(1.0, kAlpha)({1.0, 0.0}));
  for (const Complex v : tr.values) EXPECT_NEAR(std::abs(v), exact, 1e-3);
}

TEST(TraceRatio, ConstantFieldIsRootMassOverRootArea) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.1);
  const double ratio =
      trace_ratio(ComplexField::constant(mesh, 1.0), BoundaryLabel::Robin, BoundaryMeasure::on_boundary(kUnitSquare));
  EXPECT_NEAR(ratio, std::sqrt(4.0) / std::sqrt(1.0), 1e-13);
}

TEST(TraceRatio, RefinementPreservesRatiosOfCoarseFields) {
  Gen gen(53);
  const PolygonalDomain omega = PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin);
  const auto mu = BoundaryMeasure::on_boundary(kUnitSquare);
  const Mesh coarse = triangulate(omega, 0.2);
  const Mesh fine = triangulate(omega, 0.1);
  const MeshLocator locate(coarse);
  for (int trial = 0; trial < 8; ++trial) {
    Eigen::VectorXcd v(static_cast<Eigen::Index>(coarse.vertices.size()));
    for (Eigen::Index i = 0; i < v.size(); ++i) v[i] = gen.normal();
    const ComplexField u(coarse, v);
    const double a = trace_ratio(u, BoundaryLabel::Robin, mu);
    const double b = trace_ratio(locate.transfer(u, fine), BoundaryLabel::Robin, mu);
    EXPECT_LT(std::abs(b - a) / a, 0.05) << trial;
  }
}

TEST(TraceRatio, SharedFieldSpaceIsStableUnderRefinement) {
  const PolygonalDomain omega = PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin);
  const auto mu = BoundaryMeasure::on_boundary(kUnitSquare);
  const Mesh space = triangulate(PolygonalDomain::uniform(Polygon::rectangle({-0.5, -0.5}, {1.5, 1.5}),
                                                          BoundaryLabel::Neumann),
                                 0.2);
  const double a = trace_inequality_ratio(32, triangulate(omega, 0.05), BoundaryLabel::Robin, mu, 11, &space);
  const double b = trace_inequality_ratio(32, triangulate(omega, 0.025), BoundaryLabel::Robin, mu, 11, &space);
  EXPECT_LT(std::abs(b - a) / a, 0.05) << a << " " << b;
}

TEST(TraceRatio, KochLevelsPlateau) {
  const Mesh space =
      triangulate(PolygonalDomain::uniform(Polygon::rectangle({-1, -1}, {1, 1}), BoundaryLabel::Neumann), 0.1);
  std::vector<double> ratios;
  for (int level = 2; level <= 4; ++level) {
    const Polygon flake = koch_snowflake(level);
    const Mesh mesh = triangulate(PolygonalDomain::uniform(flake, BoundaryLabel::Robin), 0.04);
    ratios.push_back(trace_inequality_ratio(64, mesh, BoundaryLabel::Robin, koch_snowflake_measure(level), 7, &space));
  }
  const auto [lo, hi] = std::minmax_element(ratios.begin(), ratios.end());
  EXPECT_LT(*hi / *lo, 1.25) << ratios[0] << " " << ratios[1] << " " << ratios[2];
}

TEST(TraceRatio, SeedDeterminesTheSweep) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.2);
  const auto mu = BoundaryMeasure::on_boundary(kUnitSquare);
  EXPECT_EQ(trace_inequality_ratio(16, mesh, BoundaryLabel::Robin, mu, 3),
            trace_inequality_ratio(16, mesh, BoundaryLabel::Robin, mu, 3));
}

// ---------------------------------------------------------------------------
// Besov norms

namespace {

// Midpoint double sum on the unit segment at `n` points with closed-form ball
// masses, over the same scales j = 0..jmax as the implementation.
double segment_besov_oracle(const std::function<double(double)>& phi, double beta, int n, int jmax) {
  const double w = 1.0 / n;
  auto mass = [](double x, double r) { return std::min(1.0, x + r) - std::max(0.0, x - r); };
  double l2 = 0.0, semi = 0.0;
  for (int i = 0; i < n; ++i) l2 += w * phi((i + 0.5) * w) * phi((i + 0.5) * w);
  for (int j = 0; j <= jmax; ++j) {
    const double r = std::ldexp(1.0, -j);
    double acc = 0.0;
    for (int i = 0; i < n; ++i) {
      const double x = (i + 0.5) * w;
      for (int k = 0; k < n; ++k) {
        const double y = (k + 0.5) * w;
        if (k == i || std::abs(x - y) >= r) continue;
        acc += w * w * std::pow(phi(x) - phi(y), 2) / (mass(x, r) * mass(y, r));
      }
    }
    semi += std::pow(2.0, j * (beta - 1.0)) * acc;
  }
  return std::sqrt(l2) + std::sqrt(semi);
}

}  // namespace

TEST(Besov, ConstantHasOnlyTheL2Part) {
  const BoundaryMeasure mu = koch_natural_measure(2);
  const BesovOptions opt{.beta = 1.0, .s = kKochDim, .d = kKochDim};
  EXPECT_NEAR(besov_norm([](Point) { return Complex(3.0, 4.0); }, mu, opt), 5.0 * std::sqrt(mu.total_mass()), 1e-12);
}

TEST(Besov, HomogeneousOfDegreeOne) {
  const BoundaryMeasure mu = koch_natural_measure(2);
  const BesovOptions opt{.beta = 1.0, .s = kKochDim, .d = kKochDim};
  auto phi = [](Point p) { return Complex(p.x * p.x, p.y); };
  const double a = besov_norm(phi, mu, opt);
  const double b = besov_norm([&](Point p) { return 2.0 * phi(p); }, mu, opt);
  EXPECT_NEAR(b, 2.0 * a, 1e-12 * b);
}

TEST(Besov, LinearTraceOnSegmentMatchesDenseOracle) {
  const BoundaryMeasure mu = BoundaryMeasure::uniform(Polyline({{0, 0}, {1, 0}}));
  const BesovOptions opt{.beta = 0.75, .s = 1.0, .d = 1.0, .spacing = 1.0 / 128};
  const double value = besov_norm([](Point p) { return Complex(p.x); }, mu, opt);
  const double oracle = segment_besov_oracle([](double x) { return x; }, 0.75, 512, 7);
  EXPECT_NEAR(value, oracle, 0.02 * oracle);
}

TEST(Besov, WindowIsEnforced) {
  const BoundaryMeasure mu = BoundaryMeasure::uniform(Polyline({{0, 0}, {1, 0}}));
  // For s = d = 1 the window is (0.5, 1.5).
  EXPECT_THROW(besov_norm([](Point) { return Complex(1.0); }, mu, {.beta = 0.5}), Error);
  EXPECT_THROW(besov_norm([](Point) { return Complex(1.0); }, mu, {.beta = 1.5}), Error);
  EXPECT_NO_THROW(besov_norm([](Point) { return Complex(1.0); }, mu, {.beta = 1.49}));
}

// ---------------------------------------------------------------------------
// Harmonic extensions

TEST(HarmonicExtension, ConstantsAndAffineFieldsAreReproduced) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Dirichlet), 0.1);
  const auto nodes = mesh.boundary_nodes(BoundaryLabel::Dirichlet);
  std::vector<Complex> c(nodes.size(), Complex(2.0, -1.0)), x;
  for (int v : nodes) x.emplace_back(mesh.vertices[static_cast<std::size_t>(v)].x);
  const auto ec = harmonic_extension(mesh, BoundaryLabel::Dirichlet, c, ExtensionMode::DirichletEnergy);
  const auto ex = harmonic_extension(mesh, BoundaryLabel::Dirichlet, x, ExtensionMode::DirichletEnergy);
  for (std::size_t v = 0; v < mesh.vertices.size(); ++v) {
    EXPECT_NEAR(std::abs(ec.values[static_cast<Eigen::Index>(v)] - Complex(2.0, -1.0)), 0.0, 1e-12);
    EXPECT_NEAR(std::abs(ex.values[static_cast<Eigen::Index>(v)] - mesh.vertices[v].x), 0.0, 1e-10);
  }
}

TEST(HarmonicExtension, BesselModeMatchesDenseSolve) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Dirichlet), 0.1);
  const auto nodes = mesh.boundary_nodes(BoundaryLabel::Dirichlet);
  const auto u = harmonic_extension(mesh, BoundaryLabel::Dirichlet, std::vector<Complex>(nodes.size(), 1.0),
                                    ExtensionMode::Bessel);
  // Dense oracle: minimize v^T (K + M) v with v = 1 on the boundary nodes.
  const P1Matrices p1 = assemble_p1(mesh);
  const Eigen::MatrixXd A = Eigen::MatrixXd(p1.stiffness) + Eigen::MatrixXd(p1.mass);
  std::vector<bool> fixed(mesh.vertices.size(), false);
  for (int v : nodes) fixed[static_cast<std::size_t>(v)] = true;
  std::vector<int> free;
  for (std::size_t v = 0; v < fixed.size(); ++v) {
    if (!fixed[v]) free.push_back(static_cast<int>(v));
  }
  const auto nf = static_cast<Eigen::Index>(free.size());
  Eigen::MatrixXd Aff(nf, nf);
  Eigen::VectorXd rhs = Eigen::VectorXd::Zero(nf);
  for (Eigen::Index i = 0; i < nf; ++i) {
    for (Eigen::Index j = 0; j < nf; ++j) Aff(i, j) = A(free[static_cast<std::size_t>(i)], free[static_cast<std::size_t>(j)]);
    for (int v : nodes) rhs[i] -= A(free[static_cast<std::size_t>(i)], v);
  }
  const Eigen::VectorXd oracle = Aff.fullPivLu().solve(rhs);
  double lowest = 1.0;
  std::size_t argmin = 0;
  for (Eigen::Index i = 0; i < nf; ++i) {
    const Complex val = u.values[free[static_cast<std::size_t>(i)]];
    EXPECT_NEAR(std::abs(val - oracle[i]), 0.0, 1e-8);
    EXPECT_GT(val.real(), 0.0);
    EXPECT_LT(val.real(), 1.0);
    if (val.real() < lowest) {
      lowest = val.real();
      argmin = static_cast<std::size_t>(free[static_cast<std::size_t>(i)]);
    }
  }
  // The minimum sits at the center up to one mesh size.
  EXPECT_LT(distance(mesh.vertices[argmin], {0.5, 0.5}), mesh.h);
}

TEST(HarmonicExtensionProperty, ProjectionAndLinearity) {
  Gen gen(54);
  const Polygon p = gen.star({0, 0}, 0.5, 1.0, 7);
  const Mesh mesh = triangulate(PolygonalDomain::uniform(p, BoundaryLabel::Robin), 0.1);
  const std::vector<int> nodes = mesh.boundary_nodes(BoundaryLabel::Robin);
  for (const auto mode : {ExtensionMode::DirichletEnergy, ExtensionMode::Bessel}) {
    const HarmonicExtender ext(mesh, nodes, mode);
    std::vector<Complex> a, b, mix;
    const Complex s{gen.normal(), gen.normal()};
    for (std::size_t k = 0; k < nodes.size(); ++k) {
      a.emplace_back(gen.normal(), gen.normal());
      b.emplace_back(gen.normal(), gen.normal());
      mix.push_back(a.back() + s * b.back());
    }
    const auto ua = ext.extend(a), ub = ext.extend(b), um = ext.extend(mix);
    for (std::size_t k = 0; k < nodes.size(); ++k) EXPECT_EQ(ua.values[nodes[k]], a[k]);
    EXPECT_LE((um.values - ua.values - s * ub.values).norm(), 1e-12 * um.values.norm());
  }
}

TEST(HarmonicExtension, EmptyLabelIsAnError) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.25);
  EXPECT_THROW(harmonic_extension(mesh, BoundaryLabel::Dirichlet, {}, ExtensionMode::DirichletEnergy), Error);
}

TEST(HoldallExtension, ConstantAndAffineFields) {
  const Polygon holdall = Polygon::rectangle({0, 0}, {2, 1});
  const HoldallMesh hm = triangulate_holdall(holdall, PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.1);
  const auto c = extension_to_holdall(ComplexField::constant(hm.inner, Complex(0.5, 2.0)), hm);
  for (Eigen::Index v = 0; v < c.values.size(); ++v) EXPECT_NEAR(std::abs(c.values[v] - Complex(0.5, 2.0)), 0.0, 1e-12);
  // u = x on the left half: the right half sees trace 1 on the interface and
  // is otherwise free, so the extension is the affine (constant) field 1.
  const auto x = extension_to_holdall(ComplexField::interpolate(hm.inner, [](Point p) { return Complex(p.x); }), hm);
  for (std::size_t v = 0; v < hm.mesh.vertices.size(); ++v) {
    const Point p = hm.mesh.vertices[v];
    EXPECT_NEAR(std::abs(x.values[static_cast<Eigen::Index>(v)] - std::min(p.x, 1.0)), 0.0, 1e-10);
  }
}

TEST(HoldallExtension, IncompatibleMeshIsAnError) {
  const Polygon holdall = Polygon::rectangle({-1, -1}, {2, 2});
  const HoldallMesh hm = triangulate_holdall(holdall, PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.2);
  const Mesh other = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Robin), 0.1);
  EXPECT_THROW(extension_to_holdall(ComplexField::constant(other, 1.0), hm), Error);
}

TEST(HoldallExtension, NormGrowthStableAcrossKochLevels) {
  const Polygon holdall = Polygon::rectangle({-1, -1}, {1, 1});
  std::vector<double> growth;
  for (int level = 2; level <= 4; ++level) {
    const HoldallMesh hm =
        triangulate_holdall(holdall, PolygonalDomain::uniform(koch_snowflake(level), BoundaryLabel::Robin), 0.04);
    const auto u = ComplexField::interpolate(hm.inner, [](Point p) { return Complex(std::cos(2 * p.x) * p.y + 1.0); });
    const auto e = extension_to_holdall(u, hm);
    growth.push_back(w12_norm(assemble_p1(hm.mesh), e.values) / w12_norm(assemble_p1(hm.inner), u.values));
  }
  const auto [lo, hi] = std::minmax_element(growth.begin(), growth.end());
  EXPECT_LT(*hi / *lo, 1.25);
  EXPECT_GE(*lo, 1.0);
}

// ---------------------------------------------------------------------------
// Poincaré constants

TEST(Poincare, UnitSquareLeftDirichletApproachesOneDimensionalValue) {
  const Mesh mesh = triangulate(left_dirichlet_square(kUnitSquare), 1.0 / 32);
  EXPECT_NEAR(poincare_constant(mesh), 4.0 / (std::numbers::pi * std::numbers::pi),
              0.02 * 4.0 / (std::numbers::pi * std::numbers::pi));
}

TEST(Poincare, ScalesQuadraticallyWithTheDomain) {
  const Mesh mesh = triangulate(left_dirichlet_square(kUnitSquare), 0.1);
  Mesh big = mesh;
  for (Point& p : big.vertices) p = 2.0 * p;
  big.h *= 2.0;
  EXPECT_NEAR(poincare_constant(big), 4.0 * poincare_constant(mesh), 1e-6 * poincare_constant(big));
}

TEST(Poincare, KochSnowflakeStableUnderRefinement) {
  const double a = poincare_constant(triangulate(koch_one_side_dirichlet(3), 0.05));
  const double b = poincare_constant(triangulate(koch_one_side_dirichlet(3), 0.025));
  EXPECT_GT(a, 0.0);
  EXPECT_LT(std::abs(a - b) / b, 0.10);
}

TEST(Poincare, NoDirichletDataIsAnError) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Neumann), 0.25);
  EXPECT_THROW(poincare_constant(mesh), Error);
}

TEST(PoincareProperty, RayleighQuotientsOfRandomFieldsRespectTheConstant) {
  Gen gen(55);
  const Mesh mesh = triangulate(left_dirichlet_square(kUnitSquare), 0.1);
  const double cp = poincare_constant(mesh);
  const P1Matrices p1 = assemble_p1(mesh);
  const auto dir = mesh.boundary_nodes(BoundaryLabel::Dirichlet);
  for (int trial = 0; trial < 20; ++trial) {
    Eigen::VectorXcd u(static_cast<Eigen::Index>(mesh.vertices.size()));
    for (Eigen::Index i = 0; i < u.size(); ++i) u[i] = {gen.normal(), gen.normal()};
    for (int v : dir) u[v] = 0.0;
    const double l2 = l2_norm(p1, u), grad = gradient_norm(p1, u);
    EXPECT_LE(l2 * l2, cp * grad * grad * (1 + 1e-8));
  }
}

// ---------------------------------------------------------------------------
// Normal derivative pairing

TEST(NormalDerivative, DivergenceTheoremOnTheSquare) {
  const Mesh mesh = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Neumann), 0.1);
  const auto one = ComplexField::constant(mesh, 1.0);
  const auto n = static_cast<Eigen::Index>(mesh.vertices.size());
  const auto x = ComplexField::interpolate(mesh, [](Point p) { return Complex(p.x); });
  EXPECT_NEAR(std::abs(normal_derivative_pairing(x, Eigen::VectorXcd::Zero(n), one)), 0.0, 1e-14);
  const auto x2 = ComplexField::interpolate(mesh, [](Point p) { return Complex(p.x * p.x); });
  EXPECT_NEAR(std::abs(normal_derivative_pairing(x2, Eigen::VectorXcd::Constant(n, 2.0), one) - 2.0), 0.0, 1e-13);
}

TEST(NormalDerivative, StripSolutionPairsWithTheRobinTerm) {
  const Mesh mesh = triangulate(strip_domain(), 1.0 / 16);
  const auto mu = BoundaryMeasure::on_boundary(strip_domain().outer());
  const auto r = solve_helmholtz(mesh, strip_data(mesh), mu);
  expect_galerkin(r);
  // Test field: u with its Dirichlet values removed, so it lies in V.
  Eigen::VectorXcd v = r.solution.values;
  for (int i : mesh.boundary_nodes(BoundaryLabel::Dirichlet)) v[i] = 0.0;
  const ComplexField test(mesh, v);
  const Complex pairing = normal_derivative_pairing(r.solution, -1.0 * r.solution.values, test);
  const auto q = boundary_quadrature(mesh, mu, BoundaryLabel::Robin);
  const Complex robin = -kAlpha * boundary_product<Complex>(mesh, q, std::span<const Complex>(v.data(), v.size()),
                                                            std::span<const Complex>(v.data(), v.size()));
  EXPECT_NEAR(std::abs(pairing - robin), 0.0, 1e-10 * std::abs(robin));
}

TEST(NormalDerivative, FieldsOnDifferentMeshesAreAnError) {
  const Mesh a = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Neumann), 0.25);
  const Mesh b = triangulate(PolygonalDomain::uniform(kUnitSquare, BoundaryLabel::Neumann), 0.5);
  EXPECT_THROW(normal_derivative_pairing(ComplexField::constant(a, 1.0), Eigen::VectorXcd::Zero(1),
                                         ComplexField::constant(b, 1.0)),
               Error);
}

// ---------------------------------------------------------------------------
// Point location

TEST(MeshLocator, ReproducesAffineFieldsAnywhere) {
  Gen gen(56);
  const Mesh mesh = triangulate(PolygonalDomain::uniform(koch_snowflake(2), BoundaryLabel::Robin), 0.05);
  const auto u = ComplexField::interpolate(mesh, [](Point p) { return Complex(2 * p.x - p.y, p.y); });
  const MeshLocator locate(mesh);
  const Polygon flake = koch_snowflake(2);
  int checked = 0;
  for (int trial = 0; trial < 400; ++trial) {
    const Point q = gen.point(flake.bbox().lo, flake.bbox().hi);
    if (!flake.contains_closed(q)) continue;
    ++checked;
    EXPECT_NEAR(std::abs(locate.evaluate(u, q) - Complex(2 * q.x - q.y, q.y)), 0.0, 1e-12);
  }
  EXPECT_GT(checked, 100);
}
