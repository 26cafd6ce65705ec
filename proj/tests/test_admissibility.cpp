#include <gtest/gtest.h>

#include <cmath>

#include "fracshape/admissibility.hpp"
#include "support.hpp"

using namespace fracshape;
using fracshape::prop::Gen;

namespace {

const double kKochDim = std::log(4.0) / std::log(3.0);

PolygonalDomain robin(const Polygon& p) { return PolygonalDomain::uniform(p, BoundaryLabel::Robin); }

AdmissibilityOptions fast_options() {
  AdmissibilityOptions o;
  o.epsilon.pair_grid = 8;
  o.epsilon.family = CurveFamily::Segment;
  o.epsilon.refine_evaluations = 0;
  o.grid.centers = 64;
  o.grid.radii = 16;
  return o;
}

ShapeClassParams square_params() {
  return {.holdall = Polygon::rectangle({-1, -1}, {2, 2}),
          .kernel = Polygon::rectangle({0.25, 0.25}, {0.75, 0.75}),
          .epsilon = 0.05,
          .s = 1.0,
          .d = 1.0,
          .lower_constant = 0.5,
          .upper_constant = 4.0};
}

const Polygon kUnitSquare = Polygon::rectangle({0, 0}, {1, 1});

DomainWithMeasure square_member(double side) {
  const Polygon p = Polygon::rectangle({0, 0}, {side, side});
  return {robin(p), BoundaryMeasure::on_boundary(p)};
}

DomainWithMeasure snowflake_member(int level) {
  return {robin(koch_snowflake(level)), koch_snowflake_measure(level)};
}

template <class F>
void expect_nonincreasing(const std::vector<ConvergenceRow>& rows, F column, const char* name) {
  for (std::size_t k = 1; k < rows.size(); ++k) {
    EXPECT_LE(column(rows[k]), column(rows[k - 1])) << name << " at index " << k;
  }
}

}  // namespace

// ---------------------------------------------------------------------------
// Class parameters

TEST(ShapeClassParams, ValidateRejectsBadExponentsAndKernel) {
  ShapeClassParams p = square_params();
  EXPECT_NO_THROW(p.validate());
  p.s = 2.0;
  EXPECT_THROW(p.validate(), Error);
  p = square_params();
  p.d = 1.5;
  EXPECT_THROW(p.validate(), Error);
  p = square_params();
  p.epsilon = 0.0;
  EXPECT_THROW(p.validate(), Error);
  p = square_params();
  p.kernel = Polygon::rectangle({2.5, 2.5}, {3, 3});
  EXPECT_THROW(p.validate(), Error);
}

// ---------------------------------------------------------------------------
// Shape admissibility

TEST(ShapeAdmissible, UnitSquareWithUnitDensityBoundary) {
  const auto rep =
      check_shape_admissible(robin(kUnitSquare), BoundaryMeasure::on_boundary(kUnitSquare), square_params(),
                             fast_options());
  EXPECT_TRUE(rep.contains_kernel);
  EXPECT_TRUE(rep.inside_holdall);
  EXPECT_TRUE(rep.epsilon_certified);
  EXPECT_TRUE(rep.lower_ok);
  EXPECT_TRUE(rep.upper_ok);
  EXPECT_TRUE(rep.verdict);
  // Segment values: one at corners seen from outside the cone, two on edges.
  EXPECT_GE(rep.lower_constant, 0.5);
  EXPECT_LE(rep.upper_constant, 4.0);
}

TEST(ShapeAdmissible, KernelOutsideFailsOnlyContainment) {
  ShapeClassParams p = square_params();
  p.holdall = Polygon::rectangle({-1, -1}, {4, 4});
  p.kernel = Polygon::rectangle({2, 2}, {3, 3});
  const auto rep = check_shape_admissible(robin(kUnitSquare), BoundaryMeasure::on_boundary(kUnitSquare), p,
                                          fast_options());
  EXPECT_FALSE(rep.contains_kernel);
  EXPECT_TRUE(rep.inside_holdall);
  EXPECT_FALSE(rep.verdict);
}

TEST(ShapeAdmissible, MeasureMustBeABoundaryVolume) {
  const BoundaryMeasure segment = BoundaryMeasure::uniform(Polyline({{0, 0}, {1, 0}}));
  EXPECT_THROW(check_shape_admissible(robin(kUnitSquare), segment, square_params(), fast_options()), Error);
  const Polygon other = Polygon::rectangle({0, 0}, {1, 0.5});
  EXPECT_THROW(require_boundary_volume(robin(kUnitSquare), BoundaryMeasure::on_boundary(other)), Error);
  EXPECT_NO_THROW(require_boundary_volume(robin(kUnitSquare), BoundaryMeasure::on_boundary(kUnitSquare)));
}

TEST(ShapeAdmissible, KochSnowflakeLevelThreeWithLevelFiveConstants) {
  SamplingGrid grid;
  grid.centers = 100;
  grid.radii = 20;
  const BoundaryMeasure mu5 = koch_snowflake_measure(5);
  const ShapeClassParams p{.holdall = Polygon::rectangle({-1, -1}, {1, 1}),
                           .kernel = Polygon::rectangle({-0.2, -0.2}, {0.2, 0.2}),
                           .epsilon = 0.05,
                           .s = kKochDim,
                           .d = kKochDim,
                           .lower_constant = 0.5 * verify_lower_ahlfors(mu5, kKochDim, true, grid).best_constant,
                           .upper_constant = 2.0 * verify_upper_ahlfors(mu5, kKochDim, grid).best_constant};
  AdmissibilityOptions o;
  o.epsilon.pair_grid = 6;
  o.epsilon.path_resolution = 128;
  o.epsilon.refine_evaluations = 0;
  o.grid = grid;
  const auto rep = check_shape_admissible(robin(koch_snowflake(3)), koch_snowflake_measure(3), p, o);
  EXPECT_TRUE(rep.verdict) << "eps " << rep.epsilon_estimate << " lower " << rep.lower_constant << " upper "
                           << rep.upper_constant;
}

TEST(ShapeAdmissibleProperty, LooseningConstantsNeverBreaksAVerdict) {
  Gen gen(31);
  const auto mu = BoundaryMeasure::on_boundary(kUnitSquare);
  const auto base = check_shape_admissible(robin(kUnitSquare), mu, square_params(), fast_options());
  ASSERT_TRUE(base.verdict);
  for (int trial = 0; trial < 6; ++trial) {
    ShapeClassParams p = square_params();
    p.epsilon *= gen.uniform(0.1, 1.0);
    p.lower_constant *= gen.uniform(0.0, 1.0);
    p.upper_constant *= gen.uniform(1.0, 10.0);
    p.d = gen.uniform(0.0, 1.0) < 0.5 ? p.d : gen.uniform(0.0, p.d);
    // A smaller d only lowers r^-d mass ratios for r <= 1.
    if (p.d != 1.0) p.upper_constant = std::max(p.upper_constant, 4.0);
    const auto rep = check_shape_admissible(robin(kUnitSquare), mu, p, fast_options());
    EXPECT_TRUE(rep.verdict) << trial;
  }
}

TEST(ShapeAdmissibleProperty, ReportsAreReproducible) {
  const auto mu = BoundaryMeasure::on_boundary(kUnitSquare);
  const auto a = check_shape_admissible(robin(kUnitSquare), mu, square_params(), fast_options());
  const auto b = check_shape_admissible(robin(kUnitSquare), mu, square_params(), fast_options());
  EXPECT_EQ(a.epsilon_estimate, b.epsilon_estimate);
  EXPECT_EQ(a.lower_constant, b.lower_constant);
  EXPECT_EQ(a.upper_constant, b.upper_constant);
}

// ---------------------------------------------------------------------------
// Jonsson admissibility

TEST(JonssonAdmissible, UnitSquareWithSlackConstants) {
  const JonssonParams j{4.0, 0.25, 0.5, 8.0};
  const auto rep = check_jonsson_admissible(robin(kUnitSquare), BoundaryMeasure::on_boundary(kUnitSquare),
                                            square_params(), j, fast_options());
  EXPECT_TRUE(rep.verdict);
  ASSERT_TRUE(rep.ds && rep.ld && rep.normalized);
  EXPECT_GE(rep.ds->best_constant, 1.0);
  EXPECT_LE(rep.ld->best_constant, 1.0);
}

TEST(JonssonAdmissible, DoublingConstantBelowOneIsImpossible) {
  const JonssonParams j{0.5, 0.25, 0.5, 8.0};
  const auto rep = check_jonsson_admissible(robin(kUnitSquare), BoundaryMeasure::on_boundary(kUnitSquare),
                                            square_params(), j, fast_options());
  EXPECT_FALSE(rep.verdict);
  EXPECT_FALSE(rep.ds->pass);
}

TEST(JonssonAdmissible, KochSnowflakeLevelThreeWithStableConstants) {
  SamplingGrid grid;
  grid.centers = 100;
  grid.radii = 20;
  // Constants measured at level 4 with slack, then applied at level 3.
  const BoundaryMeasure mu4 = koch_snowflake_measure(4);
  const JonssonParams j{2.0 * verify_Ds(mu4, kKochDim, grid).best_constant,
                        0.5 * verify_Ld(mu4, kKochDim, grid).best_constant,
                        0.5 * verify_normalized(mu4, grid).best_constant,
                        2.0 * *verify_normalized(mu4, grid).upper_constant};
  const ShapeClassParams p{.holdall = Polygon::rectangle({-1, -1}, {1, 1}),
                           .kernel = Polygon::rectangle({-0.2, -0.2}, {0.2, 0.2}),
                           .epsilon = 0.01,
                           .s = kKochDim,
                           .d = kKochDim};
  AdmissibilityOptions o;
  o.epsilon.pair_grid = 6;
  o.epsilon.path_resolution = 128;
  o.epsilon.refine_evaluations = 0;
  o.grid = grid;
  const auto rep = check_jonsson_admissible(robin(koch_snowflake(3)), koch_snowflake_measure(3), p, j, o);
  EXPECT_TRUE(rep.verdict) << "eps " << rep.epsilon_estimate << " ds " << rep.ds->best_constant << "/" << j.c_s << " ld " << rep.ld->best_constant << "/" << j.c_d << " n " << rep.normalized->best_constant << " " << *rep.normalized->upper_constant;
}

// ---------------------------------------------------------------------------
// Sequence diagnostics

TEST(SequenceDiagnostics, ConstantSequenceIsIdenticallyZero) {
  const std::vector<DomainWithMeasure> seq(3, square_member(1.0));
  const auto diag = sequence_diagnostics(seq, square_member(1.0), Polygon::rectangle({-1, -1}, {2, 2}), 1.0 / 128,
                                         Polygon::rectangle({0.25, 0.25}, {0.75, 0.75}));
  ASSERT_EQ(diag.rows.size(), 3u);
  for (const auto& row : diag.rows) {
    EXPECT_EQ(row.hausdorff_to_limit, 0.0);
    EXPECT_EQ(row.charfn_p1, 0.0);
    EXPECT_EQ(row.charfn_p2, 0.0);
    EXPECT_EQ(row.measure_gap, 0.0);
    EXPECT_EQ(row.carrier_hausdorff, 0.0);
  }
  for (const auto& first : diag.compacts.inside) EXPECT_EQ(first, std::optional<std::size_t>(0));
  for (const auto& first : diag.compacts.outside) EXPECT_EQ(first, std::optional<std::size_t>(0));
}

TEST(SequenceDiagnostics, ShrinkingSquaresConvergeInAllModes) {
  std::vector<DomainWithMeasure> seq;
  for (int m = 2; m <= 16; m *= 2) seq.push_back(square_member(1.0 - 1.0 / m));
  const auto diag = sequence_diagnostics(seq, square_member(1.0), Polygon::rectangle({-1, -1}, {2, 2}), 1.0 / 256,
                                         Polygon::rectangle({0.25, 0.25}, {0.45, 0.45}));
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.hausdorff_to_limit; }, "hausdorff");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.charfn_p1; }, "charfn p1");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.charfn_p2; }, "charfn p2");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.measure_gap; }, "measure gap");
  // Side deficit 1/m bounds the Hausdorff distance, up to two pixels.
  EXPECT_NEAR(diag.rows.back().hausdorff_to_limit, 1.0 / 16, 2.0 / 256);
  EXPECT_TRUE(diag.compacts.all_pass());
}

TEST(SequenceDiagnostics, KochLevelsApproachTheProxy) {
  std::vector<DomainWithMeasure> seq;
  for (int level = 1; level <= 4; ++level) seq.push_back(snowflake_member(level));
  const auto diag = sequence_diagnostics(seq, snowflake_member(5), Polygon::rectangle({-1, -1}, {1, 1}), 1.0 / 512,
                                         Polygon::rectangle({-0.2, -0.2}, {0.2, 0.2}));
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.hausdorff_to_limit; }, "hausdorff");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.charfn_p1; }, "charfn p1");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.measure_gap; }, "measure gap");
  expect_nonincreasing(diag.rows, [](const ConvergenceRow& r) { return r.carrier_hausdorff; }, "carrier");
  for (const auto& row : diag.rows) {
    EXPECT_GE(row.hausdorff_to_limit, 0.0);
    EXPECT_GE(row.charfn_p2, 0.0);
  }
  EXPECT_TRUE(diag.compacts.all_pass());
}

TEST(DefaultProbes, EightSquaresClearOfEveryBoundary) {
  const double pitch = 1.0 / 128;
  const Polygon holdall = Polygon::rectangle({-1, -1}, {2, 2});
  const auto [in, out] = default_probes(holdall, Polygon::rectangle({0.25, 0.25}, {0.75, 0.75}), kUnitSquare, pitch);
  ASSERT_EQ(in.size(), 4u);
  ASSERT_EQ(out.size(), 4u);
  for (const Polygon& q : in) {
    EXPECT_TRUE(Polygon::rectangle({0.25, 0.25}, {0.75, 0.75}).contains_polygon(q));
  }
  for (const Polygon& q : out) {
    EXPECT_TRUE(holdall.contains_polygon(q));
    for (const Point v : q.vertices()) {
      const bool far_x = v.x <= -2 * pitch || v.x >= 1 + 2 * pitch;
      const bool far_y = v.y <= -2 * pitch || v.y >= 1 + 2 * pitch;
      EXPECT_TRUE(far_x || far_y);
    }
  }
}
