#include <gtest/gtest.h>

#include <cmath>
#include <numbers>

#include "fracshape/geometry.hpp"
#include "support.hpp"

using namespace fracshape;
using fracshape::prop::Gen;

namespace {

const Polyline kUnitSegment({{0.0, 0.0}, {1.0, 0.0}});

PolygonalDomain robin(const Polygon& p) { return PolygonalDomain::uniform(p, BoundaryLabel::Robin); }

// Dense distance from z to a polygon boundary, independent of SegmentIndex.
double boundary_distance_brute(const Polygon& p, Point z) {
  double best = INFINITY;
  for (std::size_t i = 0; i < p.size(); ++i) {
    const auto [a, b] = p.edge(i);
    best = std::min(best, point_segment_distance(z, a, b));
  }
  return best;
}

}  // namespace

// ---------------------------------------------------------------------------
// Polygon basics

TEST(Polygon, RejectsClockwiseAndSelfIntersecting) {
  EXPECT_THROW(Polygon({{0, 0}, {0, 1}, {1, 1}, {1, 0}}), Error);
  EXPECT_THROW(Polygon({{0, 0}, {1, 1}, {1, 0}, {0, 1}}), Error);
  EXPECT_NO_THROW(Polygon({{0, 0}, {1, 0}, {1, 1}, {0, 1}}));
}

TEST(Polygon, UnitSquareMeasurements) {
  const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
  EXPECT_DOUBLE_EQ(sq.area(), 1.0);
  EXPECT_DOUBLE_EQ(sq.perimeter(), 4.0);
  EXPECT_DOUBLE_EQ(sq.diameter(), std::sqrt(2.0));
  EXPECT_TRUE(sq.contains({0.5, 0.5}));
  EXPECT_FALSE(sq.contains({1.0, 0.5}));
  EXPECT_TRUE(sq.contains_closed({1.0, 0.5}));
  EXPECT_TRUE(sq.on_boundary({1.0, 0.5}));
}

TEST(PolygonalDomain, DirichletEdgeMayNotTouchDesignRegion) {
  const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
  const Polygon design = Polygon::rectangle({0.5, 0}, {1, 1});
  using L = BoundaryLabel;
  EXPECT_THROW(PolygonalDomain(sq, {L::Neumann, L::Dirichlet, L::Neumann, L::Neumann}, design), Error);
  EXPECT_NO_THROW(PolygonalDomain(sq, {L::Neumann, L::Robin, L::Neumann, L::Dirichlet}, design));
  EXPECT_THROW(PolygonalDomain(sq, {L::Neumann, L::Robin, L::Neumann}), Error);
}

TEST(PolygonProperty, AreaIsTranslationInvariantAndScalesQuadratically) {
  Gen gen(11);
  for (int trial = 0; trial < 50; ++trial) {
    const Polygon p = gen.star({0, 0}, 0.3, 1.0, gen.integer(3, 30));
    const Point t = gen.point({-5, -5}, {5, 5});
    const double s = gen.uniform(0.2, 3.0);
    EXPECT_NEAR(p.translated(t).area(), p.area(), 1e-12 * (1 + p.area()));
    EXPECT_NEAR(p.scaled(s).area(), s * s * p.area(), 1e-12 * (1 + s * s * p.area()));
    EXPECT_NEAR(p.scaled(s).perimeter(), s * p.perimeter(), 1e-12 * (1 + s * p.perimeter()));
  }
}

TEST(Polyline, ArclengthIsCumulativeAndNondecreasing) {
  Gen gen(5);
  for (int trial = 0; trial < 20; ++trial) {
    const Polyline c = gen.monotone_polyline(gen.integer(2, 40), 0.5);
    double sum = 0.0;
    for (std::size_t i = 0; i + 1 < c.size(); ++i) {
      sum += distance(c.points()[i], c.points()[i + 1]);
      EXPECT_LE(c.arclength()[i], c.arclength()[i + 1]);
    }
    EXPECT_NEAR(c.length(), sum, 1e-12);
  }
}

// ---------------------------------------------------------------------------
// Hausdorff distance

TEST(Hausdorff, IdentityIsZero) {
  const PointSample a = sample_boundary(Polygon::rectangle({0, 0}, {1, 1}), 0.01);
  EXPECT_EQ(hausdorff_distance(a, a), 0.0);
}

TEST(Hausdorff, RigidTranslationOfSquareBoundary) {
  const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
  const PointSample a = sample_boundary(sq, 0.01);
  const PointSample b = sample_boundary(sq.translated({0.3, 0.0}), 0.01);
  EXPECT_NEAR(hausdorff_distance(a, b), 0.3, 2 * 0.01);
}

TEST(Hausdorff, EmptySetIsAnError) {
  const PointSample a({{0, 0}}, 0.1);
  const PointSample empty({}, 0.1);
  try {
    hausdorff_distance(a, empty);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "empty set");
  }
}

TEST(Hausdorff, SegmentVersusKochLevelOneMatchesBruteForce) {
  const double res = 1e-3;
  const PointSample a = sample_polyline(kUnitSegment, res);
  const PointSample b = sample_polyline(koch_prefractal(kUnitSegment, 1, std::numbers::pi / 3), res);
  const double oracle = std::max(prop::brute_directed(a.points, b.points), prop::brute_directed(b.points, a.points));
  EXPECT_DOUBLE_EQ(hausdorff_distance(a, b), oracle);
  EXPECT_NEAR(oracle, std::sqrt(3.0) / 6.0, 2 * res);
}

TEST(HausdorffProperty, MetricAxiomsOnRandomClouds) {
  Gen gen(21);
  for (int trial = 0; trial < 40; ++trial) {
    const PointSample a(gen.cloud(gen.integer(1, 60), {0, 0}, {1, 1}), 0.01);
    const PointSample b(gen.cloud(gen.integer(1, 60), {-0.5, 0}, {1, 2}), 0.01);
    const PointSample c(gen.cloud(gen.integer(1, 60), {0, -1}, {2, 1}), 0.01);
    const double ab = hausdorff_distance(a, b);
    EXPECT_GE(ab, 0.0);
    EXPECT_EQ(ab, hausdorff_distance(b, a));
    EXPECT_LE(hausdorff_distance(a, c), ab + hausdorff_distance(b, c) + 1e-12);
    EXPECT_DOUBLE_EQ(ab, std::max(prop::brute_directed(a.points, b.points), prop::brute_directed(b.points, a.points)));
  }
}

// ---------------------------------------------------------------------------
// Domain Hausdorff distance

TEST(DomainHausdorff, EqualDomainsGiveZero) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  EXPECT_EQ(domain_hausdorff_distance(sq, sq, Polygon::rectangle({-1, -1}, {2, 2}), 0.01), 0.0);
}

TEST(DomainHausdorff, HalfSquareSlab) {
  const double res = 1.0 / 256;
  const double d = domain_hausdorff_distance(robin(Polygon::rectangle({0, 0}, {1, 1})),
                                             robin(Polygon::rectangle({0, 0}, {1, 0.5})),
                                             Polygon::rectangle({-1, -1}, {2, 2}), res);
  EXPECT_NEAR(d, 0.5, 2 * res);
}

TEST(DomainHausdorff, EscapingDomainIsAnError) {
  try {
    domain_hausdorff_distance(robin(Polygon::rectangle({0, 0}, {3, 1})), robin(Polygon::rectangle({0, 0}, {1, 1})),
                              Polygon::rectangle({-1, -1}, {2, 2}), 0.01);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "domain escapes hold-all");
  }
}

TEST(DomainHausdorff, KochLevelsTwoAndThree) {
  // Level 3 only adds outward equilateral bumps of side 1/27 to level 2. The
  // farthest point of a bump from the level-3 exterior is its base midpoint, at
  // distance (side/2)·sin 60° from the two exposed sides.
  const double res = 1.0 / 1024;
  const double d = domain_hausdorff_distance(robin(koch_snowflake(2)), robin(koch_snowflake(3)),
                                             Polygon::rectangle({-0.7, -0.7}, {0.7, 0.7}), res);
  EXPECT_NEAR(d, std::sqrt(3.0) / 4.0 / 27.0, 2 * res);
}

// ---------------------------------------------------------------------------
// Fréchet distance

TEST(Frechet, IdenticalIsZeroAndParallelOffset) {
  EXPECT_EQ(frechet_distance(kUnitSegment, kUnitSegment), 0.0);
  const double delta = 0.37;
  EXPECT_DOUBLE_EQ(frechet_distance(kUnitSegment, Polyline({{0, delta}, {1, delta}})), delta);
}

TEST(Frechet, DegeneratePolylineIsAnError) {
  EXPECT_THROW(frechet_distance(Polyline({{0, 0}}), kUnitSegment), Error);
}

TEST(Frechet, SegmentVersusKochLevelOne) {
  const double spacing = 1e-3;
  const Polyline koch = koch_prefractal(kUnitSegment, 1, std::numbers::pi / 3).refined(spacing);
  EXPECT_NEAR(frechet_distance(kUnitSegment.refined(spacing), koch), std::sqrt(3.0) / 6.0, spacing);
}

TEST(FrechetProperty, SymmetricAndBoundsVertexHausdorff) {
  Gen gen(8);
  for (int trial = 0; trial < 40; ++trial) {
    const Polyline a = gen.monotone_polyline(gen.integer(2, 25), 0.4);
    const Polyline b = gen.monotone_polyline(gen.integer(2, 25), 0.4);
    const Polyline c = gen.monotone_polyline(gen.integer(2, 25), 0.4);
    const double ab = frechet_distance(a, b);
    EXPECT_EQ(ab, frechet_distance(b, a));
    EXPECT_EQ(frechet_distance(a, a), 0.0);
    EXPECT_LE(frechet_distance(a, c), ab + frechet_distance(b, c) + 1e-12);
    EXPECT_GE(ab + 1e-15, hausdorff_distance(PointSample(a.points(), 0.01), PointSample(b.points(), 0.01)));
  }
}

// ---------------------------------------------------------------------------
// Cigars and ε

TEST(Cigar, TinyCigarIsContained) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const Point x{0.4, 0.5}, y{0.6, 0.5};
  EXPECT_TRUE(cigar_contained(Polyline({x, y}), x, y, 1e-3, sq, 64));
}

TEST(Cigar, FatCigarEscapes) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const Point x{0.1, 0.5}, y{0.9, 0.5};
  EXPECT_FALSE(cigar_contained(Polyline({x, y}), x, y, 10.0, sq, 64));
}

TEST(Cigar, CoincidentEndpointsAreAnError) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const Point x{0.5, 0.5};
  try {
    cigar_contained(Polyline({x, x}), x, x, 0.1, sq, 8);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "coincident endpoints");
  }
}

TEST(Cigar, ProfileVanishesAtEndpoints) {
  const CigarProfile p = cigar_profile(Polyline({{0, 0}, {0.5, 0.3}, {1, 0}}), 33);
  EXPECT_EQ(p.lambda.front(), 0.0);
  EXPECT_NEAR(p.lambda.back(), 0.0, 1e-15);
  for (double l : p.lambda) EXPECT_GE(l, 0.0);
}

TEST(CigarProperty, MonotoneInEpsilon) {
  Gen gen(3);
  const PolygonalDomain dom = robin(gen.star({0, 0}, 0.6, 1.0, 12));
  for (int trial = 0; trial < 60; ++trial) {
    const Point x = gen.point({-0.4, -0.4}, {0.4, 0.4});
    const Point y = gen.point({-0.4, -0.4}, {0.4, 0.4});
    if (x == y) continue;
    const Polyline c({x, 0.5 * (x + y) + Point{gen.uniform(-0.1, 0.1), gen.uniform(-0.1, 0.1)}, y});
    const double eps = gen.uniform(0.01, 2.0);
    if (cigar_contained(c, x, y, eps, dom, 48)) {
      EXPECT_TRUE(cigar_contained(c, x, y, eps * gen.uniform(0.05, 1.0), dom, 48));
    }
  }
}

TEST(Epsilon, UnitSquareDominatesSegmentOracle) {
  // Oracle: for the same pair lattice, the largest grid ε passed by the straight
  // segment, with the cigar minimum evaluated on 4096 samples per pair.
  const Polygon sq = Polygon::rectangle({0, 0}, {1, 1});
  EpsilonOptions opt;
  opt.pair_grid = 16;
  opt.refine_evaluations = 0;
  const EpsilonEstimate est = estimate_epsilon(robin(sq), opt);
  const std::vector<double> grid = epsilon_grid(opt);

  std::vector<Point> pts;
  for (int j = 0; j < 16; ++j) {
    for (int i = 0; i < 16; ++i) pts.push_back({(i + 0.5) / 16, (j + 0.5) / 16});
  }
  double oracle = INFINITY;
  for (std::size_t a = 0; a < pts.size(); ++a) {
    for (std::size_t b = a + 1; b < pts.size(); ++b) {
      const Point x = pts[a], y = pts[b];
      const double xy = distance(x, y);
      double eps = opt.epsilon_max;
      for (int k = 1; k < 4096; ++k) {
        const Point z = lerp(x, y, k / 4096.0);
        eps = std::min(eps, boundary_distance_brute(sq, z) / (distance(x, z) * distance(y, z) / xy));
      }
      double snapped = 0.0;
      for (double g : grid) {
        if (g <= eps) snapped = g;
      }
      oracle = std::min(oracle, snapped);
    }
  }
  EXPECT_GT(est.value, 0.0);
  EXPECT_GE(est.value, oracle);
}

TEST(Epsilon, PathsBeatSegmentsOnPolygonalDisc) {
  const PolygonalDomain disc = robin(Polygon::regular({0, 0}, 1.0, 256));
  EpsilonOptions opt;
  opt.pair_grid = 8;
  opt.refine_evaluations = 0;
  opt.family = CurveFamily::Segment;
  const double seg = estimate_epsilon(disc, opt).value;
  opt.family = CurveFamily::GridShortestPath;
  opt.path_resolution = 128;
  const double path = estimate_epsilon(disc, opt).value;
  EXPECT_GT(path, seg);
}

TEST(EpsilonProperty, EstimateIsRecertifiedOnEverySampledPair) {
  Gen gen(17);
  for (int trial = 0; trial < 3; ++trial) {
    const PolygonalDomain dom = robin(gen.star({0, 0}, 0.5, 1.0, gen.integer(5, 10)));
    EpsilonOptions opt;
    opt.pair_grid = 5;
    opt.path_resolution = 64;
    opt.refine_evaluations = 100;
    const EpsilonEstimate est = estimate_epsilon(dom, opt);
    ASSERT_GT(est.value, 0.0);
    for (const PairCertificate& p : est.pairs) {
      EXPECT_TRUE(cigar_contained(p.curve, p.x, p.y, est.value, dom, opt.n_samples));
    }
  }
}

// ---------------------------------------------------------------------------
// Koch prefractals

TEST(Koch, LevelZeroIsTheBase) {
  const Polyline c = koch_prefractal(kUnitSegment, 0, std::numbers::pi / 3);
  EXPECT_EQ(c.points(), kUnitSegment.points());
}

TEST(Koch, LevelOneApex) {
  const Polyline c = koch_prefractal(kUnitSegment, 1, std::numbers::pi / 3);
  ASSERT_EQ(c.size(), 5u);
  EXPECT_NEAR(c.points()[2].x, 0.5, 1e-15);
  EXPECT_NEAR(c.points()[2].y, std::sqrt(3.0) / 6.0, 1e-15);
}

TEST(Koch, LevelThreeCountAndLength) {
  const Polyline c = koch_prefractal(kUnitSegment, 3, std::numbers::pi / 3);
  EXPECT_EQ(c.size(), 65u);
  EXPECT_NEAR(c.length(), 64.0 / 27.0, 1e-13);
}

TEST(Koch, SteepGeneratorOverlaps) {
  try {
    koch_prefractal(kUnitSegment, 3, 1.5);
    FAIL();
  } catch (const Error& e) {
    EXPECT_STREQ(e.what(), "generator overlaps");
  }
}

TEST(KochProperty, LengthScalesByFourThirdsPerLevel) {
  Gen gen(29);
  for (int trial = 0; trial < 10; ++trial) {
    const Point a = gen.point({-1, -1}, {1, 1});
    const Point b = a + Point{gen.uniform(0.5, 2.0), gen.uniform(-0.3, 0.3)};
    const Polyline base({a, b});
    for (int m = 0; m <= 4; ++m) {
      const Polyline c = koch_prefractal(base, m, std::numbers::pi / 3);
      EXPECT_NEAR(c.length(), std::pow(4.0 / 3.0, m) * base.length(), 1e-12 * c.length());
      EXPECT_EQ(c.size(), static_cast<std::size_t>(std::pow(4, m)) + 1);
    }
  }
}

// ---------------------------------------------------------------------------
// Characteristic functions

TEST(CharFn, EqualDomainsGiveZero) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  EXPECT_EQ(char_fn_distance(sq, sq, 1.0, 0.01), 0.0);
}

TEST(CharFn, HalfSquareSlab) {
  const double pitch = 1.0 / 256;
  const double d = char_fn_distance(robin(Polygon::rectangle({0, 0}, {1, 1})),
                                    robin(Polygon::rectangle({0, 0}, {1, 0.5})), 1.0, pitch);
  EXPECT_NEAR(d, 0.5, pitch * 4.0);
}

TEST(CharFn, KochAddedAreaDecaysByFourNinths) {
  const double pitch = 1.0 / 2048;
  std::vector<double> gaps;
  for (int m = 1; m <= 3; ++m) {
    gaps.push_back(char_fn_distance(robin(koch_snowflake(m)), robin(koch_snowflake(m + 1)), 1.0, pitch));
  }
  EXPECT_NEAR(gaps[1] / gaps[0], 4.0 / 9.0, 0.03);
  EXPECT_NEAR(gaps[2] / gaps[1], 4.0 / 9.0, 0.05);
}

// ---------------------------------------------------------------------------
// Compacts

TEST(Compacts, ConstantSequencePassesAtZero) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const std::vector<PolygonalDomain> seq(4, sq);
  const std::vector<Polygon> in{Polygon::rectangle({0.2, 0.2}, {0.8, 0.8})};
  const std::vector<Polygon> out{Polygon::rectangle({1.2, 0.2}, {1.5, 0.5})};
  const CompactsReport r = compacts_convergence_check(seq, sq, in, out);
  EXPECT_EQ(r.inside[0], std::optional<std::size_t>(0));
  EXPECT_EQ(r.outside[0], std::optional<std::size_t>(0));
  EXPECT_TRUE(r.all_pass());
}

TEST(Compacts, ShrinkingSquaresPassFromMFive) {
  std::vector<PolygonalDomain> seq;
  for (int m = 2; m <= 12; ++m) seq.push_back(robin(Polygon::rectangle({0, 0}, {1 - 1.0 / m, 1 - 1.0 / m})));
  const PolygonalDomain limit = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const std::vector<Polygon> in{Polygon::rectangle({0.1, 0.1}, {0.8, 0.8})};
  const CompactsReport r = compacts_convergence_check(seq, limit, in, {});
  ASSERT_TRUE(r.inside[0].has_value());
  EXPECT_EQ(*r.inside[0] + 2, 5u);
}

TEST(Compacts, InvalidProbeIsAnError) {
  const PolygonalDomain sq = robin(Polygon::rectangle({0, 0}, {1, 1}));
  const std::vector<PolygonalDomain> seq{sq};
  const std::vector<Polygon> bad{Polygon::rectangle({0.5, 0.5}, {1.5, 1.5})};
  EXPECT_THROW(compacts_convergence_check(seq, sq, bad, {}), Error);
  EXPECT_THROW(compacts_convergence_check(seq, sq, {}, bad), Error);
}

TEST(KochSequence, ConsecutiveHausdorffDecaysGeometrically) {
  const double res = 1.0 / 1024;
  const Polygon d = Polygon::rectangle({-0.7, -0.7}, {0.7, 0.7});
  std::vector<double> dist;
  for (int m = 1; m <= 3; ++m) dist.push_back(domain_hausdorff_distance(robin(koch_snowflake(m)), robin(koch_snowflake(m + 1)), d, res));
  EXPECT_LT(dist[1], 0.5 * dist[0]);
  EXPECT_LT(dist[2], 0.5 * dist[1] + 2 * res);
}
