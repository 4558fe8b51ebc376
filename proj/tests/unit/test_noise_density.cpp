#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "topoinc/error.hpp"
#include "topoinc/noise_density.hpp"
#include "topoinc/rng.hpp"

using namespace topoinc;

namespace {

constexpr double kPi = std::numbers::pi;

// Midpoint rule over a box; `h` is the cell size.
double box_integral(const std::function<double(const Point&)>& f, Point lo, Point hi, double h) {
  std::vector<Point> pts;
  const int nx = static_cast<int>(std::round((hi.x() - lo.x()) / h));
  const int ny = static_cast<int>(std::round((hi.y() - lo.y()) / h));
  double s = 0.0;
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) s += f(Point(lo.x() + (i + 0.5) * h, lo.y() + (j + 0.5) * h));
  }
  return s * h * h;
}

std::string code_of(const std::function<void()>& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  return "";
}

}  // namespace

TEST(Noise, PeakAndSymmetry) {
  const NoiseModel nm(0.05);
  EXPECT_DOUBLE_EQ(nm.pdf(Point::Zero()), 1.0 / (2 * kPi * 0.0025));
  EXPECT_DOUBLE_EQ(nm.peak(), 1.0 / (2 * kPi * 0.0025));
  EXPECT_LT(nm.pdf(Point(10.0, 0.0)), 1e-300);
  const Point n(0.031, -0.017);
  EXPECT_EQ(nm.pdf(n), nm.pdf(-n));
  EXPECT_DOUBLE_EQ(nm.pdf(n), nm.pdf_at_radius(n.norm()));
  EXPECT_EQ(code_of([] { NoiseModel bad(0.0); }), "invalid-argument");
}

TEST(Noise, RadiusOfLevelExamples) {
  const NoiseModel nm(0.05);
  EXPECT_EQ(radius_of_level(nm, nm.peak()), 0.0);
  const double r = radius_of_level(nm, 0.01);
  EXPECT_NEAR(r, 0.05 * std::sqrt(2 * std::log(nm.peak() / 0.01)), 1e-15);
  // Frozen from an independent evaluation of the closed form.
  EXPECT_NEAR(r, 0.2092696545929047, 1e-15);
  EXPECT_NEAR(radius_of_level_bisection([&](double x) { return nm.pdf_at_radius(x); }, 0.01), r,
              1e-10);
  EXPECT_EQ(code_of([&] { radius_of_level(nm, 100.0); }), "empty-superlevel-set");
  EXPECT_EQ(code_of([&] { radius_of_level(nm, 0.0); }), "invalid-argument");
}

TEST(Noise, RadiusBisectionAgreesOnRandomLevels) {
  Rng rng = make_rng(5, "radius");
  for (int k = 0; k < 20; ++k) {
    const NoiseModel nm(0.01 + 0.5 * uniform01(rng));
    const double lambda = nm.peak() * std::exp(-12.0 * uniform01(rng));
    const double closed = radius_of_level(nm, lambda);
    const double bis =
        radius_of_level_bisection([&](double x) { return nm.pdf_at_radius(x); }, lambda);
    EXPECT_NEAR(closed, bis, 1e-10);
  }
}

TEST(Noise, BisectionRejectsNonDecaying) {
  EXPECT_EQ(code_of([] { radius_of_level_bisection([](double) { return 1.0; }, 0.5); }),
            "unbounded-superlevel-set");
  EXPECT_EQ(code_of([] { radius_of_level_bisection([](double) { return 1.0; }, 2.0); }),
            "empty-superlevel-set");
}

TEST(ExtendedDensity, FarFieldAndSegmentMidpoint) {
  const NoiseModel nm(0.05);
  EXPECT_LT(extended_density(nm, make_dataset("two-moons"), Point(10, 10)), 1e-100);
  const DataGeneratingManifold line(
      "line", {CurveManifold::segment(0, Point(-1.0, 0.0), Point(1.0, 0.0))});
  const double expect = 1.0 / (2.0 * 0.05 * std::sqrt(2 * kPi));
  EXPECT_NEAR(extended_density(nm, line, Point::Zero()) / expect, 1.0, 1e-3);
  EXPECT_EQ(code_of([&] { extended_density(nm, line, Point::Zero(), 32); }), "invalid-argument");
}

TEST(ExtendedDensity, TwoMoonsIntegratesToOne) {
  const NoiseModel nm(0.05);
  const auto m = make_dataset("two-moons");
  const double total = box_integral([&](const Point& q) { return extended_density(nm, m, q); },
                                    Point(-2, -1), Point(3, 3), 0.01);
  EXPECT_NEAR(total, 1.0, 0.01);
}

TEST(ExtendedDensity, ClassIntegralsMatchPriors) {
  const NoiseModel nm(0.05);
  for (const auto& name : {"spirals", "circles"}) {
    const auto m = make_dataset(name);
    auto [lo, hi] = m.bounding_box();
    const Point pad(0.3, 0.3);
    for (int c = 0; c < m.num_classes(); ++c) {
      const double mass = box_integral(
          [&](const Point& q) { return extended_density_class(nm, m, c, q); }, lo - pad, hi + pad,
          0.01);
      EXPECT_NEAR(mass, m.priors()[static_cast<std::size_t>(c)], 0.01) << name << " " << c;
    }
  }
}

TEST(ExtendedDensity, BatchMatchesScalarAndDecomposes) {
  const NoiseModel nm(0.05);
  const auto m = make_dataset("spirals");
  std::vector<Point> q;
  Rng rng = make_rng(2, "q");
  for (int k = 0; k < 64; ++k) q.emplace_back(4 * uniform01(rng) - 2, 4 * uniform01(rng) - 2);
  const auto b = extended_density_batch(nm, m, q, kDefaultQuadPanels, 3);
  for (std::size_t k = 0; k < q.size(); ++k) {
    EXPECT_EQ(b[k], extended_density(nm, m, q[k]));
    double s = 0.0;
    for (int c = 0; c < 3; ++c) s += extended_density_class(nm, m, c, q[k]);
    EXPECT_NEAR(s, b[k], 1e-12 * std::max(1.0, b[k]));
  }
}

TEST(ExtendedDensity, SimpsonConverged) {
  const NoiseModel nm(0.05);
  const auto m = make_dataset("two-moons");
  const auto s = sample_noisy(m, 50, 0.1, 8);
  for (const auto& p : s) {
    const double a = extended_density(nm, m, p.point, 512);
    const double b = extended_density(nm, m, p.point, 1024);
    if (b > 1e-6) EXPECT_LT(std::abs(a - b) / b, 1e-6);
  }
}

TEST(Omega, FullCircleChordArc) {
  const DataGeneratingManifold circle(
      "circle", {CurveManifold::arc(0, Point::Zero(), 1.0, 0.0, 0.0, 2 * kPi)});
  // Arc of the unit circle inside B_0.2 of a circle point spans 4 asin(0.1).
  EXPECT_NEAR(omega_epsilon(circle, 0.2), 2.0 * std::asin(0.1) / kPi, 1e-8);
  EXPECT_NEAR(manifold_ball_mass(circle, Point(1, 0), 0.2), 2.0 * std::asin(0.1) / kPi, 1e-8);
}

TEST(Omega, SegmentEndpointHalfBall) {
  const auto m = make_dataset("segments");
  EXPECT_NEAR(omega_epsilon(m, 0.1), 0.5 * 0.1 / 1.0, 1e-8);
  EXPECT_NEAR(manifold_ball_mass(m, Point(0.0, -1.0), 0.1), 0.5 * 0.2, 1e-8);
}

TEST(Omega, ShrinksWithRadius) {
  const auto m = make_dataset("two-moons");
  double prev = 1.0;
  for (double eps : {0.4, 0.2, 0.1, 0.05, 0.01, 0.001}) {
    const double w = omega_epsilon(m, eps);
    EXPECT_LT(w, prev);
    prev = w;
  }
  EXPECT_LT(prev, 1e-3);
}

TEST(Omega, BallIntervalsOnCircle) {
  const auto c = CurveManifold::arc(0, Point::Zero(), 1.0, 0.0, 0.0, 2 * kPi);
  double len = 0.0;
  for (auto [a, b] : curve_ball_intervals(c, Point(1, 0), 0.2)) len += b - a;
  EXPECT_NEAR(len, 4.0 * std::asin(0.1), 1e-7);
}

TEST(ThresholdReport, SegmentsPreconditionHolds) {
  const NoiseModel nm(0.05);
  const auto r = theorem1_report(nm, make_dataset("segments"), 0.01);
  EXPECT_TRUE(r.precondition_holds);
  EXPECT_EQ(r.eps_lambda, r.delta_lambda);
  EXPECT_GT(r.lambda_star, 0.0);
  EXPECT_LE(r.lambda_star, r.lambda);
  EXPECT_GE(r.delta_star, r.delta_lambda);
  EXPECT_LT(r.delta_star, 0.3);
  EXPECT_NEAR(r.d_cw, 2.0, 1e-6);
  EXPECT_TRUE(r.floor_holds);
  EXPECT_TRUE(r.ceiling_holds);
  EXPECT_EQ(r.floor_probes, 512);
  EXPECT_GE(r.floor_min_density, r.lambda_star);
  EXPECT_LT(r.ceiling_max_density, r.lambda);
}

TEST(ThresholdReport, TwoMoonsReportConsistent) {
  const NoiseModel nm(0.05);
  const auto r = theorem1_report(nm, make_dataset("two-moons"), 0.01);
  EXPECT_EQ(r.precondition_holds, r.d_cw > 2 * r.delta_star);
  EXPECT_GE(r.delta_star, r.delta_lambda);
  EXPECT_TRUE(r.floor_holds);
  EXPECT_TRUE(r.ceiling_holds);
}

TEST(ThresholdReport, DegenerateAndEmpty) {
  const NoiseModel nm(0.05);
  const auto m = make_dataset("segments");
  EXPECT_EQ(code_of([&] { theorem1_report(nm, m, nm.peak()); }), "degenerate-threshold");
  EXPECT_EQ(code_of([&] { theorem1_report(nm, m, 100.0); }), "empty-superlevel-set");
}

TEST(ThresholdReport, OffNeighborhoodProbesAreFar) {
  const auto m = make_dataset("circles");
  const auto p = off_neighborhood_probes(m, 0.21, 256);
  EXPECT_EQ(p.size(), 256u);
  for (const auto& q : p) EXPECT_GT(nearest_point(m, q).distance, 0.21);
}

TEST(Monotonicity, RadialSegmentOnTwoMoons) {
  const NoiseModel nm(0.05);
  const auto p = monotonicity_probe(nm, make_dataset("two-moons"), Point(1.2, 0.0), 50);
  EXPECT_EQ(p.densities.size(), 51u);
  EXPECT_TRUE(p.nondecreasing);
  EXPECT_GT(p.densities.back(), p.densities.front());
}

TEST(Monotonicity, OnManifoldIsConstant) {
  const NoiseModel nm(0.05);
  const auto m = make_dataset("circles");
  const auto p = monotonicity_probe(nm, m, Point(0.0, 1.0), 10);
  for (double d : p.densities) EXPECT_NEAR(d, p.densities.front(), 1e-12 * d);
  EXPECT_TRUE(p.nondecreasing);
}

TEST(Monotonicity, MidwayBetweenCirclesReports) {
  const NoiseModel nm(0.05);
  const auto p = monotonicity_probe(nm, make_dataset("circles"), Point(0.75, 0.0), 50);
  EXPECT_EQ(p.densities.size(), 51u);
  EXPECT_EQ(code_of([&] { monotonicity_probe(nm, make_dataset("circles"), Point(5, 5), 5); }),
            "invalid-argument");
}
