#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "oracles.hpp"
#include "topoinc/error.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/rng.hpp"

using namespace topoinc;

namespace {

constexpr double kPi = std::numbers::pi;

const std::vector<std::string> kPaperSets = {"two-moons", "spirals", "circles"};

void expect_point(const Point& a, const Point& b, double tol) {
  EXPECT_NEAR(a.x(), b.x(), tol);
  EXPECT_NEAR(a.y(), b.y(), tol);
}

}  // namespace

TEST(Dataset, UnknownNameThrows) {
  try {
    make_dataset("three-moons");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "unknown-dataset");
  }
}

TEST(Dataset, NamesAndPriors) {
  for (const auto& name : dataset_names()) {
    const auto m = make_dataset(name);
    double s = 0.0;
    for (int i = 0; i < m.num_classes(); ++i) {
      EXPECT_EQ(m.curve(i).label(), i);
      s += m.priors()[static_cast<std::size_t>(i)];
    }
    EXPECT_NEAR(s, 1.0, 1e-12);
    EXPECT_GT(class_wise_distance(m), 0.0);
  }
}

TEST(Dataset, TwoMoonsEndpoints) {
  const auto m = make_dataset("two-moons");
  expect_point(m.curve(0).position(0.0), Point(1.0, 0.0), 1e-15);
  // Offset -1/2 (see the literal-table test below).
  expect_point(m.curve(1).position(0.0), Point(0.0, 0.5), 1e-15);
  expect_point(m.curve(1).position(kPi / 2), Point(1.0, -0.5), 1e-15);
}

TEST(Dataset, LiteralMoonOffsetIntersects) {
  // With the +1/2 offset the two arcs cross, so the classes would not be disjoint.
  auto lower = [](double t) { return Point(1.0 - std::cos(t), 1.5 - std::sin(t)); };
  double best = 1e9;
  for (int a = 0; a <= 2000; ++a) {
    for (int b = 0; b <= 2000; ++b) {
      const double ta = kPi * a / 2000;
      const double tb = kPi * b / 2000;
      best = std::min(best, (Point(std::cos(ta), std::sin(ta)) - lower(tb)).norm());
    }
  }
  EXPECT_LT(best, 1e-2);
}

TEST(Dataset, SpiralStart) {
  const auto m = make_dataset("spirals");
  expect_point(m.curve(0).position(0.0), Point(1.0 / 3.0, 0.0), 1e-15);
  EXPECT_NEAR(m.curve(0).param_hi(), std::log(15.0 / std::sqrt(2.0) + 1.0), 1e-15);
  // Second coordinate follows sin, matching the other two arms.
  const double t = 0.7;
  EXPECT_NEAR(m.curve(0).position(t).y(), std::exp(t) * std::sin(t) / 3.0, 1e-15);
}

TEST(Dataset, ClassWiseDistances) {
  EXPECT_NEAR(class_wise_distance(make_dataset("circles")), 0.5, 1e-6);
  EXPECT_NEAR(class_wise_distance(make_dataset("segments")), 2.0, 1e-6);
  // 10^4 x 10^4 parameter-grid oracle: 0.50000001234 (attained at (1,0)-(1,-0.5)).
  EXPECT_NEAR(class_wise_distance(make_dataset("two-moons")), 0.5, 1e-6);
}

TEST(Dataset, SingleClassDistanceThrows) {
  const DataGeneratingManifold m("one", {CurveManifold::segment(0, Point(0, 0), Point(1, 0))});
  EXPECT_THROW(class_wise_distance(m), Error);
}

TEST(Curve, ConstantSpeed) {
  for (const auto& name : {"two-moons", "circles"}) {
    const auto m = make_dataset(name);
    for (const auto& c : m.curves()) {
      const double speed = c.velocity(c.param_lo()).norm();
      for (int k = 0; k <= 100; ++k) {
        const double u = c.param_lo() + (c.param_hi() - c.param_lo()) * k / 100.0;
        EXPECT_NEAR(c.velocity(u).norm(), speed, 1e-12);
      }
    }
  }
  const auto tm = make_dataset("two-moons");
  EXPECT_NEAR(tm.curve(0).velocity(0.3).norm(), 1.0, 1e-12);
  EXPECT_NEAR(tm.curve(1).velocity(0.3).norm(), 1.0, 1e-12);
  const auto ci = make_dataset("circles");
  EXPECT_NEAR(ci.curve(0).velocity(0.3).norm(), 1.0, 1e-12);
  EXPECT_NEAR(ci.curve(1).velocity(0.3).norm(), 0.5, 1e-12);
}

TEST(Curve, VelocityMatchesFiniteDifference) {
  for (const auto& name : dataset_names()) {
    const auto ds = make_dataset(name);
    for (const auto& c : ds.curves()) {
      const double u = 0.5 * (c.param_lo() + c.param_hi());
      const double h = 1e-6;
      const Point fd = (c.position(u + h) - c.position(u - h)) / (2 * h);
      EXPECT_LT((fd - c.velocity(u)).norm(), 1e-7 * std::max(1.0, fd.norm()));
    }
  }
}

TEST(Curve, NormalIsUnitAndOrthogonal) {
  for (const auto& name : dataset_names()) {
    const auto ds = make_dataset(name);
    for (const auto& c : ds.curves()) {
      for (int k = 0; k <= 20; ++k) {
        const double u = c.param_lo() + (c.param_hi() - c.param_lo()) * k / 20.0;
        const Point n = c.normal(u);
        EXPECT_NEAR(n.norm(), 1.0, 1e-12);
        EXPECT_NEAR(n.dot(c.velocity(u)), 0.0, 1e-12 * c.velocity(u).norm());
      }
    }
  }
}

TEST(Curve, ArcLengthMatchesQuadrature) {
  for (const auto& name : dataset_names()) {
    const auto ds = make_dataset(name);
    for (const auto& c : ds.curves()) {
      const double lo = c.param_lo();
      const double hi = c.param_hi();
      EXPECT_NEAR(c.arc_length(), oracle::arc_length(c, lo, hi, 200000), 1e-8);
      const double mid = lo + 0.37 * (hi - lo);
      EXPECT_NEAR(c.arc_length_between(lo, mid), oracle::arc_length(c, lo, mid, 200000), 1e-8);
    }
  }
  EXPECT_NEAR(make_dataset("spirals").curve(1).arc_length(), 5.0, 1e-12);
}

TEST(Curve, ParamAtFractionInvertsArcLength) {
  for (const auto& name : dataset_names()) {
    const auto ds = make_dataset(name);
    for (const auto& c : ds.curves()) {
      for (double f : {0.0, 0.1, 0.25, 0.5, 0.9, 1.0}) {
        const double u = c.param_at_fraction(f);
        EXPECT_NEAR(c.arc_length_between(c.param_lo(), u) / c.arc_length(), f, 1e-12);
      }
    }
  }
}

TEST(Curve, ClosedFlag) {
  EXPECT_TRUE(make_dataset("circles").curve(0).closed());
  EXPECT_FALSE(make_dataset("two-moons").curve(0).closed());
  EXPECT_FALSE(make_dataset("segments").curve(1).closed());
}

TEST(Sampling, TwoMoonsOnUnitArc) {
  const auto s = sample_uniform(make_dataset("two-moons"), 1000, 11);
  ASSERT_EQ(s.size(), 2000u);
  for (const auto& p : s) {
    if (p.label == 0) EXPECT_LT(std::abs(p.point.norm() - 1.0), 1e-9);
  }
}

TEST(Sampling, CirclesInnerRadius) {
  double sum = 0.0;
  int n = 0;
  for (std::uint64_t seed = 0; seed < 50; ++seed) {
    for (const auto& p : sample_uniform(make_dataset("circles"), 4, seed)) {
      if (p.label != 1) continue;
      EXPECT_NEAR(p.point.norm(), 0.5, 1e-12);
      sum += p.point.norm();
      ++n;
    }
  }
  const double mean = sum / n;
  EXPECT_GE(mean, 0.45);
  EXPECT_LE(mean, 0.55);
}

TEST(Sampling, SpiralArcLengthIsUniformKs) {
  const auto m = make_dataset("spirals");
  const auto s = sample_uniform(m, 100000, 3);
  std::vector<double> v;
  for (const auto& p : s) {
    if (p.label == 0) v.push_back(std::sqrt(2.0) * (std::exp(p.param) - 1.0));
  }
  std::sort(v.begin(), v.end());
  const double n = static_cast<double>(v.size());
  double ks = 0.0;
  for (std::size_t i = 0; i < v.size(); ++i) {
    const double cdf = v[i] / 15.0;
    ks = std::max({ks, std::abs(cdf - i / n), std::abs(cdf - (i + 1) / n)});
  }
  EXPECT_LT(ks, 0.01);
}

TEST(Sampling, HistogramWithinMultinomialBounds) {
  const auto m = make_dataset("two-moons");
  const int n = 20000;
  const int bins = 20;
  const auto s = sample_uniform(m, n, 5);
  std::vector<int> h(bins, 0);
  for (const auto& p : s) {
    if (p.label != 1) continue;
    h[std::min(bins - 1, static_cast<int>(p.param / kPi * bins))]++;
  }
  const double e = static_cast<double>(n) / bins;
  const double sd = std::sqrt(n * (1.0 / bins) * (1.0 - 1.0 / bins));
  for (int c : h) EXPECT_LE(std::abs(c - e), 3.0 * sd + 1.0);
}

TEST(Sampling, DeterministicAndSeedSensitive) {
  const auto m = make_dataset("spirals");
  const auto a = sample_noisy(m, 50, 0.05, 9);
  const auto b = sample_noisy(m, 50, 0.05, 9);
  const auto c = sample_noisy(m, 50, 0.05, 10);
  ASSERT_EQ(a.size(), b.size());
  bool differs = false;
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].point, b[i].point);
    differs |= a[i].point != c[i].point;
  }
  EXPECT_TRUE(differs);
}

TEST(Sampling, NoiseStatistics) {
  const auto m = make_dataset("segments");
  const auto clean = sample_uniform(m, 20000, 4);
  const auto noisy = sample_noisy(m, 20000, 0.05, 4);
  double sx = 0.0;
  double sxx = 0.0;
  for (std::size_t i = 0; i < clean.size(); ++i) {
    EXPECT_EQ(clean[i].param, noisy[i].param);
    const double d = noisy[i].point.y() - clean[i].point.y();
    sx += d;
    sxx += d * d;
  }
  const double n = static_cast<double>(clean.size());
  EXPECT_NEAR(sx / n, 0.0, 4 * 0.05 / std::sqrt(n));
  EXPECT_NEAR(std::sqrt(sxx / n), 0.05, 0.002);
}

TEST(Sampling, InvalidCountThrows) {
  EXPECT_THROW(sample_uniform(make_dataset("circles"), 0, 1), Error);
}

TEST(Perturb, RadialExamples) {
  const auto tm = make_dataset("two-moons");
  LabeledSample s0{Point(1.0, 0.0), 0, 0.0};
  const auto p = perturb_normal(tm, {s0}, 0.2, +1);
  expect_point(p[0].perturbed, Point(1.2, 0.0), 1e-15);
  expect_point(p[0].source, Point(1.0, 0.0), 0.0);

  const auto ci = make_dataset("circles");
  LabeledSample s1{ci.curve(1).position(kPi / 2), 1, kPi / 2};
  expect_point(s1.point, Point(0.0, 0.5), 1e-15);
  expect_point(perturb_normal(ci, {s1}, 0.2, -1)[0].perturbed, Point(0.0, 0.3), 1e-15);
}

TEST(Perturb, ZeroOffsetIsIdentity) {
  const auto m = make_dataset("spirals");
  const auto s = sample_uniform(m, 10, 2);
  for (int sign : {-1, 1}) {
    const auto p = perturb_normal(m, s, 0.0, sign);
    for (std::size_t i = 0; i < s.size(); ++i) EXPECT_EQ(p[i].perturbed, s[i].point);
  }
}

TEST(Perturb, MissingParameterThrows) {
  LabeledSample s{Point(1.0, 0.0), 0};
  EXPECT_THROW(perturb_normal(make_dataset("two-moons"), {s}, 0.2, 1), Error);
}

TEST(Nearest, ExamplesAndTies) {
  const auto tm = make_dataset("two-moons");
  const auto np = nearest_point_on_curve(tm.curve(0), Point(2.0, 0.0));
  expect_point(np.point, Point(1.0, 0.0), 1e-9);
  EXPECT_NEAR(np.distance, 1.0, 1e-12);

  const auto c = nearest_point(make_dataset("circles"), Point(0.0, 0.0));
  EXPECT_NEAR(c.distance, 0.5, 1e-12);
  EXPECT_EQ(c.label, 1);
  EXPECT_NEAR(c.param, 0.0, 1e-12);
}

TEST(Nearest, OnManifoldPointsRecovered) {
  for (const auto& name : dataset_names()) {
    const auto m = make_dataset(name);
    Rng rng = make_rng(17, name);
    for (int k = 0; k < 1000; ++k) {
      const auto& c = m.curve(static_cast<int>(rng() % m.curves().size()));
      const double u = c.param_lo() + (c.param_hi() - c.param_lo()) * uniform01(rng);
      const auto np = nearest_point(m, c.position(u));
      EXPECT_LT(np.distance, 1e-9);
      EXPECT_LT((np.point - c.position(u)).norm(), 1e-9);
    }
  }
}

TEST(Nearest, MatchesBruteForceGrid) {
  // 10^6 samples per curve; grid distance error is below 1e-9 at this density.
  for (const auto& name : dataset_names()) {
    const auto m = make_dataset(name);
    auto [lo, hi] = m.bounding_box();
    Rng rng = make_rng(23, name);
    for (int k = 0; k < 60; ++k) {
      const Point q(lo.x() - 0.5 + (hi.x() - lo.x() + 1.0) * uniform01(rng),
                    lo.y() - 0.5 + (hi.y() - lo.y() + 1.0) * uniform01(rng));
      EXPECT_NEAR(nearest_point(m, q).distance, oracle::brute_distance(m, q, 1000000), 1e-6);
    }
  }
}

TEST(Nearest, SmallPerturbationRecoversSource) {
  for (const auto& name : dataset_names()) {
    const auto m = make_dataset(name);
    const auto s = sample_uniform(m, 200, 31);
    for (int sign : {-1, 1}) {
      for (const auto& p : perturb_normal(m, s, 0.05, sign)) {
        const auto np = nearest_point(m, p.perturbed);
        EXPECT_LT((np.point - p.source).norm(), 1e-6) << name;
        EXPECT_EQ(np.label, p.label);
      }
    }
  }
}

TEST(Manifold, InvalidPriorsThrow) {
  std::vector<CurveManifold> c = {CurveManifold::segment(0, Point(0, 0), Point(1, 0)),
                                  CurveManifold::segment(1, Point(0, 1), Point(1, 1))};
  EXPECT_THROW(DataGeneratingManifold("bad", c, {0.6, 0.6}), Error);
  EXPECT_THROW(DataGeneratingManifold("bad", c, {1.0, 0.0}), Error);
  std::vector<CurveManifold> dup = {CurveManifold::segment(0, Point(0, 0), Point(1, 0)),
                                    CurveManifold::segment(0, Point(0, 1), Point(1, 1))};
  EXPECT_THROW(DataGeneratingManifold("bad", dup), Error);
}
