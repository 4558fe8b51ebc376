#include <algorithm>
#include <cmath>
#include <numeric>

#include <gtest/gtest.h>

#include "topoinc/baseline.hpp"
#include "topoinc/error.hpp"
#include "topoinc/rng.hpp"
#include "topoinc/train.hpp"

using namespace topoinc;

namespace {

std::vector<LabeledSample> xor_layout() {
  return {{Point(1, 1), 0}, {Point(-1, -1), 0}, {Point(1, -1), 1}, {Point(-1, 1), 1}};
}

double direct_decision(const BinarySvm& b, double gamma, const Point& x) {
  double f = -b.rho;
  for (std::size_t i = 0; i < b.support.size(); ++i) {
    f += b.coef[i] * std::exp(-gamma * (b.support[i] - x).squaredNorm());
  }
  return f;
}

}  // namespace

TEST(Svm, TwoSeparablePoints) {
  const std::vector<LabeledSample> d = {{Point(-1, 0), 0}, {Point(1, 0), 1}};
  SvmConfig cfg;
  cfg.gamma = 1.0;
  const auto svm = svm_train(d, cfg);
  EXPECT_EQ(svm.predict(Point(-1, 0)), 0);
  EXPECT_EQ(svm.predict(Point(1, 0)), 1);
  EXPECT_EQ(training_accuracy(svm, d), 1.0);
}

TEST(Svm, XorDecisionSigns) {
  SvmConfig cfg;
  cfg.gamma = 1.0;
  const auto d = xor_layout();
  const auto svm = svm_train(d, cfg);
  EXPECT_EQ(training_accuracy(svm, d), 1.0);
  ASSERT_EQ(svm.num_classes(), 2);
  for (const auto& s : d) {
    const auto dv = svm.decision_values(s.point);
    for (int c = 0; c < 2; ++c) {
      const double f = direct_decision(svm.machines()[c], 1.0, s.point);
      EXPECT_NEAR(dv[c], f, 1e-12);
      EXPECT_EQ(f > 0, s.label == c);
    }
  }
}

TEST(Svm, KktAndBoxOnRandomProblems) {
  for (std::uint64_t seed = 0; seed < 5; ++seed) {
    Rng rng = make_rng(seed, "svm");
    std::vector<Point> x;
    std::vector<int> y;
    for (int i = 0; i < 80; ++i) {
      x.emplace_back(standard_normal(rng), standard_normal(rng));
      y.push_back(x.back().x() * x.back().y() + 0.3 * standard_normal(rng) > 0 ? 1 : -1);
    }
    const auto k = rbf_kernel_matrix(x, 2.0);
    const auto sol = smo_solve(k, y, 1.0, 1e-3);
    EXPECT_TRUE(sol.converged);
    EXPECT_LE(kkt_residual(k, y, sol, 1.0), 1e-3);
    double balance = 0.0;
    for (std::size_t i = 0; i < y.size(); ++i) {
      EXPECT_GE(sol.alpha[i], 0.0);
      EXPECT_LE(sol.alpha[i], 1.0);
      balance += sol.alpha[i] * y[i];
    }
    EXPECT_NEAR(balance, 0.0, 1e-9);
  }
}

TEST(Svm, TwoMoonsOverfitRegime) {
  const auto m = make_dataset("two-moons");
  const auto d = training_data(m, 1000, 0.05, 0);
  const auto svm = svm_train(d);
  EXPECT_GE(training_accuracy(svm, d), 0.99);
  for (const auto& b : svm.machines()) EXPECT_LE(b.kkt_residual, 1e-3);
}

TEST(Svm, PermutationInvariant) {
  const auto m = make_dataset("spirals");
  auto d = training_data(m, 60, 0.05, 3);
  SvmConfig cfg;
  cfg.tolerance = 1e-10;
  const auto a = svm_train(d, cfg);
  Rng rng = make_rng(1, "perm");
  std::shuffle(d.begin(), d.end(), rng);
  const auto b = svm_train(d, cfg);
  Rng probe = make_rng(2, "probe");
  for (int k = 0; k < 200; ++k) {
    const Point x(4 * uniform01(probe) - 2, 4 * uniform01(probe) - 2);
    const auto da = a.decision_values(x);
    const auto db = b.decision_values(x);
    for (std::size_t c = 0; c < da.size(); ++c) EXPECT_NEAR(da[c], db[c], 1e-8);
  }
}

TEST(Svm, SingleClassRejected) {
  try {
    svm_train({{Point(0, 0), 0}, {Point(1, 0), 0}});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), "single-class");
  }
  EXPECT_THROW(svm_train({}), Error);
}

TEST(Svm, TiesGoToLowestLabel) {
  const SvmModel svm(1.0, 1.0, {BinarySvm{{}, {}, 0.0}, BinarySvm{{}, {}, 0.0}});
  EXPECT_EQ(svm.predict(Point(0.3, 0.1)), 0);
}

TEST(Boundary, NoneMatchesDirectPrediction) {
  const auto d = xor_layout();
  SvmConfig cfg;
  cfg.gamma = 1.0;
  const auto svm = svm_train(d, cfg);
  const auto g = boundary_eval(svm, Defense::kNone, BoundaryContext{}, Domain{}, 40);
  ASSERT_EQ(g.labels.size(), 1600u);
  for (int j = 0; j < 40; ++j) {
    for (int i = 0; i < 40; ++i) {
      const Point c(-3 + (i + 0.5) * 0.15, -3 + (j + 0.5) * 0.15);
      EXPECT_EQ(g.labels[static_cast<std::size_t>(j) * 40 + i], svm.predict(c));
    }
  }
  const auto again = boundary_eval(svm, Defense::kNone, BoundaryContext{}, Domain{}, 40, 3);
  EXPECT_EQ(g.labels, again.labels);
  EXPECT_EQ(agreement(g, again), 1.0);
}

TEST(Boundary, IdealFollowsNearestManifold) {
  const auto m = make_dataset("two-moons");
  const auto svm = svm_train(training_data(m, 1000, 0.05, 0));
  BoundaryContext ctx;
  ctx.manifold = &m;
  const auto g = boundary_eval(svm, Defense::kIdeal, ctx, Domain{}, 60);
  for (int j = 0; j < 60; ++j) {
    for (int i = 0; i < 60; ++i) {
      const Point c(-3 + (i + 0.5) * 0.1, -3 + (j + 0.5) * 0.1);
      EXPECT_EQ(g.labels[static_cast<std::size_t>(j) * 60 + i], nearest_point(m, c).label);
    }
  }
}

TEST(Boundary, FlowDefensesNeedModels) {
  const auto svm = svm_train(xor_layout());
  EXPECT_THROW(boundary_eval(svm, Defense::kIdeal, BoundaryContext{}), Error);
  EXPECT_THROW(boundary_eval(svm, Defense::kIgnorant, BoundaryContext{}), Error);
  EXPECT_THROW(boundary_eval(svm, Defense::kNone, BoundaryContext{}, Domain{}, 301), Error);
  EXPECT_THROW(boundary_eval(svm, Defense::kNone, BoundaryContext{}, Domain{}, 1), Error);
}

TEST(Boundary, AwareIdentityFlowLabelsInRange) {
  const auto svm = svm_train(xor_layout());
  FlowModel fm(FlowArchitecture{}, LatentMixture::circular(2));
  fm.initialize(0);
  BoundaryContext ctx;
  ctx.aware = &fm;
  ctx.inc.steps = 10;
  const auto g = boundary_eval(svm, Defense::kAware, ctx, Domain{}, 10);
  for (int l : g.labels) {
    EXPECT_GE(l, 0);
    EXPECT_LT(l, 2);
  }
  FlowModel three(FlowArchitecture{}, LatentMixture::circular(3));
  three.initialize(0);
  ctx.aware = &three;
  EXPECT_THROW(boundary_eval(svm, Defense::kAware, ctx, Domain{}, 10), Error);
}

TEST(Boundary, DefenseNames) {
  for (auto d : {Defense::kNone, Defense::kIdeal, Defense::kIgnorant, Defense::kAware}) {
    EXPECT_EQ(defense_from_string(to_string(d)), d);
  }
  EXPECT_THROW(defense_from_string("pgd"), Error);
}
