#include <cmath>

#include <gtest/gtest.h>

#include "topoinc/error.hpp"
#include "topoinc/train.hpp"

using namespace topoinc;

namespace {

TrainConfig short_config(long iterations, bool aware, std::uint64_t seed) {
  TrainConfig c;
  c.iterations = iterations;
  c.class_aware = aware;
  c.seed = seed;
  return c;
}

}  // namespace

TEST(Train, DefaultBatches) {
  EXPECT_EQ(default_batch("spirals"), 300);
  EXPECT_EQ(default_batch("two-moons"), 200);
  EXPECT_EQ(default_batch("circles"), 200);
}

TEST(Train, ZeroIterationsIsIdentity) {
  const auto m = make_dataset("two-moons");
  const auto r = train(m, 100, 0.05, short_config(0, false, 3), LatentMixture::standard_normal());
  EXPECT_TRUE(r.loss_trace.empty());
  for (const Point& z : {Point(0.1, 0.2), Point(-1.0, 2.0)}) {
    const auto f = r.model.forward(z);
    EXPECT_EQ(f.point, z);
    EXPECT_EQ(f.log_det, 0.0);
  }
  EXPECT_EQ(r.model.metadata().dataset, "two-moons");
}

TEST(Train, DeterministicLossTrace) {
  const auto m = make_dataset("circles");
  const auto a = train(m, 200, 0.05, short_config(60, false, 5), LatentMixture::circular(1));
  const auto b = train(m, 200, 0.05, short_config(60, false, 5), LatentMixture::circular(1));
  const auto c = train(m, 200, 0.05, short_config(60, false, 6), LatentMixture::circular(1));
  EXPECT_EQ(a.loss_trace, b.loss_trace);
  EXPECT_EQ(a.model.flat_params(), b.model.flat_params());
  EXPECT_NE(a.loss_trace, c.loss_trace);
}

TEST(Train, StandardizerFittedOnData) {
  const auto m = make_dataset("segments");
  const auto data = training_data(m, 300, 0.05, 2);
  const auto r = train(data, short_config(1, false, 2), LatentMixture::circular(1));
  Point mean = Point::Zero();
  for (const auto& s : data) mean += s.point;
  mean /= static_cast<double>(data.size());
  EXPECT_NEAR((r.model.standardizer().mean - mean).norm(), 0.0, 1e-12);
  EXPECT_NEAR(r.model.standardizer().scale.y(), 1.0, 0.01);
}

TEST(Train, LossDecreases) {
  const auto m = make_dataset("two-moons");
  const auto r = train(m, 500, 0.05, short_config(600, false, 1), LatentMixture::circular(1));
  double head = 0.0;
  double tail = 0.0;
  for (int k = 0; k < 50; ++k) {
    head += r.loss_trace[static_cast<std::size_t>(k)];
    tail += r.loss_trace[r.loss_trace.size() - 1 - static_cast<std::size_t>(k)];
  }
  EXPECT_LT(tail, head - 5.0);
}

TEST(Train, ClassAwareSegmentsAssignsLatentComponents) {
  const auto m = make_dataset("segments");
  const auto lm = LatentMixture::circular(2);
  const auto r = train(m, 1000, 0.05, short_config(2000, true, 7), lm);
  const auto held = sample_noisy(m, 500, 0.05, 99);
  int correct = 0;
  for (const auto& s : held) {
    const Point z = r.model.inverse(r.model.standardizer().apply(s.point)).point;
    int best = 0;
    for (int k = 1; k < lm.size(); ++k) {
      if ((z - lm.component(k).mean).norm() < (z - lm.component(best).mean).norm()) best = k;
    }
    correct += best == s.label;
  }
  EXPECT_GE(correct, static_cast<int>(0.95 * held.size()));
}

TEST(Train, InvalidConfigsThrow) {
  const auto m = make_dataset("spirals");
  EXPECT_THROW(train(m, 50, 0.05, short_config(5, true, 1), LatentMixture::circular(2)), Error);
  auto c = short_config(5, false, 1);
  c.batch = 1;
  EXPECT_THROW(train(m, 50, 0.05, c, LatentMixture::circular(2)), Error);
  EXPECT_THROW(train(m, 50, 0.05, short_config(-1, false, 1), LatentMixture::circular(2)), Error);
}

TEST(Train, DivergenceCarriesFiniteCheckpoint) {
  const auto m = make_dataset("two-moons");
  auto c = short_config(500, false, 4);
  c.learning_rate = 1e150;
  c.precision = Precision::kDouble;
  c.checkpoint_every = 1;
  try {
    train(m, 100, 0.05, c, LatentMixture::circular(1));
    FAIL() << "expected divergence";
  } catch (const DivergenceError& e) {
    EXPECT_EQ(e.code(), "divergence");
    const auto data = training_data(m, 100, 0.05, 4);
    std::vector<LabeledSample> batch(data.begin(), data.begin() + 50);
    EXPECT_TRUE(std::isfinite(loss_and_gradients(e.checkpoint(), batch, false).loss));
    EXPECT_EQ(e.checkpoint().metadata().iterations, e.checkpoint_iteration());
  }
}

TEST(Train, AdamMatchesReferenceStep) {
  // One scalar parameter, constant gradient g: the first bias-corrected step is -lr * sign(g).
  auto net = CouplingNet::zeros(1);
  std::vector<CouplingLayer> layers = {{0, net}};
  auto g = CouplingNet::zeros(1);
  g.b3[0] = 0.25;
  Adam adam({net}, 0.01, AdamConfig{});
  adam.step(layers, {g});
  EXPECT_NEAR(layers[0].net.b3[0], -0.01, 1e-9);
  adam.step(layers, {g});
  EXPECT_NEAR(layers[0].net.b3[0], -0.02, 1e-9);
  EXPECT_EQ(adam.steps(), 2);
  EXPECT_EQ(layers[0].net.b3[1], 0.0);
}
