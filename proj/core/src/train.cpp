#include "topoinc/train.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numeric>

namespace topoinc {

int default_batch(const std::string& dataset) { return dataset == "spirals" ? 300 : 200; }

Adam::Adam(const std::vector<CouplingNet>& shape, double learning_rate, AdamConfig cfg)
    : lr_(learning_rate), cfg_(cfg), m_(shape), v_(shape) {
  for (auto& n : m_) n.set_zero();
  for (auto& n : v_) n.set_zero();
}

namespace {
constexpr double kTiny = std::numeric_limits<double>::min();
}  // namespace

void Adam::step(std::vector<CouplingLayer>& layers, const std::vector<CouplingNet>& grads) {
  ++t_;
  const double c1 = 1.0 - std::pow(cfg_.beta1, static_cast<double>(t_));
  const double c2 = 1.0 - std::pow(cfg_.beta2, static_cast<double>(t_));
  const double step = lr_ * std::sqrt(c2) / c1;
  const double eps_hat = cfg_.eps * std::sqrt(c2);
  const double b1 = cfg_.beta1;
  const double b2 = cfg_.beta2;
  for (std::size_t k = 0; k < layers.size(); ++k) {
    std::vector<double*> p_blocks;
    std::vector<double*> m_blocks;
    std::vector<double*> v_blocks;
    std::vector<const double*> g_blocks;
    std::vector<std::size_t> sizes;
    layers[k].net.for_each_block([&](double* p, std::size_t n) {
      p_blocks.push_back(p);
      sizes.push_back(n);
    });
    m_[k].for_each_block([&](double* p, std::size_t) { m_blocks.push_back(p); });
    v_[k].for_each_block([&](double* p, std::size_t) { v_blocks.push_back(p); });
    const_cast<CouplingNet&>(grads[k]).for_each_block(
        [&](double* p, std::size_t) { g_blocks.push_back(p); });
    for (std::size_t b = 0; b < sizes.size(); ++b) {
      double* p = p_blocks[b];
      double* m = m_blocks[b];
      double* v = v_blocks[b];
      const double* g = g_blocks[b];
      for (std::size_t i = 0; i < sizes[b]; ++i) {
        const double mi = b1 * m[i] + (1.0 - b1) * g[i];
        const double vi = b2 * v[i] + (1.0 - b2) * g[i] * g[i];
        // Moments of dead units decay geometrically; denormals are very slow.
        m[i] = std::abs(mi) < kTiny ? 0.0 : mi;
        v[i] = vi < kTiny ? 0.0 : vi;
        p[i] -= step * m[i] / (std::sqrt(v[i]) + eps_hat);
      }
    }
  }
}

std::vector<LabeledSample> training_data(const DataGeneratingManifold& m, int n_per_class,
                                         double sigma, std::uint64_t seed) {
  const std::uint64_t s = substream_seed(seed, "dataset");
  if (sigma > 0.0) return sample_noisy(m, n_per_class, sigma, s);
  return sample_uniform(m, n_per_class, s);
}

TrainResult train(const std::vector<LabeledSample>& data, const TrainConfig& cfg,
                  const LatentMixture& latent, const std::string& dataset_id) {
  if (cfg.iterations < 0) throw Error("invalid-argument", "iterations must be >= 0");
  if (cfg.batch < 2) throw Error("invalid-argument", "batch must be >= 2");
  if (data.size() < 2) throw Error("invalid-argument", "training set needs >= 2 samples");
  int max_label = 0;
  for (const auto& s : data) {
    if (s.label < 0) throw Error("invalid-argument", "negative label");
    max_label = std::max(max_label, s.label);
  }
  if (cfg.class_aware && max_label + 1 != latent.size()) {
    throw Error("invalid-argument",
                "class-aware training needs one latent component per class");
  }

  std::vector<Point> pts;
  pts.reserve(data.size());
  for (const auto& s : data) pts.push_back(s.point);
  FlowModel model(cfg.architecture, latent, Standardizer::fit(pts));
  model.initialize(substream_seed(cfg.seed, "init"));
  model.metadata().dataset = dataset_id;
  model.metadata().seed = cfg.seed;
  model.metadata().class_aware = cfg.class_aware;

  Batch x_all(2, static_cast<Eigen::Index>(data.size()));
  std::vector<int> labels_all(data.size());
  for (std::size_t j = 0; j < data.size(); ++j) {
    x_all.col(static_cast<Eigen::Index>(j)) = model.standardizer().apply(data[j].point);
    labels_all[j] = data[j].label;
  }

  std::vector<CouplingNet> shape;
  for (const auto& l : model.layers()) shape.push_back(l.net);
  Adam adam(shape, cfg.learning_rate, cfg.adam);

  Rng rng = make_rng(cfg.seed, "batch");
  const int batch = std::min<int>(cfg.batch, static_cast<int>(data.size()));
  std::vector<std::size_t> perm(data.size());
  std::iota(perm.begin(), perm.end(), std::size_t{0});
  Batch xb(2, batch);
  std::vector<int> lb(static_cast<std::size_t>(batch));

  TrainResult result{model, {}};
  result.loss_trace.reserve(static_cast<std::size_t>(cfg.iterations));
  FlowModel checkpoint = model;
  long checkpoint_iter = 0;
  for (long it = 0; it < cfg.iterations; ++it) {
    // Partial Fisher-Yates: the first `batch` entries are a uniform draw
    // without replacement.
    for (int j = 0; j < batch; ++j) {
      const std::size_t r =
          static_cast<std::size_t>(j) +
          static_cast<std::size_t>(uniform01(rng) * static_cast<double>(perm.size() - j));
      std::swap(perm[static_cast<std::size_t>(j)], perm[std::min(r, perm.size() - 1)]);
      xb.col(j) = x_all.col(static_cast<Eigen::Index>(perm[static_cast<std::size_t>(j)]));
      lb[static_cast<std::size_t>(j)] = labels_all[perm[static_cast<std::size_t>(j)]];
    }
    LossResult lr;
    try {
      lr = loss_and_gradients(result.model, xb, lb, cfg.class_aware, cfg.precision);
    } catch (const Error& e) {
      throw DivergenceError(std::string("training diverged: ") + e.what(), checkpoint,
                            checkpoint_iter);
    }
    result.loss_trace.push_back(lr.loss);
    // The parameters just evaluated gave a finite loss.
    if (cfg.checkpoint_every > 0 && it % cfg.checkpoint_every == 0) {
      checkpoint = result.model;
      checkpoint_iter = it;
      checkpoint.metadata().iterations = checkpoint_iter;
    }
    adam.step(result.model.layers(), lr.grads);
  }
  result.model.metadata().iterations = cfg.iterations;
  if (!result.loss_trace.empty()) result.model.metadata().final_loss = result.loss_trace.back();
  return result;
}

TrainResult train(const DataGeneratingManifold& m, int n_per_class, double sigma,
                  const TrainConfig& cfg, const LatentMixture& latent) {
  return train(training_data(m, n_per_class, sigma, cfg.seed), cfg, latent, m.name());
}

}  // namespace topoinc
