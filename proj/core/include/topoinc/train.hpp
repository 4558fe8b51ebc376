#pragma once

#include <cstdint>
#include <memory>
#include <string>
#include <vector>

#include "topoinc/error.hpp"
#include "topoinc/flow.hpp"

namespace topoinc {

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double eps = 1e-8;
};

struct TrainConfig {
  long iterations = 30000;
  int batch = 200;
  double learning_rate = 1e-3;
  AdamConfig adam;
  bool class_aware = false;
  std::uint64_t seed = 0;
  int checkpoint_every = 100;
  Precision precision = Precision::kSingle;
  FlowArchitecture architecture;
};

// Batch size used for a dataset: 300 for spirals, 200 otherwise.
int default_batch(const std::string& dataset);

// Adam over a list of coupling nets.
class Adam {
 public:
  Adam(const std::vector<CouplingNet>& shape, double learning_rate, AdamConfig cfg);
  void step(std::vector<CouplingLayer>& layers, const std::vector<CouplingNet>& grads);
  long steps() const { return t_; }

 private:
  double lr_;
  AdamConfig cfg_;
  long t_ = 0;
  std::vector<CouplingNet> m_;
  std::vector<CouplingNet> v_;
};

struct TrainResult {
  FlowModel model;
  std::vector<double> loss_trace;
};

// Thrown when the loss becomes non-finite; carries the last checkpoint whose
// loss was finite.
class DivergenceError : public Error {
 public:
  DivergenceError(const std::string& message, FlowModel checkpoint, long iteration)
      : Error("divergence", message),
        checkpoint_(std::make_shared<FlowModel>(std::move(checkpoint))),
        iteration_(iteration) {}
  const FlowModel& checkpoint() const { return *checkpoint_; }
  long checkpoint_iteration() const { return iteration_; }

 private:
  std::shared_ptr<FlowModel> checkpoint_;
  long iteration_;
};

// Fits the standardizer on `data`, initializes from substream (seed, "init")
// and runs Adam on batches drawn without replacement from substream
// (seed, "batch"). class_aware requires latent.size() == number of classes.
TrainResult train(const std::vector<LabeledSample>& data, const TrainConfig& cfg,
                  const LatentMixture& latent, const std::string& dataset_id = "");

// Trains on sample_noisy(m, n_per_class, sigma, substream(seed, "dataset")).
TrainResult train(const DataGeneratingManifold& m, int n_per_class, double sigma,
                  const TrainConfig& cfg, const LatentMixture& latent);

// The training set train(m, ...) uses.
std::vector<LabeledSample> training_data(const DataGeneratingManifold& m, int n_per_class,
                                         double sigma, std::uint64_t seed);

}  // namespace topoinc
