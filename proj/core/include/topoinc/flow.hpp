#pragma once

#include <cstdint>
#include <limits>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "topoinc/geometry.hpp"
#include "topoinc/latent.hpp"

namespace topoinc {

// Points stored column-wise.
using Batch = Eigen::Matrix<double, 2, Eigen::Dynamic>;
using RowVec = Eigen::Matrix<double, 1, Eigen::Dynamic>;

struct FlowArchitecture {
  int num_layers = 8;
  int hidden = 128;
  double log_scale_clamp = 2.0;
};

// Perceptron 1 -> hidden -> hidden -> 2 with ReLU hidden activations.
// Output row 0 is the raw log-scale, row 1 the shift.
struct CouplingNet {
  Eigen::MatrixXd w1;  // hidden x 1
  Eigen::VectorXd b1;
  Eigen::MatrixXd w2;  // hidden x hidden
  Eigen::VectorXd b2;
  Eigen::MatrixXd w3;  // 2 x hidden
  Eigen::VectorXd b3;

  static CouplingNet zeros(int hidden);
  std::size_t size() const;
  std::vector<double> flat() const;
  void set_flat(const double* data);
  void set_zero();

  // fn(double* data, std::size_t n) over the six parameter blocks in
  // flat order (w1, b1, w2, b2, w3, b3); matrices are column-major.
  template <typename Fn>
  void for_each_block(Fn&& fn) {
    fn(w1.data(), static_cast<std::size_t>(w1.size()));
    fn(b1.data(), static_cast<std::size_t>(b1.size()));
    fn(w2.data(), static_cast<std::size_t>(w2.size()));
    fn(b2.data(), static_cast<std::size_t>(b2.size()));
    fn(w3.data(), static_cast<std::size_t>(w3.size()));
    fn(b3.data(), static_cast<std::size_t>(b3.size()));
  }
};

// Affine coupling: the coordinate `conditioned_index` passes through and
// the other is scaled by exp(s) and shifted by t, s = c tanh(raw / c).
struct CouplingLayer {
  int conditioned_index = 0;
  CouplingNet net;
};

// Per-dimension affine standardization fitted on training data
// (population standard deviation).
struct Standardizer {
  Point mean = Point::Zero();
  Point scale = Point::Ones();

  static Standardizer fit(const std::vector<Point>& points);
  Point apply(const Point& x) const { return (x - mean).cwiseQuotient(scale); }
  Point invert(const Point& y) const { return y.cwiseProduct(scale) + mean; }
  // log |det d apply / dx|
  double log_det() const;
};

struct FlowMetadata {
  std::string dataset;
  std::uint64_t seed = 0;
  long iterations = 0;
  bool class_aware = false;
  double final_loss = std::numeric_limits<double>::quiet_NaN();
};

struct FlowPoint {
  Point point = Point::Zero();
  double log_det = 0.0;
};

// Real NVP flow G: latent z -> standardized data x. Layer k conditions on
// coordinate k % 2, which realizes the coordinate swap between layers.
class FlowModel {
 public:
  FlowModel(FlowArchitecture arch, LatentMixture latent, Standardizer standardizer = {});

  // Hidden layers U(-1/sqrt(fan_in), 1/sqrt(fan_in)); output layers zero, so
  // the model starts as the identity map.
  void initialize(std::uint64_t seed);
  // Same as initialize but with output layers U(-output_scale, output_scale).
  void randomize(std::uint64_t seed, double output_scale);

  const FlowArchitecture& architecture() const { return arch_; }
  const LatentMixture& latent() const { return latent_; }
  const Standardizer& standardizer() const { return standardizer_; }
  void set_standardizer(const Standardizer& s) { standardizer_ = s; }
  const std::vector<CouplingLayer>& layers() const { return layers_; }
  std::vector<CouplingLayer>& layers() { return layers_; }
  FlowMetadata& metadata() { return metadata_; }
  const FlowMetadata& metadata() const { return metadata_; }

  // Throws Error("non-finite-value") on non-finite input or output.
  FlowPoint forward(const Point& z) const;
  FlowPoint inverse(const Point& x) const;
  void forward_batch(const Batch& z, Batch& x, Eigen::VectorXd& log_det) const;
  void inverse_batch(const Batch& x, Batch& z, Eigen::VectorXd& log_det) const;

  // Log-density in standardized space: log p_Z(G^-1(x)) + inverse log-det.
  double log_pdf(const Point& x) const;
  // Per-class density using latent component k.
  double log_pdf_class(int k, const Point& x) const;
  std::vector<double> log_pdf_batch(const std::vector<Point>& x, std::size_t workers = 0) const;
  // Density of raw data coordinates, including the standardizer Jacobian.
  double log_pdf_raw(const Point& x_raw) const;

  std::size_t num_params() const;
  std::vector<double> flat_params() const;
  void set_flat_params(const std::vector<double>& flat);

 private:
  FlowArchitecture arch_;
  LatentMixture latent_;
  Standardizer standardizer_;
  std::vector<CouplingLayer> layers_;
  FlowMetadata metadata_;
};

enum class Precision { kDouble, kSingle };

struct LossResult {
  double loss = 0.0;
  std::vector<CouplingNet> grads;  // one per layer
  int empty_classes = 0;           // class-aware only
};

// Class-ignorant: -mean log p_X. Class-aware: sum_i (1/l) * (-mean over
// class i of log p_{X,i}); classes absent from the batch contribute 0 and
// are counted in empty_classes. `x` is in standardized space.
// Throws Error("non-finite-loss").
// kSingle evaluates the network in float (training speed); the result is
// returned in double either way.
LossResult loss_and_gradients(const FlowModel& fm, const Batch& x, const std::vector<int>& labels,
                              bool class_aware, Precision precision = Precision::kDouble);
// Standardizes the sample points with the model's standardizer first.
LossResult loss_and_gradients(const FlowModel& fm, const std::vector<LabeledSample>& batch,
                              bool class_aware, Precision precision = Precision::kDouble);

// Objective on latent inputs z; see gradient_wrt_input.
enum class InputObjective { kSquaredDistance, kRegularizedInc };

struct InputObjectiveSpec {
  InputObjective kind = InputObjective::kSquaredDistance;
  Point target = Point::Zero();
  double alpha = 1.0;
  // kRegularizedInc: value = |G(z) - target| + alpha * (peak - p(z)) with p
  // the latent mixture (component < 0) or latent component `component`.
  double peak = 0.0;
  int component = -1;
};

struct InputGradient {
  double value = 0.0;
  Point x = Point::Zero();
  Point grad = Point::Zero();
};

// kSquaredDistance: value = |G(z) - target|^2.
InputGradient gradient_wrt_input(const FlowModel& fm, const InputObjectiveSpec& spec,
                                 const Point& z);

// Batched regularized INC objective. Column j uses target(:, j), latent
// component components[j] (-1 for the mixture) and peak constant peaks[j].
// The distance term has zero gradient within 1e-12 of the target.
void inc_objective_batch(const FlowModel& fm, const Batch& z, const Batch& target,
                         const std::vector<int>& components, const Eigen::VectorXd& peaks,
                         double alpha, Batch& x, Eigen::VectorXd& value, Batch& grad);

// J(z)^T g for G at each column of z; also returns x = G(z).
Batch forward_vjp(const FlowModel& fm, const Batch& z, const Batch& g, Batch& x);

}  // namespace topoinc
