#pragma once

#include <cstdint>
#include <optional>
#include <string>
#include <vector>

#include <Eigen/Core>

#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/topo_field.hpp"

namespace topoinc {

struct SvmConfig {
  double gamma = 100.0;
  double c_reg = 1.0;
  double tolerance = 1e-3;
  long max_iterations = 10000000;
};

struct BinarySolution {
  std::vector<double> alpha;
  double rho = 0.0;  // f(x) = sum_i alpha_i y_i K(x_i, x) - rho
  long iterations = 0;
  bool converged = false;
};

// Dual C-SVM by SMO with second-order working-set selection on a
// precomputed kernel matrix; y in {-1, +1}. Stops when the maximal
// violating pair gap drops below `tolerance`.
BinarySolution smo_solve(const Eigen::MatrixXd& kernel, const std::vector<int>& y, double c_reg,
                         double tolerance, long max_iterations = 10000000);

// Largest KKT violation of a binary solution measured on y_i f(x_i) - 1.
double kkt_residual(const Eigen::MatrixXd& kernel, const std::vector<int>& y,
                    const BinarySolution& sol, double c_reg);

Eigen::MatrixXd rbf_kernel_matrix(const std::vector<Point>& points, double gamma);

struct BinarySvm {
  std::vector<Point> support;
  std::vector<double> coef;  // alpha_i y_i
  double rho = 0.0;
  double kkt_residual = 0.0;
  long iterations = 0;
};

// One-vs-rest RBF SVM.
class SvmModel {
 public:
  SvmModel(double gamma, double c_reg, std::vector<BinarySvm> machines);

  double gamma() const { return gamma_; }
  double c_reg() const { return c_reg_; }
  int num_classes() const { return static_cast<int>(machines_.size()); }
  const std::vector<BinarySvm>& machines() const { return machines_; }

  std::vector<double> decision_values(const Point& x) const;
  // argmax decision value, ties to the lowest label.
  int predict(const Point& x) const;
  std::vector<int> predict_batch(const std::vector<Point>& x, std::size_t workers = 0) const;

 private:
  double gamma_;
  double c_reg_;
  std::vector<BinarySvm> machines_;
};

// Throws Error("single-class") with fewer than 2 classes or a class label
// without samples.
SvmModel svm_train(const std::vector<LabeledSample>& data, const SvmConfig& cfg = {});

double training_accuracy(const SvmModel& svm, const std::vector<LabeledSample>& data);

enum class Defense { kNone, kIdeal, kIgnorant, kAware };

std::string to_string(Defense d);
Defense defense_from_string(const std::string& s);

inline constexpr int kDefaultBoundaryGrid = 100;
inline constexpr int kMaxBoundaryGrid = 300;

struct BoundaryGrid {
  Domain domain;
  int nx = 0;
  int ny = 0;
  Defense defense = Defense::kNone;
  std::vector<int> labels;  // row-major like ScalarField
};

// Models needed by the defenses. Grid coordinates live in `grid_space`
// (the space the SVM was trained in); flow queries are mapped through raw
// coordinates into each model's own standardized space.
struct BoundaryContext {
  Standardizer grid_space;
  const DataGeneratingManifold* manifold = nullptr;
  const FlowModel* ignorant = nullptr;
  const FlowModel* aware = nullptr;
  IncConfig inc;
};

// Classifies every cell center after the selected projection. Throws
// Error("invalid-argument") for resolution outside [2, 300] or a missing model.
BoundaryGrid boundary_eval(const SvmModel& svm, Defense defense, const BoundaryContext& ctx,
                           const Domain& domain = {}, int resolution = kDefaultBoundaryGrid,
                           std::size_t workers = 0);

// Fraction of cells with equal labels.
double agreement(const BoundaryGrid& a, const BoundaryGrid& b);

}  // namespace topoinc
