#pragma once

#include <cstdint>
#include <string>
#include <utility>
#include <vector>

#include "topoinc/baseline.hpp"
#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/io.hpp"
#include "topoinc/topo_field.hpp"
#include "topoinc/train.hpp"

namespace topoinc {

inline constexpr const char* kVersion = "0.1.0";

struct LatentSpec {
  // 0: l - 1 components for class-ignorant, l for class-aware training.
  int components = 0;
  double rotation = 0.0;
};

struct ExperimentConfig {
  std::string dataset = "two-moons";
  double sigma = 0.05;
  int n_per_class = 1000;
  TrainConfig train;
  LatentSpec latent;
  IncConfig inc;
  double perturbation = 0.2;
  int sources_per_class = 100;
  std::string output_dir;
  std::uint64_t seed = 0;

  // Throws Error("unknown-dataset") or Error("invalid-argument").
  void validate() const;
};

Json to_json(const ExperimentConfig& cfg);
// Missing keys keep their defaults.
ExperimentConfig experiment_from_json(const Json& j);

// Latent mixture used for a flow trained on `cfg.dataset`.
LatentMixture experiment_latent(const ExperimentConfig& cfg, bool class_aware);
// Trains on training_data(m, n_per_class, sigma, seed) with the dataset's
// default batch size unless cfg.train.batch was changed from 200.
TrainResult train_experiment(const ExperimentConfig& cfg, bool class_aware);

struct ErrorStats {
  double mean = 0.0;
  double std = 0.0;  // population
};

ErrorStats error_stats(const std::vector<double>& errors);

struct ProjectionBenchReport {
  std::string dataset;
  IncVariant variant = IncVariant::kIgnorant;
  double mean_error = 0.0;  // standardized units
  double std_error = 0.0;
  double mean_error_raw = 0.0;
  double std_error_raw = 0.0;
  int n_trials = 0;
  std::uint64_t seed = 0;
  std::vector<double> errors;
  std::vector<double> errors_raw;
};

Json to_json(const ProjectionBenchReport& r);

// sources_per_class uniform points per class (substream (seed, "bench"))
// perturbed by +r and -r along the normal: 2 * sources_per_class * l queries.
std::vector<PerturbedSample> bench_queries(const DataGeneratingManifold& m, int sources_per_class,
                                           double r, std::uint64_t seed);

// Projection error |INC(x^) - x| of each query; standardized errors use the
// model's own standardizer.
ProjectionBenchReport projection_report(const FlowModel& fm, IncVariant variant,
                                        const std::string& dataset,
                                        const std::vector<PerturbedSample>& queries,
                                        const IncConfig& inc, std::size_t workers = 0);
// Ideal INC in raw units; the standardized fields repeat the raw values.
ProjectionBenchReport ideal_projection_report(const DataGeneratingManifold& m,
                                              const std::vector<PerturbedSample>& queries);

std::pair<ProjectionBenchReport, ProjectionBenchReport> run_projection_bench(
    const ExperimentConfig& cfg, const FlowModel& model_ignorant, const FlowModel& model_aware,
    std::size_t workers = 0);

struct LevelSetRun {
  ScalarField field;
  LevelSetReport report;
};

// Rasterizes exp(log_pdf) in the model's standardized space. With a
// manifold, inclusion and separation are checked with `probes` points per
// class mapped through the standardizer.
LevelSetRun run_levelset_report(const FlowModel& fm, double lambda, const Domain& domain = {},
                                int resolution = 300, const DataGeneratingManifold* m = nullptr,
                                int probes = 64, std::size_t workers = 0);

// Cells with field >= lambda whose raw-space distance to M exceeds delta.
int out_of_manifold_cells(const ScalarField& field, double lambda, const DataGeneratingManifold& m,
                          const Standardizer& field_space, double delta, std::size_t workers = 0);

enum class FailureTag { kConvergedNearSource, kWrongManifold, kOutOfManifold };

std::string to_string(FailureTag t);

struct FailureTrace {
  IncResult result;
  FailureTag tag = FailureTag::kConvergedNearSource;
  int source_label = 0;
  int projected_label = 0;
  double distance_to_manifold = 0.0;  // raw units
};

// delta_lambda of the dataset noise, the out-of-manifold distance.
double failure_threshold(double sigma, double lambda = 0.01);

// Single-start class-ignorant INC (aware = false) or class-aware multi-start
// per query, tagged by the raw position of x*: out-of-manifold if farther
// than delta from M, otherwise wrong-manifold if the nearest class differs
// from the source class.
std::vector<FailureTrace> capture_failure_traces(const FlowModel& fm,
                                                 const DataGeneratingManifold& m,
                                                 const std::vector<PerturbedSample>& queries,
                                                 const IncConfig& cfg, double delta,
                                                 bool aware = false, std::size_t workers = 0);

struct AlignmentRun {
  FlowModel model;
  LevelSetRun levelset;
};

// Class-aware two-moons flow with the mixture rotated by `rotation`.
AlignmentRun run_alignment_scenario(const ExperimentConfig& cfg, double rotation,
                                    std::size_t workers = 0);

struct BoundaryComparison {
  BoundaryGrid none;
  BoundaryGrid ideal;
  BoundaryGrid ignorant;
  BoundaryGrid aware;
  double agreement_ignorant = 0.0;  // with ideal
  double agreement_aware = 0.0;
};

BoundaryComparison run_boundary_comparison(const SvmModel& svm, const BoundaryContext& ctx,
                                           const Domain& domain = {},
                                           int resolution = kDefaultBoundaryGrid,
                                           std::size_t workers = 0);

struct RunManifest {
  std::string command;
  std::uint64_t seed = 0;
  Json config;
  std::vector<std::pair<std::string, std::string>> artifacts;  // (kind, path)
};

Json to_json(const RunManifest& m);

}  // namespace topoinc
