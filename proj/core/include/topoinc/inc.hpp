#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"

namespace topoinc {

struct IncConfig {
  double alpha = 1.0;
  int steps = 100;
  double learning_rate = 0.01;
  // Class-ignorant starting points; 0 means the class count of the model's
  // dataset (1 when unknown).
  int restarts = 0;
  std::uint64_t seed = 0;
  // When false only the final state is kept in IncResult::trace.
  bool keep_trace = true;
  // Fixed starting latents used for every query instead of draws from D_Z:
  // one per restart (class-ignorant) or per component (class-aware).
  std::vector<Point> initial_points;
};

enum class IncVariant { kIdeal, kIgnorant, kAware };

std::string to_string(IncVariant v);

struct TraceStep {
  Point z = Point::Zero();
  Point x = Point::Zero();
  double objective = 0.0;
};

struct IncResult {
  Point x_star = Point::Zero();
  Point z_star = Point::Zero();  // ideal variant: (curve parameter, label)
  double objective = 0.0;
  std::vector<TraceStep> trace;  // steps + 1 entries for the chosen start
  int chosen_start = 0;
  IncVariant variant = IncVariant::kIdeal;
  // Class-aware: final distance of every candidate to the query.
  std::vector<double> candidate_distances;
};

// M for the class-ignorant objective: max_k w_k peak_k.
double latent_peak_constant(const LatentMixture& lm);
int resolve_restarts(const FlowModel& fm, const IncConfig& cfg);

// Exact projection onto M via nearest_point; objective is the distance.
IncResult project_ideal(const DataGeneratingManifold& m, const Point& query);

// min_z |G(z) - q| + alpha (M - p_Z(z)) by Adam from `restarts` draws of D_Z
// (substream (seed, "inc", query_index, restart)); the restart with the
// lowest final objective wins. Queries are in standardized space.
// Throws Error("non-finite-objective").
IncResult project_ignorant(const FlowModel& fm, const Point& query, const IncConfig& cfg,
                           std::uint64_t query_index = 0);
std::vector<IncResult> project_ignorant_batch(const FlowModel& fm,
                                              const std::vector<Point>& queries,
                                              const IncConfig& cfg, std::size_t workers = 0);

// One start per latent component k with regularizer alpha (M_k - p_{Z,k});
// the candidate closest to the query wins, ties within 1e-12 broken by
// choose_candidate. Throws Error("class-count-mismatch") when `classes`
// (if > 0) differs from the latent component count.
IncResult project_aware(const FlowModel& fm, const Point& query, const IncConfig& cfg,
                        std::uint64_t query_index = 0, int classes = 0);
std::vector<IncResult> project_aware_batch(const FlowModel& fm, const std::vector<Point>& queries,
                                           const IncConfig& cfg, std::size_t workers = 0,
                                           int classes = 0);

// Index of the smallest distance; ties (within 1e-12) drawn uniformly from
// substream (seed, "tiebreak", query_index).
int choose_candidate(const std::vector<double>& distances, std::uint64_t seed,
                     std::uint64_t query_index);

}  // namespace topoinc
