#include "topoinc/inc.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topoinc/error.hpp"
#include "topoinc/parallel.hpp"
#include "topoinc/rng.hpp"

namespace topoinc {
namespace {

constexpr double kTieTolerance = 1e-12;
constexpr std::size_t kColumnsPerChunk = 256;

struct Job {
  Point target;
  Point z0;
  int component;  // -1: mixture regularizer
  double peak;
};

struct JobResult {
  std::vector<TraceStep> trace;
  TraceStep final_step;
};

// Runs Adam on every job column independently over a contiguous chunk.
void run_jobs(const FlowModel& fm, const IncConfig& cfg, const std::vector<Job>& jobs,
              std::size_t lo, std::size_t hi, std::vector<JobResult>& out) {
  const auto n = static_cast<Eigen::Index>(hi - lo);
  Batch z(2, n);
  Batch target(2, n);
  std::vector<int> comps(static_cast<std::size_t>(n));
  Eigen::VectorXd peaks(n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Job& job = jobs[lo + static_cast<std::size_t>(j)];
    z.col(j) = job.z0;
    target.col(j) = job.target;
    comps[static_cast<std::size_t>(j)] = job.component;
    peaks[j] = job.peak;
  }
  Batch m = Batch::Zero(2, n);
  Batch v = Batch::Zero(2, n);
  constexpr double b1 = 0.9;
  constexpr double b2 = 0.999;
  constexpr double eps = 1e-8;
  Batch x;
  Eigen::VectorXd value;
  Batch grad;
  for (Eigen::Index j = 0; j < n; ++j) {
    auto& r = out[lo + static_cast<std::size_t>(j)];
    r.trace.clear();
    if (cfg.keep_trace) r.trace.reserve(static_cast<std::size_t>(cfg.steps) + 1);
  }
  for (int step = 0; step <= cfg.steps; ++step) {
    inc_objective_batch(fm, z, target, comps, peaks, cfg.alpha, x, value, grad);
    if (!value.allFinite() || !grad.allFinite()) {
      throw Error("non-finite-objective", "INC objective became non-finite");
    }
    for (Eigen::Index j = 0; j < n; ++j) {
      auto& r = out[lo + static_cast<std::size_t>(j)];
      const TraceStep ts{z.col(j), x.col(j), value[j]};
      if (cfg.keep_trace) r.trace.push_back(ts);
      r.final_step = ts;
    }
    if (step == cfg.steps) break;
    const double t = step + 1;
    const double c1 = 1.0 - std::pow(b1, t);
    const double c2 = 1.0 - std::pow(b2, t);
    m = b1 * m + (1.0 - b1) * grad;
    v = b2 * v + (1.0 - b2) * grad.cwiseAbs2();
    z.array() -= cfg.learning_rate * (m.array() / c1) / ((v.array() / c2).sqrt() + eps);
  }
}

std::vector<JobResult> run_all(const FlowModel& fm, const IncConfig& cfg,
                               const std::vector<Job>& jobs, std::size_t workers) {
  std::vector<JobResult> out(jobs.size());
  const std::size_t chunks = (jobs.size() + kColumnsPerChunk - 1) / kColumnsPerChunk;
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const std::size_t lo = c * kColumnsPerChunk;
        run_jobs(fm, cfg, jobs, lo, std::min(jobs.size(), lo + kColumnsPerChunk), out);
      },
      workers);
  return out;
}

void validate(const IncConfig& cfg) {
  if (cfg.steps < 1) throw Error("invalid-argument", "INC steps must be >= 1");
  if (!(cfg.alpha >= 0.0)) throw Error("invalid-argument", "INC alpha must be >= 0");
}

Point ignorant_start(const FlowModel& fm, const IncConfig& cfg, std::uint64_t q, int r) {
  if (!cfg.initial_points.empty()) return cfg.initial_points[static_cast<std::size_t>(r)];
  Rng rng = make_rng(cfg.seed, "inc", q, static_cast<std::uint64_t>(r));
  return fm.latent().sample(rng);
}

IncResult assemble(JobResult& jr, IncVariant variant, int chosen) {
  IncResult r;
  r.variant = variant;
  r.chosen_start = chosen;
  r.x_star = jr.final_step.x;
  r.z_star = jr.final_step.z;
  r.objective = jr.final_step.objective;
  r.trace = jr.trace.empty() ? std::vector<TraceStep>{jr.final_step} : std::move(jr.trace);
  return r;
}

}  // namespace

std::string to_string(IncVariant v) {
  switch (v) {
    case IncVariant::kIdeal:
      return "ideal";
    case IncVariant::kIgnorant:
      return "class-ignorant";
    case IncVariant::kAware:
      return "class-aware";
  }
  return "unknown";
}

double latent_peak_constant(const LatentMixture& lm) { return lm.max_weighted_peak(); }

int resolve_restarts(const FlowModel& fm, const IncConfig& cfg) {
  if (!cfg.initial_points.empty()) return static_cast<int>(cfg.initial_points.size());
  if (cfg.restarts > 0) return cfg.restarts;
  const auto names = dataset_names();
  const std::string& d = fm.metadata().dataset;
  if (std::find(names.begin(), names.end(), d) != names.end()) {
    return make_dataset(d).num_classes();
  }
  return 1;
}

IncResult project_ideal(const DataGeneratingManifold& m, const Point& query) {
  const NearestPoint np = nearest_point(m, query);
  IncResult r;
  r.variant = IncVariant::kIdeal;
  r.x_star = np.point;
  r.z_star = Point(np.param, static_cast<double>(np.label));
  r.objective = np.distance;
  r.trace = {TraceStep{r.z_star, np.point, np.distance}};
  return r;
}

std::vector<IncResult> project_ignorant_batch(const FlowModel& fm,
                                              const std::vector<Point>& queries,
                                              const IncConfig& cfg, std::size_t workers) {
  validate(cfg);
  const int restarts = resolve_restarts(fm, cfg);
  const double peak = latent_peak_constant(fm.latent());
  std::vector<Job> jobs;
  jobs.reserve(queries.size() * static_cast<std::size_t>(restarts));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (int r = 0; r < restarts; ++r) {
      jobs.push_back({queries[q], ignorant_start(fm, cfg, q, r), -1, peak});
    }
  }
  auto res = run_all(fm, cfg, jobs, workers);
  std::vector<IncResult> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    int best = 0;
    for (int r = 1; r < restarts; ++r) {
      if (res[q * restarts + r].final_step.objective <
          res[q * restarts + best].final_step.objective) {
        best = r;
      }
    }
    out.push_back(assemble(res[q * restarts + best], IncVariant::kIgnorant, best));
  }
  return out;
}

IncResult project_ignorant(const FlowModel& fm, const Point& query, const IncConfig& cfg,
                           std::uint64_t query_index) {
  // Reproduce the batch seeding for an arbitrary query index.
  validate(cfg);
  const int restarts = resolve_restarts(fm, cfg);
  const double peak = latent_peak_constant(fm.latent());
  std::vector<Job> jobs;
  for (int r = 0; r < restarts; ++r) {
    jobs.push_back({query, ignorant_start(fm, cfg, query_index, r), -1, peak});
  }
  auto res = run_all(fm, cfg, jobs, 1);
  int best = 0;
  for (int r = 1; r < restarts; ++r) {
    if (res[r].final_step.objective < res[best].final_step.objective) best = r;
  }
  return assemble(res[best], IncVariant::kIgnorant, best);
}

int choose_candidate(const std::vector<double>& distances, std::uint64_t seed,
                     std::uint64_t query_index) {
  if (distances.empty()) throw Error("invalid-argument", "no candidates");
  const double best = *std::min_element(distances.begin(), distances.end());
  std::vector<int> ties;
  for (std::size_t i = 0; i < distances.size(); ++i) {
    if (distances[i] <= best + kTieTolerance) ties.push_back(static_cast<int>(i));
  }
  if (ties.size() == 1) return ties[0];
  Rng rng = make_rng(seed, "tiebreak", query_index);
  const auto k = static_cast<std::size_t>(uniform01(rng) * static_cast<double>(ties.size()));
  return ties[std::min(k, ties.size() - 1)];
}

namespace {

std::vector<IncResult> aware_impl(const FlowModel& fm, const std::vector<Point>& queries,
                                  const std::vector<std::uint64_t>& indices,
                                  const IncConfig& cfg, std::size_t workers, int classes) {
  validate(cfg);
  const LatentMixture& lm = fm.latent();
  const int l = lm.size();
  if (classes > 0 && classes != l) {
    throw Error("class-count-mismatch", "latent component count differs from the class count");
  }
  if (!cfg.initial_points.empty() && static_cast<int>(cfg.initial_points.size()) != l) {
    throw Error("invalid-argument", "class-aware INC needs one initial point per component");
  }
  std::vector<Job> jobs;
  jobs.reserve(queries.size() * static_cast<std::size_t>(l));
  for (std::size_t q = 0; q < queries.size(); ++q) {
    for (int k = 0; k < l; ++k) {
      Point z0;
      if (cfg.initial_points.empty()) {
        Rng rng = make_rng(cfg.seed, "inc", indices[q], static_cast<std::uint64_t>(k));
        z0 = lm.sample_component(k, rng);
      } else {
        z0 = cfg.initial_points[static_cast<std::size_t>(k)];
      }
      jobs.push_back({queries[q], z0, k, lm.component_peak(k)});
    }
  }
  auto res = run_all(fm, cfg, jobs, workers);
  std::vector<IncResult> out;
  out.reserve(queries.size());
  for (std::size_t q = 0; q < queries.size(); ++q) {
    std::vector<double> dist(static_cast<std::size_t>(l));
    for (int k = 0; k < l; ++k) {
      dist[static_cast<std::size_t>(k)] = (res[q * l + k].final_step.x - queries[q]).norm();
    }
    const int chosen = choose_candidate(dist, cfg.seed, indices[q]);
    IncResult r = assemble(res[q * l + chosen], IncVariant::kAware, chosen);
    r.candidate_distances = std::move(dist);
    out.push_back(std::move(r));
  }
  return out;
}

}  // namespace

IncResult project_aware(const FlowModel& fm, const Point& query, const IncConfig& cfg,
                        std::uint64_t query_index, int classes) {
  return aware_impl(fm, {query}, {query_index}, cfg, 1, classes).front();
}

std::vector<IncResult> project_aware_batch(const FlowModel& fm, const std::vector<Point>& queries,
                                           const IncConfig& cfg, std::size_t workers,
                                           int classes) {
  std::vector<std::uint64_t> idx(queries.size());
  for (std::size_t q = 0; q < idx.size(); ++q) idx[q] = q;
  return aware_impl(fm, queries, idx, cfg, workers, classes);
}

}  // namespace topoinc
