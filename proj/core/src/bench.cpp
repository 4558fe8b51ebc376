#include "topoinc/bench.hpp"

#include <cmath>
#include <numbers>

#include "topoinc/error.hpp"
#include "topoinc/noise_density.hpp"
#include "topoinc/parallel.hpp"

namespace topoinc {

void ExperimentConfig::validate() const {
  make_dataset(dataset);
  if (!(sigma >= 0.0)) throw Error("invalid-argument", "sigma must be >= 0");
  if (n_per_class < 2) throw Error("invalid-argument", "n_per_class must be >= 2");
  if (!(latent.rotation >= 0.0 && latent.rotation < 2.0 * std::numbers::pi)) {
    throw Error("invalid-argument", "latent rotation must lie in [0, 2 pi)");
  }
  if (latent.components < 0) throw Error("invalid-argument", "latent components must be >= 0");
  if (!(perturbation >= 0.0)) throw Error("invalid-argument", "perturbation must be >= 0");
  if (sources_per_class < 1) throw Error("invalid-argument", "sources_per_class must be >= 1");
}

Json to_json(const ExperimentConfig& cfg) {
  return {{"dataset", cfg.dataset},
          {"sigma", cfg.sigma},
          {"n_per_class", cfg.n_per_class},
          {"train",
           {{"iterations", cfg.train.iterations},
            {"batch", cfg.train.batch},
            {"learning_rate", cfg.train.learning_rate},
            {"checkpoint_every", cfg.train.checkpoint_every},
            {"precision", cfg.train.precision == Precision::kSingle ? "single" : "double"}}},
          {"latent", {{"components", cfg.latent.components}, {"rotation", cfg.latent.rotation}}},
          {"inc",
           {{"alpha", cfg.inc.alpha},
            {"steps", cfg.inc.steps},
            {"learning_rate", cfg.inc.learning_rate},
            {"restarts", cfg.inc.restarts}}},
          {"perturbation", cfg.perturbation},
          {"sources_per_class", cfg.sources_per_class},
          {"output_dir", cfg.output_dir},
          {"seed", cfg.seed}};
}

ExperimentConfig experiment_from_json(const Json& j) {
  ExperimentConfig c;
  try {
    c.dataset = j.value("dataset", c.dataset);
    c.sigma = j.value("sigma", c.sigma);
    c.n_per_class = j.value("n_per_class", c.n_per_class);
    if (j.contains("train")) {
      const auto& t = j.at("train");
      c.train.iterations = t.value("iterations", c.train.iterations);
      c.train.batch = t.value("batch", c.train.batch);
      c.train.learning_rate = t.value("learning_rate", c.train.learning_rate);
      c.train.checkpoint_every = t.value("checkpoint_every", c.train.checkpoint_every);
      const std::string p = t.value("precision", std::string("single"));
      if (p != "single" && p != "double") throw Error("parse-error", "precision must be single|double");
      c.train.precision = p == "single" ? Precision::kSingle : Precision::kDouble;
    }
    if (j.contains("latent")) {
      c.latent.components = j.at("latent").value("components", c.latent.components);
      c.latent.rotation = j.at("latent").value("rotation", c.latent.rotation);
    }
    if (j.contains("inc")) {
      const auto& i = j.at("inc");
      c.inc.alpha = i.value("alpha", c.inc.alpha);
      c.inc.steps = i.value("steps", c.inc.steps);
      c.inc.learning_rate = i.value("learning_rate", c.inc.learning_rate);
      c.inc.restarts = i.value("restarts", c.inc.restarts);
    }
    c.perturbation = j.value("perturbation", c.perturbation);
    c.sources_per_class = j.value("sources_per_class", c.sources_per_class);
    c.output_dir = j.value("output_dir", c.output_dir);
    c.seed = j.value("seed", c.seed);
  } catch (const Json::exception& e) {
    throw Error("parse-error", std::string("malformed experiment config: ") + e.what());
  }
  c.inc.seed = c.seed;
  c.train.seed = c.seed;
  c.validate();
  return c;
}

LatentMixture experiment_latent(const ExperimentConfig& cfg, bool class_aware) {
  const int l = make_dataset(cfg.dataset).num_classes();
  int n = cfg.latent.components;
  if (n == 0) n = class_aware ? l : std::max(1, l - 1);
  return LatentMixture::circular(n, cfg.latent.rotation);
}

TrainResult train_experiment(const ExperimentConfig& cfg, bool class_aware) {
  cfg.validate();
  const auto m = make_dataset(cfg.dataset);
  TrainConfig tc = cfg.train;
  tc.class_aware = class_aware;
  tc.seed = cfg.seed;
  if (tc.batch == TrainConfig{}.batch) tc.batch = default_batch(cfg.dataset);
  return train(training_data(m, cfg.n_per_class, cfg.sigma, cfg.seed), tc,
               experiment_latent(cfg, class_aware), cfg.dataset);
}

ErrorStats error_stats(const std::vector<double>& errors) {
  ErrorStats s;
  if (errors.empty()) return s;
  for (double e : errors) s.mean += e;
  s.mean /= static_cast<double>(errors.size());
  double var = 0.0;
  for (double e : errors) var += (e - s.mean) * (e - s.mean);
  s.std = std::sqrt(var / static_cast<double>(errors.size()));
  return s;
}

Json to_json(const ProjectionBenchReport& r) {
  return {{"dataset", r.dataset},
          {"variant", to_string(r.variant)},
          {"mean_error", r.mean_error},
          {"std_error", r.std_error},
          {"mean_error_raw", r.mean_error_raw},
          {"std_error_raw", r.std_error_raw},
          {"n_trials", r.n_trials},
          {"seed", r.seed},
          {"errors", r.errors},
          {"errors_raw", r.errors_raw}};
}

std::vector<PerturbedSample> bench_queries(const DataGeneratingManifold& m, int sources_per_class,
                                           double r, std::uint64_t seed) {
  const auto sources = sample_uniform(m, sources_per_class, substream_seed(seed, "bench"));
  auto out = perturb_normal(m, sources, r, +1);
  const auto minus = perturb_normal(m, sources, r, -1);
  out.insert(out.end(), minus.begin(), minus.end());
  return out;
}

namespace {

void fill_stats(ProjectionBenchReport& r) {
  const auto s = error_stats(r.errors);
  const auto sr = error_stats(r.errors_raw);
  r.mean_error = s.mean;
  r.std_error = s.std;
  r.mean_error_raw = sr.mean;
  r.std_error_raw = sr.std;
  r.n_trials = static_cast<int>(r.errors.size());
}

}  // namespace

ProjectionBenchReport projection_report(const FlowModel& fm, IncVariant variant,
                                        const std::string& dataset,
                                        const std::vector<PerturbedSample>& queries,
                                        const IncConfig& inc, std::size_t workers) {
  if (variant == IncVariant::kIdeal) {
    throw Error("invalid-argument", "use ideal_projection_report for the ideal variant");
  }
  const Standardizer& s = fm.standardizer();
  std::vector<Point> q;
  q.reserve(queries.size());
  for (const auto& p : queries) q.push_back(s.apply(p.perturbed));
  IncConfig cfg = inc;
  cfg.keep_trace = false;
  const auto res = variant == IncVariant::kIgnorant ? project_ignorant_batch(fm, q, cfg, workers)
                                                    : project_aware_batch(fm, q, cfg, workers);
  ProjectionBenchReport r;
  r.dataset = dataset;
  r.variant = variant;
  r.seed = inc.seed;
  for (std::size_t i = 0; i < queries.size(); ++i) {
    r.errors.push_back((res[i].x_star - s.apply(queries[i].source)).norm());
    r.errors_raw.push_back((s.invert(res[i].x_star) - queries[i].source).norm());
  }
  fill_stats(r);
  return r;
}

ProjectionBenchReport ideal_projection_report(const DataGeneratingManifold& m,
                                              const std::vector<PerturbedSample>& queries) {
  ProjectionBenchReport r;
  r.dataset = m.name();
  r.variant = IncVariant::kIdeal;
  for (const auto& q : queries) {
    r.errors_raw.push_back((project_ideal(m, q.perturbed).x_star - q.source).norm());
  }
  r.errors = r.errors_raw;
  fill_stats(r);
  return r;
}

std::pair<ProjectionBenchReport, ProjectionBenchReport> run_projection_bench(
    const ExperimentConfig& cfg, const FlowModel& model_ignorant, const FlowModel& model_aware,
    std::size_t workers) {
  cfg.validate();
  const auto m = make_dataset(cfg.dataset);
  if (model_aware.latent().size() != m.num_classes()) {
    throw Error("class-count-mismatch", "class-aware model needs one latent component per class");
  }
  const auto queries = bench_queries(m, cfg.sources_per_class, cfg.perturbation, cfg.seed);
  IncConfig inc = cfg.inc;
  inc.seed = cfg.seed;
  return {projection_report(model_ignorant, IncVariant::kIgnorant, cfg.dataset, queries, inc,
                            workers),
          projection_report(model_aware, IncVariant::kAware, cfg.dataset, queries, inc, workers)};
}

LevelSetRun run_levelset_report(const FlowModel& fm, double lambda, const Domain& domain,
                                int resolution, const DataGeneratingManifold* m, int probes,
                                std::size_t workers) {
  if (resolution < 2) throw Error("invalid-argument", "resolution must be >= 2");
  const double w = (domain.x_hi - domain.x_lo) / resolution;
  const double h = (domain.y_hi - domain.y_lo) / resolution;
  std::vector<Point> cells;
  cells.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      cells.emplace_back(domain.x_lo + (i + 0.5) * w, domain.y_lo + (j + 0.5) * h);
    }
  }
  auto values = fm.log_pdf_batch(cells, workers);
  for (double& v : values) {
    v = std::exp(v);
    if (!std::isfinite(v)) throw Error("non-finite-value", "model density is not finite");
  }
  ScalarField field(domain, resolution, resolution, std::move(values));
  LevelSetReport report;
  if (m) {
    const Standardizer s = fm.standardizer();
    report = check_inclusion_separation(field, lambda, *m, probes,
                                        [s](const Point& p) { return s.apply(p); });
  } else {
    report = analyze_levelset(field, lambda);
  }
  return {std::move(field), report};
}

int out_of_manifold_cells(const ScalarField& field, double lambda, const DataGeneratingManifold& m,
                          const Standardizer& field_space, double delta, std::size_t workers) {
  std::vector<Point> above;
  for (int j = 0; j < field.ny(); ++j) {
    for (int i = 0; i < field.nx(); ++i) {
      if (field.at(i, j) >= lambda) above.push_back(field_space.invert(field.cell_center(i, j)));
    }
  }
  const auto far = parallel_map<int>(
      above.size(), [&](std::size_t k) { return nearest_point(m, above[k]).distance > delta; },
      workers);
  int n = 0;
  for (int f : far) n += f;
  return n;
}

std::string to_string(FailureTag t) {
  switch (t) {
    case FailureTag::kConvergedNearSource:
      return "converged-near-source";
    case FailureTag::kWrongManifold:
      return "wrong-manifold";
    case FailureTag::kOutOfManifold:
      return "out-of-manifold";
  }
  return "unknown";
}

double failure_threshold(double sigma, double lambda) {
  return radius_of_level(NoiseModel(sigma), lambda);
}

std::vector<FailureTrace> capture_failure_traces(const FlowModel& fm,
                                                 const DataGeneratingManifold& m,
                                                 const std::vector<PerturbedSample>& queries,
                                                 const IncConfig& cfg, double delta, bool aware,
                                                 std::size_t workers) {
  const Standardizer& s = fm.standardizer();
  std::vector<Point> q;
  q.reserve(queries.size());
  for (const auto& p : queries) q.push_back(s.apply(p.perturbed));
  IncConfig c = cfg;
  c.restarts = 1;
  auto res = aware ? project_aware_batch(fm, q, c, workers, m.num_classes())
                   : project_ignorant_batch(fm, q, c, workers);
  std::vector<FailureTrace> out(res.size());
  parallel_for(
      res.size(),
      [&](std::size_t i) {
        FailureTrace& t = out[i];
        t.source_label = queries[i].label;
        const NearestPoint np = nearest_point(m, s.invert(res[i].x_star));
        t.projected_label = np.label;
        t.distance_to_manifold = np.distance;
        if (np.distance > delta) {
          t.tag = FailureTag::kOutOfManifold;
        } else if (np.label != t.source_label) {
          t.tag = FailureTag::kWrongManifold;
        } else {
          t.tag = FailureTag::kConvergedNearSource;
        }
      },
      workers);
  for (std::size_t i = 0; i < res.size(); ++i) out[i].result = std::move(res[i]);
  return out;
}

AlignmentRun run_alignment_scenario(const ExperimentConfig& cfg, double rotation,
                                    std::size_t workers) {
  if (!std::isfinite(rotation)) throw Error("invalid-argument", "rotation must be finite");
  ExperimentConfig c = cfg;
  c.dataset = "two-moons";
  c.validate();
  const auto m = make_dataset(c.dataset);
  TrainConfig tc = c.train;
  tc.class_aware = true;
  tc.seed = c.seed;
  if (tc.batch == TrainConfig{}.batch) tc.batch = default_batch(c.dataset);
  auto tr = train(training_data(m, c.n_per_class, c.sigma, c.seed), tc,
                  LatentMixture::circular(m.num_classes(), rotation), c.dataset);
  auto ls = run_levelset_report(tr.model, 0.01, {}, 300, &m, 64, workers);
  return {std::move(tr.model), std::move(ls)};
}

BoundaryComparison run_boundary_comparison(const SvmModel& svm, const BoundaryContext& ctx,
                                           const Domain& domain, int resolution,
                                           std::size_t workers) {
  BoundaryComparison b;
  b.none = boundary_eval(svm, Defense::kNone, ctx, domain, resolution, workers);
  b.ideal = boundary_eval(svm, Defense::kIdeal, ctx, domain, resolution, workers);
  b.ignorant = boundary_eval(svm, Defense::kIgnorant, ctx, domain, resolution, workers);
  b.aware = boundary_eval(svm, Defense::kAware, ctx, domain, resolution, workers);
  b.agreement_ignorant = agreement(b.ignorant, b.ideal);
  b.agreement_aware = agreement(b.aware, b.ideal);
  return b;
}

Json to_json(const RunManifest& m) {
  Json artifacts = Json::array();
  for (const auto& [kind, path] : m.artifacts) artifacts.push_back({{"kind", kind}, {"path", path}});
  return {{"command", m.command},
          {"seed", m.seed},
          {"version", kVersion},
          {"modules",
           {{"geometry", kVersion},
            {"noise_density", kVersion},
            {"topo_field", kVersion},
            {"flow", kVersion},
            {"inc", kVersion},
            {"baseline", kVersion},
            {"bench", kVersion}}},
          {"config", m.config},
          {"artifacts", artifacts}};
}

}  // namespace topoinc
