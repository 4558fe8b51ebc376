#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdint>
#include <iostream>
#include <map>
#include <set>
#include <sstream>
#include <string>
#include <vector>

#include "CLI11.hpp"
#include "svg.hpp"
#include "topoinc/baseline.hpp"
#include "topoinc/bench.hpp"
#include "topoinc/error.hpp"
#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/io.hpp"
#include "topoinc/noise_density.hpp"
#include "topoinc/parallel.hpp"
#include "topoinc/topo_field.hpp"
#include "topoinc/train.hpp"

using namespace topoinc;

namespace {

// Bad flag values found after parsing; exits 2 like a CLI11 parse error.
struct UsageError : std::runtime_error {
  using std::runtime_error::runtime_error;
};

std::vector<double> split_numbers(const std::string& s, std::size_t n, const std::string& flag) {
  std::vector<double> v;
  std::stringstream ss(s);
  std::string item;
  while (std::getline(ss, item, ',')) {
    try {
      std::size_t used = 0;
      v.push_back(std::stod(item, &used));
      if (used != item.size()) throw std::invalid_argument(item);
    } catch (const std::exception&) {
      throw UsageError(flag + ": '" + item + "' is not a number");
    }
  }
  if (v.size() != n) {
    throw UsageError(flag + " expects " + std::to_string(n) + " comma-separated numbers");
  }
  return v;
}

Point parse_point(const std::string& s, const std::string& flag) {
  const auto v = split_numbers(s, 2, flag);
  return {v[0], v[1]};
}

Domain parse_domain(const std::string& s) {
  const auto v = split_numbers(s, 4, "--domain");
  Domain d{v[0], v[1], v[2], v[3]};
  if (!(d.x_hi > d.x_lo) || !(d.y_hi > d.y_lo)) {
    throw UsageError("--domain needs x_lo < x_hi and y_lo < y_hi");
  }
  return d;
}

Json domain_json(const Domain& d) { return {d.x_lo, d.x_hi, d.y_lo, d.y_hi}; }

std::string env_name(const std::string& flag) {
  std::string e = "TOPOINC_";
  for (char c : flag.substr(2)) e += c == '-' ? '_' : static_cast<char>(std::toupper(c));
  return e;
}

// Every flag can take its default from TOPOINC_<FLAG>.
template <typename T>
CLI::Option* flag(CLI::App* app, const std::string& name, T& var, const std::string& desc) {
  return app->add_option(name, var, desc)->envname(env_name(name));
}

struct Manifest {
  RunManifest run;
  void add(const std::string& kind, const std::string& path) {
    run.artifacts.emplace_back(kind, path);
  }
};

Json stamped(Json j, std::uint64_t seed) {
  j["seed"] = seed;
  j["version"] = kVersion;
  return j;
}

std::string sidecar_path(const std::string& csv) {
  const auto dot = csv.rfind('.');
  const auto slash = csv.find_last_of('/');
  if (dot != std::string::npos && (slash == std::string::npos || dot > slash)) {
    return csv.substr(0, dot) + ".json";
  }
  return csv + ".json";
}

std::string join_path(const std::string& dir, const std::string& file) {
  if (dir.empty() || dir == ".") return file;
  return dir.back() == '/' ? dir + file : dir + "/" + file;
}

// ---- gen ----

struct GenArgs {
  std::string dataset = "two-moons";
  int n_per_class = 1000;
  double sigma = 0.05;
  std::uint64_t seed = 0;
  std::string out = "samples.csv";
};

void run_gen(const GenArgs& a, Manifest& mf) {
  const auto m = make_dataset(a.dataset);
  const auto samples = sample_noisy(m, a.n_per_class, a.sigma, a.seed);
  write_samples_csv(a.out, samples, true);
  std::vector<Point> pts;
  for (const auto& s : samples) pts.push_back(s.point);
  const Json side = stamped({{"dataset", a.dataset},
                             {"n_per_class", a.n_per_class},
                             {"sigma", a.sigma},
                             {"rows", samples.size()},
                             {"standardizer", to_json(Standardizer::fit(pts))}},
                            a.seed);
  write_json(sidecar_path(a.out), side);
  mf.add("samples", a.out);
  mf.add("standardizer", sidecar_path(a.out));
  mf.run.seed = a.seed;
  mf.run.config = {{"dataset", a.dataset}, {"n_per_class", a.n_per_class}, {"sigma", a.sigma}};
}

// ---- train ----

struct TrainArgs {
  std::string dataset = "two-moons";
  std::string data;
  int latent_components = 0;
  std::string class_aware;
  double rotation = 0.0;
  long iters = 30000;
  int batch = 0;
  double lr = 1e-3;
  std::string precision = "single";
  int layers = 8;
  int hidden = 128;
  double clamp = 2.0;
  int n_per_class = 1000;
  double sigma = 0.05;
  std::uint64_t seed = 0;
  std::string out = "model.json";
  std::string loss_out;
};

void run_train(const TrainArgs& a, Manifest& mf) {
  const auto m = make_dataset(a.dataset);
  TrainConfig tc;
  tc.iterations = a.iters;
  tc.batch = a.batch > 0 ? a.batch : default_batch(a.dataset);
  tc.learning_rate = a.lr;
  tc.class_aware = a.class_aware == "true";
  tc.seed = a.seed;
  tc.precision = a.precision == "double" ? Precision::kDouble : Precision::kSingle;
  tc.architecture.num_layers = a.layers;
  tc.architecture.hidden = a.hidden;
  tc.architecture.log_scale_clamp = a.clamp;
  const auto latent = LatentMixture::circular(a.latent_components, a.rotation);

  TrainResult res = [&] {
    try {
      if (!a.data.empty()) return train(read_samples_csv(a.data), tc, latent, a.dataset);
      return train(m, a.n_per_class, a.sigma, tc, latent);
    } catch (const DivergenceError& e) {
      const std::string ck = a.out + ".checkpoint.json";
      save_model(ck, e.checkpoint());
      throw Error(e.code(), std::string(e.what()) + "; last finite checkpoint (iteration " +
                                std::to_string(e.checkpoint_iteration()) + ") saved to " + ck);
    }
  }();
  save_model(a.out, res.model);
  mf.add("model", a.out);
  if (!a.loss_out.empty()) {
    std::string csv = "iteration,loss\n";
    for (std::size_t k = 0; k < res.loss_trace.size(); ++k) {
      csv += std::to_string(k) + "," + format_double(res.loss_trace[k]) + "\n";
    }
    write_text(a.loss_out, csv);
    mf.add("loss", a.loss_out);
  }
  mf.run.seed = a.seed;
  mf.run.config = {{"dataset", a.dataset},
                   {"data", a.data},
                   {"latent_components", a.latent_components},
                   {"class_aware", tc.class_aware},
                   {"rotation", a.rotation},
                   {"iterations", a.iters},
                   {"batch", tc.batch},
                   {"learning_rate", a.lr},
                   {"precision", a.precision}};
}

// ---- levelset ----

struct LevelsetArgs {
  std::string model;
  std::string dataset;
  double sigma = 0.05;
  double lambda = 0.01;
  int grid = 300;
  std::string domain = "-3,3,-3,3";
  int probes = 64;
  std::string field_out = "levelset_field.csv";
  std::string report_out = "levelset_report.json";
};

void run_levelset(const LevelsetArgs& a, std::size_t workers, Manifest& mf) {
  const Domain domain = parse_domain(a.domain);
  Json report;
  std::uint64_t seed = 0;
  if (!a.model.empty()) {
    const FlowModel fm = load_model(a.model);
    seed = fm.metadata().seed;
    const std::string ds = a.dataset.empty() ? fm.metadata().dataset : a.dataset;
    std::optional<DataGeneratingManifold> m;
    if (!ds.empty()) m = make_dataset(ds);
    const auto run = run_levelset_report(fm, a.lambda, domain, a.grid, m ? &*m : nullptr,
                                         a.probes, workers);
    write_field_csv(a.field_out, run.field);
    report = to_json(run.report);
    report["space"] = "standardized";
    report["model"] = a.model;
    if (m) {
      const double delta = failure_threshold(a.sigma, a.lambda);
      report["dataset"] = ds;
      report["delta_lambda"] = delta;
      report["out_of_manifold_cells"] =
          out_of_manifold_cells(run.field, a.lambda, *m, fm.standardizer(), delta, workers);
    }
  } else if (!a.dataset.empty()) {
    const auto m = make_dataset(a.dataset);
    const NoiseModel nm(a.sigma);
    const auto field = rasterize(
        [&](const Point& q) { return extended_density(nm, m, q); }, domain, a.grid, a.grid,
        workers);
    write_field_csv(a.field_out, field);
    report = to_json(check_inclusion_separation(field, a.lambda, m, a.probes));
    report["space"] = "raw";
    report["dataset"] = a.dataset;
    report["sigma"] = a.sigma;
    report["threshold"] = to_json(theorem1_report(nm, m, a.lambda, 512, workers));
  } else {
    throw UsageError("levelset needs --model or --dataset");
  }
  report["grid"] = a.grid;
  report["domain"] = domain_json(domain);
  write_json(a.report_out, stamped(report, seed));
  mf.add("field", a.field_out);
  mf.add("report", a.report_out);
  mf.run.seed = seed;
  mf.run.config = {{"model", a.model},   {"dataset", a.dataset}, {"sigma", a.sigma},
                   {"lambda", a.lambda}, {"grid", a.grid},       {"domain", domain_json(domain)}};
}

// ---- inc ----

struct IncArgs {
  std::string model;
  std::string dataset;
  std::string variant = "ignorant";
  std::vector<std::string> query;
  std::string queries;
  double alpha = 1.0;
  int steps = 100;
  double lr = 0.01;
  int restarts = 0;
  std::uint64_t seed = 0;
  std::string out = "inc_result.json";
  std::string trace_out;
};

void run_inc(const IncArgs& a, std::size_t workers, Manifest& mf) {
  std::vector<Point> raw;
  for (const auto& q : a.query) raw.push_back(parse_point(q, "--query"));
  if (!a.queries.empty()) {
    for (const auto& s : read_samples_csv(a.queries)) raw.push_back(s.point);
  }
  if (raw.empty()) throw UsageError("inc needs --query or --queries");

  IncConfig cfg;
  cfg.alpha = a.alpha;
  cfg.steps = a.steps;
  cfg.learning_rate = a.lr;
  cfg.restarts = a.restarts;
  cfg.seed = a.seed;
  cfg.keep_trace = !a.trace_out.empty();

  std::vector<IncResult> res;
  std::vector<Point> x_raw;
  if (a.variant == "ideal") {
    std::string ds = a.dataset;
    if (ds.empty() && !a.model.empty()) ds = load_model(a.model).metadata().dataset;
    if (ds.empty()) throw UsageError("ideal INC needs --dataset (or a model trained on one)");
    const auto m = make_dataset(ds);
    res = parallel_map<IncResult>(
        raw.size(), [&](std::size_t k) { return project_ideal(m, raw[k]); }, workers);
    for (const auto& r : res) x_raw.push_back(r.x_star);
  } else {
    if (a.model.empty()) throw UsageError(a.variant + " INC needs --model");
    const FlowModel fm = load_model(a.model);
    std::vector<Point> q;
    for (const auto& p : raw) q.push_back(fm.standardizer().apply(p));
    if (a.variant == "aware") {
      const std::string ds = a.dataset.empty() ? fm.metadata().dataset : a.dataset;
      const int classes = ds.empty() ? 0 : make_dataset(ds).num_classes();
      res = project_aware_batch(fm, q, cfg, workers, classes);
    } else {
      res = project_ignorant_batch(fm, q, cfg, workers);
    }
    for (const auto& r : res) x_raw.push_back(fm.standardizer().invert(r.x_star));
  }

  Json out = Json::array();
  for (std::size_t k = 0; k < res.size(); ++k) {
    Json j = to_json(res[k], false);
    j["query"] = {raw[k].x(), raw[k].y()};
    j["x_star_raw"] = {x_raw[k].x(), x_raw[k].y()};
    out.push_back(j);
  }
  write_json(a.out, stamped({{"variant", a.variant},
                             {"model", a.model},
                             {"alpha", a.alpha},
                             {"steps", a.steps},
                             {"learning_rate", a.lr},
                             {"results", out}},
                            a.seed));
  mf.add("inc", a.out);
  if (!a.trace_out.empty()) {
    write_trace_csv(a.trace_out, res.front());
    mf.add("trace", a.trace_out);
  }
  mf.run.seed = a.seed;
  mf.run.config = {{"variant", a.variant}, {"model", a.model}, {"queries", raw.size()}};
}

// ---- bench ----

struct BenchArgs {
  std::string experiment = "projection";
  std::string config;
  std::string dataset;
  std::uint64_t seed = 0;
  double sigma = 0.05;
  double perturbation = 0.2;
  int sources_per_class = 100;
  long iters = 30000;
  double lambda = 0.01;
  int probes = 512;
  std::string model_ignorant;
  std::string model_aware;
  std::string model_dir;
  std::string out = "bench_report.json";
};

FlowModel bench_model(const ExperimentConfig& cfg, const std::string& path, bool aware,
                      const std::string& dir, Manifest& mf) {
  if (!path.empty()) return load_model(path);
  std::cerr << "training " << (aware ? "class-aware" : "class-ignorant") << " " << cfg.dataset
            << " flow (" << cfg.train.iterations << " iterations)\n";
  FlowModel fm = train_experiment(cfg, aware).model;
  if (!dir.empty()) {
    const std::string p = join_path(dir, cfg.dataset + (aware ? "-aware" : "-ignorant") + "-s" +
                                             std::to_string(cfg.seed) + ".json");
    save_model(p, fm);
    mf.add(aware ? "model-aware" : "model-ignorant", p);
  }
  return fm;
}

Json failure_summary(const std::vector<FailureTrace>& traces) {
  std::map<std::string, int> counts = {
      {to_string(FailureTag::kConvergedNearSource), 0},
      {to_string(FailureTag::kWrongManifold), 0},
      {to_string(FailureTag::kOutOfManifold), 0}};
  Json rows = Json::array();
  for (const auto& t : traces) {
    ++counts[to_string(t.tag)];
    rows.push_back({{"tag", to_string(t.tag)},
                    {"source_label", t.source_label},
                    {"projected_label", t.projected_label},
                    {"distance_to_manifold", t.distance_to_manifold},
                    {"objective", t.result.objective}});
  }
  return {{"counts", counts}, {"traces", rows}};
}

void run_bench(const BenchArgs& a, const CLI::App& sub, std::size_t workers, Manifest& mf) {
  ExperimentConfig cfg = a.config.empty() ? ExperimentConfig{}
                                          : experiment_from_json(read_json(a.config));
  if (sub.count("--dataset")) cfg.dataset = a.dataset;
  if (sub.count("--seed")) cfg.seed = a.seed;
  if (sub.count("--sigma")) cfg.sigma = a.sigma;
  if (sub.count("--perturbation")) cfg.perturbation = a.perturbation;
  if (sub.count("--sources-per-class")) cfg.sources_per_class = a.sources_per_class;
  if (sub.count("--iters")) cfg.train.iterations = a.iters;
  cfg.inc.seed = cfg.seed;
  cfg.validate();
  if (!a.config.empty()) mf.add("config", a.config);
  const auto m = make_dataset(cfg.dataset);

  Json report;
  if (a.experiment == "threshold") {
    report = to_json(theorem1_report(NoiseModel(cfg.sigma), m, a.lambda, a.probes, workers));
  } else if (a.experiment == "projection") {
    const auto ign = bench_model(cfg, a.model_ignorant, false, a.model_dir, mf);
    const auto aw = bench_model(cfg, a.model_aware, true, a.model_dir, mf);
    const auto [ri, ra] = run_projection_bench(cfg, ign, aw, workers);
    report = {{"ignorant", to_json(ri)},
              {"aware", to_json(ra)},
              {"ratio", ri.mean_error > 0.0 ? ra.mean_error / ri.mean_error : 0.0}};
  } else {
    const auto ign = bench_model(cfg, a.model_ignorant, false, a.model_dir, mf);
    const auto aw = bench_model(cfg, a.model_aware, true, a.model_dir, mf);
    const auto queries = bench_queries(m, cfg.sources_per_class, cfg.perturbation, cfg.seed);
    const double delta = failure_threshold(cfg.sigma, a.lambda);
    IncConfig single = cfg.inc;
    single.restarts = 1;
    single.keep_trace = false;
    IncConfig multi = cfg.inc;
    multi.keep_trace = false;
    report = {{"delta_lambda", delta},
              {"queries", queries.size()},
              {"ignorant", failure_summary(capture_failure_traces(ign, m, queries, single, delta,
                                                                  false, workers))},
              {"aware", failure_summary(capture_failure_traces(aw, m, queries, multi, delta, true,
                                                               workers))}};
  }
  report["experiment"] = a.experiment;
  report["config"] = to_json(cfg);
  write_json(a.out, stamped(report, cfg.seed));
  mf.add("report", a.out);
  mf.run.seed = cfg.seed;
  mf.run.config = to_json(cfg);
}

// ---- boundary ----

struct BoundaryArgs {
  std::string dataset;
  std::string model_ignorant;
  std::string model_aware;
  std::vector<std::string> defense;
  int grid = kDefaultBoundaryGrid;
  std::string domain = "-3,3,-3,3";
  std::string data;
  int n_per_class = 1000;
  double sigma = 0.05;
  std::uint64_t seed = 0;
  double gamma = 100.0;
  double c_reg = 1.0;
  double alpha = 1.0;
  int steps = 100;
  double lr = 0.01;
  std::string out_dir = ".";
};

void run_boundary(const BoundaryArgs& a, std::size_t workers, Manifest& mf) {
  const Domain domain = parse_domain(a.domain);
  if (a.grid > kDefaultBoundaryGrid) {
    std::cerr << "warning: --grid " << a.grid << " runs " << a.grid * a.grid
              << " INC projections per defense\n";
  }
  const auto m = make_dataset(a.dataset);
  const auto data = a.data.empty() ? training_data(m, a.n_per_class, a.sigma, a.seed)
                                   : read_samples_csv(a.data);
  SvmConfig sc;
  sc.gamma = a.gamma;
  sc.c_reg = a.c_reg;
  const auto svm = svm_train(data, sc);

  std::optional<FlowModel> ign;
  std::optional<FlowModel> aw;
  if (!a.model_ignorant.empty()) ign = load_model(a.model_ignorant);
  if (!a.model_aware.empty()) aw = load_model(a.model_aware);

  std::vector<std::string> defenses = a.defense;
  if (defenses.empty()) {
    defenses = {"none", "ideal"};
    if (ign) defenses.push_back("ignorant");
    if (aw) defenses.push_back("aware");
  }
  BoundaryContext ctx;
  ctx.manifold = &m;
  ctx.ignorant = ign ? &*ign : nullptr;
  ctx.aware = aw ? &*aw : nullptr;
  ctx.inc.alpha = a.alpha;
  ctx.inc.steps = a.steps;
  ctx.inc.learning_rate = a.lr;
  ctx.inc.seed = a.seed;
  ctx.inc.keep_trace = false;

  std::map<std::string, BoundaryGrid> grids;
  for (const auto& name : defenses) {
    if (grids.count(name)) continue;
    auto g = boundary_eval(svm, defense_from_string(name), ctx, domain, a.grid, workers);
    const std::string csv = join_path(a.out_dir, "boundary_" + name + ".csv");
    write_boundary_csv(csv, g);
    write_json(sidecar_path(csv), stamped(to_json(g), a.seed));
    mf.add("boundary-" + name, csv);
    mf.add("boundary-" + name + "-meta", sidecar_path(csv));
    grids.emplace(name, std::move(g));
  }
  Json agree = Json::object();
  if (grids.count("ideal")) {
    for (const auto& [name, g] : grids) agree[name] = agreement(g, grids.at("ideal"));
  }
  const std::string summary = join_path(a.out_dir, "boundary_summary.json");
  write_json(summary, stamped({{"dataset", a.dataset},
                               {"grid", a.grid},
                               {"domain", domain_json(domain)},
                               {"svm_training_accuracy", training_accuracy(svm, data)},
                               {"agreement_with_ideal", agree}},
                              a.seed));
  mf.add("summary", summary);
  mf.run.seed = a.seed;
  mf.run.config = {{"dataset", a.dataset}, {"grid", a.grid}, {"defenses", defenses}};
}

// ---- plot ----

struct PlotArgs {
  std::string kind;
  std::string samples;
  std::string field;
  double lambda = 0.01;
  std::vector<std::string> trace;
  std::string boundary;
  double point_size = 0.0;
  std::string out = "plot.svg";
};

std::vector<Point> read_trace_points(const std::string& path) {
  std::stringstream in(read_text(path));
  std::string line;
  if (!std::getline(in, line) || line.rfind("step,z1,z2,x1,x2", 0) != 0) {
    throw Error("parse-error", path + ": missing trace header");
  }
  std::vector<Point> pts;
  int row = 1;
  while (std::getline(in, line)) {
    ++row;
    if (line.empty()) continue;
    std::vector<std::string> cols;
    std::stringstream ls(line);
    std::string c;
    while (std::getline(ls, c, ',')) cols.push_back(c);
    try {
      if (cols.size() < 5) throw std::invalid_argument("columns");
      pts.emplace_back(std::stod(cols[3]), std::stod(cols[4]));
    } catch (const std::exception&) {
      throw Error("parse-error", path + ": bad trace row " + std::to_string(row));
    }
  }
  return pts;
}

std::string ramp(double t) {
  // White to dark blue in 32 steps.
  const double q = std::floor(std::clamp(t, 0.0, 1.0) * 31.0 + 0.5) / 31.0;
  char buf[8];
  std::snprintf(buf, sizeof buf, "#%02x%02x%02x", static_cast<int>(255 - q * (255 - 8)),
                static_cast<int>(255 - q * (255 - 48)), static_cast<int>(255 - q * (255 - 107)));
  return buf;
}

void add_samples(cli::SvgPlot& plot, const std::vector<LabeledSample>& s, double radius) {
  std::map<int, std::vector<Point>> by_class;
  for (const auto& x : s) by_class[x.label].push_back(x.point);
  for (const auto& [label, pts] : by_class) {
    plot.scatter("class-" + std::to_string(label), cli::class_color(label), pts, radius);
  }
}

void run_plot(const PlotArgs& a, Manifest& mf) {
  auto need = [&](const std::string& v, const std::string& f) {
    if (v.empty()) throw UsageError("--kind " + a.kind + " needs " + f);
  };
  std::vector<LabeledSample> samples;
  if (!a.samples.empty()) samples = read_samples_csv(a.samples);
  auto scale_of = [&](const Domain& d) {
    const double span = std::max(d.x_hi - d.x_lo, d.y_hi - d.y_lo);
    return std::pair{a.point_size > 0.0 ? a.point_size : 0.005 * span, 0.003 * span};
  };

  std::string svg;
  if (a.kind == "scatter") {
    need(a.samples, "--samples");
    std::vector<Point> pts;
    for (const auto& s : samples) pts.push_back(s.point);
    const Domain d = cli::padded_bounds(pts, 0.05);
    cli::SvgPlot plot(d.x_lo, d.x_hi, d.y_lo, d.y_hi);
    add_samples(plot, samples, scale_of(d).first);
    svg = plot.str();
  } else if (a.kind == "field-heatmap" || a.kind == "levelset-outline") {
    need(a.field, "--field");
    const ScalarField f = read_field_csv(a.field);
    const Domain& d = f.domain();
    const auto [radius, width] = scale_of(d);
    cli::SvgPlot plot(d.x_lo, d.x_hi, d.y_lo, d.y_hi);
    if (a.kind == "field-heatmap") {
      const double top = *std::max_element(f.values().begin(), f.values().end());
      std::vector<std::string> fills;
      for (double v : f.values()) fills.push_back(top > 0.0 ? ramp(v / top) : ramp(0.0));
      plot.cells("density", f, fills, 1.0);
    } else {
      plot.segments("level " + format_double(a.lambda), "black",
                    cli::marching_squares(f, a.lambda), width);
    }
    add_samples(plot, samples, radius);
    svg = plot.str();
  } else if (a.kind == "trace") {
    if (a.trace.empty()) throw UsageError("--kind trace needs --trace");
    std::vector<std::vector<Point>> traces;
    std::vector<Point> all;
    for (const auto& t : a.trace) {
      traces.push_back(read_trace_points(t));
      all.insert(all.end(), traces.back().begin(), traces.back().end());
    }
    for (const auto& s : samples) all.push_back(s.point);
    const Domain d = cli::padded_bounds(all, 0.05);
    const auto [radius, width] = scale_of(d);
    cli::SvgPlot plot(d.x_lo, d.x_hi, d.y_lo, d.y_hi);
    add_samples(plot, samples, radius);
    for (std::size_t k = 0; k < traces.size(); ++k) {
      plot.polyline("trace " + a.trace[k], cli::class_color(static_cast<int>(k)), traces[k],
                    width, 2.0 * radius);
    }
    svg = plot.str();
  } else {
    need(a.boundary, "--boundary");
    const BoundaryGrid g = parse_boundary_csv(read_text(a.boundary));
    const ScalarField shape(g.domain, g.nx, g.ny,
                            std::vector<double>(static_cast<std::size_t>(g.nx) * g.ny, 0.0));
    cli::SvgPlot plot(g.domain.x_lo, g.domain.x_hi, g.domain.y_lo, g.domain.y_hi);
    for (int label : std::set<int>(g.labels.begin(), g.labels.end())) {
      std::vector<std::string> fills;
      for (int v : g.labels) fills.push_back(v == label ? cli::class_color(label) : "");
      plot.cells("class-" + std::to_string(label), shape, fills, 0.35);
    }
    add_samples(plot, samples, scale_of(g.domain).first);
    svg = plot.str();
  }
  write_text(a.out, svg);
  mf.add("svg", a.out);
  mf.run.config = {{"kind", a.kind}};
}

void print_error(const std::string& code, const std::string& message) {
  std::cerr << Json{{"error", {{"code", code}, {"message", message}}}}.dump() << "\n";
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app("Topology-aware flow training and Invert-and-Classify projection on 2D toy "
               "manifolds.",
               "topoinc");
  app.option_defaults()->always_capture_default();
  app.require_subcommand(1);
  app.fallthrough();
  app.set_version_flag("--version", std::string(kVersion));

  std::size_t workers = 0;
  std::string manifest;
  flag(&app, "--workers", workers, "Worker threads for parallel maps (0: hardware)");
  flag(&app, "--manifest", manifest, "Write a run manifest listing every artifact to this path");

  GenArgs gen;
  auto* g = app.add_subcommand("gen", "Sample a noisy dataset to CSV with a standardizer sidecar");
  flag(g, "--dataset", gen.dataset, "Dataset id: two-moons, spirals, circles or segments");
  flag(g, "--n-per-class", gen.n_per_class, "Points per class")
      ->check(CLI::PositiveNumber);
  flag(g, "--sigma", gen.sigma, "Gaussian noise std")->check(CLI::NonNegativeNumber);
  flag(g, "--seed", gen.seed, "Master seed");
  flag(g, "--out", gen.out, "Output CSV (x1,x2,label,u)");

  TrainArgs tr;
  auto* t = app.add_subcommand("train", "Train a Real NVP flow and write a checkpoint");
  flag(t, "--dataset", tr.dataset, "Dataset id: two-moons, spirals, circles or segments");
  flag(t, "--data", tr.data, "Train on this samples CSV instead of a fresh draw");
  flag(t, "--latent-components", tr.latent_components, "Latent mixture components")
      ->required()
      ->check(CLI::PositiveNumber);
  flag(t, "--class-aware", tr.class_aware, "Per-class likelihood (true/false)")
      ->required()
      ->check(CLI::IsMember({"true", "false"}));
  flag(t, "--rotation", tr.rotation, "Rotation of the latent mixture (radians)");
  flag(t, "--iters", tr.iters, "Adam iterations")->check(CLI::NonNegativeNumber);
  flag(t, "--batch", tr.batch, "Batch size (0: dataset default)")->check(CLI::NonNegativeNumber);
  flag(t, "--lr", tr.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  flag(t, "--precision", tr.precision, "Training arithmetic")
      ->check(CLI::IsMember({"single", "double"}));
  flag(t, "--layers", tr.layers, "Coupling layers")->check(CLI::PositiveNumber);
  flag(t, "--hidden", tr.hidden, "Hidden units per coupling MLP layer")
      ->check(CLI::PositiveNumber);
  flag(t, "--clamp", tr.clamp, "Log-scale clamp")->check(CLI::PositiveNumber);
  flag(t, "--n-per-class", tr.n_per_class, "Training points per class")
      ->check(CLI::PositiveNumber);
  flag(t, "--sigma", tr.sigma, "Training noise std")->check(CLI::NonNegativeNumber);
  flag(t, "--seed", tr.seed, "Master seed");
  flag(t, "--out", tr.out, "Checkpoint JSON");
  flag(t, "--loss-out", tr.loss_out, "Optional loss trace CSV");

  LevelsetArgs ls;
  auto* l = app.add_subcommand(
      "levelset", "Rasterize a density and count superlevel-set components and holes");
  flag(l, "--model", ls.model, "Flow checkpoint (field in its standardized space)");
  flag(l, "--dataset", ls.dataset, "Dataset id; alone, uses the exact extended density")
      ;
  flag(l, "--sigma", ls.sigma, "Noise std for the extended density and delta")
      ->check(CLI::PositiveNumber);
  flag(l, "--lambda", ls.lambda, "Density threshold")->check(CLI::PositiveNumber);
  flag(l, "--grid", ls.grid, "Cells per axis")->check(CLI::Range(2, 4000));
  flag(l, "--domain", ls.domain, "x_lo,x_hi,y_lo,y_hi");
  flag(l, "--probes", ls.probes, "Manifold probes per class")->check(CLI::PositiveNumber);
  flag(l, "--field-out", ls.field_out, "Field CSV");
  flag(l, "--report-out", ls.report_out, "Report JSON");

  IncArgs ia;
  auto* i = app.add_subcommand("inc", "Project queries with Invert-and-Classify");
  flag(i, "--model", ia.model, "Flow checkpoint");
  flag(i, "--dataset", ia.dataset, "Dataset id (ideal projection, class count)")
      ;
  flag(i, "--variant", ia.variant, "Projection")
      ->check(CLI::IsMember({"ideal", "ignorant", "aware"}));
  flag(i, "--query", ia.query, "Raw query point x,y (repeatable)");
  flag(i, "--queries", ia.queries, "Samples CSV of raw query points");
  flag(i, "--alpha", ia.alpha, "Latent density regularizer weight")
      ->check(CLI::NonNegativeNumber);
  flag(i, "--steps", ia.steps, "Adam steps")->check(CLI::NonNegativeNumber);
  flag(i, "--lr", ia.lr, "Adam learning rate")->check(CLI::PositiveNumber);
  flag(i, "--restarts", ia.restarts, "Class-ignorant starts (0: class count)")
      ->check(CLI::NonNegativeNumber);
  flag(i, "--seed", ia.seed, "Master seed");
  flag(i, "--out", ia.out, "Result JSON");
  flag(i, "--trace-out", ia.trace_out, "Trace CSV of the first query");

  BenchArgs ba;
  auto* b = app.add_subcommand("bench", "Run a benchmark experiment");
  flag(b, "--experiment", ba.experiment, "Experiment")
      ->check(CLI::IsMember({"projection", "threshold", "failures"}));
  flag(b, "--config", ba.config, "Experiment config JSON; the flags below override it");
  flag(b, "--dataset", ba.dataset, "Dataset id: two-moons, spirals, circles or segments");
  flag(b, "--seed", ba.seed, "Master seed");
  flag(b, "--sigma", ba.sigma, "Noise std")->check(CLI::PositiveNumber);
  flag(b, "--perturbation", ba.perturbation, "Normal perturbation r")
      ->check(CLI::NonNegativeNumber);
  flag(b, "--sources-per-class", ba.sources_per_class, "Source points per class")
      ->check(CLI::PositiveNumber);
  flag(b, "--iters", ba.iters, "Training iterations when a model is trained")
      ->check(CLI::NonNegativeNumber);
  flag(b, "--lambda", ba.lambda, "Density threshold")->check(CLI::PositiveNumber);
  flag(b, "--probes", ba.probes, "Threshold probes")->check(CLI::PositiveNumber);
  flag(b, "--model-ignorant", ba.model_ignorant, "Class-ignorant checkpoint (else trained)");
  flag(b, "--model-aware", ba.model_aware, "Class-aware checkpoint (else trained)");
  flag(b, "--model-dir", ba.model_dir, "Save trained models here");
  flag(b, "--out", ba.out, "Report JSON");

  BoundaryArgs bd;
  auto* d = app.add_subcommand("boundary", "Label a grid with an SVM behind each defense");
  flag(d, "--dataset", bd.dataset, "Dataset id: two-moons, spirals, circles or segments")->required();
  flag(d, "--model-ignorant", bd.model_ignorant, "Class-ignorant checkpoint");
  flag(d, "--model-aware", bd.model_aware, "Class-aware checkpoint");
  flag(d, "--defense", bd.defense, "Defenses (repeatable; default: all with models)")
      ->check(CLI::IsMember({"none", "ideal", "ignorant", "aware"}));
  flag(d, "--grid", bd.grid, "Cells per axis")->check(CLI::Range(2, kMaxBoundaryGrid));
  flag(d, "--domain", bd.domain, "x_lo,x_hi,y_lo,y_hi");
  flag(d, "--data", bd.data, "SVM training CSV instead of a fresh draw");
  flag(d, "--n-per-class", bd.n_per_class, "SVM training points per class")
      ->check(CLI::PositiveNumber);
  flag(d, "--sigma", bd.sigma, "SVM training noise std")->check(CLI::NonNegativeNumber);
  flag(d, "--seed", bd.seed, "Master seed");
  flag(d, "--gamma", bd.gamma, "RBF kernel gamma")->check(CLI::PositiveNumber);
  flag(d, "--c", bd.c_reg, "SVM box constraint")->check(CLI::PositiveNumber);
  flag(d, "--alpha", bd.alpha, "INC regularizer weight")->check(CLI::NonNegativeNumber);
  flag(d, "--steps", bd.steps, "INC Adam steps")->check(CLI::NonNegativeNumber);
  flag(d, "--lr", bd.lr, "INC learning rate")->check(CLI::PositiveNumber);
  flag(d, "--out-dir", bd.out_dir, "Output directory");

  PlotArgs pa;
  auto* p = app.add_subcommand("plot", "Render an SVG plot");
  flag(p, "--kind", pa.kind, "Plot kind")
      ->required()
      ->check(CLI::IsMember({"scatter", "field-heatmap", "levelset-outline", "trace", "boundary"}));
  flag(p, "--samples", pa.samples, "Samples CSV (scatter, or overlay)");
  flag(p, "--field", pa.field, "Field CSV");
  flag(p, "--lambda", pa.lambda, "Outline level")->check(CLI::PositiveNumber);
  flag(p, "--trace", pa.trace, "Trace CSV (repeatable)");
  flag(p, "--boundary", pa.boundary, "Boundary CSV");
  flag(p, "--point-size", pa.point_size, "Marker radius in data units (0: auto)")
      ->check(CLI::NonNegativeNumber);
  flag(p, "--out", pa.out, "SVG output");

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    const int rc = app.exit(e);
    return rc == 0 ? 0 : 2;
  }

  Manifest mf;
  try {
    if (workers > 0) set_default_workers(workers);
    if (g->parsed()) {
      mf.run.command = "gen";
      run_gen(gen, mf);
    } else if (t->parsed()) {
      mf.run.command = "train";
      run_train(tr, mf);
    } else if (l->parsed()) {
      mf.run.command = "levelset";
      run_levelset(ls, workers, mf);
    } else if (i->parsed()) {
      mf.run.command = "inc";
      run_inc(ia, workers, mf);
    } else if (b->parsed()) {
      mf.run.command = "bench";
      run_bench(ba, *b, workers, mf);
    } else if (d->parsed()) {
      mf.run.command = "boundary";
      run_boundary(bd, workers, mf);
    } else {
      mf.run.command = "plot";
      run_plot(pa, mf);
    }
    if (!manifest.empty()) write_json(manifest, to_json(mf.run));
  } catch (const UsageError& e) {
    std::cerr << e.what() << "\nRun with --help for more information.\n";
    return 2;
  } catch (const Error& e) {
    print_error(e.code(), e.what());
    return 1;
  } catch (const std::exception& e) {
    print_error("internal-error", e.what());
    return 1;
  }
  return 0;
}
