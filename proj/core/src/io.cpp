#include "topoinc/io.hpp"

#include <cmath>
#include <cstdio>
#include <cstdlib>
#include <fstream>
#include <sstream>
#include <tuple>

#include "topoinc/error.hpp"

namespace topoinc {

std::string format_double(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

void write_text(const std::string& path, const std::string& text) {
  std::ofstream out(path, std::ios::binary);
  if (!out) throw Error("io-error", "cannot open '" + path + "' for writing");
  out << text;
  if (!out) throw Error("io-error", "failed writing '" + path + "'");
}

std::string read_text(const std::string& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error("io-error", "cannot open '" + path + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_json(const std::string& path, const Json& j) { write_text(path, j.dump(2) + "\n"); }

Json read_json(const std::string& path) {
  try {
    return Json::parse(read_text(path));
  } catch (const Json::exception& e) {
    throw Error("parse-error", "invalid JSON in '" + path + "': " + e.what());
  }
}

namespace {

std::vector<std::string> split(const std::string& line, char sep) {
  std::vector<std::string> out;
  std::string cur;
  std::istringstream ss(line);
  while (std::getline(ss, cur, sep)) out.push_back(cur);
  return out;
}

double to_double(const std::string& s) {
  // strtod rather than stod: subnormal densities set ERANGE but are valid.
  char* end = nullptr;
  const double v = s.empty() ? 0.0 : std::strtod(s.c_str(), &end);
  if (s.empty() || end != s.c_str() + s.size() || std::isinf(v)) {
    throw Error("parse-error", "bad number '" + s + "'");
  }
  return v;
}

int to_int(const std::string& s) {
  const double v = to_double(s);
  if (v != static_cast<int>(v)) throw Error("parse-error", "bad integer '" + s + "'");
  return static_cast<int>(v);
}

std::vector<std::string> lines_of(const std::string& text) {
  std::vector<std::string> out;
  std::istringstream ss(text);
  std::string line;
  while (std::getline(ss, line)) {
    if (!line.empty() && line.back() == '\r') line.pop_back();
    if (!line.empty()) out.push_back(line);
  }
  return out;
}

std::string grid_header(const Domain& d, int nx, int ny) {
  return "# domain " + format_double(d.x_lo) + " " + format_double(d.x_hi) + " " +
         format_double(d.y_lo) + " " + format_double(d.y_hi) + " " + std::to_string(nx) + " " +
         std::to_string(ny) + "\n";
}

// Returns (domain, nx, ny) and the remaining rows.
std::tuple<Domain, int, int, std::vector<std::vector<std::string>>> parse_grid(
    const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error("parse-error", "empty grid file");
  std::istringstream hs(lines[0]);
  std::string hash, word;
  Domain d;
  int nx = 0;
  int ny = 0;
  if (!(hs >> hash >> word >> d.x_lo >> d.x_hi >> d.y_lo >> d.y_hi >> nx >> ny) || hash != "#" ||
      word != "domain") {
    throw Error("parse-error", "grid header must be '# domain x_lo x_hi y_lo y_hi nx ny'");
  }
  if (static_cast<int>(lines.size()) - 1 != ny) {
    throw Error("parse-error", "grid row count does not match header");
  }
  std::vector<std::vector<std::string>> rows;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    rows.push_back(split(lines[r], ','));
    if (static_cast<int>(rows.back().size()) != nx) {
      throw Error("parse-error", "grid column count does not match header");
    }
  }
  return {d, nx, ny, rows};
}

Json point_json(const Point& p) { return Json::array({p.x(), p.y()}); }

Point point_from(const Json& j) { return {j.at(0).get<double>(), j.at(1).get<double>()}; }

template <typename M>
Json block_json(const M& m) {
  return Json(std::vector<double>(m.data(), m.data() + m.size()));
}

template <typename M>
void block_from(const Json& j, M& m) {
  const auto v = j.get<std::vector<double>>();
  if (static_cast<Eigen::Index>(v.size()) != m.size()) {
    throw Error("parse-error", "parameter block size mismatch");
  }
  std::copy(v.begin(), v.end(), m.data());
}

}  // namespace

std::string samples_csv(const std::vector<LabeledSample>& samples, bool with_param) {
  std::string out = with_param ? "x1,x2,label,u\n" : "x1,x2,label\n";
  for (const auto& s : samples) {
    out += format_double(s.point.x()) + "," + format_double(s.point.y()) + "," +
           std::to_string(s.label);
    if (with_param) out += "," + format_double(s.param);
    out += "\n";
  }
  return out;
}

void write_samples_csv(const std::string& path, const std::vector<LabeledSample>& samples,
                       bool with_param) {
  write_text(path, samples_csv(samples, with_param));
}

std::vector<LabeledSample> parse_samples_csv(const std::string& text) {
  const auto lines = lines_of(text);
  if (lines.empty()) throw Error("parse-error", "empty sample file");
  const auto header = split(lines[0], ',');
  const bool with_param = header.size() == 4 && header[3] == "u";
  if (header.size() < 3 || header[0] != "x1" || header[1] != "x2" || header[2] != "label") {
    throw Error("parse-error", "sample header must be x1,x2,label[,u]");
  }
  std::vector<LabeledSample> out;
  for (std::size_t r = 1; r < lines.size(); ++r) {
    const auto f = split(lines[r], ',');
    if (f.size() != header.size()) throw Error("parse-error", "bad sample row " + lines[r]);
    LabeledSample s;
    s.point = Point(to_double(f[0]), to_double(f[1]));
    s.label = to_int(f[2]);
    if (with_param) s.param = to_double(f[3]);
    out.push_back(s);
  }
  return out;
}

std::vector<LabeledSample> read_samples_csv(const std::string& path) {
  return parse_samples_csv(read_text(path));
}

std::string field_csv(const ScalarField& f) {
  std::string out = grid_header(f.domain(), f.nx(), f.ny());
  for (int j = 0; j < f.ny(); ++j) {
    for (int i = 0; i < f.nx(); ++i) {
      if (i) out += ',';
      out += format_double(f.at(i, j));
    }
    out += '\n';
  }
  return out;
}

void write_field_csv(const std::string& path, const ScalarField& f) {
  write_text(path, field_csv(f));
}

ScalarField parse_field_csv(const std::string& text) {
  auto [d, nx, ny, rows] = parse_grid(text);
  std::vector<double> values;
  values.reserve(static_cast<std::size_t>(nx) * ny);
  for (const auto& row : rows) {
    for (const auto& v : row) values.push_back(to_double(v));
  }
  return ScalarField(d, nx, ny, std::move(values));
}

ScalarField read_field_csv(const std::string& path) { return parse_field_csv(read_text(path)); }

std::string trace_csv(const IncResult& r) {
  std::string out = "step,z1,z2,x1,x2,objective\n";
  for (std::size_t s = 0; s < r.trace.size(); ++s) {
    const auto& t = r.trace[s];
    out += std::to_string(s) + "," + format_double(t.z.x()) + "," + format_double(t.z.y()) + "," +
           format_double(t.x.x()) + "," + format_double(t.x.y()) + "," +
           format_double(t.objective) + "\n";
  }
  return out;
}

void write_trace_csv(const std::string& path, const IncResult& r) {
  write_text(path, trace_csv(r));
}

std::string boundary_csv(const BoundaryGrid& g) {
  std::string out = grid_header(g.domain, g.nx, g.ny);
  for (int j = 0; j < g.ny; ++j) {
    for (int i = 0; i < g.nx; ++i) {
      if (i) out += ',';
      out += std::to_string(g.labels[static_cast<std::size_t>(j) * g.nx + i]);
    }
    out += '\n';
  }
  return out;
}

void write_boundary_csv(const std::string& path, const BoundaryGrid& g) {
  write_text(path, boundary_csv(g));
}

BoundaryGrid parse_boundary_csv(const std::string& text) {
  auto [d, nx, ny, rows] = parse_grid(text);
  BoundaryGrid g;
  g.domain = d;
  g.nx = nx;
  g.ny = ny;
  for (const auto& row : rows) {
    for (const auto& v : row) g.labels.push_back(to_int(v));
  }
  return g;
}

Json to_json(const BoundaryGrid& g) {
  int max_label = -1;
  for (int l : g.labels) max_label = std::max(max_label, l);
  return {{"defense", to_string(g.defense)},
          {"domain", {g.domain.x_lo, g.domain.x_hi, g.domain.y_lo, g.domain.y_hi}},
          {"nx", g.nx},
          {"ny", g.ny},
          {"num_labels", max_label + 1}};
}

Json to_json(const Standardizer& s) {
  return {{"mean", point_json(s.mean)}, {"scale", point_json(s.scale)}};
}

Standardizer standardizer_from_json(const Json& j) {
  Standardizer s;
  s.mean = point_from(j.at("mean"));
  s.scale = point_from(j.at("scale"));
  return s;
}

Json to_json(const LatentMixture& lm) {
  Json comps = Json::array();
  for (const auto& c : lm.components()) {
    comps.push_back({{"mean", point_json(c.mean)}, {"sigma", c.sigma}, {"weight", c.weight}});
  }
  return {{"components", comps}};
}

LatentMixture latent_from_json(const Json& j) {
  std::vector<GaussianComponent> comps;
  for (const auto& c : j.at("components")) {
    comps.push_back({point_from(c.at("mean")), c.at("sigma").get<double>(),
                     c.at("weight").get<double>()});
  }
  return LatentMixture(std::move(comps));
}

Json to_json(const ThresholdReport& r) {
  return {{"sigma", r.sigma},
          {"lambda", r.lambda},
          {"eps_lambda", r.eps_lambda},
          {"delta_lambda", r.delta_lambda},
          {"omega_eps", r.omega_eps},
          {"lambda_star", r.lambda_star},
          {"delta_star", r.delta_star},
          {"d_cw", r.d_cw},
          {"precondition_holds", r.precondition_holds},
          {"floor_probes", r.floor_probes},
          {"floor_min_density", r.floor_min_density},
          {"floor_holds", r.floor_holds},
          {"ceiling_probes", r.ceiling_probes},
          {"ceiling_max_density", r.ceiling_max_density},
          {"ceiling_holds", r.ceiling_holds}};
}

Json to_json(const LevelSetReport& r) {
  Json comp = Json::array();
  for (const auto& c : r.component_of_class) comp.push_back(c ? Json(*c) : Json(nullptr));
  return {{"lambda", r.lambda},
          {"min_component_area", r.min_component_area},
          {"n_components", r.n_components},
          {"n_components_raw", r.n_components_raw},
          {"n_holes", r.n_holes},
          {"n_holes_raw", r.n_holes_raw},
          {"includes_manifold", r.includes_manifold},
          {"separates_classes", r.separates_classes},
          {"component_of_class", comp}};
}

Json to_json(const IncResult& r, bool with_trace) {
  Json j = {{"variant", to_string(r.variant)},
            {"x_star", point_json(r.x_star)},
            {"z_star", point_json(r.z_star)},
            {"objective", r.objective},
            {"chosen_start", r.chosen_start},
            {"trace_length", r.trace.size()}};
  if (!r.candidate_distances.empty()) j["candidate_distances"] = r.candidate_distances;
  if (with_trace) {
    Json t = Json::array();
    for (const auto& s : r.trace) {
      t.push_back({{"z", point_json(s.z)}, {"x", point_json(s.x)}, {"objective", s.objective}});
    }
    j["trace"] = t;
  }
  return j;
}

Json to_json(const MonotonicityProbe& p) {
  return {{"densities", p.densities},
          {"nondecreasing", p.nondecreasing},
          {"nearest", point_json(p.nearest)}};
}

Json to_json(const FlowModel& fm) {
  const auto& a = fm.architecture();
  Json layers = Json::array();
  for (const auto& l : fm.layers()) {
    layers.push_back({{"conditioned_index", l.conditioned_index},
                      {"w1", block_json(l.net.w1)},
                      {"b1", block_json(l.net.b1)},
                      {"w2", block_json(l.net.w2)},
                      {"b2", block_json(l.net.b2)},
                      {"w3", block_json(l.net.w3)},
                      {"b3", block_json(l.net.b3)}});
  }
  const auto& m = fm.metadata();
  Json meta = {{"dataset", m.dataset},
               {"seed", m.seed},
               {"iterations", m.iterations},
               {"class_aware", m.class_aware}};
  meta["final_loss"] = std::isfinite(m.final_loss) ? Json(m.final_loss) : Json(nullptr);
  return {{"format", "topoinc-flow"},
          {"version", 1},
          {"architecture",
           {{"layers", a.num_layers},
            {"hidden", a.hidden},
            {"log_scale_clamp", a.log_scale_clamp},
            {"activation", "relu"}}},
          {"standardizer", to_json(fm.standardizer())},
          {"latent", to_json(fm.latent())},
          {"layers", layers},
          {"metadata", meta}};
}

FlowModel model_from_json(const Json& j) {
  try {
    if (j.at("format").get<std::string>() != "topoinc-flow") {
      throw Error("parse-error", "not a flow checkpoint");
    }
    FlowArchitecture a;
    a.num_layers = j.at("architecture").at("layers").get<int>();
    a.hidden = j.at("architecture").at("hidden").get<int>();
    a.log_scale_clamp = j.at("architecture").at("log_scale_clamp").get<double>();
    FlowModel fm(a, latent_from_json(j.at("latent")), standardizer_from_json(j.at("standardizer")));
    const auto& layers = j.at("layers");
    if (static_cast<int>(layers.size()) != a.num_layers) {
      throw Error("parse-error", "layer count mismatch");
    }
    for (int k = 0; k < a.num_layers; ++k) {
      const auto& lj = layers.at(static_cast<std::size_t>(k));
      auto& l = fm.layers()[static_cast<std::size_t>(k)];
      l.conditioned_index = lj.at("conditioned_index").get<int>();
      block_from(lj.at("w1"), l.net.w1);
      block_from(lj.at("b1"), l.net.b1);
      block_from(lj.at("w2"), l.net.w2);
      block_from(lj.at("b2"), l.net.b2);
      block_from(lj.at("w3"), l.net.w3);
      block_from(lj.at("b3"), l.net.b3);
    }
    const auto& meta = j.at("metadata");
    fm.metadata().dataset = meta.at("dataset").get<std::string>();
    fm.metadata().seed = meta.at("seed").get<std::uint64_t>();
    fm.metadata().iterations = meta.at("iterations").get<long>();
    fm.metadata().class_aware = meta.at("class_aware").get<bool>();
    if (meta.contains("final_loss") && !meta.at("final_loss").is_null()) {
      fm.metadata().final_loss = meta.at("final_loss").get<double>();
    }
    return fm;
  } catch (const Json::exception& e) {
    throw Error("parse-error", std::string("malformed checkpoint: ") + e.what());
  }
}

void save_model(const std::string& path, const FlowModel& fm) { write_json(path, to_json(fm)); }

FlowModel load_model(const std::string& path) { return model_from_json(read_json(path)); }

}  // namespace topoinc
