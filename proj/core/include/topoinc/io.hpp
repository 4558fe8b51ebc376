#pragma once

#include <string>
#include <vector>

#include "json.hpp"
#include "topoinc/baseline.hpp"
#include "topoinc/flow.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/noise_density.hpp"
#include "topoinc/topo_field.hpp"

namespace topoinc {

using Json = nlohmann::json;

// 17 significant digits, round-trips every finite double.
std::string format_double(double v);

// Errors: Error("io-error") for unreadable/unwritable files,
// Error("parse-error") for malformed content.
void write_text(const std::string& path, const std::string& text);
std::string read_text(const std::string& path);
void write_json(const std::string& path, const Json& j);
Json read_json(const std::string& path);

// Header x1,x2,label[,u].
std::string samples_csv(const std::vector<LabeledSample>& samples, bool with_param);
void write_samples_csv(const std::string& path, const std::vector<LabeledSample>& samples,
                       bool with_param);
std::vector<LabeledSample> parse_samples_csv(const std::string& text);
std::vector<LabeledSample> read_samples_csv(const std::string& path);

// "# domain x_lo x_hi y_lo y_hi nx ny" then ny rows of nx values (j = 0 first).
std::string field_csv(const ScalarField& f);
void write_field_csv(const std::string& path, const ScalarField& f);
ScalarField parse_field_csv(const std::string& text);
ScalarField read_field_csv(const std::string& path);

// step,z1,z2,x1,x2,objective
std::string trace_csv(const IncResult& r);
void write_trace_csv(const std::string& path, const IncResult& r);

// Label matrix with the field header; metadata goes to a JSON sidecar.
std::string boundary_csv(const BoundaryGrid& g);
void write_boundary_csv(const std::string& path, const BoundaryGrid& g);
BoundaryGrid parse_boundary_csv(const std::string& text);
Json to_json(const BoundaryGrid& g);

Json to_json(const Standardizer& s);
Standardizer standardizer_from_json(const Json& j);
Json to_json(const LatentMixture& lm);
LatentMixture latent_from_json(const Json& j);
Json to_json(const ThresholdReport& r);
Json to_json(const LevelSetReport& r);
Json to_json(const IncResult& r, bool with_trace);
Json to_json(const MonotonicityProbe& p);

Json to_json(const FlowModel& fm);
FlowModel model_from_json(const Json& j);
void save_model(const std::string& path, const FlowModel& fm);
FlowModel load_model(const std::string& path);

}  // namespace topoinc
