#pragma once

#include <cstdint>
#include <limits>
#include <memory>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

#include "topoinc/types.hpp"

namespace topoinc {

inline constexpr int kNearestGrid = 4096;
inline constexpr int kClassDistanceGrid = 2048;

// A regular parameterized curve M_i carrying one class label.
//
// Three closed-form families cover every shipped dataset:
//   arc:      center + radius * (cos(u + phase), sin(u + phase))
//   spiral:   scale * e^u * (cos(u + phase), sin(u + phase))
//   segment:  start + u * (end - start),  u in [0, 1]
// Closed forms give exact arc lengths and arc-length reparameterizations.
class CurveManifold {
 public:
  enum class Kind { kArc, kLogSpiral, kSegment };

  static CurveManifold arc(int label, Point center, double radius, double phase,
                           double u_lo, double u_hi);
  static CurveManifold log_spiral(int label, double scale, double phase,
                                  double u_lo, double u_hi);
  static CurveManifold segment(int label, Point start, Point end);

  int label() const { return label_; }
  Kind kind() const { return kind_; }
  double param_lo() const { return u_lo_; }
  double param_hi() const { return u_hi_; }
  // True when position(param_lo) == position(param_hi) (a full circle).
  bool closed() const;

  Point position(double u) const;
  Point velocity(double u) const;
  // Unit normal: velocity rotated clockwise, i.e. the outward normal for
  // counter-clockwise arcs.
  Point normal(double u) const;

  double arc_length() const { return arc_length_between(u_lo_, u_hi_); }
  double arc_length_between(double u0, double u1) const;
  // Parameter at arc-length fraction f in [0, 1] from param_lo.
  double param_at_fraction(double f) const;

  // Axis-aligned bounding box (lo, hi), exact for segments, conservative
  // otherwise.
  std::pair<Point, Point> bounding_box() const { return {box_lo_, box_hi_}; }

  // Positions at `grid` equally spaced parameters; cached for kNearestGrid.
  std::shared_ptr<const std::vector<Point>> grid_positions(int grid) const;

 private:
  CurveManifold() = default;
  void compute_bounding_box();

  Kind kind_ = Kind::kSegment;
  int label_ = 0;
  Point center_ = Point::Zero();  // arc center / segment start
  Point end_ = Point::Zero();     // segment end
  double radius_ = 1.0;           // arc radius / spiral scale
  double phase_ = 0.0;
  double u_lo_ = 0.0;
  double u_hi_ = 1.0;
  Point box_lo_ = Point::Zero();
  Point box_hi_ = Point::Zero();
  std::shared_ptr<const std::vector<Point>> grid_cache_;
};

class DataGeneratingManifold {
 public:
  // Throws Error("invalid-manifold") when priors or labels are inconsistent.
  DataGeneratingManifold(std::string name, std::vector<CurveManifold> curves,
                         std::vector<double> priors);
  // Uniform priors 1/l.
  DataGeneratingManifold(std::string name, std::vector<CurveManifold> curves);

  const std::string& name() const { return name_; }
  const std::vector<CurveManifold>& curves() const { return curves_; }
  const std::vector<double>& priors() const { return priors_; }
  int num_classes() const { return static_cast<int>(curves_.size()); }
  const CurveManifold& curve(int label) const { return curves_.at(label); }

  std::pair<Point, Point> bounding_box() const;

 private:
  std::string name_;
  std::vector<CurveManifold> curves_;
  std::vector<double> priors_;
};

struct LabeledSample {
  Point point = Point::Zero();
  int label = 0;
  // Source curve parameter; NaN when unknown (e.g. loaded noisy data).
  double param = std::numeric_limits<double>::quiet_NaN();
};

struct PerturbedSample {
  Point source = Point::Zero();
  Point perturbed = Point::Zero();
  int label = 0;
  double param = 0.0;
};

struct NearestPoint {
  Point point = Point::Zero();
  double param = 0.0;
  int label = 0;
  double distance = 0.0;
};

// Known ids: "two-moons", "spirals", "circles", "segments".
DataGeneratingManifold make_dataset(std::string_view name);
std::vector<std::string> dataset_names();

// n_per_class points per curve, uniform in arc length. Class i draws from
// substream (seed, "sample", i).
std::vector<LabeledSample> sample_uniform(const DataGeneratingManifold& m,
                                          int n_per_class, std::uint64_t seed);

// sample_uniform followed by isotropic Gaussian noise of std sigma
// (substream (seed, "noise", i)). The source parameter is retained.
std::vector<LabeledSample> sample_noisy(const DataGeneratingManifold& m,
                                        int n_per_class, double sigma,
                                        std::uint64_t seed);

// x + sign * r * n(u) for each sample; samples must carry their parameter.
std::vector<PerturbedSample> perturb_normal(const DataGeneratingManifold& m,
                                            const std::vector<LabeledSample>& samples,
                                            double r, int sign);

NearestPoint nearest_point_on_curve(const CurveManifold& c, const Point& q,
                                    int grid = kNearestGrid);
// Global minimizer over all curves; ties broken by (label, parameter).
NearestPoint nearest_point(const DataGeneratingManifold& m, const Point& q,
                           int grid = kNearestGrid);

double class_wise_distance(const DataGeneratingManifold& m,
                           int grid = kClassDistanceGrid);

}  // namespace topoinc
