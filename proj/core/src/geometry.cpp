#include "topoinc/geometry.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>
#include <numeric>

#include "topoinc/error.hpp"
#include "topoinc/rng.hpp"

namespace topoinc {
namespace {

constexpr double kPi = std::numbers::pi;
constexpr double kGolden = 0.6180339887498949;
// Relative slack under which two squared distances count as a tie, so the
// earlier (lower label, lower parameter) candidate is kept.
constexpr double kTieSlack = 1e-12;

bool improves(double candidate, double best) {
  return candidate < best * (1.0 - kTieSlack);
}

double sq_dist(const CurveManifold& c, double u, const Point& q) {
  return (c.position(u) - q).squaredNorm();
}

// Golden-section minimization of squared distance on [a, b].
std::pair<double, double> golden_min(const CurveManifold& c, const Point& q,
                                     double a, double b) {
  double x1 = b - kGolden * (b - a);
  double x2 = a + kGolden * (b - a);
  double f1 = sq_dist(c, x1, q);
  double f2 = sq_dist(c, x2, q);
  for (int it = 0; it < 100 && b - a > 1e-15 * std::max(1.0, std::abs(a)); ++it) {
    if (f1 <= f2) {
      b = x2;
      x2 = x1;
      f2 = f1;
      x1 = b - kGolden * (b - a);
      f1 = sq_dist(c, x1, q);
    } else {
      a = x1;
      x1 = x2;
      f1 = f2;
      x2 = a + kGolden * (b - a);
      f2 = sq_dist(c, x2, q);
    }
  }
  return f1 <= f2 ? std::pair{x1, f1} : std::pair{x2, f2};
}

}  // namespace

CurveManifold CurveManifold::arc(int label, Point center, double radius, double phase,
                                 double u_lo, double u_hi) {
  if (!(radius > 0.0) || !(u_hi > u_lo)) {
    throw Error("invalid-manifold", "arc requires radius > 0 and u_hi > u_lo");
  }
  CurveManifold c;
  c.kind_ = Kind::kArc;
  c.label_ = label;
  c.center_ = center;
  c.radius_ = radius;
  c.phase_ = phase;
  c.u_lo_ = u_lo;
  c.u_hi_ = u_hi;
  c.compute_bounding_box();
  return c;
}

CurveManifold CurveManifold::log_spiral(int label, double scale, double phase,
                                        double u_lo, double u_hi) {
  if (!(scale > 0.0) || !(u_hi > u_lo)) {
    throw Error("invalid-manifold", "spiral requires scale > 0 and u_hi > u_lo");
  }
  CurveManifold c;
  c.kind_ = Kind::kLogSpiral;
  c.label_ = label;
  c.radius_ = scale;
  c.phase_ = phase;
  c.u_lo_ = u_lo;
  c.u_hi_ = u_hi;
  c.compute_bounding_box();
  return c;
}

CurveManifold CurveManifold::segment(int label, Point start, Point end) {
  if ((end - start).norm() == 0.0) {
    throw Error("invalid-manifold", "degenerate segment");
  }
  CurveManifold c;
  c.kind_ = Kind::kSegment;
  c.label_ = label;
  c.center_ = start;
  c.end_ = end;
  c.u_lo_ = 0.0;
  c.u_hi_ = 1.0;
  c.compute_bounding_box();
  return c;
}

bool CurveManifold::closed() const {
  return kind_ == Kind::kArc && std::abs((u_hi_ - u_lo_) - 2.0 * kPi) < 1e-12;
}

Point CurveManifold::position(double u) const {
  switch (kind_) {
    case Kind::kArc:
      return center_ + radius_ * Point(std::cos(u + phase_), std::sin(u + phase_));
    case Kind::kLogSpiral:
      return radius_ * std::exp(u) * Point(std::cos(u + phase_), std::sin(u + phase_));
    case Kind::kSegment:
      return center_ + u * (end_ - center_);
  }
  return Point::Zero();
}

Point CurveManifold::velocity(double u) const {
  switch (kind_) {
    case Kind::kArc:
      return radius_ * Point(-std::sin(u + phase_), std::cos(u + phase_));
    case Kind::kLogSpiral: {
      const double c = std::cos(u + phase_);
      const double s = std::sin(u + phase_);
      return radius_ * std::exp(u) * Point(c - s, s + c);
    }
    case Kind::kSegment:
      return end_ - center_;
  }
  return Point::Zero();
}

Point CurveManifold::normal(double u) const {
  const Point v = velocity(u);
  const double n = v.norm();
  if (!(n > 0.0)) throw Error("irregular-curve", "velocity vanishes");
  return Point(v.y(), -v.x()) / n;
}

double CurveManifold::arc_length_between(double u0, double u1) const {
  switch (kind_) {
    case Kind::kArc:
      return radius_ * (u1 - u0);
    case Kind::kLogSpiral:
      return radius_ * std::numbers::sqrt2 * (std::exp(u1) - std::exp(u0));
    case Kind::kSegment:
      return (end_ - center_).norm() * (u1 - u0);
  }
  return 0.0;
}

double CurveManifold::param_at_fraction(double f) const {
  switch (kind_) {
    case Kind::kArc:
    case Kind::kSegment:
      return u_lo_ + f * (u_hi_ - u_lo_);
    case Kind::kLogSpiral: {
      const double e_lo = std::exp(u_lo_);
      const double e_hi = std::exp(u_hi_);
      return std::log(e_lo + f * (e_hi - e_lo));
    }
  }
  return u_lo_;
}

void CurveManifold::compute_bounding_box() {
  Point lo = position(u_lo_);
  Point hi = lo;
  constexpr int kSamples = 4096;
  for (int k = 1; k <= kSamples; ++k) {
    const Point p = position(u_lo_ + (u_hi_ - u_lo_) * k / kSamples);
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  // Sampling can miss an extremum by at most the sagitta of one step.
  const double step = arc_length() / kSamples;
  const Point pad = Point::Constant(step * step + 1e-12);
  box_lo_ = lo - pad;
  box_hi_ = hi + pad;
  grid_cache_.reset();
  grid_cache_ = grid_positions(kNearestGrid);
}

std::shared_ptr<const std::vector<Point>> CurveManifold::grid_positions(int grid) const {
  if (grid == kNearestGrid && grid_cache_) return grid_cache_;
  auto out = std::make_shared<std::vector<Point>>(static_cast<std::size_t>(grid));
  const double h = (u_hi_ - u_lo_) / (grid - 1);
  for (int k = 0; k < grid; ++k) (*out)[k] = position(u_lo_ + k * h);
  return out;
}

DataGeneratingManifold::DataGeneratingManifold(std::string name,
                                               std::vector<CurveManifold> curves,
                                               std::vector<double> priors)
    : name_(std::move(name)), curves_(std::move(curves)), priors_(std::move(priors)) {
  if (curves_.empty()) throw Error("invalid-manifold", "no curves");
  if (priors_.size() != curves_.size()) {
    throw Error("invalid-manifold", "one prior per curve required");
  }
  for (std::size_t i = 0; i < curves_.size(); ++i) {
    if (curves_[i].label() != static_cast<int>(i)) {
      throw Error("invalid-manifold", "labels must be contiguous from 0 in order");
    }
    if (!(priors_[i] > 0.0)) throw Error("invalid-manifold", "priors must be > 0");
  }
  const double total = std::accumulate(priors_.begin(), priors_.end(), 0.0);
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("invalid-manifold", "priors must sum to 1");
  }
}

DataGeneratingManifold::DataGeneratingManifold(std::string name,
                                               std::vector<CurveManifold> curves)
    : DataGeneratingManifold(
          std::move(name), curves,
          std::vector<double>(curves.size(), 1.0 / static_cast<double>(curves.size()))) {}

std::pair<Point, Point> DataGeneratingManifold::bounding_box() const {
  auto [lo, hi] = curves_.front().bounding_box();
  for (const auto& c : curves_) {
    auto [l, h] = c.bounding_box();
    lo = lo.cwiseMin(l);
    hi = hi.cwiseMax(h);
  }
  return {lo, hi};
}

std::vector<std::string> dataset_names() {
  return {"two-moons", "spirals", "circles", "segments"};
}

DataGeneratingManifold make_dataset(std::string_view name) {
  if (name == "two-moons") {
    // M_1 = (1 - cos t, 1/2 - sin t); see README for the sign of the offset.
    return DataGeneratingManifold(
        "two-moons", {CurveManifold::arc(0, Point(0.0, 0.0), 1.0, 0.0, 0.0, kPi),
                      CurveManifold::arc(1, Point(1.0, 0.5), 1.0, kPi, 0.0, kPi)});
  }
  if (name == "spirals") {
    // t = ln(s / sqrt(2) + 1) for s in [0, 15].
    const double t_max = std::log(15.0 / std::numbers::sqrt2 + 1.0);
    std::vector<CurveManifold> curves;
    for (int i = 0; i < 3; ++i) {
      curves.push_back(CurveManifold::log_spiral(i, 1.0 / 3.0, 2.0 * kPi * i / 3.0,
                                                 0.0, t_max));
    }
    return DataGeneratingManifold("spirals", std::move(curves));
  }
  if (name == "circles") {
    return DataGeneratingManifold(
        "circles", {CurveManifold::arc(0, Point::Zero(), 1.0, 0.0, 0.0, 2.0 * kPi),
                    CurveManifold::arc(1, Point::Zero(), 0.5, 0.0, 0.0, 2.0 * kPi)});
  }
  if (name == "segments") {
    return DataGeneratingManifold(
        "segments", {CurveManifold::segment(0, Point(-0.5, -1.0), Point(0.5, -1.0)),
                     CurveManifold::segment(1, Point(-0.5, 1.0), Point(0.5, 1.0))});
  }
  throw Error("unknown-dataset", "unknown dataset '" + std::string(name) + "'");
}

std::vector<LabeledSample> sample_uniform(const DataGeneratingManifold& m,
                                          int n_per_class, std::uint64_t seed) {
  if (n_per_class < 1) throw Error("invalid-argument", "n_per_class must be >= 1");
  std::vector<LabeledSample> out;
  out.reserve(static_cast<std::size_t>(n_per_class) * m.curves().size());
  for (const auto& c : m.curves()) {
    Rng rng = make_rng(seed, "sample", static_cast<std::uint64_t>(c.label()));
    for (int k = 0; k < n_per_class; ++k) {
      const double u = c.param_at_fraction(uniform01(rng));
      out.push_back({c.position(u), c.label(), u});
    }
  }
  return out;
}

std::vector<LabeledSample> sample_noisy(const DataGeneratingManifold& m,
                                        int n_per_class, double sigma,
                                        std::uint64_t seed) {
  if (sigma < 0.0) throw Error("invalid-argument", "sigma must be >= 0");
  std::vector<LabeledSample> out = sample_uniform(m, n_per_class, seed);
  if (sigma == 0.0) return out;
  std::vector<Rng> rngs;
  for (const auto& c : m.curves()) {
    rngs.push_back(make_rng(seed, "noise", static_cast<std::uint64_t>(c.label())));
  }
  for (auto& s : out) {
    Rng& rng = rngs[static_cast<std::size_t>(s.label)];
    const double nx = standard_normal(rng);
    const double ny = standard_normal(rng);
    s.point += sigma * Point(nx, ny);
  }
  return out;
}

std::vector<PerturbedSample> perturb_normal(const DataGeneratingManifold& m,
                                            const std::vector<LabeledSample>& samples,
                                            double r, int sign) {
  if (r < 0.0) throw Error("invalid-argument", "offset magnitude must be >= 0");
  if (sign != 1 && sign != -1) throw Error("invalid-argument", "sign must be +1 or -1");
  std::vector<PerturbedSample> out;
  out.reserve(samples.size());
  for (const auto& s : samples) {
    if (std::isnan(s.param)) {
      throw Error("invalid-argument", "sample carries no source parameter");
    }
    const CurveManifold& c = m.curve(s.label);
    const Point x = c.position(s.param);
    out.push_back({x, x + (sign * r) * c.normal(s.param), s.label, s.param});
  }
  return out;
}

NearestPoint nearest_point_on_curve(const CurveManifold& c, const Point& q, int grid) {
  if (grid < 3) grid = 3;
  const double lo = c.param_lo();
  const double hi = c.param_hi();
  const double h = (hi - lo) / (grid - 1);
  const auto positions = c.grid_positions(grid);
  int best_k = 0;
  double best = ((*positions)[0] - q).squaredNorm();
  for (int k = 1; k < grid; ++k) {
    const double d2 = ((*positions)[k] - q).squaredNorm();
    if (improves(d2, best)) {
      best = d2;
      best_k = k;
    }
  }
  double best_u = lo + best_k * h;

  auto refine = [&](int k0, int k1) {
    const double a = lo + std::max(k0, 0) * h;
    const double b = std::min(hi, lo + std::min(k1, grid - 1) * h);
    auto [u, d2] = golden_min(c, q, a, b);
    if (improves(d2, best)) {
      best = d2;
      best_u = u;
    }
  };
  refine(best_k - 1, best_k + 1);
  if (c.closed() && (best_k == 0 || best_k == grid - 1)) {
    refine(0, 1);
    refine(grid - 2, grid - 1);
  }
  return {c.position(best_u), best_u, c.label(), std::sqrt(best)};
}

NearestPoint nearest_point(const DataGeneratingManifold& m, const Point& q, int grid) {
  NearestPoint best = nearest_point_on_curve(m.curves().front(), q, grid);
  for (std::size_t i = 1; i < m.curves().size(); ++i) {
    NearestPoint cand = nearest_point_on_curve(m.curves()[i], q, grid);
    if (improves(cand.distance * cand.distance, best.distance * best.distance)) {
      best = cand;
    }
  }
  return best;
}

double class_wise_distance(const DataGeneratingManifold& m, int grid) {
  if (m.num_classes() < 2) {
    throw Error("single-class", "class-wise distance needs at least two classes");
  }
  double best_overall = std::numeric_limits<double>::infinity();
  for (int i = 0; i < m.num_classes(); ++i) {
    for (int j = i + 1; j < m.num_classes(); ++j) {
      const CurveManifold& a = m.curve(i);
      const CurveManifold& b = m.curve(j);
      const double ha = (a.param_hi() - a.param_lo()) / (grid - 1);
      const double hb = (b.param_hi() - b.param_lo()) / (grid - 1);
      const auto pb_ptr = b.grid_positions(grid);
      const std::vector<Point>& pb = *pb_ptr;
      double best = std::numeric_limits<double>::infinity();
      int ka = 0;
      int kb = 0;
      for (int k = 0; k < grid; ++k) {
        const Point p = a.position(a.param_lo() + k * ha);
        for (int l = 0; l < grid; ++l) {
          const double d2 = (p - pb[l]).squaredNorm();
          if (d2 < best) {
            best = d2;
            ka = k;
            kb = l;
          }
        }
      }
      // Coordinate-wise golden refinement inside the neighbouring cells.
      const double a0 = a.param_lo() + std::max(ka - 1, 0) * ha;
      const double a1 = std::min(a.param_hi(), a.param_lo() + (ka + 1) * ha);
      const double b0 = b.param_lo() + std::max(kb - 1, 0) * hb;
      const double b1 = std::min(b.param_hi(), b.param_lo() + (kb + 1) * hb);
      double ua = a.param_lo() + ka * ha;
      double ub = b.param_lo() + kb * hb;
      for (int it = 0; it < 60; ++it) {
        auto [nb, db] = golden_min(b, a.position(ua), b0, b1);
        if (db < best) {
          best = db;
          ub = nb;
        }
        auto [na, da] = golden_min(a, b.position(ub), a0, a1);
        if (da < best) {
          best = da;
          ua = na;
        }
      }
      best_overall = std::min(best_overall, best);
    }
  }
  return std::sqrt(best_overall);
}

}  // namespace topoinc
