#include "topoinc/noise_density.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "topoinc/error.hpp"
#include "topoinc/parallel.hpp"

namespace topoinc {
namespace {

// Beyond 40 sigma the Gaussian factor is below exp(-800) and underflows.
constexpr double kCutoffSigmas = 40.0;

double bbox_distance(const std::pair<Point, Point>& box, const Point& q) {
  const Point d = (box.first - q).cwiseMax(q - box.second).cwiseMax(Point::Zero());
  return d.norm();
}

}  // namespace

NoiseModel::NoiseModel(double sigma) : sigma_(sigma) {
  if (!(sigma > 0.0) || !std::isfinite(sigma)) {
    throw Error("invalid-argument", "noise sigma must be > 0");
  }
}

double NoiseModel::peak() const { return 1.0 / (2.0 * std::numbers::pi * sigma_ * sigma_); }

double NoiseModel::pdf(const Point& displacement) const {
  return peak() * std::exp(-displacement.squaredNorm() / (2.0 * sigma_ * sigma_));
}

double NoiseModel::pdf_at_radius(double r) const {
  return peak() * std::exp(-r * r / (2.0 * sigma_ * sigma_));
}

double radius_of_level(const NoiseModel& nm, double lambda) {
  if (!(lambda > 0.0)) throw Error("invalid-argument", "lambda must be > 0");
  const double peak = nm.peak();
  if (lambda > peak) {
    throw Error("empty-superlevel-set",
                "lambda exceeds the noise peak density; superlevel set is empty");
  }
  return nm.sigma() * std::sqrt(2.0 * std::log(peak / lambda));
}

double radius_of_level_bisection(const std::function<double(double)>& radial_pdf,
                                 double lambda, double tol) {
  if (!(lambda > 0.0)) throw Error("invalid-argument", "lambda must be > 0");
  if (radial_pdf(0.0) < lambda) {
    throw Error("empty-superlevel-set", "lambda exceeds the peak density");
  }
  double lo = 0.0;
  double hi = 1.0;
  while (radial_pdf(hi) >= lambda) {
    lo = hi;
    hi *= 2.0;
    if (hi > 1e300) throw Error("unbounded-superlevel-set", "density does not decay");
  }
  while (hi - lo > tol * std::max(1.0, hi)) {
    const double mid = 0.5 * (lo + hi);
    if (radial_pdf(mid) >= lambda) {
      lo = mid;
    } else {
      hi = mid;
    }
  }
  return 0.5 * (lo + hi);
}

double extended_density_class(const NoiseModel& nm, const DataGeneratingManifold& m,
                              int label, const Point& q, int quad_points) {
  if (quad_points < 64) throw Error("invalid-argument", "quad_points must be >= 64");
  const CurveManifold& c = m.curve(label);
  if (bbox_distance(c.bounding_box(), q) > kCutoffSigmas * nm.sigma()) return 0.0;

  const double lo = c.param_lo();
  const double hi = c.param_hi();
  // Each Simpson panel spans two subintervals.
  const int n = 2 * quad_points;
  const double h = (hi - lo) / n;
  const double inv_two_var = 1.0 / (2.0 * nm.sigma() * nm.sigma());
  auto f = [&](double t) {
    const double d2 = (q - c.position(t)).squaredNorm();
    return std::exp(-d2 * inv_two_var) * c.velocity(t).norm();
  };
  double sum = f(lo) + f(hi);
  for (int k = 1; k < n; ++k) {
    sum += (k % 2 == 1 ? 4.0 : 2.0) * f(lo + k * h);
  }
  const double integral = nm.peak() * sum * h / 3.0;
  return m.priors()[static_cast<std::size_t>(label)] * integral / c.arc_length();
}

double extended_density(const NoiseModel& nm, const DataGeneratingManifold& m,
                        const Point& q, int quad_points) {
  double p = 0.0;
  for (int i = 0; i < m.num_classes(); ++i) {
    p += extended_density_class(nm, m, i, q, quad_points);
  }
  return p;
}

std::vector<double> extended_density_batch(const NoiseModel& nm,
                                           const DataGeneratingManifold& m,
                                           const std::vector<Point>& queries,
                                           int quad_points, std::size_t workers) {
  return parallel_map<double>(
      queries.size(),
      [&](std::size_t i) { return extended_density(nm, m, queries[i], quad_points); },
      workers);
}

std::vector<std::pair<double, double>> curve_ball_intervals(const CurveManifold& curve,
                                                            const Point& center,
                                                            double eps, int scan) {
  const double lo = curve.param_lo();
  const double hi = curve.param_hi();
  const double eps2 = eps * eps;
  auto g = [&](double u) { return (curve.position(u) - center).squaredNorm() - eps2; };
  const double tol = 1e-12 * (hi - lo);
  auto root = [&](double a, double b) {
    // g(a) and g(b) have opposite inside/outside status.
    const bool a_inside = g(a) <= 0.0;
    while (b - a > tol) {
      const double mid = 0.5 * (a + b);
      if ((g(mid) <= 0.0) == a_inside) {
        a = mid;
      } else {
        b = mid;
      }
    }
    return 0.5 * (a + b);
  };

  std::vector<std::pair<double, double>> out;
  double prev_u = lo;
  bool prev_inside = g(lo) <= 0.0;
  double start = lo;
  for (int k = 1; k <= scan; ++k) {
    const double u = (k == scan) ? hi : lo + (hi - lo) * k / scan;
    const bool inside = g(u) <= 0.0;
    if (inside != prev_inside) {
      const double r = root(prev_u, u);
      if (inside) {
        start = r;
      } else {
        out.emplace_back(start, r);
      }
    }
    prev_u = u;
    prev_inside = inside;
  }
  if (prev_inside) out.emplace_back(start, hi);
  return out;
}

double manifold_ball_mass(const DataGeneratingManifold& m, const Point& x, double eps) {
  double mass = 0.0;
  for (const auto& c : m.curves()) {
    double len = 0.0;
    for (auto [a, b] : curve_ball_intervals(c, x, eps)) len += c.arc_length_between(a, b);
    mass += m.priors()[static_cast<std::size_t>(c.label())] * len / c.arc_length();
  }
  return mass;
}

double omega_epsilon(const DataGeneratingManifold& m, double eps, int probe_points) {
  if (!(eps > 0.0)) throw Error("invalid-argument", "eps must be > 0");
  if (probe_points < 2) probe_points = 2;
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : m.curves()) {
    for (int k = 0; k < probe_points; ++k) {
      const double u = c.param_at_fraction(static_cast<double>(k) / (probe_points - 1));
      best = std::min(best, manifold_ball_mass(m, c.position(u), eps));
    }
  }
  return best;
}

std::vector<Point> off_neighborhood_probes(const DataGeneratingManifold& m, double delta,
                                           int count) {
  const int l = m.num_classes();
  const int per_side = std::max(1, (count + 2 * l - 1) / (2 * l));
  std::vector<Point> out;
  out.reserve(static_cast<std::size_t>(count));
  constexpr double kMultipliers[] = {1.05, 1.5, 2.0, 3.0, 5.0, 8.0};
  for (int k = 0; k < count; ++k) {
    const CurveManifold& c = m.curve(k % l);
    const int j = k / l;
    const int sign = (j % 2 == 0) ? 1 : -1;
    const double u = c.param_at_fraction((static_cast<double>(j / 2) + 0.5) / per_side);
    const Point x = c.position(u);
    const Point n = c.normal(u);
    for (double mult : kMultipliers) {
      const Point p = x + sign * (mult * delta + 1e-3) * n;
      if (nearest_point(m, p).distance > delta) {
        out.push_back(p);
        break;
      }
    }
  }
  return out;
}

ThresholdReport theorem1_report(const NoiseModel& nm, const DataGeneratingManifold& m,
                                double lambda, int probes, std::size_t workers) {
  ThresholdReport r;
  r.sigma = nm.sigma();
  r.lambda = lambda;
  r.eps_lambda = radius_of_level(nm, lambda);
  r.delta_lambda = r.eps_lambda;
  if (!(r.eps_lambda > 0.0)) {
    throw Error("degenerate-threshold",
                "lambda equals the noise peak: radii vanish and lambda* would be 0");
  }
  r.omega_eps = omega_epsilon(m, r.eps_lambda);
  r.lambda_star = r.omega_eps * lambda;
  if (!(r.lambda_star > 0.0)) {
    throw Error("degenerate-threshold", "omega_eps is 0, so lambda* = 0");
  }
  r.delta_star = radius_of_level(nm, r.lambda_star);
  r.d_cw = m.num_classes() >= 2 ? class_wise_distance(m)
                                : std::numeric_limits<double>::infinity();
  r.precondition_holds = r.d_cw > 2.0 * r.delta_star;

  // Manifold probes, spread evenly over the curves (endpoints included).
  std::vector<Point> on;
  const int l = m.num_classes();
  for (int i = 0; i < l; ++i) {
    const auto& c = m.curve(i);
    const int per_curve = std::max(2, probes / l + (i < probes % l ? 1 : 0));
    for (int k = 0; k < per_curve; ++k) {
      on.push_back(c.position(c.param_at_fraction(static_cast<double>(k) / (per_curve - 1))));
    }
  }
  const auto on_density = extended_density_batch(nm, m, on, kDefaultQuadPanels, workers);
  r.floor_probes = static_cast<int>(on.size());
  r.floor_min_density = *std::min_element(on_density.begin(), on_density.end());
  r.floor_holds = r.floor_min_density >= r.lambda_star;

  const auto off = off_neighborhood_probes(m, r.delta_lambda, probes);
  const auto off_density = extended_density_batch(nm, m, off, kDefaultQuadPanels, workers);
  r.ceiling_probes = static_cast<int>(off.size());
  r.ceiling_max_density =
      off_density.empty() ? 0.0 : *std::max_element(off_density.begin(), off_density.end());
  r.ceiling_holds = r.ceiling_max_density < lambda;
  return r;
}

MonotonicityProbe monotonicity_probe(const NoiseModel& nm, const DataGeneratingManifold& m,
                                     const Point& query, int steps) {
  if (steps < 1) throw Error("invalid-argument", "steps must be >= 1");
  const NearestPoint np = nearest_point(m, query);
  const double region = 3.0 * nm.sigma() + radius_of_level(nm, 0.01);
  if (np.distance > region) {
    throw Error("invalid-argument", "query lies outside the probe region around M");
  }
  MonotonicityProbe out;
  out.nearest = np.point;
  for (int k = 0; k <= steps; ++k) {
    const double f = static_cast<double>(k) / steps;
    out.densities.push_back(extended_density(nm, m, query + f * (np.point - query)));
  }
  for (int k = 1; k <= steps; ++k) {
    if (out.densities[k] < out.densities[k - 1] * (1.0 - 1e-12)) {
      out.nondecreasing = false;
      break;
    }
  }
  return out;
}

}  // namespace topoinc
