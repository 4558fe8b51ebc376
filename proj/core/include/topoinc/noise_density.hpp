#pragma once

#include <functional>
#include <vector>

#include "topoinc/geometry.hpp"

namespace topoinc {

// Isotropic 2D Gaussian noise N(0, sigma^2 I).
class NoiseModel {
 public:
  explicit NoiseModel(double sigma);

  double sigma() const { return sigma_; }
  double peak() const;  // 1 / (2 pi sigma^2)
  double pdf(const Point& displacement) const;
  double pdf_at_radius(double r) const;

 private:
  double sigma_;
};

// Radius of the lambda-superlevel ball of the noise density. For an
// isotropic Gaussian the bounding and guaranteeing radii coincide:
// r = sigma * sqrt(2 ln(peak / lambda)). Throws
// Error("empty-superlevel-set") when lambda > peak.
double radius_of_level(const NoiseModel& nm, double lambda);

// Same radius for any radially decreasing density given as a function of
// the radius, found by bracketing and bisection to `tol`.
double radius_of_level_bisection(const std::function<double(double)>& radial_pdf,
                                 double lambda, double tol = 1e-14);

inline constexpr int kDefaultQuadPanels = 512;

// p(q) = sum_i Pr[y=i] / L_i * int nu(q - gamma_i(t)) |gamma_i'(t)| dt,
// composite Simpson with `quad_points` (>= 64) three-node panels per curve.
double extended_density(const NoiseModel& nm, const DataGeneratingManifold& m,
                        const Point& q, int quad_points = kDefaultQuadPanels);

// Per-class term Pr[y=i] / L_i * int ..., same quadrature.
double extended_density_class(const NoiseModel& nm, const DataGeneratingManifold& m,
                              int label, const Point& q,
                              int quad_points = kDefaultQuadPanels);

std::vector<double> extended_density_batch(const NoiseModel& nm,
                                           const DataGeneratingManifold& m,
                                           const std::vector<Point>& queries,
                                           int quad_points = kDefaultQuadPanels,
                                           std::size_t workers = 0);

// Parameter intervals of `curve` lying inside the closed ball B_eps(center),
// located by sign-change scanning over `scan` samples and bisection to 1e-8
// (relative to the parameter range).
std::vector<std::pair<double, double>> curve_ball_intervals(const CurveManifold& curve,
                                                            const Point& center,
                                                            double eps, int scan = 4096);

// p_M-mass of B_eps(x).
double manifold_ball_mass(const DataGeneratingManifold& m, const Point& x, double eps);

// Minimum of manifold_ball_mass over `probe_points` points per curve
// (uniform in arc length, both endpoints included).
double omega_epsilon(const DataGeneratingManifold& m, double eps, int probe_points = 512);

struct ThresholdReport {
  double sigma = 0.0;
  double lambda = 0.0;
  double eps_lambda = 0.0;
  double delta_lambda = 0.0;
  double omega_eps = 0.0;
  double lambda_star = 0.0;
  double delta_star = 0.0;
  double d_cw = 0.0;
  bool precondition_holds = false;
  // On-manifold floor: min extended density over manifold probes vs lambda*.
  int floor_probes = 0;
  double floor_min_density = 0.0;
  bool floor_holds = false;
  // Off-neighbourhood ceiling: max density at distance > delta_lambda vs lambda.
  int ceiling_probes = 0;
  double ceiling_max_density = 0.0;
  bool ceiling_holds = false;
};

// Throws Error("empty-superlevel-set") for lambda > peak and
// Error("degenerate-threshold") when lambda == peak (zero radii, lambda* = 0).
ThresholdReport theorem1_report(const NoiseModel& nm, const DataGeneratingManifold& m,
                                double lambda, int probes = 512,
                                std::size_t workers = 0);

// Probe points at distance > delta from M, offset along curve normals.
std::vector<Point> off_neighborhood_probes(const DataGeneratingManifold& m, double delta,
                                           int count);

struct MonotonicityProbe {
  std::vector<double> densities;  // steps + 1 values from the query to x*
  bool nondecreasing = true;
  Point nearest = Point::Zero();
};

// Densities along the segment from `query` to its nearest manifold point.
// Requires dist(query, M) <= 3 sigma + delta_{0.01}.
MonotonicityProbe monotonicity_probe(const NoiseModel& nm, const DataGeneratingManifold& m,
                                     const Point& query, int steps);

}  // namespace topoinc
