#pragma once

#include <vector>

#include "topoinc/rng.hpp"
#include "topoinc/types.hpp"

namespace topoinc {

struct GaussianComponent {
  Point mean = Point::Zero();
  double sigma = 1.0;
  double weight = 1.0;
};

// Mixture of isotropic 2D Gaussians D_Z.
class LatentMixture {
 public:
  // Throws Error("invalid-latent") unless weights sum to 1 (1e-12) and
  // every sigma and weight is positive.
  explicit LatentMixture(std::vector<GaussianComponent> components);

  static LatentMixture standard_normal();
  // n components on a circle of radius `radius`: component k (0-based) has
  // mean radius * (-sin(2 pi (k+1)/n + rotation), cos(2 pi (k+1)/n + rotation)),
  // sigma 0.5 for n = 2 and 0.3 for n >= 3. n = 1 gives N(0, I).
  static LatentMixture circular(int n, double rotation = 0.0, double radius = 2.5);

  int size() const { return static_cast<int>(components_.size()); }
  const std::vector<GaussianComponent>& components() const { return components_; }
  const GaussianComponent& component(int k) const { return components_.at(k); }

  double log_pdf(const Point& z) const;
  // Unweighted log-density of component k.
  double log_pdf_component(int k, const Point& z) const;
  double pdf(const Point& z) const;
  double pdf_component(int k, const Point& z) const;
  Point grad_log_pdf(const Point& z) const;
  Point grad_log_pdf_component(int k, const Point& z) const;

  // Peak of component k alone, 1 / (2 pi sigma_k^2).
  double component_peak(int k) const;
  // max_k weight_k * component_peak(k); exact mixture maximum for n = 1.
  double max_weighted_peak() const;

  Point sample(Rng& rng) const;
  Point sample_component(int k, Rng& rng) const;

 private:
  std::vector<GaussianComponent> components_;
};

}  // namespace topoinc
