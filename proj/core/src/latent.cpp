#include "topoinc/latent.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <numbers>

#include "topoinc/error.hpp"

namespace topoinc {

LatentMixture::LatentMixture(std::vector<GaussianComponent> components)
    : components_(std::move(components)) {
  if (components_.empty()) throw Error("invalid-latent", "latent mixture has no components");
  double total = 0.0;
  for (const auto& c : components_) {
    if (!(c.sigma > 0.0) || !(c.weight > 0.0) || !c.mean.allFinite()) {
      throw Error("invalid-latent", "latent components need finite means, sigma > 0, weight > 0");
    }
    total += c.weight;
  }
  if (std::abs(total - 1.0) > 1e-12) {
    throw Error("invalid-latent", "latent mixture weights must sum to 1");
  }
}

LatentMixture LatentMixture::standard_normal() {
  return LatentMixture({GaussianComponent{Point::Zero(), 1.0, 1.0}});
}

LatentMixture LatentMixture::circular(int n, double rotation, double radius) {
  if (n < 1) throw Error("invalid-latent", "latent component count must be >= 1");
  if (n == 1) return standard_normal();
  const double sigma = n == 2 ? 0.5 : 0.3;
  std::vector<GaussianComponent> comps;
  for (int k = 0; k < n; ++k) {
    const double a = 2.0 * std::numbers::pi * (k + 1) / n + rotation;
    comps.push_back({Point(-radius * std::sin(a), radius * std::cos(a)), sigma, 1.0 / n});
  }
  // 1/n weights may not sum to exactly 1 in floating point.
  double total = 0.0;
  for (const auto& c : comps) total += c.weight;
  comps.back().weight += 1.0 - total;
  return LatentMixture(std::move(comps));
}

double LatentMixture::log_pdf_component(int k, const Point& z) const {
  const auto& c = components_.at(k);
  const double var = c.sigma * c.sigma;
  return -std::log(2.0 * std::numbers::pi * var) - (z - c.mean).squaredNorm() / (2.0 * var);
}

double LatentMixture::log_pdf(const Point& z) const {
  double best = -std::numeric_limits<double>::infinity();
  std::vector<double> terms(components_.size());
  for (std::size_t k = 0; k < components_.size(); ++k) {
    terms[k] = std::log(components_[k].weight) + log_pdf_component(static_cast<int>(k), z);
    best = std::max(best, terms[k]);
  }
  if (!std::isfinite(best)) return best;
  double s = 0.0;
  for (double t : terms) s += std::exp(t - best);
  return best + std::log(s);
}

double LatentMixture::pdf(const Point& z) const { return std::exp(log_pdf(z)); }

double LatentMixture::pdf_component(int k, const Point& z) const {
  return std::exp(log_pdf_component(k, z));
}

Point LatentMixture::grad_log_pdf_component(int k, const Point& z) const {
  const auto& c = components_.at(k);
  return -(z - c.mean) / (c.sigma * c.sigma);
}

Point LatentMixture::grad_log_pdf(const Point& z) const {
  // Responsibility-weighted component gradients.
  const double lp = log_pdf(z);
  Point g = Point::Zero();
  for (int k = 0; k < size(); ++k) {
    const double r = std::exp(std::log(components_[k].weight) + log_pdf_component(k, z) - lp);
    g += r * grad_log_pdf_component(k, z);
  }
  return g;
}

double LatentMixture::component_peak(int k) const {
  const double s = components_.at(k).sigma;
  return 1.0 / (2.0 * std::numbers::pi * s * s);
}

double LatentMixture::max_weighted_peak() const {
  double best = 0.0;
  for (int k = 0; k < size(); ++k) best = std::max(best, components_[k].weight * component_peak(k));
  return best;
}

Point LatentMixture::sample_component(int k, Rng& rng) const {
  const auto& c = components_.at(k);
  const double a = topoinc::standard_normal(rng);
  const double b = topoinc::standard_normal(rng);
  return c.mean + c.sigma * Point(a, b);
}

Point LatentMixture::sample(Rng& rng) const {
  const double u = uniform01(rng);
  double acc = 0.0;
  int k = size() - 1;
  for (int i = 0; i < size(); ++i) {
    acc += components_[i].weight;
    if (u < acc) {
      k = i;
      break;
    }
  }
  return sample_component(k, rng);
}

}  // namespace topoinc
