#pragma once

#include <cstdint>
#include <functional>
#include <optional>
#include <string>
#include <vector>

#include "topoinc/geometry.hpp"

namespace topoinc {

struct Domain {
  double x_lo = -3.0;
  double x_hi = 3.0;
  double y_lo = -3.0;
  double y_hi = 3.0;

  bool contains(const Point& p) const {
    return p.x() >= x_lo && p.x() <= x_hi && p.y() >= y_lo && p.y() <= y_hi;
  }
};

// Values sampled at cell centers of an nx-by-ny grid, stored row-major with
// row j spanning x at fixed y_j (j = 0 at y_lo).
class ScalarField {
 public:
  ScalarField(Domain domain, int nx, int ny, std::vector<double> values);

  const Domain& domain() const { return domain_; }
  int nx() const { return nx_; }
  int ny() const { return ny_; }
  const std::vector<double>& values() const { return values_; }
  double at(int i, int j) const { return values_[static_cast<std::size_t>(j) * nx_ + i]; }

  double cell_width() const { return (domain_.x_hi - domain_.x_lo) / nx_; }
  double cell_height() const { return (domain_.y_hi - domain_.y_lo) / ny_; }
  Point cell_center(int i, int j) const;
  // Cell containing p; nullopt outside the domain.
  std::optional<std::pair<int, int>> cell_of(const Point& p) const;

 private:
  Domain domain_;
  int nx_;
  int ny_;
  std::vector<double> values_;
};

// Evaluates f at every cell center (parallel map). Throws
// Error("non-finite-value") if f returns NaN/inf or a negative value.
ScalarField rasterize(const std::function<double(const Point&)>& f, const Domain& domain,
                      int nx, int ny, std::size_t workers = 0);

// Disjoint-set forest with path halving and union by size.
class DisjointSet {
 public:
  explicit DisjointSet(std::size_t n);
  std::size_t find(std::size_t i);
  bool unite(std::size_t a, std::size_t b);
  std::size_t size_of(std::size_t i) { return size_[find(i)]; }

 private:
  std::vector<std::size_t> parent_;
  std::vector<std::size_t> size_;
};

enum class Connectivity { kFour = 4, kEight = 8 };

// Connected-component labeling of a binary mask (row-major, nx * ny) by
// two-pass union-find. Cells with mask == false get label -1; components
// are numbered 0.. in raster order of their first cell.
struct ComponentLabels {
  int nx = 0;
  int ny = 0;
  std::vector<int> labels;
  std::vector<std::size_t> areas;
  int count() const { return static_cast<int>(areas.size()); }
};

ComponentLabels label_components(const std::vector<std::uint8_t>& mask, int nx, int ny,
                                 Connectivity connectivity);

std::vector<std::uint8_t> threshold_mask(const ScalarField& field, double lambda);

inline constexpr int kDefaultMinComponentArea = 4;

struct LevelSetReport {
  double lambda = 0.0;
  int min_component_area = kDefaultMinComponentArea;
  int n_components = 0;      // foreground, 8-connected, area >= min_component_area
  int n_components_raw = 0;  // before the area filter
  int n_holes = 0;           // bounded 4-connected background, area >= min area
  int n_holes_raw = 0;
  bool includes_manifold = false;
  bool separates_classes = false;
  // Component id (starting at 0 among raw labels) holding all probes of a
  // class; nullopt if the probes miss the foreground or span components.
  std::vector<std::optional<int>> component_of_class;
};

// Components of the lambda-superlevel set (cells >= lambda).
LevelSetReport superlevel_components(const ScalarField& field, double lambda,
                                     int min_component_area = kDefaultMinComponentArea);

// Bounded background components (cells < lambda, 4-connectivity, not
// touching the domain border) with area >= min_area.
int hole_count(const ScalarField& field, double lambda, int min_area = 1);

// Inclusion and class separation of M in the superlevel set. `to_field`
// maps manifold coordinates into field coordinates (identity by default,
// a standardizer for flow densities). Throws Error("probe-outside-domain").
LevelSetReport check_inclusion_separation(
    const ScalarField& field, double lambda, const DataGeneratingManifold& m,
    int probes_per_class, const std::function<Point(const Point&)>& to_field = {},
    int min_component_area = kDefaultMinComponentArea);

// Components and holes in one report.
LevelSetReport analyze_levelset(const ScalarField& field, double lambda,
                                int min_component_area = kDefaultMinComponentArea);

}  // namespace topoinc
