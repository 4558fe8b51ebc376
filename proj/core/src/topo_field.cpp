#include "topoinc/topo_field.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <set>

#include "topoinc/error.hpp"
#include "topoinc/parallel.hpp"

namespace topoinc {

ScalarField::ScalarField(Domain domain, int nx, int ny, std::vector<double> values)
    : domain_(domain), nx_(nx), ny_(ny), values_(std::move(values)) {
  if (nx < 2 || ny < 2) throw Error("invalid-argument", "field resolution must be >= 2x2");
  if (!(domain.x_hi > domain.x_lo) || !(domain.y_hi > domain.y_lo)) {
    throw Error("invalid-argument", "empty field domain");
  }
  if (values_.size() != static_cast<std::size_t>(nx) * ny) {
    throw Error("invalid-argument", "field value count does not match resolution");
  }
  for (double v : values_) {
    if (!std::isfinite(v) || v < 0.0) {
      throw Error("non-finite-value", "field values must be finite and >= 0");
    }
  }
}

Point ScalarField::cell_center(int i, int j) const {
  return {domain_.x_lo + (i + 0.5) * cell_width(), domain_.y_lo + (j + 0.5) * cell_height()};
}

std::optional<std::pair<int, int>> ScalarField::cell_of(const Point& p) const {
  if (!domain_.contains(p)) return std::nullopt;
  const int i = std::min(nx_ - 1, static_cast<int>((p.x() - domain_.x_lo) / cell_width()));
  const int j = std::min(ny_ - 1, static_cast<int>((p.y() - domain_.y_lo) / cell_height()));
  return std::pair{i, j};
}

ScalarField rasterize(const std::function<double(const Point&)>& f, const Domain& domain,
                      int nx, int ny, std::size_t workers) {
  if (nx < 2 || ny < 2) throw Error("invalid-argument", "field resolution must be >= 2x2");
  const double w = (domain.x_hi - domain.x_lo) / nx;
  const double h = (domain.y_hi - domain.y_lo) / ny;
  std::vector<double> values = parallel_map<double>(
      static_cast<std::size_t>(nx) * ny,
      [&](std::size_t k) {
        const int i = static_cast<int>(k % nx);
        const int j = static_cast<int>(k / nx);
        const double v = f(Point(domain.x_lo + (i + 0.5) * w, domain.y_lo + (j + 0.5) * h));
        if (!std::isfinite(v)) {
          throw Error("non-finite-value", "rasterized function returned a non-finite value");
        }
        return v;
      },
      workers);
  return ScalarField(domain, nx, ny, std::move(values));
}

DisjointSet::DisjointSet(std::size_t n) : parent_(n), size_(n, 1) {
  std::iota(parent_.begin(), parent_.end(), std::size_t{0});
}

std::size_t DisjointSet::find(std::size_t i) {
  while (parent_[i] != i) {
    parent_[i] = parent_[parent_[i]];
    i = parent_[i];
  }
  return i;
}

bool DisjointSet::unite(std::size_t a, std::size_t b) {
  a = find(a);
  b = find(b);
  if (a == b) return false;
  if (size_[a] < size_[b]) std::swap(a, b);
  parent_[b] = a;
  size_[a] += size_[b];
  return true;
}

ComponentLabels label_components(const std::vector<std::uint8_t>& mask, int nx, int ny,
                                 Connectivity connectivity) {
  const std::size_t n = static_cast<std::size_t>(nx) * ny;
  if (mask.size() != n) throw Error("invalid-argument", "mask size mismatch");
  DisjointSet ds(n);
  auto idx = [nx](int i, int j) { return static_cast<std::size_t>(j) * nx + i; };

  // First pass: merge with already-visited neighbours.
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) {
      if (!mask[idx(i, j)]) continue;
      if (i > 0 && mask[idx(i - 1, j)]) ds.unite(idx(i, j), idx(i - 1, j));
      if (j > 0 && mask[idx(i, j - 1)]) ds.unite(idx(i, j), idx(i, j - 1));
      if (connectivity == Connectivity::kEight && j > 0) {
        if (i > 0 && mask[idx(i - 1, j - 1)]) ds.unite(idx(i, j), idx(i - 1, j - 1));
        if (i + 1 < nx && mask[idx(i + 1, j - 1)]) ds.unite(idx(i, j), idx(i + 1, j - 1));
      }
    }
  }

  // Second pass: compact labels in raster order.
  ComponentLabels out;
  out.nx = nx;
  out.ny = ny;
  out.labels.assign(n, -1);
  std::vector<int> root_label(n, -1);
  for (std::size_t k = 0; k < n; ++k) {
    if (!mask[k]) continue;
    const std::size_t r = ds.find(k);
    if (root_label[r] < 0) {
      root_label[r] = out.count();
      out.areas.push_back(0);
    }
    out.labels[k] = root_label[r];
    ++out.areas[static_cast<std::size_t>(root_label[r])];
  }
  return out;
}

std::vector<std::uint8_t> threshold_mask(const ScalarField& field, double lambda) {
  std::vector<std::uint8_t> mask(field.values().size());
  for (std::size_t k = 0; k < mask.size(); ++k) mask[k] = field.values()[k] >= lambda;
  return mask;
}

namespace {

int count_large(const ComponentLabels& labels, int min_area) {
  return static_cast<int>(std::count_if(labels.areas.begin(), labels.areas.end(),
                                        [&](std::size_t a) {
                                          return a >= static_cast<std::size_t>(min_area);
                                        }));
}

// Returns (filtered, raw) counts of bounded background components.
std::pair<int, int> count_holes(const std::vector<std::uint8_t>& foreground, int nx, int ny,
                                int min_area) {
  std::vector<std::uint8_t> background(foreground.size());
  for (std::size_t k = 0; k < background.size(); ++k) background[k] = !foreground[k];
  const ComponentLabels bg = label_components(background, nx, ny, Connectivity::kFour);
  std::vector<std::uint8_t> touches(static_cast<std::size_t>(bg.count()), 0);
  auto mark = [&](int i, int j) {
    const int l = bg.labels[static_cast<std::size_t>(j) * nx + i];
    if (l >= 0) touches[static_cast<std::size_t>(l)] = 1;
  };
  for (int i = 0; i < nx; ++i) {
    mark(i, 0);
    mark(i, ny - 1);
  }
  for (int j = 0; j < ny; ++j) {
    mark(0, j);
    mark(nx - 1, j);
  }
  int filtered = 0;
  int raw = 0;
  for (int l = 0; l < bg.count(); ++l) {
    if (touches[static_cast<std::size_t>(l)]) continue;
    ++raw;
    if (bg.areas[static_cast<std::size_t>(l)] >= static_cast<std::size_t>(min_area)) ++filtered;
  }
  return {filtered, raw};
}

}  // namespace

LevelSetReport superlevel_components(const ScalarField& field, double lambda,
                                     int min_component_area) {
  if (!(lambda > 0.0)) throw Error("invalid-argument", "lambda must be > 0");
  const auto labels = label_components(threshold_mask(field, lambda), field.nx(), field.ny(),
                                       Connectivity::kEight);
  LevelSetReport r;
  r.lambda = lambda;
  r.min_component_area = min_component_area;
  r.n_components_raw = labels.count();
  r.n_components = count_large(labels, min_component_area);
  return r;
}

int hole_count(const ScalarField& field, double lambda, int min_area) {
  if (!(lambda > 0.0)) throw Error("invalid-argument", "lambda must be > 0");
  return count_holes(threshold_mask(field, lambda), field.nx(), field.ny(), min_area).first;
}

LevelSetReport analyze_levelset(const ScalarField& field, double lambda,
                                int min_component_area) {
  LevelSetReport r = superlevel_components(field, lambda, min_component_area);
  auto [holes, raw] =
      count_holes(threshold_mask(field, lambda), field.nx(), field.ny(), min_component_area);
  r.n_holes = holes;
  r.n_holes_raw = raw;
  return r;
}

LevelSetReport check_inclusion_separation(const ScalarField& field, double lambda,
                                          const DataGeneratingManifold& m,
                                          int probes_per_class,
                                          const std::function<Point(const Point&)>& to_field,
                                          int min_component_area) {
  if (probes_per_class < 1) throw Error("invalid-argument", "probes_per_class must be >= 1");
  LevelSetReport r = analyze_levelset(field, lambda, min_component_area);
  const auto labels = label_components(threshold_mask(field, lambda), field.nx(), field.ny(),
                                       Connectivity::kEight);
  r.includes_manifold = true;
  std::vector<std::set<int>> hit(static_cast<std::size_t>(m.num_classes()));
  for (const auto& c : m.curves()) {
    for (int k = 0; k < probes_per_class; ++k) {
      const double f = probes_per_class == 1 ? 0.5 : static_cast<double>(k) / (probes_per_class - 1);
      Point p = c.position(c.param_at_fraction(f));
      if (to_field) p = to_field(p);
      const auto cell = field.cell_of(p);
      if (!cell) throw Error("probe-outside-domain", "manifold probe lies outside the field");
      const int l = labels.labels[static_cast<std::size_t>(cell->second) * field.nx() + cell->first];
      if (l < 0) {
        r.includes_manifold = false;
      } else {
        hit[static_cast<std::size_t>(c.label())].insert(l);
      }
    }
  }
  r.separates_classes = true;
  for (std::size_t a = 0; a < hit.size(); ++a) {
    for (std::size_t b = a + 1; b < hit.size(); ++b) {
      for (int l : hit[a]) {
        if (hit[b].count(l)) r.separates_classes = false;
      }
    }
  }
  r.component_of_class.clear();
  for (std::size_t a = 0; a < hit.size(); ++a) {
    if (hit[a].size() == 1) {
      r.component_of_class.emplace_back(*hit[a].begin());
    } else {
      r.component_of_class.emplace_back(std::nullopt);
    }
  }
  return r;
}

}  // namespace topoinc
