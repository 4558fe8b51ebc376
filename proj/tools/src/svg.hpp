#pragma once

#include <string>
#include <utility>
#include <vector>

#include "topoinc/baseline.hpp"
#include "topoinc/geometry.hpp"
#include "topoinc/inc.hpp"
#include "topoinc/topo_field.hpp"

namespace topoinc::cli {

// Fixed class colors: 0 red, 1 blue, 2 green, then a few spares.
std::string class_color(int label);

struct Segment {
  Point a;
  Point b;
};

// Marching squares over cell centers; saddles resolved by the block mean.
std::vector<Segment> marching_squares(const ScalarField& field, double lambda);

// Plots live in data units: the viewBox is the data box with y flipped, and
// each series is one <g class="series"> element.
class SvgPlot {
 public:
  SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi);

  void scatter(const std::string& name, const std::string& color, const std::vector<Point>& pts,
               double radius);
  void polyline(const std::string& name, const std::string& color, const std::vector<Point>& pts,
                double width, double marker_radius);
  void segments(const std::string& name, const std::string& color,
                const std::vector<Segment>& segs, double width);
  // Horizontal runs of cells sharing a fill, one rect each.
  void cells(const std::string& name, const ScalarField& shape,
             const std::vector<std::string>& fills, double opacity);

  int series_count() const { return static_cast<int>(series_.size()); }
  std::string str() const;

 private:
  double x_lo_, x_hi_, y_lo_, y_hi_;
  std::vector<std::string> series_;
};

// Bounding box of `pts` grown by `pad` of its span on every side.
Domain padded_bounds(const std::vector<Point>& pts, double pad);

}  // namespace topoinc::cli
