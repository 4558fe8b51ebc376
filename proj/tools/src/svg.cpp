#include "svg.hpp"

#include <algorithm>
#include <array>
#include <cstdio>
#include <sstream>

#include "topoinc/error.hpp"
#include "topoinc/io.hpp"

namespace topoinc::cli {

namespace {

std::string num(double v) { return format_double(v); }

// Escapes the few characters that may appear in series names.
std::string xml_escape(const std::string& s) {
  std::string out;
  for (char c : s) {
    switch (c) {
      case '&': out += "&amp;"; break;
      case '<': out += "&lt;"; break;
      case '>': out += "&gt;"; break;
      case '"': out += "&quot;"; break;
      default: out += c;
    }
  }
  return out;
}

std::string open_group(const std::string& name, const std::string& attrs) {
  return "<g class=\"series\" data-series=\"" + xml_escape(name) + "\"" + attrs + ">\n";
}

}  // namespace

std::string class_color(int label) {
  static const std::array<const char*, 8> colors = {"red",    "blue",  "green", "orange",
                                                    "purple", "brown", "teal",  "magenta"};
  if (label < 0) return "gray";
  return colors[static_cast<std::size_t>(label) % colors.size()];
}

std::vector<Segment> marching_squares(const ScalarField& f, double lambda) {
  std::vector<Segment> out;
  for (int j = 0; j + 1 < f.ny(); ++j) {
    for (int i = 0; i + 1 < f.nx(); ++i) {
      const std::array<double, 4> v = {f.at(i, j), f.at(i + 1, j), f.at(i + 1, j + 1),
                                       f.at(i, j + 1)};
      const std::array<Point, 4> p = {f.cell_center(i, j), f.cell_center(i + 1, j),
                                      f.cell_center(i + 1, j + 1), f.cell_center(i, j + 1)};
      int c = 0;
      for (int k = 0; k < 4; ++k) c |= (v[k] >= lambda ? 1 : 0) << k;
      if (c == 0 || c == 15) continue;
      // Bottom, right, top, left; each edge runs left to right or bottom to
      // top so neighbouring cells produce identical endpoints.
      static constexpr int kEnds[4][2] = {{0, 1}, {1, 2}, {3, 2}, {0, 3}};
      auto edge = [&](int e) {
        const int a = kEnds[e][0];
        const int b = kEnds[e][1];
        const double t = (lambda - v[a]) / (v[b] - v[a]);
        return Point(p[a] + t * (p[b] - p[a]));
      };
      auto add = [&](int e0, int e1) { out.push_back({edge(e0), edge(e1)}); };
      const bool joined = (v[0] + v[1] + v[2] + v[3]) / 4.0 >= lambda;
      switch (c) {
        case 1: case 14: add(3, 0); break;
        case 2: case 13: add(0, 1); break;
        case 3: case 12: add(3, 1); break;
        case 4: case 11: add(1, 2); break;
        case 6: case 9: add(0, 2); break;
        case 7: case 8: add(3, 2); break;
        case 5:
          if (joined) { add(0, 1); add(2, 3); } else { add(3, 0); add(1, 2); }
          break;
        case 10:
          if (joined) { add(3, 0); add(1, 2); } else { add(0, 1); add(2, 3); }
          break;
        default: break;
      }
    }
  }
  return out;
}

SvgPlot::SvgPlot(double x_lo, double x_hi, double y_lo, double y_hi)
    : x_lo_(x_lo), x_hi_(x_hi), y_lo_(y_lo), y_hi_(y_hi) {
  if (!(x_hi > x_lo) || !(y_hi > y_lo)) {
    throw Error("invalid-argument", "plot box must have positive width and height");
  }
}

void SvgPlot::scatter(const std::string& name, const std::string& color,
                      const std::vector<Point>& pts, double radius) {
  std::ostringstream s;
  s << open_group(name, " fill=\"" + color + "\" stroke=\"none\"");
  for (const auto& q : pts) {
    s << "<circle cx=\"" << num(q.x()) << "\" cy=\"" << num(-q.y()) << "\" r=\"" << num(radius)
      << "\"/>\n";
  }
  s << "</g>\n";
  series_.push_back(s.str());
}

void SvgPlot::polyline(const std::string& name, const std::string& color,
                       const std::vector<Point>& pts, double width, double marker_radius) {
  std::ostringstream s;
  s << open_group(name, " stroke=\"" + color + "\" fill=\"" + color + "\"");
  s << "<polyline fill=\"none\" stroke-width=\"" << num(width) << "\" points=\"";
  for (std::size_t k = 0; k < pts.size(); ++k) {
    s << (k ? " " : "") << num(pts[k].x()) << "," << num(-pts[k].y());
  }
  s << "\"/>\n";
  if (!pts.empty() && marker_radius > 0.0) {
    s << "<circle class=\"start\" fill=\"none\" stroke-width=\"" << num(width) << "\" cx=\""
      << num(pts.front().x()) << "\" cy=\"" << num(-pts.front().y()) << "\" r=\""
      << num(marker_radius) << "\"/>\n";
    s << "<circle class=\"end\" stroke=\"none\" cx=\"" << num(pts.back().x()) << "\" cy=\""
      << num(-pts.back().y()) << "\" r=\"" << num(marker_radius) << "\"/>\n";
  }
  s << "</g>\n";
  series_.push_back(s.str());
}

void SvgPlot::segments(const std::string& name, const std::string& color,
                       const std::vector<Segment>& segs, double width) {
  std::ostringstream s;
  s << open_group(name, " fill=\"none\" stroke=\"" + color + "\"");
  s << "<path stroke-width=\"" << num(width) << "\" d=\"";
  for (std::size_t k = 0; k < segs.size(); ++k) {
    s << (k ? " " : "") << "M" << num(segs[k].a.x()) << " " << num(-segs[k].a.y()) << "L"
      << num(segs[k].b.x()) << " " << num(-segs[k].b.y());
  }
  s << "\"/>\n</g>\n";
  series_.push_back(s.str());
}

void SvgPlot::cells(const std::string& name, const ScalarField& shape,
                    const std::vector<std::string>& fills, double opacity) {
  const double w = shape.cell_width();
  const double h = shape.cell_height();
  const Domain& d = shape.domain();
  std::ostringstream s;
  s << open_group(name, " stroke=\"none\" shape-rendering=\"crispEdges\" fill-opacity=\"" +
                            num(opacity) + "\"");
  for (int j = 0; j < shape.ny(); ++j) {
    int i = 0;
    while (i < shape.nx()) {
      const auto& fill = fills[static_cast<std::size_t>(j) * shape.nx() + i];
      int run = 1;
      while (i + run < shape.nx() &&
             fills[static_cast<std::size_t>(j) * shape.nx() + i + run] == fill) {
        ++run;
      }
      if (!fill.empty()) {
        s << "<rect x=\"" << num(d.x_lo + i * w) << "\" y=\"" << num(-(d.y_lo + (j + 1) * h))
          << "\" width=\"" << num(run * w) << "\" height=\"" << num(h) << "\" fill=\"" << fill
          << "\"/>\n";
      }
      i += run;
    }
  }
  s << "</g>\n";
  series_.push_back(s.str());
}

std::string SvgPlot::str() const {
  const double w = x_hi_ - x_lo_;
  const double h = y_hi_ - y_lo_;
  const double px = 640.0;
  std::ostringstream s;
  s << "<?xml version=\"1.0\" encoding=\"UTF-8\"?>\n"
    << "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"" << num(px) << "\" height=\""
    << num(px * h / w) << "\" viewBox=\"" << num(x_lo_) << " " << num(-y_hi_) << " " << num(w)
    << " " << num(h) << "\" data-series-count=\"" << series_.size() << "\">\n"
    << "<rect class=\"background\" x=\"" << num(x_lo_) << "\" y=\"" << num(-y_hi_)
    << "\" width=\"" << num(w) << "\" height=\"" << num(h) << "\" fill=\"white\"/>\n";
  for (const auto& g : series_) s << g;
  s << "</svg>\n";
  return s.str();
}

Domain padded_bounds(const std::vector<Point>& pts, double pad) {
  if (pts.empty()) return Domain{};
  Point lo = pts.front();
  Point hi = pts.front();
  for (const auto& p : pts) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  const Point span = (hi - lo).cwiseMax(Point::Constant(1e-9));
  const double m = pad * std::max(span.x(), span.y());
  return {lo.x() - m, hi.x() + m, lo.y() - m, hi.y() + m};
}

}  // namespace topoinc::cli
