#pragma once

#include <algorithm>
#include <cmath>
#include <cstdint>
#include <functional>
#include <limits>
#include <queue>
#include <vector>

#include "topoinc/geometry.hpp"

namespace oracle {

using topoinc::Point;

// Minimum distance from q to a curve over a uniform parameter grid.
inline double brute_distance(const topoinc::CurveManifold& c, const Point& q, int n) {
  double best = std::numeric_limits<double>::infinity();
  const double lo = c.param_lo();
  const double hi = c.param_hi();
  for (int k = 0; k < n; ++k) {
    const double u = lo + (hi - lo) * k / (n - 1);
    best = std::min(best, (c.position(u) - q).norm());
  }
  return best;
}

inline double brute_distance(const topoinc::DataGeneratingManifold& m, const Point& q, int n) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : m.curves()) best = std::min(best, brute_distance(c, q, n));
  return best;
}

// Grid search followed by golden-section refinement of every grid point
// within reach of the grid minimum. Accurate to ~1e-12 for smooth curves.
inline double refined_distance(const topoinc::CurveManifold& c, const Point& q, int n = 20000) {
  const double lo = c.param_lo();
  const double hi = c.param_hi();
  const double step = (hi - lo) / (n - 1);
  std::vector<double> d(static_cast<std::size_t>(n));
  double grid_min = std::numeric_limits<double>::infinity();
  double vmax = 0.0;
  for (int k = 0; k < n; ++k) {
    const double u = lo + step * k;
    d[k] = (c.position(u) - q).norm();
    grid_min = std::min(grid_min, d[k]);
    vmax = std::max(vmax, c.velocity(u).norm());
  }
  auto dist = [&](double u) { return (c.position(u) - q).norm(); };
  double best = grid_min;
  const double g = (std::sqrt(5.0) - 1.0) / 2.0;
  for (int k = 0; k < n; ++k) {
    if (d[k] > grid_min + 2.0 * step * vmax) continue;
    double a = std::max(lo, lo + step * (k - 1));
    double b = std::min(hi, lo + step * (k + 1));
    double x1 = b - g * (b - a);
    double x2 = a + g * (b - a);
    double f1 = dist(x1);
    double f2 = dist(x2);
    while (b - a > 1e-14 * (hi - lo)) {
      if (f1 < f2) {
        b = x2;
        x2 = x1;
        f2 = f1;
        x1 = b - g * (b - a);
        f1 = dist(x1);
      } else {
        a = x1;
        x1 = x2;
        f1 = f2;
        x2 = a + g * (b - a);
        f2 = dist(x2);
      }
    }
    best = std::min({best, f1, f2, dist(a), dist(b)});
  }
  return best;
}

inline double refined_distance(const topoinc::DataGeneratingManifold& m, const Point& q) {
  double best = std::numeric_limits<double>::infinity();
  for (const auto& c : m.curves()) best = std::min(best, refined_distance(c, q));
  return best;
}

// Trapezoid arc length from |velocity|.
inline double arc_length(const topoinc::CurveManifold& c, double u0, double u1, int n) {
  double s = 0.0;
  const double h = (u1 - u0) / n;
  for (int k = 0; k <= n; ++k) {
    const double w = (k == 0 || k == n) ? 0.5 : 1.0;
    s += w * c.velocity(u0 + k * h).norm();
  }
  return s * h;
}

// Breadth-first flood fill counting components of a binary grid.
inline int flood_components(const std::vector<std::uint8_t>& mask, int nx, int ny, bool eight,
                            std::vector<int>* areas = nullptr) {
  std::vector<int> seen(mask.size(), 0);
  int count = 0;
  for (int s = 0; s < nx * ny; ++s) {
    if (!mask[s] || seen[s]) continue;
    ++count;
    int area = 0;
    std::queue<int> q;
    q.push(s);
    seen[s] = 1;
    while (!q.empty()) {
      const int c = q.front();
      q.pop();
      ++area;
      const int ci = c % nx;
      const int cj = c / nx;
      for (int dj = -1; dj <= 1; ++dj) {
        for (int di = -1; di <= 1; ++di) {
          if (di == 0 && dj == 0) continue;
          if (!eight && di != 0 && dj != 0) continue;
          const int i = ci + di;
          const int j = cj + dj;
          if (i < 0 || j < 0 || i >= nx || j >= ny) continue;
          const int k = j * nx + i;
          if (mask[k] && !seen[k]) {
            seen[k] = 1;
            q.push(k);
          }
        }
      }
    }
    if (areas) areas->push_back(area);
  }
  return count;
}

// Holes as bounded 4-connected background components: pad the grid with a
// background ring; every background component not containing the ring is a hole.
inline int flood_holes(const std::vector<std::uint8_t>& mask, int nx, int ny) {
  const int px = nx + 2;
  const int py = ny + 2;
  std::vector<std::uint8_t> bg(static_cast<std::size_t>(px) * py, 1);
  for (int j = 0; j < ny; ++j) {
    for (int i = 0; i < nx; ++i) bg[(j + 1) * px + i + 1] = !mask[j * nx + i];
  }
  return flood_components(bg, px, py, false) - 1;
}

// Euler number of the 8-connected foreground from 2x2 quad counts (Gray's
// bit-quad formula); equals components - holes under 8/4 connectivity.
inline int euler_number8(const std::vector<std::uint8_t>& mask, int nx, int ny) {
  auto at = [&](int i, int j) -> int {
    if (i < 0 || j < 0 || i >= nx || j >= ny) return 0;
    return mask[j * nx + i];
  };
  int q1 = 0;
  int q3 = 0;
  int qd = 0;
  for (int j = -1; j < ny; ++j) {
    for (int i = -1; i < nx; ++i) {
      const int a = at(i, j);
      const int b = at(i + 1, j);
      const int c = at(i, j + 1);
      const int d = at(i + 1, j + 1);
      const int s = a + b + c + d;
      if (s == 1) ++q1;
      if (s == 3) ++q3;
      if (s == 2 && a == d && b == c && a != b) ++qd;
    }
  }
  return (q1 - q3 - 2 * qd) / 4;
}

// Central-difference derivative of a scalar function.
inline double central(const std::function<double(double)>& f, double x, double h) {
  return (f(x + h) - f(x - h)) / (2.0 * h);
}

}  // namespace oracle
