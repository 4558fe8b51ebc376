#include "topoinc/baseline.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

#include "topoinc/error.hpp"
#include "topoinc/parallel.hpp"

namespace topoinc {
namespace {

constexpr double kTau = 1e-12;

}  // namespace

Eigen::MatrixXd rbf_kernel_matrix(const std::vector<Point>& points, double gamma) {
  const auto n = static_cast<Eigen::Index>(points.size());
  Eigen::MatrixXd k(n, n);
  for (Eigen::Index i = 0; i < n; ++i) {
    k(i, i) = 1.0;
    for (Eigen::Index j = 0; j < i; ++j) {
      const double v =
          std::exp(-gamma * (points[static_cast<std::size_t>(i)] - points[static_cast<std::size_t>(j)])
                                .squaredNorm());
      k(i, j) = v;
      k(j, i) = v;
    }
  }
  return k;
}

BinarySolution smo_solve(const Eigen::MatrixXd& kernel, const std::vector<int>& y, double c_reg,
                         double tolerance, long max_iterations) {
  const auto n = static_cast<Eigen::Index>(y.size());
  if (kernel.rows() != n || kernel.cols() != n) {
    throw Error("invalid-argument", "kernel size does not match labels");
  }
  if (!(c_reg > 0.0)) throw Error("invalid-argument", "C must be > 0");
  std::vector<double> alpha(static_cast<std::size_t>(n), 0.0);
  std::vector<double> grad(static_cast<std::size_t>(n), -1.0);  // Q alpha - e
  auto upper = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] >= c_reg; };
  auto lower = [&](Eigen::Index t) { return alpha[static_cast<std::size_t>(t)] <= 0.0; };
  auto yy = [&](Eigen::Index t) { return static_cast<double>(y[static_cast<std::size_t>(t)]); };
  auto g = [&](Eigen::Index t) -> double& { return grad[static_cast<std::size_t>(t)]; };
  auto a = [&](Eigen::Index t) -> double& { return alpha[static_cast<std::size_t>(t)]; };

  BinarySolution sol;
  for (long it = 0; it < max_iterations; ++it) {
    // Working set: i maximizes -y G over I_up, j minimizes the second-order
    // objective decrease over I_low.
    double gmax = -std::numeric_limits<double>::infinity();
    double gmax2 = -std::numeric_limits<double>::infinity();
    Eigen::Index i = -1;
    for (Eigen::Index t = 0; t < n; ++t) {
      if (yy(t) > 0) {
        if (!upper(t) && -g(t) >= gmax) {
          gmax = -g(t);
          i = t;
        }
      } else if (!lower(t) && g(t) >= gmax) {
        gmax = g(t);
        i = t;
      }
    }
    Eigen::Index j = -1;
    double obj_min = std::numeric_limits<double>::infinity();
    if (i >= 0) {
      for (Eigen::Index t = 0; t < n; ++t) {
        const double qit = yy(i) * yy(t) * kernel(t, i);
        if (yy(t) > 0) {
          if (lower(t)) continue;
          const double diff = gmax + g(t);
          gmax2 = std::max(gmax2, g(t));
          if (diff > 0) {
            double quad = kernel(i, i) + kernel(t, t) - 2.0 * yy(i) * qit;
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= obj_min) {
              j = t;
              obj_min = obj;
            }
          }
        } else {
          if (upper(t)) continue;
          const double diff = gmax - g(t);
          gmax2 = std::max(gmax2, -g(t));
          if (diff > 0) {
            double quad = kernel(i, i) + kernel(t, t) + 2.0 * yy(i) * qit;
            if (quad <= 0) quad = kTau;
            const double obj = -(diff * diff) / quad;
            if (obj <= obj_min) {
              j = t;
              obj_min = obj;
            }
          }
        }
      }
    }
    if (i < 0 || j < 0 || gmax + gmax2 < tolerance) {
      sol.converged = true;
      sol.iterations = it;
      break;
    }

    const double ai_old = a(i);
    const double aj_old = a(j);
    const double qij = yy(i) * yy(j) * kernel(i, j);
    if (yy(i) != yy(j)) {
      double quad = kernel(i, i) + kernel(j, j) + 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (-g(i) - g(j)) / quad;
      const double diff = a(i) - a(j);
      a(i) += delta;
      a(j) += delta;
      if (diff > 0) {
        if (a(j) < 0) {
          a(j) = 0;
          a(i) = diff;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = -diff;
      }
      if (diff > 0) {
        if (a(i) > c_reg) {
          a(i) = c_reg;
          a(j) = c_reg - diff;
        }
      } else if (a(j) > c_reg) {
        a(j) = c_reg;
        a(i) = c_reg + diff;
      }
    } else {
      double quad = kernel(i, i) + kernel(j, j) - 2.0 * qij;
      if (quad <= 0) quad = kTau;
      const double delta = (g(i) - g(j)) / quad;
      const double sum = a(i) + a(j);
      a(i) -= delta;
      a(j) += delta;
      if (sum > c_reg) {
        if (a(i) > c_reg) {
          a(i) = c_reg;
          a(j) = sum - c_reg;
        }
      } else if (a(j) < 0) {
        a(j) = 0;
        a(i) = sum;
      }
      if (sum > c_reg) {
        if (a(j) > c_reg) {
          a(j) = c_reg;
          a(i) = sum - c_reg;
        }
      } else if (a(i) < 0) {
        a(i) = 0;
        a(j) = sum;
      }
    }
    const double dai = a(i) - ai_old;
    const double daj = a(j) - aj_old;
    for (Eigen::Index t = 0; t < n; ++t) {
      g(t) += yy(t) * (yy(i) * kernel(t, i) * dai + yy(j) * kernel(t, j) * daj);
    }
    sol.iterations = it + 1;
  }

  double ub = std::numeric_limits<double>::infinity();
  double lb = -std::numeric_limits<double>::infinity();
  double sum_free = 0.0;
  int n_free = 0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double yg = yy(t) * g(t);
    if (upper(t)) {
      if (yy(t) < 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else if (lower(t)) {
      if (yy(t) > 0) {
        ub = std::min(ub, yg);
      } else {
        lb = std::max(lb, yg);
      }
    } else {
      ++n_free;
      sum_free += yg;
    }
  }
  sol.rho = n_free > 0 ? sum_free / n_free : 0.5 * (ub + lb);
  sol.alpha = std::move(alpha);
  return sol;
}

double kkt_residual(const Eigen::MatrixXd& kernel, const std::vector<int>& y,
                    const BinarySolution& sol, double c_reg) {
  const auto n = static_cast<Eigen::Index>(y.size());
  Eigen::VectorXd coef(n);
  for (Eigen::Index t = 0; t < n; ++t) {
    coef[t] = sol.alpha[static_cast<std::size_t>(t)] * y[static_cast<std::size_t>(t)];
  }
  const Eigen::VectorXd f = kernel * coef - Eigen::VectorXd::Constant(n, sol.rho);
  double worst = 0.0;
  for (Eigen::Index t = 0; t < n; ++t) {
    const double r = y[static_cast<std::size_t>(t)] * f[t] - 1.0;
    const double al = sol.alpha[static_cast<std::size_t>(t)];
    double v;
    if (al <= 0.0) {
      v = std::max(0.0, -r);
    } else if (al >= c_reg) {
      v = std::max(0.0, r);
    } else {
      v = std::abs(r);
    }
    worst = std::max(worst, v);
  }
  return worst;
}

SvmModel::SvmModel(double gamma, double c_reg, std::vector<BinarySvm> machines)
    : gamma_(gamma), c_reg_(c_reg), machines_(std::move(machines)) {}

std::vector<double> SvmModel::decision_values(const Point& x) const {
  std::vector<double> out;
  out.reserve(machines_.size());
  for (const auto& m : machines_) {
    double f = -m.rho;
    for (std::size_t i = 0; i < m.support.size(); ++i) {
      f += m.coef[i] * std::exp(-gamma_ * (m.support[i] - x).squaredNorm());
    }
    out.push_back(f);
  }
  return out;
}

int SvmModel::predict(const Point& x) const {
  const auto d = decision_values(x);
  int best = 0;
  for (int k = 1; k < static_cast<int>(d.size()); ++k) {
    if (d[static_cast<std::size_t>(k)] > d[static_cast<std::size_t>(best)]) best = k;
  }
  return best;
}

std::vector<int> SvmModel::predict_batch(const std::vector<Point>& x, std::size_t workers) const {
  return parallel_map<int>(x.size(), [&](std::size_t i) { return predict(x[i]); }, workers);
}

SvmModel svm_train(const std::vector<LabeledSample>& data, const SvmConfig& cfg) {
  if (!(cfg.gamma > 0.0)) throw Error("invalid-argument", "gamma must be > 0");
  int l = 0;
  for (const auto& s : data) {
    if (s.label < 0) throw Error("invalid-argument", "negative label");
    l = std::max(l, s.label + 1);
  }
  std::vector<int> counts(static_cast<std::size_t>(l), 0);
  for (const auto& s : data) ++counts[static_cast<std::size_t>(s.label)];
  if (l < 2 || *std::min_element(counts.begin(), counts.end()) < 1) {
    throw Error("single-class", "SVM training needs >= 2 classes, each with samples");
  }
  std::vector<Point> pts;
  pts.reserve(data.size());
  for (const auto& s : data) pts.push_back(s.point);
  const Eigen::MatrixXd k = rbf_kernel_matrix(pts, cfg.gamma);
  std::vector<BinarySvm> machines;
  for (int c = 0; c < l; ++c) {
    std::vector<int> y(data.size());
    for (std::size_t i = 0; i < data.size(); ++i) y[i] = data[i].label == c ? 1 : -1;
    const BinarySolution sol = smo_solve(k, y, cfg.c_reg, cfg.tolerance, cfg.max_iterations);
    BinarySvm m;
    m.rho = sol.rho;
    m.iterations = sol.iterations;
    m.kkt_residual = kkt_residual(k, y, sol, cfg.c_reg);
    for (std::size_t i = 0; i < data.size(); ++i) {
      if (sol.alpha[i] > 0.0) {
        m.support.push_back(pts[i]);
        m.coef.push_back(sol.alpha[i] * y[i]);
      }
    }
    machines.push_back(std::move(m));
  }
  return SvmModel(cfg.gamma, cfg.c_reg, std::move(machines));
}

double training_accuracy(const SvmModel& svm, const std::vector<LabeledSample>& data) {
  if (data.empty()) return 0.0;
  std::size_t ok = 0;
  for (const auto& s : data) ok += svm.predict(s.point) == s.label;
  return static_cast<double>(ok) / static_cast<double>(data.size());
}

std::string to_string(Defense d) {
  switch (d) {
    case Defense::kNone:
      return "none";
    case Defense::kIdeal:
      return "ideal";
    case Defense::kIgnorant:
      return "ignorant";
    case Defense::kAware:
      return "aware";
  }
  return "unknown";
}

Defense defense_from_string(const std::string& s) {
  if (s == "none") return Defense::kNone;
  if (s == "ideal") return Defense::kIdeal;
  if (s == "ignorant") return Defense::kIgnorant;
  if (s == "aware") return Defense::kAware;
  throw Error("invalid-argument", "unknown defense '" + s + "'");
}

BoundaryGrid boundary_eval(const SvmModel& svm, Defense defense, const BoundaryContext& ctx,
                           const Domain& domain, int resolution, std::size_t workers) {
  if (resolution < 2 || resolution > kMaxBoundaryGrid) {
    throw Error("invalid-argument", "boundary grid resolution must be in [2, 300]");
  }
  BoundaryGrid out;
  out.domain = domain;
  out.nx = resolution;
  out.ny = resolution;
  out.defense = defense;
  const double w = (domain.x_hi - domain.x_lo) / resolution;
  const double h = (domain.y_hi - domain.y_lo) / resolution;
  std::vector<Point> cells;
  cells.reserve(static_cast<std::size_t>(resolution) * resolution);
  for (int j = 0; j < resolution; ++j) {
    for (int i = 0; i < resolution; ++i) {
      cells.emplace_back(domain.x_lo + (i + 0.5) * w, domain.y_lo + (j + 0.5) * h);
    }
  }

  std::vector<Point> projected;
  switch (defense) {
    case Defense::kNone:
      projected = cells;
      break;
    case Defense::kIdeal: {
      if (!ctx.manifold) throw Error("invalid-argument", "ideal defense needs the manifold");
      projected = parallel_map<Point>(
          cells.size(),
          [&](std::size_t c) {
            const Point raw = ctx.grid_space.invert(cells[c]);
            return Point(ctx.grid_space.apply(nearest_point(*ctx.manifold, raw).point));
          },
          workers);
      break;
    }
    case Defense::kIgnorant:
    case Defense::kAware: {
      const FlowModel* fm = defense == Defense::kIgnorant ? ctx.ignorant : ctx.aware;
      if (!fm) throw Error("invalid-argument", "flow defense needs its model");
      std::vector<Point> q(cells.size());
      for (std::size_t c = 0; c < cells.size(); ++c) {
        q[c] = fm->standardizer().apply(ctx.grid_space.invert(cells[c]));
      }
      IncConfig cfg = ctx.inc;
      cfg.keep_trace = false;
      const auto res = defense == Defense::kIgnorant
                           ? project_ignorant_batch(*fm, q, cfg, workers)
                           : project_aware_batch(*fm, q, cfg, workers, svm.num_classes());
      projected.resize(cells.size());
      for (std::size_t c = 0; c < cells.size(); ++c) {
        projected[c] = ctx.grid_space.apply(fm->standardizer().invert(res[c].x_star));
      }
      break;
    }
  }
  out.labels = svm.predict_batch(projected, workers);
  return out;
}

double agreement(const BoundaryGrid& a, const BoundaryGrid& b) {
  if (a.labels.size() != b.labels.size() || a.labels.empty()) {
    throw Error("invalid-argument", "boundary grids differ in size");
  }
  std::size_t same = 0;
  for (std::size_t i = 0; i < a.labels.size(); ++i) same += a.labels[i] == b.labels[i];
  return static_cast<double>(same) / static_cast<double>(a.labels.size());
}

}  // namespace topoinc
