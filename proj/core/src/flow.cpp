#include "topoinc/flow.hpp"

#include <algorithm>
#include <cmath>

#include "topoinc/error.hpp"
#include "topoinc/parallel.hpp"

namespace topoinc {

CouplingNet CouplingNet::zeros(int hidden) {
  CouplingNet n;
  n.w1 = Eigen::MatrixXd::Zero(hidden, 1);
  n.b1 = Eigen::VectorXd::Zero(hidden);
  n.w2 = Eigen::MatrixXd::Zero(hidden, hidden);
  n.b2 = Eigen::VectorXd::Zero(hidden);
  n.w3 = Eigen::MatrixXd::Zero(2, hidden);
  n.b3 = Eigen::VectorXd::Zero(2);
  return n;
}

std::size_t CouplingNet::size() const {
  return static_cast<std::size_t>(w1.size() + b1.size() + w2.size() + b2.size() + w3.size() +
                                  b3.size());
}

std::vector<double> CouplingNet::flat() const {
  std::vector<double> out;
  out.reserve(size());
  auto& self = const_cast<CouplingNet&>(*this);
  self.for_each_block([&](double* p, std::size_t n) { out.insert(out.end(), p, p + n); });
  return out;
}

void CouplingNet::set_flat(const double* data) {
  for_each_block([&](double* p, std::size_t n) {
    std::copy(data, data + n, p);
    data += n;
  });
}

void CouplingNet::set_zero() {
  for_each_block([](double* p, std::size_t n) { std::fill(p, p + n, 0.0); });
}

Standardizer Standardizer::fit(const std::vector<Point>& points) {
  if (points.empty()) throw Error("invalid-argument", "cannot fit a standardizer on no points");
  Standardizer s;
  Point sum = Point::Zero();
  for (const auto& p : points) sum += p;
  s.mean = sum / static_cast<double>(points.size());
  Point var = Point::Zero();
  for (const auto& p : points) var += (p - s.mean).cwiseAbs2();
  var /= static_cast<double>(points.size());
  s.scale = var.cwiseSqrt();
  for (int d = 0; d < 2; ++d) {
    if (!(s.scale[d] > 0.0)) s.scale[d] = 1.0;
  }
  return s;
}

double Standardizer::log_det() const { return -std::log(scale.x()) - std::log(scale.y()); }

namespace {

template <typename S>
using RowT = Eigen::Matrix<S, 1, Eigen::Dynamic>;
template <typename S>
using BatchT = Eigen::Matrix<S, 2, Eigen::Dynamic>;
template <typename S>
using MatT = Eigen::Matrix<S, Eigen::Dynamic, Eigen::Dynamic>;
template <typename S>
using VecT = Eigen::Matrix<S, Eigen::Dynamic, 1>;

// Parameters of one coupling net in scalar type S.
template <typename S>
struct NetT {
  MatT<S> w1;
  VecT<S> b1;
  MatT<S> w2;
  VecT<S> b2;
  MatT<S> w3;
  VecT<S> b3;

  static NetT from(const CouplingNet& n) {
    return {n.w1.cast<S>(), n.b1.cast<S>(), n.w2.cast<S>(),
            n.b2.cast<S>(), n.w3.cast<S>(), n.b3.cast<S>()};
  }
  static NetT zeros(int h) {
    return {MatT<S>::Zero(h, 1), VecT<S>::Zero(h), MatT<S>::Zero(h, h),
            VecT<S>::Zero(h),    MatT<S>::Zero(2, h), VecT<S>::Zero(2)};
  }
  void add_to(CouplingNet& n) const {
    n.w1 += w1.template cast<double>();
    n.b1 += b1.template cast<double>();
    n.w2 += w2.template cast<double>();
    n.b2 += b2.template cast<double>();
    n.w3 += w3.template cast<double>();
    n.b3 += b3.template cast<double>();
  }
};

template <typename S>
struct NetCache {
  RowT<S> a;
  MatT<S> h1;
  MatT<S> h2;
  RowT<S> s;
  RowT<S> t;
  RowT<S> b;  // transformed coordinate on the latent side of the layer
};

template <typename S>
struct Tape {
  std::vector<NetCache<S>> layers;
};

template <typename S, typename Net>
void net_eval(const Net& net, S clamp, const RowT<S>& a, NetCache<S>& c) {
  c.a = a;
  c.h1.noalias() = net.w1 * a;
  c.h1.colwise() += net.b1;
  c.h1 = c.h1.cwiseMax(S(0));
  c.h2.noalias() = net.w2 * c.h1;
  c.h2.colwise() += net.b2;
  c.h2 = c.h2.cwiseMax(S(0));
  MatT<S> raw = net.w3 * c.h2;
  raw.colwise() += net.b3;
  c.s = (clamp * (raw.row(0).array() / clamp).tanh()).matrix();
  c.t = raw.row(1);
}

// Returns dL/da; accumulates parameter gradients into `grad` when given.
template <typename S, typename Net>
RowT<S> net_backward(const Net& net, S clamp, const NetCache<S>& c, const RowT<S>& g_s,
                     const RowT<S>& g_t, Net* grad) {
  const Eigen::Index n = c.a.cols();
  MatT<S> g_raw(2, n);
  g_raw.row(0) = (g_s.array() * (S(1) - (c.s.array() / clamp).square())).matrix();
  g_raw.row(1) = g_t;
  MatT<S> g_h2 = net.w3.transpose() * g_raw;
  g_h2 = (c.h2.array() > S(0)).select(g_h2, S(0));
  MatT<S> g_h1 = net.w2.transpose() * g_h2;
  g_h1 = (c.h1.array() > S(0)).select(g_h1, S(0));
  if (grad) {
    grad->w3.noalias() += g_raw * c.h2.transpose();
    grad->b3 += g_raw.rowwise().sum();
    grad->w2.noalias() += g_h2 * c.h1.transpose();
    grad->b2 += g_h2.rowwise().sum();
    grad->w1.noalias() += g_h1 * c.a.transpose();
    grad->b1 += g_h1.rowwise().sum();
  }
  return net.w1.transpose() * g_h1;
}

template <typename S, typename Net>
void forward_tape(const std::vector<const Net*>& nets, const std::vector<int>& cond_idx, S clamp,
                  const BatchT<S>& z, BatchT<S>& x, VecT<S>& log_det, Tape<S>* tape) {
  x = z;
  log_det = VecT<S>::Zero(z.cols());
  NetCache<S> local;
  if (tape) tape->layers.resize(nets.size());
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const int cond = cond_idx[k];
    NetCache<S>& c = tape ? tape->layers[k] : local;
    net_eval<S>(*nets[k], clamp, x.row(cond), c);
    c.b = x.row(1 - cond);
    x.row(1 - cond) = (c.b.array() * c.s.array().exp() + c.t.array()).matrix();
    log_det += c.s.transpose();
  }
}

template <typename S, typename Net>
void inverse_tape(const std::vector<const Net*>& nets, const std::vector<int>& cond_idx, S clamp,
                  const BatchT<S>& x, BatchT<S>& z, VecT<S>& log_det, Tape<S>* tape) {
  z = x;
  log_det = VecT<S>::Zero(x.cols());
  NetCache<S> local;
  if (tape) tape->layers.resize(nets.size());
  for (std::size_t kk = nets.size(); kk-- > 0;) {
    const int cond = cond_idx[kk];
    NetCache<S>& c = tape ? tape->layers[kk] : local;
    net_eval<S>(*nets[kk], clamp, z.row(cond), c);
    c.b = ((z.row(1 - cond).array() - c.t.array()) * (-c.s.array()).exp()).matrix();
    z.row(1 - cond) = c.b;
    log_det -= c.s.transpose();
  }
}

// Gradient w.r.t. x given dL/dz and dL/d(log_det) of the inverse pass.
template <typename S, typename Net>
BatchT<S> inverse_backward(const std::vector<const Net*>& nets, const std::vector<int>& cond_idx,
                           S clamp, const Tape<S>& tape, const BatchT<S>& g_z,
                           const RowT<S>& g_ld, std::vector<Net>* grads) {
  BatchT<S> g = g_z;
  for (std::size_t k = 0; k < nets.size(); ++k) {
    const int cond = cond_idx[k];
    const NetCache<S>& c = tape.layers[k];
    const RowT<S> g_b = g.row(1 - cond);
    const RowT<S> g_bp = (g_b.array() * (-c.s.array()).exp()).matrix();
    const RowT<S> g_t = -g_bp;
    const RowT<S> g_s = (-g_b.array() * c.b.array() - g_ld.array()).matrix();
    const RowT<S> g_a = g.row(cond) + net_backward<S>(*nets[k], clamp, c, g_s, g_t,
                                                      grads ? &(*grads)[k] : nullptr);
    g.row(cond) = g_a;
    g.row(1 - cond) = g_bp;
  }
  return g;
}

// Gradient w.r.t. z given dL/dx (log-det not differentiated).
template <typename S, typename Net>
BatchT<S> forward_backward(const std::vector<const Net*>& nets, const std::vector<int>& cond_idx,
                           S clamp, const Tape<S>& tape, const BatchT<S>& g_x) {
  BatchT<S> g = g_x;
  for (std::size_t kk = nets.size(); kk-- > 0;) {
    const int cond = cond_idx[kk];
    const NetCache<S>& c = tape.layers[kk];
    const RowT<S> g_bp = g.row(1 - cond);
    const auto e = c.s.array().exp();
    const RowT<S> g_b = (g_bp.array() * e).matrix();
    const RowT<S> g_s = (g_bp.array() * c.b.array() * e).matrix();
    const RowT<S> g_a =
        g.row(cond) + net_backward<S>(*nets[kk], clamp, c, g_s, g_bp, static_cast<Net*>(nullptr));
    g.row(cond) = g_a;
    g.row(1 - cond) = g_b;
  }
  return g;
}

std::vector<const CouplingNet*> net_ptrs(const FlowModel& fm) {
  std::vector<const CouplingNet*> out;
  for (const auto& l : fm.layers()) out.push_back(&l.net);
  return out;
}

std::vector<int> cond_indices(const FlowModel& fm) {
  std::vector<int> out;
  for (const auto& l : fm.layers()) out.push_back(l.conditioned_index);
  return out;
}

void require_finite(const Batch& b, const char* what) {
  if (!b.allFinite()) throw Error("non-finite-value", std::string("non-finite ") + what);
}

Batch to_batch(const Point& p) {
  Batch b(2, 1);
  b.col(0) = p;
  return b;
}

void fwd(const FlowModel& fm, const Batch& z, Batch& x, Eigen::VectorXd& ld, Tape<double>* tape) {
  forward_tape<double, CouplingNet>(net_ptrs(fm), cond_indices(fm),
                                    fm.architecture().log_scale_clamp, z, x, ld, tape);
}

void inv(const FlowModel& fm, const Batch& x, Batch& z, Eigen::VectorXd& ld, Tape<double>* tape) {
  inverse_tape<double, CouplingNet>(net_ptrs(fm), cond_indices(fm),
                                    fm.architecture().log_scale_clamp, x, z, ld, tape);
}

Batch fwd_backward(const FlowModel& fm, const Tape<double>& tape, const Batch& g_x) {
  return forward_backward<double, CouplingNet>(net_ptrs(fm), cond_indices(fm),
                                               fm.architecture().log_scale_clamp, tape, g_x);
}

// Per-sample loss weights; class-aware weights are 1 / (l m_i).
std::vector<double> loss_weights(const LatentMixture& lm, Eigen::Index n,
                                 const std::vector<int>& labels, bool class_aware,
                                 int& empty_classes) {
  std::vector<double> weight(static_cast<std::size_t>(n), 1.0 / static_cast<double>(n));
  empty_classes = 0;
  if (!class_aware) return weight;
  if (labels.size() != static_cast<std::size_t>(n)) {
    throw Error("invalid-argument", "class-aware loss needs one label per sample");
  }
  const int l = lm.size();
  std::vector<int> counts(static_cast<std::size_t>(l), 0);
  for (int y : labels) {
    if (y < 0 || y >= l) throw Error("invalid-argument", "label outside latent component range");
    ++counts[static_cast<std::size_t>(y)];
  }
  for (int c : counts) empty_classes += c == 0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const int y = labels[static_cast<std::size_t>(j)];
    weight[static_cast<std::size_t>(j)] = 1.0 / (l * counts[static_cast<std::size_t>(y)]);
  }
  return weight;
}

template <typename S, typename Net>
double loss_impl(const std::vector<const Net*>& nets, const std::vector<int>& cond, S clamp,
                 const LatentMixture& lm, const Batch& x, const std::vector<int>& labels,
                 bool class_aware, std::vector<Net>& grads, int& empty_classes) {
  const Eigen::Index n = x.cols();
  const std::vector<double> weight = loss_weights(lm, n, labels, class_aware, empty_classes);
  Tape<S> tape;
  BatchT<S> z;
  VecT<S> ld;
  inverse_tape<S, Net>(nets, cond, clamp, x.template cast<S>(), z, ld, &tape);

  BatchT<S> g_z(2, n);
  RowT<S> g_ld(n);
  double loss = 0.0;
  for (Eigen::Index j = 0; j < n; ++j) {
    const double w = weight[static_cast<std::size_t>(j)];
    const Point zj = z.col(j).template cast<double>();
    double lp;
    Point glp;
    if (class_aware) {
      const int y = labels[static_cast<std::size_t>(j)];
      lp = lm.log_pdf_component(y, zj);
      glp = lm.grad_log_pdf_component(y, zj);
    } else {
      lp = lm.log_pdf(zj);
      glp = lm.grad_log_pdf(zj);
    }
    loss -= w * (lp + static_cast<double>(ld[j]));
    g_z.col(j) = (-w * glp).template cast<S>();
    g_ld[j] = static_cast<S>(-w);
  }
  if (!std::isfinite(loss)) throw Error("non-finite-loss", "training loss is not finite");
  inverse_backward<S, Net>(nets, cond, clamp, tape, g_z, g_ld, &grads);
  return loss;
}

constexpr Eigen::Index kChunk = 256;

}  // namespace

FlowModel::FlowModel(FlowArchitecture arch, LatentMixture latent, Standardizer standardizer)
    : arch_(arch), latent_(std::move(latent)), standardizer_(standardizer) {
  if (arch_.num_layers < 1 || arch_.hidden < 1 || !(arch_.log_scale_clamp > 0.0)) {
    throw Error("invalid-argument", "invalid flow architecture");
  }
  layers_.resize(static_cast<std::size_t>(arch_.num_layers));
  for (int k = 0; k < arch_.num_layers; ++k) {
    layers_[k].conditioned_index = k % 2;
    layers_[k].net = CouplingNet::zeros(arch_.hidden);
  }
}

void FlowModel::initialize(std::uint64_t seed) { randomize(seed, 0.0); }

void FlowModel::randomize(std::uint64_t seed, double output_scale) {
  for (std::size_t k = 0; k < layers_.size(); ++k) {
    Rng rng = make_rng(seed, "init", k);
    auto fill = [&](double* p, std::size_t n, double bound) {
      for (std::size_t i = 0; i < n; ++i) p[i] = (2.0 * uniform01(rng) - 1.0) * bound;
    };
    CouplingNet& net = layers_[k].net;
    const double b1 = 1.0;
    const double b2 = 1.0 / std::sqrt(static_cast<double>(arch_.hidden));
    fill(net.w1.data(), static_cast<std::size_t>(net.w1.size()), b1);
    fill(net.b1.data(), static_cast<std::size_t>(net.b1.size()), b1);
    fill(net.w2.data(), static_cast<std::size_t>(net.w2.size()), b2);
    fill(net.b2.data(), static_cast<std::size_t>(net.b2.size()), b2);
    fill(net.w3.data(), static_cast<std::size_t>(net.w3.size()), output_scale);
    fill(net.b3.data(), static_cast<std::size_t>(net.b3.size()), output_scale);
  }
}

FlowPoint FlowModel::forward(const Point& z) const {
  Batch x;
  Eigen::VectorXd ld;
  forward_batch(to_batch(z), x, ld);
  return {x.col(0), ld[0]};
}

FlowPoint FlowModel::inverse(const Point& x) const {
  Batch z;
  Eigen::VectorXd ld;
  inverse_batch(to_batch(x), z, ld);
  return {z.col(0), ld[0]};
}

void FlowModel::forward_batch(const Batch& z, Batch& x, Eigen::VectorXd& log_det) const {
  require_finite(z, "flow input");
  fwd(*this, z, x, log_det, nullptr);
  require_finite(x, "flow output");
}

void FlowModel::inverse_batch(const Batch& x, Batch& z, Eigen::VectorXd& log_det) const {
  require_finite(x, "flow input");
  inv(*this, x, z, log_det, nullptr);
  require_finite(z, "flow output");
}

double FlowModel::log_pdf(const Point& x) const {
  const FlowPoint r = inverse(x);
  return latent_.log_pdf(r.point) + r.log_det;
}

double FlowModel::log_pdf_class(int k, const Point& x) const {
  const FlowPoint r = inverse(x);
  return latent_.log_pdf_component(k, r.point) + r.log_det;
}

std::vector<double> FlowModel::log_pdf_batch(const std::vector<Point>& x,
                                             std::size_t workers) const {
  const auto n = static_cast<Eigen::Index>(x.size());
  std::vector<double> out(x.size());
  const std::size_t chunks = static_cast<std::size_t>((n + kChunk - 1) / kChunk);
  parallel_for(
      chunks,
      [&](std::size_t c) {
        const Eigen::Index lo = static_cast<Eigen::Index>(c) * kChunk;
        const Eigen::Index hi = std::min(n, lo + kChunk);
        Batch xb(2, hi - lo);
        for (Eigen::Index j = lo; j < hi; ++j) xb.col(j - lo) = x[static_cast<std::size_t>(j)];
        Batch z;
        Eigen::VectorXd ld;
        inverse_batch(xb, z, ld);
        for (Eigen::Index j = lo; j < hi; ++j) {
          out[static_cast<std::size_t>(j)] = latent_.log_pdf(z.col(j - lo)) + ld[j - lo];
        }
      },
      workers);
  return out;
}

double FlowModel::log_pdf_raw(const Point& x_raw) const {
  return log_pdf(standardizer_.apply(x_raw)) + standardizer_.log_det();
}

std::size_t FlowModel::num_params() const {
  std::size_t n = 0;
  for (const auto& l : layers_) n += l.net.size();
  return n;
}

std::vector<double> FlowModel::flat_params() const {
  std::vector<double> out;
  out.reserve(num_params());
  for (const auto& l : layers_) {
    const auto f = l.net.flat();
    out.insert(out.end(), f.begin(), f.end());
  }
  return out;
}

void FlowModel::set_flat_params(const std::vector<double>& flat) {
  if (flat.size() != num_params()) {
    throw Error("invalid-argument", "parameter vector size does not match the architecture");
  }
  const double* p = flat.data();
  for (auto& l : layers_) {
    l.net.set_flat(p);
    p += l.net.size();
  }
}

LossResult loss_and_gradients(const FlowModel& fm, const Batch& x, const std::vector<int>& labels,
                              bool class_aware, Precision precision) {
  if (x.cols() < 1) throw Error("invalid-argument", "empty training batch");
  const int hidden = fm.architecture().hidden;
  const auto cond = cond_indices(fm);
  LossResult out;
  if (precision == Precision::kDouble) {
    for (std::size_t k = 0; k < fm.layers().size(); ++k) {
      out.grads.push_back(CouplingNet::zeros(hidden));
    }
    out.loss = loss_impl<double, CouplingNet>(net_ptrs(fm), cond, fm.architecture().log_scale_clamp,
                                              fm.latent(), x, labels, class_aware, out.grads,
                                              out.empty_classes);
    return out;
  }
  std::vector<NetT<float>> nets;
  std::vector<NetT<float>> grads;
  for (const auto& l : fm.layers()) {
    nets.push_back(NetT<float>::from(l.net));
    grads.push_back(NetT<float>::zeros(hidden));
  }
  std::vector<const NetT<float>*> ptrs;
  for (const auto& n : nets) ptrs.push_back(&n);
  out.loss = loss_impl<float, NetT<float>>(
      ptrs, cond, static_cast<float>(fm.architecture().log_scale_clamp), fm.latent(), x, labels,
      class_aware, grads, out.empty_classes);
  for (const auto& g : grads) {
    out.grads.push_back(CouplingNet::zeros(hidden));
    g.add_to(out.grads.back());
  }
  return out;
}

LossResult loss_and_gradients(const FlowModel& fm, const std::vector<LabeledSample>& batch,
                              bool class_aware, Precision precision) {
  Batch x(2, static_cast<Eigen::Index>(batch.size()));
  std::vector<int> labels;
  labels.reserve(batch.size());
  for (std::size_t j = 0; j < batch.size(); ++j) {
    x.col(static_cast<Eigen::Index>(j)) = fm.standardizer().apply(batch[j].point);
    labels.push_back(batch[j].label);
  }
  return loss_and_gradients(fm, x, labels, class_aware, precision);
}

Batch forward_vjp(const FlowModel& fm, const Batch& z, const Batch& g, Batch& x) {
  Tape<double> tape;
  Eigen::VectorXd ld;
  fwd(fm, z, x, ld, &tape);
  return fwd_backward(fm, tape, g);
}

namespace {
constexpr double kExactFit = 1e-12;
}  // namespace

void inc_objective_batch(const FlowModel& fm, const Batch& z, const Batch& target,
                         const std::vector<int>& components, const Eigen::VectorXd& peaks,
                         double alpha, Batch& x, Eigen::VectorXd& value, Batch& grad) {
  const Eigen::Index n = z.cols();
  const LatentMixture& lm = fm.latent();
  Tape<double> tape;
  Eigen::VectorXd ld;
  fwd(fm, z, x, ld, &tape);
  Batch g_x(2, n);
  value.resize(n);
  Batch g_reg(2, n);
  for (Eigen::Index j = 0; j < n; ++j) {
    const Point diff = x.col(j) - target.col(j);
    const double d = diff.norm();
    // Below kExactFit the residual is round-off of an exact fit.
    g_x.col(j) = d > kExactFit ? Point(diff / d) : Point::Zero();
    const int k = components[static_cast<std::size_t>(j)];
    const Point zj = z.col(j);
    const double p = k < 0 ? lm.pdf(zj) : lm.pdf_component(k, zj);
    const Point glp = k < 0 ? lm.grad_log_pdf(zj) : lm.grad_log_pdf_component(k, zj);
    value[j] = d + alpha * (peaks[j] - p);
    g_reg.col(j) = -alpha * p * glp;
  }
  grad = fwd_backward(fm, tape, g_x) + g_reg;
}

InputGradient gradient_wrt_input(const FlowModel& fm, const InputObjectiveSpec& spec,
                                 const Point& z) {
  InputGradient out;
  const Batch zb = to_batch(z);
  if (spec.kind == InputObjective::kSquaredDistance) {
    Tape<double> tape;
    Batch x;
    Eigen::VectorXd ld;
    fwd(fm, zb, x, ld, &tape);
    out.x = x.col(0);
    out.value = (out.x - spec.target).squaredNorm();
    const Batch g = fwd_backward(fm, tape, to_batch(2.0 * (out.x - spec.target)));
    out.grad = g.col(0);
    return out;
  }
  Batch x;
  Eigen::VectorXd value;
  Batch grad;
  Eigen::VectorXd peaks(1);
  peaks[0] = spec.peak;
  inc_objective_batch(fm, zb, to_batch(spec.target), {spec.component}, peaks, spec.alpha, x,
                      value, grad);
  out.x = x.col(0);
  out.value = value[0];
  out.grad = grad.col(0);
  return out;
}

}  // namespace topoinc
