#include "diffgreeks/network.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include "diffgreeks/errors.hpp"
#include "diffgreeks/rng.hpp"

namespace diffgreeks {

namespace {
constexpr Eigen::Index kSlab = 128;
}  // namespace

Network::Network(std::vector<std::size_t> widths, Activation activation)
    : widths_(std::move(widths)), activation_(activation) {
  if (widths_.size() < 2) throw ConfigError("network: need at least an input and an output width");
  if (widths_.front() < 2) throw ConfigError("network: input width must be n + 1 >= 2");
  if (widths_.back() != 1) throw ConfigError("network: output width must be 1");
  std::size_t total = 0;
  for (std::size_t l = 0; l + 1 < widths_.size(); ++l) {
    if (widths_[l + 1] == 0) throw ConfigError("network: zero-width layer");
    offsets_.push_back(total);
    total += widths_[l + 1] * widths_[l] + widths_[l + 1];
  }
  params_ = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(total));
}

Eigen::Map<const RowMajorMatrix> Network::weight(std::size_t l) const {
  return {params_.data() + offsets_[l], static_cast<Eigen::Index>(widths_[l + 1]),
          static_cast<Eigen::Index>(widths_[l])};
}
Eigen::Map<RowMajorMatrix> Network::weight(std::size_t l) {
  return {params_.data() + offsets_[l], static_cast<Eigen::Index>(widths_[l + 1]),
          static_cast<Eigen::Index>(widths_[l])};
}
Eigen::Map<const Eigen::VectorXd> Network::bias(std::size_t l) const {
  return {params_.data() + bias_offset(l), static_cast<Eigen::Index>(widths_[l + 1])};
}
Eigen::Map<Eigen::VectorXd> Network::bias(std::size_t l) {
  return {params_.data() + bias_offset(l), static_cast<Eigen::Index>(widths_[l + 1])};
}

std::vector<std::size_t> default_widths(std::size_t assets) { return {assets + 1, 35, 35, 35, 35, 1}; }

Network init_params(const std::vector<std::size_t>& widths, Activation activation, std::uint64_t seed) {
  Network net(widths, activation);
  const CounterRng rng(seed);
  std::uint64_t counter = 0;
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const double limit = std::sqrt(6.0 / static_cast<double>(widths[l] + widths[l + 1]));
    auto w = net.weight(l);
    for (Eigen::Index i = 0; i < w.rows(); ++i)
      for (Eigen::Index j = 0; j < w.cols(); ++j) w(i, j) = limit * (2.0 * rng.uniform(counter++) - 1.0);
  }
  return net;
}

void EvalBatch::resize(std::size_t d, std::size_t pairs, std::size_t points) {
  value.setZero(static_cast<Eigen::Index>(points));
  grad.setZero(static_cast<Eigen::Index>(d), static_cast<Eigen::Index>(points));
  hess.setZero(static_cast<Eigen::Index>(pairs), static_cast<Eigen::Index>(points));
}

void EvalBatch::set_zero() {
  value.setZero();
  grad.setZero();
  hess.setZero();
}

std::size_t hessian_pair(std::size_t i, std::size_t j, std::size_t assets) noexcept {
  if (i > j) std::swap(i, j);
  // Rows 0..i-1 contribute assets, assets-1, ... entries.
  return i * assets - i * (i - 1) / 2 + (j - i);
}

EvalRecord EvalBatch::record(std::size_t p, std::size_t assets) const {
  const auto col = static_cast<Eigen::Index>(p);
  const auto n = static_cast<Eigen::Index>(assets);
  EvalRecord r;
  r.value = value[col];
  r.grad_t = grad(0, col);
  r.grad_s = grad.col(col).tail(n);
  r.hess_s.resize(n, n);
  for (std::size_t i = 0; i < assets; ++i)
    for (std::size_t j = 0; j < assets; ++j)
      r.hess_s(static_cast<Eigen::Index>(i), static_cast<Eigen::Index>(j)) =
          hess(static_cast<Eigen::Index>(hessian_pair(i, j, assets)), col);
  return r;
}

void NetworkTape::forward(const Network& net, const Eigen::MatrixXd& inputs) {
  const auto d = static_cast<Eigen::Index>(net.inputs());
  if (inputs.rows() != d) throw DimensionError("network: input rows must equal n + 1");
  d_ = net.inputs();
  n_ = net.assets();
  q_ = hessian_pairs(n_);
  points_ = static_cast<std::size_t>(inputs.cols());
  const Eigen::Index P = inputs.cols();
  const Eigen::Index K = 1 + d + static_cast<Eigen::Index>(q_);
  const std::size_t L = net.layers();
  const Activation& act = net.activation();

  a_.resize(L);
  z_.resize(L - 1);
  f1_.resize(L - 1);
  f2_.resize(L - 1);
  f3_.resize(L - 1);

  // Input seeds: d x/d x_c = e_c, zero Hessian.
  a_[0].setZero(d, K * P);
  a_[0].leftCols(P) = inputs;
  for (Eigen::Index c = 0; c < d; ++c) a_[0].row(c).segment((1 + c) * P, P).setOnes();

  const Eigen::Index hess0 = 1 + d;
  out_.resize(d_, q_, points_);

  for (std::size_t l = 0; l < L; ++l) {
    const auto W = net.weight(l);
    const auto b = net.bias(l);
    if (l + 1 == L) {
      const Eigen::RowVectorXd z = W * a_[l];
      out_.value = z.leftCols(P).array() + b[0];
      for (Eigen::Index c = 0; c < d; ++c) out_.grad.row(c) = z.segment((1 + c) * P, P);
      for (Eigen::Index p = 0; p < static_cast<Eigen::Index>(q_); ++p)
        out_.hess.row(p) = z.segment((hess0 + p) * P, P);
      break;
    }
    Eigen::MatrixXd& z = z_[l];
    z.resize(W.rows(), K * P);
    z.noalias() = W * a_[l];
    z.leftCols(P).colwise() += b;

    const Eigen::Index w = z.rows();
    const Eigen::Index block = w * P;  // elements per component block
    f1_[l].resize(w, P);
    f2_[l].resize(w, P);
    f3_[l].resize(w, P);
    Eigen::MatrixXd& a = a_[l + 1];
    a.resize(w, K * P);

    const double* zp = z.data();
    double* ap = a.data();
    double* g1 = f1_[l].data();
    double* g2 = f2_[l].data();
    double* g3 = f3_[l].data();
    act.eval_many(zp, ap, g1, g2, g3, block);
    // Jacobian blocks: f' * dz.
    for (Eigen::Index c = 0; c < d; ++c) {
      const double* zc = zp + (1 + c) * block;
      double* ac = ap + (1 + c) * block;
      for (Eigen::Index e = 0; e < block; ++e) ac[e] = g1[e] * zc[e];
    }
    // Hessian blocks: f'' dz_i dz_j + f' d2z_ij.
    Eigen::Index p = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t jj = i; jj < n_; ++jj, ++p) {
        const double* zi = zp + static_cast<Eigen::Index>(2 + i) * block;
        const double* zj = zp + static_cast<Eigen::Index>(2 + jj) * block;
        const double* zh = zp + (hess0 + p) * block;
        double* ah = ap + (hess0 + p) * block;
        for (Eigen::Index e = 0; e < block; ++e) ah[e] = g2[e] * zi[e] * zj[e] + g1[e] * zh[e];
      }
    }
  }
}

void NetworkTape::backward(const Network& net, const EvalBatch& adjoint, Eigen::VectorXd& grad) const {
  const auto P = static_cast<Eigen::Index>(points_);
  const auto d = static_cast<Eigen::Index>(d_);
  const Eigen::Index K = 1 + d + static_cast<Eigen::Index>(q_);
  const Eigen::Index hess0 = 1 + d;
  const std::size_t L = net.layers();
  if (adjoint.points() != points_) throw DimensionError("network: adjoint batch size mismatch");
  if (grad.size() != static_cast<Eigen::Index>(net.param_count()))
    grad.setZero(static_cast<Eigen::Index>(net.param_count()));

  Eigen::MatrixXd g(1, K * P);
  g.leftCols(P) = adjoint.value;
  for (Eigen::Index c = 0; c < d; ++c) g.middleCols((1 + c) * P, P) = adjoint.grad.row(c);
  for (Eigen::Index p = 0; p < static_cast<Eigen::Index>(q_); ++p)
    g.middleCols((hess0 + p) * P, P) = adjoint.hess.row(p);

  Eigen::MatrixXd abar;
  for (std::size_t l = L; l-- > 0;) {
    const auto W = net.weight(l);
    Eigen::Map<RowMajorMatrix> gw(grad.data() + net.weight_offset(l), W.rows(), W.cols());
    // In column slabs: Eigen's packing is about twice as slow when the inner
    // dimension runs to thousands of columns.
    for (Eigen::Index c0 = 0; c0 < K * P; c0 += kSlab) {
      const Eigen::Index cw = std::min(kSlab, K * P - c0);
      gw.noalias() += g.middleCols(c0, cw) * a_[l].middleCols(c0, cw).transpose();
    }
    Eigen::Map<Eigen::VectorXd> gb(grad.data() + net.bias_offset(l), W.rows());
    gb += g.leftCols(P).rowwise().sum();
    if (l == 0) break;

    // Adjoint of this layer's input, i.e. of hidden layer l-1's activation.
    abar.resize(W.cols(), K * P);
    abar.noalias() = W.transpose() * g;
    const std::size_t h = l - 1;
    const Eigen::Index w = abar.rows();
    const Eigen::Index block = w * P;
    const double* zp = z_[h].data();
    const double* ab = abar.data();
    const double* g1 = f1_[h].data();
    const double* g2 = f2_[h].data();
    const double* g3 = f3_[h].data();
    g.resize(w, K * P);
    double* zb = g.data();

    // Value block and Jacobian blocks.
    for (Eigen::Index e = 0; e < block; ++e) zb[e] = g1[e] * ab[e];
    for (Eigen::Index c = 0; c < d; ++c) {
      const double* zc = zp + (1 + c) * block;
      const double* ac = ab + (1 + c) * block;
      double* bc = zb + (1 + c) * block;
      for (Eigen::Index e = 0; e < block; ++e) {
        zb[e] += g2[e] * zc[e] * ac[e];
        bc[e] = g1[e] * ac[e];
      }
    }
    // Hessian blocks feed the value, both Jacobian directions and themselves.
    Eigen::Index p = 0;
    for (std::size_t i = 0; i < n_; ++i) {
      for (std::size_t jj = i; jj < n_; ++jj, ++p) {
        const double* zi = zp + static_cast<Eigen::Index>(2 + i) * block;
        const double* zj = zp + static_cast<Eigen::Index>(2 + jj) * block;
        const double* zh = zp + (hess0 + p) * block;
        const double* hb = ab + (hess0 + p) * block;
        double* bi = zb + static_cast<Eigen::Index>(2 + i) * block;
        double* bj = zb + static_cast<Eigen::Index>(2 + jj) * block;
        double* bh = zb + (hess0 + p) * block;
        for (Eigen::Index e = 0; e < block; ++e) {
          const double hv = hb[e];
          zb[e] += (g3[e] * zi[e] * zj[e] + g2[e] * zh[e]) * hv;
          bi[e] += g2[e] * zj[e] * hv;
          bj[e] += g2[e] * zi[e] * hv;
          bh[e] = g1[e] * hv;
        }
      }
    }
  }
}

EvalRecord eval_with_derivatives(const Network& net, double t, const Eigen::VectorXd& s) {
  if (static_cast<std::size_t>(s.size()) != net.assets()) throw DimensionError("network: state dimension mismatch");
  Eigen::MatrixXd x(s.size() + 1, 1);
  x(0, 0) = t;
  x.col(0).tail(s.size()) = s;
  NetworkTape tape;
  tape.forward(net, x);
  return tape.outputs().record(0, net.assets());
}

double forward(const Network& net, double t, const Eigen::VectorXd& s) {
  return eval_with_derivatives(net, t, s).value;
}

LossGradient loss_param_gradient(const Network& net, const Eigen::MatrixXd& inputs, const BatchLoss& loss,
                                 bool strict) {
  NetworkTape tape;
  tape.forward(net, inputs);
  EvalBatch adj;
  adj.resize(net.inputs(), hessian_pairs(net.assets()), static_cast<std::size_t>(inputs.cols()));
  LossGradient out;
  out.loss = loss(tape.outputs(), adj);
  if (strict && !net.activation().supports_hessian_losses() && adj.hess.cwiseAbs().maxCoeff() > 0.0) {
    throw UnsupportedActivationError("loss contains Hessian terms but activation '" +
                                     std::string(to_string(net.activation().kind)) +
                                     "' has no continuous second derivative");
  }
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.param_count()));
  tape.backward(net, adj, out.grad);
  return out;
}

}  // namespace diffgreeks
