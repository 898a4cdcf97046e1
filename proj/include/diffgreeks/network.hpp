#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <vector>

#include <Eigen/Dense>

#include "diffgreeks/activation.hpp"

namespace diffgreeks {

using RowMajorMatrix = Eigen::Matrix<double, Eigen::Dynamic, Eigen::Dynamic, Eigen::RowMajor>;

/// Fully connected network on inputs (t, S_1..S_n): hidden layers apply
/// `activation` to an affine map, the last layer is affine only.
/// All parameters live in one flat vector; layer l stores its weight matrix
/// (widths[l+1] x widths[l], row-major) followed by its bias.
class Network {
 public:
  Network() = default;
  Network(std::vector<std::size_t> widths, Activation activation);

  const std::vector<std::size_t>& widths() const noexcept { return widths_; }
  const Activation& activation() const noexcept { return activation_; }
  std::size_t layers() const noexcept { return widths_.size() - 1; }
  std::size_t inputs() const noexcept { return widths_.front(); }
  std::size_t assets() const noexcept { return widths_.front() - 1; }
  std::size_t param_count() const noexcept { return static_cast<std::size_t>(params_.size()); }

  Eigen::Map<const RowMajorMatrix> weight(std::size_t l) const;
  Eigen::Map<RowMajorMatrix> weight(std::size_t l);
  Eigen::Map<const Eigen::VectorXd> bias(std::size_t l) const;
  Eigen::Map<Eigen::VectorXd> bias(std::size_t l);

  const Eigen::VectorXd& params() const noexcept { return params_; }
  Eigen::VectorXd& params() noexcept { return params_; }

  std::size_t weight_offset(std::size_t l) const { return offsets_[l]; }
  std::size_t bias_offset(std::size_t l) const { return offsets_[l] + widths_[l + 1] * widths_[l]; }

  bool operator==(const Network& o) const {
    return widths_ == o.widths_ && activation_.kind == o.activation_.kind && params_ == o.params_;
  }

 private:
  std::vector<std::size_t> widths_;
  Activation activation_;
  std::vector<std::size_t> offsets_;
  Eigen::VectorXd params_;
};

/// Default architecture: n+1 inputs, four hidden layers of 35, one output.
std::vector<std::size_t> default_widths(std::size_t assets);

/// Glorot-uniform weights in +-sqrt(6/(fan_in+fan_out)), zero biases.
Network init_params(const std::vector<std::size_t>& widths, Activation activation, std::uint64_t seed);

/// Value, time derivative, S-gradient and S-Hessian at one point.
struct EvalRecord {
  double value = 0.0;
  double grad_t = 0.0;
  Eigen::VectorXd grad_s;
  Eigen::MatrixXd hess_s;
};

/// Column-batched outputs: per point the value, the gradient over all d = n+1
/// inputs (row 0 is d/dt), and the upper-triangular S-Hessian entries in the
/// order (0,0),(0,1),..,(0,n-1),(1,1),...
struct EvalBatch {
  Eigen::RowVectorXd value;
  Eigen::MatrixXd grad;
  Eigen::MatrixXd hess;

  std::size_t points() const noexcept { return static_cast<std::size_t>(value.size()); }
  void resize(std::size_t d, std::size_t pairs, std::size_t points);
  void set_zero();
  EvalRecord record(std::size_t p, std::size_t assets) const;
};

/// Index of the Hessian entry (i, j) in EvalBatch::hess.
std::size_t hessian_pair(std::size_t i, std::size_t j, std::size_t assets) noexcept;
inline std::size_t hessian_pairs(std::size_t assets) noexcept { return assets * (assets + 1) / 2; }

/// Forward propagation of value, input Jacobian and S-block Hessian through
/// every layer, retaining what the reverse sweep needs. The reverse sweep
/// returns exact parameter gradients of any linear functional of the
/// outputs, which covers losses through their output adjoints.
class NetworkTape {
 public:
  /// inputs: (n+1) x P, row 0 is time.
  void forward(const Network& net, const Eigen::MatrixXd& inputs);
  const EvalBatch& outputs() const noexcept { return out_; }

  /// grad += d/dtheta sum_p <adjoint_p, output_p>.
  void backward(const Network& net, const EvalBatch& adjoint, Eigen::VectorXd& grad) const;

 private:
  std::size_t points_ = 0, d_ = 0, n_ = 0, q_ = 0;
  // Per layer: the stacked layer input A (blocks: value | d Jacobian | q Hessian).
  std::vector<Eigen::MatrixXd> a_;
  // Per hidden layer: stacked pre-activations and activation derivatives.
  std::vector<Eigen::MatrixXd> z_;
  std::vector<Eigen::MatrixXd> f1_, f2_, f3_;
  EvalBatch out_;
};

EvalRecord eval_with_derivatives(const Network& net, double t, const Eigen::VectorXd& s);

/// Network value. Computed by the same code path as eval_with_derivatives.
double forward(const Network& net, double t, const Eigen::VectorXd& s);

/// A scalar loss over a batch of outputs. Returns the loss and writes
/// d loss / d output into `adjoint` (already sized and zeroed).
using BatchLoss = std::function<double(const EvalBatch& outputs, EvalBatch& adjoint)>;

struct LossGradient {
  double loss = 0.0;
  Eigen::VectorXd grad;
};

/// Exact parameter gradient of `loss` evaluated on the points in `inputs`.
/// With `strict`, a loss whose adjoint touches Hessian entries is refused for
/// activations without a continuous second derivative.
LossGradient loss_param_gradient(const Network& net, const Eigen::MatrixXd& inputs, const BatchLoss& loss,
                                 bool strict = false);

}  // namespace diffgreeks
