#include "diffgreeks/activation.hpp"

#include <algorithm>
#include <cmath>
#include <string>

#include <Eigen/Core>

#include "diffgreeks/errors.hpp"

namespace diffgreeks {

std::string_view to_string(ActivationKind kind) noexcept {
  switch (kind) {
    case ActivationKind::Sigmoid: return "sigmoid";
    case ActivationKind::Tanh: return "tanh";
    case ActivationKind::Sin: return "sin";
    case ActivationKind::Relu: return "relu";
    case ActivationKind::Elu: return "elu";
    case ActivationKind::Selu: return "selu";
    case ActivationKind::Softplus: return "softplus";
  }
  return "unknown";
}

ActivationKind activation_from_string(std::string_view name) {
  for (ActivationKind k : {ActivationKind::Sigmoid, ActivationKind::Tanh, ActivationKind::Sin,
                           ActivationKind::Relu, ActivationKind::Elu, ActivationKind::Selu,
                           ActivationKind::Softplus}) {
    if (name == to_string(k)) return k;
  }
  throw ConfigError("unknown activation '" + std::string(name) +
                    "' (expected sigmoid, tanh, sin, relu, elu, selu or softplus)");
}

Activation Activation::make(ActivationKind kind) {
  Activation a;
  a.kind = kind;
  if (kind == ActivationKind::Selu) {
    a.alpha = kSeluAlpha;
    a.lambda = kSeluLambda;
  }
  return a;
}

bool Activation::supports_hessian_losses() const noexcept {
  return kind != ActivationKind::Relu && kind != ActivationKind::Selu;
}

namespace {

inline double logistic(double x) noexcept {
  if (x >= 0.0) return 1.0 / (1.0 + std::exp(-x));
  const double e = std::exp(x);
  return e / (1.0 + e);
}

}  // namespace

ActivationJet Activation::eval(double x) const noexcept {
  ActivationJet j;
  switch (kind) {
    case ActivationKind::Sigmoid: {
      const double s = logistic(x);
      const double g = s * (1.0 - s);
      j = {s, g, g * (1.0 - 2.0 * s), g * (1.0 - 6.0 * s + 6.0 * s * s)};
      break;
    }
    case ActivationKind::Tanh: {
      const double t = std::tanh(x);
      const double g = 1.0 - t * t;
      j = {t, g, -2.0 * t * g, g * (6.0 * t * t - 2.0)};
      break;
    }
    case ActivationKind::Sin: {
      const double s = std::sin(x), c = std::cos(x);
      j = {s, c, -s, -c};
      break;
    }
    case ActivationKind::Relu:
      j = x > 0.0 ? ActivationJet{x, 1.0, 0.0, 0.0} : ActivationJet{0.0, 0.0, 0.0, 0.0};
      break;
    case ActivationKind::Elu:
    case ActivationKind::Selu: {
      const double scale = kind == ActivationKind::Selu ? lambda : 1.0;
      if (x > 0.0) {
        j = {scale * x, scale, 0.0, 0.0};
      } else {
        const double e = alpha * std::exp(x);
        j = {scale * (e - alpha), scale * e, scale * e, scale * e};
      }
      break;
    }
    case ActivationKind::Softplus: {
      // One exponential serves both the value and the logistic derivative.
      const double e = std::exp(-std::abs(x));
      const double s = x >= 0.0 ? 1.0 / (1.0 + e) : e / (1.0 + e);
      const double g = s * (1.0 - s);
      j = {std::max(x, 0.0) + std::log1p(e), s, g, g * (1.0 - 2.0 * s)};
      break;
    }
  }
  return j;
}

void Activation::eval_many(const double* x, double* f, double* d1, double* d2, double* d3,
                           long n) const noexcept {
  using Arr = Eigen::Array<double, Eigen::Dynamic, 1>;
  using In = Eigen::Map<const Arr>;
  using Out = Eigen::Map<Arr>;
  const In xs(x, n);
  Out fs(f, n), g1(d1, n), g2(d2, n), g3(d3, n);
  // Packet math for the smooth workhorses; scalar fallback for the rest.
  switch (kind) {
    case ActivationKind::Softplus: {
      fs = (-xs.abs()).exp();  // e, reused below
      g1 = (xs >= 0.0).select(1.0 / (1.0 + fs), fs / (1.0 + fs));
      fs = xs.max(0.0) + fs.log1p();
      g2 = g1 * (1.0 - g1);
      g3 = g2 * (1.0 - 2.0 * g1);
      return;
    }
    case ActivationKind::Sigmoid: {
      fs = (-xs.abs()).exp();
      fs = (xs >= 0.0).select(1.0 / (1.0 + fs), fs / (1.0 + fs));
      g1 = fs * (1.0 - fs);
      g2 = g1 * (1.0 - 2.0 * fs);
      g3 = g1 * (1.0 - 6.0 * fs + 6.0 * fs.square());
      return;
    }
    case ActivationKind::Tanh: {
      fs = xs.tanh();
      g1 = 1.0 - fs.square();
      g2 = -2.0 * fs * g1;
      g3 = g1 * (6.0 * fs.square() - 2.0);
      return;
    }
    default:
      for (long i = 0; i < n; ++i) {
        const ActivationJet j = eval(x[i]);
        f[i] = j.f;
        d1[i] = j.d1;
        d2[i] = j.d2;
        d3[i] = j.d3;
      }
  }
}

}  // namespace diffgreeks
