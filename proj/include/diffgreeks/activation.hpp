#pragma once

#include <string_view>

namespace diffgreeks {

enum class ActivationKind { Sigmoid, Tanh, Sin, Relu, Elu, Selu, Softplus };

std::string_view to_string(ActivationKind kind) noexcept;
ActivationKind activation_from_string(std::string_view name);

/// Value and first three derivatives.
struct ActivationJet {
  double f = 0.0, d1 = 0.0, d2 = 0.0, d3 = 0.0;
};

struct Activation {
  ActivationKind kind = ActivationKind::Softplus;
  double alpha = 1.0;       // elu, selu
  double lambda = 1.0;      // selu

  static Activation make(ActivationKind kind);

  ActivationJet eval(double x) const noexcept;

  /// False for relu and selu, whose first derivative already jumps at 0;
  /// strict mode refuses Hessian-bearing losses for them. elu is C1 (its
  /// second derivative jumps) and is allowed, as the intermediate case.
  bool supports_hessian_losses() const noexcept;

  /// Elementwise jets over n values.
  void eval_many(const double* x, double* f, double* d1, double* d2, double* d3, long n) const noexcept;
};

inline constexpr double kSeluAlpha = 1.67326324;
inline constexpr double kSeluLambda = 1.05070098;

}  // namespace diffgreeks
