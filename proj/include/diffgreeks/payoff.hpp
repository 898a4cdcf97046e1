#pragma once

#include <cstddef>
#include <span>
#include <string_view>

#include <Eigen/Dense>

namespace diffgreeks {

enum class OptionKind { Exchange, Basket };

std::string_view to_string(OptionKind kind) noexcept;
OptionKind option_kind_from_string(std::string_view name);

/// Exchange: max(S1 - S2, 0) on two assets. Basket: max(sum w_i S_i - K, 0).
struct OptionSpec {
  OptionKind kind = OptionKind::Exchange;
  Eigen::VectorXd weights;  // Basket only
  double strike = 0.0;      // Basket only

  static OptionSpec exchange() { return OptionSpec{}; }
  static OptionSpec basket(Eigen::VectorXd w, double strike) {
    return OptionSpec{OptionKind::Basket, std::move(w), strike};
  }

  /// Asset count the payoff expects.
  std::size_t assets() const noexcept {
    return kind == OptionKind::Exchange ? 2 : static_cast<std::size_t>(weights.size());
  }

  void validate() const;
  /// Throws DimensionError unless the market has assets() assets.
  void check_dimension(std::size_t n) const;
};

/// Moneyness: S1 - S2 or sum w_i S_i - K.
double intrinsic(const OptionSpec& spec, std::span<const double> s_T);

double payoff(const OptionSpec& spec, std::span<const double> s_T);

/// Strict indicator; the exercise boundary itself returns 0.
int in_the_money(const OptionSpec& spec, std::span<const double> s_T);

}  // namespace diffgreeks
