#include "diffgreeks/payoff.hpp"

#include <algorithm>
#include <string>

#include "diffgreeks/errors.hpp"

namespace diffgreeks {

std::string_view to_string(OptionKind kind) noexcept {
  return kind == OptionKind::Exchange ? "exchange" : "basket";
}

OptionKind option_kind_from_string(std::string_view name) {
  if (name == "exchange") return OptionKind::Exchange;
  if (name == "basket") return OptionKind::Basket;
  throw ConfigError("option.kind: expected 'exchange' or 'basket', got '" + std::string(name) + "'");
}

void OptionSpec::validate() const {
  if (kind == OptionKind::Basket) {
    if (weights.size() < 1) throw ConfigError("option.weights: basket needs at least one weight");
    if (!(strike >= 0.0)) throw ConfigError("option.strike: must be non-negative");
  }
}

void OptionSpec::check_dimension(std::size_t n) const {
  if (n != assets()) {
    throw DimensionError(std::string(to_string(kind)) + " option expects " + std::to_string(assets()) +
                         " assets, got " + std::to_string(n));
  }
}

double intrinsic(const OptionSpec& spec, std::span<const double> s_T) {
  spec.check_dimension(s_T.size());
  if (spec.kind == OptionKind::Exchange) return s_T[0] - s_T[1];
  double basket = 0.0;
  for (std::size_t i = 0; i < s_T.size(); ++i) basket += spec.weights[static_cast<Eigen::Index>(i)] * s_T[i];
  return basket - spec.strike;
}

double payoff(const OptionSpec& spec, std::span<const double> s_T) {
  return std::max(intrinsic(spec, s_T), 0.0);
}

int in_the_money(const OptionSpec& spec, std::span<const double> s_T) {
  return intrinsic(spec, s_T) > 0.0 ? 1 : 0;
}

}  // namespace diffgreeks
