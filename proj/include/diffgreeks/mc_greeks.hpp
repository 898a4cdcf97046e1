#pragma once

#include <cstddef>
#include <cstdint>
#include <vector>

#include <Eigen/Dense>

#include "diffgreeks/market.hpp"
#include "diffgreeks/payoff.hpp"

namespace diffgreeks {

/// Point estimates with matching standard errors. For the exchange option
/// gamma has a single entry (d2/dS1^2); otherwise delta and gamma are per asset.
struct GreeksReport {
  double price = 0.0;
  Eigen::VectorXd delta;
  Eigen::VectorXd gamma;
  double theta = 0.0;

  double price_se = 0.0;
  Eigen::VectorXd delta_se;
  Eigen::VectorXd gamma_se;
  double theta_se = 0.0;

  std::size_t paths = 0;
};

/// Cached pieces of the likelihood-ratio score (Z' L^-1 A^-1)_i / (sqrt(T) S_i(0)).
struct ScoreContext {
  Eigen::VectorXd a_inv;  // 1 / sigma_i
  Eigen::MatrixXd l_inv;  // inverse of the Cholesky factor
  Eigen::MatrixXd L;
  double sqrt_T = 1.0;

  /// Throws ScoreContextError if any volatility is zero or L is singular.
  static ScoreContext build(const MarketParams& params);

  /// Row vector Z' L^-1 A^-1.
  Eigen::VectorXd score_row(std::span<const double> z) const;
};

struct PriceEstimate {
  double price = 0.0;
  double std_err = 0.0;
};

/// Discounted mean payoff over the terminal column of `paths`.
PriceEstimate mc_price(const OptionSpec& spec, const PathBatch& paths, double r, double T);

/// Per-path estimator contributions.
struct ExchangeKernel {
  double delta = 0.0;
  double theta = 0.0;
  double gamma = 0.0;
};

struct BasketKernel {
  Eigen::VectorXd delta;
  double theta = 0.0;
  Eigen::VectorXd gamma;
};

/// Pathwise delta/theta and LR-pathwise gamma for one path simulated in a
/// single exact step to T (the terminal-step draw is the LR score's Z).
ExchangeKernel exchange_greek_kernels(const PathView& path, const ScoreContext& ctx,
                                      const MarketParams& params);

BasketKernel basket_greek_kernels(const PathView& path, const ScoreContext& ctx,
                                  const MarketParams& params, const OptionSpec& spec);

/// Price and Greeks from `paths` single-step paths. Sequential and
/// deterministic for a fixed seed.
GreeksReport estimate_greeks(const OptionSpec& spec, const MarketParams& params, std::size_t paths,
                             std::uint64_t seed);

/// Bump-and-revalue gamma with common random numbers:
/// (V(S_i(1+h)) - 2 V(S_i) + V(S_i(1-h))) / (h S_i)^2 per path.
struct BumpGamma {
  Eigen::VectorXd gamma;
  Eigen::VectorXd std_err;
};
BumpGamma bump_gamma(const OptionSpec& spec, const MarketParams& params, std::size_t paths,
                     std::uint64_t seed, double rel_bump = 1e-3);

}  // namespace diffgreeks
