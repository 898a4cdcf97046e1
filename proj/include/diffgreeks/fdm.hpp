#pragma once

#include <cstddef>
#include <vector>

#include <Eigen/Dense>

#include "diffgreeks/market.hpp"
#include "diffgreeks/payoff.hpp"

namespace diffgreeks {

/// Uniform grid [0, s_max_i] with m_s_i intervals per asset and m_t time steps.
struct FdmGrid {
  Eigen::VectorXd s_max;
  std::vector<std::size_t> m_s;
  std::size_t m_t = 0;
  double T = 1.0;

  static FdmGrid uniform(std::size_t n, double s_max, std::size_t m_s, std::size_t m_t, double T);

  std::size_t n() const noexcept { return m_s.size(); }
  double delta_s(std::size_t i) const { return s_max[static_cast<Eigen::Index>(i)] / static_cast<double>(m_s[i]); }
  double delta_t() const { return T / static_cast<double>(m_t); }
  double node(std::size_t i, std::size_t j) const { return static_cast<double>(j) * delta_s(i); }

  void validate() const;
  /// Max over nodes of dt * sum_i sigma_i^2 S_i^2 / ds_i^2; the explicit
  /// scheme keeps non-negative centre weights when this stays below 1.
  double cfl(const MarketParams& params) const;
};

/// Option values on every node at one time level; asset 0 varies fastest.
struct ValueSurface {
  std::vector<std::size_t> dims;  // m_s_i + 1
  std::vector<double> u;
  double time = 0.0;

  std::size_t stride(std::size_t i) const {
    std::size_t s = 1;
    for (std::size_t k = 0; k < i; ++k) s *= dims[k];
    return s;
  }
  std::size_t flat(const std::vector<std::size_t>& idx) const {
    std::size_t f = 0;
    for (std::size_t i = dims.size(); i-- > 0;) f = f * dims[i] + idx[i];
    return f;
  }
  double at(const std::vector<std::size_t>& idx) const { return u[flat(idx)]; }
};

enum class StabilityMode { Strict, Permissive };

ValueSurface terminal_condition(const OptionSpec& spec, const FdmGrid& grid);

/// One explicit Euler step of the Black-Scholes PDE from u_next (time t) to t - dt.
/// Interior nodes and S_i = 0 faces use the PDE with central differences
/// (the S_i = 0 face has vanishing S_i coefficients); far faces take the
/// linear extrapolation u_M = 2 u_{M-1} - u_{M-2}.
ValueSurface step_backward(const ValueSurface& u_next, const FdmGrid& grid, const MarketParams& params,
                           StabilityMode mode = StabilityMode::Permissive);

struct FdmSolution {
  ValueSurface u0;  // t = 0
  ValueSurface u1;  // t = dt
  double cfl = 0.0;
};

FdmSolution solve(const OptionSpec& spec, const MarketParams& params, const FdmGrid& grid,
                  StabilityMode mode = StabilityMode::Permissive);

struct FdmGreeks {
  Eigen::VectorXd delta;
  Eigen::VectorXd gamma;
  double theta = 0.0;
};

/// Node index of the price vector `at`; throws BoundaryError unless it sits on
/// an interior node.
std::vector<std::size_t> interior_node(const FdmGrid& grid, const Eigen::VectorXd& at);

FdmGreeks fdm_greeks(const ValueSurface& u0, const ValueSurface& u1, const FdmGrid& grid,
                     const Eigen::VectorXd& at);

}  // namespace diffgreeks
