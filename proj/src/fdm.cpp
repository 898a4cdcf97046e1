#include "diffgreeks/fdm.hpp"

#include <cmath>
#include <sstream>
#include <string>

#include "diffgreeks/errors.hpp"

namespace diffgreeks {

FdmGrid FdmGrid::uniform(std::size_t n, double s_max, std::size_t m_s, std::size_t m_t, double T) {
  FdmGrid g;
  g.s_max = Eigen::VectorXd::Constant(static_cast<Eigen::Index>(n), s_max);
  g.m_s.assign(n, m_s);
  g.m_t = m_t;
  g.T = T;
  return g;
}

void FdmGrid::validate() const {
  if (n() < 1 || n() > 2) throw DimensionError("fdm: only one- and two-asset grids are supported");
  if (static_cast<std::size_t>(s_max.size()) != n()) throw DimensionError("fdm: s_max size mismatch");
  for (std::size_t i = 0; i < n(); ++i) {
    if (m_s[i] < 2) throw ConfigError("fdm: m_s must be at least 2");
    if (!(s_max[static_cast<Eigen::Index>(i)] > 0.0)) throw ConfigError("fdm: s_max must be positive");
  }
  if (m_t < 1) throw ConfigError("fdm: m_t must be at least 1");
  if (!(T > 0.0)) throw ConfigError("fdm: T must be positive");
}

double FdmGrid::cfl(const MarketParams& params) const {
  // The sum is maximised at the far corner.
  double acc = 0.0;
  for (std::size_t i = 0; i < n(); ++i) {
    const double sig = params.sigma[static_cast<Eigen::Index>(i)];
    const double ratio = s_max[static_cast<Eigen::Index>(i)] / delta_s(i);
    acc += sig * sig * ratio * ratio;
  }
  return delta_t() * acc;
}

namespace {

ValueSurface empty_surface(const FdmGrid& grid, double time) {
  ValueSurface s;
  s.time = time;
  std::size_t total = 1;
  for (std::size_t i = 0; i < grid.n(); ++i) {
    s.dims.push_back(grid.m_s[i] + 1);
    total *= grid.m_s[i] + 1;
  }
  s.u.assign(total, 0.0);
  return s;
}

void decode(std::size_t flat, const std::vector<std::size_t>& dims, std::size_t* idx) {
  for (std::size_t i = 0; i < dims.size(); ++i) {
    idx[i] = flat % dims[i];
    flat /= dims[i];
  }
}

}  // namespace

ValueSurface terminal_condition(const OptionSpec& spec, const FdmGrid& grid) {
  if (grid.n() > 2) throw DimensionError("fdm: grids above two assets are not supported");
  spec.check_dimension(grid.n());
  grid.validate();
  ValueSurface s = empty_surface(grid, grid.T);
  std::size_t idx[2] = {0, 0};
  double price[2] = {0.0, 0.0};
  for (std::size_t f = 0; f < s.u.size(); ++f) {
    decode(f, s.dims, idx);
    for (std::size_t i = 0; i < grid.n(); ++i) price[i] = grid.node(i, idx[i]);
    s.u[f] = payoff(spec, std::span<const double>(price, grid.n()));
  }
  return s;
}

ValueSurface step_backward(const ValueSurface& u_next, const FdmGrid& grid, const MarketParams& params,
                           StabilityMode mode) {
  const std::size_t n = grid.n();
  if (n > 2) throw DimensionError("fdm: grids above two assets are not supported");
  if (params.n() != n) throw DimensionError("fdm: market and grid dimensions differ");
  if (mode == StabilityMode::Strict) {
    const double c = grid.cfl(params);
    if (c > 1.0) {
      std::ostringstream os;
      os << "fdm: explicit step is unstable (CFL indicator " << c << " > 1)";
      throw StabilityError(os.str());
    }
  }
  const double dt = grid.delta_t();
  const double r = params.r;
  ValueSurface out = empty_surface(grid, u_next.time - dt);
  const std::vector<double>& u = u_next.u;

  double ds[2], sig[2], half_var[2];
  std::size_t stride[2], last[2];
  for (std::size_t i = 0; i < n; ++i) {
    ds[i] = grid.delta_s(i);
    sig[i] = params.sigma[static_cast<Eigen::Index>(i)];
    half_var[i] = 0.5 * sig[i] * sig[i];
    stride[i] = u_next.stride(i);
    last[i] = grid.m_s[i];
  }
  const double cross = n == 2 ? params.corr(0, 1) * sig[0] * sig[1] : 0.0;

  std::size_t idx[2] = {0, 0};
  for (std::size_t f = 0; f < u.size(); ++f) {
    decode(f, u_next.dims, idx);
    bool far = false;
    for (std::size_t i = 0; i < n; ++i) far = far || idx[i] == last[i];
    if (far) continue;

    const double uc = u[f];
    double lu = -r * uc;
    for (std::size_t i = 0; i < n; ++i) {
      if (idx[i] == 0) continue;  // S_i = 0: its diffusion and drift vanish
      const double s = static_cast<double>(idx[i]) * ds[i];
      const double up = u[f + stride[i]];
      const double dn = u[f - stride[i]];
      lu += r * s * (up - dn) / (2.0 * ds[i]) + half_var[i] * s * s * (up - 2.0 * uc + dn) / (ds[i] * ds[i]);
    }
    if (n == 2 && idx[0] > 0 && idx[1] > 0 && cross != 0.0) {
      const double s1 = static_cast<double>(idx[0]) * ds[0];
      const double s2 = static_cast<double>(idx[1]) * ds[1];
      const double upup = u[f + stride[0] + stride[1]];
      const double updn = u[f + stride[0] - stride[1]];
      const double dnup = u[f - stride[0] + stride[1]];
      const double dndn = u[f - stride[0] - stride[1]];
      lu += cross * s1 * s2 * (upup - updn - dnup + dndn) / (4.0 * ds[0] * ds[1]);
    }
    out.u[f] = uc + dt * lu;
  }

  // Far faces: zero second difference along the outward direction.
  for (std::size_t i = 0; i < n; ++i) {
    for (std::size_t f = 0; f < out.u.size(); ++f) {
      decode(f, out.dims, idx);
      if (idx[i] != last[i]) continue;
      out.u[f] = 2.0 * out.u[f - stride[i]] - out.u[f - 2 * stride[i]];
    }
  }
  return out;
}

FdmSolution solve(const OptionSpec& spec, const MarketParams& params, const FdmGrid& grid,
                  StabilityMode mode) {
  params.validate();
  FdmSolution sol;
  sol.cfl = grid.cfl(params);
  if (mode == StabilityMode::Strict && sol.cfl > 1.0) {
    std::ostringstream os;
    os << "fdm: explicit scheme is unstable (CFL indicator " << sol.cfl << " > 1)";
    throw StabilityError(os.str());
  }
  ValueSurface u = terminal_condition(spec, grid);
  for (std::size_t step = 0; step < grid.m_t; ++step) {
    ValueSurface next = step_backward(u, grid, params, StabilityMode::Permissive);
    if (step + 1 == grid.m_t) {
      next.time = 0.0;
      sol.u1 = std::move(u);
      sol.u1.time = grid.delta_t();
    }
    u = std::move(next);
  }
  sol.u0 = std::move(u);
  return sol;
}

std::vector<std::size_t> interior_node(const FdmGrid& grid, const Eigen::VectorXd& at) {
  if (static_cast<std::size_t>(at.size()) != grid.n()) throw DimensionError("fdm: node dimension mismatch");
  std::vector<std::size_t> idx(grid.n());
  for (std::size_t i = 0; i < grid.n(); ++i) {
    const double pos = at[static_cast<Eigen::Index>(i)] / grid.delta_s(i);
    const double rounded = std::round(pos);
    if (std::abs(pos - rounded) > 1e-9 || rounded < 1.0 || rounded > static_cast<double>(grid.m_s[i]) - 1.0) {
      std::ostringstream os;
      os << "fdm: S_" << i + 1 << " = " << at[static_cast<Eigen::Index>(i)]
         << " is not an interior grid node";
      throw BoundaryError(os.str());
    }
    idx[i] = static_cast<std::size_t>(rounded);
  }
  return idx;
}

FdmGreeks fdm_greeks(const ValueSurface& u0, const ValueSurface& u1, const FdmGrid& grid,
                     const Eigen::VectorXd& at) {
  const std::vector<std::size_t> idx = interior_node(grid, at);
  const std::size_t n = grid.n();
  const std::size_t f = u0.flat(idx);
  FdmGreeks g;
  g.delta.resize(static_cast<Eigen::Index>(n));
  g.gamma.resize(static_cast<Eigen::Index>(n));
  for (std::size_t i = 0; i < n; ++i) {
    const std::size_t st = u0.stride(i);
    const double ds = grid.delta_s(i);
    const double up = u0.u[f + st];
    const double dn = u0.u[f - st];
    g.delta[static_cast<Eigen::Index>(i)] = (up - dn) / (2.0 * ds);
    g.gamma[static_cast<Eigen::Index>(i)] = (up - 2.0 * u0.u[f] + dn) / (ds * ds);
  }
  g.theta = (u1.u[f] - u0.u[f]) / grid.delta_t();
  return g;
}

}  // namespace diffgreeks
