#include "doctest.h"

#include <algorithm>
#include <cmath>

#include "diffgreeks/closed_form.hpp"
#include "diffgreeks/config.hpp"
#include "diffgreeks/errors.hpp"
#include "diffgreeks/fdm.hpp"

using namespace diffgreeks;

namespace {

const Eigen::Vector2d kAt(60.0, 60.0);

ValueSurface fill(const FdmGrid& grid, double (*f)(double, double)) {
  ValueSurface v = terminal_condition(OptionSpec::exchange(), grid);
  for (std::size_t j = 0; j < v.dims[1]; ++j)
    for (std::size_t i = 0; i < v.dims[0]; ++i) v.u[v.flat({i, j})] = f(grid.node(0, i), grid.node(1, j));
  return v;
}

struct Ladder {
  double price_err, gamma_err;
};

Ladder solve_err(std::size_t m_s, std::size_t m_t) {
  const MarketParams p = exchange_market();
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, m_s, m_t, 1.0);
  const FdmSolution sol = solve(OptionSpec::exchange(), p, grid);
  const FdmGreeks g = fdm_greeks(sol.u0, sol.u1, grid, kAt);
  const MargrabeInputs in{60, 60, 0.4, 0.2, 0.4, 1.0};
  const auto idx = interior_node(grid, kAt);
  return {std::abs(sol.u0.at(idx) - margrabe_price(in)), std::abs(g.gamma[0] - margrabe_greeks(in).gamma)};
}

}  // namespace

TEST_SUITE("fdm") {

TEST_CASE("grid spacing") {
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 5000, 1.0);
  CHECK(grid.delta_s(0) == 3.0);
  CHECK(grid.delta_t() == doctest::Approx(2e-4));
  CHECK(grid.cfl(exchange_market()) == doctest::Approx(0.4).epsilon(1e-12));
}

TEST_CASE("terminal condition on the exchange payoff") {
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 10, 1.0);
  const ValueSurface u = terminal_condition(OptionSpec::exchange(), grid);
  CHECK(u.at({40, 20}) == 60.0);
  CHECK(u.at({20, 40}) == 0.0);
  for (std::size_t k = 0; k <= 100; ++k) CHECK(u.at({k, k}) == 0.0);

  MarketParams three = basket_market(Eigen::VectorXd::Constant(3, 0.2));
  CHECK_THROWS_AS(terminal_condition(OptionSpec::basket(Eigen::VectorXd::Ones(3), 1.0),
                                     FdmGrid::uniform(3, 100.0, 10, 10, 1.0)),
                  DimensionError);
}

TEST_CASE("zero and linear surfaces are fixed points") {
  const MarketParams p = exchange_market();
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 50, 1000, 1.0);
  const ValueSurface zero = fill(grid, [](double, double) { return 0.0; });
  const ValueSurface z1 = step_backward(zero, grid, p);
  CHECK(*std::max_element(z1.u.begin(), z1.u.end()) == 0.0);
  CHECK(*std::min_element(z1.u.begin(), z1.u.end()) == 0.0);

  const ValueSurface lin = fill(grid, [](double a, double b) { return a + b; });
  const ValueSurface l1 = step_backward(lin, grid, p);
  double worst = 0.0;
  for (std::size_t i = 0; i < lin.u.size(); ++i) worst = std::max(worst, std::abs(l1.u[i] - lin.u[i]));
  CHECK(worst < 1e-10);
}

TEST_CASE("greeks on analytic surfaces") {
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 5000, 1.0);
  const ValueSurface lin = fill(grid, [](double a, double) { return a; });
  const FdmGreeks g = fdm_greeks(lin, lin, grid, kAt);
  CHECK(g.delta[0] == doctest::Approx(1.0).epsilon(1e-14));
  CHECK(g.delta[1] == 0.0);
  CHECK(std::abs(g.gamma[0]) < 1e-12);
  CHECK(g.gamma[1] == 0.0);
  CHECK(g.theta == 0.0);

  const ValueSurface c = fill(grid, [](double, double) { return 3.5; });
  const FdmGreeks gc = fdm_greeks(c, c, grid, kAt);
  CHECK(gc.delta.norm() == 0.0);
  CHECK(gc.gamma.norm() == 0.0);
  CHECK(gc.theta == 0.0);
}

TEST_CASE("off-grid and boundary nodes are rejected") {
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 5000, 1.0);
  const ValueSurface u = terminal_condition(OptionSpec::exchange(), grid);
  CHECK_THROWS_AS(fdm_greeks(u, u, grid, Eigen::Vector2d(0.0, 60.0)), BoundaryError);
  CHECK_THROWS_AS(fdm_greeks(u, u, grid, Eigen::Vector2d(300.0, 60.0)), BoundaryError);
  CHECK_THROWS_AS(fdm_greeks(u, u, grid, Eigen::Vector2d(61.0, 60.0)), BoundaryError);
}

TEST_CASE("strict mode refuses an unstable grid") {
  const MarketParams p = exchange_market();
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 500, 1.0);
  CHECK(grid.cfl(p) > 1.0);
  CHECK_THROWS_AS(solve(OptionSpec::exchange(), p, grid, StabilityMode::Strict), StabilityError);
}

TEST_CASE("FDM1 grid reproduces the published column") {
  const MarketParams p = exchange_market();
  const FdmGrid grid = FdmGrid::uniform(2, 300.0, 100, 5000, 1.0);
  const FdmSolution sol = solve(OptionSpec::exchange(), p, grid, StabilityMode::Strict);
  const FdmGreeks g = fdm_greeks(sol.u0, sol.u1, grid, kAt);
  CHECK(sol.cfl == doctest::Approx(0.4).epsilon(1e-12));
  CHECK(std::abs(sol.u0.at(interior_node(grid, kAt)) - 8.765359) < 5e-7);
  CHECK(std::abs(g.delta[0] - 0.572740) < 5e-7);
  CHECK(std::abs(g.gamma[0] - 0.017728) < 5e-7);
  CHECK(std::abs(g.theta - (-4.344155)) < 5e-7);

  // Maximum principle on the inner half of the grid. Near the far corner the
  // linear extrapolation is wrong (u is not linear in S1 at S1 = 300 while
  // S2 is comparable) and values there go negative; that error stays out of
  // the region the Greeks are read from. The four-corner cross stencil always
  // gives one diagonal pair a negative weight, so next to S1 = 0 (where the
  // S1 diffusion is weak) a few nodes dip to about -3e-3.
  double lo = 0.0, hi = 0.0;
  for (std::size_t j = 0; j <= 50; ++j)
    for (std::size_t i = 0; i <= 50; ++i) lo = std::min(lo, sol.u0.at({i, j})), hi = std::max(hi, sol.u0.at({i, j}));
  CHECK(lo >= -1e-2);
  CHECK(hi <= 150.0 + 1e-10);
}

TEST_CASE("refinement ladder") {
  // fixed CFL: halve delta_s, quarter delta_t
  const Ladder a = solve_err(50, 1250);
  const Ladder b = solve_err(100, 5000);
  const Ladder c = solve_err(200, 20000);
  CHECK(b.price_err < a.price_err);
  CHECK(c.price_err < b.price_err);
  CHECK(c.gamma_err < b.gamma_err);
  const double order = std::log2(b.gamma_err / c.gamma_err);
  MESSAGE("observed gamma order " << order);
  CHECK(order > 1.5);
}

}
