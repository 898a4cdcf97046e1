#include "doctest.h"

#include <cmath>
#include <vector>

#include "diffgreeks/closed_form.hpp"
#include "diffgreeks/config.hpp"
#include "diffgreeks/errors.hpp"
#include "diffgreeks/mc_greeks.hpp"

using namespace diffgreeks;

namespace {

// Single-step path with given terminal draw.
struct OneStep {
  std::vector<double> s, z, dw;
  PathView view() const { return PathView{2, 1, s, z, dw}; }
};

OneStep one_step(const MarketParams& p, double z1, double z2) {
  const CholeskyFactor chol = cholesky_factor(p.corr);
  const Eigen::Vector2d z(z1, z2);
  const Eigen::VectorXd sT = gbm_step(p, p.s0, p.T, z, chol);
  const Eigen::VectorXd dw = std::sqrt(p.T) * chol.L * z;
  return OneStep{{p.s0[0], p.s0[1], sT[0], sT[1]}, {z1, z2}, {dw[0], dw[1]}};
}

MargrabeInputs margrabe_of(const MarketParams& p) {
  return MargrabeInputs{p.s0[0], p.s0[1], p.sigma[0], p.sigma[1], p.corr(0, 1), p.T};
}

}  // namespace

TEST_SUITE("mc_greeks") {

TEST_CASE("zero volatility prices deterministically") {
  MarketParams p = exchange_market(70.0, 60.0);
  p.sigma = Eigen::Vector2d(0.0, 0.0);
  const PathBatch paths = simulate_grid(p, 1, 100, 3);
  const PriceEstimate est = mc_price(OptionSpec::exchange(), paths, p.r, p.T);
  CHECK(est.price == doctest::Approx(10.0).epsilon(1e-12));
  CHECK(est.std_err < 1e-12);
  CHECK_THROWS_AS(estimate_greeks(OptionSpec::exchange(), p, 100, 1), ScoreContextError);
  CHECK_THROWS_AS(ScoreContext::build(p), ScoreContextError);
}

TEST_CASE("out-of-the-money path contributes nothing") {
  const MarketParams p = exchange_market(50.0, 60.0);
  const ScoreContext ctx = ScoreContext::build(p);
  const OneStep path = one_step(p, 0.0, 0.0);
  const ExchangeKernel k = exchange_greek_kernels(path.view(), ctx, p);
  CHECK(k.delta == 0.0);
  CHECK(k.gamma == 0.0);
  CHECK(k.theta == 0.0);
}

TEST_CASE("kernels at a zero draw match hand evaluation") {
  const MarketParams p = exchange_market(70.0, 60.0);
  const ScoreContext ctx = ScoreContext::build(p);
  const OneStep path = one_step(p, 0.0, 0.0);
  const ExchangeKernel k = exchange_greek_kernels(path.view(), ctx, p);
  const double disc = std::exp(-0.1);
  const double s1 = 70.0 * std::exp(0.1 - 0.08);
  const double s2 = 60.0 * std::exp(0.1 - 0.02);
  CHECK(k.delta == doctest::Approx(disc * s1 / 70.0).epsilon(1e-14));
  CHECK(k.theta == doctest::Approx(disc * (0.08 * s1 - 0.02 * s2)).epsilon(1e-13));
  CHECK(k.gamma == 0.0);
}

TEST_CASE("score has zero mean") {
  const MarketParams p = exchange_market();
  const ScoreContext ctx = ScoreContext::build(p);
  const std::size_t m = 200000;
  const PathBatch paths = simulate_grid(p, 1, m, 11);
  Eigen::Vector2d sum = Eigen::Vector2d::Zero();
  for (std::size_t b = 0; b < m; ++b) sum += ctx.score_row(paths.path(b).normals(0));
  const Eigen::Vector2d mean = sum / double(m);
  // Var of each entry is (corr^-1)_ii / sigma_i^2.
  CHECK(std::abs(mean[0]) < 4.0 * std::sqrt(1.0 / (1 - 0.16)) / 0.4 / std::sqrt(double(m)));
  CHECK(std::abs(mean[1]) < 4.0 * std::sqrt(1.0 / (1 - 0.16)) / 0.2 / std::sqrt(double(m)));
}

TEST_CASE("exchange estimates bracket the closed form") {
  for (double s1 : {60.0, 20.0}) {
    CAPTURE(s1);
    const MarketParams p = exchange_market(s1, 60.0);
    const GreeksReport rep = estimate_greeks(OptionSpec::exchange(), p, 400000, 5);
    const MargrabeInputs in = margrabe_of(p);
    const MargrabeGreeks g = margrabe_greeks(in);
    CHECK(rep.gamma.size() == 1);
    CHECK(std::abs(rep.price - margrabe_price(in)) < 4.0 * rep.price_se);
    CHECK(std::abs(rep.delta[0] - g.delta) < 4.0 * rep.delta_se[0]);
    CHECK(std::abs(rep.gamma[0] - g.gamma) < 4.0 * rep.gamma_se[0]);
    CHECK(std::abs(rep.theta - g.theta) < 4.0 * rep.theta_se);
  }
}

TEST_CASE("mc_price agrees with the estimator price on the same draws") {
  const MarketParams p = exchange_market();
  const PathBatch paths = simulate_grid(p, 1, 5000, 9);
  const PriceEstimate a = mc_price(OptionSpec::exchange(), paths, p.r, p.T);
  const GreeksReport b = estimate_greeks(OptionSpec::exchange(), p, 5000, 9);
  CHECK(a.price == doctest::Approx(b.price).epsilon(1e-12));
}

TEST_CASE("single-asset basket reduces to Black-Scholes") {
  MarketParams p;
  p.r = 0.06;
  p.sigma = Eigen::VectorXd::Constant(1, 0.2);
  p.corr = Eigen::MatrixXd::Identity(1, 1);
  p.s0 = Eigen::VectorXd::Constant(1, 50.0);
  p.T = 0.5;
  const OptionSpec spec = OptionSpec::basket(Eigen::VectorXd::Ones(1), 50.0);
  const GreeksReport rep = estimate_greeks(spec, p, 400000, 21);
  CHECK(std::abs(rep.price - black_scholes_call(50, 50, 0.06, 0.2, 0.5)) < 4.0 * rep.price_se);
  CHECK(std::abs(rep.delta[0] - black_scholes_call_delta(50, 50, 0.06, 0.2, 0.5)) < 4.0 * rep.delta_se[0]);
}

TEST_CASE("likelihood-ratio gamma agrees with bump-and-revalue") {
  const MarketParams p = basket_market(Eigen::VectorXd::Constant(4, 0.5));
  const OptionSpec spec = OptionSpec::basket(Eigen::VectorXd::Constant(4, 0.25), 60.0);
  const GreeksReport rep = estimate_greeks(spec, p, 200000, 4);
  const BumpGamma bump = bump_gamma(spec, p, 200000, 4);
  REQUIRE(rep.gamma.size() == 4);
  for (Eigen::Index i = 0; i < 4; ++i) {
    CAPTURE(i);
    const double se = std::hypot(rep.gamma_se[i], bump.std_err[i]);
    CHECK(std::abs(rep.gamma[i] - bump.gamma[i]) < 4.0 * se);
  }
}

TEST_CASE("determinism and seed dependence") {
  const MarketParams p = exchange_market();
  const GreeksReport a = estimate_greeks(OptionSpec::exchange(), p, 2000, 1);
  const GreeksReport b = estimate_greeks(OptionSpec::exchange(), p, 2000, 1);
  const GreeksReport c = estimate_greeks(OptionSpec::exchange(), p, 2000, 2);
  CHECK(a.price == b.price);
  CHECK(a.gamma[0] == b.gamma[0]);
  CHECK(a.price != c.price);
  CHECK_THROWS(estimate_greeks(OptionSpec::exchange(), p, 1, 1));
}

}
