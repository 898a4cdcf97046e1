#include "diffgreeks/closed_form.hpp"

#include <cmath>

#include "diffgreeks/errors.hpp"
#include "diffgreeks/normal.hpp"

namespace diffgreeks {

void MargrabeInputs::validate() const {
  if (!(s1 > 0.0) || !(s2 > 0.0)) throw ConfigError("margrabe: spot prices must be positive");
  if (!(tau > 0.0)) throw ConfigError("margrabe: time to maturity must be positive");
  if (!(std::abs(rho) <= 1.0)) throw ConfigError("margrabe: |rho| must not exceed 1");
  if (!(sigma1 >= 0.0) || !(sigma2 >= 0.0)) throw ConfigError("margrabe: volatilities must be non-negative");
}

double MargrabeInputs::spread_vol() const {
  const double scale = sigma1 * sigma1 + sigma2 * sigma2;
  const double var = scale - 2.0 * rho * sigma1 * sigma2;
  // relative cut: with FMA contraction rho = 1, sigma1 = sigma2 leaves ~1e-18
  if (!(var > 1e-14 * scale)) {
    throw DegenerateVolError("margrabe: spread volatility is zero; use the discounted forward payoff");
  }
  return std::sqrt(var);
}

namespace {

struct D12 {
  double d1, d2, vol_sqrt_tau;
};

D12 d_terms(const MargrabeInputs& inp) {
  inp.validate();
  const double sig = inp.spread_vol();
  const double vst = sig * std::sqrt(inp.tau);
  const double d1 = (std::log(inp.s1 / inp.s2) + 0.5 * sig * sig * inp.tau) / vst;
  return {d1, d1 - vst, vst};
}

}  // namespace

double margrabe_price(const MargrabeInputs& inp) {
  const D12 d = d_terms(inp);
  return inp.s1 * normal_cdf(d.d1) - inp.s2 * normal_cdf(d.d2);
}

MargrabeGreeks margrabe_greeks(const MargrabeInputs& inp) {
  const D12 d = d_terms(inp);
  const double sig = inp.spread_vol();
  MargrabeGreeks g;
  g.delta = normal_cdf(d.d1);
  g.gamma = normal_pdf(d.d1) / (inp.s1 * d.vol_sqrt_tau);
  g.theta = -sig / (4.0 * std::sqrt(inp.tau)) * (inp.s1 * normal_pdf(d.d1) + inp.s2 * normal_pdf(d.d2));
  return g;
}

double black_scholes_call(double s, double k, double r, double sigma, double tau) {
  const double vst = sigma * std::sqrt(tau);
  const double d1 = (std::log(s / k) + (r + 0.5 * sigma * sigma) * tau) / vst;
  return s * normal_cdf(d1) - k * std::exp(-r * tau) * normal_cdf(d1 - vst);
}

double black_scholes_call_delta(double s, double k, double r, double sigma, double tau) {
  const double vst = sigma * std::sqrt(tau);
  return normal_cdf((std::log(s / k) + (r + 0.5 * sigma * sigma) * tau) / vst);
}

}  // namespace diffgreeks
