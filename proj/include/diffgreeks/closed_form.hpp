#pragma once

namespace diffgreeks {

/// Inputs to the Margrabe exchange-option formula.
struct MargrabeInputs {
  double s1 = 0.0;
  double s2 = 0.0;
  double sigma1 = 0.0;
  double sigma2 = 0.0;
  double rho = 0.0;
  double tau = 0.0;  // time to maturity T - t

  void validate() const;
  /// sqrt(sigma1^2 + sigma2^2 - 2 rho sigma1 sigma2); throws DegenerateVolError at 0.
  double spread_vol() const;
};

struct MargrabeGreeks {
  double delta = 0.0;  // d/dS1
  double gamma = 0.0;  // d2/dS1^2
  double theta = 0.0;  // d/dt (calendar time)
};

double margrabe_price(const MargrabeInputs& inp);
MargrabeGreeks margrabe_greeks(const MargrabeInputs& inp);

/// Black-Scholes European call, used as a scalar cross-check for the
/// one-asset basket.
double black_scholes_call(double s, double k, double r, double sigma, double tau);
double black_scholes_call_delta(double s, double k, double r, double sigma, double tau);

}  // namespace diffgreeks
