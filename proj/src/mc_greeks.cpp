#include "diffgreeks/mc_greeks.hpp"

#include <cmath>
#include <string>

#include "diffgreeks/errors.hpp"
#include "diffgreeks/summation.hpp"

namespace diffgreeks {

ScoreContext ScoreContext::build(const MarketParams& params) {
  const Eigen::Index n = params.sigma.size();
  ScoreContext ctx;
  ctx.a_inv.resize(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(params.sigma[i] > 0.0)) {
      throw ScoreContextError("score context: sigma_" + std::to_string(i + 1) +
                              " is zero, the volatility matrix is not invertible");
    }
    ctx.a_inv[i] = 1.0 / params.sigma[i];
  }
  ctx.L = cholesky_factor(params.corr).L;
  for (Eigen::Index i = 0; i < n; ++i) {
    if (!(ctx.L(i, i) > 0.0)) throw ScoreContextError("score context: correlation matrix is singular");
  }
  ctx.l_inv = ctx.L.triangularView<Eigen::Lower>().solve(Eigen::MatrixXd::Identity(n, n));
  ctx.sqrt_T = std::sqrt(params.T);
  return ctx;
}

Eigen::VectorXd ScoreContext::score_row(std::span<const double> z) const {
  const Eigen::Index n = a_inv.size();
  Eigen::VectorXd out(n);
  for (Eigen::Index i = 0; i < n; ++i) {
    double acc = 0.0;
    for (Eigen::Index j = i; j < n; ++j) acc += z[static_cast<std::size_t>(j)] * l_inv(j, i);
    out[i] = acc * a_inv[i];
  }
  return out;
}

PriceEstimate mc_price(const OptionSpec& spec, const PathBatch& paths, double r, double T) {
  spec.check_dimension(paths.n());
  const double disc = std::exp(-r * T);
  std::vector<double> v(paths.batch());
  for (std::size_t b = 0; b < paths.batch(); ++b) v[b] = disc * payoff(spec, paths.path(b).terminal());
  const SampleStats st = sample_stats(v);
  return {st.mean, st.std_err};
}

namespace {

// Horizon-level standard normal: for a single step this is the step's own
// draw; over several steps it is sum_k sqrt(dt_k) z_k / sqrt(T), which
// reproduces S(T) exactly through one log-step.
void horizon_normal(const PathView& path, double T, std::span<double> out) {
  const std::size_t n = path.n;
  if (path.steps == 1) {
    for (std::size_t i = 0; i < n; ++i) out[i] = path.z[i];
    return;
  }
  const double dt = T / static_cast<double>(path.steps);
  const double scale = std::sqrt(dt / T);
  for (std::size_t i = 0; i < n; ++i) out[i] = 0.0;
  for (std::size_t k = 0; k < path.steps; ++k) {
    const auto zk = path.normals(k);
    for (std::size_t i = 0; i < n; ++i) out[i] += scale * zk[i];
  }
}

// (L Z)_i for the lower-triangular factor.
double lz_row(const Eigen::MatrixXd& L, std::span<const double> z, Eigen::Index i) {
  double acc = 0.0;
  for (Eigen::Index j = 0; j <= i; ++j) acc += L(i, j) * z[static_cast<std::size_t>(j)];
  return acc;
}

}  // namespace

ExchangeKernel exchange_greek_kernels(const PathView& path, const ScoreContext& ctx,
                                      const MarketParams& params) {
  if (path.n != 2) throw DimensionError("exchange kernels need two assets");
  ExchangeKernel k;
  const auto sT = path.terminal();
  if (!(sT[0] > sT[1])) return k;
  double z[2];
  horizon_normal(path, params.T, z);
  const double disc = std::exp(-params.r * params.T);
  const double s10 = params.s0[0];
  const double sig1 = params.sigma[0];
  const double sig2 = params.sigma[1];
  const double twoRootT = 2.0 * ctx.sqrt_T;

  k.delta = disc * sT[0] / s10;
  k.theta = disc * (sT[0] * (0.5 * sig1 * sig1 - sig1 * lz_row(ctx.L, z, 0) / twoRootT) -
                    sT[1] * (0.5 * sig2 * sig2 - sig2 * lz_row(ctx.L, z, 1) / twoRootT));
  const Eigen::VectorXd score = ctx.score_row(z);
  k.gamma = disc * (score[0] / ctx.sqrt_T) * (sT[1] / (s10 * s10));
  return k;
}

BasketKernel basket_greek_kernels(const PathView& path, const ScoreContext& ctx,
                                  const MarketParams& params, const OptionSpec& spec) {
  if (spec.kind != OptionKind::Basket) throw ConfigError("basket kernels need a basket option");
  spec.check_dimension(path.n);
  const std::size_t n = path.n;
  const Eigen::Index ni = static_cast<Eigen::Index>(n);
  BasketKernel k{Eigen::VectorXd::Zero(ni), 0.0, Eigen::VectorXd::Zero(ni)};
  const auto sT = path.terminal();
  double basket = 0.0;
  for (std::size_t i = 0; i < n; ++i) basket += spec.weights[static_cast<Eigen::Index>(i)] * sT[i];
  if (!(basket > spec.strike)) return k;

  std::vector<double> z(n);
  horizon_normal(path, params.T, z);
  const double disc = std::exp(-params.r * params.T);
  const double twoRootT = 2.0 * ctx.sqrt_T;
  const Eigen::VectorXd score = ctx.score_row(z);

  double theta = -params.r * spec.strike;
  for (Eigen::Index i = 0; i < ni; ++i) {
    const double w = spec.weights[i];
    const double s = sT[static_cast<std::size_t>(i)];
    const double s0 = params.s0[i];
    const double sig = params.sigma[i];
    k.delta[i] = disc * (s / s0) * w;
    theta += w * s * (0.5 * sig * sig - sig * lz_row(ctx.L, z, i) / twoRootT);
    k.gamma[i] = disc * score[i] / (ctx.sqrt_T * s0 * s0) * (w * s - basket + spec.strike);
  }
  k.theta = disc * theta;
  return k;
}

GreeksReport estimate_greeks(const OptionSpec& spec, const MarketParams& params, std::size_t paths,
                             std::uint64_t seed) {
  if (paths < 2) throw ConfigError("estimate_greeks: at least two paths are required");
  params.validate();
  spec.validate();
  spec.check_dimension(params.n());
  const ScoreContext ctx = ScoreContext::build(params);
  const std::size_t n = params.n();
  const bool exchange = spec.kind == OptionKind::Exchange;
  const std::size_t n_gamma = exchange ? 1 : n;
  const double disc = std::exp(-params.r * params.T);

  // Column-per-quantity storage: price, delta_1..n, gamma_1..m, theta.
  const std::size_t cols = 1 + n + n_gamma + 1;
  std::vector<std::vector<double>> contrib(cols, std::vector<double>(paths));

  for_each_path(params, 1, paths, seed, [&](std::size_t b, const PathView& path) {
    contrib[0][b] = disc * payoff(spec, path.terminal());
    if (exchange) {
      const ExchangeKernel k = exchange_greek_kernels(path, ctx, params);
      contrib[1][b] = k.delta;
      // Delta w.r.t. S2 by homogeneity of degree one: u = S1 u_1 + S2 u_2.
      contrib[2][b] = (contrib[0][b] - params.s0[0] * k.delta) / params.s0[1];
      contrib[3][b] = k.gamma;
      contrib[4][b] = k.theta;
    } else {
      const BasketKernel k = basket_greek_kernels(path, ctx, params, spec);
      for (std::size_t i = 0; i < n; ++i) {
        contrib[1 + i][b] = k.delta[static_cast<Eigen::Index>(i)];
        contrib[1 + n + i][b] = k.gamma[static_cast<Eigen::Index>(i)];
      }
      contrib[cols - 1][b] = k.theta;
    }
  });

  GreeksReport rep;
  rep.paths = paths;
  rep.delta.resize(static_cast<Eigen::Index>(n));
  rep.delta_se.resize(static_cast<Eigen::Index>(n));
  rep.gamma.resize(static_cast<Eigen::Index>(n_gamma));
  rep.gamma_se.resize(static_cast<Eigen::Index>(n_gamma));
  SampleStats st = sample_stats(contrib[0]);
  rep.price = st.mean;
  rep.price_se = st.std_err;
  for (std::size_t i = 0; i < n; ++i) {
    st = sample_stats(contrib[1 + i]);
    rep.delta[static_cast<Eigen::Index>(i)] = st.mean;
    rep.delta_se[static_cast<Eigen::Index>(i)] = st.std_err;
  }
  for (std::size_t i = 0; i < n_gamma; ++i) {
    st = sample_stats(contrib[1 + n + i]);
    rep.gamma[static_cast<Eigen::Index>(i)] = st.mean;
    rep.gamma_se[static_cast<Eigen::Index>(i)] = st.std_err;
  }
  st = sample_stats(contrib[cols - 1]);
  rep.theta = st.mean;
  rep.theta_se = st.std_err;
  return rep;
}

BumpGamma bump_gamma(const OptionSpec& spec, const MarketParams& params, std::size_t paths,
                     std::uint64_t seed, double rel_bump) {
  params.validate();
  spec.check_dimension(params.n());
  const std::size_t n = params.n();
  const std::size_t m = spec.kind == OptionKind::Exchange ? 1 : n;
  const double disc = std::exp(-params.r * params.T);
  std::vector<std::vector<double>> contrib(m, std::vector<double>(paths));
  std::vector<double> bumped(n);
  for_each_path(params, 1, paths, seed, [&](std::size_t b, const PathView& path) {
    const auto sT = path.terminal();
    const double mid = payoff(spec, sT);
    for (std::size_t i = 0; i < m; ++i) {
      // S_i(T) is linear in S_i(0) along a fixed draw.
      const double h = rel_bump * params.s0[static_cast<Eigen::Index>(i)];
      std::copy(sT.begin(), sT.end(), bumped.begin());
      bumped[i] = sT[i] * (1.0 + rel_bump);
      const double up = payoff(spec, bumped);
      bumped[i] = sT[i] * (1.0 - rel_bump);
      const double dn = payoff(spec, bumped);
      contrib[i][b] = disc * (up - 2.0 * mid + dn) / (h * h);
    }
  });
  BumpGamma out{Eigen::VectorXd(static_cast<Eigen::Index>(m)), Eigen::VectorXd(static_cast<Eigen::Index>(m))};
  for (std::size_t i = 0; i < m; ++i) {
    const SampleStats st = sample_stats(contrib[i]);
    out.gamma[static_cast<Eigen::Index>(i)] = st.mean;
    out.std_err[static_cast<Eigen::Index>(i)] = st.std_err;
  }
  return out;
}

}  // namespace diffgreeks
