#include "diffgreeks/sdbs.hpp"

#include <algorithm>
#include <cmath>
#include <limits>
#include <sstream>

#include "diffgreeks/errors.hpp"
#include "diffgreeks/rng.hpp"

namespace diffgreeks {

std::vector<std::size_t> TrainConfig::widths(std::size_t assets) const {
  std::vector<std::size_t> w{assets + 1};
  w.insert(w.end(), hidden.begin(), hidden.end());
  w.push_back(1);
  return w;
}

void TrainConfig::validate() const {
  if (n_epoch < 1) throw ConfigError("train.nEpoch must be at least 1");
  if (steps < 1) throw ConfigError("train.N must be at least 1");
  if (batch < 1) throw ConfigError("train.batch must be at least 1");
  if (!(lr_end > 0.0) || !(lr_start >= lr_end)) throw ConfigError("train: need lr_start >= lr_end > 0");
  if (!(adam_beta1 > 0.0 && adam_beta1 < 1.0) || !(adam_beta2 > 0.0 && adam_beta2 < 1.0))
    throw ConfigError("train: Adam betas must lie in (0, 1)");
  if (!(w >= 0.0)) throw ConfigError("train.w must be non-negative");
  if (!(terminal_weight() >= 0.0)) throw ConfigError("train.w_T must be non-negative");
  if (chunk_paths < 1) throw ConfigError("train.chunk_paths must be at least 1");
}

namespace {

// Coefficients of the generator acting on the network at one state S:
// drift = N_t + sum_i r S_i N_Si + sum_pairs c_p H_p with
// c_p = rho_ij sigma_i sigma_j S_i S_j (1/2 on the diagonal).
struct Generator {
  const MarketParams& params;
  std::size_t n;
  std::vector<double> pair_coef;  // rho_ij sigma_i sigma_j, halved on the diagonal

  explicit Generator(const MarketParams& p) : params(p), n(p.n()) {
    for (std::size_t i = 0; i < n; ++i) {
      for (std::size_t j = i; j < n; ++j) {
        const auto ii = static_cast<Eigen::Index>(i), jj = static_cast<Eigen::Index>(j);
        const double c = p.corr(ii, jj) * p.sigma[ii] * p.sigma[jj];
        pair_coef.push_back(i == j ? 0.5 * c : c);
      }
    }
  }

  double pair(std::size_t p, std::span<const double> s, std::size_t i, std::size_t j) const {
    return pair_coef[p] * s[i] * s[j];
  }

  double drift(const EvalBatch& o, Eigen::Index col, std::span<const double> s) const {
    double acc = o.grad(0, col);
    for (std::size_t i = 0; i < n; ++i) acc += params.r * s[i] * o.grad(static_cast<Eigen::Index>(1 + i), col);
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j, ++p) acc += pair(p, s, i, j) * o.hess(static_cast<Eigen::Index>(p), col);
    return acc;
  }

  double diffusion(const EvalBatch& o, Eigen::Index col, std::span<const double> s,
                   std::span<const double> dw) const {
    double acc = 0.0;
    for (std::size_t i = 0; i < n; ++i)
      acc += params.sigma[static_cast<Eigen::Index>(i)] * s[i] * o.grad(static_cast<Eigen::Index>(1 + i), col) * dw[i];
    return acc;
  }

  // adj(col) += scale * d(drift)/d(outputs)
  void add_drift_adjoint(EvalBatch& adj, Eigen::Index col, std::span<const double> s, double scale) const {
    adj.grad(0, col) += scale;
    for (std::size_t i = 0; i < n; ++i) adj.grad(static_cast<Eigen::Index>(1 + i), col) += scale * params.r * s[i];
    std::size_t p = 0;
    for (std::size_t i = 0; i < n; ++i)
      for (std::size_t j = i; j < n; ++j, ++p) adj.hess(static_cast<Eigen::Index>(p), col) += scale * pair(p, s, i, j);
  }

  void add_diffusion_adjoint(EvalBatch& adj, Eigen::Index col, std::span<const double> s,
                             std::span<const double> dw, double scale) const {
    for (std::size_t i = 0; i < n; ++i)
      adj.grad(static_cast<Eigen::Index>(1 + i), col) += scale * params.sigma[static_cast<Eigen::Index>(i)] * s[i] * dw[i];
  }
};

// Inputs (t_k, S(t_k)) for k = 0..N of paths [b0, b1).
Eigen::MatrixXd chunk_inputs(const PathBatch& paths, std::size_t b0, std::size_t b1) {
  const std::size_t n = paths.n();
  const std::size_t pts = paths.steps() + 1;
  Eigen::MatrixXd x(static_cast<Eigen::Index>(n + 1), static_cast<Eigen::Index>((b1 - b0) * pts));
  for (std::size_t b = b0; b < b1; ++b) {
    const PathView pv = paths.path(b);
    for (std::size_t k = 0; k < pts; ++k) {
      const auto col = static_cast<Eigen::Index>((b - b0) * pts + k);
      x(0, col) = paths.grid()[k];
      for (std::size_t i = 0; i < n; ++i) x(static_cast<Eigen::Index>(1 + i), col) = pv.price(k, i);
    }
  }
  return x;
}

template <class Visit>
void for_each_chunk(const PathBatch& paths, std::size_t chunk, Visit&& visit) {
  for (std::size_t b0 = 0; b0 < paths.batch(); b0 += chunk) visit(b0, std::min(paths.batch(), b0 + chunk));
}

}  // namespace

Eigen::MatrixXd rollout_tilde(const Network& net, const PathBatch& paths, const MarketParams& params) {
  if (net.assets() != paths.n() || params.n() != paths.n()) throw DimensionError("rollout: dimension mismatch");
  const Generator gen(params);
  const std::size_t N = paths.steps();
  const std::size_t pts = N + 1;
  Eigen::MatrixXd tilde(static_cast<Eigen::Index>(paths.batch()), static_cast<Eigen::Index>(N));
  NetworkTape tape;
  for_each_chunk(paths, 4, [&](std::size_t b0, std::size_t b1) {
    tape.forward(net, chunk_inputs(paths, b0, b1));
    const EvalBatch& o = tape.outputs();
    for (std::size_t b = b0; b < b1; ++b) {
      const PathView pv = paths.path(b);
      for (std::size_t k = 1; k <= N; ++k) {
        const auto prev = static_cast<Eigen::Index>((b - b0) * pts + k - 1);
        const auto s = pv.prices(k - 1);
        tilde(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k - 1)) =
            o.value[prev] + gen.drift(o, prev, s) * paths.dt(k) + gen.diffusion(o, prev, s, pv.increments(k - 1));
      }
    }
  });
  return tilde;
}

LossBreakdown compute_losses(const Network& net, const PathBatch& paths, const Eigen::MatrixXd& tilde,
                             const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg) {
  const std::size_t N = paths.steps();
  if (tilde.rows() != static_cast<Eigen::Index>(paths.batch()) || tilde.cols() != static_cast<Eigen::Index>(N))
    throw DimensionError("compute_losses: targets are not aligned with the paths");
  spec.check_dimension(paths.n());
  const Generator gen(params);
  const std::size_t pts = N + 1;
  const double wT = cfg.terminal_weight();
  LossBreakdown lb;
  lb.w = cfg.w;
  NetworkTape tape;
  for_each_chunk(paths, cfg.chunk_paths, [&](std::size_t b0, std::size_t b1) {
    tape.forward(net, chunk_inputs(paths, b0, b1));
    const EvalBatch& o = tape.outputs();
    for (std::size_t b = b0; b < b1; ++b) {
      const PathView pv = paths.path(b);
      for (std::size_t k = 1; k <= N; ++k) {
        const auto col = static_cast<Eigen::Index>((b - b0) * pts + k);
        const double e = tilde(static_cast<Eigen::Index>(b), static_cast<Eigen::Index>(k - 1)) - o.value[col];
        lb.l_sde += e * e;
        const double res = gen.drift(o, col, pv.prices(k)) - params.r * o.value[col];
        lb.l_bs += res * res;
      }
      const auto last = static_cast<Eigen::Index>((b - b0) * pts + N);
      const double gap = o.value[last] - payoff(spec, pv.terminal());
      lb.l_t += wT * gap * gap;
    }
  });
  const double inv = 1.0 / static_cast<double>(paths.batch());
  lb.l_sde *= inv;
  lb.l_bs *= inv;
  lb.l_t *= inv;
  lb.total = lb.l_sde + lb.w * lb.l_bs + lb.l_t;
  return lb;
}

SdbsGradient sdbs_loss_gradient(const Network& net, const PathBatch& paths, const OptionSpec& spec,
                                const MarketParams& params, const TrainConfig& cfg) {
  if (net.assets() != paths.n() || params.n() != paths.n()) throw DimensionError("sdbs: dimension mismatch");
  spec.check_dimension(paths.n());
  if (cfg.strict_smoothness && !net.activation().supports_hessian_losses() && cfg.w != 0.0) {
    throw UnsupportedActivationError("the Black-Scholes loss needs second derivatives, which activation '" +
                                     std::string(to_string(net.activation().kind)) + "' lacks");
  }
  const Generator gen(params);
  const std::size_t N = paths.steps();
  const std::size_t pts = N + 1;
  const double wT = cfg.terminal_weight();
  const double inv = 1.0 / static_cast<double>(paths.batch());
  const bool through_target = !cfg.stop_gradient_target;

  SdbsGradient out;
  out.loss.w = cfg.w;
  out.grad = Eigen::VectorXd::Zero(static_cast<Eigen::Index>(net.param_count()));
  NetworkTape tape;
  EvalBatch adj;
  for_each_chunk(paths, cfg.chunk_paths, [&](std::size_t b0, std::size_t b1) {
    tape.forward(net, chunk_inputs(paths, b0, b1));
    const EvalBatch& o = tape.outputs();
    adj.resize(net.inputs(), hessian_pairs(net.assets()), o.points());
    for (std::size_t b = b0; b < b1; ++b) {
      const PathView pv = paths.path(b);
      const auto base = static_cast<Eigen::Index>((b - b0) * pts);
      for (std::size_t k = 1; k <= N; ++k) {
        const Eigen::Index prev = base + static_cast<Eigen::Index>(k - 1);
        const Eigen::Index col = base + static_cast<Eigen::Index>(k);
        const auto s_prev = pv.prices(k - 1);
        const auto s = pv.prices(k);
        const auto dw = pv.increments(k - 1);
        const double dt = paths.dt(k);

        const double tilde = o.value[prev] + gen.drift(o, prev, s_prev) * dt + gen.diffusion(o, prev, s_prev, dw);
        const double e = tilde - o.value[col];
        out.loss.l_sde += e * e;
        const double g_sde = 2.0 * e * inv;
        adj.value[col] -= g_sde;
        if (through_target) {
          adj.value[prev] += g_sde;
          gen.add_drift_adjoint(adj, prev, s_prev, g_sde * dt);
          gen.add_diffusion_adjoint(adj, prev, s_prev, dw, g_sde);
        }

        const double res = gen.drift(o, col, s) - params.r * o.value[col];
        out.loss.l_bs += res * res;
        const double g_bs = 2.0 * cfg.w * res * inv;
        if (g_bs != 0.0) {
          gen.add_drift_adjoint(adj, col, s, g_bs);
          adj.value[col] -= g_bs * params.r;
        }
      }
      const Eigen::Index last = base + static_cast<Eigen::Index>(N);
      const double gap = o.value[last] - payoff(spec, pv.terminal());
      out.loss.l_t += wT * gap * gap;
      adj.value[last] += 2.0 * wT * gap * inv;
    }
    tape.backward(net, adj, out.grad);
  });
  out.loss.l_sde *= inv;
  out.loss.l_bs *= inv;
  out.loss.l_t *= inv;
  out.loss.total = out.loss.l_sde + out.loss.w * out.loss.l_bs + out.loss.l_t;
  return out;
}

AdamState AdamState::zeros(std::size_t params) {
  const auto p = static_cast<Eigen::Index>(params);
  return AdamState{Eigen::VectorXd::Zero(p), Eigen::VectorXd::Zero(p), 0};
}

void adam_step(Network& net, const Eigen::VectorXd& grad, AdamState& state, double lr, const TrainConfig& cfg) {
  auto& theta = net.params();
  if (grad.size() != theta.size() || state.m.size() != theta.size() || state.v.size() != theta.size())
    throw DimensionError("adam: gradient/state shape does not match the network");
  state.step += 1;
  const double b1 = cfg.adam_beta1, b2 = cfg.adam_beta2;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double c1 = 1.0 - std::pow(b1, static_cast<double>(state.step));
  const double c2 = 1.0 - std::pow(b2, static_cast<double>(state.step));
  theta.array() -= lr * (state.m.array() / c1) / ((state.v.array() / c2).sqrt() + cfg.adam_eps);
}

double lr_schedule(std::size_t epoch, const TrainConfig& cfg) {
  if (epoch < 1 || epoch > cfg.n_epoch) throw ConfigError("lr_schedule: epoch out of range");
  if (cfg.n_epoch == 1) return cfg.lr_start;
  const double frac = static_cast<double>(epoch - 1) / static_cast<double>(cfg.n_epoch - 1);
  return cfg.lr_start + (cfg.lr_end - cfg.lr_start) * frac;
}

std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) noexcept {
  return mix64(mix64(seed) ^ (0xA54FF53A5F1D36F1ULL * (static_cast<std::uint64_t>(epoch) + 1)));
}

TrainResult train_from(Network start, const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg,
                       const EpochCallback& on_epoch) {
  cfg.validate();
  params.validate();
  spec.validate();
  spec.check_dimension(params.n());
  Network net = std::move(start);
  AdamState state = AdamState::zeros(net.param_count());
  TrainResult res;
  res.best = net;
  res.best_loss = std::numeric_limits<double>::infinity();
  res.log.reserve(cfg.n_epoch);
  for (std::size_t epoch = 1; epoch <= cfg.n_epoch; ++epoch) {
    const PathBatch paths = simulate_grid(params, cfg.steps, cfg.batch, epoch_seed(cfg.seed, epoch));
    const SdbsGradient g = sdbs_loss_gradient(net, paths, spec, params, cfg);
    if (!std::isfinite(g.loss.total) || !g.grad.allFinite()) {
      std::ostringstream os;
      os << "training diverged at epoch " << epoch << " (loss " << g.loss.total << ")";
      throw DivergenceError(os.str());
    }
    const double lr = lr_schedule(epoch, cfg);
    adam_step(net, g.grad, state, lr, cfg);
    if (g.loss.total < res.best_loss) {
      res.best_loss = g.loss.total;
      res.best_epoch = epoch;
      res.best = net;
    }
    res.log.push_back(LossLogRow{epoch, g.loss, lr});
    if (on_epoch) on_epoch(res.log.back());
  }
  return res;
}

TrainResult train(const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg,
                  const EpochCallback& on_epoch) {
  cfg.validate();
  Network net = init_params(cfg.widths(params.n()), Activation::make(cfg.activation), cfg.seed);
  return train_from(std::move(net), spec, params, cfg, on_epoch);
}

GreeksReport estimate(const Network& net, const OptionSpec& spec, const MarketParams& params,
                      std::size_t repeats, std::uint64_t seed) {
  (void)seed;  // parameters are frozen and the evaluation point is fixed
  if (repeats < 1) throw ConfigError("estimate: repeats must be at least 1");
  spec.check_dimension(params.n());
  if (net.assets() != params.n()) throw DimensionError("estimate: network and market dimensions differ");
  const auto n = static_cast<Eigen::Index>(params.n());
  const Eigen::Index m = n;  // every diagonal entry, exchange included

  GreeksReport rep;
  rep.paths = repeats;
  rep.delta = Eigen::VectorXd::Zero(n);
  rep.gamma = Eigen::VectorXd::Zero(m);
  rep.delta_se = Eigen::VectorXd::Zero(n);
  rep.gamma_se = Eigen::VectorXd::Zero(m);
  for (std::size_t rpt = 0; rpt < repeats; ++rpt) {
    const EvalRecord r = eval_with_derivatives(net, 0.0, params.s0);
    rep.price += r.value;
    rep.theta += r.grad_t;
    rep.delta += r.grad_s;
    rep.gamma += r.hess_s.diagonal().head(m);
  }
  const double inv = 1.0 / static_cast<double>(repeats);
  rep.price *= inv;
  rep.theta *= inv;
  rep.delta *= inv;
  rep.gamma *= inv;
  return rep;
}

}  // namespace diffgreeks
