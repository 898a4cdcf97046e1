#pragma once

#include <cstddef>
#include <cstdint>
#include <functional>
#include <optional>
#include <vector>

#include <Eigen/Dense>

#include "diffgreeks/market.hpp"
#include "diffgreeks/mc_greeks.hpp"
#include "diffgreeks/network.hpp"
#include "diffgreeks/payoff.hpp"

namespace diffgreeks {

struct TrainConfig {
  std::size_t n_epoch = 1000;
  std::size_t steps = 200;      // N
  std::size_t batch = 10000;    // paths per epoch
  double w = 1.0;               // weight of the Black-Scholes residual loss
  std::optional<double> w_T;    // terminal weight; N / 20 when unset
  double lr_start = 1e-3;
  double lr_end = 1e-7;
  double adam_beta1 = 0.9;
  double adam_beta2 = 0.999;
  double adam_eps = 1e-8;
  std::uint64_t seed = 0;
  bool stop_gradient_target = false;
  /// Refuse Hessian-bearing losses for relu/selu.
  bool strict_smoothness = false;
  ActivationKind activation = ActivationKind::Softplus;
  std::vector<std::size_t> hidden = {35, 35, 35, 35};
  /// Paths per forward/backward chunk; affects memory only.
  std::size_t chunk_paths = 2;

  double terminal_weight() const { return w_T.value_or(static_cast<double>(steps) / 20.0); }
  std::vector<std::size_t> widths(std::size_t assets) const;
  void validate() const;
};

/// Per-path losses averaged over the batch.
struct LossBreakdown {
  double l_sde = 0.0;
  double l_bs = 0.0;
  double l_t = 0.0;
  double w = 1.0;
  double total = 0.0;
};

/// SDE-consistent targets u~(t_k, S(t_k)), k = 1..N, one row per path.
Eigen::MatrixXd rollout_tilde(const Network& net, const PathBatch& paths, const MarketParams& params);

LossBreakdown compute_losses(const Network& net, const PathBatch& paths, const Eigen::MatrixXd& tilde,
                             const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg);

struct SdbsGradient {
  LossBreakdown loss;
  Eigen::VectorXd grad;
};

/// Total loss and its exact parameter gradient on one batch of paths.
SdbsGradient sdbs_loss_gradient(const Network& net, const PathBatch& paths, const OptionSpec& spec,
                                const MarketParams& params, const TrainConfig& cfg);

struct AdamState {
  Eigen::VectorXd m;
  Eigen::VectorXd v;
  std::size_t step = 0;

  static AdamState zeros(std::size_t params);
};

/// Bias-corrected Adam update of `net` in place.
void adam_step(Network& net, const Eigen::VectorXd& grad, AdamState& state, double lr, const TrainConfig& cfg);

/// Linear decay from lr_start at epoch 1 to lr_end at epoch n_epoch.
double lr_schedule(std::size_t epoch, const TrainConfig& cfg);

struct LossLogRow {
  std::size_t epoch = 0;
  LossBreakdown loss;
  double lr = 0.0;
};

struct TrainResult {
  Network best;
  double best_loss = 0.0;
  std::size_t best_epoch = 0;
  std::vector<LossLogRow> log;
};

using EpochCallback = std::function<void(const LossLogRow&)>;

/// Algorithm: fresh paths each epoch, loss, one Adam step, keep the
/// post-update parameters whenever the epoch's loss is a new minimum.
TrainResult train(const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg,
                  const EpochCallback& on_epoch = {});

/// Continues training from `start`.
TrainResult train_from(Network start, const OptionSpec& spec, const MarketParams& params, const TrainConfig& cfg,
                       const EpochCallback& on_epoch = {});

/// Price = N(0, S0), delta_i = N_Si, gamma_i = N_SiSi, theta = N_t with frozen
/// parameters, averaged over `repeats` evaluations.
GreeksReport estimate(const Network& net, const OptionSpec& spec, const MarketParams& params,
                      std::size_t repeats, std::uint64_t seed);

/// Seed of the paths used in a given epoch.
std::uint64_t epoch_seed(std::uint64_t seed, std::size_t epoch) noexcept;

}  // namespace diffgreeks
