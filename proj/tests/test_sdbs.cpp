#include "doctest.h"

#include <cmath>
#include <limits>

#include "diffgreeks/config.hpp"
#include "diffgreeks/errors.hpp"
#include "diffgreeks/sdbs.hpp"

using namespace diffgreeks;

namespace {

Network constant_net(std::size_t assets, double c) {
  Network net(default_widths(assets), Activation::make(ActivationKind::Softplus));
  net.bias(net.layers() - 1)[0] = c;
  return net;
}

// N(t, S) = S1 + shift through one relu unit (S1 > 0 keeps it linear).
Network s1_net(std::size_t assets, double shift = 0.0) {
  Network net({assets + 1, 2, 1}, Activation::make(ActivationKind::Relu));
  net.weight(0)(0, 1) = 1.0;
  net.weight(1)(0, 0) = 1.0;
  net.bias(1)[0] = shift;
  return net;
}

MarketParams one_asset() {
  MarketParams p;
  p.r = 0.05;
  p.sigma = Eigen::VectorXd::Constant(1, 0.3);
  p.corr = Eigen::MatrixXd::Identity(1, 1);
  p.s0 = Eigen::VectorXd::Constant(1, 50.0);
  p.T = 1.0;
  return p;
}

TrainConfig small_cfg() {
  TrainConfig cfg;
  cfg.n_epoch = 4;
  cfg.steps = 5;
  cfg.batch = 6;
  cfg.seed = 3;
  cfg.hidden = {6, 6};
  return cfg;
}

}  // namespace

TEST_SUITE("sdbs") {

TEST_CASE("rollout targets") {
  const MarketParams p = exchange_market();
  const PathBatch paths = simulate_grid(p, 8, 3, 2);

  SUBCASE("constant net") {
    const Eigen::MatrixXd tilde = rollout_tilde(constant_net(2, 4.25), paths, p);
    CHECK(tilde.rows() == 3);
    CHECK(tilde.cols() == 8);
    CHECK((tilde.array() - 4.25).abs().maxCoeff() == 0.0);
  }
  SUBCASE("identity in S1 gives the Euler step") {
    const Eigen::MatrixXd tilde = rollout_tilde(s1_net(2), paths, p);
    for (std::size_t b = 0; b < 3; ++b) {
      const PathView v = paths.path(b);
      for (std::size_t k = 1; k <= 8; ++k) {
        const double s = v.price(k - 1, 0);
        const double expect = s * (1.0 + p.r * paths.dt(k)) + 0.4 * s * v.increments(k - 1)[0];
        CHECK(tilde(Eigen::Index(b), Eigen::Index(k - 1)) == doctest::Approx(expect).epsilon(1e-14));
      }
    }
  }
  SUBCASE("random net against an independent assembly") {
    const Network net = init_params(default_widths(2), Activation::make(ActivationKind::Softplus), 5);
    const Eigen::MatrixXd tilde = rollout_tilde(net, paths, p);
    const double sig[2] = {0.4, 0.2};
    for (std::size_t b = 0; b < 3; ++b) {
      const PathView v = paths.path(b);
      for (std::size_t k = 1; k <= 8; ++k) {
        const Eigen::Vector2d s(v.price(k - 1, 0), v.price(k - 1, 1));
        const EvalRecord rec = eval_with_derivatives(net, paths.grid()[k - 1], s);
        const double dt = paths.dt(k);
        double drift = rec.grad_t;
        double noise = 0.0;
        for (int i = 0; i < 2; ++i) {
          drift += p.r * s[i] * rec.grad_s[i];
          noise += sig[i] * s[i] * rec.grad_s[i] * v.increments(k - 1)[std::size_t(i)];
          for (int j = 0; j < 2; ++j) drift += 0.5 * p.corr(i, j) * sig[i] * sig[j] * s[i] * s[j] * rec.hess_s(i, j);
        }
        const double expect = rec.value + drift * dt + noise;
        CHECK(std::abs(tilde(Eigen::Index(b), Eigen::Index(k - 1)) - expect) <= 1e-12 * std::max(1.0, std::abs(expect)));
      }
    }
  }
}

TEST_CASE("loss terms on analytic nets") {
  const MarketParams p = exchange_market();
  const PathBatch paths = simulate_grid(p, 10, 4, 6);
  TrainConfig cfg;
  cfg.steps = 10;
  cfg.batch = 4;
  cfg.w = 0.7;

  SUBCASE("constant net") {
    const double c = 3.0;
    const Network net = constant_net(2, c);
    const LossBreakdown l = compute_losses(net, paths, rollout_tilde(net, paths, p), OptionSpec::exchange(), p, cfg);
    CHECK(l.l_sde == 0.0);
    CHECK(l.l_bs == doctest::Approx(10.0 * std::pow(p.r * c, 2)).epsilon(1e-13));
    double lt = 0.0;
    for (std::size_t b = 0; b < 4; ++b) lt += std::pow(c - payoff(OptionSpec::exchange(), paths.path(b).terminal()), 2);
    CHECK(l.l_t == doctest::Approx(lt / 4.0 * cfg.terminal_weight()).epsilon(1e-13));
    CHECK(cfg.terminal_weight() == 0.5);
    CHECK(l.total == l.l_sde + l.w * l.l_bs + l.l_t);
    CHECK(l.w == 0.7);
  }
  SUBCASE("linear net solves the PDE") {
    const Network net = s1_net(2);
    const LossBreakdown l = compute_losses(net, paths, rollout_tilde(net, paths, p), OptionSpec::exchange(), p, cfg);
    CHECK(std::abs(l.l_bs) < 1e-24);
    CHECK(l.l_sde > 0.0);  // Euler vs exact log-step
  }
  SUBCASE("terminal mismatch of one") {
    const MarketParams q = one_asset();
    const PathBatch qp = simulate_grid(q, 4, 5, 1);
    TrainConfig c1;
    c1.steps = 4;
    c1.batch = 5;
    c1.w_T = 10.0;
    const Network net = s1_net(1, 1.0);
    const OptionSpec spec = OptionSpec::basket(Eigen::VectorXd::Ones(1), 0.0);
    const LossBreakdown l = compute_losses(net, qp, rollout_tilde(net, qp, q), spec, q, c1);
    CHECK(l.l_t == doctest::Approx(10.0).epsilon(1e-12));
  }
}

TEST_CASE("adam") {
  TrainConfig cfg;
  Network net({2, 1}, Activation::make(ActivationKind::Softplus));  // 3 parameters
  AdamState st = AdamState::zeros(net.param_count());
  Eigen::VectorXd g(3);
  g << 1.0, 0.0, 0.0;
  adam_step(net, g, st, 1e-3, cfg);
  CHECK(st.step == 1);
  CHECK(net.params()[0] == doctest::Approx(-9.99999990e-4).epsilon(1e-12));
  CHECK(net.params().tail(2).norm() == 0.0);

  // pure update: same state and params in, same out
  Network a = net, b = net;
  AdamState sa = st, sb = st;
  adam_step(a, g, sa, 1e-3, cfg);
  adam_step(b, g, sb, 1e-3, cfg);
  CHECK(a == b);
  CHECK(sa.m == sb.m);
  CHECK(sa.v == sb.v);

  // zero gradient: moments decay, parameters stay put once they have
  Network z({2, 1}, Activation::make(ActivationKind::Softplus));
  AdamState sz = AdamState::zeros(3);
  adam_step(z, Eigen::VectorXd::Zero(3), sz, 1e-3, cfg);
  CHECK(z.params().norm() == 0.0);
  const double m_before = st.m[0];
  adam_step(net, Eigen::VectorXd::Zero(3), st, 1e-3, cfg);
  CHECK(st.m[0] == doctest::Approx(0.9 * m_before));
}

TEST_CASE("learning-rate schedule") {
  TrainConfig cfg;
  cfg.n_epoch = 5;
  CHECK(lr_schedule(1, cfg) == 1e-3);
  CHECK(lr_schedule(5, cfg) == doctest::Approx(1e-7).epsilon(1e-12));
  CHECK(lr_schedule(3, cfg) == doctest::Approx((1e-3 + 1e-7) / 2).epsilon(1e-12));
  cfg.n_epoch = 1;
  CHECK(lr_schedule(1, cfg) == 1e-3);
}

TEST_CASE("total-loss gradient on a tiny net") {
  const MarketParams p = one_asset();
  TrainConfig cfg;
  cfg.steps = 2;
  cfg.batch = 1;
  cfg.hidden = {2};
  const OptionSpec spec = OptionSpec::basket(Eigen::VectorXd::Ones(1), 50.0);
  Network net = init_params(cfg.widths(1), Activation::make(ActivationKind::Softplus), 4);
  // scale weights so pre-activations sit in the curved part of softplus
  net.weight(0).col(1) *= 0.05;
  const PathBatch paths = simulate_grid(p, 2, 1, 8);

  for (bool stop : {false, true}) {
    CAPTURE(stop);
    cfg.stop_gradient_target = stop;
    const SdbsGradient exact = sdbs_loss_gradient(net, paths, spec, p, cfg);
    const Eigen::MatrixXd frozen = rollout_tilde(net, paths, p);
    auto total = [&](const Network& m) {
      return compute_losses(m, paths, stop ? frozen : rollout_tilde(m, paths, p), spec, p, cfg).total;
    };
    CHECK(exact.loss.total == doctest::Approx(total(net)).epsilon(1e-13));
    const double scale = exact.grad.cwiseAbs().maxCoeff();
    double worst = 0.0;
    for (Eigen::Index k = 0; k < exact.grad.size(); ++k) {
      Network up = net, dn = net;
      const double h = 1e-6 * std::max(std::abs(net.params()[k]), 1e-2);
      up.params()[k] += h;
      dn.params()[k] -= h;
      const double fd = (total(up) - total(dn)) / (2 * h);
      worst = std::max(worst, std::abs(fd - exact.grad[k]) / std::max(std::abs(exact.grad[k]), 1e-3 * scale));
    }
    MESSAGE("max relative error " << worst);
    CHECK(worst < 1e-3);
  }
}

TEST_CASE("training loop") {
  const MarketParams p = exchange_market();
  const TrainConfig cfg = small_cfg();

  SUBCASE("deterministic") {
    const TrainResult a = train(OptionSpec::exchange(), p, cfg);
    const TrainResult b = train(OptionSpec::exchange(), p, cfg);
    REQUIRE(a.log.size() == 4);
    for (std::size_t e = 0; e < 4; ++e) {
      CHECK(a.log[e].loss.total == b.log[e].loss.total);
      CHECK(a.log[e].lr == b.log[e].lr);
    }
    CHECK(a.best == b.best);
    double run_min = std::numeric_limits<double>::infinity();
    for (const LossLogRow& row : a.log) run_min = std::min(run_min, row.loss.total);
    CHECK(a.best_loss == run_min);
  }
  SUBCASE("one epoch is one Adam step") {
    TrainConfig c1 = cfg;
    c1.n_epoch = 1;
    const Network start = init_params(c1.widths(2), Activation::make(c1.activation), 99);
    const TrainResult r = train_from(start, OptionSpec::exchange(), p, c1);
    const PathBatch paths = simulate_grid(p, c1.steps, c1.batch, epoch_seed(c1.seed, 1));
    Network expect = start;
    AdamState st = AdamState::zeros(expect.param_count());
    adam_step(expect, sdbs_loss_gradient(start, paths, OptionSpec::exchange(), p, c1).grad, st, 1e-3, c1);
    CHECK(r.best == expect);
    CHECK(r.best_epoch == 1);
  }
  SUBCASE("non-finite loss stops training") {
    Network bad = init_params(cfg.widths(2), Activation::make(cfg.activation), 1);
    bad.params()[0] = std::numeric_limits<double>::quiet_NaN();
    CHECK_THROWS_AS(train_from(bad, OptionSpec::exchange(), p, cfg), DivergenceError);
  }
  SUBCASE("strict smoothness refuses relu") {
    TrainConfig c = cfg;
    c.activation = ActivationKind::Relu;
    c.strict_smoothness = true;
    CHECK_THROWS_AS(train(OptionSpec::exchange(), p, c), UnsupportedActivationError);
    c.strict_smoothness = false;
    CHECK_NOTHROW(train(OptionSpec::exchange(), p, c));
  }
}

TEST_CASE("frozen estimation") {
  const MarketParams p = exchange_market();
  const GreeksReport c = estimate(constant_net(2, 2.5), OptionSpec::exchange(), p, 3, 1);
  CHECK(c.price == 2.5);
  CHECK(c.delta.norm() == 0.0);
  CHECK(c.gamma.norm() == 0.0);
  CHECK(c.theta == 0.0);

  const GreeksReport s = estimate(s1_net(2), OptionSpec::exchange(), p, 2, 1);
  CHECK(s.price == 60.0);
  CHECK(s.delta[0] == 1.0);
  CHECK(s.delta[1] == 0.0);
  CHECK(s.gamma.norm() == 0.0);
  CHECK(s.theta == 0.0);
}

}
