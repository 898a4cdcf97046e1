// diffgreeks: command-line front end for the pricing engines and the bench suites.

#include <fstream>
#include <iostream>
#include <memory>
#include <optional>
#include <string>

#include "CLI11.hpp"

#include "diffgreeks/bench.hpp"
#include "diffgreeks/checkpoint.hpp"
#include "diffgreeks/closed_form.hpp"
#include "diffgreeks/config.hpp"
#include "diffgreeks/errors.hpp"
#include "diffgreeks/fdm.hpp"
#include "diffgreeks/mc_greeks.hpp"
#include "diffgreeks/sdbs.hpp"

using namespace diffgreeks;

namespace {

// Writes to --out when given, stdout otherwise.
class Sink {
 public:
  explicit Sink(const std::string& path) {
    if (path.empty() || path == "-") return;
    file_ = std::make_unique<std::ofstream>(path);
    if (!*file_) throw UsageError("cannot write '" + path + "'");
  }
  std::ostream& os() { return file_ ? *file_ : std::cout; }

 private:
  std::unique_ptr<std::ofstream> file_;
};

std::string num(double v) { return format_number(v); }

struct Market {
  MarketParams params;
  OptionSpec option;
  std::optional<ExperimentConfig> cfg;
};

// Market and payoff from --config, or the two-asset exchange defaults.
Market market_from(const std::string& config_path) {
  if (config_path.empty()) return {exchange_market(), OptionSpec::exchange(), std::nullopt};
  ExperimentConfig c = load_config(config_path);
  return {c.market, c.option, c};
}

int cmd_price_exchange(const std::string& config, const std::string& out) {
  const Market m = market_from(config);
  if (m.option.kind != OptionKind::Exchange) throw UsageError("price-exchange needs an exchange option");
  const MarketParams& p = m.params;
  const MargrabeInputs in{p.s0[0], p.s0[1], p.sigma[0], p.sigma[1], p.corr(0, 1), p.T};
  const MargrabeGreeks g = margrabe_greeks(in);
  Sink sink(out);
  sink.os() << "price,delta,gamma,theta\n"
            << num(margrabe_price(in)) << ',' << num(g.delta) << ',' << num(g.gamma) << ',' << num(g.theta) << '\n';
  return 0;
}

int cmd_mc(const std::string& config, std::optional<std::size_t> paths, std::optional<std::uint64_t> seed,
           bool bump, const std::string& out) {
  const Market m = market_from(config);
  std::size_t P = 1'000'000;
  std::uint64_t S = 1;
  if (m.cfg && m.cfg->engine == Engine::Mc) {
    P = m.cfg->mc.paths;
    S = m.cfg->mc.seed;
  }
  if (paths) P = *paths;
  if (seed) S = *seed;
  const GreeksReport g = estimate_greeks(m.option, m.params, P, S);
  Sink sink(out);
  std::ostream& os = sink.os();
  const std::string tail = "," + std::to_string(g.paths) + "\n";
  os << "estimator,value,std_err,paths\n";
  os << "price," << num(g.price) << ',' << num(g.price_se) << tail;
  for (Eigen::Index i = 0; i < g.delta.size(); ++i)
    os << "delta_" << i + 1 << "_pw," << num(g.delta[i]) << ',' << num(g.delta_se[i]) << tail;
  for (Eigen::Index i = 0; i < g.gamma.size(); ++i)
    os << "gamma_" << i + 1 << "_lrpw," << num(g.gamma[i]) << ',' << num(g.gamma_se[i]) << tail;
  os << "theta_pw," << num(g.theta) << ',' << num(g.theta_se) << tail;
  if (bump) {
    const BumpGamma b = bump_gamma(m.option, m.params, P, S);
    for (Eigen::Index i = 0; i < b.gamma.size(); ++i)
      os << "gamma_" << i + 1 << "_bump," << num(b.gamma[i]) << ',' << num(b.std_err[i]) << tail;
  }
  return 0;
}

int cmd_fdm(const std::string& config, std::optional<double> s_max, std::optional<std::size_t> m_s,
            std::optional<std::size_t> m_t, bool strict, const std::string& out) {
  const Market m = market_from(config);
  FdmBlock f;
  if (m.cfg && m.cfg->engine == Engine::Fdm) f = m.cfg->fdm;
  if (s_max) f.s_max = *s_max;
  if (m_s) f.m_s = *m_s;
  if (m_t) f.m_t = *m_t;
  if (strict) f.mode = StabilityMode::Strict;
  if (m.params.n() != 2) throw UsageError("fdm handles two-asset markets only");
  const FdmGrid grid = FdmGrid::uniform(2, f.s_max, f.m_s, f.m_t, m.params.T);
  const FdmSolution sol = solve(m.option, m.params, grid, f.mode);
  const FdmGreeks g = fdm_greeks(sol.u0, sol.u1, grid, m.params.s0);
  Sink sink(out);
  sink.os() << "price,delta1,delta2,gamma1,gamma2,theta,cfl\n"
            << num(sol.u0.at(interior_node(grid, m.params.s0))) << ',' << num(g.delta[0]) << ','
            << num(g.delta[1]) << ',' << num(g.gamma[0]) << ',' << num(g.gamma[1]) << ',' << num(g.theta) << ','
            << num(sol.cfl) << '\n';
  return 0;
}

int cmd_train(const std::string& config, const std::string& out, std::string log_path,
              std::optional<std::size_t> max_epochs, bool quiet) {
  if (config.empty()) throw UsageError("train needs --config");
  if (out.empty()) throw UsageError("train needs --out");
  ExperimentConfig cfg = load_config(config);
  if (cfg.engine != Engine::Sdbs) throw UsageError(config + ": train needs an 'sdbs' block");
  if (max_epochs) cfg.sdbs.train.n_epoch = std::min(cfg.sdbs.train.n_epoch, *max_epochs);
  if (log_path.empty()) log_path = out + ".loss.csv";
  std::ofstream log(log_path);
  if (!log) throw UsageError("cannot write '" + log_path + "'");
  log << "epoch,l_sde,l_bs,l_t,total,lr\n";
  const std::size_t every = std::max<std::size_t>(1, cfg.sdbs.train.n_epoch / 20);
  const TrainResult tr = train(cfg.option, cfg.market, cfg.sdbs.train, [&](const LossLogRow& r) {
    log << r.epoch << ',' << num(r.loss.l_sde) << ',' << num(r.loss.l_bs) << ',' << num(r.loss.l_t) << ','
        << num(r.loss.total) << ',' << num(r.lr) << '\n';
    if (!quiet && (r.epoch % every == 0 || r.epoch == 1))
      std::cerr << "epoch " << r.epoch << "  loss " << num(r.loss.total) << '\n';
  });
  Checkpoint ck;
  ck.net = tr.best;
  ck.config = cfg;
  ck.config_hash = config_hash(cfg);
  ck.best_epoch = tr.best_epoch;
  ck.best_loss = tr.best_loss;
  save_checkpoint(ck, out);
  if (!quiet) std::cerr << "best loss " << num(tr.best_loss) << " at epoch " << tr.best_epoch << '\n';
  return 0;
}

int cmd_estimate(const std::string& ckpt_path, const std::string& config, std::size_t repeats, std::uint64_t seed,
                 const std::string& out) {
  if (ckpt_path.empty()) throw UsageError("estimate needs --ckpt");
  const Checkpoint ck = load_checkpoint(ckpt_path);
  MarketParams params;
  OptionSpec option;
  if (!config.empty()) {
    const ExperimentConfig c = load_config(config);
    params = c.market;
    option = c.option;
  } else if (ck.config) {
    params = ck.config->market;
    option = ck.config->option;
  } else {
    throw UsageError(ckpt_path + " carries no market; pass --config");
  }
  const GreeksReport g = estimate(ck.net, option, params, repeats, seed);
  Sink sink(out);
  std::ostream& os = sink.os();
  os << "price";
  for (Eigen::Index i = 0; i < g.delta.size(); ++i) os << ",delta_" << i + 1;
  for (Eigen::Index i = 0; i < g.gamma.size(); ++i) os << ",gamma_" << i + 1;
  os << ",theta\n" << num(g.price);
  for (Eigen::Index i = 0; i < g.delta.size(); ++i) os << ',' << num(g.delta[i]);
  for (Eigen::Index i = 0; i < g.gamma.size(); ++i) os << ',' << num(g.gamma[i]);
  os << ',' << num(g.theta) << '\n';
  return 0;
}

int cmd_bench(const std::string& suite, const std::string& config, const BenchOptions& opts, const std::string& out,
              const std::string& json_out, bool list) {
  if (list) {
    for (const auto& n : suite_names()) std::cout << n << '\n';
    return 0;
  }
  std::vector<ReportRow> rows;
  if (!config.empty()) {
    ExperimentConfig c = load_config(config);
    if (opts.max_paths && c.engine == Engine::Mc) c.mc.paths = std::min(c.mc.paths, *opts.max_paths);
    if (opts.max_epochs && c.engine == Engine::Sdbs)
      c.sdbs.train.n_epoch = std::min(c.sdbs.train.n_epoch, *opts.max_epochs);
    rows = run_experiment(c);
    for (ReportRow& r : rows) {
      r.suite = c.label.empty() ? "custom" : c.label;
      if (!opts.timing) r.runtime_ms = 0.0;
    }
  } else {
    if (suite.empty()) throw UsageError("bench needs a suite name or --config (see --list)");
    rows = bench_suite(suite, opts);
  }
  Sink sink(out);
  write_csv(sink.os(), rows);
  if (!json_out.empty()) {
    std::ofstream js(json_out);
    if (!js) throw UsageError("cannot write '" + json_out + "'");
    js << report_json(rows).dump(1) << '\n';
  }
  bool failed = false;
  for (const ReportRow& r : rows) failed = failed || r.failed;
  return failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Prices exchange and basket options and their Greeks by closed form, Monte Carlo, "
               "finite differences and differential neural networks."};
  app.require_subcommand(1);

  std::string config, out;

  auto* pe = app.add_subcommand("price-exchange", "Margrabe price and Greeks as CSV");
  pe->add_option("--config", config, "experiment config (JSON)");
  pe->add_option("--out", out, "output file (default stdout)");

  std::optional<std::size_t> paths;
  std::optional<std::uint64_t> seed;
  bool no_bump = false;
  auto* mc = app.add_subcommand("mc", "Monte Carlo price and Greeks as CSV");
  mc->add_option("--paths", paths, "simulated paths");
  mc->add_option("--seed", seed, "RNG seed");
  mc->add_option("--config", config, "experiment config (JSON)");
  mc->add_option("--out", out, "output file (default stdout)");
  mc->add_flag("--no-bump", no_bump, "skip the bump-and-revalue gamma");

  std::optional<double> s_max;
  std::optional<std::size_t> m_s, m_t;
  bool strict = false;
  auto* fdm = app.add_subcommand("fdm", "explicit finite-difference price and Greeks as CSV");
  fdm->add_option("--s-max", s_max, "upper price bound of the grid");
  fdm->add_option("--m-s", m_s, "price intervals per asset");
  fdm->add_option("--m-t", m_t, "time steps");
  fdm->add_option("--config", config, "experiment config (JSON)");
  fdm->add_option("--out", out, "output file (default stdout)");
  fdm->add_flag("--strict", strict, "abort when the explicit scheme is unstable");

  std::string log_path;
  std::optional<std::size_t> max_epochs, max_paths;
  bool quiet = false;
  auto* tr = app.add_subcommand("train", "train a network; writes a checkpoint and a loss log");
  tr->add_option("--config", config, "experiment config with an sdbs block")->required();
  tr->add_option("--out", out, "checkpoint file")->required();
  tr->add_option("--log", log_path, "loss log CSV (default <out>.loss.csv)");
  tr->add_option("--max-epochs", max_epochs, "cap on nEpoch");
  tr->add_flag("--quiet", quiet, "no progress on stderr");

  std::string ckpt;
  std::size_t repeats = 1;
  std::uint64_t est_seed = 1;
  auto* es = app.add_subcommand("estimate", "price and Greeks from a trained checkpoint as CSV");
  es->add_option("--ckpt", ckpt, "checkpoint file")->required();
  es->add_option("--repeats", repeats, "evaluations to average")->check(CLI::PositiveNumber);
  es->add_option("--seed", est_seed, "seed (evaluation is deterministic)");
  es->add_option("--config", config, "override the market stored in the checkpoint");
  es->add_option("--out", out, "output file (default stdout)");

  std::string suite, json_out;
  bool full = false, no_timing = false, list = false;
  std::size_t jobs = 1;
  auto* be = app.add_subcommand("bench", "run a predeclared suite (or one --config) and report CSV");
  be->add_option("suite", suite, "suite name");
  be->add_option("--config", config, "run a single experiment config instead");
  be->add_option("--out", out, "CSV report (default stdout)");
  be->add_option("--json", json_out, "JSON mirror of the report");
  be->add_option("--max-paths", max_paths, "cap on Monte Carlo paths");
  be->add_option("--max-epochs", max_epochs, "cap on training epochs");
  be->add_option("--jobs", jobs, "experiments run concurrently")->check(CLI::PositiveNumber);
  be->add_flag("--full", full, "also run the full-scale rows");
  be->add_flag("--no-timing", no_timing, "write runtime_ms as 0");
  be->add_flag("--list", list, "list suite names");

  CLI11_PARSE(app, argc, argv);

  try {
    if (pe->parsed()) return cmd_price_exchange(config, out);
    if (mc->parsed()) return cmd_mc(config, paths, seed, !no_bump, out);
    if (fdm->parsed()) return cmd_fdm(config, s_max, m_s, m_t, strict, out);
    if (tr->parsed()) return cmd_train(config, out, log_path, max_epochs, quiet);
    if (es->parsed()) return cmd_estimate(ckpt, config, repeats, est_seed, out);
    if (be->parsed()) {
      BenchOptions opts;
      opts.max_paths = max_paths;
      opts.max_epochs = max_epochs;
      opts.full = full;
      opts.timing = !no_timing;
      opts.jobs = jobs;
      return cmd_bench(suite, config, opts, out, json_out, list);
    }
  } catch (const UsageError& e) {
    std::cerr << "diffgreeks: " << e.what() << '\n';
    return 2;
  } catch (const ConfigError& e) {
    std::cerr << "diffgreeks: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "diffgreeks: " << e.what() << '\n';
    return 1;
  }
  return 0;
}
