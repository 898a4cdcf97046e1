#include "diffgreeks/bench.hpp"

#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <future>
#include <ostream>

#include "diffgreeks/closed_form.hpp"
#include "diffgreeks/errors.hpp"
#include "diffgreeks/fdm.hpp"
#include "diffgreeks/mc_greeks.hpp"
#include "diffgreeks/sdbs.hpp"

namespace diffgreeks {

using nlohmann::json;

double rerror(double exact, double estimate) {
  if (exact == 0.0) throw ZeroReferenceError("rerror: the exact value is zero");
  return std::abs(exact - estimate) / std::abs(exact);
}

std::string format_number(double v) {
  char buf[40];
  std::snprintf(buf, sizeof buf, "%.12g", v);
  return buf;
}

namespace {

using Clock = std::chrono::steady_clock;

std::string indexed(const char* name, Eigen::Index i) { return std::string(name) + "_" + std::to_string(i + 1); }

void add(std::vector<ReportRow>& rows, std::string q, double v, std::optional<double> se = std::nullopt) {
  ReportRow r;
  r.quantity = std::move(q);
  r.estimate = v;
  r.std_err = se;
  rows.push_back(std::move(r));
}

std::vector<ReportRow> run_closed_form(const ExperimentConfig& cfg) {
  const MarketParams& m = cfg.market;
  const MargrabeInputs in{m.s0[0], m.s0[1], m.sigma[0], m.sigma[1], m.corr(0, 1), m.T};
  const MargrabeGreeks g = margrabe_greeks(in);
  std::vector<ReportRow> rows;
  add(rows, "price", margrabe_price(in));
  add(rows, "delta_1", g.delta);
  add(rows, "gamma_1", g.gamma);
  add(rows, "theta", g.theta);
  return rows;
}

std::vector<ReportRow> run_mc(const ExperimentConfig& cfg) {
  const GreeksReport g = estimate_greeks(cfg.option, cfg.market, cfg.mc.paths, cfg.mc.seed);
  std::vector<ReportRow> rows;
  add(rows, "price", g.price, g.price_se);
  for (Eigen::Index i = 0; i < g.delta.size(); ++i) add(rows, indexed("delta", i), g.delta[i], g.delta_se[i]);
  for (Eigen::Index i = 0; i < g.gamma.size(); ++i) add(rows, indexed("gamma", i), g.gamma[i], g.gamma_se[i]);
  add(rows, "theta", g.theta, g.theta_se);
  if (cfg.mc.bump_gamma) {
    const BumpGamma b = bump_gamma(cfg.option, cfg.market, cfg.mc.paths, cfg.mc.seed);
    for (Eigen::Index i = 0; i < b.gamma.size(); ++i)
      add(rows, indexed("gamma", i) + "_bump", b.gamma[i], b.std_err[i]);
  }
  return rows;
}

std::vector<ReportRow> run_fdm(const ExperimentConfig& cfg) {
  const FdmGrid grid = FdmGrid::uniform(2, cfg.fdm.s_max, cfg.fdm.m_s, cfg.fdm.m_t, cfg.market.T);
  const FdmSolution sol = solve(cfg.option, cfg.market, grid, cfg.fdm.mode);
  const FdmGreeks g = fdm_greeks(sol.u0, sol.u1, grid, cfg.market.s0);
  const auto node = interior_node(grid, cfg.market.s0);
  std::vector<ReportRow> rows;
  add(rows, "price", sol.u0.at(node));
  for (Eigen::Index i = 0; i < 2; ++i) add(rows, indexed("delta", i), g.delta[i]);
  for (Eigen::Index i = 0; i < 2; ++i) add(rows, indexed("gamma", i), g.gamma[i]);
  add(rows, "theta", g.theta);
  add(rows, "cfl", sol.cfl);
  return rows;
}

std::vector<ReportRow> run_sdbs(const ExperimentConfig& cfg) {
  const TrainResult tr = train(cfg.option, cfg.market, cfg.sdbs.train);
  const GreeksReport g = estimate(tr.best, cfg.option, cfg.market, cfg.sdbs.repeats, cfg.sdbs.train.seed);
  std::vector<ReportRow> rows;
  add(rows, "price", g.price);
  for (Eigen::Index i = 0; i < g.delta.size(); ++i) add(rows, indexed("delta", i), g.delta[i]);
  for (Eigen::Index i = 0; i < g.gamma.size(); ++i) add(rows, indexed("gamma", i), g.gamma[i]);
  add(rows, "theta", g.theta);
  add(rows, "best_loss", tr.best_loss);
  return rows;
}

}  // namespace

std::vector<ReportRow> run_experiment(const ExperimentConfig& cfg) {
  cfg.validate();
  const auto t0 = Clock::now();
  std::vector<ReportRow> rows;
  try {
    switch (cfg.engine) {
      case Engine::ClosedForm: rows = run_closed_form(cfg); break;
      case Engine::Mc: rows = run_mc(cfg); break;
      case Engine::Fdm: rows = run_fdm(cfg); break;
      case Engine::Sdbs: rows = run_sdbs(cfg); break;
    }
  } catch (const Error& e) {
    throw ConfigError(cfg.origin + ": " + std::string(to_string(cfg.engine)) + " engine failed: " + e.what());
  }
  const double ms = std::chrono::duration<double, std::milli>(Clock::now() - t0).count();
  for (ReportRow& r : rows) {
    r.runtime_ms = ms;
    const auto it = cfg.reference.find(r.quantity);
    if (it == cfg.reference.end()) continue;
    r.reference = it->second.value;
    r.provenance = it->second.source;
    if (it->second.value != 0.0) r.rerror = rerror(it->second.value, r.estimate);
  }
  return rows;
}

// ---------------------------------------------------------------------------
// Suites

json load_reference_values(const std::string& data_dir) {
  const std::string path = data_dir + "/reference_values.json";
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open reference data '" + path + "'");
  try {
    return json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
}

const std::vector<std::string>& suite_names() {
  static const std::vector<std::string> names{"table3", "table4_desk", "table5", "table6", "table8_desk",
                                              "activation_desk"};
  return names;
}

namespace {

constexpr std::size_t kDeskPaths = 1'000'000;
constexpr std::size_t kDeskEpochs = 5000;

ExperimentConfig base(std::string label, Engine engine, MarketParams m, OptionSpec o) {
  ExperimentConfig c;
  c.label = std::move(label);
  c.origin = "suite:" + c.label;
  c.engine = engine;
  c.market = std::move(m);
  c.option = std::move(o);
  return c;
}

void margrabe_reference(ExperimentConfig& c) {
  const MarketParams& m = c.market;
  const MargrabeInputs in{m.s0[0], m.s0[1], m.sigma[0], m.sigma[1], m.corr(0, 1), m.T};
  const MargrabeGreeks g = margrabe_greeks(in);
  const std::string tag = "derived:margrabe";
  c.reference["price"] = {margrabe_price(in), tag};
  c.reference["delta_1"] = {g.delta, tag};
  c.reference["gamma_1"] = {g.gamma, tag};
  c.reference["theta"] = {g.theta, tag};
}

void column_reference(ExperimentConfig& c, const json& table, const std::string& column) {
  const json& col = table.at("columns").at(column);
  const std::string tag = table.at("source").get<std::string>() + " " + column;
  c.reference["price"] = {col.at("price").get<double>(), tag};
  c.reference["delta_1"] = {col.at("delta").get<double>(), tag};
  c.reference["gamma_1"] = {col.at("gamma").get<double>(), tag};
  c.reference["theta"] = {col.at("theta").get<double>(), tag};
}

ExperimentConfig mc_exchange(std::string label, MarketParams m, std::size_t paths) {
  ExperimentConfig c = base(std::move(label), Engine::Mc, std::move(m), OptionSpec::exchange());
  c.mc.paths = paths;
  c.mc.seed = 1;
  margrabe_reference(c);
  return c;
}

ExperimentConfig fdm_exchange(std::string label, std::size_t m_s, std::size_t m_t) {
  ExperimentConfig c = base(std::move(label), Engine::Fdm, exchange_market(), OptionSpec::exchange());
  c.fdm.s_max = 300.0;
  c.fdm.m_s = m_s;
  c.fdm.m_t = m_t;
  return c;
}

ExperimentConfig sdbs_desk(std::string label, std::uint64_t seed) {
  ExperimentConfig c = base(std::move(label), Engine::Sdbs, exchange_market(), OptionSpec::exchange());
  TrainConfig& t = c.sdbs.train;
  t.steps = 50;
  t.batch = 1000;
  t.n_epoch = kDeskEpochs;
  t.seed = seed;
  margrabe_reference(c);
  return c;
}

std::string sci(double v) {
  char buf[16];
  std::snprintf(buf, sizeof buf, "%.0e", v);
  return buf;
}

std::vector<ExperimentConfig> declare(const std::string& name, const BenchOptions& opts) {
  std::vector<ExperimentConfig> out;
  if (name == "table3") {
    const json refs = load_reference_values(opts.data_dir);
    const json& t3 = refs.at("table3");
    ExperimentConfig exact = base("exact", Engine::ClosedForm, exchange_market(), OptionSpec::exchange());
    column_reference(exact, t3, "exact");
    out.push_back(exact);
    out.push_back(mc_exchange("mc_1e6", exchange_market(), kDeskPaths));
    ExperimentConfig f1 = fdm_exchange("fdm1", 100, 5000);
    column_reference(f1, t3, "fdm1");
    out.push_back(f1);
    if (opts.full) {
      ExperimentConfig f2 = fdm_exchange("fdm2", 300, 50000);
      column_reference(f2, t3, "fdm2");
      out.push_back(f2);
      out.push_back(mc_exchange("mc_1e7", exchange_market(), 10'000'000));
    }
  } else if (name == "table4_desk") {
    for (std::uint64_t seed = 1; seed <= 3; ++seed) out.push_back(sdbs_desk("sdbs_seed" + std::to_string(seed), seed));
  } else if (name == "table5") {
    const std::pair<double, double> pairs[] = {{20, 60}, {40, 60}, {60, 60}, {60, 40}, {60, 20}};
    for (const auto& [s1, s2] : pairs) {
      const std::string tag = std::to_string(static_cast<int>(s1)) + "_" + std::to_string(static_cast<int>(s2));
      out.push_back(mc_exchange("mc_1e6_" + tag, exchange_market(s1, s2), kDeskPaths));
      if (opts.full) {
        ExperimentConfig f2 = fdm_exchange("fdm2_" + tag, 300, 50000);
        f2.market = exchange_market(s1, s2);
        margrabe_reference(f2);
        out.push_back(f2);
      }
    }
  } else if (name == "table6") {
    const json refs = load_reference_values(opts.data_dir);
    const json& t6 = refs.at("table6");
    const std::string src = t6.at("source").get<std::string>() + " MC";
    for (const json& row : t6.at("rows")) {
      const auto sv = row.at("sigma").get<std::vector<double>>();
      const double K = row.at("K").get<double>();
      const Eigen::VectorXd sigma = Eigen::Map<const Eigen::VectorXd>(sv.data(), 4);
      std::string label = "mc_1e6_sigma";
      for (double s : sv) label += "_" + format_number(s);
      label += "_K" + format_number(K);
      ExperimentConfig c =
          base(label, Engine::Mc, basket_market(sigma), OptionSpec::basket(Eigen::Vector4d::Constant(0.25), K));
      c.mc.paths = kDeskPaths;
      c.mc.seed = 1;
      c.mc.bump_gamma = false;
      c.reference["price"] = {row.at("MC").get<double>(), src};
      out.push_back(c);
    }
  } else if (name == "table8_desk") {
    for (double w : {1e-3, 1e-2, 1e-1, 1.0, 1e1, 1e2, 1e3}) {
      ExperimentConfig c = sdbs_desk("sdbs_w" + sci(w), 1);
      c.sdbs.train.w = w;
      out.push_back(c);
    }
  } else if (name == "activation_desk") {
    for (ActivationKind k : {ActivationKind::Sigmoid, ActivationKind::Tanh, ActivationKind::Sin, ActivationKind::Relu,
                             ActivationKind::Elu, ActivationKind::Selu, ActivationKind::Softplus}) {
      ExperimentConfig c = sdbs_desk("sdbs_" + std::string(to_string(k)), 1);
      c.sdbs.train.activation = k;
      out.push_back(c);
    }
  } else {
    std::string valid;
    for (const auto& n : suite_names()) valid += (valid.empty() ? "" : ", ") + n;
    throw UsageError("unknown suite '" + name + "' (valid: " + valid + ")");
  }
  return out;
}

}  // namespace

std::vector<ExperimentConfig> suite_configs(const std::string& name, const BenchOptions& opts) {
  std::vector<ExperimentConfig> cfgs = declare(name, opts);
  for (ExperimentConfig& c : cfgs) {
    if (opts.max_paths && c.engine == Engine::Mc) c.mc.paths = std::min(c.mc.paths, *opts.max_paths);
    if (opts.max_epochs && c.engine == Engine::Sdbs)
      c.sdbs.train.n_epoch = std::min(c.sdbs.train.n_epoch, *opts.max_epochs);
  }
  return cfgs;
}

std::vector<ReportRow> bench_suite(const std::string& name, const BenchOptions& opts) {
  const std::vector<ExperimentConfig> cfgs = suite_configs(name, opts);

  auto run_one = [&](const ExperimentConfig& c) {
    std::vector<ReportRow> rows;
    try {
      rows = run_experiment(c);
    } catch (const Error& e) {
      ReportRow r;
      r.quantity = "error";
      r.estimate = std::nan("");
      r.provenance = std::string("FAILED: ") + e.what();
      r.failed = true;
      rows.push_back(r);
    }
    for (ReportRow& r : rows) {
      r.suite = name;
      r.quantity = c.label + "." + r.quantity;
      if (!opts.timing) r.runtime_ms = 0.0;
    }
    return rows;
  };

  std::vector<std::vector<ReportRow>> results(cfgs.size());
  const std::size_t jobs = std::max<std::size_t>(1, opts.jobs);
  for (std::size_t start = 0; start < cfgs.size(); start += jobs) {
    const std::size_t stop = std::min(cfgs.size(), start + jobs);
    if (jobs == 1) {
      results[start] = run_one(cfgs[start]);
      continue;
    }
    std::vector<std::future<std::vector<ReportRow>>> wave;
    for (std::size_t i = start; i < stop; ++i)
      wave.push_back(std::async(std::launch::async, run_one, std::cref(cfgs[i])));
    for (std::size_t i = start; i < stop; ++i) results[i] = wave[i - start].get();
  }

  std::vector<ReportRow> rows;
  for (auto& part : results) rows.insert(rows.end(), part.begin(), part.end());
  return rows;
}

namespace {

std::string csv_field(const std::string& s) {
  if (s.find_first_of(",\"\n") == std::string::npos) return s;
  std::string q = "\"";
  for (char c : s) q += (c == '"') ? std::string("\"\"") : std::string(1, c);
  return q + "\"";
}

std::string opt_number(const std::optional<double>& v) { return v ? format_number(*v) : std::string(); }

}  // namespace

void write_csv(std::ostream& out, const std::vector<ReportRow>& rows) {
  out << "suite,quantity,estimate,reference,rerror,std_err,runtime_ms,provenance\n";
  for (const ReportRow& r : rows) {
    out << csv_field(r.suite) << ',' << csv_field(r.quantity) << ',' << (r.failed ? "" : format_number(r.estimate))
        << ',' << opt_number(r.reference) << ',' << opt_number(r.rerror) << ',' << opt_number(r.std_err) << ','
        << format_number(std::round(r.runtime_ms)) << ',' << csv_field(r.provenance) << '\n';
  }
}

json report_json(const std::vector<ReportRow>& rows) {
  json arr = json::array();
  for (const ReportRow& r : rows) {
    json j{{"suite", r.suite},
           {"quantity", r.quantity},
           {"runtime_ms", std::round(r.runtime_ms)},
           {"provenance", r.provenance},
           {"failed", r.failed}};
    j["estimate"] = r.failed ? json(nullptr) : json(r.estimate);
    j["reference"] = r.reference ? json(*r.reference) : json(nullptr);
    j["rerror"] = r.rerror ? json(*r.rerror) : json(nullptr);
    j["std_err"] = r.std_err ? json(*r.std_err) : json(nullptr);
    arr.push_back(j);
  }
  return arr;
}

}  // namespace diffgreeks
