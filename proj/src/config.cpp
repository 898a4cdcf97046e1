#include "diffgreeks/config.hpp"

#include <fstream>

#include "diffgreeks/errors.hpp"

namespace diffgreeks {

using nlohmann::json;

std::string_view to_string(Engine e) noexcept {
  switch (e) {
    case Engine::ClosedForm: return "closed_form";
    case Engine::Mc: return "mc";
    case Engine::Fdm: return "fdm";
    case Engine::Sdbs: return "sdbs";
  }
  return "unknown";
}

namespace {

struct Reader {
  const std::string& origin;

  [[noreturn]] void fail(const std::string& what) const { throw ConfigError(origin + ": " + what); }

  const json& need(const json& obj, const std::string& key, const std::string& path) const {
    if (!obj.is_object() || !obj.contains(key)) fail("missing key '" + path + "'");
    return obj.at(key);
  }

  template <class T>
  T as(const json& v, const std::string& path) const {
    try {
      return v.get<T>();
    } catch (const json::exception&) {
      fail("key '" + path + "' has the wrong type");
    }
  }

  template <class T>
  T get(const json& obj, const std::string& key, const std::string& path) const {
    return as<T>(need(obj, key, path), path);
  }

  template <class T>
  T get_or(const json& obj, const std::string& key, const std::string& path, T fallback) const {
    if (!obj.contains(key)) return fallback;
    return as<T>(obj.at(key), path);
  }

  Eigen::VectorXd vec(const json& obj, const std::string& key, const std::string& path) const {
    const auto v = get<std::vector<double>>(obj, key, path);
    return Eigen::Map<const Eigen::VectorXd>(v.data(), static_cast<Eigen::Index>(v.size()));
  }

  Eigen::MatrixXd mat(const json& obj, const std::string& key, const std::string& path) const {
    const auto rows = get<std::vector<std::vector<double>>>(obj, key, path);
    const auto n = static_cast<Eigen::Index>(rows.size());
    Eigen::MatrixXd m(n, n);
    for (Eigen::Index i = 0; i < n; ++i) {
      if (static_cast<Eigen::Index>(rows[static_cast<std::size_t>(i)].size()) != n)
        fail("key '" + path + "' must be a square matrix");
      for (Eigen::Index j = 0; j < n; ++j) m(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
    return m;
  }
};

json vec_json(const Eigen::VectorXd& v) { return std::vector<double>(v.data(), v.data() + v.size()); }

json mat_json(const Eigen::MatrixXd& m) {
  json rows = json::array();
  for (Eigen::Index i = 0; i < m.rows(); ++i) {
    std::vector<double> r(static_cast<std::size_t>(m.cols()));
    for (Eigen::Index j = 0; j < m.cols(); ++j) r[static_cast<std::size_t>(j)] = m(i, j);
    rows.push_back(r);
  }
  return rows;
}

StabilityMode stability_from_string(const Reader& rd, const std::string& s) {
  if (s == "strict") return StabilityMode::Strict;
  if (s == "permissive") return StabilityMode::Permissive;
  rd.fail("fdm.stability must be 'strict' or 'permissive'");
}

}  // namespace

void ExperimentConfig::validate() const {
  try {
    market.validate();
    option.validate();
    option.check_dimension(market.n());
    if (engine == Engine::ClosedForm && option.kind != OptionKind::Exchange)
      throw ConfigError("the closed_form engine prices exchange options only");
    if (engine == Engine::Mc && mc.paths < 2) throw ConfigError("mc.paths must be at least 2");
    if (engine == Engine::Fdm) {
      if (market.n() != 2) throw ConfigError("the fdm engine handles two assets");
      FdmGrid::uniform(market.n(), fdm.s_max, fdm.m_s, fdm.m_t, market.T).validate();
    }
    if (engine == Engine::Sdbs) {
      sdbs.train.validate();
      if (sdbs.repeats < 1) throw ConfigError("sdbs.repeats must be at least 1");
    }
    for (const auto& [k, v] : reference)
      if (v.source.empty()) throw ConfigError("reference '" + k + "' carries no source tag");
  } catch (const Error& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

ExperimentConfig parse_config(const json& j, const std::string& origin) {
  const Reader rd{origin};
  if (!j.is_object()) rd.fail("top level must be an object");
  ExperimentConfig cfg;
  cfg.origin = origin;
  cfg.label = rd.get_or<std::string>(j, "label", "label", "");

  MarketParams& m = cfg.market;
  m.r = rd.get<double>(j, "r", "r");
  m.sigma = rd.vec(j, "sigma", "sigma");
  m.s0 = rd.vec(j, "s0", "s0");
  m.T = rd.get<double>(j, "T", "T");
  if (j.contains("corr")) {
    m.corr = rd.mat(j, "corr", "corr");
  } else if (m.s0.size() == 1) {
    m.corr = Eigen::MatrixXd::Identity(1, 1);
  } else {
    rd.fail("missing key 'corr'");
  }
  const auto steps = rd.get_or<std::size_t>(j, "N", "N", 0);
  const auto batch = rd.get_or<std::size_t>(j, "batch", "batch", 0);
  const auto seed = rd.get_or<std::uint64_t>(j, "seed", "seed", 1);

  const json& opt = rd.need(j, "option", "option");
  cfg.option.kind = [&] {
    const auto kind = rd.get<std::string>(opt, "kind", "option.kind");
    try {
      return option_kind_from_string(kind);
    } catch (const Error& e) {
      rd.fail(std::string("option.kind: ") + e.what());
    }
  }();
  if (cfg.option.kind == OptionKind::Basket) {
    cfg.option.weights = rd.vec(opt, "weights", "option.weights");
    cfg.option.strike = rd.get<double>(opt, "strike", "option.strike");
  }

  int blocks = 0;
  for (const char* name : {"closed_form", "mc", "fdm", "sdbs"}) blocks += j.contains(name) ? 1 : 0;
  if (blocks != 1) rd.fail("exactly one engine block (closed_form, mc, fdm, sdbs) is required");

  if (j.contains("closed_form")) {
    cfg.engine = Engine::ClosedForm;
  } else if (j.contains("mc")) {
    cfg.engine = Engine::Mc;
    const json& b = j.at("mc");
    cfg.mc.paths = rd.get_or<std::size_t>(b, "paths", "mc.paths", cfg.mc.paths);
    cfg.mc.seed = rd.get_or<std::uint64_t>(b, "seed", "mc.seed", seed);
    cfg.mc.bump_gamma = rd.get_or<bool>(b, "bump_gamma", "mc.bump_gamma", cfg.mc.bump_gamma);
  } else if (j.contains("fdm")) {
    cfg.engine = Engine::Fdm;
    const json& b = j.at("fdm");
    cfg.fdm.s_max = rd.get_or<double>(b, "s_max", "fdm.s_max", cfg.fdm.s_max);
    cfg.fdm.m_s = rd.get_or<std::size_t>(b, "m_s", "fdm.m_s", cfg.fdm.m_s);
    cfg.fdm.m_t = rd.get_or<std::size_t>(b, "m_t", "fdm.m_t", cfg.fdm.m_t);
    if (b.contains("stability"))
      cfg.fdm.mode = stability_from_string(rd, rd.get<std::string>(b, "stability", "fdm.stability"));
  } else {
    cfg.engine = Engine::Sdbs;
    const json& b = j.at("sdbs");
    TrainConfig& t = cfg.sdbs.train;
    t.steps = steps ? steps : t.steps;
    t.batch = batch ? batch : t.batch;
    t.seed = seed;
    t.n_epoch = rd.get_or<std::size_t>(b, "nEpoch", "sdbs.nEpoch", t.n_epoch);
    t.w = rd.get_or<double>(b, "w", "sdbs.w", t.w);
    if (b.contains("w_T")) t.w_T = rd.get<double>(b, "w_T", "sdbs.w_T");
    t.lr_start = rd.get_or<double>(b, "lr_start", "sdbs.lr_start", t.lr_start);
    t.lr_end = rd.get_or<double>(b, "lr_end", "sdbs.lr_end", t.lr_end);
    t.adam_beta1 = rd.get_or<double>(b, "adam_beta1", "sdbs.adam_beta1", t.adam_beta1);
    t.adam_beta2 = rd.get_or<double>(b, "adam_beta2", "sdbs.adam_beta2", t.adam_beta2);
    t.adam_eps = rd.get_or<double>(b, "adam_eps", "sdbs.adam_eps", t.adam_eps);
    t.stop_gradient_target =
        rd.get_or<bool>(b, "stop_gradient_target", "sdbs.stop_gradient_target", t.stop_gradient_target);
    t.strict_smoothness = rd.get_or<bool>(b, "strict_smoothness", "sdbs.strict_smoothness", t.strict_smoothness);
    if (b.contains("activation")) {
      try {
        t.activation = activation_from_string(rd.get<std::string>(b, "activation", "sdbs.activation"));
      } catch (const ConfigError& e) {
        rd.fail(std::string("sdbs.activation: ") + e.what());
      }
    }
    t.hidden = rd.get_or<std::vector<std::size_t>>(b, "hidden", "sdbs.hidden", t.hidden);
    t.chunk_paths = rd.get_or<std::size_t>(b, "chunk_paths", "sdbs.chunk_paths", t.chunk_paths);
    cfg.sdbs.repeats = rd.get_or<std::size_t>(b, "repeats", "sdbs.repeats", cfg.sdbs.repeats);
  }

  if (j.contains("reference")) {
    const json& refs = j.at("reference");
    if (!refs.is_object()) rd.fail("key 'reference' must be an object");
    for (const auto& [k, v] : refs.items()) {
      const std::string path = "reference." + k;
      cfg.reference[k] = ReferenceValue{rd.get<double>(v, "value", path + ".value"),
                                        rd.get<std::string>(v, "source", path + ".source")};
    }
  }
  cfg.validate();
  return cfg;
}

ExperimentConfig load_config(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open config '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return parse_config(j, path);
}

json to_json(const ExperimentConfig& cfg) {
  json j;
  if (!cfg.label.empty()) j["label"] = cfg.label;
  j["r"] = cfg.market.r;
  j["sigma"] = vec_json(cfg.market.sigma);
  j["corr"] = mat_json(cfg.market.corr);
  j["s0"] = vec_json(cfg.market.s0);
  j["T"] = cfg.market.T;
  json opt{{"kind", std::string(to_string(cfg.option.kind))}};
  if (cfg.option.kind == OptionKind::Basket) {
    opt["weights"] = vec_json(cfg.option.weights);
    opt["strike"] = cfg.option.strike;
  }
  j["option"] = opt;
  switch (cfg.engine) {
    case Engine::ClosedForm:
      j["closed_form"] = json::object();
      break;
    case Engine::Mc:
      j["seed"] = cfg.mc.seed;
      j["mc"] = {{"paths", cfg.mc.paths}, {"seed", cfg.mc.seed}, {"bump_gamma", cfg.mc.bump_gamma}};
      break;
    case Engine::Fdm:
      j["fdm"] = {{"s_max", cfg.fdm.s_max},
                  {"m_s", cfg.fdm.m_s},
                  {"m_t", cfg.fdm.m_t},
                  {"stability", cfg.fdm.mode == StabilityMode::Strict ? "strict" : "permissive"}};
      break;
    case Engine::Sdbs: {
      const TrainConfig& t = cfg.sdbs.train;
      j["N"] = t.steps;
      j["batch"] = t.batch;
      j["seed"] = t.seed;
      json b{{"nEpoch", t.n_epoch},
             {"w", t.w},
             {"lr_start", t.lr_start},
             {"lr_end", t.lr_end},
             {"adam_beta1", t.adam_beta1},
             {"adam_beta2", t.adam_beta2},
             {"adam_eps", t.adam_eps},
             {"stop_gradient_target", t.stop_gradient_target},
             {"strict_smoothness", t.strict_smoothness},
             {"activation", std::string(to_string(t.activation))},
             {"hidden", t.hidden},
             {"chunk_paths", t.chunk_paths},
             {"repeats", cfg.sdbs.repeats}};
      if (t.w_T) b["w_T"] = *t.w_T;
      j["sdbs"] = b;
      break;
    }
  }
  if (!cfg.reference.empty()) {
    json refs = json::object();
    for (const auto& [k, v] : cfg.reference) refs[k] = {{"value", v.value}, {"source", v.source}};
    j["reference"] = refs;
  }
  return j;
}

std::uint64_t fnv1a(std::string_view bytes) noexcept {
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char c : bytes) {
    h ^= c;
    h *= 0x100000001b3ULL;
  }
  return h;
}

std::uint64_t config_hash(const ExperimentConfig& cfg) {
  json j = to_json(cfg);
  j.erase("label");
  j.erase("reference");
  return fnv1a(j.dump());  // object keys are sorted, so the dump is canonical
}

MarketParams exchange_market(double s1, double s2) {
  MarketParams p;
  p.r = 0.1;
  p.T = 1.0;
  p.sigma = Eigen::Vector2d(0.4, 0.2);
  p.corr = Eigen::Matrix2d{{1.0, 0.4}, {0.4, 1.0}};
  p.s0 = Eigen::Vector2d(s1, s2);
  return p;
}

MarketParams basket_market(const Eigen::VectorXd& sigma) {
  MarketParams p;
  p.r = 0.06;
  p.T = 0.5;
  p.sigma = sigma;
  p.corr = Eigen::MatrixXd::Identity(4, 4);
  p.s0 = Eigen::Vector4d(40.0, 50.0, 60.0, 70.0);
  return p;
}

}  // namespace diffgreeks
