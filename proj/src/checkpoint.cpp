#include "diffgreeks/checkpoint.hpp"

#include <cstdio>
#include <fstream>

#include "diffgreeks/errors.hpp"

namespace diffgreeks {

using nlohmann::json;

namespace {

constexpr const char* kFormat = "diffgreeks-checkpoint";
constexpr int kVersion = 1;

std::string hex64(std::uint64_t v) {
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(v));
  return buf;
}

}  // namespace

json to_json(const Checkpoint& ckpt) {
  const Network& net = ckpt.net;
  json layers = json::array();
  for (std::size_t l = 0; l < net.layers(); ++l) {
    const auto W = net.weight(l);
    const auto b = net.bias(l);
    layers.push_back({{"weight", std::vector<double>(W.data(), W.data() + W.size())},
                      {"bias", std::vector<double>(b.data(), b.data() + b.size())}});
  }
  json j{{"format", kFormat},
         {"version", kVersion},
         {"widths", net.widths()},
         {"activation", std::string(to_string(net.activation().kind))},
         {"layers", layers},
         {"config_hash", hex64(ckpt.config_hash)},
         {"best_epoch", ckpt.best_epoch},
         {"best_loss", ckpt.best_loss}};
  if (ckpt.config) j["config"] = to_json(*ckpt.config);
  return j;
}

Checkpoint checkpoint_from_json(const json& j, const std::string& origin) {
  try {
    if (j.value("format", std::string{}) != kFormat) throw ConfigError("not a diffgreeks checkpoint");
    if (j.at("version").get<int>() != kVersion) throw ConfigError("unsupported checkpoint version");
    const auto widths = j.at("widths").get<std::vector<std::size_t>>();
    if (widths.size() < 2) throw ConfigError("checkpoint needs at least two widths");
    Network net(widths, Activation::make(activation_from_string(j.at("activation").get<std::string>())));
    const json& layers = j.at("layers");
    if (layers.size() != net.layers()) throw ConfigError("layer count does not match widths");
    for (std::size_t l = 0; l < net.layers(); ++l) {
      const auto w = layers[l].at("weight").get<std::vector<double>>();
      const auto b = layers[l].at("bias").get<std::vector<double>>();
      auto W = net.weight(l);
      auto B = net.bias(l);
      if (w.size() != static_cast<std::size_t>(W.size()) || b.size() != static_cast<std::size_t>(B.size()))
        throw ConfigError("layer " + std::to_string(l) + " has the wrong shape");
      std::copy(w.begin(), w.end(), W.data());
      std::copy(b.begin(), b.end(), B.data());
    }
    Checkpoint c;
    c.net = std::move(net);
    c.config_hash = std::stoull(j.at("config_hash").get<std::string>(), nullptr, 16);
    c.best_epoch = j.value("best_epoch", std::size_t{0});
    c.best_loss = j.value("best_loss", 0.0);
    if (j.contains("config")) c.config = parse_config(j.at("config"), origin + ":config");
    if (c.config && config_hash(*c.config) != c.config_hash)
      throw ConfigError("config hash does not match the embedded config");
    return c;
  } catch (const json::exception& e) {
    throw ConfigError(origin + ": malformed checkpoint (" + e.what() + ")");
  } catch (const ConfigError& e) {
    throw ConfigError(origin + ": " + e.what());
  }
}

void save_checkpoint(const Checkpoint& ckpt, const std::string& path) {
  std::ofstream out(path);
  if (!out) throw ConfigError("cannot write checkpoint '" + path + "'");
  out << to_json(ckpt).dump(1) << '\n';
  if (!out) throw ConfigError("failed writing checkpoint '" + path + "'");
}

Checkpoint load_checkpoint(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw ConfigError("cannot open checkpoint '" + path + "'");
  json j;
  try {
    j = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ConfigError(path + ": " + e.what());
  }
  return checkpoint_from_json(j, path);
}

}  // namespace diffgreeks
