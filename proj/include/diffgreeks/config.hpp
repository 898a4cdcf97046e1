#pragma once

#include <cstddef>
#include <cstdint>
#include <map>
#include <optional>
#include <string>

#include "json.hpp"

#include "diffgreeks/fdm.hpp"
#include "diffgreeks/market.hpp"
#include "diffgreeks/payoff.hpp"
#include "diffgreeks/sdbs.hpp"

namespace diffgreeks {

enum class Engine { ClosedForm, Mc, Fdm, Sdbs };

std::string_view to_string(Engine e) noexcept;

struct McBlock {
  std::size_t paths = 1'000'000;
  std::uint64_t seed = 1;
  bool bump_gamma = true;  // also report the bump-and-revalue gamma
};

struct FdmBlock {
  double s_max = 300.0;
  std::size_t m_s = 100;
  std::size_t m_t = 5000;
  StabilityMode mode = StabilityMode::Permissive;
};

struct SdbsBlock {
  TrainConfig train;
  std::size_t repeats = 1;
};

struct ReferenceValue {
  double value = 0.0;
  std::string source;  // table / oracle tag, never empty
};

/// One runnable experiment. Market keys sit at the top level (r, sigma, corr,
/// s0, T, N, batch, seed), the payoff under "option", and exactly one engine
/// block: "closed_form", "mc", "fdm" or "sdbs".
struct ExperimentConfig {
  std::string label;
  std::string origin = "<inline>";  // file the config came from, for error messages
  Engine engine = Engine::ClosedForm;
  MarketParams market;
  OptionSpec option;
  McBlock mc;
  FdmBlock fdm;
  SdbsBlock sdbs;
  std::map<std::string, ReferenceValue> reference;  // keyed by quantity name

  void validate() const;
};

ExperimentConfig parse_config(const nlohmann::json& j, const std::string& origin = "<inline>");
ExperimentConfig load_config(const std::string& path);
nlohmann::json to_json(const ExperimentConfig& cfg);

/// FNV-1a over the canonical JSON dump.
std::uint64_t fnv1a(std::string_view bytes) noexcept;
std::uint64_t config_hash(const ExperimentConfig& cfg);

/// The two-asset exchange market used throughout the experiments:
/// S(0) = (60, 60), sigma = (0.4, 0.2), rho = 0.4, r = 0.1, T = 1.
MarketParams exchange_market(double s1 = 60.0, double s2 = 60.0);

/// Four independent assets (40, 50, 60, 70), r = 0.06, T = 0.5.
MarketParams basket_market(const Eigen::VectorXd& sigma);

}  // namespace diffgreeks
