#pragma once

#include <cstdint>
#include <optional>
#include <string>

#include "json.hpp"

#include "diffgreeks/config.hpp"
#include "diffgreeks/network.hpp"

namespace diffgreeks {

/// A trained network plus the experiment it came from. Weights are stored
/// row-major per layer as JSON numbers in shortest round-trip form, so a
/// save/load cycle reproduces every parameter bit for bit.
struct Checkpoint {
  Network net;
  std::optional<ExperimentConfig> config;
  std::uint64_t config_hash = 0;
  std::size_t best_epoch = 0;
  double best_loss = 0.0;
};

nlohmann::json to_json(const Checkpoint& ckpt);
Checkpoint checkpoint_from_json(const nlohmann::json& j, const std::string& origin = "<inline>");

void save_checkpoint(const Checkpoint& ckpt, const std::string& path);
Checkpoint load_checkpoint(const std::string& path);

}  // namespace diffgreeks
