#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "geoprobe/attack.hpp"
#include "geoprobe/reference_classifier.hpp"

namespace geoprobe {

struct TrainingSettings {
  std::size_t embed_dim = 6;
  std::size_t hidden_dim = 16;
  std::size_t epochs = 30;
  std::size_t batch_size = 32;
  double learning_rate = 0.5;
  double embedding_init = 0.5;
};

/// Everything a command needs. Mirrors the config file key-for-key; flags are
/// the kebab-case spelling of the same keys.
struct RunConfig {
  // Model source: exactly one of these for `attack`. `train` writes to
  // `checkpoint` (default: <output_dir>/reference.ckpt).
  std::optional<std::filesystem::path> checkpoint;
  std::optional<std::string> endpoint;

  std::optional<std::filesystem::path> train_dataset;  // JSONL `train` fits on
  std::optional<std::filesystem::path> dataset;        // JSONL `attack` works on; `train` reports clean accuracy on it
  std::optional<std::filesystem::path> manifest;
  std::optional<std::filesystem::path> vocab;            // train: one token per line
  std::optional<std::filesystem::path> embedding_table;  // unset: the model's own table

  double epsilon = AttackConfig{}.epsilon;
  std::size_t pool_size = AttackConfig{}.pool_size;
  std::size_t max_cycles = AttackConfig{}.max_cycles;
  double budget = AttackConfig{}.budget_fraction;
  bool require_loss_increase = true;

  std::filesystem::path output_dir = "out";
  std::uint64_t seed = 1;
  std::size_t workers = 0;  // 0: available cores
  double timeout_seconds = 30.0;
  std::vector<std::string> tags;  // free-form run labels, echoed into reports
  TrainingSettings training;

  AttackConfig attack_config() const;
  TrainConfig train_config() const;
  std::size_t resolved_workers() const;
  /// The reproducibility-relevant subset echoed into reports. Paths and the
  /// worker count are left out so reruns from another directory match.
  nlohmann::json echo() const;
};

/// Overlays the keys present in `doc` onto `config`. Throws InvalidConfig
/// naming the key on unknown keys or wrong types.
void apply_config_json(RunConfig& config, const nlohmann::json& doc);

/// Defaults, then the config file (if any), then `overrides` (flag values
/// keyed by config key).
RunConfig resolve_config(const std::optional<std::filesystem::path>& config_file,
                         const nlohmann::json& overrides);

nlohmann::json config_to_json(const RunConfig& config);

}  // namespace geoprobe
