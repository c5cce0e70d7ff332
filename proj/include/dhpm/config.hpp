#pragma once

#include <cstdint>
#include <filesystem>
#include <optional>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhpm/rd_oracle.hpp"
#include "dhpm/scenario.hpp"

namespace dhpm {

struct ScheduleSegment {
  int epochs = 0;
  double learning_rate = 0.0;
  bool operator==(const ScheduleSegment&) const = default;
};

struct AdamConfig {
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;
  bool operator==(const AdamConfig&) const = default;
};

/// Everything that determines a dataset and a training run.
///
/// n_fun counts input functions per training configuration: InputGen has a
/// single configuration, ParamGen one per (D, K) in param_grid, DomainGen one
/// per entry of lengths.
struct TrainConfig {
  Scenario scenario;
  int n_fun = 50;
  int n_data = 500;
  int n_colloc = 1000;
  std::vector<ScheduleSegment> schedule{{300, 1e-3}};
  std::uint64_t seed = 7;
  AdamConfig adam;

  PdeParams pde;                       // InputGen and DomainGen
  double length = 1.0;                 // InputGen and ParamGen
  std::vector<PdeParams> param_grid;   // ParamGen
  std::vector<double> lengths;         // DomainGen

  int hidden_width = 100;
  int hidden_layers = 3;

  int checkpoint_every = 0;  // epochs; 0 disables. Not part of the hash.

  int total_epochs() const;
  /// Learning rate in effect for a zero-based epoch index.
  double learning_rate_at(int epoch) const;
  /// Number of training records the config produces.
  int record_count() const;
  /// (D, K, L) per configuration, in record order.
  struct Setting {
    PdeParams params;
    double length;
  };
  std::vector<Setting> settings() const;

  /// Throws ValidationError with a field-level message.
  void validate() const;
  bool operator==(const TrainConfig&) const = default;
};

/// Names: "inputgen-paper", "paramgen-paper", "domaingen-paper",
/// "desk-small". `scenario` overrides the preset's scenario where given; for
/// desk-small it selects the reduced grid of that scenario.
TrainConfig preset(const std::string& name, std::optional<ScenarioTag> scenario = std::nullopt);
std::vector<std::string> preset_names();

nlohmann::json to_json(const TrainConfig& config);
/// Strict: unknown keys and invariant violations throw ValidationError. A
/// "preset" key supplies defaults that the other keys override.
TrainConfig config_from_json(const nlohmann::json& doc);
TrainConfig parse_config(const std::filesystem::path& path);

/// 64-bit FNV-1a over the canonical JSON of every reproducibility field,
/// rendered as 16 hex digits.
std::string config_hash(const TrainConfig& config);

}  // namespace dhpm
