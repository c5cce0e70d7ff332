#pragma once

#include <string>

#include <Eigen/Dense>

namespace dhpm {

enum class ScenarioTag { InputGen, ParamGen, DomainGen };

/// Which generalization the solution network is trained for. Determines the
/// feature layout: [sensors(50) | x | t] plus (D, K) for ParamGen or L for
/// DomainGen.
struct Scenario {
  static constexpr Eigen::Index kSensorCount = 50;
  static constexpr Eigen::Index kXSlot = kSensorCount;
  static constexpr Eigen::Index kTSlot = kSensorCount + 1;
  /// D and K enter N_sol in units of this scale so the features are O(1).
  static constexpr double kParamFeatureScale = 1e-3;

  ScenarioTag tag = ScenarioTag::InputGen;

  Eigen::Index sol_input_width() const {
    switch (tag) {
      case ScenarioTag::InputGen: return kSensorCount + 2;
      case ScenarioTag::ParamGen: return kSensorCount + 4;
      case ScenarioTag::DomainGen: return kSensorCount + 3;
    }
    return 0;
  }
  bool operator==(const Scenario&) const = default;
};

std::string to_string(ScenarioTag tag);
/// Accepts "inputgen", "paramgen", "domaingen" (case-insensitive).
ScenarioTag scenario_from_string(const std::string& name);

}  // namespace dhpm
