#include "dhpm/config.hpp"

#include <algorithm>
#include <cctype>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <set>
#include <sstream>

#include "dhpm/errors.hpp"

namespace dhpm {

using nlohmann::json;

std::string to_string(ScenarioTag tag) {
  switch (tag) {
    case ScenarioTag::InputGen: return "inputgen";
    case ScenarioTag::ParamGen: return "paramgen";
    case ScenarioTag::DomainGen: return "domaingen";
  }
  return "unknown";
}

ScenarioTag scenario_from_string(const std::string& name) {
  std::string lower = name;
  std::transform(lower.begin(), lower.end(), lower.begin(),
                 [](unsigned char c) { return static_cast<char>(std::tolower(c)); });
  if (lower == "inputgen") return ScenarioTag::InputGen;
  if (lower == "paramgen") return ScenarioTag::ParamGen;
  if (lower == "domaingen") return ScenarioTag::DomainGen;
  throw ValidationError("unknown scenario '" + name + "' (expected inputgen, paramgen or domaingen)");
}

int TrainConfig::total_epochs() const {
  int n = 0;
  for (const auto& s : schedule) n += s.epochs;
  return n;
}

double TrainConfig::learning_rate_at(int epoch) const {
  int end = 0;
  for (const auto& s : schedule) {
    end += s.epochs;
    if (epoch < end) return s.learning_rate;
  }
  throw ValidationError("epoch " + std::to_string(epoch) + " beyond the learning-rate schedule");
}

std::vector<TrainConfig::Setting> TrainConfig::settings() const {
  std::vector<Setting> out;
  switch (scenario.tag) {
    case ScenarioTag::InputGen: out.push_back({pde, length}); break;
    case ScenarioTag::ParamGen:
      for (const auto& p : param_grid) out.push_back({p, length});
      break;
    case ScenarioTag::DomainGen:
      for (double L : lengths) out.push_back({pde, L});
      break;
  }
  return out;
}

int TrainConfig::record_count() const { return n_fun * static_cast<int>(settings().size()); }

namespace {

[[noreturn]] void reject(const std::string& field, const std::string& why) {
  throw ValidationError("config field '" + field + "': " + why);
}

void check_params(const PdeParams& p, const std::string& field) {
  try {
    p.validate();
  } catch (const ValidationError& e) {
    reject(field, e.what());
  }
}

}  // namespace

void TrainConfig::validate() const {
  if (n_fun < 1) reject("n_fun", "must be >= 1");
  if (n_data < 1) reject("n_data", "must be >= 1");
  if (n_data > SpaceTimeGrid::kNx * SpaceTimeGrid::kNt) {
    reject("n_data", "exceeds the 201x101 grid");
  }
  if (n_colloc < 1) reject("n_colloc", "must be >= 1");
  if (schedule.empty()) reject("schedule", "must be non-empty");
  for (const auto& s : schedule) {
    if (s.epochs < 1) reject("schedule", "every segment needs epochs >= 1");
    if (!(s.learning_rate > 0.0) || !std::isfinite(s.learning_rate)) {
      reject("schedule", "learning rates must be positive");
    }
  }
  if (!(adam.beta1 >= 0.0 && adam.beta1 < 1.0)) reject("adam.beta1", "must lie in [0, 1)");
  if (!(adam.beta2 >= 0.0 && adam.beta2 < 1.0)) reject("adam.beta2", "must lie in [0, 1)");
  if (!(adam.epsilon > 0.0)) reject("adam.epsilon", "must be positive");
  if (hidden_width < 1) reject("hidden_width", "must be >= 1");
  if (hidden_layers < 1) reject("hidden_layers", "must be >= 1");
  if (checkpoint_every < 0) reject("checkpoint_every", "must be >= 0");
  if (!(length > 0.0)) reject("L", "must be positive");
  check_params(pde, "D/K");
  switch (scenario.tag) {
    case ScenarioTag::InputGen: break;
    case ScenarioTag::ParamGen:
      if (param_grid.empty()) reject("param_grid", "ParamGen needs at least one (D, K) pair");
      for (const auto& p : param_grid) check_params(p, "param_grid");
      break;
    case ScenarioTag::DomainGen:
      if (lengths.empty()) reject("lengths", "DomainGen needs at least one domain length");
      for (double L : lengths) {
        if (!(L > 0.0) || !std::isfinite(L)) reject("lengths", "lengths must be positive");
      }
      break;
  }
}

std::vector<std::string> preset_names() {
  return {"inputgen-paper", "paramgen-paper", "domaingen-paper", "desk-small"};
}

TrainConfig preset(const std::string& name, std::optional<ScenarioTag> scenario) {
  TrainConfig c;
  const std::vector<double> full_values{1e-3, 3e-3, 5e-3};
  std::vector<PdeParams> full_grid;
  for (double D : full_values) {
    for (double K : full_values) full_grid.push_back({D, K});
  }
  const std::vector<double> full_lengths{1.0, 1.1, 1.2, 1.3, 1.4, 1.5};

  if (name == "inputgen-paper") {
    c.scenario.tag = ScenarioTag::InputGen;
    c.n_fun = 200;
    c.n_data = 1000;
    c.n_colloc = 5000;
    c.schedule = {{1000, 1e-3}, {1000, 1e-4}};
  } else if (name == "paramgen-paper" || name == "domaingen-paper") {
    c.scenario.tag = name == "paramgen-paper" ? ScenarioTag::ParamGen : ScenarioTag::DomainGen;
    c.n_fun = 200;
    c.n_data = 500;
    c.n_colloc = 1000;
    c.schedule = {{1000, 1e-3}, {2000, 1e-4}};
  } else if (name == "desk-small") {
    c.scenario.tag = ScenarioTag::InputGen;
    c.n_fun = 50;
    c.n_data = 500;
    c.n_colloc = 1000;
    c.schedule = {{150, 1e-3}, {150, 1e-4}};
  } else {
    throw ValidationError("unknown preset '" + name + "'");
  }
  if (scenario) c.scenario.tag = *scenario;

  const bool desk = name == "desk-small";
  // The desk ParamGen/DomainGen corpora are 4x and 3x the InputGen one, so they
  // get shorter schedules to keep a desk run within minutes.
  if (desk && c.scenario.tag == ScenarioTag::ParamGen) c.schedule = {{100, 1e-3}, {50, 1e-4}};
  if (desk && c.scenario.tag == ScenarioTag::DomainGen) c.schedule = {{70, 1e-3}, {30, 1e-4}};
  if (c.scenario.tag == ScenarioTag::ParamGen) {
    c.param_grid = desk ? std::vector<PdeParams>{{1e-3, 1e-3}, {1e-3, 5e-3}, {5e-3, 1e-3}, {5e-3, 5e-3}}
                        : full_grid;
  }
  if (c.scenario.tag == ScenarioTag::DomainGen) {
    c.lengths = desk ? std::vector<double>{1.0, 1.25, 1.5} : full_lengths;
  }
  return c;
}

namespace {

json schedule_json(const std::vector<ScheduleSegment>& schedule) {
  json out = json::array();
  for (const auto& s : schedule) out.push_back({s.epochs, s.learning_rate});
  return out;
}

json hashed_fields(const TrainConfig& c) {
  json params = json::array();
  for (const auto& p : c.param_grid) params.push_back({p.diffusion, p.reaction});
  return json{{"scenario", to_string(c.scenario.tag)},
              {"n_fun", c.n_fun},
              {"n_data", c.n_data},
              {"n_colloc", c.n_colloc},
              {"schedule", schedule_json(c.schedule)},
              {"seed", c.seed},
              {"adam", {{"beta1", c.adam.beta1}, {"beta2", c.adam.beta2}, {"epsilon", c.adam.epsilon}}},
              {"D", c.pde.diffusion},
              {"K", c.pde.reaction},
              {"L", c.length},
              {"param_grid", params},
              {"lengths", c.lengths},
              {"hidden_width", c.hidden_width},
              {"hidden_layers", c.hidden_layers}};
}

}  // namespace

json to_json(const TrainConfig& c) {
  json out = hashed_fields(c);
  out["checkpoint_every"] = c.checkpoint_every;
  return out;
}

TrainConfig config_from_json(const json& doc) {
  if (!doc.is_object()) throw ValidationError("config must be a JSON object");
  static const std::set<std::string> known{
      "preset", "scenario", "n_fun", "n_data", "n_colloc", "schedule", "seed", "adam", "D", "K", "L",
      "param_grid", "lengths", "hidden_width", "hidden_layers", "checkpoint_every"};
  for (const auto& [key, _] : doc.items()) {
    if (!known.contains(key)) reject(key, "unknown key");
  }

  auto field = [&](const char* key, auto fn) {
    if (!doc.contains(key)) return;
    try {
      fn(doc.at(key));
    } catch (const json::exception& e) {
      reject(key, std::string("wrong type: ") + e.what());
    }
  };

  std::optional<ScenarioTag> tag;
  field("scenario", [&](const json& v) { tag = scenario_from_string(v.get<std::string>()); });
  TrainConfig c;
  if (doc.contains("preset")) {
    std::string name;
    field("preset", [&](const json& v) { name = v.get<std::string>(); });
    c = preset(name, tag);
  } else if (tag) {
    c.scenario.tag = *tag;
  }

  field("n_fun", [&](const json& v) { c.n_fun = v.get<int>(); });
  field("n_data", [&](const json& v) { c.n_data = v.get<int>(); });
  field("n_colloc", [&](const json& v) { c.n_colloc = v.get<int>(); });
  field("seed", [&](const json& v) {
    if (v.is_number_integer() && v.get<long long>() < 0) reject("seed", "must be non-negative");
    c.seed = v.get<std::uint64_t>();
  });
  field("schedule", [&](const json& v) {
    c.schedule.clear();
    for (const auto& seg : v) {
      if (!seg.is_array() || seg.size() != 2) reject("schedule", "segments are [epochs, lr] pairs");
      c.schedule.push_back({seg[0].get<int>(), seg[1].get<double>()});
    }
  });
  field("adam", [&](const json& v) {
    for (const auto& [key, val] : v.items()) {
      if (key == "beta1") c.adam.beta1 = val.get<double>();
      else if (key == "beta2") c.adam.beta2 = val.get<double>();
      else if (key == "epsilon") c.adam.epsilon = val.get<double>();
      else reject("adam." + key, "unknown key");
    }
  });
  field("D", [&](const json& v) { c.pde.diffusion = v.get<double>(); });
  field("K", [&](const json& v) { c.pde.reaction = v.get<double>(); });
  field("L", [&](const json& v) { c.length = v.get<double>(); });
  field("param_grid", [&](const json& v) {
    c.param_grid.clear();
    for (const auto& p : v) {
      if (!p.is_array() || p.size() != 2) reject("param_grid", "entries are [D, K] pairs");
      c.param_grid.push_back({p[0].get<double>(), p[1].get<double>()});
    }
  });
  field("lengths", [&](const json& v) { c.lengths = v.get<std::vector<double>>(); });
  field("hidden_width", [&](const json& v) { c.hidden_width = v.get<int>(); });
  field("hidden_layers", [&](const json& v) { c.hidden_layers = v.get<int>(); });
  field("checkpoint_every", [&](const json& v) { c.checkpoint_every = v.get<int>(); });
  c.validate();
  return c;
}

TrainConfig parse_config(const std::filesystem::path& path) {
  std::ifstream in(path);
  if (!in) throw ValidationError("cannot open config file " + path.string());
  json doc;
  try {
    doc = json::parse(in);
  } catch (const json::parse_error& e) {
    throw ValidationError("config file " + path.string() + " is not valid JSON: " + e.what());
  }
  return config_from_json(doc);
}

std::string config_hash(const TrainConfig& config) {
  const std::string text = hashed_fields(config).dump();
  std::uint64_t h = 0xcbf29ce484222325ULL;
  for (unsigned char ch : text) {
    h ^= ch;
    h *= 0x100000001b3ULL;
  }
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

}  // namespace dhpm
