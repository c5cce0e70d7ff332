#pragma once

// File formats.
//
// Record file (*.rec): 8-byte magic "DHPMREC1", uint64 little-endian header
// length, a JSON header of that many bytes, then nx*nt little-endian float64
// values of u in x-major order (offset i*nt + j holds u(x_i, t_j)). The header
// carries L, D, K, the input-function descriptor, the measurement seed, nx, nt
// and the measurement (i, j) index pairs.
//
// Dataset manifest (manifest.json): scenario, full config, config hash, master
// seed and one entry per record with its file name.
//
// Checkpoint (*.json): layer sizes, weights and biases of both networks,
// scenario tag, config hash and, when present, the Adam state and the number
// of completed epochs. Doubles are written in shortest round-trip form, so
// save -> load reproduces every bit.

#include <filesystem>
#include <string>
#include <vector>

#include <json.hpp>

#include "dhpm/config.hpp"
#include "dhpm/dataset.hpp"
#include "dhpm/evaluation.hpp"
#include "dhpm/trainer.hpp"

namespace dhpm {

namespace fs = std::filesystem;

void write_record(const fs::path& path, const DatasetRecord& record);
/// Validates magic, shape, boundary rows, initial column and indices.
DatasetRecord read_record(const fs::path& path);

void write_dataset(const fs::path& dir, const TrainConfig& config,
                   const std::vector<DatasetRecord>& records);
struct LoadedDataset {
  TrainConfig config;
  std::vector<DatasetRecord> records;
};
LoadedDataset read_dataset(const fs::path& dir);

nlohmann::json checkpoint_json(const TrainState& state, const TrainConfig& config);
void save_checkpoint(const fs::path& path, const TrainState& state, const TrainConfig& config);
struct LoadedCheckpoint {
  TrainState state;
  TrainConfig config;
};
LoadedCheckpoint load_checkpoint(const fs::path& path);

void write_log_csv(const fs::path& path, const TrainLog& log, bool append = false);
void write_json(const fs::path& path, const nlohmann::json& doc);
nlohmann::json read_json(const fs::path& path);

/// 201 rows (x) of 101 comma-separated values (t), preceded by a '#' header.
void write_field_csv(const fs::path& path, const SolutionField& field);
/// Triplets "x,t,value" for every node.
void write_contour_csv(const fs::path& path, const SpaceTimeGrid& grid,
                       const Eigen::MatrixXd& values);
void write_sweep_csv(const fs::path& path, const SweepTable& table);

/// "%.17g".
std::string format_double(double v);

nlohmann::json spec_json(const InputFunctionSpec& spec);
InputFunctionSpec spec_from_json(const nlohmann::json& j);

}  // namespace dhpm
