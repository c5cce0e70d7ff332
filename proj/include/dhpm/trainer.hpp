#pragma once

#include <functional>
#include <string>
#include <vector>

#include "dhpm/config.hpp"
#include "dhpm/dataset.hpp"
#include "dhpm/model.hpp"
#include "dhpm/network.hpp"

namespace dhpm {

struct LogEntry {
  long step = 0;
  int epoch = 0;
  int batch = 0;      // position within the epoch
  int record = 0;     // dataset record id
  LossBreakdown loss;
  double wall_seconds = 0.0;  // elapsed since the run started; not exported
};

struct TrainLog {
  std::vector<LogEntry> entries;
};

/// Everything needed to continue a run bit-identically.
struct TrainState {
  DhpModel model;
  AdamState adam;
  int epochs_done = 0;
  std::string config_hash;
};

struct TrainOptions {
  int threads = 1;
  /// Called after every epoch listed by config.checkpoint_every.
  std::function<void(const TrainState&)> on_checkpoint;
  /// Called after every epoch with the epoch's mean total loss.
  std::function<void(int epoch, double mean_total)> on_epoch;
};

struct TrainResult {
  TrainState state;
  TrainLog log;
};

/// Joint Adam training of both networks. Each epoch visits every record once
/// in a seed-fixed shuffled order; each visit is one step on that record's
/// measurements plus a fresh LHS collocation draw in its domain.
TrainResult train(const DhpModel& model, const std::vector<DatasetRecord>& dataset,
                  const TrainConfig& config, const TrainOptions& options = {});

/// Continues from a checkpoint. The config hash must match.
TrainResult resume(const TrainState& checkpoint, const std::vector<DatasetRecord>& dataset,
                   const TrainConfig& config, const TrainOptions& options = {});

/// Record visiting order for one epoch.
std::vector<int> epoch_order(const TrainConfig& config, int epoch, int record_count);

}  // namespace dhpm
