#include "dhpm/trainer.hpp"

#include <chrono>
#include <numeric>
#include <random>
#include <sstream>

#include "dhpm/errors.hpp"
#include "dhpm/parallel.hpp"

namespace dhpm {

std::vector<int> epoch_order(const TrainConfig& config, int epoch, int record_count) {
  std::vector<int> order(static_cast<std::size_t>(record_count));
  std::iota(order.begin(), order.end(), 0);
  std::mt19937_64 rng(derive_seed(config.seed, seed_stream::kEpochOrder,
                                  static_cast<std::uint64_t>(epoch)));
  for (int i = record_count - 1; i > 0; --i) {
    std::uniform_int_distribution<int> pick(0, i);
    std::swap(order[static_cast<std::size_t>(i)], order[static_cast<std::size_t>(pick(rng))]);
  }
  return order;
}

namespace {

void check_inputs(const DhpModel& model, const std::vector<DatasetRecord>& dataset,
                  const TrainConfig& config) {
  config.validate();
  model.validate();
  if (dataset.empty()) throw ValidationError("training needs a non-empty dataset");
  if (!(model.scenario == config.scenario)) {
    throw ValidationError("model scenario " + to_string(model.scenario.tag) +
                          " does not match config scenario " + to_string(config.scenario.tag));
  }
}

TrainResult run(TrainState state, const std::vector<DatasetRecord>& dataset,
                const TrainConfig& config, const TrainOptions& options) {
  configure_allocator();
  const auto start = std::chrono::steady_clock::now();

  std::vector<DataBatch> batches;
  batches.reserve(dataset.size());
  for (const auto& r : dataset) batches.push_back(data_batch(r));

  TrainResult result;
  Eigen::VectorXd flat = state.model.flattened();
  const int n_records = static_cast<int>(dataset.size());
  long step = static_cast<long>(state.epochs_done) * n_records;

  for (int epoch = state.epochs_done; epoch < config.total_epochs(); ++epoch) {
    const double lr = config.learning_rate_at(epoch);
    const auto order = epoch_order(config, epoch, n_records);
    double epoch_total = 0.0;
    for (int b = 0; b < n_records; ++b) {
      const int rec = order[static_cast<std::size_t>(b)];
      const DataBatch& batch = batches[static_cast<std::size_t>(rec)];
      const CollocationBatch colloc =
          draw_collocation(batch.context, config.n_colloc,
                           derive_seed(config.seed, seed_stream::kCollocation,
                                       static_cast<std::uint64_t>(epoch), static_cast<std::uint64_t>(b)));
      LossGradient lg;
      try {
        lg = loss_gradient(state.model, batch, colloc, {}, options.threads);
        adam_step(flat, lg.gradient, state.adam, lr);
      } catch (const NumericalError& e) {
        std::ostringstream msg;
        msg << "training aborted at epoch " << epoch << ", batch " << b << " (record " << rec
            << ", step " << step << "): " << e.what();
        throw NumericalError(msg.str());
      }
      state.model.assign_from(flat);
      result.log.entries.push_back(
          {step, epoch, b, rec, lg.loss,
           std::chrono::duration<double>(std::chrono::steady_clock::now() - start).count()});
      epoch_total += lg.loss.total;
      ++step;
    }
    state.epochs_done = epoch + 1;
    if (options.on_epoch) options.on_epoch(epoch, epoch_total / n_records);
    if (options.on_checkpoint && config.checkpoint_every > 0 &&
        state.epochs_done % config.checkpoint_every == 0) {
      options.on_checkpoint(state);
    }
  }
  result.state = std::move(state);
  return result;
}

}  // namespace

TrainResult train(const DhpModel& model, const std::vector<DatasetRecord>& dataset,
                  const TrainConfig& config, const TrainOptions& options) {
  check_inputs(model, dataset, config);
  TrainState state;
  state.model = model;
  state.adam = AdamState::for_size(model.parameter_count(), config.adam.beta1, config.adam.beta2,
                                   config.adam.epsilon);
  state.config_hash = config_hash(config);
  return run(std::move(state), dataset, config, options);
}

TrainResult resume(const TrainState& checkpoint, const std::vector<DatasetRecord>& dataset,
                   const TrainConfig& config, const TrainOptions& options) {
  check_inputs(checkpoint.model, dataset, config);
  const std::string hash = config_hash(config);
  if (checkpoint.config_hash != hash) {
    throw ValidationError("checkpoint was written for config " + checkpoint.config_hash +
                          " but the current config hashes to " + hash);
  }
  if (checkpoint.epochs_done >= config.total_epochs()) {
    throw ValidationError("checkpoint already covers the whole schedule");
  }
  if (checkpoint.adam.first_moment.size() != checkpoint.model.parameter_count()) {
    throw ShapeError("checkpoint optimizer state does not match the model");
  }
  return run(checkpoint, dataset, config, options);
}

}  // namespace dhpm
