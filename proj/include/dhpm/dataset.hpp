#pragma once

#include <cstdint>
#include <utility>
#include <vector>

#include <Eigen/Dense>

#include "dhpm/config.hpp"
#include "dhpm/rd_oracle.hpp"
#include "dhpm/scenario.hpp"

namespace dhpm {

/// An input function sampled at 50 equispaced points spanning [0, L].
struct SensorVector {
  Eigen::VectorXd values;
  Eigen::VectorXd coords;
};

SensorVector sensor_vector(const InputFunctionSpec& spec);

/// Conditioning information shared by every point of one input function.
struct FunctionContext {
  SensorVector sensors;
  PdeParams params;
  double length = 1.0;
};

FunctionContext make_context(const InputFunctionSpec& spec, const PdeParams& params);

/// Measured samples of a solution field. Indices are (x-index, t-index).
struct MeasurementSet {
  std::vector<std::pair<Eigen::Index, Eigen::Index>> indices;
  Eigen::VectorXd values;

  std::size_t size() const { return indices.size(); }
};

/// n distinct grid nodes drawn uniformly without replacement.
MeasurementSet sample_measurements(const SolutionField& field, int n_data, std::uint64_t seed);

/// Latin-hypercube design: returns dims x n, one sample per stratum per
/// dimension, uniform inside its stratum.
Eigen::MatrixXd lhs_sample(int n, const std::vector<std::pair<double, double>>& bounds,
                           std::uint64_t seed);

struct CollocationBatch {
  Eigen::MatrixXd points;  // 2 x M rows (x, t)
  FunctionContext context;
};

/// n LHS points on [0, L] x [0, t_end] for the given context.
CollocationBatch draw_collocation(const FunctionContext& context, int n, std::uint64_t seed);

struct DatasetRecord {
  int id = 0;
  std::uint64_t seed = 0;  // measurement seed
  InputFunctionSpec spec;
  PdeParams params;
  double length = 1.0;
  SolutionField field;
  MeasurementSet measurements;

  FunctionContext context() const { return make_context(spec, params); }
};

/// Builds the training corpus described by `config`. Record i uses seeds
/// derived from (config.seed, i) only, so the result does not depend on
/// `threads`.
std::vector<DatasetRecord> build_dataset(const TrainConfig& config, int threads = 1);

/// One record for an explicit function and parameter setting.
DatasetRecord make_record(int id, const InputFunctionSpec& spec, const PdeParams& params,
                          int n_data, std::uint64_t measurement_seed);

/// Unseen periodic test functions, drawn from a stream disjoint from training.
std::vector<InputFunctionSpec> test_functions(std::uint64_t master_seed, int count, double length);

}  // namespace dhpm
