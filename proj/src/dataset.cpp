#include "dhpm/dataset.hpp"

#include <algorithm>
#include <numeric>
#include <random>
#include <sstream>

#include "dhpm/errors.hpp"
#include "dhpm/parallel.hpp"

namespace dhpm {

SensorVector sensor_vector(const InputFunctionSpec& spec) {
  spec.validate();
  constexpr Eigen::Index m = Scenario::kSensorCount;
  SensorVector s;
  s.coords.resize(m);
  s.values.resize(m);
  for (Eigen::Index k = 0; k < m; ++k) {
    s.coords[k] = k == m - 1 ? spec.length : spec.length * static_cast<double>(k) / (m - 1);
    s.values[k] = eval_input_function(spec, s.coords[k]);
  }
  return s;
}

FunctionContext make_context(const InputFunctionSpec& spec, const PdeParams& params) {
  return {sensor_vector(spec), params, spec.length};
}

MeasurementSet sample_measurements(const SolutionField& field, int n_data, std::uint64_t seed) {
  const Eigen::Index total = field.grid.size();
  if (n_data < 1 || n_data > total) {
    std::ostringstream msg;
    msg << "n_data = " << n_data << " must lie in [1, " << total << "]";
    throw ValidationError(msg.str());
  }
  // Partial Fisher-Yates over flat x-major indices.
  std::vector<Eigen::Index> flat(static_cast<std::size_t>(total));
  std::iota(flat.begin(), flat.end(), Eigen::Index{0});
  std::mt19937_64 rng(seed);
  for (int k = 0; k < n_data; ++k) {
    std::uniform_int_distribution<Eigen::Index> pick(k, total - 1);
    std::swap(flat[static_cast<std::size_t>(k)], flat[static_cast<std::size_t>(pick(rng))]);
  }
  MeasurementSet m;
  m.indices.reserve(static_cast<std::size_t>(n_data));
  m.values.resize(n_data);
  const Eigen::Index nt = field.grid.nt;
  for (int k = 0; k < n_data; ++k) {
    const Eigen::Index f = flat[static_cast<std::size_t>(k)];
    m.indices.emplace_back(f / nt, f % nt);
    m.values[k] = field.values(f / nt, f % nt);
  }
  return m;
}

Eigen::MatrixXd lhs_sample(int n, const std::vector<std::pair<double, double>>& bounds,
                           std::uint64_t seed) {
  if (n < 1) throw ValidationError("LHS needs n >= 1");
  if (bounds.empty()) throw ValidationError("LHS needs at least one dimension");
  for (const auto& [lo, hi] : bounds) {
    if (!(lo < hi)) {
      std::ostringstream msg;
      msg << "degenerate LHS bounds [" << lo << ", " << hi << "]";
      throw ValidationError(msg.str());
    }
  }
  std::mt19937_64 rng(seed);
  std::uniform_real_distribution<double> unit(0.0, 1.0);
  Eigen::MatrixXd pts(static_cast<Eigen::Index>(bounds.size()), n);
  std::vector<int> perm(static_cast<std::size_t>(n));
  for (std::size_t d = 0; d < bounds.size(); ++d) {
    std::iota(perm.begin(), perm.end(), 0);
    for (int i = n - 1; i > 0; --i) {
      std::uniform_int_distribution<int> pick(0, i);
      std::swap(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(pick(rng))]);
    }
    const auto [lo, hi] = bounds[d];
    for (int i = 0; i < n; ++i) {
      const double u = (perm[static_cast<std::size_t>(i)] + unit(rng)) / n;
      pts(static_cast<Eigen::Index>(d), i) = std::min(hi, lo + u * (hi - lo));
    }
  }
  return pts;
}

CollocationBatch draw_collocation(const FunctionContext& context, int n, std::uint64_t seed) {
  return {lhs_sample(n, {{0.0, context.length}, {0.0, SpaceTimeGrid::kEndTime}}, seed), context};
}

DatasetRecord make_record(int id, const InputFunctionSpec& spec, const PdeParams& params,
                          int n_data, std::uint64_t measurement_seed) {
  DatasetRecord r;
  r.id = id;
  r.seed = measurement_seed;
  r.spec = spec;
  r.params = params;
  r.length = spec.length;
  r.field = ftcs_solve(params, spec, SpaceTimeGrid::standard(spec.length));
  r.measurements = sample_measurements(r.field, n_data, measurement_seed);
  return r;
}

std::vector<DatasetRecord> build_dataset(const TrainConfig& config, int threads) {
  config.validate();
  const auto settings = config.settings();
  const auto n = static_cast<std::size_t>(config.record_count());
  std::vector<DatasetRecord> records(n);
  parallel_for(n, threads, [&](std::size_t i) {
    const auto& setting = settings[i / static_cast<std::size_t>(config.n_fun)];
    const auto spec =
        random_periodic(derive_seed(config.seed, seed_stream::kInputFunction, i), setting.length);
    try {
      records[i] = make_record(static_cast<int>(i), spec, setting.params, config.n_data,
                               derive_seed(config.seed, seed_stream::kMeasurements, i));
    } catch (const std::exception& e) {
      std::ostringstream msg;
      msg << "record " << i << " (" << spec.describe() << ", D=" << setting.params.diffusion
          << ", K=" << setting.params.reaction << "): " << e.what();
      if (dynamic_cast<const ValidationError*>(&e)) throw ValidationError(msg.str());
      throw NumericalError(msg.str());
    }
  });
  return records;
}

std::vector<InputFunctionSpec> test_functions(std::uint64_t master_seed, int count, double length) {
  std::vector<InputFunctionSpec> out;
  out.reserve(static_cast<std::size_t>(std::max(count, 0)));
  for (int i = 0; i < count; ++i) {
    out.push_back(random_periodic(
        derive_seed(master_seed, seed_stream::kTestFunction, static_cast<std::uint64_t>(i)), length));
  }
  return out;
}

}  // namespace dhpm
