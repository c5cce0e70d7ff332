#include "dhpm/model.hpp"

#include <algorithm>
#include <sstream>

#include "dhpm/errors.hpp"
#include "dhpm/parallel.hpp"

namespace dhpm {

namespace {

constexpr Eigen::Index kChunk = 256;

// Batches are padded to a whole number of SIMD column blocks so every point takes
// the same kernel path and its result does not depend on where it sits in the batch.
constexpr Eigen::Index kLanes = 8;

Eigen::MatrixXd pad_columns(const Eigen::MatrixXd& points) {
  const Eigen::Index n = points.cols();
  const Eigen::Index padded = (n + kLanes - 1) / kLanes * kLanes;
  if (padded == n) return points;
  Eigen::MatrixXd out(points.rows(), padded);
  out.leftCols(n) = points;
  out.rightCols(padded - n).colwise() = points.col(n - 1);
  return out;
}

Eigen::RowVectorXd pad_seed(const Eigen::RowVectorXd& seed, Eigen::Index padded) {
  Eigen::RowVectorXd out = Eigen::RowVectorXd::Zero(padded);
  out.head(seed.size()) = seed;
  return out;
}

std::vector<Index> hidden_stack(Index input, int width, int layers) {
  std::vector<Index> sizes{input};
  for (int l = 0; l < layers; ++l) sizes.push_back(width);
  sizes.push_back(1);
  return sizes;
}

const DiffRequest& residual_request() {
  static const DiffRequest request{{Scenario::kXSlot, Scenario::kTSlot}, {Scenario::kXSlot}};
  return request;
}

void check_scenario_extras(const Scenario& scenario, const FeatureExtras& extras) {
  const bool want_dk = scenario.tag == ScenarioTag::ParamGen;
  const bool want_l = scenario.tag == ScenarioTag::DomainGen;
  if (extras.diffusion.has_value() != want_dk || extras.reaction.has_value() != want_dk) {
    throw ValidationError(std::string("scenario ") + to_string(scenario.tag) +
                          (want_dk ? " requires" : " does not accept") + " D and K features");
  }
  if (extras.length.has_value() != want_l) {
    throw ValidationError(std::string("scenario ") + to_string(scenario.tag) +
                          (want_l ? " requires" : " does not accept") + " an L feature");
  }
}

void fill_context_rows(const Scenario& scenario, const FunctionContext& context,
                       Eigen::MatrixXd& features) {
  if (context.sensors.values.size() != Scenario::kSensorCount) {
    throw ShapeError("sensor vector must have exactly 50 entries");
  }
  features.topRows(Scenario::kSensorCount).colwise() = context.sensors.values;
  switch (scenario.tag) {
    case ScenarioTag::InputGen: break;
    case ScenarioTag::ParamGen:
      features.row(Scenario::kSensorCount + 2).setConstant(context.params.diffusion / Scenario::kParamFeatureScale);
      features.row(Scenario::kSensorCount + 3).setConstant(context.params.reaction / Scenario::kParamFeatureScale);
      break;
    case ScenarioTag::DomainGen:
      features.row(Scenario::kSensorCount + 2).setConstant(context.length);
      break;
  }
}

}  // namespace

DhpModel DhpModel::create(Scenario scenario, int hidden_width, int hidden_layers,
                          std::uint64_t seed) {
  DhpModel m;
  m.scenario = scenario;
  m.n_sol = init_glorot(hidden_stack(scenario.sol_input_width(), hidden_width, hidden_layers),
                        derive_seed(seed, seed_stream::kSolutionNet));
  m.n_hid = init_glorot(hidden_stack(kHiddenInputs, hidden_width, hidden_layers),
                        derive_seed(seed, seed_stream::kHiddenNet));
  return m;
}

void DhpModel::validate() const {
  n_sol.validate();
  n_hid.validate();
  if (n_sol.input_width() != scenario.sol_input_width()) {
    std::ostringstream msg;
    msg << "N_sol input width " << n_sol.input_width() << " does not match scenario "
        << to_string(scenario.tag) << " (" << scenario.sol_input_width() << ")";
    throw ShapeError(msg.str());
  }
  if (n_hid.input_width() != kHiddenInputs) throw ShapeError("N_hid input width must be 5");
  if (n_sol.output_width() != 1 || n_hid.output_width() != 1) {
    throw ShapeError("both networks must have a single output");
  }
}

Eigen::VectorXd DhpModel::flattened() const {
  Eigen::VectorXd flat(parameter_count());
  const auto ns = static_cast<std::size_t>(n_sol.parameter_count());
  n_sol.flatten_into({flat.data(), ns});
  n_hid.flatten_into({flat.data() + ns, static_cast<std::size_t>(n_hid.parameter_count())});
  return flat;
}

void DhpModel::assign_from(const Eigen::VectorXd& flat) {
  if (flat.size() != parameter_count()) throw ShapeError("flat parameter vector has wrong length");
  const auto ns = static_cast<std::size_t>(n_sol.parameter_count());
  n_sol.assign_from({flat.data(), ns});
  n_hid.assign_from({flat.data() + ns, static_cast<std::size_t>(n_hid.parameter_count())});
}

Eigen::VectorXd assemble_features(const Scenario& scenario, double x, double t,
                                  const SensorVector& sensors, const FeatureExtras& extras) {
  check_scenario_extras(scenario, extras);
  if (sensors.values.size() != Scenario::kSensorCount) {
    throw ShapeError("sensor vector must have exactly 50 entries");
  }
  Eigen::VectorXd f(scenario.sol_input_width());
  f.head(Scenario::kSensorCount) = sensors.values;
  f[Scenario::kXSlot] = x;
  f[Scenario::kTSlot] = t;
  if (scenario.tag == ScenarioTag::ParamGen) {
    f[Scenario::kSensorCount + 2] = *extras.diffusion / Scenario::kParamFeatureScale;
    f[Scenario::kSensorCount + 3] = *extras.reaction / Scenario::kParamFeatureScale;
  } else if (scenario.tag == ScenarioTag::DomainGen) {
    f[Scenario::kSensorCount + 2] = *extras.length;
  }
  return f;
}

Eigen::MatrixXd feature_matrix(const Scenario& scenario, const Eigen::MatrixXd& points,
                               const FunctionContext& context) {
  if (points.rows() != 2) throw ShapeError("points must be 2 x n (x, t)");
  Eigen::MatrixXd features(scenario.sol_input_width(), points.cols());
  fill_context_rows(scenario, context, features);
  features.row(Scenario::kXSlot) = points.row(0);
  features.row(Scenario::kTSlot) = points.row(1);
  return features;
}

double predict_state(const DhpModel& model, const Eigen::VectorXd& features) {
  if (features.size() != model.scenario.sol_input_width()) {
    throw ShapeError("feature width does not match the model scenario");
  }
  return forward(model.n_sol, {features.data(), static_cast<std::size_t>(features.size())});
}

Eigen::RowVectorXd predict_states(const DhpModel& model, const Eigen::MatrixXd& points,
                                  const FunctionContext& context) {
  if (points.cols() == 0) return {};
  return forward_batch(model.n_sol, feature_matrix(model.scenario, pad_columns(points), context))
      .head(points.cols());
}

namespace {

struct ResidualPass {
  JetPass sol;
  JetPass hid;
  ResidualTerms terms;
};

// The passes cover the padded batch; terms hold only the real points.
ResidualPass residual_pass(const DhpModel& model, const Eigen::MatrixXd& points,
                           const FunctionContext& context) {
  const Eigen::Index n = points.cols();
  const Eigen::MatrixXd padded = pad_columns(points);
  ResidualPass r{forward_jet(model.n_sol, feature_matrix(model.scenario, padded, context),
                             residual_request()),
                 {},
                 {}};
  Eigen::MatrixXd hidden_input(DhpModel::kHiddenInputs, padded.cols());
  hidden_input.row(0) = padded.row(0);
  hidden_input.row(1) = padded.row(1);
  hidden_input.row(2) = r.sol.value();
  hidden_input.row(3) = r.sol.first(0);
  hidden_input.row(4) = r.sol.second(0);
  r.hid = forward_jet(model.n_hid, hidden_input, {});

  ResidualTerms& t = r.terms;
  t.u = r.sol.value().head(n);
  t.u_x = r.sol.first(0).head(n);
  t.u_t = r.sol.first(1).head(n);
  t.u_xx = r.sol.second(0).head(n);
  t.hidden_input = hidden_input.leftCols(n);
  t.hidden = r.hid.value().head(n);
  t.g = t.u_t - t.hidden;
  return r;
}

}  // namespace

ResidualTerms residual_terms(const DhpModel& model, const Eigen::MatrixXd& points,
                             const FunctionContext& context) {
  return residual_pass(model, points, context).terms;
}

double residual(const DhpModel& model, double x, double t, const FunctionContext& context) {
  Eigen::MatrixXd p(2, 1);
  p << x, t;
  return residual_terms(model, p, context).g(0);
}

DataBatch data_batch(const DatasetRecord& record) {
  DataBatch b;
  const auto n = static_cast<Eigen::Index>(record.measurements.size());
  b.points.resize(2, n);
  b.targets.resize(n);
  for (Eigen::Index k = 0; k < n; ++k) {
    const auto [i, j] = record.measurements.indices[static_cast<std::size_t>(k)];
    b.points(0, k) = record.field.grid.x(i);
    b.points(1, k) = record.field.grid.t(j);
    b.targets[k] = record.field.values(i, j);
  }
  b.context = record.context();
  return b;
}

double ordered_mean(Eigen::VectorXd terms) {
  if (terms.size() == 0) throw ValidationError("mean of an empty batch");
  std::sort(terms.data(), terms.data() + terms.size());
  double sum = 0.0;
  for (Eigen::Index i = 0; i < terms.size(); ++i) sum += terms[i];
  return sum / static_cast<double>(terms.size());
}

double data_loss(const DhpModel& model, const DataBatch& batch) {
  if (batch.points.cols() == 0) throw ValidationError("data loss of an empty batch");
  if (batch.targets.size() != batch.points.cols()) throw ShapeError("targets/points mismatch");
  const Eigen::RowVectorXd err = predict_states(model, batch.points, batch.context) - batch.targets;
  return ordered_mean(err.array().square().matrix().transpose());
}

double equation_loss(const DhpModel& model, const CollocationBatch& colloc) {
  if (colloc.points.cols() == 0) throw ValidationError("equation loss of an empty batch");
  const Eigen::RowVectorXd g = residual_terms(model, colloc.points, colloc.context).g;
  return ordered_mean(g.array().square().matrix().transpose());
}

LossBreakdown total_loss(const DhpModel& model, const DataBatch& batch,
                         const CollocationBatch& colloc) {
  LossBreakdown l;
  l.data_loss = data_loss(model, batch);
  l.equation_loss = equation_loss(model, colloc);
  l.total = l.data_loss + l.equation_loss;
  return l;
}

LossGradient loss_gradient(const DhpModel& model, const DataBatch& batch,
                           const CollocationBatch& colloc, LossTerms terms, int threads) {
  const Eigen::Index n_data = terms.data ? batch.points.cols() : 0;
  const Eigen::Index n_eq = terms.equation ? colloc.points.cols() : 0;
  if (terms.data && n_data == 0) throw ValidationError("data loss of an empty batch");
  if (terms.equation && n_eq == 0) throw ValidationError("equation loss of an empty batch");
  if (terms.data && batch.targets.size() != n_data) throw ShapeError("targets/points mismatch");

  const Eigen::Index data_chunks = (n_data + kChunk - 1) / kChunk;
  const Eigen::Index eq_chunks = (n_eq + kChunk - 1) / kChunk;
  const auto n_chunks = static_cast<std::size_t>(data_chunks + eq_chunks);

  struct Partial {
    NetworkGradient sol;
    NetworkGradient hid;
  };
  std::vector<Partial> partial(n_chunks);
  Eigen::VectorXd data_sq(n_data);
  Eigen::VectorXd eq_sq(n_eq);

  parallel_for(n_chunks, threads, [&](std::size_t c) {
    Partial& p = partial[c];
    p.sol = NetworkParams::zeros(model.n_sol.layer_sizes);
    const auto ci = static_cast<Eigen::Index>(c);
    if (ci < data_chunks) {
      const Eigen::Index begin = ci * kChunk;
      const Eigen::Index len = std::min(kChunk, n_data - begin);
      const JetPass pass = forward_jet(
          model.n_sol,
          feature_matrix(model.scenario, pad_columns(batch.points.middleCols(begin, len)), batch.context),
          {});
      const Eigen::RowVectorXd err = pass.value().head(len) - batch.targets.segment(begin, len);
      data_sq.segment(begin, len) = err.array().square().matrix().transpose();
      JetSeeds seeds;
      seeds.value = pad_seed((2.0 / static_cast<double>(n_data)) * err, pass.value().size());
      backward_jet(model.n_sol, pass, seeds, p.sol);
      return;
    }
    p.hid = NetworkParams::zeros(model.n_hid.layer_sizes);
    const Eigen::Index begin = (ci - data_chunks) * kChunk;
    const Eigen::Index len = std::min(kChunk, n_eq - begin);
    const ResidualPass r = residual_pass(model, colloc.points.middleCols(begin, len), colloc.context);
    eq_sq.segment(begin, len) = r.terms.g.array().square().matrix().transpose();

    // g = u_t - N_hid(x, t, u, u_x, u_xx)
    const Eigen::RowVectorXd gbar =
        pad_seed((2.0 / static_cast<double>(n_eq)) * r.terms.g, r.hid.value().size());
    JetSeeds hid_seeds;
    hid_seeds.value = -gbar;
    Eigen::MatrixXd hid_input_adjoint;
    backward_jet(model.n_hid, r.hid, hid_seeds, p.hid, &hid_input_adjoint);

    JetSeeds sol_seeds;
    sol_seeds.value = hid_input_adjoint.row(2);
    sol_seeds.first = {hid_input_adjoint.row(3), gbar};
    sol_seeds.second = {hid_input_adjoint.row(4)};
    backward_jet(model.n_sol, r.sol, sol_seeds, p.sol);
  });

  LossGradient out;
  out.loss.data_loss = terms.data ? ordered_mean(data_sq) : 0.0;
  out.loss.equation_loss = terms.equation ? ordered_mean(eq_sq) : 0.0;
  out.loss.total = out.loss.data_loss + out.loss.equation_loss;
  require_finite_loss(out.loss.total, "total loss");

  NetworkGradient sol = NetworkParams::zeros(model.n_sol.layer_sizes);
  NetworkGradient hid = NetworkParams::zeros(model.n_hid.layer_sizes);
  for (const Partial& p : partial) {
    for (std::size_t l = 0; l < sol.weights.size(); ++l) {
      sol.weights[l] += p.sol.weights[l];
      sol.biases[l] += p.sol.biases[l];
    }
    if (p.hid.weights.empty()) continue;
    for (std::size_t l = 0; l < hid.weights.size(); ++l) {
      hid.weights[l] += p.hid.weights[l];
      hid.biases[l] += p.hid.biases[l];
    }
  }
  out.gradient.resize(model.parameter_count());
  const auto ns = static_cast<std::size_t>(model.n_sol.parameter_count());
  sol.flatten_into({out.gradient.data(), ns});
  hid.flatten_into({out.gradient.data() + ns, static_cast<std::size_t>(model.n_hid.parameter_count())});
  return out;
}

}  // namespace dhpm
