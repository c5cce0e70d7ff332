#include "dhpm/evaluation.hpp"

#include <cmath>

#include "dhpm/errors.hpp"
#include "dhpm/parallel.hpp"

namespace dhpm {

namespace {

constexpr Eigen::Index kEvalChunk = 2048;

/// (x, t) of every grid node, x-major: column i*nt + j is (x_i, t_j).
Eigen::MatrixXd grid_points(const SpaceTimeGrid& grid) {
  Eigen::MatrixXd p(2, grid.size());
  for (Eigen::Index i = 0; i < grid.nx; ++i) {
    for (Eigen::Index j = 0; j < grid.nt; ++j) {
      p(0, i * grid.nt + j) = grid.x(i);
      p(1, i * grid.nt + j) = grid.t(j);
    }
  }
  return p;
}

Eigen::MatrixXd to_field(const Eigen::RowVectorXd& flat, const SpaceTimeGrid& grid) {
  Eigen::MatrixXd v(grid.nx, grid.nt);
  for (Eigen::Index i = 0; i < grid.nx; ++i) {
    for (Eigen::Index j = 0; j < grid.nt; ++j) v(i, j) = flat[i * grid.nt + j];
  }
  return v;
}

}  // namespace

double relative_l2_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& predicted) {
  if (reference.rows() != predicted.rows() || reference.cols() != predicted.cols()) {
    throw ShapeError("relative L2 error needs fields of the same shape");
  }
  const double denom = reference.norm();
  if (!(denom > 0.0)) throw ValidationError("relative L2 error of an all-zero reference");
  return (reference - predicted).norm() / denom;
}

SolutionField predict_field(const DhpModel& model, const InputFunctionSpec& spec,
                            const PdeParams& params) {
  const SpaceTimeGrid grid = SpaceTimeGrid::standard(spec.length);
  const FunctionContext ctx = make_context(spec, params);
  const Eigen::MatrixXd pts = grid_points(grid);
  Eigen::RowVectorXd u(pts.cols());
  for (Eigen::Index b = 0; b < pts.cols(); b += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pts.cols() - b);
    u.segment(b, len) = predict_states(model, pts.middleCols(b, len), ctx);
  }
  return {grid, to_field(u, grid)};
}

FunctionEvaluation evaluate_on_function(const DhpModel& model, const InputFunctionSpec& spec,
                                        const PdeParams& params) {
  FunctionEvaluation e;
  e.reference = ftcs_solve(params, spec, SpaceTimeGrid::standard(spec.length));
  e.predicted = predict_field(model, spec, params);
  e.error = relative_l2_error(e.reference.values, e.predicted.values);
  return e;
}

HiddenFieldComparison hidden_field_comparison(const DhpModel& model, const InputFunctionSpec& spec,
                                              const PdeParams& params) {
  const SpaceTimeGrid grid = SpaceTimeGrid::standard(spec.length);
  const FunctionContext ctx = make_context(spec, params);
  const Eigen::MatrixXd pts = grid_points(grid);
  Eigen::RowVectorXd truth(pts.cols());
  Eigen::RowVectorXd learned(pts.cols());
  for (Eigen::Index b = 0; b < pts.cols(); b += kEvalChunk) {
    const Eigen::Index len = std::min(kEvalChunk, pts.cols() - b);
    const ResidualTerms r = residual_terms(model, pts.middleCols(b, len), ctx);
    truth.segment(b, len) =
        params.diffusion * r.u_xx.array() + params.reaction * r.u.array().square();
    learned.segment(b, len) = r.hidden;
  }
  HiddenFieldComparison h;
  h.true_field = to_field(truth, grid);
  h.learned_field = to_field(learned, grid);
  h.error = relative_l2_error(h.true_field, h.learned_field);
  return h;
}

EvalReport EvalReport::from_errors(std::vector<std::pair<std::string, double>> errors) {
  EvalReport r;
  r.per_function_errors = std::move(errors);
  const auto n = static_cast<double>(r.per_function_errors.size());
  if (n == 0) return r;
  double sum = 0.0;
  for (const auto& [_, e] : r.per_function_errors) sum += e;
  r.mean = sum / n;
  double sq = 0.0;
  for (const auto& [_, e] : r.per_function_errors) sq += (e - r.mean) * (e - r.mean);
  r.std = std::sqrt(sq / n);
  return r;
}

EvalReport error_distribution(const DhpModel& model, const std::vector<FunctionCase>& functions,
                              int threads) {
  if (functions.empty()) throw ValidationError("error distribution over an empty function set");
  std::vector<std::pair<std::string, double>> errors(functions.size());
  parallel_for(functions.size(), threads, [&](std::size_t i) {
    const auto& f = functions[i];
    errors[i] = {f.id, evaluate_on_function(model, f.spec, f.params).error};
  });
  return EvalReport::from_errors(std::move(errors));
}

double mean_hidden_field_error(const DhpModel& model, const std::vector<FunctionCase>& functions,
                               int threads) {
  if (functions.empty()) throw ValidationError("hidden-field error over an empty function set");
  std::vector<double> errors(functions.size());
  parallel_for(functions.size(), threads, [&](std::size_t i) {
    errors[i] = hidden_field_comparison(model, functions[i].spec, functions[i].params).error;
  });
  double sum = 0.0;
  for (double e : errors) sum += e;
  return sum / static_cast<double>(errors.size());
}

nlohmann::json to_json(const EvalReport& report) {
  nlohmann::json per = nlohmann::json::array();
  for (const auto& [id, e] : report.per_function_errors) per.push_back({{"id", id}, {"error", e}});
  nlohmann::json out{{"count", report.per_function_errors.size()},
                     {"mean", report.mean},
                     {"std", report.std},
                     {"per_function", per}};
  if (report.hidden_field_error) out["hidden_field_error"] = *report.hidden_field_error;
  return out;
}

SweepTable parameter_sweep(const DhpModel& model, const std::vector<double>& d_values,
                           const std::vector<double>& k_values,
                           const std::vector<InputFunctionSpec>& functions,
                           std::optional<ParameterBox> training_box, int threads) {
  if (model.scenario.tag != ScenarioTag::ParamGen) {
    throw ValidationError("parameter sweep needs a ParamGen model");
  }
  if (d_values.empty() || k_values.empty() || functions.empty()) {
    throw ValidationError("parameter sweep needs non-empty D, K and function sets");
  }
  SweepTable t;
  t.d_values = d_values;
  t.k_values = k_values;
  const auto nd = static_cast<Eigen::Index>(d_values.size());
  const auto nk = static_cast<Eigen::Index>(k_values.size());
  t.mean_error.resize(nd, nk);
  t.extrapolated.setConstant(nd, nk, false);
  const std::size_t nf = functions.size();
  std::vector<double> errors(static_cast<std::size_t>(nd * nk) * nf);
  parallel_for(errors.size(), threads, [&](std::size_t idx) {
    const std::size_t cell = idx / nf;
    const std::size_t f = idx % nf;
    const PdeParams p{d_values[cell / static_cast<std::size_t>(nk)],
                      k_values[cell % static_cast<std::size_t>(nk)]};
    errors[idx] = evaluate_on_function(model, functions[f], p).error;
  });
  for (Eigen::Index i = 0; i < nd; ++i) {
    for (Eigen::Index j = 0; j < nk; ++j) {
      const std::size_t cell = static_cast<std::size_t>(i * nk + j);
      double sum = 0.0;
      for (std::size_t f = 0; f < nf; ++f) sum += errors[cell * nf + f];
      t.mean_error(i, j) = sum / static_cast<double>(nf);
      if (training_box) {
        const auto& b = *training_box;
        const double D = d_values[static_cast<std::size_t>(i)];
        const double K = k_values[static_cast<std::size_t>(j)];
        t.extrapolated(i, j) = D < b.d_min || D > b.d_max || K < b.k_min || K > b.k_max;
      }
    }
  }
  return t;
}

std::vector<double> linspace(double lo, double hi, int n) {
  if (n < 1) throw ValidationError("linspace needs n >= 1");
  if (n == 1) return {lo};
  std::vector<double> v(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) v[static_cast<std::size_t>(i)] = lo + (hi - lo) * i / (n - 1);
  v.back() = hi;
  return v;
}

std::vector<double> sweep_d_values() { return linspace(1e-3, 5e-3, 21); }
std::vector<double> sweep_k_values_published() { return {2e-4, 4e-4}; }
std::vector<double> sweep_k_values_in_range() { return {2e-3, 4e-3}; }

}  // namespace dhpm
