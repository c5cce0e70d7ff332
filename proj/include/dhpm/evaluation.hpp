#pragma once

#include <optional>
#include <string>
#include <vector>

#include <Eigen/Dense>
#include <json.hpp>

#include "dhpm/model.hpp"
#include "dhpm/rd_oracle.hpp"

namespace dhpm {

/// ||reference - predicted||_2 / ||reference||_2 over all entries.
double relative_l2_error(const Eigen::MatrixXd& reference, const Eigen::MatrixXd& predicted);

/// N_sol on every node of the stored grid for one input function.
SolutionField predict_field(const DhpModel& model, const InputFunctionSpec& spec,
                            const PdeParams& params);

struct FunctionEvaluation {
  SolutionField reference;
  SolutionField predicted;
  double error = 0.0;
};

/// Prediction against a fresh FTCS solve.
FunctionEvaluation evaluate_on_function(const DhpModel& model, const InputFunctionSpec& spec,
                                        const PdeParams& params);

struct HiddenFieldComparison {
  Eigen::MatrixXd true_field;     // D u_xx + K u^2 from N_sol derivatives
  Eigen::MatrixXd learned_field;  // N_hid(x, t, u, u_x, u_xx)
  double error = 0.0;
};

HiddenFieldComparison hidden_field_comparison(const DhpModel& model, const InputFunctionSpec& spec,
                                              const PdeParams& params);

struct FunctionCase {
  std::string id;
  InputFunctionSpec spec;
  PdeParams params;
};

/// Per-function errors with their mean and population standard deviation.
struct EvalReport {
  std::vector<std::pair<std::string, double>> per_function_errors;
  double mean = 0.0;
  double std = 0.0;
  std::optional<double> hidden_field_error;

  static EvalReport from_errors(std::vector<std::pair<std::string, double>> errors);
};

EvalReport error_distribution(const DhpModel& model, const std::vector<FunctionCase>& functions,
                              int threads = 1);

/// Mean hidden-field comparison error over a function set.
double mean_hidden_field_error(const DhpModel& model, const std::vector<FunctionCase>& functions,
                               int threads = 1);

nlohmann::json to_json(const EvalReport& report);

struct SweepTable {
  std::vector<double> d_values;
  std::vector<double> k_values;
  Eigen::MatrixXd mean_error;  // |D| x |K|
  /// Cells whose (D, K) lies outside the training box, when one is known.
  Eigen::Matrix<bool, Eigen::Dynamic, Eigen::Dynamic> extrapolated;
};

struct ParameterBox {
  double d_min, d_max, k_min, k_max;
};

/// Mean error per (D, K) cell over `functions` (their own params are ignored).
SweepTable parameter_sweep(const DhpModel& model, const std::vector<double>& d_values,
                           const std::vector<double>& k_values,
                           const std::vector<InputFunctionSpec>& functions,
                           std::optional<ParameterBox> training_box = std::nullopt, int threads = 1);

/// n equispaced values over [lo, hi], both ends included.
std::vector<double> linspace(double lo, double hi, int n);

/// The D axis of the published sweep: 21 points over [1e-3, 5e-3].
std::vector<double> sweep_d_values();
/// K values as published ({2e-4, 4e-4}) and the in-range reading ({2e-3, 4e-3}).
std::vector<double> sweep_k_values_published();
std::vector<double> sweep_k_values_in_range();

}  // namespace dhpm
