#pragma once

#include <cstdint>
#include <optional>

#include <Eigen/Dense>

#include "dhpm/autodiff.hpp"
#include "dhpm/dataset.hpp"
#include "dhpm/network.hpp"
#include "dhpm/scenario.hpp"

namespace dhpm {

/// Solution network N_sol (features -> u) and hidden-dynamics network N_hid
/// ((x, t, u, u_x, u_xx) -> right-hand side of u_t).
struct DhpModel {
  static constexpr Eigen::Index kHiddenInputs = 5;

  NetworkParams n_sol;
  NetworkParams n_hid;
  Scenario scenario;

  /// Glorot-initialized model with `hidden_layers` tanh layers of
  /// `hidden_width` units in each network.
  static DhpModel create(Scenario scenario, int hidden_width, int hidden_layers, std::uint64_t seed);

  void validate() const;
  Eigen::Index parameter_count() const { return n_sol.parameter_count() + n_hid.parameter_count(); }
  /// [N_sol parameters | N_hid parameters].
  Eigen::VectorXd flattened() const;
  void assign_from(const Eigen::VectorXd& flat);
  bool operator==(const DhpModel&) const = default;
};

struct FeatureExtras {
  std::optional<double> diffusion;
  std::optional<double> reaction;
  std::optional<double> length;
};

/// [sensors | x | t] (+ [D | K] for ParamGen, + [L] for DomainGen). Extras
/// must match the scenario exactly.
Eigen::VectorXd assemble_features(const Scenario& scenario, double x, double t,
                                  const SensorVector& sensors, const FeatureExtras& extras = {});

/// Column-wise features for the (x, t) columns of `points` under one context.
Eigen::MatrixXd feature_matrix(const Scenario& scenario, const Eigen::MatrixXd& points,
                               const FunctionContext& context);

double predict_state(const DhpModel& model, const Eigen::VectorXd& features);
Eigen::RowVectorXd predict_states(const DhpModel& model, const Eigen::MatrixXd& points,
                                  const FunctionContext& context);

/// u and its derivatives from N_sol, the N_hid output, and g = u_t - N_hid.
struct ResidualTerms {
  Eigen::RowVectorXd u, u_x, u_t, u_xx;
  Eigen::MatrixXd hidden_input;  // 5 x M, rows (x, t, u, u_x, u_xx)
  Eigen::RowVectorXd hidden;
  Eigen::RowVectorXd g;
};

ResidualTerms residual_terms(const DhpModel& model, const Eigen::MatrixXd& points,
                             const FunctionContext& context);
double residual(const DhpModel& model, double x, double t, const FunctionContext& context);

/// Measurements of one record as points and targets.
struct DataBatch {
  Eigen::MatrixXd points;  // 2 x n (x, t)
  Eigen::RowVectorXd targets;
  FunctionContext context;
};

DataBatch data_batch(const DatasetRecord& record);

struct LossBreakdown {
  double data_loss = 0.0;
  double equation_loss = 0.0;
  double total = 0.0;
  bool operator==(const LossBreakdown&) const = default;
};

/// Mean of `terms` summed in ascending order, so the result does not depend
/// on the order the terms arrive in.
double ordered_mean(Eigen::VectorXd terms);

double data_loss(const DhpModel& model, const DataBatch& batch);
double equation_loss(const DhpModel& model, const CollocationBatch& colloc);
LossBreakdown total_loss(const DhpModel& model, const DataBatch& batch,
                         const CollocationBatch& colloc);

struct LossTerms {
  bool data = true;
  bool equation = true;
};

struct LossGradient {
  LossBreakdown loss;
  Eigen::VectorXd gradient;  // layout of DhpModel::flattened()
};

/// Loss and its gradient with respect to both networks. Points are processed
/// in fixed-size chunks whose partial gradients are summed in chunk order,
/// so the result is bit-identical for any thread count.
LossGradient loss_gradient(const DhpModel& model, const DataBatch& batch,
                           const CollocationBatch& colloc, LossTerms terms = {}, int threads = 1);

}  // namespace dhpm
