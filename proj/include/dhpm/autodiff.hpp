#pragma once

// Nested differentiation for tanh MLPs.
//
// Input derivatives (first and pure second derivatives with respect to a few
// feature slots) are propagated forward through the network as a truncated
// Taylor jet. The parameter gradient of any loss built from those jet outputs
// is then obtained by a reverse sweep over the stored jet, which is the
// reverse-over-forward arrangement: cheap in the handful of input
// directions, one sweep for all parameters.

#include <map>
#include <span>
#include <vector>

#include <Eigen/Dense>

#include "dhpm/network.hpp"

namespace dhpm {

struct DiffRequest {
  std::vector<Index> first;   // features needing du/d(feature)
  std::vector<Index> second;  // features needing d2u/d(feature)2

  /// Indices must be distinct within each list and below `input_width`.
  void validate(Index input_width) const;
};

struct DerivativeBundle {
  double value = 0.0;
  std::map<Index, double> first;
  std::map<Index, double> second;
};

/// Adjoints of the jet outputs. Empty rows count as zero.
struct JetSeeds {
  Eigen::RowVectorXd value;
  std::vector<Eigen::RowVectorXd> first;   // aligned with DiffRequest::first
  std::vector<Eigen::RowVectorXd> second;  // aligned with DiffRequest::second
};

class JetPass;
JetPass forward_jet(const NetworkParams& params, const Eigen::MatrixXd& features,
                    const DiffRequest& request);
void backward_jet(const NetworkParams& params, const JetPass& pass, const JetSeeds& seeds,
                  NetworkGradient& grad, Eigen::MatrixXd* input_adjoint);

/// Forward jet of a single-output network over a batch of feature columns.
/// Holds every intermediate the reverse sweep needs.
class JetPass {
 public:
  Index batch() const { return batch_; }
  const DiffRequest& request() const { return request_; }

  /// Output value per column.
  Eigen::RowVectorXd value() const { return output_.leftCols(batch_); }
  /// du/d(feature) per column; `slot` indexes request().first.
  Eigen::RowVectorXd first(std::size_t slot) const;
  /// d2u/d(feature)2 per column; `slot` indexes request().second.
  Eigen::RowVectorXd second(std::size_t slot) const;

 private:
  friend JetPass forward_jet(const NetworkParams&, const Eigen::MatrixXd&, const DiffRequest&);
  friend void backward_jet(const NetworkParams&, const JetPass&, const JetSeeds&,
                           NetworkGradient&, Eigen::MatrixXd*);

  Index channels() const { return 1 + static_cast<Index>(directions_.size() + request_.second.size()); }
  Eigen::Index first_channel(std::size_t dir) const { return 1 + static_cast<Index>(dir); }
  Eigen::Index second_channel(std::size_t s) const {
    return 1 + static_cast<Index>(directions_.size() + s);
  }

  DiffRequest request_;
  Index batch_ = 0;
  std::vector<Index> directions_;          // first-order feature slots actually propagated
  std::vector<std::size_t> first_dir_;     // request_.first[k] -> directions_ slot
  std::vector<std::size_t> second_dir_;    // request_.second[k] -> directions_ slot
  Eigen::MatrixXd input_;                  // features, input_width x batch
  std::vector<Eigen::MatrixXd> pre_;       // per layer, stacked channels
  std::vector<Eigen::MatrixXd> post_;      // per hidden layer, stacked channels
  std::vector<Eigen::ArrayXXd> slope_;     // tanh' per hidden layer
  std::vector<Eigen::ArrayXXd> curve_;     // tanh'' per hidden layer
  Eigen::RowVectorXd output_;              // stacked output channels
};

JetPass forward_jet(const NetworkParams& params, const Eigen::MatrixXd& features,
                    const DiffRequest& request);

/// Accumulates d(loss)/d(params) into `grad`, where the seeds are
/// d(loss)/d(jet outputs). If `input_adjoint` is non-null it receives
/// d(loss)/d(features) (input_width x batch).
void backward_jet(const NetworkParams& params, const JetPass& pass, const JetSeeds& seeds,
                  NetworkGradient& grad, Eigen::MatrixXd* input_adjoint = nullptr);

/// Network output for one feature vector. Rejects shape mismatches.
double evaluate(const NetworkParams& params, std::span<const double> features);

/// Exact first/second input derivatives at one point.
DerivativeBundle input_derivatives(const NetworkParams& params, std::span<const double> features,
                                   const DiffRequest& request);

/// Throws NumericalError naming `what` if `loss` is not finite.
void require_finite_loss(double loss, const char* what);

}  // namespace dhpm
