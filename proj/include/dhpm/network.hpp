#pragma once

#include <Eigen/Dense>
#include <cstdint>
#include <span>
#include <vector>

namespace dhpm {

using Index = Eigen::Index;

/// Weights and biases of a fully connected tanh network with a linear
/// output layer. weights[l] maps layer l (width layer_sizes[l]) to layer
/// l+1, so it has shape layer_sizes[l+1] x layer_sizes[l].
struct NetworkParams {
  std::vector<Index> layer_sizes;
  std::vector<Eigen::MatrixXd> weights;
  std::vector<Eigen::VectorXd> biases;

  Index input_width() const { return layer_sizes.front(); }
  Index output_width() const { return layer_sizes.back(); }
  std::size_t num_layers() const { return weights.size(); }
  Index parameter_count() const;

  /// Zero-filled parameters with the given shape.
  static NetworkParams zeros(std::vector<Index> layer_sizes);

  /// Throws ShapeError/ValidationError when shapes or values are inconsistent.
  void validate() const;

  /// Flat layout: for each layer, the weight matrix in column-major order
  /// followed by the bias vector.
  void flatten_into(std::span<double> out) const;
  void assign_from(std::span<const double> flat);
  Eigen::VectorXd flattened() const;

  bool operator==(const NetworkParams&) const = default;
};

/// Gradient with the same shape as a NetworkParams.
using NetworkGradient = NetworkParams;

NetworkParams init_glorot(const std::vector<Index>& layer_sizes, std::uint64_t seed);

/// Scalar output of a single-output network for one feature vector.
double forward(const NetworkParams& params, std::span<const double> features);

/// Batched forward pass; features are stored column-wise (input_width x batch).
Eigen::RowVectorXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& features);

struct AdamState {
  std::int64_t step_count = 0;
  Eigen::VectorXd first_moment;
  Eigen::VectorXd second_moment;
  double beta1 = 0.9;
  double beta2 = 0.999;
  double epsilon = 1e-8;

  static AdamState for_size(Index n, double beta1 = 0.9, double beta2 = 0.999,
                            double epsilon = 1e-8);
};

/// One bias-corrected Adam update of a flat parameter vector, in place.
/// Rejects non-finite gradients without touching params or state.
void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad,
               AdamState& state, double lr);

/// Value-semantics overload operating on a single network.
std::pair<NetworkParams, AdamState> adam_step(const NetworkParams& params,
                                              const Eigen::VectorXd& grad,
                                              const AdamState& state, double lr);

}  // namespace dhpm
