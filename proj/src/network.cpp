#include "dhpm/network.hpp"

#include <cmath>
#include <random>
#include <sstream>

#include "dhpm/activation.hpp"
#include "dhpm/errors.hpp"

namespace dhpm {

Index NetworkParams::parameter_count() const {
  Index n = 0;
  for (std::size_t l = 0; l + 1 < layer_sizes.size(); ++l) {
    n += layer_sizes[l + 1] * layer_sizes[l] + layer_sizes[l + 1];
  }
  return n;
}

NetworkParams NetworkParams::zeros(std::vector<Index> layer_sizes) {
  if (layer_sizes.size() < 2) throw ValidationError("network needs at least two layer sizes");
  for (Index w : layer_sizes) {
    if (w < 1) throw ValidationError("network layer widths must be >= 1");
  }
  NetworkParams p;
  p.layer_sizes = std::move(layer_sizes);
  for (std::size_t l = 0; l + 1 < p.layer_sizes.size(); ++l) {
    p.weights.push_back(Eigen::MatrixXd::Zero(p.layer_sizes[l + 1], p.layer_sizes[l]));
    p.biases.push_back(Eigen::VectorXd::Zero(p.layer_sizes[l + 1]));
  }
  return p;
}

void NetworkParams::validate() const {
  if (layer_sizes.size() < 2) throw ValidationError("network needs at least two layer sizes");
  if (weights.size() + 1 != layer_sizes.size() || biases.size() != weights.size()) {
    throw ShapeError("layer count does not match layer_sizes");
  }
  for (std::size_t l = 0; l < weights.size(); ++l) {
    if (layer_sizes[l] < 1 || layer_sizes[l + 1] < 1) {
      throw ValidationError("network layer widths must be >= 1");
    }
    if (weights[l].rows() != layer_sizes[l + 1] || weights[l].cols() != layer_sizes[l] ||
        biases[l].size() != layer_sizes[l + 1]) {
      std::ostringstream msg;
      msg << "layer " << l << " has shape " << weights[l].rows() << "x" << weights[l].cols()
          << " but layer_sizes implies " << layer_sizes[l + 1] << "x" << layer_sizes[l];
      throw ShapeError(msg.str());
    }
    if (!weights[l].allFinite() || !biases[l].allFinite()) {
      throw ValidationError("network parameters must be finite");
    }
  }
}

void NetworkParams::flatten_into(std::span<double> out) const {
  if (static_cast<Index>(out.size()) != parameter_count()) {
    throw ShapeError("flat buffer size does not match parameter count");
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights[l].size());
    std::copy_n(weights[l].data(), nw, out.data() + pos);
    pos += nw;
    const auto nb = static_cast<std::size_t>(biases[l].size());
    std::copy_n(biases[l].data(), nb, out.data() + pos);
    pos += nb;
  }
}

void NetworkParams::assign_from(std::span<const double> flat) {
  if (static_cast<Index>(flat.size()) != parameter_count()) {
    throw ShapeError("flat buffer size does not match parameter count");
  }
  std::size_t pos = 0;
  for (std::size_t l = 0; l < weights.size(); ++l) {
    const auto nw = static_cast<std::size_t>(weights[l].size());
    std::copy_n(flat.data() + pos, nw, weights[l].data());
    pos += nw;
    const auto nb = static_cast<std::size_t>(biases[l].size());
    std::copy_n(flat.data() + pos, nb, biases[l].data());
    pos += nb;
  }
}

Eigen::VectorXd NetworkParams::flattened() const {
  Eigen::VectorXd flat(parameter_count());
  flatten_into({flat.data(), static_cast<std::size_t>(flat.size())});
  return flat;
}

NetworkParams init_glorot(const std::vector<Index>& layer_sizes, std::uint64_t seed) {
  NetworkParams p = NetworkParams::zeros(layer_sizes);
  std::mt19937_64 rng(seed);
  for (std::size_t l = 0; l < p.weights.size(); ++l) {
    const double fan_in = static_cast<double>(layer_sizes[l]);
    const double fan_out = static_cast<double>(layer_sizes[l + 1]);
    const double limit = std::sqrt(6.0 / (fan_in + fan_out));
    std::uniform_real_distribution<double> dist(-limit, limit);
    // Row-major fill so the draw order does not depend on Eigen storage.
    for (Index r = 0; r < p.weights[l].rows(); ++r) {
      for (Index c = 0; c < p.weights[l].cols(); ++c) p.weights[l](r, c) = dist(rng);
    }
  }
  return p;
}

Eigen::RowVectorXd forward_batch(const NetworkParams& params, const Eigen::MatrixXd& features) {
  if (features.rows() != params.input_width()) {
    std::ostringstream msg;
    msg << "feature width " << features.rows() << " does not match network input width "
        << params.input_width();
    throw ShapeError(msg.str());
  }
  if (params.output_width() != 1) throw ShapeError("forward expects a single-output network");
  Eigen::MatrixXd act = features;
  const std::size_t n = params.num_layers();
  for (std::size_t l = 0; l < n; ++l) {
    Eigen::MatrixXd z = params.weights[l] * act;
    z.colwise() += params.biases[l];
    act = (l + 1 < n) ? Eigen::MatrixXd(tanh_array(z.array()).matrix()) : std::move(z);
  }
  return act.row(0);
}

double forward(const NetworkParams& params, std::span<const double> features) {
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Index>(features.size()));
  return forward_batch(params, Eigen::MatrixXd(x))(0);
}

AdamState AdamState::for_size(Index n, double beta1, double beta2, double epsilon) {
  AdamState s;
  s.first_moment = Eigen::VectorXd::Zero(n);
  s.second_moment = Eigen::VectorXd::Zero(n);
  s.beta1 = beta1;
  s.beta2 = beta2;
  s.epsilon = epsilon;
  return s;
}

void adam_step(Eigen::Ref<Eigen::VectorXd> params, const Eigen::VectorXd& grad, AdamState& state,
               double lr) {
  if (grad.size() != params.size() || state.first_moment.size() != params.size() ||
      state.second_moment.size() != params.size()) {
    throw ShapeError("adam_step: gradient, moments and parameters differ in length");
  }
  for (Index i = 0; i < grad.size(); ++i) {
    if (!std::isfinite(grad[i])) {
      std::ostringstream msg;
      msg << "adam_step: non-finite gradient entry at index " << i << " (step "
          << state.step_count + 1 << ")";
      throw NumericalError(msg.str());
    }
  }
  state.step_count += 1;
  const double t = static_cast<double>(state.step_count);
  const double corr1 = 1.0 - std::pow(state.beta1, t);
  const double corr2 = 1.0 - std::pow(state.beta2, t);
  for (Index i = 0; i < grad.size(); ++i) {
    const double g = grad[i];
    double& m = state.first_moment[i];
    double& v = state.second_moment[i];
    m = state.beta1 * m + (1.0 - state.beta1) * g;
    v = state.beta2 * v + (1.0 - state.beta2) * g * g;
    const double m_hat = m / corr1;
    const double v_hat = v / corr2;
    params[i] -= lr * m_hat / (std::sqrt(v_hat) + state.epsilon);
  }
}

std::pair<NetworkParams, AdamState> adam_step(const NetworkParams& params,
                                              const Eigen::VectorXd& grad, const AdamState& state,
                                              double lr) {
  Eigen::VectorXd flat = params.flattened();
  AdamState next = state;
  adam_step(flat, grad, next, lr);
  NetworkParams updated = params;
  updated.assign_from({flat.data(), static_cast<std::size_t>(flat.size())});
  return {std::move(updated), std::move(next)};
}

}  // namespace dhpm
