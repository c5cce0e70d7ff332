#include "dhpm/autodiff.hpp"

#include <algorithm>
#include <cmath>
#include <set>
#include <sstream>

#include "dhpm/activation.hpp"
#include "dhpm/errors.hpp"

namespace dhpm {

namespace {

void check_distinct(const std::vector<Index>& idx, Index width, const char* which) {
  std::set<Index> seen;
  for (Index i : idx) {
    if (i < 0 || i >= width) {
      std::ostringstream msg;
      msg << which << " derivative index " << i << " outside feature vector of length " << width;
      throw ValidationError(msg.str());
    }
    if (!seen.insert(i).second) {
      std::ostringstream msg;
      msg << which << " derivative index " << i << " requested twice";
      throw ValidationError(msg.str());
    }
  }
}

auto channel(Eigen::MatrixXd& m, Index c, Index batch) { return m.middleCols(c * batch, batch); }
auto channel(const Eigen::MatrixXd& m, Index c, Index batch) {
  return m.middleCols(c * batch, batch);
}

}  // namespace

void DiffRequest::validate(Index input_width) const {
  check_distinct(first, input_width, "first");
  check_distinct(second, input_width, "second");
}

Eigen::RowVectorXd JetPass::first(std::size_t slot) const {
  if (slot >= first_dir_.size()) throw ShapeError("first-derivative slot out of range");
  return output_.segment(first_channel(first_dir_[slot]) * batch_, batch_);
}

Eigen::RowVectorXd JetPass::second(std::size_t slot) const {
  if (slot >= second_dir_.size()) throw ShapeError("second-derivative slot out of range");
  return output_.segment(second_channel(slot) * batch_, batch_);
}

JetPass forward_jet(const NetworkParams& params, const Eigen::MatrixXd& features,
                    const DiffRequest& request) {
  if (features.rows() != params.input_width()) {
    std::ostringstream msg;
    msg << "feature width " << features.rows() << " does not match network input width "
        << params.input_width();
    throw ShapeError(msg.str());
  }
  if (params.output_width() != 1) throw ShapeError("jet evaluation expects a single output");
  request.validate(params.input_width());

  JetPass pass;
  pass.request_ = request;
  pass.batch_ = features.cols();
  pass.input_ = features;

  auto slot_of = [&](Index feature) {
    auto it = std::find(pass.directions_.begin(), pass.directions_.end(), feature);
    if (it != pass.directions_.end()) return static_cast<std::size_t>(it - pass.directions_.begin());
    pass.directions_.push_back(feature);
    return pass.directions_.size() - 1;
  };
  for (Index f : request.first) pass.first_dir_.push_back(slot_of(f));
  for (Index f : request.second) pass.second_dir_.push_back(slot_of(f));

  const Index B = pass.batch_;
  const Index C = pass.channels();
  const std::size_t n_layers = params.num_layers();
  pass.pre_.resize(n_layers);
  pass.post_.resize(n_layers - 1);
  pass.slope_.resize(n_layers - 1);
  pass.curve_.resize(n_layers - 1);

  for (std::size_t l = 0; l < n_layers; ++l) {
    const Eigen::MatrixXd& W = params.weights[l];
    Eigen::MatrixXd& Z = pass.pre_[l];
    if (l == 0) {
      // Input seeds: d(feature)/d(feature_k) = e_k, second derivatives vanish.
      Z.setZero(W.rows(), C * B);
      channel(Z, 0, B).noalias() = W * features;
      for (std::size_t d = 0; d < pass.directions_.size(); ++d) {
        channel(Z, pass.first_channel(d), B).colwise() = W.col(pass.directions_[d]);
      }
    } else {
      Z.noalias() = W * pass.post_[l - 1];
    }
    channel(Z, 0, B).colwise() += params.biases[l];

    if (l + 1 == n_layers) break;

    // tanh and its derivatives evaluated at the value channel.
    const Eigen::ArrayXXd s0 = tanh_array(channel(Z, 0, B).array());
    Eigen::ArrayXXd s1 = 1.0 - s0.square();
    Eigen::ArrayXXd s2 = -2.0 * s0 * s1;
    Eigen::MatrixXd A(W.rows(), C * B);
    channel(A, 0, B) = s0.matrix();
    for (std::size_t d = 0; d < pass.directions_.size(); ++d) {
      const Index c = pass.first_channel(d);
      channel(A, c, B) = (s1 * channel(Z, c, B).array()).matrix();
    }
    for (std::size_t s = 0; s < pass.second_dir_.size(); ++s) {
      const Index c = pass.second_channel(s);
      const auto zf = channel(Z, pass.first_channel(pass.second_dir_[s]), B).array();
      channel(A, c, B) = (s2 * zf.square() + s1 * channel(Z, c, B).array()).matrix();
    }
    pass.post_[l] = std::move(A);
    pass.slope_[l] = std::move(s1);
    pass.curve_[l] = std::move(s2);
  }
  pass.output_ = pass.pre_.back().row(0);
  return pass;
}

void backward_jet(const NetworkParams& params, const JetPass& pass, const JetSeeds& seeds,
                  NetworkGradient& grad, Eigen::MatrixXd* input_adjoint) {
  const Index B = pass.batch_;
  const Index C = pass.channels();
  const std::size_t n_layers = params.num_layers();
  if (grad.layer_sizes != params.layer_sizes) {
    throw ShapeError("gradient accumulator does not match network shape");
  }
  if (seeds.first.size() > pass.first_dir_.size() ||
      seeds.second.size() > pass.second_dir_.size()) {
    throw ShapeError("more seeds than requested derivatives");
  }

  // Output adjoint, stacked per channel.
  Eigen::MatrixXd Zbar = Eigen::MatrixXd::Zero(1, C * B);
  auto add_seed = [&](const Eigen::RowVectorXd& seed, Index c) {
    if (seed.size() == 0) return;
    if (seed.size() != B) throw ShapeError("seed length does not match batch");
    Zbar.block(0, c * B, 1, B) += seed;
  };
  add_seed(seeds.value, 0);
  for (std::size_t k = 0; k < seeds.first.size(); ++k) {
    add_seed(seeds.first[k], pass.first_channel(pass.first_dir_[k]));
  }
  for (std::size_t k = 0; k < seeds.second.size(); ++k) {
    add_seed(seeds.second[k], pass.second_channel(k));
  }

  for (std::size_t l = n_layers; l-- > 0;) {
    const Eigen::MatrixXd& W = params.weights[l];
    grad.biases[l] += channel(Zbar, 0, B).rowwise().sum();
    if (l == 0) {
      grad.weights[0].noalias() += channel(Zbar, 0, B) * pass.input_.transpose();
      for (std::size_t d = 0; d < pass.directions_.size(); ++d) {
        grad.weights[0].col(pass.directions_[d]) +=
            channel(Zbar, pass.first_channel(d), B).rowwise().sum();
      }
      if (input_adjoint != nullptr) {
        *input_adjoint = W.transpose() * channel(Zbar, 0, B);
      }
      break;
    }

    grad.weights[l].noalias() += Zbar * pass.post_[l - 1].transpose();
    const Eigen::MatrixXd Abar = W.transpose() * Zbar;

    // Pull the adjoint back through the tanh jet of layer l-1.
    const Eigen::MatrixXd& Z = pass.pre_[l - 1];
    const Eigen::ArrayXXd& s1 = pass.slope_[l - 1];
    const Eigen::ArrayXXd& s2 = pass.curve_[l - 1];
    Eigen::MatrixXd next(Abar.rows(), C * B);
    channel(next, 0, B) = (channel(Abar, 0, B).array() * s1).matrix();
    for (std::size_t d = 0; d < pass.directions_.size(); ++d) {
      const Index c = pass.first_channel(d);
      const auto ab = channel(Abar, c, B).array();
      channel(next, 0, B).array() += ab * s2 * channel(Z, c, B).array();
      channel(next, c, B) = (ab * s1).matrix();
    }
    if (!pass.second_dir_.empty()) {
      const Eigen::ArrayXXd s0 = channel(pass.post_[l - 1], 0, B).array();
      const Eigen::ArrayXXd s3 = -2.0 * (s1.square() + s0 * s2);
      for (std::size_t s = 0; s < pass.second_dir_.size(); ++s) {
        const Index c = pass.second_channel(s);
        const Index cf = pass.first_channel(pass.second_dir_[s]);
        const auto ab = channel(Abar, c, B).array();
        const auto zf = channel(Z, cf, B).array();
        channel(next, 0, B).array() += ab * (s3 * zf.square() + s2 * channel(Z, c, B).array());
        channel(next, cf, B).array() += 2.0 * ab * s2 * zf;
        channel(next, c, B) = (ab * s1).matrix();
      }
    }
    Zbar = std::move(next);
  }
}

double evaluate(const NetworkParams& params, std::span<const double> features) {
  return forward(params, features);
}

DerivativeBundle input_derivatives(const NetworkParams& params, std::span<const double> features,
                                   const DiffRequest& request) {
  const Eigen::Map<const Eigen::VectorXd> x(features.data(), static_cast<Index>(features.size()));
  if (x.size() != params.input_width()) {
    throw ShapeError("feature width does not match network input width");
  }
  const JetPass pass = forward_jet(params, Eigen::MatrixXd(x), request);
  DerivativeBundle out;
  out.value = pass.value()(0);
  for (std::size_t k = 0; k < request.first.size(); ++k) out.first[request.first[k]] = pass.first(k)(0);
  for (std::size_t k = 0; k < request.second.size(); ++k) {
    out.second[request.second[k]] = pass.second(k)(0);
  }
  return out;
}

void require_finite_loss(double loss, const char* what) {
  if (!std::isfinite(loss)) {
    std::ostringstream msg;
    msg << what << " is not finite (" << loss << ")";
    throw NumericalError(msg.str());
  }
}

}  // namespace dhpm
