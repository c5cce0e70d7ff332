#include <gtest/gtest.h>

#include <cmath>
#include <random>

#include "dhpm/autodiff.hpp"
#include "dhpm/errors.hpp"
#include "dhpm/model.hpp"
#include "support.hpp"

using namespace dhpm;
using dhpm::testing::central_first;
using dhpm::testing::central_second;
using dhpm::testing::rel_diff;

namespace {

NetworkParams linear_net(double w, double b) {
  NetworkParams p = NetworkParams::zeros({1, 1});
  p.weights[0](0, 0) = w;
  p.biases[0](0) = b;
  return p;
}

NetworkParams single_tanh() {
  NetworkParams p = NetworkParams::zeros({1, 1, 1});
  p.weights[0](0, 0) = 1.0;
  p.weights[1](0, 0) = 1.0;
  return p;
}

}  // namespace

TEST(Evaluate, ZeroWeightsGiveFinalBias) {
  NetworkParams p = NetworkParams::zeros({3, 4, 4, 1});
  p.biases.back()(0) = -1.25;
  const std::vector<double> x{0.3, -7.0, 2.0};
  EXPECT_EQ(evaluate(p, x), -1.25);
}

TEST(Evaluate, TanhAtZero) {
  const std::vector<double> x{0.0};
  EXPECT_EQ(evaluate(single_tanh(), x), 0.0);
}

TEST(Evaluate, LinearNet) {
  const std::vector<double> x{3.0};
  EXPECT_DOUBLE_EQ(evaluate(linear_net(2.0, 1.0), x), 7.0);
}

TEST(Evaluate, RejectsWrongWidth) {
  const std::vector<double> x{1.0, 2.0};
  EXPECT_THROW(evaluate(linear_net(2.0, 1.0), x), ShapeError);
}

TEST(InputDerivatives, LinearNetHasConstantSlope) {
  NetworkParams p = NetworkParams::zeros({3, 1});
  p.weights[0] << 0.5, -2.0, 3.0;
  p.biases[0](0) = 4.0;
  const std::vector<double> x{1.0, 1.0, 1.0};
  const DerivativeBundle d = input_derivatives(p, x, {{0, 1, 2}, {0, 1, 2}});
  EXPECT_DOUBLE_EQ(d.value, 5.5);
  for (Index i = 0; i < 3; ++i) {
    EXPECT_DOUBLE_EQ(d.first.at(i), p.weights[0](0, i));
    EXPECT_EQ(d.second.at(i), 0.0);
  }
}

TEST(InputDerivatives, TanhAtZero) {
  const std::vector<double> x{0.0};
  const DerivativeBundle d = input_derivatives(single_tanh(), x, {{0}, {0}});
  EXPECT_EQ(d.value, 0.0);
  EXPECT_DOUBLE_EQ(d.first.at(0), 1.0);
  EXPECT_EQ(d.second.at(0), 0.0);
}

TEST(InputDerivatives, SecondWithoutFirstRequest) {
  std::mt19937_64 rng(3);
  const NetworkParams p = dhpm::testing::random_mlp(rng, 4, 12);
  const Eigen::VectorXd x = dhpm::testing::random_vector(rng, 4, -1, 1);
  const std::vector<double> xs(x.data(), x.data() + 4);
  const auto only = input_derivatives(p, xs, {{}, {2}});
  const auto both = input_derivatives(p, xs, {{2}, {2}});
  EXPECT_EQ(only.second.at(2), both.second.at(2));
  EXPECT_TRUE(only.first.empty());
}

TEST(InputDerivatives, RejectsBadRequests) {
  const std::vector<double> x{0.0};
  EXPECT_THROW(input_derivatives(single_tanh(), x, {{1}, {}}), ValidationError);
  EXPECT_THROW(input_derivatives(single_tanh(), x, {{0, 0}, {}}), ValidationError);
  EXPECT_THROW(input_derivatives(single_tanh(), x, {{}, {-1}}), ValidationError);
}

TEST(InputDerivatives, MatchCentralDifferences) {
  std::mt19937_64 rng(11);
  const double h = 1e-4;
  for (int trial = 0; trial < 25; ++trial) {
    const Index in = 5;
    const NetworkParams p = dhpm::testing::random_mlp(rng, in, 40);
    const Eigen::VectorXd x0 = dhpm::testing::random_vector(rng, in, -1, 1);
    const std::vector<double> xs(x0.data(), x0.data() + in);
    const DerivativeBundle d = input_derivatives(p, xs, {{0, 1, 2, 3, 4}, {0, 1, 2, 3, 4}});
    for (Index i = 0; i < in; ++i) {
      auto along = [&](double xi) {
        std::vector<double> v = xs;
        v[static_cast<std::size_t>(i)] = xi;
        return evaluate(p, v);
      };
      EXPECT_LT(rel_diff(d.first.at(i), central_first(along, x0(i), h), 1e-3), 1e-5);
      EXPECT_LT(rel_diff(d.second.at(i), central_second(along, x0(i), h), 1e-3), 1e-3);
    }
  }
}

TEST(JetPass, BatchMatchesPointwise) {
  std::mt19937_64 rng(5);
  const NetworkParams p = dhpm::testing::random_mlp(rng, 3, 16);
  Eigen::MatrixXd f(3, 7);
  for (Index c = 0; c < 7; ++c) f.col(c) = dhpm::testing::random_vector(rng, 3, -2, 2);
  const JetPass pass = forward_jet(p, f, {{0, 2}, {0}});
  for (Index c = 0; c < 7; ++c) {
    const std::vector<double> xs(f.col(c).data(), f.col(c).data() + 3);
    const DerivativeBundle d = input_derivatives(p, xs, {{0, 2}, {0}});
    EXPECT_NEAR(pass.value()(c), d.value, 1e-14);
    EXPECT_NEAR(pass.first(0)(c), d.first.at(0), 1e-14);
    EXPECT_NEAR(pass.first(1)(c), d.first.at(2), 1e-14);
    EXPECT_NEAR(pass.second(0)(c), d.second.at(0), 1e-14);
  }
}

TEST(ParameterGradient, SquaredLinearOutput) {
  // loss = (w*1 + b - 0)^2 at w=1, b=0.
  const NetworkParams p = linear_net(1.0, 0.0);
  Eigen::MatrixXd f(1, 1);
  f << 1.0;
  const JetPass pass = forward_jet(p, f, {});
  JetSeeds seeds;
  seeds.value = 2.0 * pass.value();
  NetworkGradient g = NetworkParams::zeros(p.layer_sizes);
  backward_jet(p, pass, seeds, g);
  EXPECT_DOUBLE_EQ(g.weights[0](0, 0), 2.0);
  EXPECT_DOUBLE_EQ(g.biases[0](0), 2.0);
}

TEST(ParameterGradient, ZeroAtInterpolationPoint) {
  std::mt19937_64 rng(8);
  const NetworkParams p = dhpm::testing::random_mlp(rng, 2, 10);
  Eigen::MatrixXd f(2, 4);
  for (Index c = 0; c < 4; ++c) f.col(c) = dhpm::testing::random_vector(rng, 2, -1, 1);
  const JetPass pass = forward_jet(p, f, {});
  const Eigen::RowVectorXd target = pass.value();
  JetSeeds seeds;
  seeds.value = 2.0 * (pass.value() - target) / 4.0;
  NetworkGradient g = NetworkParams::zeros(p.layer_sizes);
  backward_jet(p, pass, seeds, g);
  EXPECT_EQ(g.flattened().norm(), 0.0);
}

TEST(ParameterGradient, InputAdjointMatchesDifferences) {
  std::mt19937_64 rng(21);
  const NetworkParams p = dhpm::testing::random_mlp(rng, 3, 12);
  Eigen::MatrixXd f(3, 2);
  f.col(0) = dhpm::testing::random_vector(rng, 3, -1, 1);
  f.col(1) = dhpm::testing::random_vector(rng, 3, -1, 1);
  // L = sum over columns of u + 0.3 u_0 + 0.7 u_00
  auto loss = [&](const Eigen::MatrixXd& ff) {
    const JetPass q = forward_jet(p, ff, {{0}, {0}});
    return (q.value() + 0.3 * q.first(0) + 0.7 * q.second(0)).sum();
  };
  const JetPass pass = forward_jet(p, f, {{0}, {0}});
  JetSeeds seeds;
  seeds.value = Eigen::RowVectorXd::Ones(2);
  seeds.first = {Eigen::RowVectorXd::Constant(2, 0.3)};
  seeds.second = {Eigen::RowVectorXd::Constant(2, 0.7)};
  NetworkGradient g = NetworkParams::zeros(p.layer_sizes);
  Eigen::MatrixXd adj;
  backward_jet(p, pass, seeds, g, &adj);
  ASSERT_EQ(adj.rows(), 3);
  ASSERT_EQ(adj.cols(), 2);
  for (Index r = 0; r < 3; ++r) {
    for (Index c = 0; c < 2; ++c) {
      auto along = [&](double v) {
        Eigen::MatrixXd ff = f;
        ff(r, c) = v;
        return loss(ff);
      };
      EXPECT_LT(rel_diff(adj(r, c), central_first(along, f(r, c), 1e-4), 1e-3), 1e-5);
    }
  }
}

TEST(ParameterGradient, TwoNetworkResidualLossMatchesDifferences) {
  // Both networks, 5 collocation points and 4 measurements; every parameter checked.
  std::mt19937_64 rng(17);
  for (ScenarioTag tag : {ScenarioTag::InputGen, ScenarioTag::ParamGen, ScenarioTag::DomainGen}) {
    DhpModel model = DhpModel::create(Scenario{tag}, 6, 2, rng());
    Eigen::VectorXd flat = model.flattened();
    flat += 0.1 * dhpm::testing::random_vector(rng, flat.size(), -1, 1);
    model.assign_from(flat);

    const auto spec = random_periodic(rng(), tag == ScenarioTag::DomainGen ? 1.3 : 1.0);
    const FunctionContext ctx = make_context(spec, {2e-3, 4e-3});
    CollocationBatch colloc{lhs_sample(5, {{0.0, spec.length}, {0.0, 10.0}}, rng()), ctx};
    DataBatch data{lhs_sample(4, {{0.0, spec.length}, {0.0, 10.0}}, rng()),
                   dhpm::testing::random_vector(rng, 4, -0.3, 0.3).transpose(), ctx};

    const LossGradient lg = loss_gradient(model, data, colloc);
    EXPECT_EQ(lg.loss, total_loss(model, data, colloc));
    const double scale = lg.gradient.cwiseAbs().maxCoeff();
    const double h = 1e-4;
    for (Index k = 0; k < flat.size(); ++k) {
      auto along = [&](double v) {
        DhpModel m = model;
        Eigen::VectorXd f = flat;
        f(k) = v;
        m.assign_from(f);
        return total_loss(m, data, colloc).total;
      };
      const double fd = central_first(along, flat(k), h);
      EXPECT_LT(rel_diff(lg.gradient(k), fd, 1e-2 * scale), 1e-4)
          << "parameter " << k << " of " << flat.size() << " (" << to_string(tag) << ")";
    }
  }
}

TEST(ParameterGradient, RequireFiniteLoss) {
  EXPECT_NO_THROW(require_finite_loss(1.0, "x"));
  EXPECT_THROW(require_finite_loss(std::nan(""), "x"), NumericalError);
  EXPECT_THROW(require_finite_loss(INFINITY, "x"), NumericalError);
}
