#include <gtest/gtest.h>

#include "dhpm/errors.hpp"
#include "dhpm/evaluation.hpp"

using namespace dhpm;
using Eigen::Index;

TEST(RelativeL2, Basics) {
  const Eigen::MatrixXd ref = Eigen::MatrixXd::Random(4, 3);
  EXPECT_EQ(relative_l2_error(ref, ref), 0.0);
  EXPECT_DOUBLE_EQ(relative_l2_error(Eigen::Vector2d(3, 4), Eigen::Vector2d(3, 0)), 0.8);
  EXPECT_DOUBLE_EQ(relative_l2_error(ref, Eigen::MatrixXd::Zero(4, 3)), 1.0);
}

TEST(RelativeL2, ScaleInvariant) {
  const Eigen::MatrixXd ref = Eigen::MatrixXd::Random(5, 5);
  const Eigen::MatrixXd pred = ref + 0.1 * Eigen::MatrixXd::Random(5, 5);
  EXPECT_NEAR(relative_l2_error(ref, pred), relative_l2_error(7.5 * ref, 7.5 * pred), 1e-15);
}

TEST(RelativeL2, Rejects) {
  EXPECT_THROW(relative_l2_error(Eigen::MatrixXd::Ones(2, 2), Eigen::MatrixXd::Ones(2, 3)), ShapeError);
  EXPECT_THROW(relative_l2_error(Eigen::MatrixXd::Zero(2, 2), Eigen::MatrixXd::Ones(2, 2)), ValidationError);
}

TEST(PredictField, ShapeAndAgreementWithPointwise) {
  const DhpModel m = DhpModel::create(Scenario{ScenarioTag::DomainGen}, 16, 2, 3);
  const auto spec = InputFunctionSpec::cubic(1.2);
  const SolutionField f = predict_field(m, spec, {2e-3, 1e-3});
  ASSERT_EQ(f.values.rows(), 201);
  ASSERT_EQ(f.values.cols(), 101);
  EXPECT_EQ(f.grid, SpaceTimeGrid::standard(1.2));
  const SensorVector s = sensor_vector(spec);
  for (auto [i, j] : {std::pair<Index, Index>{0, 0}, {57, 33}, {200, 100}}) {
    const double direct =
        predict_state(m, assemble_features(m.scenario, f.grid.x(i), f.grid.t(j), s, {{}, {}, 1.2}));
    EXPECT_NEAR(f.values(i, j), direct, 1e-13);
  }
}

TEST(EvaluateOnFunction, UntrainedModelErrorOrderOne) {
  for (std::uint64_t seed : {1u, 2u, 3u}) {
    const DhpModel m = DhpModel::create(Scenario{}, 100, 3, seed);
    const FunctionEvaluation ev = evaluate_on_function(m, random_periodic(seed + 10), {1e-3, 1e-3});
    EXPECT_GT(ev.error, 0.3);
    EXPECT_LT(ev.error, 30.0);
    EXPECT_EQ(ev.error, relative_l2_error(ev.reference.values, ev.predicted.values));
  }
}

TEST(HiddenField, ExactHiddenMapGivesZero) {
  DhpModel m = DhpModel::create(Scenario{}, 20, 2, 5);
  const double D = 3e-3;
  m.n_hid = NetworkParams::zeros({5, 1});
  m.n_hid.weights[0](0, 4) = D;  // N_hid(x, t, u, p, q) = D q
  const HiddenFieldComparison h = hidden_field_comparison(m, random_periodic(4), {D, 0.0});
  EXPECT_EQ(h.true_field.rows(), 201);
  EXPECT_EQ(h.true_field.cols(), 101);
  EXPECT_EQ(h.learned_field.rows(), 201);
  EXPECT_GT(h.true_field.norm(), 0.0);
  EXPECT_LT(h.error, 1e-14);
}

TEST(HiddenField, TruthUsesReactionTerm) {
  DhpModel m = DhpModel::create(Scenario{}, 20, 2, 6);
  m.n_hid = NetworkParams::zeros({5, 1});
  const auto spec = random_periodic(9);
  const auto a = hidden_field_comparison(m, spec, {1e-3, 0.0});
  const auto b = hidden_field_comparison(m, spec, {1e-3, 2e-3});
  const FunctionContext ctx = make_context(spec, {1e-3, 2e-3});
  Eigen::MatrixXd p(2, 1);
  p << 0.5, 2.0;
  const ResidualTerms r = residual_terms(m, p, ctx);
  // Grid node (100, 20) is x = 0.5, t = 2.
  EXPECT_NEAR(b.true_field(100, 20) - a.true_field(100, 20), 2e-3 * r.u(0) * r.u(0), 1e-15);
  EXPECT_EQ(b.error, 1.0);  // learned field is identically zero
}

TEST(HiddenField, MeanOverFunctions) {
  const DhpModel m = DhpModel::create(Scenario{}, 20, 2, 8);
  std::vector<FunctionCase> cases;
  double sum = 0.0;
  for (std::uint64_t s = 0; s < 3; ++s) {
    cases.push_back({"f" + std::to_string(s), random_periodic(20 + s), {1e-3, 1e-3}});
    sum += hidden_field_comparison(m, cases.back().spec, cases.back().params).error;
  }
  EXPECT_DOUBLE_EQ(mean_hidden_field_error(m, cases, 1), sum / 3.0);
  EXPECT_EQ(mean_hidden_field_error(m, cases, 1), mean_hidden_field_error(m, cases, 3));
  EXPECT_THROW(mean_hidden_field_error(m, {}), ValidationError);
}

TEST(Report, SingletonAndStatistics) {
  const EvalReport one = EvalReport::from_errors({{"a", 0.25}});
  EXPECT_EQ(one.mean, 0.25);
  EXPECT_EQ(one.std, 0.0);
  const EvalReport two = EvalReport::from_errors({{"a", 1.0}, {"b", 3.0}});
  EXPECT_EQ(two.mean, 2.0);
  EXPECT_EQ(two.std, 1.0);  // population convention
  const auto j = to_json(two);
  EXPECT_EQ(j.at("mean").get<double>(), 2.0);
  EXPECT_EQ(j.at("per_function").size(), 2u);
}

TEST(Report, ErrorDistributionThreadsAgree) {
  const DhpModel m = DhpModel::create(Scenario{}, 30, 2, 1);
  std::vector<FunctionCase> cases;
  for (int i = 0; i < 4; ++i) cases.push_back({std::to_string(i), random_periodic(i), {1e-3, 1e-3}});
  const EvalReport a = error_distribution(m, cases, 1);
  const EvalReport b = error_distribution(m, cases, 3);
  EXPECT_EQ(a.per_function_errors, b.per_function_errors);
  EXPECT_EQ(a.per_function_errors[2].first, "2");
  EXPECT_THROW(error_distribution(m, {}, 1), ValidationError);
}

TEST(Sweep, GridsAndShape) {
  const auto d = sweep_d_values();
  ASSERT_EQ(d.size(), 21u);
  EXPECT_EQ(d.front(), 1e-3);
  EXPECT_EQ(d.back(), 5e-3);
  EXPECT_NEAR(d[1] - d[0], 2e-4, 1e-18);
  EXPECT_EQ(sweep_k_values_published(), (std::vector<double>{2e-4, 4e-4}));
  EXPECT_EQ(sweep_k_values_in_range(), (std::vector<double>{2e-3, 4e-3}));

  const DhpModel m = DhpModel::create(Scenario{ScenarioTag::ParamGen}, 10, 1, 2);
  const std::vector<double> ds{1e-3, 3e-3, 6e-3};
  const SweepTable t = parameter_sweep(m, ds, {2e-4, 4e-3}, {random_periodic(1)},
                                       ParameterBox{1e-3, 5e-3, 1e-3, 5e-3});
  EXPECT_EQ(t.mean_error.rows(), 3);
  EXPECT_EQ(t.mean_error.cols(), 2);
  EXPECT_TRUE(t.extrapolated(0, 0));   // K below the box
  EXPECT_FALSE(t.extrapolated(1, 1));  // inside
  EXPECT_TRUE(t.extrapolated(2, 1));   // D above the box
  EXPECT_THROW(parameter_sweep(DhpModel::create(Scenario{}, 4, 1, 1), ds, {1e-3}, {random_periodic(1)}),
               ValidationError);
}
