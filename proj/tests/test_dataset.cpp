#include <gtest/gtest.h>

#include <cmath>
#include <set>

#include "dhpm/config.hpp"
#include "dhpm/dataset.hpp"
#include "dhpm/errors.hpp"
#include "dhpm/parallel.hpp"

using namespace dhpm;
using Eigen::Index;

TEST(Sensors, EndpointsZeroAndEvenSpacing) {
  for (double L : {1.0, 1.1, 1.5}) {
    const SensorVector s = sensor_vector(random_periodic(4, L));
    ASSERT_EQ(s.values.size(), 50);
    EXPECT_EQ(s.values(0), 0.0);
    EXPECT_EQ(s.values(49), 0.0);
    EXPECT_EQ(s.coords(0), 0.0);
    EXPECT_EQ(s.coords(49), L);
    for (Index k = 1; k < 50; ++k) {
      EXPECT_GT(s.coords(k), s.coords(k - 1));
      EXPECT_NEAR(s.coords(k) - s.coords(k - 1), L / 49, 1e-15);
    }
  }
}

TEST(Sensors, ClosedFormNearMidpoint) {
  const SensorVector s = sensor_vector(InputFunctionSpec::periodic({0.4, 0, 0, 0, 0}));
  Index k = 0;
  (s.coords.array() - 0.5).abs().minCoeff(&k);
  EXPECT_NEAR(s.values(k), 0.4 * std::sin(M_PI * s.coords(k)), 1e-16);
}

TEST(Lhs, OneSamplePerStratum) {
  for (std::uint64_t seed = 0; seed < 20; ++seed) {
    const Eigen::MatrixXd p = lhs_sample(4, {{0.0, 1.0}}, seed);
    std::set<int> strata;
    for (Index i = 0; i < 4; ++i) strata.insert(std::min(3, static_cast<int>(p(0, i) * 4)));
    EXPECT_EQ(strata.size(), 4u);
  }
}

TEST(Lhs, WithinBoundsAndCentered) {
  const Eigen::MatrixXd p = lhs_sample(1000, {{0.0, 1.5}, {0.0, 10.0}}, 99);
  ASSERT_EQ(p.rows(), 2);
  ASSERT_EQ(p.cols(), 1000);
  EXPECT_GE(p.row(0).minCoeff(), 0.0);
  EXPECT_LE(p.row(0).maxCoeff(), 1.5);
  EXPECT_GE(p.row(1).minCoeff(), 0.0);
  EXPECT_LE(p.row(1).maxCoeff(), 10.0);
  // +-0.02 of the midpoint on the unit scale.
  EXPECT_NEAR(p.row(0).mean() / 1.5, 0.5, 0.02);
  EXPECT_NEAR(p.row(1).mean() / 10.0, 0.5, 0.02);
}

TEST(Lhs, Validation) {
  EXPECT_THROW(lhs_sample(0, {{0.0, 1.0}}, 1), ValidationError);
  EXPECT_THROW(lhs_sample(3, {{1.0, 1.0}}, 1), ValidationError);
  EXPECT_THROW(lhs_sample(3, {}, 1), ValidationError);
  EXPECT_EQ(lhs_sample(30, {{0, 1}, {2, 3}}, 5), lhs_sample(30, {{0, 1}, {2, 3}}, 5));
}

TEST(Measurements, ExhaustionCoversGridOnce) {
  const SolutionField f = ftcs_solve({1e-3, 1e-3}, random_periodic(1), SpaceTimeGrid::standard());
  const MeasurementSet m = sample_measurements(f, 20301, 3);
  std::set<std::pair<Index, Index>> seen(m.indices.begin(), m.indices.end());
  EXPECT_EQ(seen.size(), 20301u);
  EXPECT_THROW(sample_measurements(f, 20302, 3), ValidationError);
  EXPECT_THROW(sample_measurements(f, 0, 3), ValidationError);
}

TEST(Measurements, DistinctReproducibleAndExact) {
  const SolutionField f = ftcs_solve({1e-3, 1e-3}, random_periodic(2), SpaceTimeGrid::standard());
  const MeasurementSet m = sample_measurements(f, 1000, 11);
  EXPECT_NEAR(1000.0 / static_cast<double>(f.grid.size()), 0.049, 5e-4);
  std::set<std::pair<Index, Index>> seen(m.indices.begin(), m.indices.end());
  EXPECT_EQ(seen.size(), 1000u);
  for (std::size_t k = 0; k < m.size(); ++k) {
    EXPECT_EQ(m.values(static_cast<Index>(k)), f.values(m.indices[k].first, m.indices[k].second));
  }
  EXPECT_EQ(sample_measurements(f, 1000, 11).indices, m.indices);
  EXPECT_NE(sample_measurements(f, 1000, 12).indices, m.indices);
}

TEST(Collocation, InsideDomain) {
  const FunctionContext ctx = make_context(InputFunctionSpec::quadratic(1.4), {1e-3, 1e-3});
  const CollocationBatch c = draw_collocation(ctx, 1000, 8);
  EXPECT_EQ(c.points.cols(), 1000);
  EXPECT_LE(c.points.row(0).maxCoeff(), 1.4);
  EXPECT_LE(c.points.row(1).maxCoeff(), 10.0);
  EXPECT_GE(c.points.minCoeff(), 0.0);
}

TEST(BuildDataset, FullScaleInputGenCounts) {
  const TrainConfig c = preset("inputgen-paper");
  const auto records = build_dataset(c);
  ASSERT_EQ(records.size(), 200u);
  std::size_t points = 0;
  for (const auto& r : records) points += r.measurements.size();
  EXPECT_EQ(points, 200000u);
}

TEST(BuildDataset, FullScaleRecordCounts) {
  EXPECT_EQ(preset("paramgen-paper").record_count(), 1800);
  EXPECT_EQ(preset("paramgen-paper").settings().size(), 9u);
  EXPECT_EQ(preset("domaingen-paper").record_count(), 1200);
  EXPECT_EQ(preset("domaingen-paper").settings().size(), 6u);
}

TEST(BuildDataset, SettingsBlocksAndDeterminism) {
  TrainConfig c = preset("desk-small", ScenarioTag::ParamGen);
  c.n_fun = 3;
  c.n_data = 50;
  const auto a = build_dataset(c, 1);
  const auto b = build_dataset(c, 2);
  ASSERT_EQ(a.size(), 12u);
  const auto settings = c.settings();
  for (std::size_t i = 0; i < a.size(); ++i) {
    EXPECT_EQ(a[i].params, settings[i / 3].params);
    EXPECT_EQ(a[i].spec, b[i].spec);
    EXPECT_EQ(a[i].field.values, b[i].field.values);
    EXPECT_EQ(a[i].measurements.indices, b[i].measurements.indices);
    EXPECT_EQ(a[i].id, static_cast<int>(i));
  }
  // Every record has its own input function.
  std::set<std::string> names;
  for (const auto& r : a) names.insert(r.spec.describe());
  EXPECT_EQ(names.size(), a.size());
}

TEST(BuildDataset, DomainGenLengths) {
  TrainConfig c = preset("desk-small", ScenarioTag::DomainGen);
  c.n_fun = 2;
  c.n_data = 10;
  const auto recs = build_dataset(c);
  ASSERT_EQ(recs.size(), 6u);
  EXPECT_EQ(recs[0].length, 1.0);
  EXPECT_EQ(recs[2].length, 1.25);
  EXPECT_EQ(recs[5].length, 1.5);
  EXPECT_EQ(recs[5].field.grid.x(200), 1.5);
  EXPECT_EQ(recs[5].spec.length, 1.5);
}

TEST(BuildDataset, FailureNamesRecord) {
  TrainConfig c = preset("desk-small");
  c.n_fun = 2;
  c.pde.reaction = 0.5;  // blows up before t = 10 for larger amplitudes
  try {
    build_dataset(c);
    GTEST_SKIP() << "no blow-up for these draws";
  } catch (const NumericalError& e) {
    EXPECT_NE(std::string(e.what()).find("record "), std::string::npos);
  }
}

TEST(TestFunctions, DisjointFromTraining) {
  const TrainConfig c = preset("desk-small");
  const auto tests = test_functions(c.seed, 20, 1.0);
  ASSERT_EQ(tests.size(), 20u);
  for (int i = 0; i < c.n_fun; ++i) {
    const auto train = random_periodic(derive_seed(c.seed, seed_stream::kInputFunction, i));
    for (const auto& t : tests) EXPECT_NE(t, train);
  }
}

TEST(Seeds, StreamsDiffer) {
  EXPECT_NE(derive_seed(7, 1, 0), derive_seed(7, 2, 0));
  EXPECT_NE(derive_seed(7, 1, 0), derive_seed(7, 1, 1));
  EXPECT_NE(derive_seed(7, 1, 0, 1), derive_seed(7, 1, 1, 0));
  EXPECT_EQ(derive_seed(7, 3, 4, 5), derive_seed(7, 3, 4, 5));
}
