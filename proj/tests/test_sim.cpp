#include <algorithm>
#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dspace/config.hpp"
#include "dspace/csv.hpp"
#include "dspace/experiments.hpp"
#include "dspace/sim.hpp"

using namespace dspace;

namespace {

ScenarioConfig two_cameras() {
  ScenarioConfig sc;
  sc.left_pose.position = Vector3(-20, 0, 0);
  sc.left_pose.yaw = std::numbers::pi / 12;
  sc.right_pose.position = Vector3(20, 0, 0);
  sc.right_pose.yaw = -std::numbers::pi / 12;
  return sc;
}

}  // namespace

TEST(Truth, StaticObjectIsConstant) {
  ScenarioConfig sc = two_cameras();
  sc.objects = {{Vector3(1, 2, 100), Vector3::Zero()}};
  const GroundTruth t = generate_truth(sc);
  for (int k = 0; k < t.steps(); ++k) EXPECT_EQ(t.positions[k][0], Vector3(1, 2, 100));
}

TEST(Truth, ConstantVelocityAlongZ) {
  ScenarioConfig sc = two_cameras();
  sc.objects = {{Vector3(0, 0, 100), Vector3(0, 0, 6)}};
  sc.n_steps = 30;
  const GroundTruth t = generate_truth(sc);
  for (int k = 0; k < t.steps(); ++k) EXPECT_NEAR(t.positions[k][0].z(), 100.0 + 6.0 * k, 1e-12);
}

TEST(Truth, ReversalGivesSamePointSet) {
  ScenarioConfig sc = two_cameras();
  sc.objects = {{Vector3(-5, 3, 90), Vector3(0.5, -0.25, 2)}};
  sc.n_steps = 11;
  const GroundTruth fwd = generate_truth(sc);
  ScenarioConfig rev = sc;
  rev.objects[0].position = fwd.positions.back()[0];
  rev.objects[0].velocity = -sc.objects[0].velocity;
  const GroundTruth back = generate_truth(rev);
  for (int k = 0; k < sc.n_steps; ++k)
    EXPECT_LT((fwd.positions[k][0] - back.positions[sc.n_steps - 1 - k][0]).norm(), 1e-12);
}

TEST(Observations, NoiselessEqualProjections) {
  ScenarioConfig sc = two_cameras();
  sc.objects = {{Vector3(0, 0, 100), Vector3(0.5, 0, 1)}, {Vector3(10, -10, 150), Vector3::Zero()}};
  sc.noise_variance = Vector2::Constant(1e-30);
  const GroundTruth t = generate_truth(sc);
  const std::vector<Scan> scans = generate_observations(t, sc, 4);
  ASSERT_EQ(scans.size(), 2u * sc.n_steps);
  for (const Scan& s : scans) {
    ASSERT_EQ(s.observations.size(), 2u);
    const ProjectiveCamera cam = sc.camera(s.camera);
    for (const Observation& z : s.observations) {
      double best = 1e300;
      for (const Vector3& x : t.positions[s.time]) best = std::min(best, (z.z - project(cam, x)).norm());
      EXPECT_LT(best, 1e-9);
    }
  }
}

TEST(Observations, ClutterCountAndDetectionRate) {
  ScenarioConfig sc = two_cameras();
  sc.n_steps = 500;
  sc.clutter_lambda = 10.0;
  const GroundTruth empty = generate_truth(sc);
  const std::vector<Scan> clutter = generate_observations(empty, sc, 1);
  double total = 0.0;
  for (const Scan& s : clutter) total += double(s.observations.size());
  const double mean = total / double(clutter.size());
  EXPECT_GE(mean, 9.4);
  EXPECT_LE(mean, 10.6);

  ScenarioConfig det = two_cameras();
  det.n_steps = 1000;
  det.p_detection = 0.95;
  for (int k = 0; k < 5; ++k) det.objects.push_back({Vector3(-20 + 10 * k, 0, 150), Vector3::Zero()});
  const std::vector<Scan> scans = generate_observations(generate_truth(det), det, 2);
  double detections = 0.0;
  for (const Scan& s : scans) detections += double(s.observations.size());
  const double rate = detections / (2.0 * 1000 * 5);
  EXPECT_GE(rate, 0.94);
  EXPECT_LE(rate, 0.96);
}

TEST(Observations, AlternatingCameras) {
  EXPECT_EQ(cameras_at(SyncMode::Alternating, 0), std::vector<Side>{Side::Left});
  EXPECT_EQ(cameras_at(SyncMode::Alternating, 1), std::vector<Side>{Side::Right});
  EXPECT_EQ(cameras_at(SyncMode::Synchronous, 3).size(), 2u);
}

TEST(MonteCarlo, SingleRunAndSeeds) {
  auto fn = [](int, std::uint64_t seed) {
    Rng rng(seed);
    return std::normal_distribution<double>()(rng);
  };
  const auto one = monte_carlo(1, 5, fn);
  EXPECT_EQ(*one.runs[0], fn(0, run_seed(5, 0)));
  const auto a = monte_carlo(6, 5, fn), b = monte_carlo(6, 5, fn);
  for (int r = 0; r < 6; ++r) EXPECT_EQ(*a.runs[r], *b.runs[r]);
  const SeriesSummary s = summarise_series({{2.0, 2.0}, {2.0, 2.0}, {2.0, 2.0}});
  EXPECT_EQ(s.mean, (std::vector<double>{2.0, 2.0}));
  EXPECT_EQ(s.sd, (std::vector<double>{0.0, 0.0}));
}

TEST(MonteCarlo, FailingRunsAreRecorded) {
  const auto r = monte_carlo(3, 1, [](int i, std::uint64_t) {
    if (i == 1) throw Error(ErrorCode::NumericalDegeneracy, "boom");
    return i;
  });
  EXPECT_EQ(r.succeeded(), 2);
  ASSERT_EQ(r.failures.size(), 1u);
  EXPECT_NE(r.failures[0].find("run 1"), std::string::npos);
}

TEST(Config, PresetsLoadAndRoundTrip) {
  for (const std::string& name : list_presets()) {
    const ExperimentConfig c = load_preset(name);
    const ExperimentConfig again = parse_config(to_json(c));
    EXPECT_EQ(config_hash(c), config_hash(again)) << name;
  }
  EXPECT_THROW(load_preset("no-such-preset"), Error);
}

TEST(Config, UnknownKeyNamesItsPath) {
  try {
    parse_config_text(R"({"scenario": {"n_step": 3}})");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("n_step"), std::string::npos);
  }
}

TEST(Config, SyntaxErrorReportsPosition) {
  try {
    parse_config_text("{\n  \"seed\": ,\n}");
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ConfigError);
    EXPECT_NE(std::string(e.what()).find("line"), std::string::npos);
  }
}

TEST(Csv, DoublesRoundTrip) {
  for (double v : {0.1, 1.0 / 3.0, -2.5e-300, 123456789.123456789})
    EXPECT_EQ(std::stod(format_double(v)), v);
  CsvWriter w({"a", "b"});
  w.cell(1).cell(2.5).end_row();
  EXPECT_EQ(w.text(), "a,b\n1,2.5\n");
  w.cell(1);
  EXPECT_THROW(w.end_row(), Error);
}

TEST(Experiments, TrendSlope) {
  EXPECT_NEAR(trend_slope({3.0, 2.0, 1.0, 0.0}), -1.0, 1e-14);
  EXPECT_NEAR(trend_slope({5.0, 5.0, 5.0}), 0.0, 1e-14);
}
