#include <cmath>
#include <numbers>

#include <gtest/gtest.h>

#include "dspace/calibration.hpp"
#include "dspace/resampling.hpp"
#include "dspace/sim.hpp"

using namespace dspace;

namespace {

ScenarioConfig desk_scenario(int steps = 12) {
  ScenarioConfig sc;
  sc.left_pose.position = Vector3(-20, 0, 0);
  sc.left_pose.yaw = std::numbers::pi / 12;
  sc.right_pose.position = Vector3(20, 0, 0);
  sc.right_pose.yaw = -std::numbers::pi / 12;
  sc.objects = {{Vector3(-25, 10, 130), Vector3(0.6, -0.2, 2.0)},
                {Vector3(20, -15, 150), Vector3(-0.5, 0.3, 2.5)},
                {Vector3(0, 20, 240), Vector3(0.3, -0.4, -2.5)}};
  sc.n_steps = steps;
  sc.p_detection = 0.95;
  sc.clutter_lambda = 10.0;
  return sc;
}

CalibrationModels small_models() {
  CalibrationModels m;
  m.phd.birth_weight = 0.001;
  m.phd.disparity_prior = DisparityPrior{5.5, 2.0};
  m.phd.velocity_prior = VelocityPrior{Vector3::Zero(), Vector3(50, 50, 0.05)};
  m.phd.motion = MotionModel::constant_velocity(0.001);
  m.phd.max_components = 20;
  m.phd.move_particles = 100;
  m.phd.split_particles = 100;
  return m;
}

CalibrationPrior point_prior(const SensorState& s, int particles) {
  CalibrationPrior p;
  p.mean = s;
  p.particles = particles;
  return p;
}

void expect_same(const GaussianMixture& a, const GaussianMixture& b) {
  ASSERT_EQ(a.size(), b.size());
  EXPECT_EQ(a.frame, b.frame);
  for (std::size_t k = 0; k < a.size(); ++k) {
    EXPECT_EQ(a.components[k].weight, b.components[k].weight);
    EXPECT_EQ(a.components[k].state.mean, b.components[k].state.mean);
    EXPECT_EQ(a.components[k].state.covariance, b.components[k].state.covariance);
  }
}

}  // namespace

TEST(InitCalibration, SampleSpreadMatchesPrior) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  CalibrationPrior prior;
  prior.mean = SensorState::from_pose(sc.right_pose);
  prior.sd << 5, 5, 5, std::numbers::pi / 24, std::numbers::pi / 180, std::numbers::pi / 180;
  prior.particles = 1500;
  const Population pop = init_calibration(prior, rig, 3);
  ASSERT_EQ(pop.size(), 1500u);
  double total = 0.0;
  for (const auto& p : pop) total += p.weight;
  EXPECT_NEAR(total, 1.0, 1e-12);
  Vector6 mean = Vector6::Zero(), var = Vector6::Zero();
  for (const auto& p : pop) mean += p.s.as_vector() / 1500.0;
  for (const auto& p : pop) var += (p.s.as_vector() - mean).cwiseAbs2() / 1499.0;
  for (int a = 0; a < 6; ++a) EXPECT_NEAR(std::sqrt(var(a)), prior.sd(a), 0.1 * prior.sd(a));
}

TEST(InitCalibration, ZeroSpreadGivesCopies) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  const SensorState s = SensorState::from_pose(sc.right_pose);
  const Population pop = init_calibration(point_prior(s, 10), rig, 3);
  for (const auto& p : pop) EXPECT_EQ(p.s.as_vector(), s.as_vector());
}

TEST(JointUpdate, SingleParticleIsPlainPhdStep) {
  const ScenarioConfig sc = desk_scenario(6);
  const GroundTruth truth = generate_truth(sc);
  const std::vector<Scan> scans = generate_observations(truth, sc, 8);
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  const CalibrationModels models = small_models();
  Population pop = init_calibration(point_prior(SensorState::from_pose(sc.right_pose), 1), rig, 1);

  const CameraRig plain = CameraRig::non_rectified(sc.left_camera(), sc.right_camera());
  GaussianMixture mix{plain.frame_id(scans.front().camera), {}};
  int last = scans.front().time;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const double elapsed = (scans[i].time - last) * models.phd.motion.dt;
    last = scans[i].time;
    joint_update(pop, scans[i], elapsed, rig, models, 42, static_cast<int>(i));
    const FrameId target = plain.frame_id(scans[i].camera);
    mix = phd_step(mix, plain.frame(mix.frame), plain.frame(target), target, elapsed, scans[i].observations,
                   models.phd, phd_step_seed(42, static_cast<int>(i), 0))
              .mixture;
    EXPECT_EQ(pop[0].weight, 1.0);
    expect_same(pop[0].conditional, mix);
  }
}

TEST(JointUpdate, TrueGeometryWinsOverGrossError) {
  const ScenarioConfig sc = desk_scenario(10);
  const GroundTruth truth = generate_truth(sc);
  const std::vector<Scan> scans = generate_observations(truth, sc, 8);
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  const CalibrationModels models = small_models();
  const SensorState good = SensorState::from_pose(sc.right_pose);
  SensorState bad = good;
  bad.position.x() += 100.0;
  Population pop{SensorParticle(good, 0.5, rig), SensorParticle(bad, 0.5, rig)};
  int last = scans.front().time;
  for (std::size_t i = 0; i < scans.size(); ++i) {
    const double elapsed = (scans[i].time - last) * models.phd.motion.dt;
    last = scans[i].time;
    joint_update(pop, scans[i], elapsed, rig, models, 5, static_cast<int>(i));
    EXPECT_NEAR(pop[0].weight + pop[1].weight, 1.0, 1e-12);
  }
  EXPECT_GT(pop[0].weight, 0.99);
}

TEST(Resample, UniformWeightsAreKept) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  CalibrationPrior prior = point_prior(SensorState::from_pose(sc.right_pose), 8);
  prior.sd = Vector6::Constant(0.1);
  Population pop = init_calibration(prior, rig, 2);
  Rng rng(1);
  EXPECT_FALSE(resample(pop, 0.5, rig, rng));
}

TEST(Resample, DegenerateWeightsGiveCopies) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  CalibrationPrior prior = point_prior(SensorState::from_pose(sc.right_pose), 8);
  prior.sd = Vector6::Constant(0.1);
  Population pop = init_calibration(prior, rig, 2);
  for (auto& p : pop) p.weight = 0.0;
  pop[3].weight = 1.0;
  const Vector6 chosen = pop[3].s.as_vector();
  Rng rng(1);
  EXPECT_TRUE(resample(pop, 0.5, rig, rng));
  std::vector<double> w;
  for (const auto& p : pop) {
    EXPECT_EQ(p.s.as_vector(), chosen);
    w.push_back(p.weight);
  }
  EXPECT_NEAR(effective_sample_size(w), 8.0, 1e-12);
}

TEST(EstimateSensor, IdenticalAndSymmetric) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  const SensorState s = SensorState::from_pose(sc.right_pose);
  const Population same = init_calibration(point_prior(s, 5), rig, 1);
  const SensorEstimate e = estimate_sensor(same);
  EXPECT_LT((e.mean.as_vector() - s.as_vector()).norm(), 1e-14);
  EXPECT_LT(e.sd.norm(), 1e-7);

  Vector6 d;
  d << 2, -1, 3, 0.01, 0.002, -0.001;
  const Population pair{SensorParticle(SensorState::from_vector(s.as_vector() + d), 0.5, rig),
                        SensorParticle(SensorState::from_vector(s.as_vector() - d), 0.5, rig)};
  const SensorEstimate m = estimate_sensor(pair);
  EXPECT_LT((m.mean.as_vector() - s.as_vector()).norm(), 1e-12);
  EXPECT_LT((m.sd - d.cwiseAbs()).norm(), 1e-12);
}

TEST(EstimateSensor, PriorPopulationCentresOnPriorMean) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  CalibrationPrior prior = point_prior(SensorState::from_pose(sc.right_pose), 1500);
  prior.sd << 5, 5, 5, std::numbers::pi / 24, std::numbers::pi / 180, std::numbers::pi / 180;
  const SensorEstimate e = estimate_sensor(init_calibration(prior, rig, 7));
  for (int a = 0; a < 6; ++a)
    EXPECT_NEAR(e.mean.as_vector()(a), prior.mean.as_vector()(a), 3.0 * prior.sd(a) / std::sqrt(1500.0));
}

TEST(Calibrate, ZeroPriorSpreadStaysAtTruth) {
  const ScenarioConfig sc = desk_scenario(5);
  const GroundTruth truth = generate_truth(sc);
  const std::vector<Scan> scans = generate_observations(truth, sc, 3);
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  const SensorState s = SensorState::from_pose(sc.right_pose);
  const CalibrationResult r = calibrate(rig, scans, point_prior(s, 4), small_models(), 11);
  ASSERT_EQ(r.steps.size(), 5u);
  for (const auto& step : r.steps) EXPECT_LT((step.estimate.mean.as_vector() - s.as_vector()).norm(), 1e-12);
}

TEST(Resample, KernelShrinkageKeepsMeanAndSpread) {
  const ScenarioConfig sc = desk_scenario();
  const CalibrationRig rig(sc.left_camera(), sc.right_intrinsics);
  CalibrationPrior prior = point_prior(SensorState::from_pose(sc.right_pose), 4000);
  prior.sd << 5, 5, 5, 0.1, 0.02, 0.02;
  Population pop = init_calibration(prior, rig, 4);
  // Tilted weights force a resample and move the weighted mean off the prior mean.
  double total = 0.0;
  for (auto& p : pop) {
    p.weight = std::exp(0.6 * (p.s.position.x() - prior.mean.position.x()));
    total += p.weight;
  }
  for (auto& p : pop) p.weight /= total;
  const SensorEstimate before = estimate_sensor(pop);
  Rng rng(9);
  ASSERT_TRUE(resample(pop, 0.9, rig, rng, Vector6::Zero(), 0.5));
  const SensorEstimate after = estimate_sensor(pop);
  for (int a = 0; a < 6; ++a) {
    EXPECT_NEAR(after.mean.as_vector()(a), before.mean.as_vector()(a), 4.0 * before.sd(a) / std::sqrt(1000.0));
    EXPECT_NEAR(after.sd(a), before.sd(a), 0.15 * before.sd(a));
  }
  EXPECT_THROW(resample(pop, 0.9, rig, rng, Vector6::Zero(), 1.0), Error);
}
