#include <cmath>
#include <numbers>
#include <random>

#include <gtest/gtest.h>

#include "dspace/geometry.hpp"
#include "dspace/single_object.hpp"
#include "oracles.hpp"

using namespace dspace;

namespace {

ProjectiveCamera table1(const Vector3& c = Vector3::Zero(), double yaw = 0.0, double pitch = 0.0,
                        double roll = 0.0) {
  CameraPose pose;
  pose.position = c;
  pose.yaw = yaw;
  pose.pitch = pitch;
  pose.roll = roll;
  return build_camera(CameraIntrinsics::simulated(), pose);
}

ProjectiveCamera canonical() {
  return build_camera(CameraIntrinsics::from_pixels(1.0, 1.0, 0.0, 0.0), CameraPose{});
}

}  // namespace

TEST(Camera, Table1FocalLengthsInPixels) {
  const Matrix3 k = CameraIntrinsics::simulated().calibration_matrix();
  EXPECT_NEAR(k(0, 0), -8.0 / 8.9e-3, 1e-9);
  EXPECT_NEAR(k(1, 1), -8.0 / 9.0e-3, 1e-9);
  EXPECT_NEAR(k(0, 0), -898.88, 0.01);
  EXPECT_NEAR(k(1, 1), -888.89, 0.01);
}

TEST(Camera, OpticalAxisHitsPrincipalPoint) {
  const Vector2 uv = project(table1(), Vector3(0, 0, 100));
  EXPECT_NEAR(uv.x(), 400.0, 1e-12);
  EXPECT_NEAR(uv.y(), 300.0, 1e-12);
}

TEST(Camera, OffAxisPoint) {
  const Vector2 uv = project(table1(), Vector3(10, 0, 100));
  EXPECT_NEAR(uv.x(), 400.0 - 898.876404494 * 0.1, 1e-6);
  EXPECT_NEAR(uv.x(), 310.11, 0.01);
  EXPECT_NEAR(uv.y(), 300.0, 1e-12);
}

TEST(Camera, ThirdRowIsWorldToCameraZAxis) {
  const ProjectiveCamera cam = table1(Vector3(30, 0, 0), std::numbers::pi / 12);
  const Vector3 z_axis = cam.pose().rotation().col(2);
  EXPECT_LT((cam.matrix().row(2).head<3>().transpose() - z_axis).norm(), 1e-15);
  const ProjectiveCamera left = table1();
  for (int r = 0; r < 3; ++r) EXPECT_GT((cam.matrix().row(r) - left.matrix().row(r)).norm(), 1e-6);
}

TEST(Camera, MatchesIndependentAssembly) {
  std::mt19937_64 rng(11);
  std::uniform_real_distribution<double> angle(-0.5, 0.5), pos(-100, 100);
  for (int t = 0; t < 20; ++t) {
    const Vector3 c(pos(rng), pos(rng), pos(rng));
    const double yaw = angle(rng), pitch = angle(rng), roll = angle(rng);
    const ProjectiveCamera cam = table1(c, yaw, pitch, roll);
    const auto ref = oracle::Pinhole::table1(c, yaw, pitch, roll);
    EXPECT_LT((cam.matrix() - ref.matrix()).norm() / ref.matrix().norm(), 1e-13);
  }
}

TEST(Camera, ProjectionOnCameraPlaneThrows) {
  try {
    project(table1(), Vector3(10, 5, 0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::ProjectionSingular);
  }
}

TEST(Camera, ZeroPixelSizeRejected) {
  CameraIntrinsics k;
  k.pixel_size_u_um = 0.0;
  EXPECT_THROW(build_camera(k, CameraPose{}), Error);
}

TEST(DisparityFrame, CanonicalMatrix) {
  const auto [right, frame] = make_rectified_pair(canonical(), 1.0);
  Matrix4 expected;
  expected << 1, 0, 0, 0, 0, 1, 0, 0, 0, 0, 0, 1, 0, 0, 1, 0;
  EXPECT_EQ(frame.forward(), expected);
}

TEST(DisparityFrame, CanonicalPoints) {
  const DisparityFrame frame = make_rectified_pair(canonical(), 1.0).second;
  EXPECT_LT((to_disparity(frame, Vector3(0, 0, 2)) - Vector3(0, 0, 0.5)).norm(), 1e-15);
  EXPECT_LT((from_disparity(frame, Vector3(0, 0, 0.5)) - Vector3(0, 0, 2)).norm(), 1e-15);
  try {
    from_disparity(frame, Vector3(0.3, 0.2, 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::PointAtInfinity);
  }
}

TEST(DisparityFrame, DoublingBaselineDoublesDisparity) {
  const ProjectiveCamera cam = table1(Vector3(5, -3, 2), 0.2);
  const DisparityFrame f1 = make_rectified_pair(cam, 1.0).second;
  const DisparityFrame f2 = make_rectified_pair(cam, 2.0).second;
  std::mt19937_64 rng(5);
  std::uniform_real_distribution<double> u(-40, 40), z(60, 400);
  for (int i = 0; i < 100; ++i) {
    const Vector3 x = cam.pose().position + cam.pose().rotation() * Vector3(u(rng), u(rng), z(rng));
    const Vector3 a = to_disparity(f1, x), b = to_disparity(f2, x);
    EXPECT_NEAR(a.x(), b.x(), 1e-9);
    EXPECT_NEAR(a.y(), b.y(), 1e-9);
    EXPECT_NEAR(2.0 * a.z(), b.z(), 1e-9 * std::abs(b.z()));
  }
}

TEST(DisparityFrame, CompanionEqualsRectifiedPairFrame) {
  const ProjectiveCamera cam = table1(Vector3(20, 0, 0), -std::numbers::pi / 12);
  const DisparityFrame a = rectified_companion(cam, 1.0);
  const DisparityFrame b = make_rectified_pair(cam, 1.0).second;
  EXPECT_EQ(a.forward(), b.forward());
  EXPECT_EQ(a.inverse(), b.inverse());
}

TEST(DisparityFrame, RectifiedRightSharesRowsTwoAndThree) {
  const ProjectiveCamera left = table1(Vector3(3, 1, -2), 0.3, 0.1, -0.05);
  const ProjectiveCamera right = make_rectified_pair(left, 12.0).first;
  EXPECT_EQ(right.matrix().row(1), left.matrix().row(1));
  EXPECT_EQ(right.matrix().row(2), left.matrix().row(2));
  // The right matrix is that of a real camera shifted along the left x axis.
  const auto ref = oracle::Pinhole::table1(right.pose().position, 0.3, 0.1, -0.05);
  EXPECT_LT((right.matrix() - ref.matrix()).norm() / ref.matrix().norm(), 1e-12);
}

TEST(DisparityFrame, MatchesIndependentDisparity) {
  const ProjectiveCamera cam = table1(Vector3(-20, 4, 1), 0.25, -0.05, 0.02);
  const oracle::Disparity ref{oracle::Pinhole::table1(Vector3(-20, 4, 1), 0.25, -0.05, 0.02), -1.0};
  const DisparityFrame frame = rectified_companion(cam, -1.0);
  std::mt19937_64 rng(8);
  std::uniform_real_distribution<double> u(0, 800), v(0, 600), d(1.0, 20.0);
  for (int i = 0; i < 200; ++i) {
    const Vector3 y(u(rng), v(rng), d(rng));
    const Vector3 x = from_disparity(frame, y);
    EXPECT_LT((x - ref.to_x(y)).norm() / x.norm(), 1e-10);
    EXPECT_LT((to_disparity(frame, x) - ref.to_y(x)).norm() / y.norm(), 1e-10);
    EXPECT_TRUE(frame.in_front(y));
    EXPECT_GT(ref.depth(x), 0.0);
  }
}

TEST(DisparityFrame, CompositeAcrossCompanionsIsIdentity) {
  const double a = std::numbers::pi / 8;
  const CameraRig rig = CameraRig::non_rectified(table1(Vector3(100, 0, 0), -a), table1(Vector3(-100, 0, 0), a));
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-50, 50), z(150, 400);
  for (int i = 0; i < 200; ++i) {
    const Vector3 x(u(rng), u(rng), z(rng));
    const Vector3 yl = to_disparity(rig.frame_of(Side::Left), x);
    const Vector3 x1 = from_disparity(rig.frame_of(Side::Left), yl);
    const Vector3 yr = to_disparity(rig.frame_of(Side::Right), x1);
    const Vector3 x2 = from_disparity(rig.frame_of(Side::Right), yr);
    EXPECT_LT((x2 - x).norm() / x.norm(), 1e-9);
  }
}

TEST(DisparityFrame, ObservationMatrices) {
  const MatrixX hl = disparity_observation_matrix(Side::Left, false);
  const MatrixX hr = disparity_observation_matrix(Side::Right, true);
  EXPECT_EQ(hl.rows(), 2);
  EXPECT_EQ(hl.cols(), 3);
  EXPECT_EQ(hr.cols(), 6);
  EXPECT_EQ(hr(0, 2), 1.0);
  EXPECT_EQ(hl(0, 2), 0.0);
  EXPECT_EQ(hr.rightCols<3>().norm(), 0.0);
}
