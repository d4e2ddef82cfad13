#include "slscan/error.hpp"
#include "slscan/geometry.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <limits>
#include <numbers>
#include <random>

namespace slscan {
namespace {

constexpr double kPi = std::numbers::pi;

CameraModel unit_camera() {
  CameraModel m;
  m.fx = m.fy = 1.0;
  m.cx = m.cy = 0.0;
  m.width = m.height = 1;
  return m;
}

RigidTransform random_transform(std::mt19937_64& rng) {
  std::normal_distribution<double> n(0.0, 1.0);
  std::uniform_real_distribution<double> u(-100.0, 100.0);
  const Vec3 axis(n(rng), n(rng), n(rng));
  RigidTransform T;
  T.R = rotation_about(axis.normalized(), std::uniform_real_distribution<double>(-kPi, kPi)(rng));
  T.t = Vec3(u(rng), u(rng), u(rng));
  return T;
}

// Wide-angle camera at 1280 x 720 with the measured lens coefficients.
DistortionCoeffs measured_camera_dist() { return {0.54658, -20.200, -0.022032, 0.0082588, 211.11}; }
DistortionCoeffs measured_projector_dist() {
  return {-0.641035436, 12.4352939, -0.0608400958, -0.00344770205, 201.572896};
}

TEST(Project, IdentityUnitCamera) {
  const auto p = project(unit_camera(), RigidTransform::identity(), Vec3(0, 0, 1));
  EXPECT_DOUBLE_EQ(p.pixel.x(), 0.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 0.0);
  EXPECT_DOUBLE_EQ(p.depth, 1.0);
}

TEST(Project, FocalAndPrincipalPoint) {
  CameraModel m;
  m.fx = m.fy = 100.0;
  m.cx = 640.0;
  m.cy = 360.0;
  m.width = 1280;
  m.height = 720;
  const auto p = project(m, RigidTransform::identity(), Vec3(1, 0, 2));
  EXPECT_DOUBLE_EQ(p.pixel.x(), 690.0);
  EXPECT_DOUBLE_EQ(p.pixel.y(), 360.0);
  EXPECT_DOUBLE_EQ(p.depth, 2.0);
}

TEST(Project, MeasuredCameraOracle) {
  const Mat3 K = (Mat3() << 1440.38101, 0, 667.836875, 0, 1437.11605, 354.202552, 0, 0, 1).finished();
  const CameraModel m = camera_from_matrix(K, 1280, 720);
  RigidTransform T;
  T.R << 0.96523178, -0.06801648, 0.25239131, -0.05246011, 0.89550287, 0.4419531, -0.25607724,
      -0.43982765, 0.86079968;
  T.t = Vec3(-257.85891969, -53.58173962, 1944.10591591);
  const auto p = project(m, T, Vec3(100, 100, 100));
  // Frozen from a plain 3x4 multiply and divide.
  EXPECT_NEAR(p.pixel.x(), 562.8545116253314, 1e-9);
  EXPECT_NEAR(p.pixel.y(), 409.1173190874106, 1e-9);
  EXPECT_NEAR(p.depth, 1960.59539491, 1e-8);
}

TEST(Project, BehindCameraThrows) {
  try {
    project(unit_camera(), RigidTransform::identity(), Vec3(0, 0, -1));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::BehindCamera);
  }
  EXPECT_THROW(project(unit_camera(), RigidTransform::identity(), Vec3(1, 1, 0)), Error);
}

TEST(CameraModel, ValidateRejectsBadFocal) {
  CameraModel m = unit_camera();
  m.fx = 0.0;
  EXPECT_THROW(m.validate(), Error);
  m.fx = 1.0;
  m.height = 0;
  EXPECT_THROW(m.validate(), Error);
}

TEST(CameraModel, PrincipalPointOutsideSensorWarns) {
  CameraModel m = unit_camera();
  m.width = 100;
  m.height = 100;
  m.cx = 150.0;
  EXPECT_FALSE(m.validate().empty());
  m.cx = 50.0;
  m.cy = 50.0;
  EXPECT_TRUE(m.validate().empty());
}

TEST(CameraModel, PixelNormalizedRoundTrip) {
  CameraModel m;
  m.fx = 1200;
  m.fy = 1100;
  m.cx = 600;
  m.cy = 350;
  m.skew = 2.5;
  m.width = 1280;
  m.height = 720;
  const Vec2 uv(123.25, 456.75);
  const Vec2 back = m.normalized_to_pixel(m.pixel_to_normalized(uv));
  EXPECT_NEAR((back - uv).norm(), 0.0, 1e-10);
  EXPECT_NEAR((m.K() * m.K_inverse() - Mat3::Identity()).norm(), 0.0, 1e-12);
}

TEST(Distort, ZeroIsIdentity) {
  const Vec2 p = distort({}, Vec2(0.3, -0.2));
  EXPECT_DOUBLE_EQ(p.x(), 0.3);
  EXPECT_DOUBLE_EQ(p.y(), -0.2);
}

TEST(Distort, OriginIsFixed) {
  const Vec2 p = distort(measured_camera_dist(), Vec2::Zero());
  EXPECT_EQ(p, Vec2::Zero());
}

TEST(Distort, SingleRadialTerm) {
  DistortionCoeffs d;
  d.k1 = 0.1;
  const Vec2 p = distort(d, Vec2(0.5, 0.0));
  EXPECT_NEAR(p.x(), 0.5125, 1e-15);
  EXPECT_NEAR(p.y(), 0.0, 1e-15);
}

TEST(Distort, TangentialTerms) {
  DistortionCoeffs d;
  d.p1 = 0.01;
  d.p2 = 0.02;
  const double x = 0.3, y = 0.2, r2 = x * x + y * y;
  const Vec2 p = distort(d, Vec2(x, y));
  EXPECT_NEAR(p.x(), x + 2 * 0.01 * x * y + 0.02 * (r2 + 2 * x * x), 1e-15);
  EXPECT_NEAR(p.y(), y + 0.01 * (r2 + 2 * y * y) + 2 * 0.02 * x * y, 1e-15);
}

TEST(Undistort, ZeroIsIdentity) {
  const Vec2 p = undistort({}, Vec2(0.3, 0.4));
  EXPECT_DOUBLE_EQ(p.x(), 0.3);
  EXPECT_DOUBLE_EQ(p.y(), 0.4);
}

TEST(Undistort, SingleTermRoundTrip) {
  DistortionCoeffs d;
  d.k1 = 0.1;
  const Vec2 p = undistort(d, distort(d, Vec2(0.5, 0.0)));
  EXPECT_NEAR((p - Vec2(0.5, 0.0)).norm(), 0.0, 1e-9);
}

TEST(Undistort, MeasuredCoefficientsGrid) {
  const DistortionCoeffs d = measured_camera_dist();
  int n = 0;
  for (int i = 0; i < 10; ++i) {
    for (int j = 0; j < 10; ++j) {
      const double r = 0.39 * (i + 0.5) / 10.0;
      const double a = 2.0 * kPi * j / 10.0;
      const Vec2 p(r * std::cos(a), r * std::sin(a));
      const Vec2 q = distort(d, undistort(d, p));
      EXPECT_LT((q - p).norm(), 1e-9) << r << " " << a;
      const Vec2 u = undistort(d, distort(d, p));
      EXPECT_LT((u - p).norm(), 1e-9) << r << " " << a;
      ++n;
    }
  }
  EXPECT_EQ(n, 100);
}

TEST(Undistort, RandomScaledCoefficients) {
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> s(0.0, 1.0), rad(0.0, 0.45), ang(0.0, 2 * kPi);
  for (const auto& base : {measured_camera_dist(), measured_projector_dist()}) {
    for (int k = 0; k < 200; ++k) {
      const double f = s(rng);
      const DistortionCoeffs d{f * base.k1, f * base.k2, f * base.p1, f * base.p2, f * base.k3};
      const double r = rad(rng), a = ang(rng);
      const Vec2 p(r * std::cos(a), r * std::sin(a));
      EXPECT_LT((distort(d, undistort(d, p)) - p).norm(), 1e-9);
    }
  }
}

TEST(Undistort, NonFiniteInputThrows) {
  DistortionCoeffs d;
  d.k1 = -0.3;
  try {
    undistort(d, Vec2(std::numeric_limits<double>::quiet_NaN(), 0.0));
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::NoConvergence);
  }
}

TEST(Transform, ComposeIdentity) {
  std::mt19937_64 rng(1);
  const RigidTransform T = random_transform(rng);
  const RigidTransform C = compose(RigidTransform::identity(), T);
  EXPECT_NEAR((C.R - T.R).norm(), 0.0, 1e-15);
  EXPECT_NEAR((C.t - T.t).norm(), 0.0, 1e-15);
}

TEST(Transform, ComposeInverseIsIdentity) {
  std::mt19937_64 rng(2);
  for (int k = 0; k < 100; ++k) {
    const RigidTransform T = random_transform(rng);
    const RigidTransform C = compose(T, invert(T));
    EXPECT_NEAR((C.R - Mat3::Identity()).norm(), 0.0, 1e-12);
    EXPECT_NEAR(C.t.norm(), 0.0, 1e-12);
  }
}

TEST(Transform, QuarterTurnsMakeHalfTurn) {
  RigidTransform a;
  a.R = rotation_about(Vec3::UnitZ(), kPi / 2);
  const RigidTransform c = a * a;
  EXPECT_NEAR((c.R - rotation_about(Vec3::UnitZ(), kPi)).norm(), 0.0, 1e-15);
  EXPECT_NEAR(rotation_angle(c.R), kPi, 1e-12);
}

TEST(Transform, ComposeActsLeftToRight) {
  std::mt19937_64 rng(3);
  const RigidTransform a = random_transform(rng), b = random_transform(rng);
  const Vec3 x(1.0, -2.0, 3.0);
  EXPECT_NEAR((compose(a, b) * x - a * (b * x)).norm(), 0.0, 1e-10);
  EXPECT_NEAR((invert(a) * (a * x) - x).norm(), 0.0, 1e-10);
}

TEST(Transform, ValidityPreservedUnderComposition) {
  std::mt19937_64 rng(4);
  RigidTransform acc;
  for (int k = 0; k < 1000; ++k) {
    const RigidTransform T = random_transform(rng);
    EXPECT_TRUE(T.is_valid(1e-9));
    EXPECT_TRUE(invert(T).is_valid(1e-9));
    acc = acc * T;
    acc.R = nearest_rotation(acc.R);
    ASSERT_TRUE(acc.is_valid(1e-9));
  }
}

TEST(Transform, MatrixRoundTrip) {
  std::mt19937_64 rng(5);
  const RigidTransform T = random_transform(rng);
  const RigidTransform U = RigidTransform::from_matrix(T.matrix());
  EXPECT_EQ(U.R, T.R);
  EXPECT_EQ(U.t, T.t);
  EXPECT_FALSE((RigidTransform{2.0 * Mat3::Identity(), Vec3::Zero()}.is_valid()));
}

TEST(Rotation, NearestRotationOfReflection) {
  const Mat3 m = Vec3(1, 1, -1).asDiagonal();
  const Mat3 R = nearest_rotation(m);
  EXPECT_NEAR(R.determinant(), 1.0, 1e-12);
  EXPECT_NEAR((R.transpose() * R - Mat3::Identity()).norm(), 0.0, 1e-12);
}

TEST(Rotation, RodriguesMatchesAxisAngle) {
  const Vec3 w(0.2, -0.4, 0.1);
  EXPECT_NEAR((rodrigues(w) - rotation_about(w.normalized(), w.norm())).norm(), 0.0, 1e-14);
  EXPECT_NEAR((rodrigues(Vec3::Zero()) - Mat3::Identity()).norm(), 0.0, 0.0);
}

TEST(Rotation, AboutLineKeepsAxisPoints) {
  const Vec3 p(10, 20, 30), d = Vec3(1, 2, 2).normalized();
  const RigidTransform T = rotation_about_line(p, d, 0.7);
  EXPECT_NEAR((T * (p + 5.0 * d) - (p + 5.0 * d)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(rotation_angle(T.R), 0.7, 1e-12);
}

TEST(LookAt, TargetOnOpticalAxis) {
  const Vec3 eye(0, -800, 250), target(0, 0, 55);
  const RigidTransform T = look_at(eye, target, Vec3::UnitZ());
  EXPECT_TRUE(T.is_valid());
  const Vec3 c = T * target;
  EXPECT_NEAR(c.x(), 0.0, 1e-9);
  EXPECT_NEAR(c.y(), 0.0, 1e-9);
  EXPECT_NEAR(c.z(), (target - eye).norm(), 1e-9);
  // Image y points away from up.
  EXPECT_GT((T * (target - Vec3::UnitZ())).y(), 0.0);
}

TEST(BackProjection, RecoversPointWithoutDistortion) {
  std::mt19937_64 rng(11);
  CameraModel m;
  m.fx = 1440;
  m.fy = 1437;
  m.cx = 668;
  m.cy = 354;
  m.width = 1280;
  m.height = 720;
  std::uniform_real_distribution<double> u(-200, 200), z(400, 1500);
  for (int k = 0; k < 200; ++k) {
    const RigidTransform pose = random_transform(rng);
    const Vec3 Xc(u(rng), u(rng), z(rng));
    const Vec3 X = invert(pose) * Xc;
    const auto pr = project(m, pose, X);
    const Vec2 n = m.pixel_to_normalized(pr.pixel);
    const Vec3 back = invert(pose) * (pr.depth * Vec3(n.x(), n.y(), 1.0));
    EXPECT_LT((back - X).norm(), 1e-9);
  }
}

TEST(BackProjection, RecoversPointThroughUndistort) {
  std::mt19937_64 rng(12);
  CameraModel m;
  m.fx = 1440;
  m.fy = 1437;
  m.cx = 668;
  m.cy = 354;
  m.dist = {0.1, -0.2, 0.001, -0.002, 0.05};
  m.width = 1280;
  m.height = 720;
  std::uniform_real_distribution<double> u(-150, 150), z(600, 1500);
  for (int k = 0; k < 200; ++k) {
    const RigidTransform pose = random_transform(rng);
    const Vec3 Xc(u(rng), u(rng), z(rng));
    const Vec3 X = invert(pose) * Xc;
    const auto pr = project(m, pose, X);
    const Vec3 ray = pixel_ray(m, pr.pixel);
    const Vec3 back = invert(pose) * (pr.depth / ray.z() * ray);
    EXPECT_LT((back - X).norm(), 1e-6);
    const Vec2 ideal = undistort_pixel(m, pr.pixel);
    CameraModel pin = m;
    pin.dist = {};
    EXPECT_LT((ideal - project(pin, pose, X).pixel).norm(), 1e-6);
  }
}

}  // namespace
}  // namespace slscan
