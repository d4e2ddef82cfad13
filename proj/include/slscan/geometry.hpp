#pragma once

#include <Eigen/Core>
#include <Eigen/Geometry>

#include <string>
#include <vector>

namespace slscan {

using Vec2 = Eigen::Vector2d;
using Vec3 = Eigen::Vector3d;
using Vec4 = Eigen::Vector4d;
using Mat3 = Eigen::Matrix3d;
using Mat4 = Eigen::Matrix4d;
using Mat34 = Eigen::Matrix<double, 3, 4>;

// Continuous pixel coordinates. Pixel (i, j) covers [i, i+1) x [j, j+1), so
// its center is (i + 0.5, j + 0.5).
using PixelPoint = Vec2;
// Scene units are millimetres throughout.
using WorldPoint = Vec3;

// Brown-Conrady radial-tangential model, stored in the conventional
// k1, k2, p1, p2, k3 order.
struct DistortionCoeffs {
  double k1 = 0.0;
  double k2 = 0.0;
  double p1 = 0.0;
  double p2 = 0.0;
  double k3 = 0.0;

  bool is_zero() const noexcept { return k1 == 0 && k2 == 0 && p1 == 0 && p2 == 0 && k3 == 0; }
  bool is_finite() const noexcept;
  friend bool operator==(const DistortionCoeffs&, const DistortionCoeffs&) = default;
};

// Pinhole intrinsics for a camera or a projector (a projector is modelled as
// a camera with the light running backwards).
struct CameraModel {
  double fx = 1.0;
  double fy = 1.0;
  double cx = 0.0;
  double cy = 0.0;
  double skew = 0.0;
  DistortionCoeffs dist;
  int width = 1;
  int height = 1;

  Mat3 K() const;
  Mat3 K_inverse() const;

  // Throws InvalidArgument on fx <= 0, fy <= 0, non-finite values or a
  // non-positive image size. A principal point outside the sensor is legal
  // and only reported through the returned warnings.
  std::vector<std::string> validate() const;

  Vec2 normalized_to_pixel(const Vec2& xy) const;
  Vec2 pixel_to_normalized(const Vec2& uv) const;

  friend bool operator==(const CameraModel&, const CameraModel&) = default;
};

CameraModel camera_from_matrix(const Mat3& K, int width, int height, const DistortionCoeffs& dist = {});

// x_out = R * x_in + t.
struct RigidTransform {
  Mat3 R = Mat3::Identity();
  Vec3 t = Vec3::Zero();

  static RigidTransform identity() { return {}; }
  static RigidTransform from_matrix(const Mat4& m);

  Vec3 apply(const Vec3& x) const { return R * x + t; }
  Vec3 operator*(const Vec3& x) const { return apply(x); }
  Mat4 matrix() const;

  // R^T R = I and det R = +1 within tol.
  bool is_valid(double tol = 1e-9) const;
};

// compose(a, b) * x == a * (b * x)
RigidTransform compose(const RigidTransform& a, const RigidTransform& b);
RigidTransform operator*(const RigidTransform& a, const RigidTransform& b);
RigidTransform invert(const RigidTransform& a);

// Closest proper rotation (Frobenius norm) to an arbitrary 3x3 matrix.
Mat3 nearest_rotation(const Mat3& m);
Mat3 rotation_about(const Vec3& axis, double angle_rad);
// Rotation about an axis through `point`.
RigidTransform rotation_about_line(const Vec3& point, const Vec3& direction, double angle_rad);
// Rotation angle of R in radians, in [0, pi].
double rotation_angle(const Mat3& R);
Mat3 rodrigues(const Vec3& omega);

// World-to-camera pose for a device at `eye` looking at `target`; image y
// points away from `up`.
RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up);

struct Projection {
  PixelPoint pixel;
  double depth = 0.0;  // Z in the device frame
};

// Throws BehindCamera when the point's device-frame Z is not positive.
Projection project(const CameraModel& model, const RigidTransform& pose, const WorldPoint& X);

Vec2 distort(const DistortionCoeffs& dist, const Vec2& normalized);
// Inverts distort() by damped Newton iteration to a 1e-9 residual; throws
// NoConvergence after 50 iterations.
Vec2 undistort(const DistortionCoeffs& dist, const Vec2& distorted);

// Distorted pixel -> ideal (distortion-free) pixel under the same intrinsics.
PixelPoint undistort_pixel(const CameraModel& model, const PixelPoint& pixel);
// Unit-length viewing ray in the device frame for a (distorted) pixel.
Vec3 pixel_ray(const CameraModel& model, const PixelPoint& pixel);

// A calibrated camera-projector pair in the triangulation convention: the
// camera frame is the world frame, and cam_to_proj maps camera coordinates
// into projector coordinates.
struct StereoRig {
  CameraModel camera;
  CameraModel projector;
  RigidTransform cam_to_proj;
};

}  // namespace slscan
