#include "slscan/geometry.hpp"

#include "slscan/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <sstream>

namespace slscan {

bool DistortionCoeffs::is_finite() const noexcept {
  return std::isfinite(k1) && std::isfinite(k2) && std::isfinite(p1) && std::isfinite(p2) &&
         std::isfinite(k3);
}

Mat3 CameraModel::K() const {
  Mat3 k;
  k << fx, skew, cx, 0.0, fy, cy, 0.0, 0.0, 1.0;
  return k;
}

Mat3 CameraModel::K_inverse() const {
  Mat3 k;
  k << 1.0 / fx, -skew / (fx * fy), (skew * cy - cx * fy) / (fx * fy), 0.0, 1.0 / fy, -cy / fy, 0.0,
      0.0, 1.0;
  return k;
}

std::vector<std::string> CameraModel::validate() const {
  if (!(fx > 0.0) || !(fy > 0.0) || !std::isfinite(fx) || !std::isfinite(fy)) {
    throw Error(ErrorCode::InvalidArgument, "focal lengths must be positive and finite");
  }
  if (!std::isfinite(cx) || !std::isfinite(cy) || !std::isfinite(skew) || !dist.is_finite()) {
    throw Error(ErrorCode::InvalidArgument, "camera parameters must be finite");
  }
  if (width <= 0 || height <= 0) {
    throw Error(ErrorCode::InvalidArgument, "image size must be positive");
  }
  std::vector<std::string> warnings;
  if (cx < 0.0 || cx >= width || cy < 0.0 || cy >= height) {
    std::ostringstream msg;
    msg << "principal point (" << cx << ", " << cy << ") lies outside the " << width << "x"
        << height << " sensor";
    warnings.push_back(msg.str());
  }
  return warnings;
}

Vec2 CameraModel::normalized_to_pixel(const Vec2& xy) const {
  return {fx * xy.x() + skew * xy.y() + cx, fy * xy.y() + cy};
}

Vec2 CameraModel::pixel_to_normalized(const Vec2& uv) const {
  const double y = (uv.y() - cy) / fy;
  const double x = (uv.x() - cx - skew * y) / fx;
  return {x, y};
}

CameraModel camera_from_matrix(const Mat3& K, int width, int height, const DistortionCoeffs& dist) {
  CameraModel m;
  m.fx = K(0, 0);
  m.fy = K(1, 1);
  m.cx = K(0, 2);
  m.cy = K(1, 2);
  m.skew = K(0, 1);
  m.dist = dist;
  m.width = width;
  m.height = height;
  return m;
}

RigidTransform RigidTransform::from_matrix(const Mat4& m) {
  RigidTransform out;
  out.R = m.topLeftCorner<3, 3>();
  out.t = m.topRightCorner<3, 1>();
  return out;
}

Mat4 RigidTransform::matrix() const {
  Mat4 m = Mat4::Identity();
  m.topLeftCorner<3, 3>() = R;
  m.topRightCorner<3, 1>() = t;
  return m;
}

bool RigidTransform::is_valid(double tol) const {
  if (!R.allFinite() || !t.allFinite()) return false;
  const double ortho = (R.transpose() * R - Mat3::Identity()).cwiseAbs().maxCoeff();
  return ortho <= tol && std::abs(R.determinant() - 1.0) <= tol;
}

RigidTransform compose(const RigidTransform& a, const RigidTransform& b) {
  return {a.R * b.R, a.R * b.t + a.t};
}

RigidTransform operator*(const RigidTransform& a, const RigidTransform& b) { return compose(a, b); }

RigidTransform invert(const RigidTransform& a) {
  const Mat3 Rt = a.R.transpose();
  return {Rt, -(Rt * a.t)};
}

Mat3 nearest_rotation(const Mat3& m) {
  Eigen::JacobiSVD<Mat3> svd(m, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  return U * D * V.transpose();
}

Mat3 rotation_about(const Vec3& axis, double angle_rad) {
  return Eigen::AngleAxisd(angle_rad, axis.normalized()).toRotationMatrix();
}

RigidTransform rotation_about_line(const Vec3& point, const Vec3& direction, double angle_rad) {
  RigidTransform T;
  T.R = rotation_about(direction, angle_rad);
  T.t = point - T.R * point;
  return T;
}

double rotation_angle(const Mat3& R) {
  const double c = std::clamp((R.trace() - 1.0) * 0.5, -1.0, 1.0);
  // acos loses precision near 0; recover the small-angle case from the
  // antisymmetric part instead.
  const Vec3 w(R(2, 1) - R(1, 2), R(0, 2) - R(2, 0), R(1, 0) - R(0, 1));
  return std::atan2(0.5 * w.norm(), c);
}

Mat3 rodrigues(const Vec3& omega) {
  const double theta = omega.norm();
  if (theta < 1e-300) return Mat3::Identity();
  return Eigen::AngleAxisd(theta, omega / theta).toRotationMatrix();
}

RigidTransform look_at(const Vec3& eye, const Vec3& target, const Vec3& up) {
  const Vec3 z = (target - eye).normalized();
  const Vec3 x = z.cross(up).normalized();
  const Vec3 y = z.cross(x);
  RigidTransform T;
  T.R.row(0) = x.transpose();
  T.R.row(1) = y.transpose();
  T.R.row(2) = z.transpose();
  T.t = -(T.R * eye);
  return T;
}

Projection project(const CameraModel& model, const RigidTransform& pose, const WorldPoint& X) {
  const Vec3 Xc = pose.apply(X);
  if (!(Xc.z() > 0.0)) {
    throw Error(ErrorCode::BehindCamera, "point has non-positive depth in the device frame");
  }
  const Vec2 normalized(Xc.x() / Xc.z(), Xc.y() / Xc.z());
  const Vec2 d = model.dist.is_zero() ? normalized : distort(model.dist, normalized);
  return {model.normalized_to_pixel(d), Xc.z()};
}

Vec2 distort(const DistortionCoeffs& c, const Vec2& p) {
  const double x = p.x();
  const double y = p.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (c.k1 + r2 * (c.k2 + r2 * c.k3));
  return {x * radial + 2.0 * c.p1 * x * y + c.p2 * (r2 + 2.0 * x * x),
          y * radial + c.p1 * (r2 + 2.0 * y * y) + 2.0 * c.p2 * x * y};
}

namespace {

Eigen::Matrix2d distort_jacobian(const DistortionCoeffs& c, const Vec2& p) {
  const double x = p.x();
  const double y = p.y();
  const double r2 = x * x + y * y;
  const double radial = 1.0 + r2 * (c.k1 + r2 * (c.k2 + r2 * c.k3));
  const double dradial = 2.0 * c.k1 + r2 * (4.0 * c.k2 + 6.0 * c.k3 * r2);
  Eigen::Matrix2d J;
  J(0, 0) = radial + dradial * x * x + 2.0 * c.p1 * y + 6.0 * c.p2 * x;
  J(0, 1) = dradial * x * y + 2.0 * c.p1 * x + 2.0 * c.p2 * y;
  J(1, 0) = dradial * x * y + 2.0 * c.p1 * x + 2.0 * c.p2 * y;
  J(1, 1) = radial + dradial * y * y + 6.0 * c.p1 * y + 2.0 * c.p2 * x;
  return J;
}

}  // namespace

Vec2 undistort(const DistortionCoeffs& dist, const Vec2& target) {
  if (dist.is_zero()) return target;
  constexpr int kMaxIterations = 50;
  constexpr double kTolerance = 1e-9;
  Vec2 p = target;
  double residual = (distort(dist, p) - target).norm();
  for (int it = 0; it < kMaxIterations && residual > 1e-15 * (1.0 + target.norm()); ++it) {
    const Vec2 f = distort(dist, p) - target;
    const Eigen::Matrix2d J = distort_jacobian(dist, p);
    const double det = J.determinant();
    if (!std::isfinite(det) || std::abs(det) < 1e-300) break;
    const Vec2 step = J.inverse() * f;
    // Halve the step until the residual drops.
    double scale = 1.0;
    Vec2 candidate = p - step;
    double cand_res = (distort(dist, candidate) - target).norm();
    for (int h = 0; h < 30 && !(cand_res < residual); ++h) {
      scale *= 0.5;
      candidate = p - scale * step;
      cand_res = (distort(dist, candidate) - target).norm();
    }
    if (!(cand_res < residual)) break;
    p = candidate;
    residual = cand_res;
  }
  if (!(residual <= kTolerance)) {
    throw Error(ErrorCode::NoConvergence, "undistortion did not converge");
  }
  return p;
}

PixelPoint undistort_pixel(const CameraModel& model, const PixelPoint& pixel) {
  if (model.dist.is_zero()) return pixel;
  return model.normalized_to_pixel(undistort(model.dist, model.pixel_to_normalized(pixel)));
}

Vec3 pixel_ray(const CameraModel& model, const PixelPoint& pixel) {
  Vec2 n = model.pixel_to_normalized(pixel);
  if (!model.dist.is_zero()) n = undistort(model.dist, n);
  return Vec3(n.x(), n.y(), 1.0).normalized();
}

}  // namespace slscan
