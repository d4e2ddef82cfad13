#include "slscan/calibration.hpp"

#include "slscan/error.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace slscan::calib {
namespace {

using Vec6 = Eigen::Matrix<double, 6, 1>;

Vec6 v_row(const Mat3& H, int i, int j) {
  const Vec3 hi = H.col(i);
  const Vec3 hj = H.col(j);
  Vec6 v;
  v << hi(0) * hj(0), hi(0) * hj(1) + hi(1) * hj(0), hi(1) * hj(1),
      hi(2) * hj(0) + hi(0) * hj(2), hi(2) * hj(1) + hi(1) * hj(2), hi(2) * hj(2);
  return v;
}

// Maps pixels of a w x h sensor to roughly [-1, 1]; improves the
// conditioning of the B-matrix system by several orders of magnitude.
Mat3 image_normalization(int width, int height) {
  const double s = 0.5 * (width + height);
  Mat3 N;
  N << 2.0 / s, 0.0, -width / s, 0.0, 2.0 / s, -height / s, 0.0, 0.0, 1.0;
  return N;
}

}  // namespace

void CalibrationView::validate() const {
  if (board_points.size() != image_points.size()) {
    throw Error(ErrorCode::InvalidArgument, "board and image point lists differ in length");
  }
  if (board_points.size() < 4) {
    throw Error(ErrorCode::InvalidArgument, "a view needs at least 4 corners");
  }
}

CameraModel zhang_intrinsics(std::span<const Mat3> homographies, int width, int height,
                             const ZhangOptions& options) {
  const std::size_t need = options.zero_skew ? 2 : 3;
  if (homographies.size() < need) {
    throw Error(ErrorCode::DegenerateMotion, "closed-form intrinsics need at least " +
                                                 std::to_string(need) + " views");
  }
  const Mat3 N = image_normalization(width, height);
  const Eigen::Index rows = 2 * static_cast<Eigen::Index>(homographies.size()) +
                            (options.zero_skew ? 1 : 0);
  Eigen::MatrixXd V = Eigen::MatrixXd::Zero(std::max<Eigen::Index>(rows, 6), 6);
  Eigen::Index r = 0;
  for (const Mat3& H0 : homographies) {
    Mat3 H = N * H0;
    H /= H.norm();
    V.row(r++) = v_row(H, 0, 1).transpose();
    V.row(r++) = (v_row(H, 0, 0) - v_row(H, 1, 1)).transpose();
  }
  if (options.zero_skew) V(r++, 1) = 1.0;

  Eigen::JacobiSVD<Eigen::MatrixXd> svd(V, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (!(sv(4) > 1e-9 * sv(0))) {
    throw Error(ErrorCode::DegenerateMotion, "board orientations do not constrain the intrinsics");
  }
  Vec6 b = svd.matrixV().col(5);
  if (b(0) < 0.0) b = -b;
  const double B11 = b(0), B12 = b(1), B22 = b(2), B13 = b(3), B23 = b(4), B33 = b(5);

  const double den = B11 * B22 - B12 * B12;
  if (!(den > 0.0) || !(B11 > 0.0)) {
    throw Error(ErrorCode::DegenerateMotion, "recovered conic is not positive definite");
  }
  const double v0 = (B12 * B13 - B11 * B23) / den;
  const double lambda = B33 - (B13 * B13 + v0 * (B12 * B13 - B11 * B23)) / B11;
  if (!(lambda / B11 > 0.0)) {
    throw Error(ErrorCode::DegenerateMotion, "recovered conic is not positive definite");
  }
  const double alpha = std::sqrt(lambda / B11);
  const double beta = std::sqrt(lambda * B11 / den);
  const double gamma = options.zero_skew ? 0.0 : -B12 * alpha * alpha * beta / lambda;
  const double u0 = gamma * v0 / beta - B13 * alpha * alpha / lambda;

  Mat3 Kn;
  Kn << alpha, gamma, u0, 0.0, beta, v0, 0.0, 0.0, 1.0;
  Mat3 K = N.inverse() * Kn;
  K /= K(2, 2);
  if (options.zero_skew) K(0, 1) = 0.0;
  return camera_from_matrix(K, width, height);
}

RigidTransform zhang_extrinsics(const CameraModel& model, const Mat3& H) {
  const Mat3 A = model.K_inverse();
  const Vec3 a1 = A * H.col(0);
  const Vec3 a2 = A * H.col(1);
  const Vec3 a3 = A * H.col(2);
  double lambda = 2.0 / (a1.norm() + a2.norm());
  if (a3.z() * lambda < 0.0) lambda = -lambda;
  const Vec3 r1 = lambda * a1;
  const Vec3 r2 = lambda * a2;
  Mat3 R;
  R.col(0) = r1;
  R.col(1) = r2;
  R.col(2) = r1.cross(r2);
  RigidTransform pose;
  pose.R = nearest_rotation(R);
  pose.t = lambda * a3;
  return pose;
}

CalibrationResult calibrate_closed_form(std::span<const CalibrationView> views, int width,
                                        int height, const ZhangOptions& options) {
  std::vector<Mat3> hs;
  hs.reserve(views.size());
  for (const auto& v : views) {
    v.validate();
    hs.push_back(estimate_homography(v.board_points, v.image_points));
  }
  CalibrationResult result;
  result.model = zhang_intrinsics(hs, width, height, options);
  for (const Mat3& H : hs) result.poses.push_back(zhang_extrinsics(result.model, H));
  result.rms_reprojection = reprojection_error(views, result).rms;
  return result;
}

}  // namespace slscan::calib
