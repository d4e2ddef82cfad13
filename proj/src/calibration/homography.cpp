#include "slscan/calibration.hpp"

#include "slscan/error.hpp"

#include <Eigen/SVD>

#include <cmath>

namespace slscan::calib {
namespace {

// Similarity that moves the centroid to the origin and the mean distance to
// sqrt(2).
Mat3 normalizing_transform(std::span<const Vec2> pts) {
  Vec2 c = Vec2::Zero();
  for (const auto& p : pts) c += p;
  c /= static_cast<double>(pts.size());
  double mean = 0.0;
  for (const auto& p : pts) mean += (p - c).norm();
  mean /= static_cast<double>(pts.size());
  const double s = mean > 0.0 ? std::sqrt(2.0) / mean : 1.0;
  Mat3 T;
  T << s, 0.0, -s * c.x(), 0.0, s, -s * c.y(), 0.0, 0.0, 1.0;
  return T;
}

}  // namespace

Vec2 apply_homography(const Mat3& H, const Vec2& p) {
  const Vec3 q = H * Vec3(p.x(), p.y(), 1.0);
  return {q.x() / q.z(), q.y() / q.z()};
}

Mat3 estimate_homography(std::span<const Vec2> src, std::span<const Vec2> dst) {
  if (src.size() != dst.size()) {
    throw Error(ErrorCode::InvalidArgument, "homography point lists differ in length");
  }
  if (src.size() < 4) throw Error(ErrorCode::Degenerate, "homography needs at least 4 points");
  const Mat3 Ts = normalizing_transform(src);
  const Mat3 Td = normalizing_transform(dst);

  const Eigen::Index n = static_cast<Eigen::Index>(src.size());
  Eigen::MatrixXd A(2 * n, 9);
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vec2 s = apply_homography(Ts, src[static_cast<std::size_t>(i)]);
    const Vec2 d = apply_homography(Td, dst[static_cast<std::size_t>(i)]);
    const double x = s.x(), y = s.y(), u = d.x(), v = d.y();
    A.row(2 * i) << -x, -y, -1.0, 0.0, 0.0, 0.0, u * x, u * y, u;
    A.row(2 * i + 1) << 0.0, 0.0, 0.0, -x, -y, -1.0, v * x, v * y, v;
  }
  // For tall systems solve through the 9x9 Gram matrix's SVD-equivalent: the
  // right singular vectors of A are those of R from a QR of A.
  Eigen::MatrixXd M = A;
  if (A.rows() > 64) {
    Eigen::HouseholderQR<Eigen::MatrixXd> qr(A);
    M = qr.matrixQR().topRows(9).triangularView<Eigen::Upper>();
  }
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(M, Eigen::ComputeFullV);
  const auto& sv = svd.singularValues();
  if (sv.size() < 8 || !(sv(7) > 1e-10 * sv(0))) {
    throw Error(ErrorCode::Degenerate, "homography design matrix has rank < 8");
  }
  const Eigen::VectorXd h = svd.matrixV().col(8);
  Mat3 Hn;
  Hn << h(0), h(1), h(2), h(3), h(4), h(5), h(6), h(7), h(8);
  Mat3 H = Td.inverse() * Hn * Ts;
  if (std::abs(H(2, 2)) > 1e-300) {
    H /= H(2, 2);
  } else {
    H /= H.norm();
  }
  return H;
}

}  // namespace slscan::calib
