#include "slscan/calibration.hpp"

#include "slscan/error.hpp"
#include "slscan/parallel.hpp"

#include <Eigen/Geometry>

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slscan::calib {

TransferResult transfer_corners_local_homography(const CalibrationView& view,
                                                 const TransferOptions& options) {
  if (!view.correspondence) {
    throw Error(ErrorCode::InvalidArgument, "view carries no correspondence map");
  }
  const auto& map = *view.correspondence;
  if (!map.has_x || !map.has_y) {
    throw Error(ErrorCode::MissingAxis, "corner transfer needs both projector axes decoded");
  }
  if (!(options.window_radius > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "window radius must be positive");
  }
  const std::size_t min_support = std::max<std::size_t>(options.min_support, 4);

  const std::size_t n = view.image_points.size();
  TransferResult out;
  out.projector_points.resize(n);
  std::vector<std::size_t> support(n, 0);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    std::vector<Vec2> src, dst;
    for (std::size_t c = b; c < e; ++c) {
      const Vec2 corner = view.image_points[c];
      // Pixels whose centers lie inside the square window.
      const double r = options.window_radius;
      const int x0 = std::max(0, static_cast<int>(std::ceil(corner.x() - r - 0.5)));
      const int x1 = std::min(map.width - 1, static_cast<int>(std::floor(corner.x() + r - 0.5)));
      const int y0 = std::max(0, static_cast<int>(std::ceil(corner.y() - r - 0.5)));
      const int y1 = std::min(map.height - 1, static_cast<int>(std::floor(corner.y() + r - 0.5)));
      src.clear();
      dst.clear();
      for (int y = y0; y <= y1; ++y) {
        for (int x = x0; x <= x1; ++x) {
          const std::size_t i = static_cast<std::size_t>(y) * map.width + x;
          if (!map.valid(i)) continue;
          src.emplace_back(x + 0.5, y + 0.5);
          dst.emplace_back(map.proj_x[i], map.proj_y[i]);
        }
      }
      support[c] = src.size();
      if (src.size() < min_support) continue;
      try {
        const Mat3 H = estimate_homography(src, dst);
        out.projector_points[c] = apply_homography(H, corner);
      } catch (const Error&) {
        // Degenerate support (e.g. a single decoded stripe) counts as missing.
      }
    }
  });
  for (std::size_t c = 0; c < n; ++c) {
    if (!out.projector_points[c]) out.failures.push_back({c, support[c]});
  }
  return out;
}

CalibrationView projector_view(const CalibrationView& view, const TransferResult& transfer) {
  if (transfer.projector_points.size() != view.board_points.size()) {
    throw Error(ErrorCode::InvalidArgument, "transfer result does not match the view");
  }
  CalibrationView out;
  for (std::size_t i = 0; i < view.board_points.size(); ++i) {
    if (!transfer.projector_points[i]) continue;
    out.board_points.push_back(view.board_points[i]);
    out.image_points.push_back(*transfer.projector_points[i]);
  }
  return out;
}

StereoResult stereo_extrinsics(std::span<const RigidTransform> cam_poses,
                               std::span<const RigidTransform> proj_poses,
                               double max_spread_deg) {
  if (cam_poses.size() != proj_poses.size() || cam_poses.empty()) {
    throw Error(ErrorCode::InvalidArgument, "camera and projector pose lists must be non-empty "
                                            "and of equal length");
  }
  std::vector<RigidTransform> rel;
  rel.reserve(cam_poses.size());
  for (std::size_t i = 0; i < cam_poses.size(); ++i) {
    rel.push_back(proj_poses[i] * invert(cam_poses[i]));
  }

  const Eigen::Quaterniond q0(rel[0].R);
  Eigen::Vector4d acc = Eigen::Vector4d::Zero();
  Vec3 t = Vec3::Zero();
  for (const auto& T : rel) {
    Eigen::Quaterniond q(T.R);
    if (q.coeffs().dot(q0.coeffs()) < 0.0) q.coeffs() = -q.coeffs();
    acc += q.coeffs();
    t += T.t;
  }
  StereoResult out;
  Eigen::Quaterniond mean;
  mean.coeffs() = acc.normalized();
  out.cam_to_proj.R = nearest_rotation(mean.toRotationMatrix());
  out.cam_to_proj.t = t / static_cast<double>(rel.size());
  if (rel.size() == 1) out.cam_to_proj = {nearest_rotation(rel[0].R), rel[0].t};

  double worst = 0.0;
  for (const auto& T : rel) {
    const double deg = rotation_angle(T.R * out.cam_to_proj.R.transpose()) * 180.0 / std::numbers::pi;
    out.rotation_spread_deg.push_back(deg);
    out.translation_spread.push_back((T.t - out.cam_to_proj.t).norm());
    worst = std::max(worst, deg);
  }
  if (worst > max_spread_deg) {
    throw Error(ErrorCode::InconsistentViews, "per-view extrinsics spread " + std::to_string(worst) +
                                                  " deg exceeds " + std::to_string(max_spread_deg));
  }
  return out;
}

}  // namespace slscan::calib
