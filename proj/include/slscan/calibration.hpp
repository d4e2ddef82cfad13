#pragma once

#include "slscan/codec.hpp"
#include "slscan/geometry.hpp"

#include <optional>
#include <span>
#include <vector>

namespace slscan::calib {

// Normalized DLT: both point sets are translated to their centroid and scaled
// to mean distance sqrt(2) before the SVD solve. The result is scaled so that
// H(2,2) = 1 whenever it is non-zero. Throws Degenerate when fewer than four
// points are given or the design matrix has rank < 8.
Mat3 estimate_homography(std::span<const Vec2> src, std::span<const Vec2> dst);
Vec2 apply_homography(const Mat3& H, const Vec2& p);

// One board pose. Board points are planar (Z = 0 in the board frame).
struct CalibrationView {
  std::vector<Vec2> board_points;
  std::vector<PixelPoint> image_points;
  std::optional<codec::CorrespondenceMap> correspondence;

  // Throws InvalidArgument when the lists disagree or hold fewer than 4 points.
  void validate() const;
};

struct CalibrationResult {
  CameraModel model;
  std::vector<RigidTransform> poses;  // board -> device, one per view
  double rms_reprojection = 0.0;
};

struct ZhangOptions {
  bool zero_skew = false;
};

// Closed-form intrinsics from >= 3 board homographies (>= 2 with zero_skew).
// Distortion is zero. Throws DegenerateMotion when the constraints are rank
// deficient, e.g. for parallel boards.
CameraModel zhang_intrinsics(std::span<const Mat3> homographies, int width, int height,
                             const ZhangOptions& options = {});

// Board pose from intrinsics and a homography; the sign is chosen so the
// board lies in front of the device (t_z > 0).
RigidTransform zhang_extrinsics(const CameraModel& model, const Mat3& H);

CalibrationResult calibrate_closed_form(std::span<const CalibrationView> views, int width,
                                        int height, const ZhangOptions& options = {});

struct ReprojectionReport {
  double rms = 0.0;                    // over all corners, Euclidean pixels
  std::vector<double> per_view_mean;   // mean Euclidean residual per view
  std::size_t corner_count = 0;

  // Calibrations are accepted when the RMS reprojection error is below 1 px.
  bool ok() const noexcept { return rms < 1.0; }
};

ReprojectionReport reprojection_error(std::span<const CalibrationView> views,
                                      const CalibrationResult& result);

struct RefineOptions {
  bool estimate_distortion = true;
  bool estimate_k3 = true;
  bool estimate_skew = false;
  int max_iterations = 100;
  double relative_tolerance = 1e-12;
};

struct RefineReport {
  CalibrationResult result;
  // False when no step reduced the cost; result is then the initial estimate.
  bool improved = false;
  int iterations = 0;
  std::vector<double> cost_trace;  // accepted-step costs, starting with the initial cost
};

// Levenberg-Marquardt over intrinsics, distortion and per-view poses,
// minimizing the summed squared reprojection error.
RefineReport refine_calibration(std::span<const CalibrationView> views,
                                const CalibrationResult& initial,
                                const RefineOptions& options = {});

// Closed form followed by refinement. The closed form forces zero skew
// unless the refinement estimates it.
CalibrationResult calibrate(std::span<const CalibrationView> views, int width, int height,
                            const RefineOptions& refine = {});

struct TransferOptions {
  double window_radius = 30.0;
  std::size_t min_support = 20;
};

struct TransferFailure {
  std::size_t corner = 0;
  std::size_t support = 0;
};

struct TransferResult {
  std::vector<std::optional<PixelPoint>> projector_points;  // one per corner
  std::vector<TransferFailure> failures;                    // InsufficientSupport corners
};

// For every camera-space corner, fits a camera->projector homography over the
// valid decoded pixels in a square window and maps the corner through it.
// Throws MissingAxis if the view's correspondence map lacks an axis.
TransferResult transfer_corners_local_homography(const CalibrationView& view,
                                                 const TransferOptions& options = {});

// The projector-side view made of the successfully transferred corners.
CalibrationView projector_view(const CalibrationView& view, const TransferResult& transfer);

struct StereoResult {
  RigidTransform cam_to_proj;
  std::vector<double> rotation_spread_deg;  // per view, from the fused rotation
  std::vector<double> translation_spread;   // per view, scene units
};

// Per view cam_to_proj = T_proj * inverse(T_cam), fused by a sign-aligned
// quaternion mean and a translation mean. Throws InconsistentViews when any
// view deviates by more than max_spread_deg.
StereoResult stereo_extrinsics(std::span<const RigidTransform> cam_poses,
                               std::span<const RigidTransform> proj_poses,
                               double max_spread_deg = 5.0);

}  // namespace slscan::calib
