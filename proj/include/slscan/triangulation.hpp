#pragma once

#include "slscan/codec.hpp"
#include "slscan/geometry.hpp"
#include "slscan/pointcloud.hpp"

namespace slscan::tri {

struct ProjectionMatrix {
  Mat34 P = Mat34::Zero();

  // Pixel of a world point; the third homogeneous coordinate must be positive.
  PixelPoint project(const WorldPoint& X) const;
};

// P = K [R | t]. Distortion is ignored; pixels are undistorted beforehand.
ProjectionMatrix build_projection(const CameraModel& model, const RigidTransform& pose);

struct TriangulatedPoint {
  WorldPoint X = WorldPoint::Zero();
  double residual = 0.0;  // smallest singular value of the row-normalized system
  double camera_depth = 0.0;
  double projector_depth = 0.0;
  bool cheirality_ok = true;  // false when either depth is not positive
};

// Linear triangulation from two rows per device:
//   v_c p3 - p2,  p1 - u_c p3,  v_p q3 - q2,  q1 - u_p q3.
// Throws DegenerateRays when the rays are parallel.
TriangulatedPoint triangulate_point(const ProjectionMatrix& cam, const ProjectionMatrix& proj,
                                    const PixelPoint& x_cam, const PixelPoint& x_proj);

// Intersection of the camera ray through x_cam with the projector column
// plane (axis x) or row plane (axis y) at coordinate `coord`.
TriangulatedPoint triangulate_ray_plane(const ProjectionMatrix& cam, const ProjectionMatrix& proj,
                                        const PixelPoint& x_cam, codec::Axis axis, double coord);

struct TriangulationParams {
  double max_reprojection = 1.0;  // pixels, in both devices
};

struct TriangulationStats {
  std::size_t candidates = 0;
  std::size_t retained = 0;
  std::size_t dropped_cheirality = 0;
  std::size_t dropped_residual = 0;
  std::size_t dropped_degenerate = 0;
  bool ray_plane = false;
};

struct TriangulationOutput {
  PointCloud cloud;  // camera frame, with provenance, row-major pixel order
  TriangulationStats stats;
};

// One point per valid pixel. With a single decoded axis the camera ray is
// intersected with the projector plane of that axis. Throws MissingAxis when
// neither axis was decoded.
TriangulationOutput triangulate_map(const codec::CorrespondenceMap& corr, const StereoRig& rig,
                                    const TriangulationParams& params = {});

}  // namespace slscan::tri
