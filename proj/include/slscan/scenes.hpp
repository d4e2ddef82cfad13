#pragma once

#include "slscan/calibration.hpp"
#include "slscan/simulator.hpp"

#include <cstdint>
#include <vector>

namespace slscan::sim {

// Intrinsics of the reference camera (1280 x 720) and projector
// (1920 x 1080), zero distortion.
CameraModel reference_camera();
CameraModel reference_projector();
// Distortion coefficients measured alongside those intrinsics.
DistortionCoeffs reference_camera_distortion();
DistortionCoeffs reference_projector_distortion();
// Measured world-to-device poses; the rotations are orthonormal only to
// about 1e-8.
RigidTransform reference_camera_pose();
RigidTransform reference_projector_pose();

// Camera at the world origin and the projector at the measured relative
// pose, about 2.5 m behind and 0.7 m above the camera.
Rig reference_rig();

// Desk-scale turntable rig in a z-up world: the turntable axis is the world
// z axis, the camera stands `distance` mm away and the projector sits
// `baseline` mm to its side, both aimed at (0, 0, target_height).
struct DeskRigParams {
  double distance = 800.0;
  double baseline = 250.0;
  double camera_height = 250.0;
  double target_height = 55.0;
};
Rig desk_rig(const DeskRigParams& params = {});
TurntableAxis desk_turntable_axis();

struct CupParams {
  double radius = 45.0;
  double height = 100.0;
  double wall = 4.0;
  double handle_radius = 28.0;  // major radius of the handle torus
  double handle_tube = 6.0;
  int segments = 96;
};
// Open-top cup standing on z = 0 around the z axis: outer and inner walls,
// rim, bottom and a torus handle on the +x side.
Mesh cup_mesh(const CupParams& params = {});

// The cup alone (the turntable itself is not modelled) under uniform
// ambient light.
Scene cup_scene(const CupParams& params = {}, double ambient = 10.0);

struct BoardSpec {
  int cols = 9;
  int rows = 6;
  double square = 15.0;  // mm
};

// Inner corners in the board frame, row-major from the origin.
std::vector<Vec2> board_corners(const BoardSpec& board);

// Random board-to-device poses with the whole board inside the image and the
// board spanning roughly `fill` of the image width.
std::vector<RigidTransform> random_board_poses(const CameraModel& model, const BoardSpec& board,
                                               int count, std::uint64_t seed, double fill = 0.5,
                                               double max_tilt_deg = 30.0);

// Exact projections of the board corners for each pose, with isotropic
// Gaussian corner noise whose RMS radial displacement is `sigma` pixels.
std::vector<calib::CalibrationView> synthetic_views(const CameraModel& model,
                                                    const BoardSpec& board,
                                                    const std::vector<RigidTransform>& poses,
                                                    double sigma = 0.0, std::uint64_t seed = 0);

// Plane surface covering the board for a board-to-world pose, slightly
// larger than the corner grid.
Surface board_surface(const BoardSpec& board, const RigidTransform& board_to_world,
                      double albedo = 0.9, double ambient = 10.0);

}  // namespace slscan::sim
