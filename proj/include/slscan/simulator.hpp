#pragma once

#include "slscan/codec.hpp"
#include "slscan/geometry.hpp"
#include "slscan/image.hpp"
#include "slscan/pointcloud.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <variant>
#include <vector>

namespace slscan::sim {

struct Plane {
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::UnitZ();
};

struct Sphere {
  Vec3 center = Vec3::Zero();
  double radius = 1.0;
};

struct Mesh {
  std::vector<Vec3> vertices;
  std::vector<std::array<std::uint32_t, 3>> triangles;
};

struct Surface {
  std::variant<Plane, Sphere, Mesh> shape;
  double albedo = 1.0;
  double ambient = 0.0;

  // Throws InvalidArgument on a non-positive radius, non-unit plane normal,
  // out-of-range triangle index or albedo outside [0, 1].
  void validate() const;
};

Surface transformed(const Surface& s, const RigidTransform& T);

struct Scene {
  std::vector<Surface> surfaces;
  double background = 0.0;       // intensity of camera rays that hit nothing
  double interreflection = 0.0;  // uniform term added to projector-lit pixels

  void validate() const;
};

// A device with its world-to-device pose.
struct Device {
  CameraModel model;
  RigidTransform pose;

  Vec3 center() const { return -(pose.R.transpose() * pose.t); }
};

struct Rig {
  Device camera;
  Device projector;

  // Throws InvalidArgument on invalid poses or a zero baseline.
  void validate() const;
  // Triangulation form: camera frame as world, cam_to_proj relative pose.
  StereoRig stereo() const;
};

struct RayHit {
  double t = 0.0;
  Vec3 point = Vec3::Zero();
  Vec3 normal = Vec3::Zero();
  std::size_t surface = 0;
};

// Nearest hit with t in (t_min, t_max) along a unit direction.
std::optional<RayHit> intersect(const Scene& scene, const Vec3& origin, const Vec3& direction,
                                double t_min = 0.0,
                                double t_max = std::numeric_limits<double>::infinity());

// Per-pixel light transport that does not depend on the projected pattern.
struct RenderCache {
  int width = 0;
  int height = 0;
  int projector_width = 0;
  int projector_height = 0;
  std::vector<std::uint8_t> hit;          // camera ray hit a surface
  std::vector<std::uint8_t> visible;      // hit lies inside the projector frame
  std::vector<std::uint8_t> unshadowed;   // nothing blocks the projector ray
  std::vector<double> proj_u, proj_v;     // distorted projector pixel of the hit
  std::vector<Vec3> points;               // hit points, camera frame
  std::vector<double> range;              // distance along the camera ray
  std::vector<float> albedo;
  std::vector<float> ambient;

  bool lit(std::size_t i) const noexcept { return hit[i] && visible[i] && unshadowed[i]; }
};

RenderCache prepare(const Rig& rig, const Scene& scene);

// intensity = albedo * pattern(floor(u), floor(v)) + ambient + interreflection
// on lit pixels, the surface ambient on unlit hits and the background on
// misses; quantized by round-half-up and clamped to [0, 255].
GrayImage shade(const RenderCache& cache, const Scene& scene, const GrayImage& pattern);
GrayImage render(const Rig& rig, const Scene& scene, const GrayImage& pattern);

// Renders every frame of a projector pattern stack and keeps its metadata.
codec::PatternStack render_stack(const RenderCache& cache, const Scene& scene,
                                 const codec::PatternStack& patterns);

struct GroundTruth {
  int width = 0;
  int height = 0;
  std::vector<double> depth;    // range along the camera ray; NaN on misses
  std::vector<double> z_depth;  // camera-frame Z; NaN on misses
  codec::CorrespondenceMap correspondence;  // exact continuous coordinates on lit pixels
  std::vector<std::uint8_t> hit, visible, unshadowed;
  PointCloud cloud;  // lit hits, camera frame, with provenance
};

GroundTruth ground_truth(const RenderCache& cache);
GroundTruth ground_truth(const Rig& rig, const Scene& scene);

struct TurntableView {
  Scene scene;                   // the scene with the object rotated into place
  codec::PatternStack captured;  // empty unless patterns were given
  PointCloud truth;              // ground-truth cloud, camera frame
  // Maps this view's camera-frame cloud into the previous view's frame. For
  // the first view this is the wrap-around step on a full revolution and the
  // identity otherwise.
  RigidTransform to_previous;
};

struct TurntableAxis {
  Vec3 point = Vec3::Zero();  // world frame
  Vec3 direction = Vec3::UnitZ();
};

// Rotates the surfaces listed in `rotating` (or all surfaces when empty) by
// k * step_angle_deg about the axis for view k. Throws InvalidArgument when
// steps * step_angle exceeds 360 degrees.
std::vector<TurntableView> turntable_views(const Rig& rig, const Scene& scene, int steps,
                                           double step_angle_deg, const TurntableAxis& axis,
                                           const codec::PatternStack* patterns = nullptr,
                                           const std::vector<std::size_t>& rotating = {});

// The turntable axis expressed in the camera frame.
TurntableAxis axis_in_camera(const Rig& rig, const TurntableAxis& axis);

// Additive Gaussian noise, clamped and quantized. Sample i of stream `seed`
// depends only on (seed, i), so results do not depend on scheduling.
GrayImage add_noise(const GrayImage& image, double sigma, std::uint64_t seed);
codec::PatternStack add_noise(const codec::PatternStack& stack, double sigma, std::uint64_t seed);

// Appends round(fraction * n / (1 - fraction)) uniform points inside the
// box, so outliers make up `fraction` of the result. Normals and provenance
// are dropped.
PointCloud add_outliers(const PointCloud& cloud, double fraction, const Vec3& lo, const Vec3& hi,
                        std::uint64_t seed);

// Counter-based generator: uniform in [0, 1) and standard normal samples.
double uniform(std::uint64_t seed, std::uint64_t counter) noexcept;
double normal(std::uint64_t seed, std::uint64_t counter) noexcept;

}  // namespace slscan::sim
