#pragma once

#include "slscan/geometry.hpp"
#include "slscan/kdtree.hpp"
#include "slscan/pointcloud.hpp"

#include <cstdint>
#include <optional>
#include <span>
#include <string_view>
#include <vector>

namespace slscan::reg {

struct Pair {
  std::size_t source = 0;
  std::size_t target = 0;
  double dist2 = 0.0;

  friend bool operator==(const Pair&, const Pair&) = default;
};
using Pairs = std::vector<Pair>;

// Least-squares rigid motion with target[i] ~ R * source[i] + t, from the SVD
// of the cross-covariance with a reflection guard. Throws
// DegenerateConfiguration for fewer than 3 pairs or collinear points.
RigidTransform rigid_from_correspondences(std::span<const Vec3> target,
                                          std::span<const Vec3> source);
RigidTransform rigid_from_pairs(const PointCloud& source, const PointCloud& target,
                                const Pairs& pairs);

// PCA normals over the k nearest neighbours (the point included), oriented
// toward `viewpoint`. Throws TooFewPoints unless 3 <= k < cloud size.
PointCloud estimate_normals(const PointCloud& cloud, std::size_t k,
                            const Vec3& viewpoint = Vec3::Zero());

// Default pairing gate: 10% of the diagonal of the cloud's bounding box.
double default_pair_distance(const PointCloud& target);

Pairs correspond_closest(const PointCloud& source, const PointCloud& target,
                         double max_pair_distance);
Pairs correspond_closest(const PointCloud& source, const KdTree& target_index,
                         double max_pair_distance);

// Target point nearest to the line through each source point along its
// normal. Throws MissingNormals.
Pairs correspond_normal_shoot(const PointCloud& source, const PointCloud& target,
                              double max_pair_distance);
Pairs correspond_normal_shoot(const PointCloud& source, const KdTree& target_index,
                              double max_pair_distance);

// Camera that produced the target cloud: pose maps the frame the clouds are
// expressed in to the camera frame.
struct ProjectiveRig {
  CameraModel camera;
  RigidTransform pose;
};

// Pixel lookup over a cloud with provenance.
class PixelIndex {
 public:
  PixelIndex(const PointCloud& cloud, int width, int height);
  // Index of the point stored at pixel (x, y), if any.
  std::optional<std::size_t> at(int x, int y) const;

 private:
  int width_ = 0;
  int height_ = 0;
  std::vector<std::int64_t> cells_;
};

// Projects each source point into the target camera and pairs it with the
// target point recorded at the containing pixel. Throws MissingProvenance.
Pairs correspond_projective(const PointCloud& source, const PointCloud& target,
                            const ProjectiveRig& rig, double max_pair_distance);

// Flags points on the edge of their pixel grid: an 8-neighbour pixel holds no
// point, or holds one farther than `jump` times the median spacing between
// 4-neighbours. Throws MissingProvenance.
std::vector<std::uint8_t> edge_points(const PointCloud& cloud, double jump = 4.0);
PointCloud without_edges(const PointCloud& cloud, double jump = 4.0);

// Mean of |x - (R p + t)|^2 over the pairs. Throws EmptyPairs.
double error_point_point(const PointCloud& source, const PointCloud& target, const Pairs& pairs,
                         const RigidTransform& T);
// Mean of ((x - (R p + t)) . n_x)^2 with target normals. Throws EmptyPairs or
// MissingNormals.
double error_point_plane(const PointCloud& source, const PointCloud& target, const Pairs& pairs,
                         const RigidTransform& T);

enum class CorrespondenceMode { closest_point, normal_shooting, projective };
enum class ErrorMetric { point_point, point_plane };

std::string_view to_string(CorrespondenceMode mode) noexcept;
std::string_view to_string(ErrorMetric metric) noexcept;
CorrespondenceMode correspondence_mode_from_string(std::string_view s);
ErrorMetric error_metric_from_string(std::string_view s);

struct IcpParams {
  CorrespondenceMode correspondence_mode = CorrespondenceMode::closest_point;
  int max_iterations = 50;
  double error_tolerance = 1e-10;  // scene units squared
  ErrorMetric error_metric = ErrorMetric::point_point;
  // Unset: default_pair_distance(target).
  std::optional<double> max_pair_distance;
  std::optional<ProjectiveRig> projective_rig;
  // On clouds with provenance: leave out source edge points and drop pairs
  // that land on a target edge point. The trace may then rise.
  bool reject_edges = false;

  void validate() const;
};

struct IcpReport {
  RigidTransform transform;        // maps source into the target frame
  // Error after each iteration's update, re-paired at the new transform.
  // Point-point counts unpaired source points at the pairing gate, so the
  // trace cannot rise in closest-point mode.
  std::vector<double> error_trace;
  int iterations = 0;
  bool converged = false;
  std::vector<std::size_t> pair_counts;
};

// Each iteration solves the point-to-point closed form for the current pairs,
// composes it into the running transform, pairs again and evaluates the
// selected metric. Stops when the error drops below the tolerance, its
// relative change falls below 1e-10, or after max_iterations. Throws
// NoCorrespondences.
IcpReport icp(const PointCloud& source, const PointCloud& target, const IcpParams& params,
              const RigidTransform& initial = RigidTransform::identity());

struct StitchOptions {
  double step_deg = 10.0;
  Vec3 axis_direction = Vec3(0.0, -1.0, 0.0);
  // Unset: the axis passes through the centroid of each step's target cloud.
  std::optional<Vec3> axis_point;
  // Voxel edge as a fraction of the merged bounding-box diagonal; 0 disables.
  double dedup_fraction = 0.005;
  // Also register the last cloud against the first.
  bool close_loop = false;
};

struct StitchResult {
  PointCloud merged;                   // in the first cloud's frame
  std::vector<RigidTransform> steps;   // steps[i] maps cloud i+1 into cloud i
  std::vector<RigidTransform> to_first;
  std::vector<IcpReport> reports;
  std::optional<RigidTransform> closing;  // maps cloud 0 into the last cloud
};

// Pairwise ICP between consecutive clouds. init_guesses, when given, holds
// one seed per step (or per step plus the closing step); the default seed
// rotates by -step_deg about the turntable axis. Throws StepFailed.
StitchResult stitch_sequence(std::span<const PointCloud> clouds,
                             std::span<const RigidTransform> init_guesses,
                             const IcpParams& params, const StitchOptions& options = {});

// Keeps the first point of each occupied voxel, preserving order.
PointCloud voxel_dedup(const PointCloud& cloud, double voxel);

}  // namespace slscan::reg
