#pragma once

#include "slscan/geometry.hpp"

#include <cstdint>
#include <limits>
#include <optional>
#include <span>
#include <vector>

namespace slscan {

// Exact nearest-neighbour queries over a static point set. Median split on
// the widest bounding-box axis, 16 points per leaf. Distances are squared
// Euclidean, summed as (dx^2 + dy^2) + dz^2, and ties go to the lowest
// original index, so results equal a brute-force scan exactly.
class KdTree {
 public:
  struct Hit {
    std::size_t index = 0;
    double dist2 = 0.0;

    friend bool operator==(const Hit&, const Hit&) = default;
  };

  KdTree() = default;
  explicit KdTree(std::span<const Vec3> points, std::size_t leaf_size = 16);

  std::size_t size() const noexcept { return index_.size(); }

  // Nearest point with dist2 <= max_dist2.
  std::optional<Hit> nearest(const Vec3& q,
                             double max_dist2 = std::numeric_limits<double>::infinity()) const;

  // Up to k nearest points ordered by (dist2, index).
  std::vector<Hit> knn(const Vec3& q, std::size_t k) const;

  // Point with the smallest perpendicular distance to the infinite line
  // origin + s * direction (direction need not be unit); dist2 holds the
  // squared perpendicular distance. Only points with dist2 <= max_dist2 are
  // considered.
  std::optional<Hit> nearest_to_line(
      const Vec3& origin, const Vec3& direction,
      double max_dist2 = std::numeric_limits<double>::infinity()) const;

 private:
  struct Node {
    std::uint32_t begin = 0;
    std::uint32_t end = 0;
    std::int32_t left = -1;
    std::int32_t right = -1;
    Vec3 lo = Vec3::Zero();
    Vec3 hi = Vec3::Zero();
    Vec3 center = Vec3::Zero();
    double radius = 0.0;
  };

  std::int32_t build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& pts);

  std::vector<Node> nodes_;
  std::vector<double> xs_, ys_, zs_;      // tree order
  std::vector<std::size_t> index_;        // tree order -> original index
  std::size_t leaf_size_ = 16;
};

// Squared perpendicular distance from x to the line through origin along a
// unit direction.
double line_distance2(const Vec3& x, const Vec3& origin, const Vec3& unit_direction) noexcept;

}  // namespace slscan
