#pragma once

#include "slscan/geometry.hpp"

#include <cstdint>
#include <vector>

namespace slscan {

// Camera pixel a point was reconstructed from.
struct PixelRef {
  std::int32_t x = 0;
  std::int32_t y = 0;

  friend bool operator==(const PixelRef&, const PixelRef&) = default;
};

// Normals and provenance are either empty or hold one entry per point.
struct PointCloud {
  std::vector<WorldPoint> points;
  std::vector<Vec3> normals;
  std::vector<PixelRef> provenance;

  std::size_t size() const noexcept { return points.size(); }
  bool empty() const noexcept { return points.empty(); }
  bool has_normals() const noexcept { return !normals.empty(); }
  bool has_provenance() const noexcept { return !provenance.empty(); }

  // Throws InvalidArgument on count mismatches or non-unit normals.
  void validate() const;
};

PointCloud transformed(const PointCloud& cloud, const RigidTransform& T);

}  // namespace slscan
