#include "slscan/pointcloud.hpp"

#include "slscan/error.hpp"

#include <cmath>

namespace slscan {

void PointCloud::validate() const {
  if (!normals.empty() && normals.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "normal count differs from point count");
  }
  if (!provenance.empty() && provenance.size() != points.size()) {
    throw Error(ErrorCode::InvalidArgument, "provenance count differs from point count");
  }
  for (const auto& n : normals) {
    if (!(std::abs(n.norm() - 1.0) <= 1e-9)) {
      throw Error(ErrorCode::InvalidArgument, "normals must have unit length");
    }
  }
}

PointCloud transformed(const PointCloud& cloud, const RigidTransform& T) {
  PointCloud out = cloud;
  for (auto& p : out.points) p = T.apply(p);
  for (auto& n : out.normals) n = T.R * n;
  return out;
}

}  // namespace slscan
