#pragma once

#include "slscan/simulator.hpp"

namespace slscan::sim::detail {

// Scene prepared for repeated ray queries: meshes get a bounding-volume
// hierarchy over their triangles.
class Tracer {
 public:
  explicit Tracer(const Scene& scene);

  std::optional<RayHit> trace(const Vec3& o, const Vec3& d, double t_min, double t_max) const;
  bool occluded(const Vec3& o, const Vec3& d, double t_min, double t_max) const;

 private:
  struct BvhNode {
    Vec3 lo, hi;
    std::uint32_t begin = 0, end = 0;  // triangle range when leaf
    std::int32_t left = -1, right = -1;
  };
  struct MeshAccel {
    const Mesh* mesh = nullptr;
    std::vector<std::uint32_t> order;  // triangle indices in BVH order
    std::vector<BvhNode> nodes;
  };

  std::int32_t build(MeshAccel& m, std::uint32_t begin, std::uint32_t end,
                     const std::vector<Vec3>& centroids);
  bool mesh_hit(const MeshAccel& m, const Vec3& o, const Vec3& d, double t_min, double& t_best,
                Vec3& n_best, bool any) const;

  const Scene& scene_;
  std::vector<MeshAccel> accel_;  // one per surface; empty for non-meshes
};

}  // namespace slscan::sim::detail
