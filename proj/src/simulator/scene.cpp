#include "slscan/simulator.hpp"

#include "slscan/error.hpp"
#include "tracer.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace slscan::sim {

void Surface::validate() const {
  if (!(albedo >= 0.0 && albedo <= 1.0)) {
    throw Error(ErrorCode::InvalidArgument, "albedo must lie in [0, 1]");
  }
  if (!std::isfinite(ambient)) throw Error(ErrorCode::InvalidArgument, "ambient must be finite");
  if (const auto* p = std::get_if<Plane>(&shape)) {
    if (!(std::abs(p->normal.norm() - 1.0) <= 1e-9)) {
      throw Error(ErrorCode::InvalidArgument, "plane normal must have unit length");
    }
  } else if (const auto* s = std::get_if<Sphere>(&shape)) {
    if (!(s->radius > 0.0)) throw Error(ErrorCode::InvalidArgument, "sphere radius must be positive");
  } else {
    const auto& m = std::get<Mesh>(shape);
    for (const auto& t : m.triangles) {
      for (auto v : t) {
        if (v >= m.vertices.size()) {
          throw Error(ErrorCode::InvalidArgument, "mesh triangle references a missing vertex");
        }
      }
    }
  }
}

Surface transformed(const Surface& s, const RigidTransform& T) {
  Surface out = s;
  if (auto* p = std::get_if<Plane>(&out.shape)) {
    p->point = T.apply(p->point);
    p->normal = T.R * p->normal;
  } else if (auto* sp = std::get_if<Sphere>(&out.shape)) {
    sp->center = T.apply(sp->center);
  } else {
    for (auto& v : std::get<Mesh>(out.shape).vertices) v = T.apply(v);
  }
  return out;
}

void Scene::validate() const {
  for (const auto& s : surfaces) s.validate();
}

void Rig::validate() const {
  camera.model.validate();
  projector.model.validate();
  if (!camera.pose.is_valid(1e-9) || !projector.pose.is_valid(1e-9)) {
    throw Error(ErrorCode::InvalidArgument, "rig poses must be proper rigid transforms");
  }
  if (!((camera.center() - projector.center()).norm() > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "camera and projector share a center");
  }
}

StereoRig Rig::stereo() const {
  RigidTransform rel = projector.pose * invert(camera.pose);
  rel.R = nearest_rotation(rel.R);
  return {camera.model, projector.model, rel};
}

namespace detail {

namespace {

bool ray_box(const Vec3& o, const Vec3& inv, const Vec3& lo, const Vec3& hi, double t_min,
             double t_max) {
  for (int k = 0; k < 3; ++k) {
    double t0 = (lo(k) - o(k)) * inv(k);
    double t1 = (hi(k) - o(k)) * inv(k);
    if (t0 > t1) std::swap(t0, t1);
    // NaN from 0 * inf keeps the slab unbounded.
    if (t0 > t_min) t_min = t0;
    if (t1 < t_max) t_max = t1;
    if (t_min > t_max) return false;
  }
  return true;
}

// Moller-Trumbore; returns t or a negative value on a miss.
double ray_triangle(const Vec3& o, const Vec3& d, const Vec3& a, const Vec3& b, const Vec3& c) {
  const Vec3 e1 = b - a;
  const Vec3 e2 = c - a;
  const Vec3 p = d.cross(e2);
  const double det = e1.dot(p);
  if (std::abs(det) < 1e-14 * e1.norm() * e2.norm()) return -1.0;
  const double inv = 1.0 / det;
  const Vec3 s = o - a;
  const double u = s.dot(p) * inv;
  if (u < 0.0 || u > 1.0) return -1.0;
  const Vec3 q = s.cross(e1);
  const double v = d.dot(q) * inv;
  if (v < 0.0 || u + v > 1.0) return -1.0;
  return e2.dot(q) * inv;
}

}  // namespace

Tracer::Tracer(const Scene& scene) : scene_(scene) {
  accel_.resize(scene.surfaces.size());
  for (std::size_t s = 0; s < scene.surfaces.size(); ++s) {
    const auto* mesh = std::get_if<Mesh>(&scene.surfaces[s].shape);
    if (mesh == nullptr || mesh->triangles.empty()) continue;
    MeshAccel& m = accel_[s];
    m.mesh = mesh;
    m.order.resize(mesh->triangles.size());
    std::iota(m.order.begin(), m.order.end(), 0u);
    std::vector<Vec3> centroids(mesh->triangles.size());
    for (std::size_t t = 0; t < centroids.size(); ++t) {
      const auto& tri = mesh->triangles[t];
      centroids[t] = (mesh->vertices[tri[0]] + mesh->vertices[tri[1]] + mesh->vertices[tri[2]]) / 3.0;
    }
    build(m, 0, static_cast<std::uint32_t>(m.order.size()), centroids);
  }
}

std::int32_t Tracer::build(MeshAccel& m, std::uint32_t begin, std::uint32_t end,
                           const std::vector<Vec3>& centroids) {
  BvhNode node;
  node.begin = begin;
  node.end = end;
  node.lo = Vec3::Constant(std::numeric_limits<double>::infinity());
  node.hi = -node.lo;
  for (std::uint32_t i = begin; i < end; ++i) {
    for (auto v : m.mesh->triangles[m.order[i]]) {
      node.lo = node.lo.cwiseMin(m.mesh->vertices[v]);
      node.hi = node.hi.cwiseMax(m.mesh->vertices[v]);
    }
  }
  const auto id = static_cast<std::int32_t>(m.nodes.size());
  m.nodes.push_back(node);
  if (end - begin <= 8) return id;
  int axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  std::nth_element(m.order.begin() + begin, m.order.begin() + mid, m.order.begin() + end,
                   [&](std::uint32_t a, std::uint32_t b) {
                     return centroids[a](axis) < centroids[b](axis) ||
                            (centroids[a](axis) == centroids[b](axis) && a < b);
                   });
  const std::int32_t l = build(m, begin, mid, centroids);
  const std::int32_t r = build(m, mid, end, centroids);
  m.nodes[static_cast<std::size_t>(id)].left = l;
  m.nodes[static_cast<std::size_t>(id)].right = r;
  return id;
}

bool Tracer::mesh_hit(const MeshAccel& m, const Vec3& o, const Vec3& d, double t_min,
                      double& t_best, Vec3& n_best, bool any) const {
  const Vec3 inv = d.cwiseInverse();
  bool found = false;
  std::uint32_t best_tri = 0;
  std::int32_t stack[64];
  int top = 0;
  stack[top++] = 0;
  while (top > 0) {
    const BvhNode& n = m.nodes[static_cast<std::size_t>(stack[--top])];
    if (!ray_box(o, inv, n.lo, n.hi, t_min, t_best)) continue;
    if (n.left < 0) {
      for (std::uint32_t i = n.begin; i < n.end; ++i) {
        const auto& tri = m.mesh->triangles[m.order[i]];
        const double t = ray_triangle(o, d, m.mesh->vertices[tri[0]], m.mesh->vertices[tri[1]],
                                      m.mesh->vertices[tri[2]]);
        // Equal distances resolve to the lower triangle index.
        if (t > t_min && (t < t_best || (t == t_best && found && m.order[i] < best_tri))) {
          t_best = t;
          best_tri = m.order[i];
          found = true;
          if (any) return true;
        }
      }
      continue;
    }
    stack[top++] = n.left;
    stack[top++] = n.right;
  }
  if (found) {
    const auto& tri = m.mesh->triangles[best_tri];
    n_best = (m.mesh->vertices[tri[1]] - m.mesh->vertices[tri[0]])
                 .cross(m.mesh->vertices[tri[2]] - m.mesh->vertices[tri[0]])
                 .normalized();
  }
  return found;
}

std::optional<RayHit> Tracer::trace(const Vec3& o, const Vec3& d, double t_min,
                                    double t_max) const {
  std::optional<RayHit> best;
  double t_best = t_max;
  for (std::size_t s = 0; s < scene_.surfaces.size(); ++s) {
    const auto& shape = scene_.surfaces[s].shape;
    double t = -1.0;
    Vec3 n;
    if (const auto* p = std::get_if<Plane>(&shape)) {
      const double den = p->normal.dot(d);
      if (den == 0.0) continue;
      t = p->normal.dot(p->point - o) / den;
      n = p->normal;
      if (!(t > t_min && t < t_best)) continue;
    } else if (const auto* sp = std::get_if<Sphere>(&shape)) {
      const Vec3 oc = o - sp->center;
      const double b = oc.dot(d);
      const double c = oc.squaredNorm() - sp->radius * sp->radius;
      const double disc = b * b - c;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      // Stable roots of t^2 + 2 b t + c = 0.
      const double q = b > 0.0 ? -b - sq : -b + sq;
      double t0 = q, t1 = q != 0.0 ? c / q : 0.0;
      if (t0 > t1) std::swap(t0, t1);
      if (t0 > t_min && t0 < t_best) {
        t = t0;
      } else if (t1 > t_min && t1 < t_best) {
        t = t1;
      } else {
        continue;
      }
      n = (o + t * d - sp->center) / sp->radius;
    } else {
      if (accel_[s].mesh == nullptr) continue;
      double tb = t_best;
      if (!mesh_hit(accel_[s], o, d, t_min, tb, n, false)) continue;
      t = tb;
    }
    t_best = t;
    best = RayHit{t, o + t * d, n, s};
  }
  return best;
}

bool Tracer::occluded(const Vec3& o, const Vec3& d, double t_min, double t_max) const {
  for (std::size_t s = 0; s < scene_.surfaces.size(); ++s) {
    if (accel_[s].mesh != nullptr) {
      double tb = t_max;
      Vec3 n;
      if (mesh_hit(accel_[s], o, d, t_min, tb, n, true)) return true;
      continue;
    }
    const auto& shape = scene_.surfaces[s].shape;
    if (const auto* p = std::get_if<Plane>(&shape)) {
      const double den = p->normal.dot(d);
      if (den == 0.0) continue;
      const double t = p->normal.dot(p->point - o) / den;
      if (t > t_min && t < t_max) return true;
    } else if (const auto* sp = std::get_if<Sphere>(&shape)) {
      const Vec3 oc = o - sp->center;
      const double b = oc.dot(d);
      const double c = oc.squaredNorm() - sp->radius * sp->radius;
      const double disc = b * b - c;
      if (disc < 0.0) continue;
      const double sq = std::sqrt(disc);
      const double q = b > 0.0 ? -b - sq : -b + sq;
      const double t0 = q, t1 = q != 0.0 ? c / q : 0.0;
      if ((t0 > t_min && t0 < t_max) || (t1 > t_min && t1 < t_max)) return true;
    }
  }
  return false;
}

}  // namespace detail

std::optional<RayHit> intersect(const Scene& scene, const Vec3& origin, const Vec3& direction,
                                double t_min, double t_max) {
  return detail::Tracer(scene).trace(origin, direction.normalized(), t_min, t_max);
}

}  // namespace slscan::sim
