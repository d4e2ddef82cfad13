#include "slscan/simulator.hpp"

#include "slscan/error.hpp"
#include "slscan/parallel.hpp"
#include "tracer.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slscan::sim {

RenderCache prepare(const Rig& rig, const Scene& scene) {
  rig.validate();
  scene.validate();
  const detail::Tracer tracer(scene);
  const CameraModel& cm = rig.camera.model;
  const CameraModel& pm = rig.projector.model;
  const Vec3 cam_center = rig.camera.center();
  const Vec3 proj_center = rig.projector.center();
  const Mat3 Rct = rig.camera.pose.R.transpose();

  RenderCache c;
  c.width = cm.width;
  c.height = cm.height;
  c.projector_width = pm.width;
  c.projector_height = pm.height;
  const std::size_t n = static_cast<std::size_t>(c.width) * c.height;
  const double nan = std::numeric_limits<double>::quiet_NaN();
  c.hit.assign(n, 0);
  c.visible.assign(n, 0);
  c.unshadowed.assign(n, 0);
  c.proj_u.assign(n, nan);
  c.proj_v.assign(n, nan);
  c.points.assign(n, Vec3::Constant(nan));
  c.range.assign(n, nan);
  c.albedo.assign(n, 0.0f);
  c.ambient.assign(n, static_cast<float>(scene.background));

  parallel_for(static_cast<std::size_t>(c.height), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (int x = 0; x < c.width; ++x) {
        const std::size_t i = y * static_cast<std::size_t>(c.width) + x;
        const Vec3 ray = pixel_ray(cm, {x + 0.5, static_cast<double>(y) + 0.5});
        const Vec3 dir = (Rct * ray).normalized();
        const auto h = tracer.trace(cam_center, dir, 0.0, std::numeric_limits<double>::infinity());
        if (!h) continue;
        const Surface& s = scene.surfaces[h->surface];
        c.hit[i] = 1;
        c.points[i] = rig.camera.pose.apply(h->point);
        c.range[i] = h->t;
        c.albedo[i] = static_cast<float>(s.albedo);
        c.ambient[i] = static_cast<float>(s.ambient);

        const Vec3 to_proj = proj_center - h->point;
        const double dist = to_proj.norm();
        // Camera and projector must see the same side of the surface.
        if (h->normal.dot(cam_center - h->point) * h->normal.dot(to_proj) <= 0.0) continue;
        Projection pr;
        try {
          pr = project(pm, rig.projector.pose, h->point);
        } catch (const Error&) {
          continue;
        }
        const double u = pr.pixel.x(), v = pr.pixel.y();
        if (!(u >= 0.0 && v >= 0.0 && u < pm.width && v < pm.height)) continue;
        c.visible[i] = 1;
        c.proj_u[i] = u;
        c.proj_v[i] = v;
        const double eps = 1e-7 * dist;
        c.unshadowed[i] = !tracer.occluded(h->point, to_proj / dist, eps, dist - eps);
      }
    }
  });
  return c;
}

GrayImage shade(const RenderCache& c, const Scene& scene, const GrayImage& pattern) {
  if (pattern.width != c.projector_width || pattern.height != c.projector_height) {
    throw Error(ErrorCode::InvalidArgument, "pattern size differs from the projector resolution");
  }
  GrayImage img(c.width, c.height);
  for (std::size_t i = 0; i < img.size(); ++i) {
    double v = c.ambient[i];
    if (c.lit(i)) {
      const int px = static_cast<int>(std::floor(c.proj_u[i]));
      const int py = static_cast<int>(std::floor(c.proj_v[i]));
      v += static_cast<double>(c.albedo[i]) * pattern.at(px, py) + scene.interreflection;
    }
    img.pixels[i] = quantize_intensity(v);
  }
  return img;
}

GrayImage render(const Rig& rig, const Scene& scene, const GrayImage& pattern) {
  return shade(prepare(rig, scene), scene, pattern);
}

codec::PatternStack render_stack(const RenderCache& cache, const Scene& scene,
                                 const codec::PatternStack& patterns) {
  codec::PatternStack out = patterns;
  parallel_for(out.frames.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t f = b; f < e; ++f) {
      out.frames[f].image = shade(cache, scene, patterns.frames[f].image);
    }
  });
  return out;
}

GroundTruth ground_truth(const RenderCache& c) {
  GroundTruth g;
  g.width = c.width;
  g.height = c.height;
  const std::size_t n = c.hit.size();
  const double nan = std::numeric_limits<double>::quiet_NaN();
  g.depth = c.range;
  g.z_depth.assign(n, nan);
  g.hit = c.hit;
  g.visible = c.visible;
  g.unshadowed = c.unshadowed;
  g.correspondence =
      codec::CorrespondenceMap::make(c.width, c.height, c.projector_width, c.projector_height);
  g.correspondence.has_x = true;
  g.correspondence.has_y = true;
  for (std::size_t i = 0; i < n; ++i) {
    if (c.hit[i]) g.z_depth[i] = c.points[i].z();
    if (!c.lit(i)) continue;
    g.correspondence.proj_x[i] = c.proj_u[i];
    g.correspondence.proj_y[i] = c.proj_v[i];
    g.correspondence.status[i] = codec::PixelStatus::valid;
    g.cloud.points.push_back(c.points[i]);
    g.cloud.provenance.push_back({static_cast<std::int32_t>(i % c.width),
                                  static_cast<std::int32_t>(i / c.width)});
  }
  return g;
}

GroundTruth ground_truth(const Rig& rig, const Scene& scene) {
  return ground_truth(prepare(rig, scene));
}

TurntableAxis axis_in_camera(const Rig& rig, const TurntableAxis& axis) {
  return {rig.camera.pose.apply(axis.point), rig.camera.pose.R * axis.direction.normalized()};
}

std::vector<TurntableView> turntable_views(const Rig& rig, const Scene& scene, int steps,
                                           double step_angle_deg, const TurntableAxis& axis,
                                           const codec::PatternStack* patterns,
                                           const std::vector<std::size_t>& rotating) {
  if (steps < 1) throw Error(ErrorCode::InvalidArgument, "turntable needs at least one view");
  if (steps * std::abs(step_angle_deg) > 360.0 + 1e-9) {
    throw Error(ErrorCode::InvalidArgument, "turntable views exceed one revolution");
  }
  for (auto s : rotating) {
    if (s >= scene.surfaces.size()) {
      throw Error(ErrorCode::InvalidArgument, "rotating surface index out of range");
    }
  }
  const double step = step_angle_deg * std::numbers::pi / 180.0;
  const TurntableAxis cam_axis = axis_in_camera(rig, axis);
  const RigidTransform back = rotation_about_line(cam_axis.point, cam_axis.direction, -step);
  const bool full_circle = steps > 1 && std::abs(steps * step_angle_deg) > 360.0 - 1e-9;

  std::vector<TurntableView> views;
  for (int k = 0; k < steps; ++k) {
    TurntableView v;
    const RigidTransform R = rotation_about_line(axis.point, axis.direction, k * step);
    v.scene = scene;
    for (std::size_t s = 0; s < scene.surfaces.size(); ++s) {
      const bool moves =
          rotating.empty() || std::find(rotating.begin(), rotating.end(), s) != rotating.end();
      if (moves) v.scene.surfaces[s] = transformed(scene.surfaces[s], R);
    }
    const RenderCache cache = prepare(rig, v.scene);
    v.truth = ground_truth(cache).cloud;
    if (patterns != nullptr) v.captured = render_stack(cache, v.scene, *patterns);
    // On a full revolution view 0 follows the last view.
    v.to_previous = k > 0 || full_circle ? back : RigidTransform::identity();
    views.push_back(std::move(v));
  }
  return views;
}

}  // namespace slscan::sim
