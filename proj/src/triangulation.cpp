#include "slscan/triangulation.hpp"

#include "slscan/error.hpp"
#include "slscan/parallel.hpp"

#include <Eigen/SVD>

#include <cmath>
#include <optional>

namespace slscan::tri {

using codec::Axis;

PixelPoint ProjectionMatrix::project(const WorldPoint& X) const {
  const Vec3 h = P * X.homogeneous();
  return {h.x() / h.z(), h.y() / h.z()};
}

ProjectionMatrix build_projection(const CameraModel& model, const RigidTransform& pose) {
  Mat34 Rt;
  Rt.leftCols<3>() = pose.R;
  Rt.col(3) = pose.t;
  return {model.K() * Rt};
}

namespace {

using Mat4x4 = Eigen::Matrix4d;
using Row4 = Eigen::RowVector4d;

Eigen::Vector4d null_vector(const Mat4x4& A, int rows) {
  // Column equilibration keeps the homogeneous coordinate comparable to the
  // Euclidean part for scenes far from the origin.
  Eigen::Vector4d scale;
  for (int j = 0; j < 4; ++j) {
    const double n = A.topRows(rows).col(j).norm();
    scale(j) = n > 0.0 ? 1.0 / n : 1.0;
  }
  const Eigen::MatrixXd As = A.topRows(rows) * scale.asDiagonal();
  Eigen::JacobiSVD<Eigen::MatrixXd> svd(As, Eigen::ComputeFullV);
  return scale.asDiagonal() * svd.matrixV().col(3);
}

TriangulatedPoint solve(const Mat4x4& raw, const ProjectionMatrix& cam, const ProjectionMatrix& proj,
                        int rows) {
  Mat4x4 A = raw;
  for (int i = 0; i < rows; ++i) {
    const double n = A.row(i).norm();
    if (n > 0.0) A.row(i) /= n;
  }
  Eigen::Vector4d v = null_vector(A, rows);
  if (rows == 4) {
    // Dividing each device's rows by its depth turns the algebraic residual
    // into a pixel residual, so noise is shared by image error rather than by
    // the arbitrary row scale.
    for (int it = 0; it < 3 && v(3) != 0.0; ++it) {
      const double dc = std::abs(cam.P.row(2).dot(v) / v(3));
      const double dp = std::abs(proj.P.row(2).dot(v) / v(3));
      if (!(dc > 0.0 && dp > 0.0) || !std::isfinite(dc + dp)) break;
      Mat4x4 W = raw;
      W.topRows(2) /= dc;
      W.bottomRows(2) /= dp;
      v = null_vector(W, rows);
    }
  }

  Eigen::JacobiSVD<Eigen::MatrixXd> plain(A.topRows(rows));
  const auto& sv = plain.singularValues();
  if (rows == 4 && !(sv(2) > 1e-12 * sv(0))) {
    throw Error(ErrorCode::DegenerateRays, "camera and projector rays are parallel");
  }
  if (!(std::abs(v(3)) > 1e-12 * v.head<3>().norm())) {
    throw Error(ErrorCode::DegenerateRays, "rays meet at infinity");
  }
  TriangulatedPoint out;
  out.X = v.head<3>() / v(3);
  out.residual = rows == 4 ? sv(3) : 0.0;
  out.camera_depth = (cam.P.row(2) * out.X.homogeneous())(0);
  out.projector_depth = (proj.P.row(2) * out.X.homogeneous())(0);
  out.cheirality_ok = out.camera_depth > 0.0 && out.projector_depth > 0.0;
  return out;
}

}  // namespace

TriangulatedPoint triangulate_point(const ProjectionMatrix& cam, const ProjectionMatrix& proj,
                                    const PixelPoint& x_cam, const PixelPoint& x_proj) {
  const auto& p = cam.P;
  const auto& q = proj.P;
  Mat4x4 A;
  A.row(0) = x_cam.y() * p.row(2) - p.row(1);
  A.row(1) = p.row(0) - x_cam.x() * p.row(2);
  A.row(2) = x_proj.y() * q.row(2) - q.row(1);
  A.row(3) = q.row(0) - x_proj.x() * q.row(2);
  return solve(A, cam, proj, 4);
}

TriangulatedPoint triangulate_ray_plane(const ProjectionMatrix& cam, const ProjectionMatrix& proj,
                                        const PixelPoint& x_cam, Axis axis, double coord) {
  const auto& p = cam.P;
  const auto& q = proj.P;
  Mat4x4 A = Mat4x4::Zero();
  A.row(0) = x_cam.y() * p.row(2) - p.row(1);
  A.row(1) = p.row(0) - x_cam.x() * p.row(2);
  A.row(2) = axis == Axis::x ? Row4(q.row(0) - coord * q.row(2))
                             : Row4(coord * q.row(2) - q.row(1));
  TriangulatedPoint out = solve(A, cam, proj, 3);
  // Three independent rows determine the point exactly.
  out.residual = 0.0;
  return out;
}

namespace {

struct PixelResult {
  enum Kind : std::uint8_t { skip, kept, degenerate, cheirality, residual } kind = skip;
  WorldPoint X;
};

}  // namespace

TriangulationOutput triangulate_map(const codec::CorrespondenceMap& corr, const StereoRig& rig,
                                    const TriangulationParams& params) {
  if (!corr.has_x && !corr.has_y) {
    throw Error(ErrorCode::MissingAxis, "correspondence map has no decoded axis");
  }
  const bool both = corr.has_x && corr.has_y;
  const Axis single = corr.has_x ? Axis::x : Axis::y;
  CameraModel cam_ideal = rig.camera;
  cam_ideal.dist = {};
  CameraModel proj_ideal = rig.projector;
  proj_ideal.dist = {};
  const ProjectionMatrix Pc = build_projection(cam_ideal, RigidTransform::identity());
  const ProjectionMatrix Pp = build_projection(proj_ideal, rig.cam_to_proj);
  const bool cam_dist = !rig.camera.dist.is_zero();
  const bool proj_dist = !rig.projector.dist.is_zero();

  const std::size_t n = corr.size();
  std::vector<PixelResult> res(n);

  parallel_for(static_cast<std::size_t>(corr.height), [&](std::size_t y0, std::size_t y1) {
    for (std::size_t y = y0; y < y1; ++y) {
      for (int x = 0; x < corr.width; ++x) {
        const std::size_t i = y * static_cast<std::size_t>(corr.width) + x;
        if (!corr.valid(i)) continue;
        PixelResult& r = res[i];
        try {
          PixelPoint xc(x + 0.5, static_cast<double>(y) + 0.5);
          if (cam_dist) xc = undistort_pixel(rig.camera, xc);
          TriangulatedPoint t;
          std::optional<PixelPoint> xp;
          if (both) {
            xp = PixelPoint(corr.proj_x[i], corr.proj_y[i]);
            if (proj_dist) xp = undistort_pixel(rig.projector, *xp);
            t = triangulate_point(Pc, Pp, xc, *xp);
          } else {
            const double coord = single == Axis::x ? corr.proj_x[i] : corr.proj_y[i];
            double ideal = coord;
            t = triangulate_ray_plane(Pc, Pp, xc, single, ideal);
            // The distorted pixel needs both coordinates; take the missing
            // one from the current estimate and iterate.
            for (int it = 0; proj_dist && it < 5 && t.cheirality_ok; ++it) {
              PixelPoint full = project(rig.projector, rig.cam_to_proj, t.X).pixel;
              (single == Axis::x ? full.x() : full.y()) = coord;
              const PixelPoint u = undistort_pixel(rig.projector, full);
              ideal = single == Axis::x ? u.x() : u.y();
              t = triangulate_ray_plane(Pc, Pp, xc, single, ideal);
            }
            PixelPoint q = Pp.project(t.X);
            (single == Axis::x ? q.x() : q.y()) = ideal;
            xp = q;
          }
          if (!t.cheirality_ok) {
            r.kind = PixelResult::cheirality;
            continue;
          }
          const double ec = (Pc.project(t.X) - xc).norm();
          const double ep = (Pp.project(t.X) - *xp).norm();
          if (!(ec <= params.max_reprojection && ep <= params.max_reprojection)) {
            r.kind = PixelResult::residual;
            continue;
          }
          r.kind = PixelResult::kept;
          r.X = t.X;
        } catch (const Error&) {
          r.kind = PixelResult::degenerate;
        }
      }
    }
  });

  TriangulationOutput out;
  out.stats.ray_plane = !both;
  for (std::size_t i = 0; i < n; ++i) {
    switch (res[i].kind) {
      case PixelResult::skip: continue;
      case PixelResult::kept:
        out.cloud.points.push_back(res[i].X);
        out.cloud.provenance.push_back({static_cast<std::int32_t>(i % corr.width),
                                        static_cast<std::int32_t>(i / corr.width)});
        ++out.stats.retained;
        break;
      case PixelResult::degenerate: ++out.stats.dropped_degenerate; break;
      case PixelResult::cheirality: ++out.stats.dropped_cheirality; break;
      case PixelResult::residual: ++out.stats.dropped_residual; break;
    }
    ++out.stats.candidates;
  }
  return out;
}

}  // namespace slscan::tri
