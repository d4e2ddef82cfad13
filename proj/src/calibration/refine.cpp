#include "slscan/calibration.hpp"

#include "slscan/error.hpp"

#include <Eigen/Cholesky>

#include <cmath>
#include <limits>

namespace slscan::calib {
namespace {

// Pixel of a board point; nullopt when it falls behind the device.
std::optional<Vec2> project_board(const CameraModel& m, const RigidTransform& pose,
                                  const Vec2& b) {
  const Vec3 Xc = pose.R.col(0) * b.x() + pose.R.col(1) * b.y() + pose.t;
  if (!(Xc.z() > 0.0)) return std::nullopt;
  const Vec2 xy(Xc.x() / Xc.z(), Xc.y() / Xc.z());
  return m.normalized_to_pixel(distort(m.dist, xy));
}

// Parameter layout: a block of intrinsic slots (only the enabled ones are
// free), then 6 pose increments per view.
enum Slot { kFx, kFy, kCx, kCy, kSkew, kK1, kK2, kP1, kP2, kK3, kSlotCount };

double& slot(CameraModel& m, int s) {
  switch (s) {
    case kFx: return m.fx;
    case kFy: return m.fy;
    case kCx: return m.cx;
    case kCy: return m.cy;
    case kSkew: return m.skew;
    case kK1: return m.dist.k1;
    case kK2: return m.dist.k2;
    case kP1: return m.dist.p1;
    case kP2: return m.dist.p2;
    default: return m.dist.k3;
  }
}

double slot(const CameraModel& m, int s) { return slot(const_cast<CameraModel&>(m), s); }

struct Problem {
  std::span<const CalibrationView> views;
  std::vector<int> free_slots;
  std::vector<std::size_t> offsets;  // first residual row per view
  std::size_t residuals = 0;

  Eigen::Index intrinsic_count() const { return static_cast<Eigen::Index>(free_slots.size()); }
  Eigen::Index param_count() const {
    return intrinsic_count() + 6 * static_cast<Eigen::Index>(views.size());
  }
};

struct State {
  CameraModel model;
  std::vector<RigidTransform> poses;
};

State apply_step(const Problem& p, const State& s, const Eigen::VectorXd& delta) {
  State out = s;
  for (Eigen::Index i = 0; i < p.intrinsic_count(); ++i) {
    slot(out.model, p.free_slots[static_cast<std::size_t>(i)]) += delta(i);
  }
  for (std::size_t v = 0; v < p.views.size(); ++v) {
    const Eigen::Index o = p.intrinsic_count() + 6 * static_cast<Eigen::Index>(v);
    const Vec3 w = delta.segment<3>(o);
    out.poses[v].R = nearest_rotation(rodrigues(w) * s.poses[v].R);
    out.poses[v].t = s.poses[v].t + delta.segment<3>(o + 3);
  }
  return out;
}

// Residuals of one view into r (2 per corner); false if any corner is behind
// the device.
bool view_residuals(const CalibrationView& view, const CameraModel& m, const RigidTransform& pose,
                    double* r) {
  for (std::size_t i = 0; i < view.board_points.size(); ++i) {
    const auto px = project_board(m, pose, view.board_points[i]);
    if (!px) return false;
    r[2 * i] = px->x() - view.image_points[i].x();
    r[2 * i + 1] = px->y() - view.image_points[i].y();
  }
  return true;
}

bool residuals(const Problem& p, const State& s, Eigen::VectorXd& r) {
  r.resize(static_cast<Eigen::Index>(p.residuals));
  for (std::size_t v = 0; v < p.views.size(); ++v) {
    if (!view_residuals(p.views[v], s.model, s.poses[v], r.data() + p.offsets[v])) return false;
  }
  return true;
}

double step_size(double value) { return 1e-6 * std::max(1.0, std::abs(value)); }

// Central-difference Jacobian. Pose columns only touch their own view's rows.
bool jacobian(const Problem& p, const State& s, Eigen::MatrixXd& J) {
  const Eigen::Index n = p.param_count();
  J.setZero(static_cast<Eigen::Index>(p.residuals), n);
  Eigen::VectorXd rp, rm;
  for (Eigen::Index c = 0; c < p.intrinsic_count(); ++c) {
    State a = s, b = s;
    const int sl = p.free_slots[static_cast<std::size_t>(c)];
    const double h = step_size(slot(s.model, sl));
    slot(a.model, sl) += h;
    slot(b.model, sl) -= h;
    if (!residuals(p, a, rp) || !residuals(p, b, rm)) return false;
    J.col(c) = (rp - rm) / (2.0 * h);
  }
  for (std::size_t v = 0; v < p.views.size(); ++v) {
    const auto& view = p.views[v];
    const Eigen::Index rows = static_cast<Eigen::Index>(2 * view.board_points.size());
    Eigen::VectorXd vp(rows), vm(rows);
    for (int k = 0; k < 6; ++k) {
      RigidTransform a = s.poses[v], b = s.poses[v];
      double h;
      if (k < 3) {
        h = 1e-7;
        Vec3 w = Vec3::Zero();
        w(k) = h;
        a.R = rodrigues(w) * s.poses[v].R;
        b.R = rodrigues(-w) * s.poses[v].R;
      } else {
        h = step_size(s.poses[v].t(k - 3));
        a.t(k - 3) += h;
        b.t(k - 3) -= h;
      }
      if (!view_residuals(view, s.model, a, vp.data()) ||
          !view_residuals(view, s.model, b, vm.data())) {
        return false;
      }
      J.block(static_cast<Eigen::Index>(p.offsets[v]), p.intrinsic_count() + 6 * v + k, rows, 1) =
          (vp - vm) / (2.0 * h);
    }
  }
  return true;
}

}  // namespace

ReprojectionReport reprojection_error(std::span<const CalibrationView> views,
                                      const CalibrationResult& result) {
  if (views.size() != result.poses.size()) {
    throw Error(ErrorCode::InvalidArgument, "view and pose counts differ");
  }
  ReprojectionReport rep;
  double sum_sq = 0.0;
  for (std::size_t v = 0; v < views.size(); ++v) {
    const auto& view = views[v];
    view.validate();
    double sum = 0.0;
    for (std::size_t i = 0; i < view.board_points.size(); ++i) {
      const auto px = project_board(result.model, result.poses[v], view.board_points[i]);
      const double e = px ? (*px - view.image_points[i]).norm()
                          : std::numeric_limits<double>::infinity();
      sum += e;
      sum_sq += e * e;
    }
    rep.per_view_mean.push_back(sum / static_cast<double>(view.board_points.size()));
    rep.corner_count += view.board_points.size();
  }
  rep.rms = rep.corner_count ? std::sqrt(sum_sq / static_cast<double>(rep.corner_count)) : 0.0;
  return rep;
}

RefineReport refine_calibration(std::span<const CalibrationView> views,
                                const CalibrationResult& initial, const RefineOptions& options) {
  if (views.size() != initial.poses.size() || views.empty()) {
    throw Error(ErrorCode::InvalidArgument, "view and pose counts differ");
  }
  if (options.max_iterations < 1) {
    throw Error(ErrorCode::InvalidArgument, "max_iterations must be at least 1");
  }
  Problem p;
  p.views = views;
  for (int s = 0; s < kSlotCount; ++s) {
    if (s == kSkew && !options.estimate_skew) continue;
    if (s >= kK1 && !options.estimate_distortion) continue;
    if (s == kK3 && !options.estimate_k3) continue;
    p.free_slots.push_back(s);
  }
  for (const auto& v : views) {
    v.validate();
    p.offsets.push_back(p.residuals);
    p.residuals += 2 * v.board_points.size();
  }

  State state{initial.model, initial.poses};
  Eigen::VectorXd r;
  if (!residuals(p, state, r)) {
    throw Error(ErrorCode::InvalidArgument, "initial estimate puts board corners behind the device");
  }
  double cost = r.squaredNorm();

  RefineReport rep;
  rep.result = initial;
  rep.cost_trace.push_back(cost);
  double lambda = -1.0;
  Eigen::MatrixXd J;
  for (int it = 0; it < options.max_iterations && cost > 0.0; ++it) {
    rep.iterations = it + 1;
    if (!jacobian(p, state, J)) break;
    const Eigen::MatrixXd JtJ = J.transpose() * J;
    const Eigen::VectorXd g = J.transpose() * r;
    const Eigen::VectorXd diag = JtJ.diagonal().cwiseMax(1e-12);
    if (lambda < 0.0) lambda = 1e-3;

    bool accepted = false;
    for (int attempt = 0; attempt < 12 && !accepted; ++attempt) {
      Eigen::MatrixXd A = JtJ;
      A.diagonal() += lambda * diag;
      const Eigen::VectorXd delta = A.ldlt().solve(-g);
      if (!delta.allFinite()) {
        lambda *= 10.0;
        continue;
      }
      const State trial = apply_step(p, state, delta);
      Eigen::VectorXd tr;
      if (residuals(p, trial, tr)) {
        const double tc = tr.squaredNorm();
        if (tc < cost) {
          const double rel = (cost - tc) / cost;
          state = trial;
          r = tr;
          cost = tc;
          rep.cost_trace.push_back(cost);
          rep.improved = true;
          accepted = true;
          lambda = std::max(lambda / 10.0, 1e-12);
          if (rel < options.relative_tolerance) it = options.max_iterations;
          break;
        }
      }
      lambda *= 10.0;
    }
    if (!accepted) break;
  }

  if (rep.improved) {
    rep.result.model = state.model;
    rep.result.poses = state.poses;
  }
  rep.result.rms_reprojection = reprojection_error(views, rep.result).rms;
  return rep;
}

CalibrationResult calibrate(std::span<const CalibrationView> views, int width, int height,
                            const RefineOptions& refine) {
  ZhangOptions zhang;
  zhang.zero_skew = !refine.estimate_skew;
  const CalibrationResult initial = calibrate_closed_form(views, width, height, zhang);
  return refine_calibration(views, initial, refine).result;
}

}  // namespace slscan::calib
