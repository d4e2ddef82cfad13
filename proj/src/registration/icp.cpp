#include "slscan/registration.hpp"

#include "slscan/error.hpp"

#include <array>
#include <cmath>
#include <limits>
#include <numbers>
#include <unordered_map>

namespace slscan::reg {

std::string_view to_string(CorrespondenceMode mode) noexcept {
  switch (mode) {
    case CorrespondenceMode::closest_point: return "closest";
    case CorrespondenceMode::normal_shooting: return "normal";
    case CorrespondenceMode::projective: return "projective";
  }
  return "?";
}

std::string_view to_string(ErrorMetric metric) noexcept {
  return metric == ErrorMetric::point_point ? "point-point" : "point-plane";
}

CorrespondenceMode correspondence_mode_from_string(std::string_view s) {
  if (s == "closest" || s == "closest-point") return CorrespondenceMode::closest_point;
  if (s == "normal" || s == "normal-shooting") return CorrespondenceMode::normal_shooting;
  if (s == "projective") return CorrespondenceMode::projective;
  throw Error(ErrorCode::InvalidArgument, "unknown correspondence mode '" + std::string(s) + "'");
}

ErrorMetric error_metric_from_string(std::string_view s) {
  if (s == "point-point") return ErrorMetric::point_point;
  if (s == "point-plane") return ErrorMetric::point_plane;
  throw Error(ErrorCode::InvalidArgument, "unknown error metric '" + std::string(s) + "'");
}

void IcpParams::validate() const {
  if (max_iterations < 1) throw Error(ErrorCode::InvalidArgument, "max_iterations must be >= 1");
  if (!(error_tolerance > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "error_tolerance must be positive");
  }
  if (max_pair_distance && !(*max_pair_distance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max_pair_distance must be non-negative");
  }
  if (correspondence_mode == CorrespondenceMode::projective && !projective_rig) {
    throw Error(ErrorCode::MissingRig, "projective correspondences need the target camera");
  }
}

IcpReport icp(const PointCloud& source, const PointCloud& target, const IcpParams& params,
              const RigidTransform& initial) {
  params.validate();
  if (source.empty() || target.empty()) {
    throw Error(ErrorCode::NoCorrespondences, "ICP needs two non-empty clouds");
  }
  if (params.error_metric == ErrorMetric::point_plane && !target.has_normals()) {
    throw Error(ErrorCode::MissingNormals, "point-plane error needs target normals");
  }
  if (params.correspondence_mode == CorrespondenceMode::normal_shooting &&
      !source.has_normals()) {
    throw Error(ErrorCode::MissingNormals, "normal shooting needs source normals");
  }
  const double gate = params.max_pair_distance ? *params.max_pair_distance
                                               : default_pair_distance(target);
  auto interior = [&](const PointCloud& c) {
    return params.reject_edges && c.has_provenance() ? without_edges(c) : c;
  };
  const PointCloud src = interior(source);
  const PointCloud& dst = target;
  std::vector<std::uint8_t> dst_edge;
  if (params.reject_edges && target.has_provenance()) dst_edge = edge_points(target);
  if (src.empty()) {
    throw Error(ErrorCode::NoCorrespondences, "no interior points to pair");
  }
  std::optional<KdTree> index;
  if (params.correspondence_mode != CorrespondenceMode::projective) index.emplace(dst.points);

  auto pair = [&](const PointCloud& moved, int it) {
    Pairs pairs;
    switch (params.correspondence_mode) {
      case CorrespondenceMode::closest_point:
        pairs = correspond_closest(moved, *index, gate);
        break;
      case CorrespondenceMode::normal_shooting:
        pairs = correspond_normal_shoot(moved, *index, gate);
        break;
      case CorrespondenceMode::projective:
        pairs = correspond_projective(moved, dst, *params.projective_rig, gate);
        break;
    }
    if (!dst_edge.empty()) {
      std::erase_if(pairs, [&](const Pair& p) { return dst_edge[p.target] != 0; });
    }
    if (pairs.empty()) {
      throw Error(ErrorCode::NoCorrespondences,
                  "ICP iteration " + std::to_string(it) + " found no correspondences");
    }
    return pairs;
  };
  auto cost = [&](const PointCloud& moved, const Pairs& pairs) {
    const auto id = RigidTransform::identity();
    if (params.error_metric == ErrorMetric::point_plane) {
      return error_point_plane(moved, dst, pairs, id);
    }
    if (!std::isfinite(gate)) return error_point_point(moved, dst, pairs, id);
    const double paired = error_point_point(moved, dst, pairs, id) * pairs.size();
    const double unpaired = static_cast<double>(moved.size() - pairs.size()) * gate * gate;
    return (paired + unpaired) / static_cast<double>(moved.size());
  };

  IcpReport rep;
  rep.transform = initial;
  PointCloud moved = transformed(src, rep.transform);
  Pairs pairs = pair(moved, 0);
  double prev = cost(moved, pairs);
  for (int it = 0; it < params.max_iterations; ++it) {
    const RigidTransform step = rigid_from_pairs(moved, dst, pairs);
    rep.transform = step * rep.transform;
    rep.transform.R = nearest_rotation(rep.transform.R);
    moved = transformed(src, rep.transform);
    pairs = pair(moved, it + 1);
    const double err = cost(moved, pairs);
    rep.error_trace.push_back(err);
    rep.pair_counts.push_back(pairs.size());
    rep.iterations = it + 1;
    if (err < params.error_tolerance || std::abs(prev - err) <= 1e-10 * prev) {
      rep.converged = true;
      break;
    }
    prev = err;
  }
  return rep;
}

PointCloud voxel_dedup(const PointCloud& cloud, double voxel) {
  if (!(voxel > 0.0) || cloud.empty()) return cloud;
  struct KeyHash {
    std::size_t operator()(const std::array<std::int64_t, 3>& k) const noexcept {
      std::uint64_t h = 1469598103934665603ull;
      for (auto v : k) {
        h ^= static_cast<std::uint64_t>(v);
        h *= 1099511628211ull;
      }
      return static_cast<std::size_t>(h);
    }
  };
  std::unordered_map<std::array<std::int64_t, 3>, std::size_t, KeyHash> seen;
  seen.reserve(cloud.size());
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    const std::array<std::int64_t, 3> key{static_cast<std::int64_t>(std::floor(p.x() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.y() / voxel)),
                                          static_cast<std::int64_t>(std::floor(p.z() / voxel))};
    if (!seen.emplace(key, i).second) continue;
    out.points.push_back(p);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    if (cloud.has_provenance()) out.provenance.push_back(cloud.provenance[i]);
  }
  return out;
}

namespace {

Vec3 centroid(const PointCloud& c) {
  Vec3 m = Vec3::Zero();
  for (const auto& p : c.points) m += p;
  return c.empty() ? m : Vec3(m / static_cast<double>(c.size()));
}

}  // namespace

StitchResult stitch_sequence(std::span<const PointCloud> clouds,
                             std::span<const RigidTransform> init_guesses,
                             const IcpParams& params, const StitchOptions& options) {
  if (clouds.empty()) throw Error(ErrorCode::InvalidArgument, "no clouds to stitch");
  const std::size_t steps = clouds.size() - 1;
  const std::size_t total = steps + (options.close_loop && clouds.size() > 1 ? 1 : 0);
  if (!init_guesses.empty() && init_guesses.size() != steps && init_guesses.size() != total) {
    throw Error(ErrorCode::InvalidArgument, "expected one initial guess per step");
  }
  auto seed = [&](std::size_t k, const PointCloud& target) {
    if (k < init_guesses.size()) return init_guesses[k];
    const Vec3 point = options.axis_point ? *options.axis_point : centroid(target);
    return rotation_about_line(point, options.axis_direction,
                               -options.step_deg * std::numbers::pi / 180.0);
  };
  auto run = [&](std::size_t k, const PointCloud& src, const PointCloud& dst) {
    try {
      return icp(src, dst, params, seed(k, dst));
    } catch (const Error& e) {
      throw Error(ErrorCode::StepFailed, "step " + std::to_string(k) + ": " + e.what());
    }
  };

  StitchResult out;
  out.to_first.push_back(RigidTransform::identity());
  for (std::size_t k = 0; k < steps; ++k) {
    IcpReport rep = run(k, clouds[k + 1], clouds[k]);
    out.steps.push_back(rep.transform);
    out.to_first.push_back(out.to_first.back() * rep.transform);
    out.to_first.back().R = nearest_rotation(out.to_first.back().R);
    out.reports.push_back(std::move(rep));
  }
  if (total > steps) {
    IcpReport rep = run(steps, clouds.front(), clouds.back());
    out.closing = rep.transform;
    out.reports.push_back(std::move(rep));
  }

  PointCloud merged;
  bool normals = true, provenance = true;
  for (const auto& c : clouds) {
    normals = normals && c.has_normals();
    provenance = provenance && c.has_provenance();
  }
  for (std::size_t i = 0; i < clouds.size(); ++i) {
    const PointCloud moved = transformed(clouds[i], out.to_first[i]);
    merged.points.insert(merged.points.end(), moved.points.begin(), moved.points.end());
    if (normals) merged.normals.insert(merged.normals.end(), moved.normals.begin(), moved.normals.end());
    if (provenance) {
      merged.provenance.insert(merged.provenance.end(), moved.provenance.begin(),
                               moved.provenance.end());
    }
  }
  if (options.dedup_fraction > 0.0 && !merged.empty()) {
    Vec3 lo = merged.points[0], hi = merged.points[0];
    for (const auto& p : merged.points) {
      lo = lo.cwiseMin(p);
      hi = hi.cwiseMax(p);
    }
    merged = voxel_dedup(merged, options.dedup_fraction * (hi - lo).norm());
  }
  out.merged = std::move(merged);
  return out;
}

}  // namespace slscan::reg
