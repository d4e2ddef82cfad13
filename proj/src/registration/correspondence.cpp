#include "slscan/registration.hpp"

#include "slscan/error.hpp"
#include "slscan/parallel.hpp"

#include <Eigen/Eigenvalues>
#include <Eigen/SVD>

#include <algorithm>
#include <cmath>

namespace slscan::reg {
namespace {

// Runs fn(i) -> optional<Pair> for every source point in parallel and
// gathers the hits in source order.
template <typename Fn>
Pairs gather(std::size_t n, Fn&& fn) {
  std::vector<std::optional<Pair>> hits(n);
  parallel_for(n, [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) hits[i] = fn(i);
  });
  Pairs out;
  for (const auto& h : hits) {
    if (h) out.push_back(*h);
  }
  return out;
}

double gate2(double max_pair_distance) {
  if (std::isinf(max_pair_distance)) return std::numeric_limits<double>::infinity();
  if (!(max_pair_distance >= 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "max pair distance must be non-negative");
  }
  return max_pair_distance * max_pair_distance;
}

}  // namespace

RigidTransform rigid_from_correspondences(std::span<const Vec3> target,
                                          std::span<const Vec3> source) {
  if (target.size() != source.size()) {
    throw Error(ErrorCode::InvalidArgument, "point lists differ in length");
  }
  if (source.size() < 3) {
    throw Error(ErrorCode::DegenerateConfiguration, "rigid fit needs at least 3 pairs");
  }
  const double n = static_cast<double>(source.size());
  Vec3 mx = Vec3::Zero(), mp = Vec3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    mx += target[i];
    mp += source[i];
  }
  mx /= n;
  mp /= n;
  Mat3 Q = Mat3::Zero();
  for (std::size_t i = 0; i < source.size(); ++i) {
    Q += (target[i] - mx) * (source[i] - mp).transpose();
  }
  Eigen::JacobiSVD<Mat3> svd(Q, Eigen::ComputeFullU | Eigen::ComputeFullV);
  const Vec3 s = svd.singularValues();
  if (!(s(1) > 1e-12 * s(0))) {
    throw Error(ErrorCode::DegenerateConfiguration, "points are collinear or coincident");
  }
  const Mat3 U = svd.matrixU();
  const Mat3 V = svd.matrixV();
  Mat3 D = Mat3::Identity();
  D(2, 2) = (U * V.transpose()).determinant() < 0.0 ? -1.0 : 1.0;
  RigidTransform T;
  T.R = U * D * V.transpose();
  T.t = mx - T.R * mp;
  return T;
}

RigidTransform rigid_from_pairs(const PointCloud& source, const PointCloud& target,
                                const Pairs& pairs) {
  std::vector<Vec3> x, p;
  x.reserve(pairs.size());
  p.reserve(pairs.size());
  for (const auto& pr : pairs) {
    x.push_back(target.points[pr.target]);
    p.push_back(source.points[pr.source]);
  }
  return rigid_from_correspondences(x, p);
}

PointCloud estimate_normals(const PointCloud& cloud, std::size_t k, const Vec3& viewpoint) {
  if (k < 3 || k >= cloud.size()) {
    throw Error(ErrorCode::TooFewPoints, "normal estimation needs 3 <= k < cloud size (k = " +
                                             std::to_string(k) + ", size = " +
                                             std::to_string(cloud.size()) + ")");
  }
  const KdTree tree(cloud.points);
  PointCloud out = cloud;
  out.normals.assign(cloud.size(), Vec3::UnitZ());
  parallel_for(cloud.size(), [&](std::size_t b, std::size_t e) {
    for (std::size_t i = b; i < e; ++i) {
      const auto nb = tree.knn(cloud.points[i], k);
      Vec3 mean = Vec3::Zero();
      for (const auto& h : nb) mean += cloud.points[h.index];
      mean /= static_cast<double>(nb.size());
      Mat3 C = Mat3::Zero();
      for (const auto& h : nb) {
        const Vec3 d = cloud.points[h.index] - mean;
        C += d * d.transpose();
      }
      Eigen::SelfAdjointEigenSolver<Mat3> es(C);
      Vec3 n = es.eigenvectors().col(0).normalized();
      if (n.dot(viewpoint - cloud.points[i]) < 0.0) n = -n;
      out.normals[i] = n;
    }
  });
  return out;
}

double default_pair_distance(const PointCloud& target) {
  if (target.empty()) return 0.0;
  Vec3 lo = target.points[0], hi = target.points[0];
  for (const auto& p : target.points) {
    lo = lo.cwiseMin(p);
    hi = hi.cwiseMax(p);
  }
  return 0.1 * (hi - lo).norm();
}

Pairs correspond_closest(const PointCloud& source, const PointCloud& target,
                         double max_pair_distance) {
  return correspond_closest(source, KdTree(target.points), max_pair_distance);
}

Pairs correspond_closest(const PointCloud& source, const KdTree& index, double max_pair_distance) {
  const double g2 = gate2(max_pair_distance);
  return gather(source.size(), [&](std::size_t i) -> std::optional<Pair> {
    const auto hit = index.nearest(source.points[i], g2);
    if (!hit) return std::nullopt;
    return Pair{i, hit->index, hit->dist2};
  });
}

Pairs correspond_normal_shoot(const PointCloud& source, const PointCloud& target,
                              double max_pair_distance) {
  if (!source.has_normals()) throw Error(ErrorCode::MissingNormals, "source cloud has no normals");
  return correspond_normal_shoot(source, KdTree(target.points), max_pair_distance);
}

Pairs correspond_normal_shoot(const PointCloud& source, const KdTree& index,
                              double max_pair_distance) {
  if (!source.has_normals()) throw Error(ErrorCode::MissingNormals, "source cloud has no normals");
  const double g2 = gate2(max_pair_distance);
  return gather(source.size(), [&](std::size_t i) -> std::optional<Pair> {
    const auto hit = index.nearest_to_line(source.points[i], source.normals[i], g2);
    if (!hit) return std::nullopt;
    return Pair{i, hit->index, hit->dist2};
  });
}

PixelIndex::PixelIndex(const PointCloud& cloud, int width, int height)
    : width_(width), height_(height) {
  if (!cloud.has_provenance()) {
    throw Error(ErrorCode::MissingProvenance, "target cloud has no pixel provenance");
  }
  if (width < 1 || height < 1) throw Error(ErrorCode::InvalidArgument, "invalid image size");
  cells_.assign(static_cast<std::size_t>(width) * height, -1);
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& px = cloud.provenance[i];
    if (px.x < 0 || px.y < 0 || px.x >= width || px.y >= height) continue;
    auto& c = cells_[static_cast<std::size_t>(px.y) * width + px.x];
    if (c < 0) c = static_cast<std::int64_t>(i);
  }
}

std::optional<std::size_t> PixelIndex::at(int x, int y) const {
  if (x < 0 || y < 0 || x >= width_ || y >= height_) return std::nullopt;
  const auto c = cells_[static_cast<std::size_t>(y) * width_ + x];
  if (c < 0) return std::nullopt;
  return static_cast<std::size_t>(c);
}

Pairs correspond_projective(const PointCloud& source, const PointCloud& target,
                            const ProjectiveRig& rig, double max_pair_distance) {
  const PixelIndex lookup(target, rig.camera.width, rig.camera.height);
  const double g2 = gate2(max_pair_distance);
  return gather(source.size(), [&](std::size_t i) -> std::optional<Pair> {
    const Vec3 Xc = rig.pose.apply(source.points[i]);
    if (!(Xc.z() > 0.0)) return std::nullopt;
    Projection pr;
    try {
      pr = project(rig.camera, rig.pose, source.points[i]);
    } catch (const Error&) {
      return std::nullopt;
    }
    if (!pr.pixel.allFinite()) return std::nullopt;
    const double fx = std::floor(pr.pixel.x());
    const double fy = std::floor(pr.pixel.y());
    if (fx < 0.0 || fy < 0.0 || fx >= rig.camera.width || fy >= rig.camera.height) {
      return std::nullopt;
    }
    const auto j = lookup.at(static_cast<int>(fx), static_cast<int>(fy));
    if (!j) return std::nullopt;
    const Vec3 d = target.points[*j] - source.points[i];
    const double d2 = (d.x() * d.x() + d.y() * d.y()) + d.z() * d.z();
    if (d2 > g2) return std::nullopt;
    return Pair{i, *j, d2};
  });
}

std::vector<std::uint8_t> edge_points(const PointCloud& cloud, double jump) {
  if (!cloud.has_provenance()) {
    throw Error(ErrorCode::MissingProvenance, "cloud has no pixel provenance");
  }
  std::vector<std::uint8_t> edge(cloud.size(), 0);
  if (cloud.empty()) return edge;
  std::int32_t x0 = cloud.provenance[0].x, x1 = x0, y0 = cloud.provenance[0].y, y1 = y0;
  for (const auto& px : cloud.provenance) {
    x0 = std::min(x0, px.x);
    x1 = std::max(x1, px.x);
    y0 = std::min(y0, px.y);
    y1 = std::max(y1, px.y);
  }
  const std::int64_t w = std::int64_t{x1} - x0 + 1, h = std::int64_t{y1} - y0 + 1;
  std::vector<std::int64_t> grid(static_cast<std::size_t>(w * h), -1);
  auto cell = [&](std::int64_t x, std::int64_t y) -> std::int64_t {
    if (x < x0 || y < y0 || x > x1 || y > y1) return -1;
    return grid[static_cast<std::size_t>((y - y0) * w + (x - x0))];
  };
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& px = cloud.provenance[i];
    auto& c = grid[static_cast<std::size_t>((std::int64_t{px.y} - y0) * w + (px.x - x0))];
    if (c < 0) c = static_cast<std::int64_t>(i);
  }

  std::vector<double> spacing;
  spacing.reserve(2 * cloud.size());
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& px = cloud.provenance[i];
    for (const auto j : {cell(px.x + 1, px.y), cell(px.x, px.y + 1)}) {
      if (j >= 0) spacing.push_back((cloud.points[j] - cloud.points[i]).norm());
    }
  }
  double limit = std::numeric_limits<double>::infinity();
  if (!spacing.empty()) {
    auto mid = spacing.begin() + static_cast<std::ptrdiff_t>(spacing.size() / 2);
    std::nth_element(spacing.begin(), mid, spacing.end());
    limit = jump * *mid;
  }

  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const auto& px = cloud.provenance[i];
    for (int dy = -1; dy <= 1 && !edge[i]; ++dy) {
      for (int dx = -1; dx <= 1; ++dx) {
        if (dx == 0 && dy == 0) continue;
        const auto j = cell(std::int64_t{px.x} + dx, std::int64_t{px.y} + dy);
        const double reach = (dx != 0 && dy != 0) ? std::sqrt(2.0) * limit : limit;
        if (j < 0 || (cloud.points[j] - cloud.points[i]).norm() > reach) {
          edge[i] = 1;
          break;
        }
      }
    }
  }
  return edge;
}

PointCloud without_edges(const PointCloud& cloud, double jump) {
  const auto edge = edge_points(cloud, jump);
  PointCloud out;
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    if (edge[i]) continue;
    out.points.push_back(cloud.points[i]);
    if (cloud.has_normals()) out.normals.push_back(cloud.normals[i]);
    out.provenance.push_back(cloud.provenance[i]);
  }
  return out;
}

double error_point_point(const PointCloud& source, const PointCloud& target, const Pairs& pairs,
                         const RigidTransform& T) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no pairs to evaluate");
  double s = 0.0;
  for (const auto& p : pairs) {
    s += (target.points[p.target] - T.apply(source.points[p.source])).squaredNorm();
  }
  return s / static_cast<double>(pairs.size());
}

double error_point_plane(const PointCloud& source, const PointCloud& target, const Pairs& pairs,
                         const RigidTransform& T) {
  if (pairs.empty()) throw Error(ErrorCode::EmptyPairs, "no pairs to evaluate");
  if (!target.has_normals()) throw Error(ErrorCode::MissingNormals, "target cloud has no normals");
  double s = 0.0;
  for (const auto& p : pairs) {
    const double r =
        (target.points[p.target] - T.apply(source.points[p.source])).dot(target.normals[p.target]);
    s += r * r;
  }
  return s / static_cast<double>(pairs.size());
}

}  // namespace slscan::reg
