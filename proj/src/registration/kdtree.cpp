#include "slscan/kdtree.hpp"

#include "slscan/error.hpp"
#include "slscan/kernels.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <queue>

namespace slscan {
namespace {

bool better(double d, std::size_t i, double best_d, std::size_t best_i) {
  return d < best_d || (d == best_d && i < best_i);
}

double box_distance2(const Vec3& q, const Vec3& lo, const Vec3& hi) {
  double s = 0.0;
  for (int k = 0; k < 3; ++k) {
    const double d = q(k) < lo(k) ? lo(k) - q(k) : (q(k) > hi(k) ? q(k) - hi(k) : 0.0);
    s += d * d;
  }
  return s;
}

}  // namespace

double line_distance2(const Vec3& x, const Vec3& origin, const Vec3& unit_direction) noexcept {
  return (x - origin).cross(unit_direction).squaredNorm();
}

KdTree::KdTree(std::span<const Vec3> points, std::size_t leaf_size)
    : leaf_size_(std::max<std::size_t>(leaf_size, 1)) {
  if (points.size() >= std::numeric_limits<std::uint32_t>::max()) {
    throw Error(ErrorCode::InvalidArgument, "too many points for the spatial index");
  }
  index_.resize(points.size());
  std::iota(index_.begin(), index_.end(), std::size_t{0});
  std::vector<Vec3> pts(points.begin(), points.end());
  if (!pts.empty()) build(0, static_cast<std::uint32_t>(pts.size()), pts);
  xs_.resize(pts.size());
  ys_.resize(pts.size());
  zs_.resize(pts.size());
  for (std::size_t i = 0; i < pts.size(); ++i) {
    xs_[i] = pts[i].x();
    ys_[i] = pts[i].y();
    zs_[i] = pts[i].z();
  }
}

std::int32_t KdTree::build(std::uint32_t begin, std::uint32_t end, std::vector<Vec3>& pts) {
  Node node;
  node.begin = begin;
  node.end = end;
  node.lo = pts[begin];
  node.hi = pts[begin];
  for (std::uint32_t i = begin + 1; i < end; ++i) {
    node.lo = node.lo.cwiseMin(pts[i]);
    node.hi = node.hi.cwiseMax(pts[i]);
  }
  node.center = 0.5 * (node.lo + node.hi);
  for (std::uint32_t i = begin; i < end; ++i) {
    node.radius = std::max(node.radius, (pts[i] - node.center).norm());
  }
  const auto id = static_cast<std::int32_t>(nodes_.size());
  nodes_.push_back(node);
  if (end - begin <= leaf_size_) return id;

  int axis = 0;
  (node.hi - node.lo).maxCoeff(&axis);
  const std::uint32_t mid = begin + (end - begin) / 2;
  // Partition a permutation so points and original indices move together.
  std::vector<std::uint32_t> perm(end - begin);
  std::iota(perm.begin(), perm.end(), begin);
  std::nth_element(perm.begin(), perm.begin() + (mid - begin), perm.end(),
                   [&](std::uint32_t a, std::uint32_t b) {
                     return pts[a](axis) < pts[b](axis) ||
                            (pts[a](axis) == pts[b](axis) && index_[a] < index_[b]);
                   });
  std::vector<Vec3> tp(perm.size());
  std::vector<std::size_t> ti(perm.size());
  for (std::size_t k = 0; k < perm.size(); ++k) {
    tp[k] = pts[perm[k]];
    ti[k] = index_[perm[k]];
  }
  std::copy(tp.begin(), tp.end(), pts.begin() + begin);
  std::copy(ti.begin(), ti.end(), index_.begin() + begin);

  const std::int32_t l = build(begin, mid, pts);
  const std::int32_t r = build(mid, end, pts);
  nodes_[static_cast<std::size_t>(id)].left = l;
  nodes_[static_cast<std::size_t>(id)].right = r;
  return id;
}

std::optional<KdTree::Hit> KdTree::nearest(const Vec3& q, double max_dist2) const {
  if (nodes_.empty()) return std::nullopt;
  const auto& k = kernels::active();
  double best_d = max_dist2;
  std::size_t best_i = std::numeric_limits<std::size_t>::max();
  bool found = false;
  double buf[64];
  std::vector<double> big;
  double* out = buf;
  if (leaf_size_ > 64) {
    big.resize(leaf_size_);
    out = big.data();
  }
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (box_distance2(q, n.lo, n.hi) > best_d) continue;
    if (n.left < 0) {
      const std::size_t cnt = n.end - n.begin;
      k.squared_distances(xs_.data() + n.begin, ys_.data() + n.begin, zs_.data() + n.begin, cnt,
                          q.x(), q.y(), q.z(), out);
      for (std::size_t j = 0; j < cnt; ++j) {
        if (out[j] > best_d) continue;
        const std::size_t idx = index_[n.begin + j];
        if (!found || better(out[j], idx, best_d, best_i)) {
          best_d = out[j];
          best_i = idx;
          found = true;
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    // Push the farther child first so the nearer one is searched first.
    if (box_distance2(q, l.lo, l.hi) <= box_distance2(q, r.lo, r.hi)) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  if (!found) return std::nullopt;
  return Hit{best_i, best_d};
}

std::vector<KdTree::Hit> KdTree::knn(const Vec3& q, std::size_t k) const {
  std::vector<Hit> out;
  if (nodes_.empty() || k == 0) return out;
  const auto& kt = kernels::active();
  auto cmp = [](const Hit& a, const Hit& b) { return better(a.dist2, a.index, b.dist2, b.index); };
  // Max-heap on (dist2, index): the top is the worst of the current best k.
  std::priority_queue<Hit, std::vector<Hit>, decltype(cmp)> heap(cmp);
  std::vector<double> buf(leaf_size_);
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (heap.size() == k && box_distance2(q, n.lo, n.hi) > heap.top().dist2) continue;
    if (n.left < 0) {
      const std::size_t cnt = n.end - n.begin;
      kt.squared_distances(xs_.data() + n.begin, ys_.data() + n.begin, zs_.data() + n.begin, cnt,
                           q.x(), q.y(), q.z(), buf.data());
      for (std::size_t j = 0; j < cnt; ++j) {
        const Hit h{index_[n.begin + j], buf[j]};
        if (heap.size() < k) {
          heap.push(h);
        } else if (better(h.dist2, h.index, heap.top().dist2, heap.top().index)) {
          heap.pop();
          heap.push(h);
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    if (box_distance2(q, l.lo, l.hi) <= box_distance2(q, r.lo, r.hi)) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  out.resize(heap.size());
  for (std::size_t i = out.size(); i-- > 0;) {
    out[i] = heap.top();
    heap.pop();
  }
  return out;
}

std::optional<KdTree::Hit> KdTree::nearest_to_line(const Vec3& origin, const Vec3& direction,
                                                   double max_dist2) const {
  if (nodes_.empty()) return std::nullopt;
  const double len = direction.norm();
  if (!(len > 0.0)) throw Error(ErrorCode::InvalidArgument, "line direction must be non-zero");
  const Vec3 d = direction / len;
  double best_d = max_dist2;
  std::size_t best_i = std::numeric_limits<std::size_t>::max();
  bool found = false;
  // Lower bound on the line distance of anything inside a node's bounding
  // sphere, loosened slightly so rounding never prunes an exact tie.
  auto bound = [&](const Node& n) {
    const double c = std::sqrt(line_distance2(n.center, origin, d));
    const double lb = std::max(0.0, c - n.radius);
    return lb * lb * (1.0 - 1e-9);
  };
  std::vector<std::int32_t> stack{0};
  while (!stack.empty()) {
    const Node& n = nodes_[static_cast<std::size_t>(stack.back())];
    stack.pop_back();
    if (bound(n) > best_d) continue;
    if (n.left < 0) {
      for (std::uint32_t j = n.begin; j < n.end; ++j) {
        const double dist = line_distance2(Vec3(xs_[j], ys_[j], zs_[j]), origin, d);
        if (dist > best_d) continue;
        const std::size_t idx = index_[j];
        if (!found || better(dist, idx, best_d, best_i)) {
          best_d = dist;
          best_i = idx;
          found = true;
        }
      }
      continue;
    }
    const Node& l = nodes_[static_cast<std::size_t>(n.left)];
    const Node& r = nodes_[static_cast<std::size_t>(n.right)];
    if (bound(l) <= bound(r)) {
      stack.push_back(n.right);
      stack.push_back(n.left);
    } else {
      stack.push_back(n.left);
      stack.push_back(n.right);
    }
  }
  if (!found) return std::nullopt;
  return Hit{best_i, best_d};
}

}  // namespace slscan
