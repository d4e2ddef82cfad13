#include "slscan/error.hpp"
#include "slscan/kdtree.hpp"
#include "slscan/registration.hpp"
#include "slscan/scenes.hpp"
#include "slscan/simulator.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <numbers>
#include <random>

namespace slscan::reg {
namespace {

constexpr double kDeg = std::numbers::pi / 180.0;

ErrorCode code_of(auto&& fn) {
  try {
    fn();
  } catch (const Error& e) {
    return e.code();
  }
  ADD_FAILURE() << "no error thrown";
  return ErrorCode::InvalidArgument;
}

// Bumpy height field without symmetries, one point per grid pixel.
PointCloud height_field(int n = 60, double spacing = 1.0) {
  PointCloud c;
  for (int y = 0; y < n; ++y) {
    for (int x = 0; x < n; ++x) {
      const double X = x * spacing, Y = y * spacing;
      const double z = 8.0 * std::sin(X / 9.0) * std::cos(Y / 13.0) + 0.004 * X * X - 0.003 * X * Y;
      c.points.emplace_back(X, Y, z);
      c.provenance.push_back({x, y});
    }
  }
  return c;
}

RigidTransform small_motion(std::mt19937_64& rng, double max_deg, double max_t) {
  std::uniform_real_distribution<double> u(-1, 1);
  RigidTransform T;
  T.R = rotation_about(Vec3(u(rng), u(rng), u(rng)).normalized(), max_deg * kDeg * u(rng));
  T.t = max_t * Vec3(u(rng), u(rng), u(rng));
  return T;
}

double rotation_error_deg(const RigidTransform& a, const RigidTransform& b) {
  return rotation_angle(a.R * b.R.transpose()) / kDeg;
}

TEST(RigidFit, Identity) {
  const auto c = height_field(10);
  const RigidTransform T = rigid_from_correspondences(c.points, c.points);
  EXPECT_NEAR((T.R - Mat3::Identity()).norm(), 0.0, 1e-12);
  EXPECT_NEAR(T.t.norm(), 0.0, 1e-10);
}

TEST(RigidFit, RecoversNinetyDegrees) {
  const auto c = height_field(10);
  RigidTransform G;
  G.R = rotation_about(Vec3::UnitZ(), 90.0 * kDeg);
  G.t = Vec3(5, -3, 2);
  const auto moved = transformed(c, G);
  const RigidTransform T = rigid_from_correspondences(moved.points, c.points);
  EXPECT_NEAR((T.R - G.R).norm(), 0.0, 1e-12);
  EXPECT_NEAR((T.t - G.t).norm(), 0.0, 1e-10);
}

TEST(RigidFit, ReflectionGuard) {
  std::mt19937_64 rng(2);
  std::normal_distribution<double> g;
  std::vector<Vec3> src, dst;
  for (int i = 0; i < 50; ++i) {
    src.emplace_back(g(rng), g(rng), g(rng));
    dst.emplace_back(-src.back().x(), src.back().y(), src.back().z());
  }
  const RigidTransform T = rigid_from_correspondences(dst, src);
  EXPECT_TRUE(T.is_valid());
  EXPECT_NEAR(T.R.determinant(), 1.0, 1e-12);
}

TEST(RigidFit, OptimalAgainstPerturbations) {
  std::mt19937_64 rng(3);
  std::normal_distribution<double> g;
  std::vector<Vec3> src, dst;
  const RigidTransform G = small_motion(rng, 40, 10);
  for (int i = 0; i < 40; ++i) {
    src.emplace_back(10 * g(rng), 10 * g(rng), 10 * g(rng));
    dst.push_back(G * src.back() + Vec3(g(rng), g(rng), g(rng)));
  }
  auto sse = [&](const RigidTransform& T) {
    double s = 0;
    for (std::size_t i = 0; i < src.size(); ++i) s += (dst[i] - T * src[i]).squaredNorm();
    return s;
  };
  const RigidTransform best = rigid_from_correspondences(dst, src);
  const double e0 = sse(best);
  for (int k = 0; k < 200; ++k) {
    EXPECT_GE(sse(small_motion(rng, 2, 0.5) * best), e0);
  }
}

TEST(RigidFit, Degenerate) {
  const std::vector<Vec3> two = {{0, 0, 0}, {1, 0, 0}};
  EXPECT_EQ(code_of([&] { rigid_from_correspondences(two, two); }),
            ErrorCode::DegenerateConfiguration);
  const std::vector<Vec3> line = {{0, 0, 0}, {1, 0, 0}, {2, 0, 0}, {3, 0, 0}};
  EXPECT_EQ(code_of([&] { rigid_from_correspondences(line, line); }),
            ErrorCode::DegenerateConfiguration);
}

TEST(KdTree, MatchesBruteForce) {
  std::mt19937_64 rng(5);
  std::uniform_int_distribution<int> u(-20, 20);
  std::vector<Vec3> pts;
  // Integer coordinates force many exact ties.
  for (int i = 0; i < 5000; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const KdTree tree(pts);
  EXPECT_EQ(tree.size(), pts.size());
  std::uniform_real_distribution<double> q(-25, 25);
  for (int k = 0; k < 300; ++k) {
    const Vec3 p = k % 2 ? Vec3(q(rng), q(rng), q(rng)) : Vec3(u(rng), u(rng), u(rng));
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    std::vector<KdTree::Hit> all;
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const Vec3 d = pts[i] - p;
      const double d2 = (d.x() * d.x() + d.y() * d.y()) + d.z() * d.z();
      all.push_back({i, d2});
      if (d2 < bd) {
        bd = d2;
        best = i;
      }
    }
    const auto hit = tree.nearest(p);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->index, best);
    EXPECT_EQ(hit->dist2, bd);
    std::sort(all.begin(), all.end(), [](const auto& a, const auto& b) {
      return a.dist2 != b.dist2 ? a.dist2 < b.dist2 : a.index < b.index;
    });
    const auto nn = tree.knn(p, 12);
    ASSERT_EQ(nn.size(), 12u);
    for (std::size_t j = 0; j < nn.size(); ++j) EXPECT_EQ(nn[j], all[j]);
    if (bd > 0) {
      EXPECT_FALSE(tree.nearest(p, bd * 0.999));
    }
  }
}

TEST(KdTree, NearestToLineMatchesBruteForce) {
  std::mt19937_64 rng(6);
  std::uniform_real_distribution<double> u(-50, 50);
  std::vector<Vec3> pts;
  for (int i = 0; i < 3000; ++i) pts.emplace_back(u(rng), u(rng), u(rng));
  const KdTree tree(pts);
  for (int k = 0; k < 100; ++k) {
    const Vec3 o(u(rng), u(rng), u(rng));
    const Vec3 d = Vec3(u(rng), u(rng), u(rng)).normalized();
    std::size_t best = 0;
    double bd = std::numeric_limits<double>::infinity();
    for (std::size_t i = 0; i < pts.size(); ++i) {
      const double d2 = line_distance2(pts[i], o, d);
      if (d2 < bd) {
        bd = d2;
        best = i;
      }
    }
    const auto hit = tree.nearest_to_line(o, 3.0 * d);
    ASSERT_TRUE(hit);
    EXPECT_EQ(hit->index, best);
    EXPECT_NEAR(hit->dist2, bd, 1e-9);
  }
  EXPECT_THROW(tree.nearest_to_line(Vec3::Zero(), Vec3::Zero()), Error);
}

TEST(KdTree, EmptyAndSmall) {
  const KdTree empty;
  EXPECT_FALSE(empty.nearest(Vec3::Zero()));
  EXPECT_TRUE(empty.knn(Vec3::Zero(), 3).empty());
  const std::vector<Vec3> one = {{1, 2, 3}};
  const KdTree t(one);
  EXPECT_EQ(t.knn(Vec3::Zero(), 5).size(), 1u);
}

TEST(Correspondence, ClosestSelfPairs) {
  const auto c = height_field(20);
  const auto pairs = correspond_closest(c, c, 0.5);
  ASSERT_EQ(pairs.size(), c.size());
  for (std::size_t i = 0; i < pairs.size(); ++i) {
    EXPECT_EQ(pairs[i], (Pair{i, i, 0.0}));
  }
}

TEST(Correspondence, ClosestGate) {
  const auto c = height_field(20);
  RigidTransform shift;
  shift.t = Vec3(0, 0, 1.0);
  const auto up = transformed(c, shift);
  EXPECT_TRUE(correspond_closest(up, c, 0.2).empty());
  EXPECT_EQ(correspond_closest(up, c, 5.0).size(), c.size());
  EXPECT_EQ(code_of([&] { correspond_closest(up, c, -1.0); }), ErrorCode::InvalidArgument);
}

TEST(Correspondence, NormalShooting) {
  PointCloud plane;
  for (int y = 0; y < 10; ++y) {
    for (int x = 0; x < 10; ++x) {
      plane.points.emplace_back(x, y, 0);
      plane.normals.push_back(Vec3::UnitZ());
    }
  }
  PointCloud src = plane;
  for (auto& p : src.points) p.z() = 3.0;
  const auto pairs = correspond_normal_shoot(src, plane, 0.5);
  ASSERT_EQ(pairs.size(), plane.size());
  for (const auto& p : pairs) EXPECT_EQ(p.source, p.target);
  src.normals.clear();
  EXPECT_EQ(code_of([&] { correspond_normal_shoot(src, plane, 1.0); }), ErrorCode::MissingNormals);
}

TEST(Correspondence, ProjectiveSelfPairs) {
  const auto rig = sim::desk_rig();
  const auto gt = sim::ground_truth(rig, sim::cup_scene());
  const ProjectiveRig prig{rig.camera.model, RigidTransform::identity()};
  const auto pairs = correspond_projective(gt.cloud, gt.cloud, prig, 1.0);
  ASSERT_EQ(pairs.size(), gt.cloud.size());
  for (const auto& p : pairs) {
    EXPECT_EQ(p.source, p.target);
    EXPECT_EQ(p.dist2, 0.0);
  }
  PointCloud bare;
  bare.points = gt.cloud.points;
  EXPECT_EQ(code_of([&] { correspond_projective(bare, bare, prig, 1.0); }),
            ErrorCode::MissingProvenance);
}

TEST(ErrorMetrics, Values) {
  const auto c = height_field(10);
  Pairs pairs;
  for (std::size_t i = 0; i < c.size(); ++i) pairs.push_back({i, i, 0.0});
  EXPECT_EQ(error_point_point(c, c, pairs, RigidTransform::identity()), 0.0);
  RigidTransform up;
  up.t = Vec3(0, 0, 2);
  EXPECT_NEAR(error_point_point(c, c, pairs, up), 4.0, 1e-12);
  PointCloud plane;
  for (int i = 0; i < 10; ++i) {
    plane.points.emplace_back(i, 0, 0);
    plane.normals.push_back(Vec3::UnitZ());
  }
  Pairs pp;
  for (std::size_t i = 0; i < plane.size(); ++i) pp.push_back({i, i, 0.0});
  RigidTransform slide;
  slide.t = Vec3(3, 1, 0);
  EXPECT_NEAR(error_point_plane(plane, plane, pp, slide), 0.0, 1e-15);
  slide.t = Vec3(0, 0, 2);
  EXPECT_NEAR(error_point_plane(plane, plane, pp, slide), 4.0, 1e-12);
  EXPECT_EQ(code_of([&] { error_point_point(c, c, {}, up); }), ErrorCode::EmptyPairs);
  EXPECT_EQ(code_of([&] { error_point_plane(c, c, pairs, up); }), ErrorCode::MissingNormals);
}

TEST(Normals, PlaneAndSphere) {
  auto plane = height_field(10);
  for (auto& p : plane.points) p.z() = 0.0;
  const auto pn = estimate_normals(plane, 8, Vec3(0, 0, 100));
  for (const auto& n : pn.normals) EXPECT_NEAR(n.z(), 1.0, 1e-12);

  PointCloud sphere;
  std::mt19937_64 rng(8);
  std::normal_distribution<double> g;
  for (int i = 0; i < 4000; ++i) sphere.points.push_back(50.0 * Vec3(g(rng), g(rng), g(rng)).normalized());
  const auto sn = estimate_normals(sphere, 10, Vec3::Zero());
  for (std::size_t i = 0; i < sphere.size(); ++i) {
    EXPECT_LT(sn.normals[i].dot(sphere.points[i].normalized()), -0.99);
  }
  EXPECT_EQ(code_of([&] { estimate_normals(plane, 2); }), ErrorCode::TooFewPoints);
  EXPECT_EQ(code_of([&] { estimate_normals(plane, plane.size()); }), ErrorCode::TooFewPoints);
}

TEST(Modes, StringRoundTrip) {
  for (auto m : {CorrespondenceMode::closest_point, CorrespondenceMode::normal_shooting,
                 CorrespondenceMode::projective}) {
    EXPECT_EQ(correspondence_mode_from_string(to_string(m)), m);
  }
  for (auto m : {ErrorMetric::point_point, ErrorMetric::point_plane}) {
    EXPECT_EQ(error_metric_from_string(to_string(m)), m);
  }
  EXPECT_THROW(correspondence_mode_from_string("nearest"), Error);
  EXPECT_THROW(error_metric_from_string("plane"), Error);
}

TEST(Icp, IdentityConvergesAtOnce) {
  const auto c = height_field(30);
  const auto rep = icp(c, c, {});
  EXPECT_TRUE(rep.converged);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_NEAR((rep.transform.R - Mat3::Identity()).norm(), 0.0, 1e-12);
  EXPECT_LT(rep.error_trace.back(), 1e-20);
}

// Larger motions on identical grids can lock onto a neighbouring grid point.
TEST(Icp, RecoversSmallMotion) {
  std::mt19937_64 rng(9);
  const auto target = height_field(50);
  for (int trial = 0; trial < 5; ++trial) {
    const RigidTransform G = small_motion(rng, 0.5, 0.3);
    const auto source = transformed(target, invert(G));
    IcpParams p;
    p.max_iterations = 200;
    const auto rep = icp(source, target, p);
    EXPECT_LT(rotation_error_deg(rep.transform, G), 1e-4) << trial;
    EXPECT_NEAR((rep.transform.t - G.t).norm(), 0.0, 1e-3) << trial;
    EXPECT_TRUE(rep.transform.is_valid());
  }
}

TEST(Icp, TraceNeverRisesClosestPoint) {
  std::mt19937_64 rng(10);
  const auto base = height_field(40);
  for (int trial = 0; trial < 10; ++trial) {
    const auto target = transformed(base, small_motion(rng, 2, 1));
    auto source = transformed(base, small_motion(rng, 6, 3));
    // Partial overlap so the gate matters.
    source.points.resize(source.size() * 2 / 3);
    source.provenance.clear();
    IcpParams p;
    p.max_pair_distance = 2.0 + trial;
    const auto rep = icp(source, target, p);
    ASSERT_EQ(rep.error_trace.size(), static_cast<std::size_t>(rep.iterations));
    ASSERT_EQ(rep.pair_counts.size(), rep.error_trace.size());
    for (std::size_t i = 1; i < rep.error_trace.size(); ++i) {
      EXPECT_LE(rep.error_trace[i], rep.error_trace[i - 1] * (1 + 1e-9)) << trial << " " << i;
    }
  }
}

TEST(Icp, ConjugationInvariance) {
  std::mt19937_64 rng(11);
  const auto target = height_field(40);
  const auto source = transformed(target, small_motion(rng, 5, 2));
  IcpParams p;
  p.max_pair_distance = 6.0;
  const auto a = icp(source, target, p);
  const RigidTransform G = small_motion(rng, 120, 50);
  const auto b = icp(transformed(source, G), transformed(target, G), p);
  const RigidTransform want = G * a.transform * invert(G);
  EXPECT_LT(rotation_error_deg(b.transform, want), 1e-6);
  EXPECT_NEAR((b.transform.t - want.t).norm(), 0.0, 1e-5);
}

TEST(Icp, PointPlaneAndNormalShooting) {
  std::mt19937_64 rng(12);
  const auto target = estimate_normals(height_field(50), 8, Vec3(25, 25, 200));
  const RigidTransform G = small_motion(rng, 3, 1);
  const auto source = transformed(target, invert(G));
  for (auto mode : {CorrespondenceMode::closest_point, CorrespondenceMode::normal_shooting}) {
    IcpParams p;
    p.correspondence_mode = mode;
    p.error_metric = ErrorMetric::point_plane;
    p.max_iterations = 300;
    const auto rep = icp(source, target, p);
    EXPECT_LT(rotation_error_deg(rep.transform, G), 0.05) << to_string(mode);
  }
}

TEST(Icp, IterationCapAndErrors) {
  std::mt19937_64 rng(13);
  const auto target = height_field(30);
  const auto source = transformed(target, small_motion(rng, 5, 2));
  IcpParams p;
  p.max_iterations = 1;
  const auto rep = icp(source, target, p);
  EXPECT_EQ(rep.iterations, 1);
  EXPECT_FALSE(rep.converged);

  IcpParams bad;
  bad.max_iterations = 0;
  EXPECT_EQ(code_of([&] { icp(source, target, bad); }), ErrorCode::InvalidArgument);
  IcpParams proj;
  proj.correspondence_mode = CorrespondenceMode::projective;
  EXPECT_EQ(code_of([&] { icp(source, target, proj); }), ErrorCode::MissingRig);
  IcpParams plane;
  plane.error_metric = ErrorMetric::point_plane;
  EXPECT_EQ(code_of([&] { icp(source, target, plane); }), ErrorCode::MissingNormals);
  RigidTransform far;
  far.t = Vec3(1e4, 0, 0);
  IcpParams tight;
  tight.max_pair_distance = 1.0;
  EXPECT_EQ(code_of([&] { icp(source, target, tight, far); }), ErrorCode::NoCorrespondences);
  EXPECT_EQ(code_of([&] { icp(PointCloud{}, target, {}); }), ErrorCode::NoCorrespondences);
}

// Seeded near the answer, as stitching does. From far away projective pairing
// can stall short of the minimum.
TEST(Icp, ProjectiveRefinesTiltedSeed) {
  const auto rig = sim::desk_rig();
  const auto views = sim::turntable_views(rig, sim::cup_scene(), 2, 3.0, sim::desk_turntable_axis());
  IcpParams p;
  p.correspondence_mode = CorrespondenceMode::projective;
  p.projective_rig = ProjectiveRig{rig.camera.model, RigidTransform::identity()};
  p.max_pair_distance = 5.0;
  p.max_iterations = 100;
  const RigidTransform& G = views[1].to_previous;
  const RigidTransform seed = G * rotation_about_line(views[1].truth.points[0], Vec3(1, 0, 0), kDeg);
  const auto rep = icp(views[1].truth, views[0].truth, p, seed);
  EXPECT_LT(rotation_error_deg(rep.transform, G), 0.5);
  EXPECT_GT(rep.pair_counts.back(), views[1].truth.size() / 2);
}

TEST(EdgePoints, GridBorderHoleAndJump) {
  auto c = height_field(10);
  for (auto& p : c.points) p.z() = 0.0;
  auto edge = edge_points(c);
  std::size_t n = 0;
  for (std::size_t i = 0; i < c.size(); ++i) {
    const auto& px = c.provenance[i];
    const bool border = px.x == 0 || px.y == 0 || px.x == 9 || px.y == 9;
    EXPECT_EQ(edge[i] != 0, border) << px.x << "," << px.y;
    n += edge[i];
  }
  EXPECT_EQ(n, 36u);
  // A depth jump marks the point and its neighbours.
  c.points[5 * 10 + 5].z() = 100.0;
  edge = edge_points(c);
  EXPECT_TRUE(edge[5 * 10 + 5]);
  EXPECT_TRUE(edge[4 * 10 + 4]);
  EXPECT_FALSE(edge[2 * 10 + 2]);
  EXPECT_EQ(without_edges(c).size(), c.size() - static_cast<std::size_t>(std::count(edge.begin(), edge.end(), 1)));
  PointCloud bare;
  bare.points = c.points;
  EXPECT_EQ(code_of([&] { edge_points(bare); }), ErrorCode::MissingProvenance);
}

TEST(VoxelDedup, KeepsFirstPerVoxel) {
  PointCloud c;
  c.points = {{0.1, 0.1, 0.1}, {0.2, 0.2, 0.2}, {1.5, 0, 0}, {0.3, 0.1, 0.9}, {-0.1, 0, 0}};
  const auto d = voxel_dedup(c, 1.0);
  ASSERT_EQ(d.size(), 3u);
  EXPECT_EQ(d.points[0], c.points[0]);
  EXPECT_EQ(d.points[1], c.points[2]);
  EXPECT_EQ(d.points[2], c.points[4]);
}

TEST(Stitch, TrueStepsCloseTheLoop) {
  // Copies of one asymmetric patch turned about a fixed axis.
  const Vec3 point(30, 30, -40), dir = Vec3(0.1, 0.2, 1).normalized();
  const auto base = height_field(25, 2.0);
  std::vector<PointCloud> clouds;
  for (int k = 0; k < 36; ++k) {
    clouds.push_back(transformed(base, rotation_about_line(point, dir, k * 10.0 * kDeg)));
  }
  IcpParams p;
  p.max_pair_distance = 3.0;
  StitchOptions opt;
  opt.axis_point = point;
  opt.axis_direction = dir;
  opt.close_loop = true;
  opt.dedup_fraction = 0.0;
  const auto r = stitch_sequence(clouds, {}, p, opt);
  ASSERT_EQ(r.steps.size(), 35u);
  ASSERT_TRUE(r.closing);
  const RigidTransform want = rotation_about_line(point, dir, -10.0 * kDeg);
  for (const auto& s : r.steps) {
    EXPECT_LT(rotation_error_deg(s, want), 1e-9);
  }
  RigidTransform loop = *r.closing;
  for (auto s = r.steps.rbegin(); s != r.steps.rend(); ++s) loop = *s * loop;
  // Composite of all 36 steps maps cloud 0 onto itself.
  EXPECT_LT(rotation_angle(loop.R) / kDeg, 1e-7);
  const auto back = transformed(clouds[0], loop);
  double worst = 0;
  for (std::size_t i = 0; i < back.size(); ++i) worst = std::max(worst, (back.points[i] - clouds[0].points[i]).norm());
  EXPECT_LT(worst, 1e-6);
  EXPECT_EQ(r.merged.size(), 36 * base.size());
  for (std::size_t i = 0; i < base.size(); ++i) {
    EXPECT_NEAR((r.merged.points[35 * base.size() + i] - clouds[0].points[i]).norm(), 0.0, 1e-6);
  }
}

TEST(Stitch, GuessCountChecked) {
  const std::vector<PointCloud> clouds(3, height_field(10));
  const std::vector<RigidTransform> one(1);
  EXPECT_EQ(code_of([&] { stitch_sequence(clouds, one, {}); }), ErrorCode::InvalidArgument);
  const std::vector<PointCloud> with_empty = {height_field(10), PointCloud{}};
  EXPECT_EQ(code_of([&] { stitch_sequence(with_empty, {}, {}); }), ErrorCode::StepFailed);
}

}  // namespace
}  // namespace slscan::reg
