#include "slscan/error.hpp"
#include "slscan/scenes.hpp"
#include "slscan/simulator.hpp"
#include "slscan/triangulation.hpp"

#include <gtest/gtest.h>

#include <cmath>
#include <map>
#include <random>

namespace slscan::tri {
namespace {

ProjectionMatrix from_rows(const Mat3& K, const Mat3& R, const Vec3& t) {
  Mat34 Rt;
  Rt.leftCols<3>() = R;
  Rt.col(3) = t;
  return {K * Rt};
}

TEST(Triangulate, AnalyticPoint) {
  const ProjectionMatrix cam = from_rows(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const ProjectionMatrix proj = from_rows(Mat3::Identity(), Mat3::Identity(), Vec3(-1, 0, 0));
  const TriangulatedPoint t = triangulate_point(cam, proj, {0, 0}, {-1, 0});
  EXPECT_NEAR((t.X - Vec3(0, 0, 1)).norm(), 0.0, 1e-12);
  EXPECT_NEAR(t.residual, 0.0, 1e-12);
  EXPECT_NEAR(t.camera_depth, 1.0, 1e-12);
  EXPECT_TRUE(t.cheirality_ok);
}

TEST(Triangulate, BuildProjectionMatchesProject) {
  const CameraModel K = sim::reference_camera();
  const RigidTransform T = sim::reference_camera_pose();
  const ProjectionMatrix P = build_projection(K, T);
  const WorldPoint X(100, 100, 100);
  const PixelPoint a = P.project(X);
  EXPECT_NEAR(a.x(), 562.8545116253314, 1e-9);
  EXPECT_NEAR(a.y(), 409.1173190874106, 1e-9);
  EXPECT_NEAR((a - project(K, T, X).pixel).norm(), 0.0, 1e-9);
}

TEST(Triangulate, RandomPointsRecovered) {
  const sim::Rig rig = sim::reference_rig();
  const StereoRig st = rig.stereo();
  const ProjectionMatrix Pc = build_projection(st.camera, RigidTransform::identity());
  const ProjectionMatrix Pp = build_projection(st.projector, st.cam_to_proj);
  std::mt19937_64 rng(7);
  std::uniform_real_distribution<double> u(-300, 300), z(1500, 2500);
  for (int i = 0; i < 1000; ++i) {
    const WorldPoint X(u(rng), u(rng), z(rng));
    const TriangulatedPoint t = triangulate_point(Pc, Pp, Pc.project(X), Pp.project(X));
    ASSERT_NEAR((t.X - X).norm(), 0.0, 1e-9 * X.norm()) << i;
    EXPECT_LT(t.residual, 1e-12);
    EXPECT_TRUE(t.cheirality_ok);
  }
}

TEST(Triangulate, ProjectionScaleInvariant) {
  const sim::Rig rig = sim::reference_rig();
  const StereoRig st = rig.stereo();
  ProjectionMatrix Pc = build_projection(st.camera, RigidTransform::identity());
  ProjectionMatrix Pp = build_projection(st.projector, st.cam_to_proj);
  const WorldPoint X(20, -40, 1900);
  const PixelPoint xc = Pc.project(X), xp = Pp.project(X);
  const WorldPoint a = triangulate_point(Pc, Pp, xc + Vec2(0.3, -0.2), xp).X;
  Pc.P *= 1e-3;
  Pp.P *= -250.0;
  const WorldPoint b = triangulate_point(Pc, Pp, xc + Vec2(0.3, -0.2), xp).X;
  EXPECT_NEAR((a - b).norm(), 0.0, 1e-9 * a.norm());
}

TEST(Triangulate, ParallelRaysDegenerate) {
  const ProjectionMatrix cam = from_rows(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const ProjectionMatrix same = cam;
  try {
    triangulate_point(cam, same, {0.1, 0.2}, {0.1, 0.2});
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::DegenerateRays);
  }
}

TEST(Triangulate, BehindReportsCheirality) {
  const ProjectionMatrix cam = from_rows(Mat3::Identity(), Mat3::Identity(), Vec3::Zero());
  const ProjectionMatrix proj = from_rows(Mat3::Identity(), Mat3::Identity(), Vec3(-1, 0, 0));
  // Point at z = -1 projects to the same normalized coordinates as these.
  const TriangulatedPoint t = triangulate_point(cam, proj, {0, 0}, {1, 0});
  EXPECT_NEAR(t.X.z(), -1.0, 1e-12);
  EXPECT_FALSE(t.cheirality_ok);
}

TEST(Triangulate, RayPlaneBothAxes) {
  const sim::Rig rig = sim::reference_rig();
  const StereoRig st = rig.stereo();
  const ProjectionMatrix Pc = build_projection(st.camera, RigidTransform::identity());
  const ProjectionMatrix Pp = build_projection(st.projector, st.cam_to_proj);
  const WorldPoint X(-35, 60, 2100);
  const PixelPoint xp = Pp.project(X);
  const auto a = triangulate_ray_plane(Pc, Pp, Pc.project(X), codec::Axis::x, xp.x());
  const auto b = triangulate_ray_plane(Pc, Pp, Pc.project(X), codec::Axis::y, xp.y());
  EXPECT_NEAR((a.X - X).norm(), 0.0, 1e-8);
  EXPECT_NEAR((b.X - X).norm(), 0.0, 1e-8);
}

// Ground-truth triangulation of a simulated scene against the traced points.
void expect_matches_truth(const sim::Rig& rig, const sim::Scene& scene, double tol) {
  const auto gt = sim::ground_truth(rig, scene);
  ASSERT_GT(gt.cloud.size(), 1000u);
  const auto out = triangulate_map(gt.correspondence, rig.stereo());
  EXPECT_EQ(out.stats.candidates, gt.correspondence.valid_count());
  EXPECT_EQ(out.stats.retained, gt.cloud.size());
  std::map<std::pair<int, int>, WorldPoint> truth;
  for (std::size_t i = 0; i < gt.cloud.size(); ++i) {
    truth[{gt.cloud.provenance[i].x, gt.cloud.provenance[i].y}] = gt.cloud.points[i];
  }
  double worst = 0.0;
  for (std::size_t i = 0; i < out.cloud.size(); ++i) {
    const auto it = truth.find({out.cloud.provenance[i].x, out.cloud.provenance[i].y});
    ASSERT_NE(it, truth.end());
    worst = std::max(worst, (it->second - out.cloud.points[i]).norm());
  }
  EXPECT_LT(worst, tol);
}

TEST(TriangulateMap, PlaneMatchesGroundTruth) {
  const auto rig = sim::desk_rig();
  sim::Scene scene;
  scene.surfaces.push_back({sim::Plane{Vec3(0, 40, 0), Vec3(0, -1, 0)}, 0.8, 5.0});
  expect_matches_truth(rig, scene, 1e-6);
}

TEST(TriangulateMap, SphereMatchesGroundTruth) {
  const auto rig = sim::desk_rig();
  sim::Scene scene;
  scene.surfaces.push_back({sim::Sphere{Vec3(0, 0, 55), 60.0}, 0.8, 5.0});
  expect_matches_truth(rig, scene, 1e-6);
}

TEST(TriangulateMap, DistortedRigMatchesGroundTruth) {
  auto rig = sim::desk_rig();
  rig.camera.model.dist = sim::reference_camera_distortion();
  rig.projector.model.dist = sim::reference_projector_distortion();
  sim::Scene scene;
  scene.surfaces.push_back({sim::Sphere{Vec3(0, 0, 55), 60.0}, 0.8, 5.0});
  expect_matches_truth(rig, scene, 1e-5);
}

TEST(TriangulateMap, SingleAxisUsesRayPlane) {
  const auto rig = sim::desk_rig();
  sim::Scene scene;
  scene.surfaces.push_back({sim::Sphere{Vec3(0, 0, 55), 60.0}, 0.8, 5.0});
  auto gt = sim::ground_truth(rig, scene);
  auto corr = gt.correspondence;
  corr.has_y = false;
  const auto out = triangulate_map(corr, rig.stereo());
  EXPECT_TRUE(out.stats.ray_plane);
  EXPECT_EQ(out.stats.retained, gt.cloud.size());
  for (std::size_t i = 0; i < out.cloud.size(); ++i) {
    ASSERT_NEAR((out.cloud.points[i] - gt.cloud.points[i]).norm(), 0.0, 1e-6);
  }
}

TEST(TriangulateMap, AllInvalidGivesEmpty) {
  auto corr = codec::CorrespondenceMap::make(32, 24, 1920, 1080);
  corr.has_x = corr.has_y = true;
  const auto out = triangulate_map(corr, sim::desk_rig().stereo());
  EXPECT_TRUE(out.cloud.empty());
  EXPECT_EQ(out.stats.candidates, 0u);
}

TEST(TriangulateMap, MissingAxis) {
  auto corr = codec::CorrespondenceMap::make(8, 8, 1920, 1080);
  try {
    triangulate_map(corr, sim::desk_rig().stereo());
    FAIL();
  } catch (const Error& e) {
    EXPECT_EQ(e.code(), ErrorCode::MissingAxis);
  }
}

TEST(TriangulateMap, ResidualGateDropsBadPairs) {
  const auto rig = sim::desk_rig();
  sim::Scene scene;
  scene.surfaces.push_back({sim::Sphere{Vec3(0, 0, 55), 60.0}, 0.8, 5.0});
  auto corr = sim::ground_truth(rig, scene).correspondence;
  std::size_t shifted = 0;
  for (std::size_t i = 0; i < corr.size(); i += 7) {
    if (!corr.valid(i)) continue;
    corr.proj_y[i] += 25.0;
    ++shifted;
  }
  const auto out = triangulate_map(corr, rig.stereo());
  EXPECT_EQ(out.stats.dropped_residual, shifted);
  EXPECT_EQ(out.stats.retained + shifted, out.stats.candidates);
}

}  // namespace
}  // namespace slscan::tri
