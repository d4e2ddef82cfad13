#include "slscan/scenes.hpp"

#include "slscan/error.hpp"

#include <algorithm>
#include <cmath>
#include <numbers>

namespace slscan::sim {
namespace {

constexpr double kPi = std::numbers::pi;

RigidTransform pose_from_rows(const double (&m)[3][4]) {
  RigidTransform T;
  for (int r = 0; r < 3; ++r) {
    for (int c = 0; c < 3; ++c) T.R(r, c) = m[r][c];
    T.t(r) = m[r][3];
  }
  return T;
}

// Appends a (rings x segments) quad grid closed around the segment
// direction; ring r, segment s is vertex base + r * segments + s.
void add_wrapped_grid(Mesh& m, std::uint32_t base, int rings, int segments) {
  for (int r = 0; r + 1 < rings; ++r) {
    for (int s = 0; s < segments; ++s) {
      const auto a = base + static_cast<std::uint32_t>(r * segments + s);
      const auto b = base + static_cast<std::uint32_t>(r * segments + (s + 1) % segments);
      const auto c = a + static_cast<std::uint32_t>(segments);
      const auto d = b + static_cast<std::uint32_t>(segments);
      m.triangles.push_back({a, b, d});
      m.triangles.push_back({a, d, c});
    }
  }
}

std::uint32_t add_ring(Mesh& m, double radius, double z, int segments) {
  const auto base = static_cast<std::uint32_t>(m.vertices.size());
  for (int s = 0; s < segments; ++s) {
    const double a = 2.0 * kPi * s / segments;
    m.vertices.emplace_back(radius * std::cos(a), radius * std::sin(a), z);
  }
  return base;
}

void add_disk(Mesh& m, double radius, double z, int segments) {
  const auto center = static_cast<std::uint32_t>(m.vertices.size());
  m.vertices.emplace_back(0.0, 0.0, z);
  const auto ring = add_ring(m, radius, z, segments);
  for (int s = 0; s < segments; ++s) {
    m.triangles.push_back({center, ring + static_cast<std::uint32_t>(s),
                           ring + static_cast<std::uint32_t>((s + 1) % segments)});
  }
}

}  // namespace

CameraModel reference_camera() {
  CameraModel m;
  m.fx = 1.44038101e+03;
  m.fy = 1.43711605e+03;
  m.cx = 6.67836875e+02;
  m.cy = 3.54202552e+02;
  m.width = 1280;
  m.height = 720;
  return m;
}

CameraModel reference_projector() {
  CameraModel m;
  m.fx = 4.61896471e+03;
  m.fy = 4.34710132e+03;
  m.cx = 7.44248184e+02;
  m.cy = 6.05056615e+02;
  m.width = 1920;
  m.height = 1080;
  return m;
}

DistortionCoeffs reference_camera_distortion() {
  return {5.4658e-01, -2.0200e+01, -2.2032e-02, 8.2588e-03, 2.1111e+02};
}

DistortionCoeffs reference_projector_distortion() {
  return {-6.41035436e-01, 1.24352939e+01, -6.08400958e-02, -3.44770205e-03, 2.01572896e+02};
}

RigidTransform reference_camera_pose() {
  const double m[3][4] = {{0.96523178, -0.06801648, 0.25239131, -257.85891969},
                          {-0.05246011, 0.89550287, 0.4419531, -53.58173962},
                          {-0.25607724, -0.43982765, 0.86079968, 1944.10591591}};
  return pose_from_rows(m);
}

RigidTransform reference_projector_pose() {
  const double m[3][4] = {{0.94278236, -0.06015904, 0.32793645, -120.20727633},
                          {-0.03480907, 0.96045107, 0.27626448, 335.26497471},
                          {-0.33158673, -0.27187244, 0.90340225, 4481.52560352}};
  return pose_from_rows(m);
}

Rig reference_rig() {
  RigidTransform cam = reference_camera_pose();
  RigidTransform proj = reference_projector_pose();
  cam.R = nearest_rotation(cam.R);
  proj.R = nearest_rotation(proj.R);
  RigidTransform rel = proj * invert(cam);
  rel.R = nearest_rotation(rel.R);
  return {{reference_camera(), RigidTransform::identity()}, {reference_projector(), rel}};
}

Rig desk_rig(const DeskRigParams& p) {
  const Vec3 target(0.0, 0.0, p.target_height);
  const Vec3 up = Vec3::UnitZ();
  const Vec3 cam_eye(0.0, -p.distance, p.camera_height);
  const Vec3 proj_eye(p.baseline, -p.distance, p.camera_height);
  return {{reference_camera(), look_at(cam_eye, target, up)},
          {reference_projector(), look_at(proj_eye, target, up)}};
}

TurntableAxis desk_turntable_axis() { return {Vec3::Zero(), Vec3::UnitZ()}; }

Mesh cup_mesh(const CupParams& p) {
  if (!(p.radius > p.wall && p.wall > 0.0 && p.height > p.wall && p.handle_tube > 0.0 &&
        p.segments >= 8)) {
    throw Error(ErrorCode::InvalidArgument, "invalid cup dimensions");
  }
  Mesh m;
  const int seg = p.segments;
  const int stacks = std::max(2, static_cast<int>(std::ceil(p.height / 4.0)) + 1);
  const double inner = p.radius - p.wall;

  // Outer wall.
  const auto outer = static_cast<std::uint32_t>(m.vertices.size());
  for (int r = 0; r < stacks; ++r) add_ring(m, p.radius, p.height * r / (stacks - 1), seg);
  add_wrapped_grid(m, outer, stacks, seg);
  // Inner wall, from the inner floor up to the rim.
  const auto in = static_cast<std::uint32_t>(m.vertices.size());
  for (int r = 0; r < stacks; ++r) {
    add_ring(m, inner, p.wall + (p.height - p.wall) * r / (stacks - 1), seg);
  }
  add_wrapped_grid(m, in, stacks, seg);
  // Rim joining the top rings.
  for (int s = 0; s < seg; ++s) {
    const auto a = outer + static_cast<std::uint32_t>((stacks - 1) * seg + s);
    const auto b = outer + static_cast<std::uint32_t>((stacks - 1) * seg + (s + 1) % seg);
    const auto c = in + static_cast<std::uint32_t>((stacks - 1) * seg + s);
    const auto d = in + static_cast<std::uint32_t>((stacks - 1) * seg + (s + 1) % seg);
    m.triangles.push_back({a, b, d});
    m.triangles.push_back({a, d, c});
  }
  add_disk(m, p.radius, 0.0, seg);
  add_disk(m, inner, p.wall, seg);

  // Handle: the part of a torus in the xz plane that lies outside the wall.
  const double cx = p.radius + p.handle_tube * 0.7;
  const double a = p.handle_radius;
  const double cz = 0.5 * p.height;
  const double phi0 = std::acos(std::clamp((p.radius - 0.5 * p.wall - cx) / a, -1.0, 1.0));
  const int ring_steps = seg / 2;
  const int tube_steps = 16;
  const auto h = static_cast<std::uint32_t>(m.vertices.size());
  for (int r = 0; r <= ring_steps; ++r) {
    const double phi = -phi0 + 2.0 * phi0 * r / ring_steps;
    const Vec3 radial(std::cos(phi), 0.0, std::sin(phi));
    const Vec3 centre = Vec3(cx, 0.0, cz) + a * radial;
    for (int t = 0; t < tube_steps; ++t) {
      const double th = 2.0 * kPi * t / tube_steps;
      m.vertices.push_back(centre + p.handle_tube * (std::cos(th) * radial +
                                                     std::sin(th) * Vec3::UnitY()));
    }
  }
  add_wrapped_grid(m, h, ring_steps + 1, tube_steps);
  return m;
}

Scene cup_scene(const CupParams& params, double ambient) {
  Scene s;
  Surface cup;
  cup.shape = cup_mesh(params);
  cup.albedo = 0.85;
  cup.ambient = ambient;
  s.surfaces.push_back(std::move(cup));
  s.background = 0.0;
  return s;
}

std::vector<Vec2> board_corners(const BoardSpec& b) {
  if (b.cols < 2 || b.rows < 2 || !(b.square > 0.0)) {
    throw Error(ErrorCode::InvalidArgument, "invalid board geometry");
  }
  std::vector<Vec2> pts;
  for (int r = 0; r < b.rows; ++r) {
    for (int c = 0; c < b.cols; ++c) pts.emplace_back(c * b.square, r * b.square);
  }
  return pts;
}

std::vector<RigidTransform> random_board_poses(const CameraModel& model, const BoardSpec& board,
                                               int count, std::uint64_t seed, double fill,
                                               double max_tilt_deg) {
  const auto corners = board_corners(board);
  const Vec2 mid((board.cols - 1) * board.square / 2.0, (board.rows - 1) * board.square / 2.0);
  const double width_mm = (board.cols - 1) * board.square;
  const double distance = width_mm * model.fx / (fill * model.width);
  const double tilt = max_tilt_deg * kPi / 180.0;
  std::vector<RigidTransform> poses;
  std::uint64_t counter = 0;
  auto u = [&](double lo, double hi) { return lo + (hi - lo) * uniform(seed, counter++); };
  int attempts = 0;
  while (static_cast<int>(poses.size()) < count) {
    if (++attempts > 1000 * std::max(count, 1)) {
      throw Error(ErrorCode::InvalidArgument, "cannot place the board inside the image");
    }
    const Mat3 R = rotation_about(Vec3::UnitZ(), u(-0.25, 0.25)) *
                   rotation_about(Vec3::UnitY(), u(-tilt, tilt)) *
                   rotation_about(Vec3::UnitX(), u(-tilt, tilt));
    const double z = distance * u(0.85, 1.15);
    // Aim the board centre near the principal ray.
    const Vec3 centre((u(0.35, 0.65) * model.width - model.cx) / model.fx * z,
                      (u(0.35, 0.65) * model.height - model.cy) / model.fy * z, z);
    RigidTransform T;
    T.R = R;
    T.t = centre - R * Vec3(mid.x(), mid.y(), 0.0);
    bool inside = true;
    for (const auto& c : corners) {
      const Vec3 X = T.apply(Vec3(c.x(), c.y(), 0.0));
      if (!(X.z() > 0.0)) {
        inside = false;
        break;
      }
      const Vec2 px = model.normalized_to_pixel(distort(model.dist, {X.x() / X.z(), X.y() / X.z()}));
      if (px.x() < 10.0 || px.y() < 10.0 || px.x() > model.width - 10.0 ||
          px.y() > model.height - 10.0) {
        inside = false;
        break;
      }
    }
    if (inside) poses.push_back(T);
  }
  return poses;
}

std::vector<calib::CalibrationView> synthetic_views(const CameraModel& model,
                                                    const BoardSpec& board,
                                                    const std::vector<RigidTransform>& poses,
                                                    double sigma, std::uint64_t seed) {
  const auto corners = board_corners(board);
  const double per_axis = sigma / std::sqrt(2.0);
  std::vector<calib::CalibrationView> views;
  std::uint64_t counter = 0;
  for (const auto& T : poses) {
    calib::CalibrationView v;
    v.board_points = corners;
    for (const auto& c : corners) {
      Vec2 px = project(model, T, Vec3(c.x(), c.y(), 0.0)).pixel;
      if (sigma > 0.0) {
        px.x() += per_axis * normal(seed, counter++);
        px.y() += per_axis * normal(seed, counter++);
      }
      v.image_points.push_back(px);
    }
    views.push_back(std::move(v));
  }
  return views;
}

Surface board_surface(const BoardSpec& board, const RigidTransform& board_to_world, double albedo,
                      double ambient) {
  const double m = board.square;
  const double w = (board.cols - 1) * board.square;
  const double h = (board.rows - 1) * board.square;
  Mesh mesh;
  for (const Vec3& c : {Vec3(-m, -m, 0.0), Vec3(w + m, -m, 0.0), Vec3(w + m, h + m, 0.0),
                        Vec3(-m, h + m, 0.0)}) {
    mesh.vertices.push_back(board_to_world.apply(c));
  }
  mesh.triangles = {{0, 1, 2}, {0, 2, 3}};
  Surface s;
  s.shape = std::move(mesh);
  s.albedo = albedo;
  s.ambient = ambient;
  return s;
}

}  // namespace slscan::sim
