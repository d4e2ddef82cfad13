#include "slscan/pipeline.hpp"

#include "slscan/error.hpp"
#include "slscan/scenes.hpp"
#include "slscan/triangulation.hpp"

#include <unistd.h>

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <numbers>
#include <sstream>

namespace slscan::pipeline {

std::string read_file(const fs::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw Error(ErrorCode::IoError, "cannot read " + path.string());
  std::ostringstream ss;
  ss << in.rdbuf();
  if (in.bad()) throw Error(ErrorCode::IoError, "error while reading " + path.string());
  return ss.str();
}

void write_file(const fs::path& path, std::string_view bytes) {
  if (path.has_parent_path()) {
    std::error_code ec;
    fs::create_directories(path.parent_path(), ec);
  }
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw Error(ErrorCode::IoError, "cannot write " + path.string());
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  out.close();
  if (!out) throw Error(ErrorCode::IoError, "error while writing " + path.string());
}

namespace {

// Collects a stage's artifacts in a hidden directory under the destination
// and moves them into place only on commit. Anything not committed is
// removed, including a destination directory the stage created itself.
class Staging {
 public:
  explicit Staging(fs::path root) : root_(std::move(root)) {
    if (root_.empty()) root_ = ".";
    created_root_ = !fs::exists(root_);
    std::error_code ec;
    fs::create_directories(root_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + root_.string());
    tmp_ = root_ / (".slscan-staging-" + std::to_string(::getpid()));
    fs::remove_all(tmp_, ec);
    fs::create_directories(tmp_, ec);
    if (ec) throw Error(ErrorCode::IoError, "cannot create " + tmp_.string());
  }
  Staging(const Staging&) = delete;
  Staging& operator=(const Staging&) = delete;

  ~Staging() {
    std::error_code ec;
    fs::remove_all(tmp_, ec);
    if (!committed_ && created_root_) fs::remove_all(root_, ec);
  }

  void write(const fs::path& rel, std::string_view bytes) {
    write_file(tmp_ / rel, bytes);
    files_.push_back(rel);
  }

  std::vector<std::string> commit() {
    std::vector<std::string> out;
    for (const auto& rel : files_) {
      const fs::path dst = root_ / rel;
      std::error_code ec;
      if (dst.has_parent_path()) fs::create_directories(dst.parent_path(), ec);
      fs::rename(tmp_ / rel, dst, ec);
      if (ec) throw Error(ErrorCode::IoError, "cannot move output into " + dst.string());
      out.push_back(dst.string());
    }
    committed_ = true;
    return out;
  }

  const fs::path& root() const noexcept { return root_; }

 private:
  fs::path root_;
  fs::path tmp_;
  std::vector<fs::path> files_;
  bool created_root_ = false;
  bool committed_ = false;
};

class Timer {
 public:
  double lap_ms() {
    const auto now = std::chrono::steady_clock::now();
    const double ms = std::chrono::duration<double, std::milli>(now - last_).count();
    last_ = now;
    return ms;
  }

 private:
  std::chrono::steady_clock::time_point last_ = std::chrono::steady_clock::now();
};

fs::path parent_of(const fs::path& p) { return p.has_parent_path() ? p.parent_path() : fs::path("."); }

codec::PatternStack projector_patterns(const PipelineConfig& c, int width, int height) {
  codec::PatternStack s = codec::generate_gray_stack(width, height, codec::Axis::x, true);
  s.merge(codec::generate_gray_stack(width, height, codec::Axis::y, true));
  if (c.pattern_mode == "phase") {
    const codec::PhasePatternParams p{c.bias, c.amplitude, c.fringe_width};
    s.merge(codec::generate_phase_stack(width, height, codec::Axis::x, p));
    s.merge(codec::generate_phase_stack(width, height, codec::Axis::y, p));
  }
  return s;
}

codec::CorrespondenceMap decode_stack(const PipelineConfig& c, const codec::PatternStack& stack) {
  codec::PhaseDecodeParams p;
  p.gray.min_direct = c.min_direct;
  p.gray.high_frequency_bits = c.high_frequency_bits;
  p.min_modulation = c.min_modulation;
  if (stack.has(codec::PatternKind::phase_x) || stack.has(codec::PatternKind::phase_y)) {
    return codec::decode_hybrid(stack, p);
  }
  return codec::decode_gray(stack, p.gray);
}

void count_statuses(const codec::CorrespondenceMap& m, Summary& s, const std::string& prefix = "") {
  std::map<std::string, double> hist;
  for (auto st : m.status) hist[std::string(codec::to_string(st))] += 1.0;
  s.counts[prefix + "pixels"] = static_cast<double>(m.size());
  for (const auto& [k, v] : hist) s.counts[prefix + k] = v;
}

reg::IcpParams icp_params(const PipelineConfig& c, const std::optional<CameraModel>& camera) {
  reg::IcpParams p;
  p.correspondence_mode = reg::correspondence_mode_from_string(c.icp_mode);
  p.error_metric = reg::error_metric_from_string(c.icp_metric);
  p.max_iterations = c.icp_max_iterations;
  p.error_tolerance = c.icp_error_tolerance;
  p.max_pair_distance = c.icp_max_pair_distance;
  p.reject_edges = c.icp_reject_edges;
  if (p.correspondence_mode == reg::CorrespondenceMode::projective && camera) {
    p.projective_rig = reg::ProjectiveRig{*camera, RigidTransform::identity()};
  }
  p.validate();
  return p;
}

bool needs_normals(const reg::IcpParams& p) {
  return p.error_metric == reg::ErrorMetric::point_plane ||
         p.correspondence_mode == reg::CorrespondenceMode::normal_shooting;
}

constexpr std::size_t kNormalNeighbours = 12;

io::Json icp_report_json(const reg::IcpReport& r) {
  io::Json j = io::Json::object();
  j["transform"] = io::to_json(r.transform);
  j["iterations"] = r.iterations;
  j["converged"] = r.converged;
  j["error_trace"] = r.error_trace;
  j["pair_counts"] = r.pair_counts;
  return j;
}

io::Json stitch_json(const reg::StitchResult& st) {
  io::Json steps = io::Json::array();
  for (std::size_t i = 0; i < st.steps.size(); ++i) {
    io::Json s = icp_report_json(st.reports[i]);
    s["source"] = i + 1;
    s["target"] = i;
    steps.push_back(s);
  }
  return steps;
}

std::uint64_t view_seed(std::uint64_t seed, int view) {
  return seed * 0x9E3779B97F4A7C15ull + static_cast<std::uint64_t>(view);
}

std::string view_name(const char* fmt, int k) {
  char buf[64];
  std::snprintf(buf, sizeof buf, fmt, k);
  return buf;
}

std::string scene_description(const sim::Rig& rig, const sim::TurntableAxis& axis) {
  io::Json j = io::Json::object();
  j["camera"] = io::to_json(rig.camera.model);
  j["camera_pose"] = io::to_json(rig.camera.pose);
  j["projector"] = io::to_json(rig.projector.model);
  j["projector_pose"] = io::to_json(rig.projector.pose);
  const auto cam_axis = sim::axis_in_camera(rig, axis);
  j["axis_camera"] = {{"point", {cam_axis.point.x(), cam_axis.point.y(), cam_axis.point.z()}},
                      {"direction",
                       {cam_axis.direction.x(), cam_axis.direction.y(), cam_axis.direction.z()}}};
  return j.dump();
}

}  // namespace

// ---- gen-patterns ------------------------------------------------------------

Summary gen_patterns(const PipelineConfig& c, const fs::path& out_dir) {
  c.validate();
  Summary s;
  s.stage = "gen-patterns";
  Timer timer;
  const codec::PatternStack stack = projector_patterns(c, c.projector_width, c.projector_height);
  s.timings_ms["generate"] = timer.lap_ms();
  const io::Manifest m = io::manifest_for(stack);
  Staging out(out_dir);
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    out.write(m.frames[i].file, io::write_pgm(stack.frames[i].image));
  }
  out.write("manifest.json", io::write_manifest(m));
  s.outputs = out.commit();
  s.timings_ms["write"] = timer.lap_ms();
  s.counts["frames"] = static_cast<double>(stack.frames.size());
  s.counts["bits_x"] = stack.bits_x;
  s.counts["bits_y"] = stack.bits_y;
  return s;
}

// ---- decode ------------------------------------------------------------------

Summary decode(const PipelineConfig& c, const fs::path& manifest_path, const fs::path& out,
               bool inline_planes) {
  c.validate();
  Summary s;
  s.stage = "decode";
  Timer timer;
  const io::Manifest m = io::read_manifest(read_file(manifest_path));
  const fs::path base = parent_of(manifest_path);
  const codec::PatternStack stack =
      io::stack_from(m, [&](const std::string& f) { return io::read_pgm(read_file(base / f)); });
  s.timings_ms["load"] = timer.lap_ms();
  const codec::CorrespondenceMap corr = decode_stack(c, stack);
  s.timings_ms["decode"] = timer.lap_ms();

  Staging staging(parent_of(out));
  if (inline_planes) {
    staging.write(out.filename(), io::write_corr_inline(corr));
  } else {
    const std::string stem = out.stem().string();
    const io::CorrPlanes planes = io::write_corr(corr, stem);
    staging.write(out.filename(), planes.header);
    staging.write(stem + ".x.f32", planes.proj_x);
    staging.write(stem + ".y.f32", planes.proj_y);
    staging.write(stem + ".status.u8", planes.status);
  }
  s.outputs = staging.commit();
  s.timings_ms["write"] = timer.lap_ms();
  count_statuses(corr, s);
  return s;
}

// ---- calibrate ---------------------------------------------------------------

CalibTarget calib_target_from_string(std::string_view s) {
  if (s == "camera") return CalibTarget::camera;
  if (s == "projector") return CalibTarget::projector;
  if (s == "stereo") return CalibTarget::stereo;
  throw Error(ErrorCode::InvalidArgument, "unknown calibration target '" + std::string(s) + "'");
}

Summary calibrate(const PipelineConfig& c, const fs::path& views_dir, CalibTarget target,
                  const fs::path& out) {
  c.validate();
  Summary s;
  s.stage = "calibrate";
  Timer timer;
  if (!fs::is_directory(views_dir)) {
    throw Error(ErrorCode::IoError, "not a directory: " + views_dir.string());
  }
  std::vector<fs::path> files;
  for (const auto& e : fs::directory_iterator(views_dir)) {
    if (e.is_regular_file() && e.path().extension() == ".json" &&
        e.path().filename().string().rfind("view", 0) == 0) {
      files.push_back(e.path());
    }
  }
  std::sort(files.begin(), files.end());
  if (files.empty()) throw Error(ErrorCode::IoError, "no view*.json files in " + views_dir.string());

  const bool want_projector = target != CalibTarget::camera;
  std::vector<calib::CalibrationView> views;
  for (const auto& f : files) {
    io::ViewFile v;
    try {
      v = io::read_view(read_file(f));
    } catch (const Error& e) {
      throw Error(e.code(), f.string() + ": " + e.message());
    }
    if (want_projector) {
      if (!v.correspondence) {
        throw Error(ErrorCode::SchemaViolation, f.string() + ": $.correspondence: missing field");
      }
      const fs::path corr_path = parent_of(f) / *v.correspondence;
      const fs::path corr_dir = parent_of(corr_path);
      v.view.correspondence = io::read_corr(read_file(corr_path), [&](const std::string& name) {
        return read_file(corr_dir / name);
      });
    }
    v.view.validate();
    views.push_back(std::move(v.view));
  }
  s.counts["views"] = static_cast<double>(views.size());
  s.timings_ms["load"] = timer.lap_ms();

  calib::RefineOptions refine;
  refine.estimate_distortion = c.estimate_distortion;
  refine.estimate_k3 = c.estimate_k3;

  io::CalibFile result;
  std::vector<RigidTransform> cam_poses, proj_poses;
  if (target != CalibTarget::projector) {
    const auto r = calib::calibrate(views, c.camera_width, c.camera_height, refine);
    result.camera = r.model;
    result.camera_poses = r.poses;
    result.camera_rms = calib::reprojection_error(views, r).rms;
    s.counts["camera_rms"] = *result.camera_rms;
    s.counts["camera_corners"] = static_cast<double>(views.size() * views.front().board_points.size());
  }
  if (want_projector) {
    calib::TransferOptions topt;
    topt.window_radius = c.window_radius;
    topt.min_support = static_cast<std::size_t>(c.min_support);
    std::vector<calib::CalibrationView> pviews;
    std::size_t failures = 0, transferred = 0;
    for (const auto& v : views) {
      const auto t = calib::transfer_corners_local_homography(v, topt);
      failures += t.failures.size();
      pviews.push_back(calib::projector_view(v, t));
      transferred += pviews.back().board_points.size();
    }
    s.counts["transfer_failures"] = static_cast<double>(failures);
    s.counts["projector_corners"] = static_cast<double>(transferred);
    s.timings_ms["transfer"] = timer.lap_ms();
    const auto r = calib::calibrate(pviews, c.projector_width, c.projector_height, refine);
    result.projector = r.model;
    result.projector_poses = r.poses;
    result.projector_rms = calib::reprojection_error(pviews, r).rms;
    s.counts["projector_rms"] = *result.projector_rms;
  }
  if (target == CalibTarget::stereo) {
    const auto st = calib::stereo_extrinsics(result.camera_poses, result.projector_poses);
    result.cam_to_proj = st.cam_to_proj;
    double worst = 0.0;
    for (double d : st.rotation_spread_deg) worst = std::max(worst, d);
    s.counts["rotation_spread_deg"] = worst;
  }
  s.timings_ms["calibrate"] = timer.lap_ms();
  Staging staging(parent_of(out));
  staging.write(out.filename(), io::write_calib(result));
  s.outputs = staging.commit();
  return s;
}

// ---- triangulate -------------------------------------------------------------

Summary triangulate(const PipelineConfig& c, const fs::path& corr_path, const fs::path& calib_path,
                    const fs::path& out) {
  c.validate();
  Summary s;
  s.stage = "triangulate";
  Timer timer;
  const fs::path corr_dir = parent_of(corr_path);
  const codec::CorrespondenceMap corr = io::read_corr(
      read_file(corr_path), [&](const std::string& name) { return read_file(corr_dir / name); });
  const StereoRig rig = io::read_calib(read_file(calib_path)).rig();
  s.timings_ms["load"] = timer.lap_ms();
  const auto result = tri::triangulate_map(corr, rig, {c.max_reprojection});
  s.timings_ms["triangulate"] = timer.lap_ms();
  Staging staging(parent_of(out));
  staging.write(out.filename(), io::write_ply(result.cloud, {"slscan triangulate", "frame camera"}));
  s.outputs = staging.commit();
  s.counts["candidates"] = static_cast<double>(result.stats.candidates);
  s.counts["retained"] = static_cast<double>(result.stats.retained);
  s.counts["dropped_cheirality"] = static_cast<double>(result.stats.dropped_cheirality);
  s.counts["dropped_residual"] = static_cast<double>(result.stats.dropped_residual);
  s.counts["dropped_degenerate"] = static_cast<double>(result.stats.dropped_degenerate);
  return s;
}

// ---- register ----------------------------------------------------------------

Summary register_clouds(const PipelineConfig& c, const RegisterInputs& in, const fs::path& out,
                        const std::optional<fs::path>& report_path) {
  c.validate();
  Summary s;
  s.stage = "register";
  Timer timer;
  if (in.clouds.size() < 2) throw Error(ErrorCode::InvalidArgument, "register needs at least two clouds");
  std::optional<CameraModel> camera;
  if (in.calib) camera = io::read_calib(read_file(*in.calib)).camera;
  const reg::IcpParams params = icp_params(c, camera);
  std::vector<PointCloud> clouds;
  for (const auto& p : in.clouds) {
    PointCloud cloud;
    try {
      cloud = io::read_ply(read_file(p)).cloud;
    } catch (const Error& e) {
      throw Error(e.code(), p.string() + ": " + e.message());
    }
    if (needs_normals(params) && !cloud.has_normals()) {
      cloud = reg::estimate_normals(cloud, kNormalNeighbours);
    }
    clouds.push_back(std::move(cloud));
  }
  s.timings_ms["load"] = timer.lap_ms();
  reg::StitchOptions opt;
  opt.step_deg = c.stitch_step_deg;
  opt.dedup_fraction = c.dedup_fraction;
  opt.close_loop = c.close_loop;
  if (in.axis_point) opt.axis_point = *in.axis_point;
  if (in.axis_direction) opt.axis_direction = *in.axis_direction;
  const auto st = reg::stitch_sequence(clouds, {}, params, opt);
  s.timings_ms["register"] = timer.lap_ms();

  io::Json report = io::Json::object();
  report["schema_version"] = io::kSchemaVersion;
  report["mode"] = c.icp_mode;
  report["metric"] = c.icp_metric;
  io::Json inputs = io::Json::array();
  for (const auto& p : in.clouds) inputs.push_back(p.filename().string());
  report["clouds"] = inputs;
  report["steps"] = stitch_json(st);
  io::Json to_first = io::Json::array();
  for (const auto& T : st.to_first) to_first.push_back(io::to_json(T));
  report["to_first"] = to_first;
  if (st.closing) report["closing"] = io::to_json(*st.closing);
  report["merged_points"] = st.merged.size();

  Staging staging(parent_of(out));
  staging.write(out.filename(), io::write_ply(st.merged, {"slscan register", "frame first cloud"}));
  std::vector<std::string> outputs = staging.commit();
  if (report_path) {
    Staging rs(parent_of(*report_path));
    rs.write(report_path->filename(), io::dump_json(report));
    for (auto& o : rs.commit()) outputs.push_back(o);
  }
  s.outputs = outputs;
  s.counts["clouds"] = static_cast<double>(clouds.size());
  s.counts["merged_points"] = static_cast<double>(st.merged.size());
  double worst = 0.0;
  for (const auto& r : st.reports) {
    if (!r.error_trace.empty()) worst = std::max(worst, r.error_trace.back());
  }
  s.counts["worst_final_error"] = worst;
  return s;
}

// ---- simulate ----------------------------------------------------------------

Summary simulate(const PipelineConfig& c, const fs::path& scene_path, const fs::path& patterns_dir,
                 const fs::path& out_dir) {
  c.validate();
  Summary s;
  s.stage = "simulate";
  Timer timer;
  const io::SceneFile sf = io::read_scene(read_file(scene_path));
  const fs::path manifest_path = patterns_dir / "manifest.json";
  const io::Manifest m = io::read_manifest(read_file(manifest_path));
  const codec::PatternStack patterns = io::stack_from(
      m, [&](const std::string& f) { return io::read_pgm(read_file(patterns_dir / f)); });
  if (patterns.frames.empty()) throw Error(ErrorCode::StackMismatch, "pattern manifest has no frames");
  const auto& proj = sf.rig.projector.model;
  if (patterns.frames.front().image.width != proj.width ||
      patterns.frames.front().image.height != proj.height) {
    throw Error(ErrorCode::StackMismatch, "patterns do not match the projector resolution " +
                                              std::to_string(proj.width) + "x" +
                                              std::to_string(proj.height));
  }
  s.timings_ms["load"] = timer.lap_ms();

  const auto views = sim::turntable_views(sf.rig, sf.scene, c.views, c.turntable_step_deg, sf.axis,
                                          nullptr, sf.rotating);
  Staging staging(out_dir);
  io::Json truth = io::Json::object();
  truth["schema_version"] = io::kSchemaVersion;
  truth["rig"] = io::Json::parse(scene_description(sf.rig, sf.axis));
  truth["step_deg"] = c.turntable_step_deg;
  truth["noise_sigma"] = c.noise_sigma;
  truth["seed"] = c.seed;
  io::Json tv = io::Json::array();
  double render_ms = 0.0;
  for (int k = 0; k < static_cast<int>(views.size()); ++k) {
    const auto& v = views[k];
    const auto cache = sim::prepare(sf.rig, v.scene);
    const auto captured =
        sim::add_noise(sim::render_stack(cache, v.scene, patterns), c.noise_sigma, view_seed(c.seed, k));
    render_ms += timer.lap_ms();
    const std::string dir = view_name("view_%02d", k);
    io::Manifest vm = io::manifest_for(captured);
    for (std::size_t f = 0; f < captured.frames.size(); ++f) {
      staging.write(fs::path(dir) / vm.frames[f].file, io::write_pgm(captured.frames[f].image));
    }
    staging.write(fs::path(dir) / "manifest.json", io::write_manifest(vm));
    staging.write(fs::path(dir) / "truth.ply",
                  io::write_ply(v.truth, {"slscan simulate ground truth", "frame camera"}));
    io::Json e = io::Json::object();
    e["view"] = k;
    e["rotation_deg"] = k * c.turntable_step_deg;
    e["to_previous"] = io::to_json(v.to_previous);
    e["truth_points"] = v.truth.size();
    tv.push_back(e);
  }
  truth["views"] = tv;
  staging.write("truth.json", io::dump_json(truth));
  s.outputs = staging.commit();
  s.timings_ms["render"] = render_ms;
  s.timings_ms["write"] = timer.lap_ms();
  s.counts["views"] = static_cast<double>(views.size());
  s.counts["frames_per_view"] = static_cast<double>(patterns.frames.size());
  return s;
}

// ---- reconstruct -------------------------------------------------------------

ReconstructResult reconstruct(const PipelineConfig& c, const fs::path& scene_path,
                              const fs::path& out_dir) {
  c.validate();
  ReconstructResult res;
  Summary& s = res.summary;
  s.stage = "reconstruct";
  Timer timer;
  const std::string scene_text = read_file(scene_path);
  const io::SceneFile sf = io::read_scene(scene_text);
  const std::string hash = content_hash(c, {scene_text});
  res.run_dir = out_dir / ("run-" + hash);
  const StereoRig stereo = sf.rig.stereo();
  const auto& proj = sf.rig.projector.model;
  const codec::PatternStack patterns = projector_patterns(c, proj.width, proj.height);
  const auto views = sim::turntable_views(sf.rig, sf.scene, c.views, c.turntable_step_deg, sf.axis,
                                          nullptr, sf.rotating);
  s.timings_ms["setup"] = timer.lap_ms();

  Staging staging(res.run_dir);
  const reg::IcpParams params = icp_params(c, sf.rig.camera.model);
  std::vector<PointCloud> clouds;
  double render_ms = 0.0, decode_ms = 0.0, tri_ms = 0.0;
  std::size_t valid = 0, dropped = 0;
  for (int k = 0; k < static_cast<int>(views.size()); ++k) {
    const auto& v = views[k];
    const auto cache = sim::prepare(sf.rig, v.scene);
    const auto captured =
        sim::add_noise(sim::render_stack(cache, v.scene, patterns), c.noise_sigma, view_seed(c.seed, k));
    render_ms += timer.lap_ms();
    const auto corr = decode_stack(c, captured);
    valid += corr.valid_count();
    decode_ms += timer.lap_ms();
    auto tri = tri::triangulate_map(corr, stereo, {c.max_reprojection});
    dropped += tri.stats.dropped_cheirality + tri.stats.dropped_residual +
               tri.stats.dropped_degenerate;
    if (tri.cloud.size() <= kNormalNeighbours) {
      throw Error(ErrorCode::TooFewPoints, "view " + std::to_string(k) + " reconstructed only " +
                                               std::to_string(tri.cloud.size()) + " points");
    }
    PointCloud cloud = needs_normals(params) ? reg::estimate_normals(tri.cloud, kNormalNeighbours)
                                             : std::move(tri.cloud);
    tri_ms += timer.lap_ms();
    staging.write(view_name("views/view_%02d.ply", k),
                  io::write_ply(cloud, {"slscan reconstruct view " + std::to_string(k), "frame camera"}));
    if (const auto* white = captured.find(codec::PatternKind::reference_white)) {
      staging.write(view_name("views/view_%02d_white.pgm", k), io::write_pgm(white->image));
    }
    clouds.push_back(std::move(cloud));
  }

  reg::StitchOptions opt;
  opt.step_deg = c.stitch_step_deg;
  opt.dedup_fraction = c.dedup_fraction;
  opt.close_loop = c.close_loop;
  const auto cam_axis = sim::axis_in_camera(sf.rig, sf.axis);
  opt.axis_point = cam_axis.point;
  opt.axis_direction = cam_axis.direction;
  const auto st = reg::stitch_sequence(clouds, {}, params, opt);
  const double register_ms = timer.lap_ms();

  io::Json report = io::Json::object();
  report["schema_version"] = io::kSchemaVersion;
  report["run"] = hash;
  report["views"] = c.views;
  report["step_deg"] = c.turntable_step_deg;
  report["mode"] = c.icp_mode;
  report["metric"] = c.icp_metric;
  io::Json steps = stitch_json(st);
  double worst_rot = 0.0, worst_trans = 0.0;
  for (std::size_t i = 0; i < st.steps.size(); ++i) {
    const RigidTransform& truth = views[i + 1].to_previous;
    const RigidTransform err = compose(st.steps[i], invert(truth));
    const double rot = rotation_angle(err.R) * 180.0 / std::numbers::pi;
    double trans = 0.0;
    for (const auto& p : clouds[i + 1].points) trans = std::max(trans, (st.steps[i].apply(p) - truth.apply(p)).norm());
    steps[i]["truth"] = io::to_json(truth);
    steps[i]["rotation_error_deg"] = rot;
    steps[i]["max_point_error"] = trans;
    worst_rot = std::max(worst_rot, rot);
    worst_trans = std::max(worst_trans, trans);
  }
  report["steps"] = steps;
  if (st.closing) report["closing"] = io::to_json(*st.closing);
  report["merged_points"] = st.merged.size();
  report["valid_pixels"] = valid;
  staging.write("report.json", io::dump_json(report));
  staging.write("merged.ply", io::write_ply(st.merged, {"slscan reconstruct run " + hash,
                                                         "frame first view camera"}));
  staging.write("config.json", io::dump_json(to_json(c)));
  staging.write("scene.json", scene_text);
  s.outputs = staging.commit();
  s.timings_ms["render"] = render_ms;
  s.timings_ms["decode"] = decode_ms;
  s.timings_ms["triangulate"] = tri_ms;
  s.timings_ms["register"] = register_ms;
  s.timings_ms["write"] = timer.lap_ms();
  s.counts["views"] = c.views;
  s.counts["valid_pixels"] = static_cast<double>(valid);
  s.counts["dropped_points"] = static_cast<double>(dropped);
  s.counts["merged_points"] = static_cast<double>(st.merged.size());
  s.counts["worst_rotation_error_deg"] = worst_rot;
  s.counts["worst_point_error"] = worst_trans;
  return res;
}

// ---- convert -----------------------------------------------------------------

Summary convert(const fs::path& in, const fs::path& out, std::string_view to) {
  Summary s;
  s.stage = "convert";
  Timer timer;
  Staging staging(parent_of(out));
  if (to == "p2" || to == "p5") {
    const GrayImage img = io::read_pgm(read_file(in));
    staging.write(out.filename(), to == "p2" ? io::write_pgm_ascii(img) : io::write_pgm(img));
    s.counts["pixels"] = static_cast<double>(img.size());
  } else if (to == "raw" || to == "inline") {
    const fs::path dir = parent_of(in);
    const auto corr =
        io::read_corr(read_file(in), [&](const std::string& name) { return read_file(dir / name); });
    if (to == "inline") {
      staging.write(out.filename(), io::write_corr_inline(corr));
    } else {
      const std::string stem = out.stem().string();
      const auto planes = io::write_corr(corr, stem);
      staging.write(out.filename(), planes.header);
      staging.write(stem + ".x.f32", planes.proj_x);
      staging.write(stem + ".y.f32", planes.proj_y);
      staging.write(stem + ".status.u8", planes.status);
    }
    s.counts["pixels"] = static_cast<double>(corr.size());
    s.counts["valid"] = static_cast<double>(corr.valid_count());
  } else {
    throw Error(ErrorCode::InvalidArgument,
                "convert target must be p2, p5, raw or inline, got '" + std::string(to) + "'");
  }
  s.outputs = staging.commit();
  s.timings_ms["convert"] = timer.lap_ms();
  return s;
}

}  // namespace slscan::pipeline
