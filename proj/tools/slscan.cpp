#include "slscan/error.hpp"
#include "slscan/pipeline.hpp"

#include <CLI11.hpp>

#include <functional>
#include <iostream>
#include <optional>

namespace {

using namespace slscan;
using pipeline::PipelineConfig;

struct Overrides {
  std::optional<std::string> config_file;
  std::optional<int> cam_w, cam_h, proj_w, proj_h;
  std::optional<std::string> pattern_mode;
  std::optional<double> fringe_width;
  std::optional<double> min_direct, min_modulation;
  std::optional<double> max_reprojection;
  std::optional<double> window_radius;
  std::optional<std::string> icp_mode, icp_metric;
  std::optional<int> max_iterations;
  std::optional<double> max_pair_distance;
  std::optional<double> stitch_step;
  bool close_loop = false;
  bool reject_edges = false;
  std::optional<int> views;
  std::optional<double> turntable_step;
  std::optional<double> noise;
  std::optional<std::uint64_t> seed;

  PipelineConfig resolve() const {
    PipelineConfig c;
    if (config_file) {
      c = pipeline::config_from_json(io::parse_json(pipeline::read_file(*config_file), *config_file));
    }
    const auto set = [](auto& dst, const auto& src) {
      if (src) dst = *src;
    };
    set(c.camera_width, cam_w);
    set(c.camera_height, cam_h);
    set(c.projector_width, proj_w);
    set(c.projector_height, proj_h);
    set(c.pattern_mode, pattern_mode);
    set(c.fringe_width, fringe_width);
    set(c.min_direct, min_direct);
    set(c.min_modulation, min_modulation);
    set(c.max_reprojection, max_reprojection);
    set(c.window_radius, window_radius);
    set(c.icp_mode, icp_mode);
    set(c.icp_metric, icp_metric);
    set(c.icp_max_iterations, max_iterations);
    if (max_pair_distance) c.icp_max_pair_distance = *max_pair_distance;
    set(c.stitch_step_deg, stitch_step);
    if (close_loop) c.close_loop = true;
    if (reject_edges) c.icp_reject_edges = true;
    set(c.views, views);
    set(c.turntable_step_deg, turntable_step);
    set(c.noise_sigma, noise);
    set(c.seed, seed);
    c.validate();
    return c;
  }
};

void add_config(CLI::App* sub, Overrides& o) {
  sub->add_option("--config", o.config_file, "Pipeline config JSON; flags override its values")
      ->check(CLI::ExistingFile);
}

std::optional<Vec3> to_vec3(const std::vector<double>& v) {
  if (v.empty()) return std::nullopt;
  return Vec3(v[0], v[1], v[2]);
}

int emit(const pipeline::Summary& s) {
  std::cout << s.to_json().dump() << std::endl;
  return s.ok ? 0 : 1;
}

int fail(const std::string& stage, const std::string& code, const std::string& message) {
  pipeline::Summary s;
  s.stage = stage;
  s.ok = false;
  s.error_code = code;
  s.error_message = message;
  std::cerr << "slscan " << stage << ": " << code << ": " << message << std::endl;
  return emit(s);
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"Structured-light scanning: patterns, decoding, calibration, triangulation, "
               "registration and simulation"};
  app.set_version_flag("--version", pipeline::version_json(), "Print version information as JSON");
  app.require_subcommand(1);
  app.fallthrough(false);

  Overrides o;
  std::string stage;
  std::function<pipeline::Summary()> run;

  // gen-patterns
  auto* gen = app.add_subcommand("gen-patterns", "Write projector pattern images and a manifest");
  std::string gen_out;
  add_config(gen, o);
  gen->add_option("--proj-w", o.proj_w, "Projector width");
  gen->add_option("--proj-h", o.proj_h, "Projector height");
  gen->add_option("--mode", o.pattern_mode, "gray or phase")->check(CLI::IsMember({"gray", "phase"}));
  gen->add_option("--fringe-width", o.fringe_width, "Phase fringe period in projector pixels");
  gen->add_option("--out", gen_out, "Output directory")->required();
  gen->callback([&] {
    stage = "gen-patterns";
    run = [&] { return pipeline::gen_patterns(o.resolve(), gen_out); };
  });

  // decode
  auto* dec = app.add_subcommand("decode", "Decode a captured stack into a correspondence map");
  std::string dec_manifest, dec_out;
  bool dec_inline = false;
  add_config(dec, o);
  dec->add_option("--manifest", dec_manifest, "Manifest of the captured stack")->required();
  dec->add_option("--out", dec_out, "Correspondence header to write")->required();
  dec->add_flag("--inline", dec_inline, "Embed the planes in the JSON header");
  dec->add_option("--min-direct", o.min_direct, "Minimum direct component m");
  dec->add_option("--min-modulation", o.min_modulation, "Minimum phase modulation");
  dec->callback([&] {
    stage = "decode";
    run = [&] { return pipeline::decode(o.resolve(), dec_manifest, dec_out, dec_inline); };
  });

  // calibrate
  auto* cal = app.add_subcommand("calibrate", "Calibrate camera, projector or both from view files");
  std::string cal_views, cal_target = "stereo", cal_out;
  add_config(cal, o);
  cal->add_option("--views", cal_views, "Directory of view*.json files")->required();
  cal->add_option("--target", cal_target, "camera, projector or stereo")
      ->check(CLI::IsMember({"camera", "projector", "stereo"}));
  cal->add_option("--out", cal_out, "Calibration file to write")->required();
  cal->add_option("--cam-w", o.cam_w, "Camera width");
  cal->add_option("--cam-h", o.cam_h, "Camera height");
  cal->add_option("--proj-w", o.proj_w, "Projector width");
  cal->add_option("--proj-h", o.proj_h, "Projector height");
  cal->add_option("--window-radius", o.window_radius, "Local homography window radius in pixels");
  cal->callback([&] {
    stage = "calibrate";
    run = [&] {
      return pipeline::calibrate(o.resolve(), cal_views, pipeline::calib_target_from_string(cal_target),
                                 cal_out);
    };
  });

  // triangulate
  auto* tri = app.add_subcommand("triangulate", "Triangulate a correspondence map into a point cloud");
  std::string tri_corr, tri_calib, tri_out;
  add_config(tri, o);
  tri->add_option("--corr", tri_corr, "Correspondence header")->required();
  tri->add_option("--calib", tri_calib, "Calibration file with camera, projector and cam_to_proj")
      ->required();
  tri->add_option("--out", tri_out, "PLY file to write")->required();
  tri->add_option("--max-reprojection", o.max_reprojection, "Reprojection gate in pixels");
  tri->callback([&] {
    stage = "triangulate";
    run = [&] { return pipeline::triangulate(o.resolve(), tri_corr, tri_calib, tri_out); };
  });

  // register
  auto* regc = app.add_subcommand("register", "Stitch a sequence of clouds with pairwise ICP");
  std::vector<std::string> reg_clouds;
  std::string reg_out;
  std::optional<std::string> reg_report, reg_calib;
  std::vector<double> reg_axis_point, reg_axis_dir;
  add_config(regc, o);
  regc->add_option("--clouds", reg_clouds, "PLY clouds in capture order")->required()->expected(2, -1);
  regc->add_option("--mode", o.icp_mode, "closest, normal or projective")
      ->check(CLI::IsMember({"closest", "normal", "projective"}));
  regc->add_option("--metric", o.icp_metric, "point-point or point-plane")
      ->check(CLI::IsMember({"point-point", "point-plane"}));
  regc->add_option("--out", reg_out, "Merged PLY to write")->required();
  regc->add_option("--report", reg_report, "Per-step transforms and error traces (JSON)");
  regc->add_option("--calib", reg_calib, "Calibration file; its camera drives projective mode");
  regc->add_option("--step-deg", o.stitch_step, "Seed rotation per step about the axis (0: identity)");
  regc->add_option("--axis-point", reg_axis_point, "Turntable axis point")->expected(3);
  regc->add_option("--axis-dir", reg_axis_dir, "Turntable axis direction")->expected(3);
  regc->add_option("--max-iterations", o.max_iterations, "ICP iteration cap");
  regc->add_option("--max-pair-distance", o.max_pair_distance, "Pair rejection distance");
  regc->add_flag("--close-loop", o.close_loop, "Also register the last cloud against the first");
  regc->add_flag("--reject-edges", o.reject_edges, "Drop pairs on the edges of pixel-organized clouds");
  regc->callback([&] {
    stage = "register";
    run = [&] {
      pipeline::RegisterInputs in;
      for (const auto& c : reg_clouds) in.clouds.emplace_back(c);
      if (reg_calib) in.calib = *reg_calib;
      in.axis_point = to_vec3(reg_axis_point);
      in.axis_direction = to_vec3(reg_axis_dir);
      std::optional<pipeline::fs::path> report;
      if (reg_report) report = *reg_report;
      return pipeline::register_clouds(o.resolve(), in, reg_out, report);
    };
  });

  // simulate
  auto* simc = app.add_subcommand("simulate", "Render captured stacks and ground truth for a scene");
  std::string sim_scene, sim_patterns, sim_out;
  add_config(simc, o);
  simc->add_option("--scene", sim_scene, "Scene description JSON")->required();
  simc->add_option("--patterns", sim_patterns, "Directory written by gen-patterns")->required();
  simc->add_option("--out", sim_out, "Output directory")->required();
  simc->add_option("--views", o.views, "Turntable views");
  simc->add_option("--step-deg", o.turntable_step, "Turntable step in degrees");
  simc->add_option("--noise", o.noise, "Gaussian intensity noise sigma");
  simc->add_option("--seed", o.seed, "Noise seed");
  simc->callback([&] {
    stage = "simulate";
    run = [&] { return pipeline::simulate(o.resolve(), sim_scene, sim_patterns, sim_out); };
  });

  // reconstruct
  auto* rec = app.add_subcommand("reconstruct",
                                 "Simulate, decode, triangulate and stitch turntable views");
  std::string rec_scene, rec_out = "out";
  add_config(rec, o);
  rec->add_option("--scene", rec_scene, "Scene description JSON")->required();
  rec->add_option("--views", o.views, "Turntable views");
  rec->add_option("--out", rec_out, "Output directory; results go to run-<hash>/ inside it");
  rec->add_option("--step-deg", o.turntable_step, "Turntable step in degrees");
  rec->add_option("--noise", o.noise, "Gaussian intensity noise sigma");
  rec->add_option("--seed", o.seed, "Noise seed");
  rec->add_option("--mode", o.icp_mode, "closest, normal or projective")
      ->check(CLI::IsMember({"closest", "normal", "projective"}));
  rec->add_option("--metric", o.icp_metric, "point-point or point-plane")
      ->check(CLI::IsMember({"point-point", "point-plane"}));
  rec->add_option("--pattern-mode", o.pattern_mode, "gray or phase")
      ->check(CLI::IsMember({"gray", "phase"}));
  rec->add_flag("--close-loop", o.close_loop, "Also register the last view against the first");
  rec->add_flag("--reject-edges", o.reject_edges, "Drop pairs on the edges of the view clouds");
  rec->callback([&] {
    stage = "reconstruct";
    run = [&] {
      PipelineConfig c = o.resolve();
      // The stitching seed follows the turntable unless set explicitly.
      if (!o.stitch_step && o.turntable_step) c.stitch_step_deg = *o.turntable_step;
      return pipeline::reconstruct(c, rec_scene, rec_out).summary;
    };
  });

  // config
  auto* cfg = app.add_subcommand("config", "Show the effective configuration");
  bool cfg_dump = false, cfg_schema = false;
  add_config(cfg, o);
  cfg->add_flag("--dump", cfg_dump, "Print every configuration key with its value");
  cfg->add_flag("--summary-schema", cfg_schema, "Print the JSON schema of stage summaries");
  int cfg_exit = -1;
  cfg->callback([&] {
    stage = "cli";
    run = [&]() -> pipeline::Summary {
      if (cfg_schema) {
        std::cout << io::dump_json(pipeline::summary_schema());
      } else {
        std::cout << io::dump_json(pipeline::to_json(o.resolve()));
      }
      cfg_exit = 0;
      return {};
    };
  });

  // convert
  auto* conv = app.add_subcommand("convert", "Convert PGM (p2/p5) or correspondence (raw/inline) files");
  std::string conv_in, conv_out, conv_to;
  conv->add_option("--in", conv_in, "Input file")->required();
  conv->add_option("--out", conv_out, "Output file")->required();
  conv->add_option("--to", conv_to, "p2, p5, raw or inline")
      ->required()
      ->check(CLI::IsMember({"p2", "p5", "raw", "inline"}));
  conv->callback([&] {
    stage = "convert";
    run = [&] { return pipeline::convert(conv_in, conv_out, conv_to); };
  });

  try {
    app.parse(argc, argv);
  } catch (const CLI::ParseError& e) {
    return app.exit(e);
  }
  if (!run) return 2;
  try {
    const pipeline::Summary s = run();
    if (cfg_exit >= 0) return cfg_exit;
    return emit(s);
  } catch (const Error& e) {
    return fail(stage, std::string(to_string(e.code())), e.message());
  } catch (const std::exception& e) {
    return fail(stage, "InternalError", e.what());
  }
}
