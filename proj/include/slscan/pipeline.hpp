#pragma once

#include "slscan/io.hpp"

#include <cstdint>
#include <filesystem>
#include <map>
#include <optional>
#include <string>
#include <vector>

namespace slscan::pipeline {

namespace fs = std::filesystem;

struct PipelineConfig {
  int camera_width = 1280;
  int camera_height = 720;
  int projector_width = 1920;
  int projector_height = 1080;

  std::string pattern_mode = "gray";  // gray | phase
  double fringe_width = 20.0;
  double bias = 127.0;
  double amplitude = 127.0;

  double min_direct = 5.0;
  int high_frequency_bits = 2;
  double min_modulation = 10.0;

  double max_reprojection = 1.0;

  double window_radius = 30.0;
  int min_support = 20;
  bool estimate_distortion = true;
  bool estimate_k3 = true;

  std::string icp_mode = "closest";
  std::string icp_metric = "point-point";
  int icp_max_iterations = 50;
  double icp_error_tolerance = 1e-10;
  std::optional<double> icp_max_pair_distance;  // unset: 10% of the target diagonal
  bool icp_reject_edges = false;

  double stitch_step_deg = 10.0;
  double dedup_fraction = 0.005;
  bool close_loop = false;

  int views = 10;
  double turntable_step_deg = 10.0;
  double noise_sigma = 0.0;
  std::uint64_t seed = 1;

  // Throws SchemaViolation naming the offending field.
  void validate() const;
};

// Every key with its default; "auto" stands for an unset optional.
io::Json to_json(const PipelineConfig& config);
// Overlays the fields present in `j` onto `base`. Unknown keys and wrong
// types are SchemaViolations; the result is validated.
PipelineConfig config_from_json(const io::Json& j, const PipelineConfig& base = {});

// FNV-1a over the canonical config dump and the given input texts, as 16 hex
// digits.
std::string content_hash(const PipelineConfig& config, const std::vector<std::string>& inputs);

// One JSON line per stage on stdout.
struct Summary {
  std::string stage;
  bool ok = true;
  std::vector<std::string> outputs;
  std::map<std::string, double> counts;
  std::map<std::string, double> timings_ms;
  std::string error_code;
  std::string error_message;

  io::Json to_json() const;
};

// The published summary schema (a JSON Schema draft-07 document) and a
// checker for it; returns a list of problems, empty when the line conforms.
io::Json summary_schema();
std::vector<std::string> check_summary(const io::Json& line);

// Stages. Each one writes its artifacts only after every computation has
// succeeded; on failure nothing new is left behind.
Summary gen_patterns(const PipelineConfig& config, const fs::path& out_dir);
Summary decode(const PipelineConfig& config, const fs::path& manifest, const fs::path& out,
               bool inline_planes = false);

enum class CalibTarget { camera, projector, stereo };
CalibTarget calib_target_from_string(std::string_view s);
Summary calibrate(const PipelineConfig& config, const fs::path& views_dir, CalibTarget target,
                  const fs::path& out);

Summary triangulate(const PipelineConfig& config, const fs::path& corr, const fs::path& calib,
                    const fs::path& out);

struct RegisterInputs {
  std::vector<fs::path> clouds;
  std::optional<fs::path> calib;  // camera model for projective association
  std::optional<Vec3> axis_point;
  std::optional<Vec3> axis_direction;
};
Summary register_clouds(const PipelineConfig& config, const RegisterInputs& inputs,
                        const fs::path& out, const std::optional<fs::path>& report);

Summary simulate(const PipelineConfig& config, const fs::path& scene, const fs::path& patterns_dir,
                 const fs::path& out_dir);

struct ReconstructResult {
  Summary summary;
  fs::path run_dir;
};
// Simulates config.views turntable views, decodes, triangulates and stitches
// them into out_dir/run-<hash>/ holding merged.ply, report.json, config.json
// and per-view clouds and reference images.
ReconstructResult reconstruct(const PipelineConfig& config, const fs::path& scene,
                              const fs::path& out_dir);

// PGM P2 <-> P5 and correspondence raw <-> inline. `to` is one of "p2",
// "p5", "raw", "inline".
Summary convert(const fs::path& in, const fs::path& out, std::string_view to);

// File helpers; IoError names the path.
std::string read_file(const fs::path& path);
void write_file(const fs::path& path, std::string_view bytes);

std::string version_json();

}  // namespace slscan::pipeline
