#pragma once

#include "slscan/calibration.hpp"
#include "slscan/codec.hpp"
#include "slscan/image.hpp"
#include "slscan/pointcloud.hpp"
#include "slscan/registration.hpp"
#include "slscan/simulator.hpp"

#include <nlohmann/json.hpp>

#include <functional>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

// Pure codecs: every function maps bytes to values and back. Reading and
// writing files is left to the caller.
namespace slscan::io {

using Json = nlohmann::ordered_json;

inline constexpr int kSchemaVersion = 1;

// ---- PGM -------------------------------------------------------------------

// Accepts P5 (binary) and P2 (ASCII) with '#' comments in the header and
// maxval <= 255. Errors: MalformedHeader, TruncatedBody, UnsupportedMaxval.
GrayImage read_pgm(std::string_view bytes);
// "P5\n<w> <h>\n255\n" followed by the raw pixels.
std::string write_pgm(const GrayImage& image);
// "P2\n<w> <h>\n255\n" followed by one text row per image row.
std::string write_pgm_ascii(const GrayImage& image);

// ---- PLY -------------------------------------------------------------------

struct PlyData {
  PointCloud cloud;
  std::vector<std::string> comments;
  std::vector<std::string> warnings;  // e.g. skipped unknown properties
};

// ASCII PLY with a vertex element holding x, y, z and optionally nx, ny, nz
// (renormalized on read) and px, py (source pixel). Other elements and
// unknown properties are skipped. Errors: MalformedHeader, CountMismatch,
// MalformedBody.
PlyData read_ply(std::string_view bytes);
// Values are printed with 9 significant digits.
std::string write_ply(const PointCloud& cloud, const std::vector<std::string>& comments = {});

// ---- JSON helpers ----------------------------------------------------------

// Every document carries "schema_version": 1. Readers accept documents
// without it and reject other versions. Unknown top-level fields end up in
// `extra` and are written back after the known ones.

// Parses text into JSON; SchemaViolation on syntax errors.
Json parse_json(std::string_view text, std::string_view what);
// Two-space indented with a trailing newline. Doubles are printed in the
// shortest form that reads back to the same value.
std::string dump_json(const Json& j);

Json to_json(const CameraModel& m);
CameraModel camera_from_json(const Json& j, const std::string& path);
Json to_json(const RigidTransform& T);
RigidTransform transform_from_json(const Json& j, const std::string& path);

// ---- Calibration file ------------------------------------------------------

struct CalibFile {
  std::optional<CameraModel> camera;
  std::optional<CameraModel> projector;
  std::optional<RigidTransform> cam_to_proj;
  std::vector<RigidTransform> camera_poses;
  std::vector<RigidTransform> projector_poses;
  std::optional<double> camera_rms;
  std::optional<double> projector_rms;
  Json extra = Json::object();  // unknown fields, preserved on write

  StereoRig rig() const;  // throws SchemaViolation unless all three parts exist
};

CalibFile read_calib(std::string_view text);
std::string write_calib(const CalibFile& calib);

// ---- Correspondence file ---------------------------------------------------

// A correspondence map is stored as a JSON header plus three raw planes:
// proj_x and proj_y as little-endian float32 (NaN where undecoded) and one
// status byte per pixel (0 = valid, see codec::PixelStatus). The header
// names the plane files relative to itself. The inline form embeds the
// planes as JSON arrays instead.
struct CorrPlanes {
  std::string header;  // JSON text
  std::string proj_x;  // width * height * 4 bytes
  std::string proj_y;
  std::string status;  // width * height bytes
};

CorrPlanes write_corr(const codec::CorrespondenceMap& map, const std::string& stem);
// `load` receives the plane file names from the header.
codec::CorrespondenceMap read_corr(std::string_view header,
                                   const std::function<std::string(const std::string&)>& load);
std::string write_corr_inline(const codec::CorrespondenceMap& map);
// Accepts either form; raw planes go through `load`.
bool corr_is_inline(std::string_view header);

// ---- Pattern manifest ------------------------------------------------------

struct ManifestFrame {
  std::string file;
  codec::PatternKind kind = codec::PatternKind::gray_x;
  int index = 0;
};

struct Manifest {
  int projector_width = 0;
  int projector_height = 0;
  int bits_x = 0;
  int bits_y = 0;
  double fringe_width = 0.0;
  std::vector<ManifestFrame> frames;
  Json extra = Json::object();
};

Manifest read_manifest(std::string_view text);
std::string write_manifest(const Manifest& manifest);
// Metadata of a stack without its images, and back.
Manifest manifest_for(const codec::PatternStack& stack, const std::string& prefix = "");
codec::PatternStack stack_from(const Manifest& manifest,
                               const std::function<GrayImage(const std::string&)>& load);

// ---- Scene file ------------------------------------------------------------

struct SceneFile {
  sim::Scene scene;
  sim::Rig rig;
  sim::TurntableAxis axis;
  std::vector<std::size_t> rotating;  // empty: every surface rotates
  Json extra = Json::object();
};

// Surfaces: {"type": "plane", "point", "normal"}, {"type": "sphere",
// "center", "radius"}, {"type": "mesh", "vertices", "triangles"} or
// {"type": "cup", ...CupParams}, each with optional "albedo" and "ambient".
// "rig" is "desk", "reference" or {"camera": {...}, "projector": {...}} with
// a model and a "pose" per device.
SceneFile read_scene(std::string_view text);
std::string write_scene(const SceneFile& scene);

// ---- Calibration views -----------------------------------------------------

struct ViewFile {
  calib::CalibrationView view;
  std::optional<std::string> correspondence;  // path of a corr header
  Json extra = Json::object();
};

ViewFile read_view(std::string_view text);
std::string write_view(const ViewFile& view);

}  // namespace slscan::io
