#include "slscan/io.hpp"

#include "slscan/error.hpp"
#include "slscan/scenes.hpp"

#include <bit>
#include <cmath>
#include <cstdio>
#include <initializer_list>
#include <limits>

namespace slscan::io {
namespace {

[[noreturn]] void violation(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + msg);
}

std::string key_path(const std::string& path, std::string_view key) {
  return path + "." + std::string(key);
}

std::string index_path(const std::string& path, std::size_t i) {
  return path + "[" + std::to_string(i) + "]";
}

void require_object(const Json& j, const std::string& path) {
  if (!j.is_object()) violation(path, "expected an object");
}

const Json& member(const Json& obj, std::string_view key, const std::string& path) {
  require_object(obj, path);
  const auto it = obj.find(std::string(key));
  if (it == obj.end()) violation(key_path(path, key), "missing field");
  return *it;
}

const Json* optional_member(const Json& obj, std::string_view key) {
  const auto it = obj.find(std::string(key));
  return it == obj.end() || it->is_null() ? nullptr : &*it;
}

double number(const Json& j, const std::string& path) {
  if (!j.is_number()) violation(path, "expected a number");
  const double v = j.get<double>();
  if (!std::isfinite(v)) violation(path, "expected a finite number");
  return v;
}

double number_or(const Json& obj, std::string_view key, const std::string& path, double fallback) {
  const Json* v = optional_member(obj, key);
  return v ? number(*v, key_path(path, key)) : fallback;
}

std::int64_t integer(const Json& j, const std::string& path, std::int64_t lo, std::int64_t hi) {
  if (!j.is_number_integer()) violation(path, "expected an integer");
  const std::int64_t v = j.is_number_unsigned()
                             ? static_cast<std::int64_t>(std::min<std::uint64_t>(
                                   j.get<std::uint64_t>(), std::numeric_limits<std::int64_t>::max()))
                             : j.get<std::int64_t>();
  if (v < lo || v > hi) {
    violation(path, "value " + std::to_string(v) + " outside [" + std::to_string(lo) + ", " +
                        std::to_string(hi) + "]");
  }
  return v;
}

int int_field(const Json& obj, std::string_view key, const std::string& path, int lo = 0,
              int hi = std::numeric_limits<int>::max()) {
  return static_cast<int>(integer(member(obj, key, path), key_path(path, key), lo, hi));
}

bool boolean(const Json& j, const std::string& path) {
  if (!j.is_boolean()) violation(path, "expected true or false");
  return j.get<bool>();
}

std::string string(const Json& j, const std::string& path) {
  if (!j.is_string()) violation(path, "expected a string");
  return j.get<std::string>();
}

const Json& array(const Json& j, const std::string& path, std::size_t size = 0) {
  if (!j.is_array()) violation(path, "expected an array");
  if (size != 0 && j.size() != size) {
    violation(path, "expected " + std::to_string(size) + " entries, got " + std::to_string(j.size()));
  }
  return j;
}

template <int N>
Eigen::Matrix<double, N, 1> vec(const Json& j, const std::string& path) {
  array(j, path, N);
  Eigen::Matrix<double, N, 1> v;
  for (int i = 0; i < N; ++i) v(i) = number(j[i], index_path(path, i));
  return v;
}

Json vec_json(const Eigen::Ref<const Eigen::VectorXd>& v) {
  Json a = Json::array();
  for (Eigen::Index i = 0; i < v.size(); ++i) a.push_back(v(i));
  return a;
}

void check_version(const Json& doc) {
  require_object(doc, "$");
  if (const Json* v = optional_member(doc, "schema_version")) {
    const auto version = integer(*v, "$.schema_version", 0, 1'000'000);
    if (version != kSchemaVersion) {
      violation("$.schema_version", "unsupported version " + std::to_string(version));
    }
  }
}

Json extra_fields(const Json& doc, std::initializer_list<std::string_view> known) {
  Json extra = Json::object();
  for (auto it = doc.begin(); it != doc.end(); ++it) {
    bool is_known = it.key() == "schema_version";
    for (auto k : known) is_known = is_known || it.key() == k;
    if (!is_known) extra[it.key()] = it.value();
  }
  return extra;
}

Json start_document() {
  Json doc = Json::object();
  doc["schema_version"] = kSchemaVersion;
  return doc;
}

void append_extra(Json& doc, const Json& extra) {
  if (!extra.is_object()) return;
  for (auto it = extra.begin(); it != extra.end(); ++it) {
    if (!doc.contains(it.key())) doc[it.key()] = it.value();
  }
}

std::vector<RigidTransform> transforms_from_json(const Json& j, const std::string& path) {
  array(j, path);
  std::vector<RigidTransform> out;
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(transform_from_json(j[i], index_path(path, i)));
  return out;
}

Json transforms_json(const std::vector<RigidTransform>& ts) {
  Json a = Json::array();
  for (const auto& T : ts) a.push_back(to_json(T));
  return a;
}

std::vector<Vec2> points2(const Json& j, const std::string& path) {
  array(j, path);
  std::vector<Vec2> out;
  out.reserve(j.size());
  for (std::size_t i = 0; i < j.size(); ++i) out.push_back(vec<2>(j[i], index_path(path, i)));
  return out;
}

}  // namespace

Json parse_json(std::string_view text, std::string_view what) {
  try {
    return Json::parse(text.begin(), text.end());
  } catch (const nlohmann::json::parse_error& e) {
    throw Error(ErrorCode::SchemaViolation, std::string(what) + ": " + e.what());
  }
}

std::string dump_json(const Json& j) { return j.dump(2) + "\n"; }

Json to_json(const CameraModel& m) {
  Json j = Json::object();
  j["fx"] = m.fx;
  j["fy"] = m.fy;
  j["cx"] = m.cx;
  j["cy"] = m.cy;
  j["skew"] = m.skew;
  j["dist"] = Json::array({m.dist.k1, m.dist.k2, m.dist.p1, m.dist.p2, m.dist.k3});
  j["width"] = m.width;
  j["height"] = m.height;
  return j;
}

CameraModel camera_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  CameraModel m;
  m.fx = number(member(j, "fx", path), key_path(path, "fx"));
  m.fy = number(member(j, "fy", path), key_path(path, "fy"));
  m.cx = number(member(j, "cx", path), key_path(path, "cx"));
  m.cy = number(member(j, "cy", path), key_path(path, "cy"));
  m.skew = number_or(j, "skew", path, 0.0);
  if (const Json* d = optional_member(j, "dist")) {
    const std::string dp = key_path(path, "dist");
    array(*d, dp, 5);
    m.dist.k1 = number((*d)[0], index_path(dp, 0));
    m.dist.k2 = number((*d)[1], index_path(dp, 1));
    m.dist.p1 = number((*d)[2], index_path(dp, 2));
    m.dist.p2 = number((*d)[3], index_path(dp, 3));
    m.dist.k3 = number((*d)[4], index_path(dp, 4));
  }
  m.width = int_field(j, "width", path, 1);
  m.height = int_field(j, "height", path, 1);
  try {
    m.validate();
  } catch (const Error& e) {
    violation(path, e.what());
  }
  return m;
}

Json to_json(const RigidTransform& T) {
  Json R = Json::array();
  for (int r = 0; r < 3; ++r) R.push_back(Json::array({T.R(r, 0), T.R(r, 1), T.R(r, 2)}));
  Json j = Json::object();
  j["R"] = R;
  j["t"] = Json::array({T.t.x(), T.t.y(), T.t.z()});
  return j;
}

RigidTransform transform_from_json(const Json& j, const std::string& path) {
  const std::string rp = key_path(path, "R");
  const Json& R = array(member(j, "R", path), rp, 3);
  RigidTransform T;
  for (int r = 0; r < 3; ++r) T.R.row(r) = vec<3>(R[r], index_path(rp, r)).transpose();
  T.t = vec<3>(member(j, "t", path), key_path(path, "t"));
  // Measured rotations are orthonormal to about 1e-8 only.
  if (!T.is_valid(1e-6)) violation(rp, "not a proper rotation");
  return T;
}

// ---- calibration -------------------------------------------------------------

StereoRig CalibFile::rig() const {
  if (!camera) violation("$.camera", "missing field");
  if (!projector) violation("$.projector", "missing field");
  if (!cam_to_proj) violation("$.cam_to_proj", "missing field");
  return {*camera, *projector, *cam_to_proj};
}

CalibFile read_calib(std::string_view text) {
  const Json doc = parse_json(text, "calibration");
  check_version(doc);
  CalibFile c;
  if (const Json* v = optional_member(doc, "camera")) c.camera = camera_from_json(*v, "$.camera");
  if (const Json* v = optional_member(doc, "projector")) c.projector = camera_from_json(*v, "$.projector");
  if (const Json* v = optional_member(doc, "cam_to_proj")) {
    c.cam_to_proj = transform_from_json(*v, "$.cam_to_proj");
  }
  if (const Json* v = optional_member(doc, "camera_poses")) {
    c.camera_poses = transforms_from_json(*v, "$.camera_poses");
  }
  if (const Json* v = optional_member(doc, "projector_poses")) {
    c.projector_poses = transforms_from_json(*v, "$.projector_poses");
  }
  if (const Json* v = optional_member(doc, "camera_rms")) c.camera_rms = number(*v, "$.camera_rms");
  if (const Json* v = optional_member(doc, "projector_rms")) {
    c.projector_rms = number(*v, "$.projector_rms");
  }
  c.extra = extra_fields(doc, {"camera", "projector", "cam_to_proj", "camera_poses",
                               "projector_poses", "camera_rms", "projector_rms"});
  return c;
}

std::string write_calib(const CalibFile& c) {
  Json doc = start_document();
  if (c.camera) doc["camera"] = to_json(*c.camera);
  if (c.projector) doc["projector"] = to_json(*c.projector);
  if (c.cam_to_proj) doc["cam_to_proj"] = to_json(*c.cam_to_proj);
  if (!c.camera_poses.empty()) doc["camera_poses"] = transforms_json(c.camera_poses);
  if (!c.projector_poses.empty()) doc["projector_poses"] = transforms_json(c.projector_poses);
  if (c.camera_rms) doc["camera_rms"] = *c.camera_rms;
  if (c.projector_rms) doc["projector_rms"] = *c.projector_rms;
  append_extra(doc, c.extra);
  return dump_json(doc);
}

// ---- correspondences ---------------------------------------------------------

namespace {

constexpr std::string_view kCorrLayout =
    "row-major; proj_x, proj_y: little-endian IEEE-754 float32, NaN where undecoded; status: "
    "one byte per pixel, 0 valid, 1 uncertain_bit, 2 low_modulation, 3 low_direct, "
    "4 out_of_range, 5 undecoded";

Json corr_header(const codec::CorrespondenceMap& m, std::string_view format) {
  Json doc = start_document();
  doc["format"] = std::string(format);
  doc["width"] = m.width;
  doc["height"] = m.height;
  doc["projector_width"] = m.projector_width;
  doc["projector_height"] = m.projector_height;
  doc["has_x"] = m.has_x;
  doc["has_y"] = m.has_y;
  doc["valid_count"] = m.valid_count();
  doc["layout"] = std::string(kCorrLayout);
  return doc;
}

void check_map(const codec::CorrespondenceMap& m) {
  const std::size_t n = static_cast<std::size_t>(m.width) * m.height;
  if (m.status.size() != n || m.proj_x.size() != n || m.proj_y.size() != n) {
    throw Error(ErrorCode::InvalidArgument, "correspondence map planes disagree with its size");
  }
}

std::string float_plane(const std::vector<double>& v) {
  std::string out(v.size() * 4, '\0');
  for (std::size_t i = 0; i < v.size(); ++i) {
    const auto bits = std::bit_cast<std::uint32_t>(static_cast<float>(v[i]));
    for (int b = 0; b < 4; ++b) out[4 * i + b] = static_cast<char>((bits >> (8 * b)) & 0xFF);
  }
  return out;
}

std::vector<double> read_float_plane(const std::string& bytes, std::size_t n, const std::string& name) {
  if (bytes.size() != 4 * n) {
    throw Error(ErrorCode::TruncatedBody, name + ": expected " + std::to_string(4 * n) +
                                              " bytes, got " + std::to_string(bytes.size()));
  }
  std::vector<double> out(n);
  for (std::size_t i = 0; i < n; ++i) {
    std::uint32_t bits = 0;
    for (int b = 0; b < 4; ++b) {
      bits |= static_cast<std::uint32_t>(static_cast<unsigned char>(bytes[4 * i + b])) << (8 * b);
    }
    out[i] = static_cast<double>(std::bit_cast<float>(bits));
  }
  return out;
}

codec::PixelStatus status_from_byte(unsigned v, const std::string& path) {
  if (v > static_cast<unsigned>(codec::PixelStatus::undecoded)) {
    violation(path, "unknown pixel status " + std::to_string(v));
  }
  return static_cast<codec::PixelStatus>(v);
}

}  // namespace

CorrPlanes write_corr(const codec::CorrespondenceMap& m, const std::string& stem) {
  check_map(m);
  CorrPlanes out;
  Json doc = corr_header(m, "raw");
  Json planes = Json::object();
  planes["proj_x"] = stem + ".x.f32";
  planes["proj_y"] = stem + ".y.f32";
  planes["status"] = stem + ".status.u8";
  doc["planes"] = planes;
  out.header = dump_json(doc);
  out.proj_x = float_plane(m.proj_x);
  out.proj_y = float_plane(m.proj_y);
  out.status.resize(m.size());
  for (std::size_t i = 0; i < m.size(); ++i) out.status[i] = static_cast<char>(m.status[i]);
  return out;
}

std::string write_corr_inline(const codec::CorrespondenceMap& m) {
  check_map(m);
  Json doc = corr_header(m, "inline");
  // Values go through float32 so both forms hold the same numbers.
  const auto plane = [](const std::vector<double>& v) {
    Json a = Json::array();
    for (double x : v) {
      const float f = static_cast<float>(x);
      if (std::isnan(f)) a.push_back(nullptr);
      else a.push_back(static_cast<double>(f));
    }
    return a;
  };
  doc["proj_x"] = plane(m.proj_x);
  doc["proj_y"] = plane(m.proj_y);
  Json st = Json::array();
  for (auto s : m.status) st.push_back(static_cast<int>(s));
  doc["status"] = st;
  return dump_json(doc);
}

bool corr_is_inline(std::string_view header) {
  const Json doc = parse_json(header, "correspondence header");
  require_object(doc, "$");
  const Json* f = optional_member(doc, "format");
  return f != nullptr && f->is_string() && f->get<std::string>() == "inline";
}

codec::CorrespondenceMap read_corr(std::string_view header,
                                   const std::function<std::string(const std::string&)>& load) {
  const Json doc = parse_json(header, "correspondence header");
  check_version(doc);
  const int w = int_field(doc, "width", "$", 1);
  const int h = int_field(doc, "height", "$", 1);
  const int pw = int_field(doc, "projector_width", "$", 1);
  const int ph = int_field(doc, "projector_height", "$", 1);
  auto m = codec::CorrespondenceMap::make(w, h, pw, ph);
  m.has_x = boolean(member(doc, "has_x", "$"), "$.has_x");
  m.has_y = boolean(member(doc, "has_y", "$"), "$.has_y");
  const std::string format = string(member(doc, "format", "$"), "$.format");
  const std::size_t n = m.size();

  if (format == "inline") {
    for (const char* axis : {"proj_x", "proj_y"}) {
      const std::string path = key_path("$", axis);
      const Json& a = array(member(doc, axis, "$"), path, n);
      auto& dst = std::string_view(axis) == "proj_x" ? m.proj_x : m.proj_y;
      for (std::size_t i = 0; i < n; ++i) {
        dst[i] = a[i].is_null() ? std::numeric_limits<double>::quiet_NaN()
                                : number(a[i], index_path(path, i));
      }
    }
    const Json& st = array(member(doc, "status", "$"), "$.status", n);
    for (std::size_t i = 0; i < n; ++i) {
      const std::string p = index_path("$.status", i);
      m.status[i] = status_from_byte(static_cast<unsigned>(integer(st[i], p, 0, 255)), p);
    }
  } else if (format == "raw") {
    const Json& planes = member(doc, "planes", "$");
    const std::string fx = string(member(planes, "proj_x", "$.planes"), "$.planes.proj_x");
    const std::string fy = string(member(planes, "proj_y", "$.planes"), "$.planes.proj_y");
    const std::string fs = string(member(planes, "status", "$.planes"), "$.planes.status");
    m.proj_x = read_float_plane(load(fx), n, fx);
    m.proj_y = read_float_plane(load(fy), n, fy);
    const std::string st = load(fs);
    if (st.size() != n) {
      throw Error(ErrorCode::TruncatedBody, fs + ": expected " + std::to_string(n) + " bytes, got " +
                                                std::to_string(st.size()));
    }
    for (std::size_t i = 0; i < n; ++i) {
      m.status[i] = status_from_byte(static_cast<unsigned char>(st[i]), fs);
    }
  } else {
    violation("$.format", "expected \"raw\" or \"inline\", got \"" + format + "\"");
  }
  for (std::size_t i = 0; i < n; ++i) {
    if (!m.valid(i)) continue;
    if ((m.has_x && !std::isfinite(m.proj_x[i])) || (m.has_y && !std::isfinite(m.proj_y[i]))) {
      violation("$", "valid pixel " + std::to_string(i) + " has no coordinate");
    }
  }
  return m;
}

// ---- pattern manifest --------------------------------------------------------

Manifest read_manifest(std::string_view text) {
  const Json doc = parse_json(text, "manifest");
  check_version(doc);
  Manifest m;
  m.projector_width = int_field(doc, "projector_width", "$", 1);
  m.projector_height = int_field(doc, "projector_height", "$", 1);
  m.bits_x = int_field(doc, "bits_x", "$", 0, 31);
  m.bits_y = int_field(doc, "bits_y", "$", 0, 31);
  m.fringe_width = number_or(doc, "fringe_width", "$", 0.0);
  const Json& frames = array(member(doc, "frames", "$"), "$.frames");
  for (std::size_t i = 0; i < frames.size(); ++i) {
    const std::string p = index_path("$.frames", i);
    ManifestFrame f;
    f.file = string(member(frames[i], "file", p), key_path(p, "file"));
    const std::string kind = string(member(frames[i], "kind", p), key_path(p, "kind"));
    try {
      f.kind = codec::pattern_kind_from_string(kind);
    } catch (const Error& e) {
      violation(key_path(p, "kind"), e.what());
    }
    f.index = int_field(frames[i], "index", p, 0, 31);
    m.frames.push_back(std::move(f));
  }
  m.extra = extra_fields(doc, {"projector_width", "projector_height", "bits_x", "bits_y",
                               "fringe_width", "frames"});
  return m;
}

std::string write_manifest(const Manifest& m) {
  Json doc = start_document();
  doc["projector_width"] = m.projector_width;
  doc["projector_height"] = m.projector_height;
  doc["bits_x"] = m.bits_x;
  doc["bits_y"] = m.bits_y;
  doc["fringe_width"] = m.fringe_width;
  Json frames = Json::array();
  for (const auto& f : m.frames) {
    Json e = Json::object();
    e["file"] = f.file;
    e["kind"] = std::string(codec::to_string(f.kind));
    e["index"] = f.index;
    if (f.kind == codec::PatternKind::phase_x || f.kind == codec::PatternKind::phase_y) {
      if (f.index >= 0 && f.index < 3) e["shift_rad"] = codec::kPhaseShifts[f.index];
    }
    frames.push_back(e);
  }
  doc["frames"] = frames;
  append_extra(doc, m.extra);
  return dump_json(doc);
}

Manifest manifest_for(const codec::PatternStack& stack, const std::string& prefix) {
  Manifest m;
  m.projector_width = stack.projector_width;
  m.projector_height = stack.projector_height;
  m.bits_x = stack.bits_x;
  m.bits_y = stack.bits_y;
  m.fringe_width = stack.fringe_width;
  for (std::size_t i = 0; i < stack.frames.size(); ++i) {
    const auto& f = stack.frames[i];
    char name[96];
    std::snprintf(name, sizeof name, "%03zu_%s_%02d.pgm", i,
                  std::string(codec::to_string(f.kind)).c_str(), f.index);
    m.frames.push_back({prefix + name, f.kind, f.index});
  }
  return m;
}

codec::PatternStack stack_from(const Manifest& m,
                               const std::function<GrayImage(const std::string&)>& load) {
  codec::PatternStack s;
  s.projector_width = m.projector_width;
  s.projector_height = m.projector_height;
  s.bits_x = m.bits_x;
  s.bits_y = m.bits_y;
  s.fringe_width = m.fringe_width;
  for (const auto& f : m.frames) {
    GrayImage img = load(f.file);
    if (!s.frames.empty() && (img.width != s.frames.front().image.width ||
                              img.height != s.frames.front().image.height)) {
      throw Error(ErrorCode::StackMismatch, f.file + ": image size differs from the first frame");
    }
    s.frames.push_back({std::move(img), f.kind, f.index});
  }
  return s;
}

// ---- scene -------------------------------------------------------------------

namespace {

sim::Surface surface_from_json(const Json& j, const std::string& path) {
  require_object(j, path);
  const std::string type = string(member(j, "type", path), key_path(path, "type"));
  sim::Surface s;
  if (type == "plane") {
    sim::Plane p;
    p.point = vec<3>(member(j, "point", path), key_path(path, "point"));
    p.normal = vec<3>(member(j, "normal", path), key_path(path, "normal"));
    if (p.normal.norm() == 0.0) violation(key_path(path, "normal"), "zero normal");
    p.normal.normalize();
    s.shape = p;
  } else if (type == "sphere") {
    sim::Sphere sp;
    sp.center = vec<3>(member(j, "center", path), key_path(path, "center"));
    sp.radius = number(member(j, "radius", path), key_path(path, "radius"));
    s.shape = sp;
  } else if (type == "mesh") {
    sim::Mesh mesh;
    const std::string vp = key_path(path, "vertices");
    const Json& vs = array(member(j, "vertices", path), vp);
    for (std::size_t i = 0; i < vs.size(); ++i) mesh.vertices.push_back(vec<3>(vs[i], index_path(vp, i)));
    const std::string tp = key_path(path, "triangles");
    const Json& ts = array(member(j, "triangles", path), tp);
    for (std::size_t i = 0; i < ts.size(); ++i) {
      const std::string p = index_path(tp, i);
      array(ts[i], p, 3);
      std::array<std::uint32_t, 3> tri{};
      for (int k = 0; k < 3; ++k) {
        tri[k] = static_cast<std::uint32_t>(
            integer(ts[i][k], index_path(p, k), 0, static_cast<std::int64_t>(vs.size()) - 1));
      }
      mesh.triangles.push_back(tri);
    }
    s.shape = std::move(mesh);
  } else if (type == "cup") {
    sim::CupParams c;
    c.radius = number_or(j, "radius", path, c.radius);
    c.height = number_or(j, "height", path, c.height);
    c.wall = number_or(j, "wall", path, c.wall);
    c.handle_radius = number_or(j, "handle_radius", path, c.handle_radius);
    c.handle_tube = number_or(j, "handle_tube", path, c.handle_tube);
    if (optional_member(j, "segments")) c.segments = int_field(j, "segments", path, 8, 4096);
    if (!(c.radius > c.wall && c.wall > 0.0 && c.height > 0.0 && c.handle_tube > 0.0 &&
          c.handle_radius > c.handle_tube)) {
      violation(path, "inconsistent cup dimensions");
    }
    s.shape = sim::cup_mesh(c);
  } else {
    violation(key_path(path, "type"), "unknown surface type \"" + type + "\"");
  }
  s.albedo = number_or(j, "albedo", path, s.albedo);
  s.ambient = number_or(j, "ambient", path, s.ambient);
  try {
    s.validate();
  } catch (const Error& e) {
    violation(path, e.what());
  }
  return s;
}

Json surface_json(const sim::Surface& s) {
  Json j = Json::object();
  if (const auto* p = std::get_if<sim::Plane>(&s.shape)) {
    j["type"] = "plane";
    j["point"] = vec_json(p->point);
    j["normal"] = vec_json(p->normal);
  } else if (const auto* sp = std::get_if<sim::Sphere>(&s.shape)) {
    j["type"] = "sphere";
    j["center"] = vec_json(sp->center);
    j["radius"] = sp->radius;
  } else {
    const auto& m = std::get<sim::Mesh>(s.shape);
    j["type"] = "mesh";
    Json vs = Json::array();
    for (const auto& v : m.vertices) vs.push_back(vec_json(v));
    Json ts = Json::array();
    for (const auto& t : m.triangles) ts.push_back(Json::array({t[0], t[1], t[2]}));
    j["vertices"] = vs;
    j["triangles"] = ts;
  }
  j["albedo"] = s.albedo;
  j["ambient"] = s.ambient;
  return j;
}

sim::Device device_from_json(const Json& j, const std::string& path) {
  return {camera_from_json(member(j, "model", path), key_path(path, "model")),
          transform_from_json(member(j, "pose", path), key_path(path, "pose"))};
}

Json device_json(const sim::Device& d) {
  Json j = Json::object();
  j["model"] = to_json(d.model);
  j["pose"] = to_json(d.pose);
  return j;
}

sim::Rig rig_from_json(const Json& j, const std::string& path) {
  if (j.is_string()) {
    const std::string name = j.get<std::string>();
    if (name == "desk") return sim::desk_rig();
    if (name == "reference") return sim::reference_rig();
    violation(path, "unknown rig \"" + name + "\"");
  }
  require_object(j, path);
  if (const Json* preset = optional_member(j, "preset")) {
    const std::string name = string(*preset, key_path(path, "preset"));
    if (name != "desk") violation(key_path(path, "preset"), "only \"desk\" takes parameters");
    sim::DeskRigParams p;
    p.distance = number_or(j, "distance", path, p.distance);
    p.baseline = number_or(j, "baseline", path, p.baseline);
    p.camera_height = number_or(j, "camera_height", path, p.camera_height);
    p.target_height = number_or(j, "target_height", path, p.target_height);
    return sim::desk_rig(p);
  }
  sim::Rig rig{device_from_json(member(j, "camera", path), key_path(path, "camera")),
               device_from_json(member(j, "projector", path), key_path(path, "projector"))};
  try {
    rig.validate();
  } catch (const Error& e) {
    violation(path, e.what());
  }
  return rig;
}

}  // namespace

SceneFile read_scene(std::string_view text) {
  const Json doc = parse_json(text, "scene");
  check_version(doc);
  SceneFile f;
  f.rig = rig_from_json(member(doc, "rig", "$"), "$.rig");
  const Json& surfaces = array(member(doc, "surfaces", "$"), "$.surfaces");
  for (std::size_t i = 0; i < surfaces.size(); ++i) {
    f.scene.surfaces.push_back(surface_from_json(surfaces[i], index_path("$.surfaces", i)));
  }
  f.scene.background = number_or(doc, "background", "$", 0.0);
  f.scene.interreflection = number_or(doc, "interreflection", "$", 0.0);
  if (const Json* t = optional_member(doc, "turntable")) {
    const std::string tp = "$.turntable";
    require_object(*t, tp);
    if (const Json* p = optional_member(*t, "point")) f.axis.point = vec<3>(*p, tp + ".point");
    if (const Json* d = optional_member(*t, "direction")) {
      f.axis.direction = vec<3>(*d, tp + ".direction");
      if (f.axis.direction.norm() == 0.0) violation(tp + ".direction", "zero direction");
      f.axis.direction.normalize();
    }
    if (const Json* r = optional_member(*t, "rotating")) {
      array(*r, tp + ".rotating");
      for (std::size_t i = 0; i < r->size(); ++i) {
        f.rotating.push_back(static_cast<std::size_t>(
            integer((*r)[i], index_path(tp + ".rotating", i), 0,
                    static_cast<std::int64_t>(f.scene.surfaces.size()) - 1)));
      }
    }
  }
  try {
    f.scene.validate();
  } catch (const Error& e) {
    violation("$", e.what());
  }
  f.extra = extra_fields(doc, {"rig", "surfaces", "background", "interreflection", "turntable"});
  return f;
}

std::string write_scene(const SceneFile& f) {
  Json doc = start_document();
  Json rig = Json::object();
  rig["camera"] = device_json(f.rig.camera);
  rig["projector"] = device_json(f.rig.projector);
  doc["rig"] = rig;
  Json surfaces = Json::array();
  for (const auto& s : f.scene.surfaces) surfaces.push_back(surface_json(s));
  doc["surfaces"] = surfaces;
  doc["background"] = f.scene.background;
  doc["interreflection"] = f.scene.interreflection;
  Json t = Json::object();
  t["point"] = vec_json(f.axis.point);
  t["direction"] = vec_json(f.axis.direction);
  Json rot = Json::array();
  for (auto r : f.rotating) rot.push_back(r);
  t["rotating"] = rot;
  doc["turntable"] = t;
  append_extra(doc, f.extra);
  return dump_json(doc);
}

// ---- calibration views -------------------------------------------------------

ViewFile read_view(std::string_view text) {
  const Json doc = parse_json(text, "view");
  check_version(doc);
  ViewFile v;
  v.view.board_points = points2(member(doc, "board", "$"), "$.board");
  v.view.image_points = points2(member(doc, "image", "$"), "$.image");
  if (v.view.board_points.size() != v.view.image_points.size()) {
    violation("$.image", "expected " + std::to_string(v.view.board_points.size()) +
                             " points to match $.board");
  }
  if (const Json* c = optional_member(doc, "correspondence")) {
    v.correspondence = string(*c, "$.correspondence");
  }
  v.extra = extra_fields(doc, {"board", "image", "correspondence"});
  return v;
}

std::string write_view(const ViewFile& v) {
  Json doc = start_document();
  Json board = Json::array();
  for (const auto& p : v.view.board_points) board.push_back(Json::array({p.x(), p.y()}));
  Json image = Json::array();
  for (const auto& p : v.view.image_points) image.push_back(Json::array({p.x(), p.y()}));
  doc["board"] = board;
  doc["image"] = image;
  if (v.correspondence) doc["correspondence"] = *v.correspondence;
  append_extra(doc, v.extra);
  return dump_json(doc);
}

}  // namespace slscan::io
