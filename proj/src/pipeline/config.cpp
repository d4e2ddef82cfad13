#include "slscan/pipeline.hpp"

#include "slscan/error.hpp"
#include "slscan/registration.hpp"

#include <cmath>
#include <cstdio>
#include <variant>

namespace slscan::pipeline {
namespace {

using Member = std::variant<int PipelineConfig::*, double PipelineConfig::*, bool PipelineConfig::*,
                            std::string PipelineConfig::*, std::uint64_t PipelineConfig::*,
                            std::optional<double> PipelineConfig::*>;

struct Field {
  const char* section;
  const char* key;
  Member member;
};

const std::vector<Field>& fields() {
  static const std::vector<Field> f = {
      {"camera", "width", &PipelineConfig::camera_width},
      {"camera", "height", &PipelineConfig::camera_height},
      {"projector", "width", &PipelineConfig::projector_width},
      {"projector", "height", &PipelineConfig::projector_height},
      {"patterns", "mode", &PipelineConfig::pattern_mode},
      {"patterns", "fringe_width", &PipelineConfig::fringe_width},
      {"patterns", "bias", &PipelineConfig::bias},
      {"patterns", "amplitude", &PipelineConfig::amplitude},
      {"decode", "min_direct", &PipelineConfig::min_direct},
      {"decode", "high_frequency_bits", &PipelineConfig::high_frequency_bits},
      {"decode", "min_modulation", &PipelineConfig::min_modulation},
      {"triangulation", "max_reprojection", &PipelineConfig::max_reprojection},
      {"calibration", "window_radius", &PipelineConfig::window_radius},
      {"calibration", "min_support", &PipelineConfig::min_support},
      {"calibration", "estimate_distortion", &PipelineConfig::estimate_distortion},
      {"calibration", "estimate_k3", &PipelineConfig::estimate_k3},
      {"icp", "mode", &PipelineConfig::icp_mode},
      {"icp", "metric", &PipelineConfig::icp_metric},
      {"icp", "max_iterations", &PipelineConfig::icp_max_iterations},
      {"icp", "error_tolerance", &PipelineConfig::icp_error_tolerance},
      {"icp", "max_pair_distance", &PipelineConfig::icp_max_pair_distance},
      {"icp", "reject_edges", &PipelineConfig::icp_reject_edges},
      {"stitch", "step_deg", &PipelineConfig::stitch_step_deg},
      {"stitch", "dedup_fraction", &PipelineConfig::dedup_fraction},
      {"stitch", "close_loop", &PipelineConfig::close_loop},
      {"simulation", "views", &PipelineConfig::views},
      {"simulation", "step_deg", &PipelineConfig::turntable_step_deg},
      {"simulation", "noise_sigma", &PipelineConfig::noise_sigma},
      {"simulation", "seed", &PipelineConfig::seed},
  };
  return f;
}

[[noreturn]] void violation(const std::string& path, const std::string& msg) {
  throw Error(ErrorCode::SchemaViolation, path + ": " + msg);
}

void read_field(const io::Json& v, const std::string& path, PipelineConfig& c, const Member& m) {
  std::visit(
      [&](auto ptr) {
        using T = std::remove_cvref_t<decltype(c.*ptr)>;
        if constexpr (std::is_same_v<T, int>) {
          if (!v.is_number_integer()) violation(path, "expected an integer");
          const auto x = v.get<std::int64_t>();
          if (x < -1'000'000'000 || x > 1'000'000'000) violation(path, "integer out of range");
          c.*ptr = static_cast<int>(x);
        } else if constexpr (std::is_same_v<T, std::uint64_t>) {
          if (!v.is_number_unsigned()) violation(path, "expected a non-negative integer");
          c.*ptr = v.get<std::uint64_t>();
        } else if constexpr (std::is_same_v<T, double>) {
          if (!v.is_number()) violation(path, "expected a number");
          c.*ptr = v.get<double>();
        } else if constexpr (std::is_same_v<T, bool>) {
          if (!v.is_boolean()) violation(path, "expected true or false");
          c.*ptr = v.get<bool>();
        } else if constexpr (std::is_same_v<T, std::string>) {
          if (!v.is_string()) violation(path, "expected a string");
          c.*ptr = v.get<std::string>();
        } else {
          if (v.is_string() && v.get<std::string>() == "auto") {
            c.*ptr = std::nullopt;
          } else if (v.is_number()) {
            c.*ptr = v.get<double>();
          } else {
            violation(path, "expected a number or \"auto\"");
          }
        }
      },
      m);
}

io::Json field_json(const PipelineConfig& c, const Member& m) {
  return std::visit(
      [&](auto ptr) -> io::Json {
        using T = std::remove_cvref_t<decltype(c.*ptr)>;
        if constexpr (std::is_same_v<T, std::optional<double>>) {
          return (c.*ptr) ? io::Json(*(c.*ptr)) : io::Json("auto");
        } else {
          return io::Json(c.*ptr);
        }
      },
      m);
}

}  // namespace

void PipelineConfig::validate() const {
  const auto positive = [](double v, const char* path) {
    if (!(v > 0.0) || !std::isfinite(v)) violation(path, "must be positive");
  };
  const auto non_negative = [](double v, const char* path) {
    if (!(v >= 0.0) || !std::isfinite(v)) violation(path, "must be non-negative");
  };
  positive(camera_width, "$.camera.width");
  positive(camera_height, "$.camera.height");
  positive(projector_width, "$.projector.width");
  positive(projector_height, "$.projector.height");
  if (pattern_mode != "gray" && pattern_mode != "phase") {
    violation("$.patterns.mode", "expected \"gray\" or \"phase\"");
  }
  positive(fringe_width, "$.patterns.fringe_width");
  non_negative(bias, "$.patterns.bias");
  non_negative(amplitude, "$.patterns.amplitude");
  non_negative(min_direct, "$.decode.min_direct");
  if (high_frequency_bits < 1 || high_frequency_bits > 8) {
    violation("$.decode.high_frequency_bits", "must lie in [1, 8]");
  }
  non_negative(min_modulation, "$.decode.min_modulation");
  positive(max_reprojection, "$.triangulation.max_reprojection");
  positive(window_radius, "$.calibration.window_radius");
  if (min_support < 4) violation("$.calibration.min_support", "must be at least 4");
  try {
    (void)reg::correspondence_mode_from_string(icp_mode);
  } catch (const Error&) {
    violation("$.icp.mode", "expected \"closest\", \"normal\" or \"projective\"");
  }
  try {
    (void)reg::error_metric_from_string(icp_metric);
  } catch (const Error&) {
    violation("$.icp.metric", "expected \"point-point\" or \"point-plane\"");
  }
  if (icp_max_iterations < 1) violation("$.icp.max_iterations", "must be at least 1");
  non_negative(icp_error_tolerance, "$.icp.error_tolerance");
  if (icp_max_pair_distance) positive(*icp_max_pair_distance, "$.icp.max_pair_distance");
  if (!std::isfinite(stitch_step_deg)) violation("$.stitch.step_deg", "must be finite");
  if (!(dedup_fraction >= 0.0 && dedup_fraction < 1.0)) {
    violation("$.stitch.dedup_fraction", "must lie in [0, 1)");
  }
  if (views < 1) violation("$.simulation.views", "must be at least 1");
  if (!std::isfinite(turntable_step_deg)) violation("$.simulation.step_deg", "must be finite");
  if (std::abs(views * turntable_step_deg) > 360.0 + 1e-9) {
    violation("$.simulation", "views * step_deg exceeds one revolution");
  }
  non_negative(noise_sigma, "$.simulation.noise_sigma");
}

io::Json to_json(const PipelineConfig& c) {
  io::Json doc = io::Json::object();
  doc["schema_version"] = io::kSchemaVersion;
  for (const auto& f : fields()) doc[f.section][f.key] = field_json(c, f.member);
  return doc;
}

PipelineConfig config_from_json(const io::Json& j, const PipelineConfig& base) {
  if (!j.is_object()) violation("$", "expected an object");
  PipelineConfig c = base;
  for (auto it = j.begin(); it != j.end(); ++it) {
    const std::string section = it.key();
    if (section == "schema_version") {
      if (!it->is_number_integer() || it->get<int>() != io::kSchemaVersion) {
        violation("$.schema_version", "unsupported version");
      }
      continue;
    }
    const std::string sp = "$." + section;
    if (!it->is_object()) {
      bool known = false;
      for (const auto& f : fields()) known = known || section == f.section;
      violation(sp, known ? "expected an object" : "unknown key");
    }
    for (auto kt = it->begin(); kt != it->end(); ++kt) {
      const Field* match = nullptr;
      for (const auto& f : fields()) {
        if (section == f.section && kt.key() == f.key) match = &f;
      }
      if (match == nullptr) violation(sp + "." + kt.key(), "unknown key");
      read_field(*kt, sp + "." + kt.key(), c, match->member);
    }
  }
  c.validate();
  return c;
}

std::string content_hash(const PipelineConfig& config, const std::vector<std::string>& inputs) {
  std::uint64_t h = 0xcbf29ce484222325ull;
  const auto feed = [&h](std::string_view s) {
    for (unsigned char ch : s) {
      h ^= ch;
      h *= 0x100000001b3ull;
    }
    // Length separator so concatenations do not collide.
    for (int b = 0; b < 8; ++b) {
      h ^= (s.size() >> (8 * b)) & 0xFF;
      h *= 0x100000001b3ull;
    }
  };
  feed(to_json(config).dump());
  for (const auto& in : inputs) feed(in);
  char buf[17];
  std::snprintf(buf, sizeof buf, "%016llx", static_cast<unsigned long long>(h));
  return buf;
}

io::Json Summary::to_json() const {
  io::Json j = io::Json::object();
  j["stage"] = stage;
  j["status"] = ok ? "ok" : "error";
  j["outputs"] = outputs;
  io::Json c = io::Json::object();
  for (const auto& [k, v] : counts) {
    if (v == std::floor(v) && std::abs(v) < 0x1p53) c[k] = static_cast<std::int64_t>(v);
    else c[k] = v;
  }
  j["counts"] = c;
  io::Json t = io::Json::object();
  for (const auto& [k, v] : timings_ms) t[k] = v;
  j["timings_ms"] = t;
  if (!ok) {
    io::Json e = io::Json::object();
    e["code"] = error_code;
    e["message"] = error_message;
    j["error"] = e;
  }
  return j;
}

io::Json summary_schema() {
  return io::Json::parse(R"({
  "$schema": "http://json-schema.org/draft-07/schema#",
  "title": "slscan stage summary",
  "type": "object",
  "required": ["stage", "status", "outputs", "counts", "timings_ms"],
  "additionalProperties": false,
  "properties": {
    "stage": {"type": "string", "enum": ["gen-patterns", "decode", "calibrate", "triangulate",
                                         "register", "simulate", "reconstruct", "convert", "cli"]},
    "status": {"type": "string", "enum": ["ok", "error"]},
    "outputs": {"type": "array", "items": {"type": "string"}},
    "counts": {"type": "object", "additionalProperties": {"type": "number"}},
    "timings_ms": {"type": "object", "additionalProperties": {"type": "number", "minimum": 0}},
    "error": {
      "type": "object",
      "required": ["code", "message"],
      "additionalProperties": false,
      "properties": {"code": {"type": "string"}, "message": {"type": "string"}}
    }
  },
  "if": {"properties": {"status": {"const": "error"}}},
  "then": {"required": ["error"]}
})");
}

std::vector<std::string> check_summary(const io::Json& j) {
  std::vector<std::string> problems;
  if (!j.is_object()) return {"summary is not an object"};
  const io::Json schema = summary_schema();
  const auto& props = schema["properties"];
  for (const auto& req : schema["required"]) {
    if (!j.contains(req.get<std::string>())) problems.push_back("missing " + req.get<std::string>());
  }
  for (auto it = j.begin(); it != j.end(); ++it) {
    if (!props.contains(it.key())) problems.push_back("unexpected key " + it.key());
  }
  if (j.contains("stage")) {
    bool known = false;
    for (const auto& s : props["stage"]["enum"]) known = known || j["stage"] == s;
    if (!known) problems.push_back("unknown stage");
  }
  if (j.contains("status") && j["status"] != "ok" && j["status"] != "error") {
    problems.push_back("bad status");
  }
  if (j.contains("outputs")) {
    if (!j["outputs"].is_array()) problems.push_back("outputs is not an array");
    else
      for (const auto& o : j["outputs"]) {
        if (!o.is_string()) problems.push_back("non-string output");
      }
  }
  for (const char* key : {"counts", "timings_ms"}) {
    if (!j.contains(key)) continue;
    if (!j[key].is_object()) {
      problems.push_back(std::string(key) + " is not an object");
      continue;
    }
    for (const auto& v : j[key]) {
      if (!v.is_number() || (std::string_view(key) == "timings_ms" && v.get<double>() < 0.0)) {
        problems.push_back(std::string("bad value in ") + key);
      }
    }
  }
  const bool is_error = j.contains("status") && j["status"] == "error";
  if (is_error && !j.contains("error")) problems.push_back("error status without error object");
  if (j.contains("error")) {
    const auto& e = j["error"];
    if (!e.is_object() || !e.contains("code") || !e.contains("message") || !e["code"].is_string() ||
        !e["message"].is_string() || e.size() != 2) {
      problems.push_back("malformed error object");
    }
  }
  return problems;
}

std::string version_json() {
  io::Json j = io::Json::object();
  j["name"] = "slscan";
  j["version"] = SLSCAN_VERSION;
  j["schema_version"] = io::kSchemaVersion;
  return j.dump();
}

}  // namespace slscan::pipeline
