#include "slscan/io.hpp"

#include "slscan/error.hpp"

#include <charconv>
#include <cmath>
#include <cstdio>
#include <sstream>

namespace slscan::io {
namespace {

struct Property {
  std::string name;
  bool is_list = false;
};

struct Element {
  std::string name;
  std::size_t count = 0;
  std::vector<Property> properties;
};

std::vector<std::string_view> split(std::string_view line) {
  std::vector<std::string_view> out;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    const std::size_t start = i;
    while (i < line.size() && line[i] != ' ' && line[i] != '\t' && line[i] != '\r') ++i;
    if (i > start) out.push_back(line.substr(start, i - start));
  }
  return out;
}

class LineReader {
 public:
  explicit LineReader(std::string_view s) : s_(s) {}
  bool next(std::string_view& line) {
    if (pos_ >= s_.size()) return false;
    const std::size_t end = s_.find('\n', pos_);
    const std::size_t stop = end == std::string_view::npos ? s_.size() : end;
    line = s_.substr(pos_, stop - pos_);
    if (!line.empty() && line.back() == '\r') line.remove_suffix(1);
    pos_ = stop + 1;
    ++number_;
    return true;
  }
  std::size_t number() const noexcept { return number_; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
  std::size_t number_ = 0;
};

double parse_double(std::string_view tok, std::size_t line) {
  double v = 0.0;
  const auto r = std::from_chars(tok.data(), tok.data() + tok.size(), v);
  if (r.ec != std::errc() || r.ptr != tok.data() + tok.size() || !std::isfinite(v)) {
    throw Error(ErrorCode::MalformedBody,
                "PLY line " + std::to_string(line) + ": bad value '" + std::string(tok) + "'");
  }
  return v;
}

std::string format_g9(double v) {
  char buf[32];
  std::snprintf(buf, sizeof buf, "%.9g", v);
  return buf;
}

}  // namespace

PlyData read_ply(std::string_view bytes) {
  LineReader lines(bytes);
  std::string_view line;
  if (!lines.next(line) || line != "ply") throw Error(ErrorCode::MalformedHeader, "PLY: missing magic");
  PlyData out;
  std::vector<Element> elements;
  bool format_seen = false;
  bool ended = false;
  while (lines.next(line)) {
    const auto tok = split(line);
    if (tok.empty()) continue;
    const auto bad = [&](const std::string& msg) {
      return Error(ErrorCode::MalformedHeader,
                   "PLY header line " + std::to_string(lines.number()) + ": " + msg);
    };
    if (tok[0] == "end_header") {
      ended = true;
      break;
    }
    if (tok[0] == "comment" || tok[0] == "obj_info") {
      const std::size_t at = line.find(tok[0]) + tok[0].size();
      std::string_view text = line.substr(at);
      if (!text.empty() && text.front() == ' ') text.remove_prefix(1);
      if (tok[0] == "comment") out.comments.emplace_back(text);
    } else if (tok[0] == "format") {
      if (tok.size() != 3) throw bad("malformed format line");
      if (tok[1] != "ascii") throw bad("only ASCII PLY is supported, got " + std::string(tok[1]));
      if (tok[2] != "1.0") throw bad("unsupported version " + std::string(tok[2]));
      format_seen = true;
    } else if (tok[0] == "element") {
      if (tok.size() != 3) throw bad("malformed element line");
      std::size_t count = 0;
      const auto r = std::from_chars(tok[2].data(), tok[2].data() + tok[2].size(), count);
      if (r.ec != std::errc() || r.ptr != tok[2].data() + tok[2].size()) throw bad("bad element count");
      elements.push_back({std::string(tok[1]), count, {}});
    } else if (tok[0] == "property") {
      if (elements.empty()) throw bad("property before any element");
      if (tok.size() == 3) {
        elements.back().properties.push_back({std::string(tok[2]), false});
      } else if (tok.size() == 5 && tok[1] == "list") {
        elements.back().properties.push_back({std::string(tok[4]), true});
      } else {
        throw bad("malformed property line");
      }
    } else {
      throw bad("unknown keyword '" + std::string(tok[0]) + "'");
    }
  }
  if (!format_seen) throw Error(ErrorCode::MalformedHeader, "PLY: missing format line");
  if (!ended) throw Error(ErrorCode::MalformedHeader, "PLY: missing end_header");

  const Element* vertex = nullptr;
  for (const auto& e : elements) {
    if (e.name == "vertex") vertex = &e;
  }
  if (vertex == nullptr) throw Error(ErrorCode::MalformedHeader, "PLY: no vertex element");

  int ix = -1, iy = -1, iz = -1, inx = -1, iny = -1, inz = -1, ipx = -1, ipy = -1;
  for (std::size_t p = 0; p < vertex->properties.size(); ++p) {
    const auto& prop = vertex->properties[p];
    const int idx = static_cast<int>(p);
    int* slot = nullptr;
    if (!prop.is_list) {
      if (prop.name == "x") slot = &ix;
      else if (prop.name == "y") slot = &iy;
      else if (prop.name == "z") slot = &iz;
      else if (prop.name == "nx") slot = &inx;
      else if (prop.name == "ny") slot = &iny;
      else if (prop.name == "nz") slot = &inz;
      else if (prop.name == "px") slot = &ipx;
      else if (prop.name == "py") slot = &ipy;
    }
    if (slot != nullptr) {
      *slot = idx;
    } else {
      out.warnings.push_back("skipped vertex property '" + prop.name + "'");
    }
  }
  if (ix < 0 || iy < 0 || iz < 0) {
    throw Error(ErrorCode::MalformedHeader, "PLY: vertex element lacks x, y or z");
  }
  const bool normals = inx >= 0 && iny >= 0 && inz >= 0;
  if (!normals && (inx >= 0 || iny >= 0 || inz >= 0)) {
    out.warnings.push_back("incomplete normal properties ignored");
  }
  const bool provenance = ipx >= 0 && ipy >= 0;
  for (const auto& e : elements) {
    if (&e != vertex) {
      out.warnings.push_back("skipped element '" + e.name + "'");
    }
  }

  PointCloud& cloud = out.cloud;
  cloud.points.reserve(vertex->count);
  for (const auto& e : elements) {
    const bool is_vertex = &e == vertex;
    for (std::size_t k = 0; k < e.count; ++k) {
      do {
        if (!lines.next(line)) {
          throw Error(ErrorCode::CountMismatch,
                      "PLY: element '" + e.name + "' declares " + std::to_string(e.count) +
                          " entries, body has " + std::to_string(k));
        }
      } while (split(line).empty());
      if (!is_vertex) continue;
      const auto tok = split(line);
      // List properties make the token count variable; walk them in order.
      std::vector<double> values(e.properties.size(), 0.0);
      std::size_t t = 0;
      for (std::size_t p = 0; p < e.properties.size(); ++p) {
        if (t >= tok.size()) {
          throw Error(ErrorCode::MalformedBody,
                      "PLY line " + std::to_string(lines.number()) + ": too few values");
        }
        if (e.properties[p].is_list) {
          const auto len = static_cast<std::size_t>(parse_double(tok[t], lines.number()));
          t += 1 + len;
        } else {
          values[p] = parse_double(tok[t], lines.number());
          ++t;
        }
      }
      if (t != tok.size()) {
        throw Error(ErrorCode::MalformedBody,
                    "PLY line " + std::to_string(lines.number()) + ": too many values");
      }
      cloud.points.emplace_back(values[ix], values[iy], values[iz]);
      if (normals) {
        Vec3 n(values[inx], values[iny], values[inz]);
        const double len = n.norm();
        if (len > 0.0) n /= len;
        cloud.normals.push_back(n);
      }
      if (provenance) {
        cloud.provenance.push_back(
            {static_cast<std::int32_t>(values[ipx]), static_cast<std::int32_t>(values[ipy])});
      }
    }
  }
  while (lines.next(line)) {
    if (!split(line).empty()) {
      throw Error(ErrorCode::CountMismatch, "PLY: body has more lines than the header declares");
    }
  }
  return out;
}

std::string write_ply(const PointCloud& cloud, const std::vector<std::string>& comments) {
  cloud.validate();
  std::ostringstream os;
  os << "ply\nformat ascii 1.0\n";
  for (const auto& c : comments) {
    if (c.find('\n') != std::string::npos) {
      throw Error(ErrorCode::InvalidArgument, "PLY comments must be single lines");
    }
    os << "comment " << c << '\n';
  }
  os << "element vertex " << cloud.size() << '\n';
  os << "property float x\nproperty float y\nproperty float z\n";
  if (cloud.has_normals()) os << "property float nx\nproperty float ny\nproperty float nz\n";
  if (cloud.has_provenance()) os << "property int px\nproperty int py\n";
  os << "end_header\n";
  for (std::size_t i = 0; i < cloud.size(); ++i) {
    const Vec3& p = cloud.points[i];
    if (!p.allFinite()) throw Error(ErrorCode::InvalidArgument, "PLY: non-finite point");
    os << format_g9(p.x()) << ' ' << format_g9(p.y()) << ' ' << format_g9(p.z());
    if (cloud.has_normals()) {
      const Vec3& n = cloud.normals[i];
      os << ' ' << format_g9(n.x()) << ' ' << format_g9(n.y()) << ' ' << format_g9(n.z());
    }
    if (cloud.has_provenance()) {
      os << ' ' << cloud.provenance[i].x << ' ' << cloud.provenance[i].y;
    }
    os << '\n';
  }
  return os.str();
}

}  // namespace slscan::io
