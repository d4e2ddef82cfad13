#include "slscan/io.hpp"

#include "slscan/error.hpp"

#include <cctype>
#include <charconv>

namespace slscan::io {
namespace {

class HeaderReader {
 public:
  explicit HeaderReader(std::string_view s) : s_(s) {}

  void skip_space_and_comments() {
    while (pos_ < s_.size()) {
      const char c = s_[pos_];
      if (c == '#') {
        while (pos_ < s_.size() && s_[pos_] != '\n') ++pos_;
      } else if (std::isspace(static_cast<unsigned char>(c))) {
        ++pos_;
      } else {
        break;
      }
    }
  }

  long number(const char* what) {
    skip_space_and_comments();
    const std::size_t start = pos_;
    while (pos_ < s_.size() && std::isdigit(static_cast<unsigned char>(s_[pos_]))) ++pos_;
    long v = 0;
    const auto r = std::from_chars(s_.data() + start, s_.data() + pos_, v);
    if (start == pos_ || r.ec != std::errc() || v > 1'000'000'000L) {
      throw Error(ErrorCode::MalformedHeader, std::string("PGM: bad ") + what);
    }
    return v;
  }

  std::size_t pos() const noexcept { return pos_; }
  void advance() noexcept { ++pos_; }
  bool at_space() const noexcept {
    return pos_ < s_.size() && std::isspace(static_cast<unsigned char>(s_[pos_]));
  }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayImage read_pgm(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '5' && bytes[1] != '2')) {
    throw Error(ErrorCode::MalformedHeader, "PGM: missing P5/P2 magic");
  }
  const bool binary = bytes[1] == '5';
  HeaderReader r(bytes.substr(2));
  if (!r.at_space() && bytes.size() > 2 && bytes[2] != '#') {
    throw Error(ErrorCode::MalformedHeader, "PGM: missing separator after magic");
  }
  const long w = r.number("width");
  const long h = r.number("height");
  const long maxval = r.number("maxval");
  if (w <= 0 || h <= 0) throw Error(ErrorCode::MalformedHeader, "PGM: zero image size");
  if (maxval == 0 || maxval > 255) {
    throw Error(ErrorCode::UnsupportedMaxval,
                "PGM: maxval " + std::to_string(maxval) + " is not in [1, 255]");
  }
  GrayImage img(static_cast<int>(w), static_cast<int>(h));
  const std::size_t n = img.size();
  if (binary) {
    // Exactly one whitespace byte separates maxval from the raster.
    if (!r.at_space()) throw Error(ErrorCode::MalformedHeader, "PGM: missing raster separator");
    r.advance();
    const std::size_t start = 2 + r.pos();
    if (bytes.size() < start + n) {
      throw Error(ErrorCode::TruncatedBody, "PGM: expected " + std::to_string(n) + " bytes, got " +
                                                std::to_string(bytes.size() - start));
    }
    for (std::size_t i = 0; i < n; ++i) {
      const auto v = static_cast<std::uint8_t>(bytes[start + i]);
      if (v > maxval) throw Error(ErrorCode::MalformedBody, "PGM: sample exceeds maxval");
      img.pixels[i] = v;
    }
    return img;
  }
  for (std::size_t i = 0; i < n; ++i) {
    long v = 0;
    try {
      v = r.number("sample");
    } catch (const Error&) {
      throw Error(ErrorCode::TruncatedBody, "PGM: ASCII raster ends after " + std::to_string(i) +
                                                " of " + std::to_string(n) + " samples");
    }
    if (v > maxval) throw Error(ErrorCode::MalformedBody, "PGM: sample exceeds maxval");
    img.pixels[i] = static_cast<std::uint8_t>(v);
  }
  return img;
}

std::string write_pgm(const GrayImage& image) {
  std::string out = "P5\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  out.append(reinterpret_cast<const char*>(image.pixels.data()), image.pixels.size());
  return out;
}

std::string write_pgm_ascii(const GrayImage& image) {
  std::string out = "P2\n" + std::to_string(image.width) + " " + std::to_string(image.height) +
                    "\n255\n";
  for (int y = 0; y < image.height; ++y) {
    for (int x = 0; x < image.width; ++x) {
      if (x > 0) out += ' ';
      out += std::to_string(image.at(x, y));
    }
    out += '\n';
  }
  return out;
}

}  // namespace slscan::io
