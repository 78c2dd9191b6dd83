#include "kflow/pgm.hpp"

#include <cctype>
#include <charconv>
#include <fstream>
#include <iterator>

#include "kflow/io.hpp"

namespace kflow {

namespace {

class Cursor {
 public:
  explicit Cursor(std::string_view s) : s_(s) {}

  std::size_t pos() const noexcept { return pos_; }
  bool done() const noexcept { return pos_ >= s_.size(); }

  // Whitespace and '#' comments, as allowed between header fields.
  void skip_header_space() {
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

  long read_uint(const char* what) {
    skip_header_space();
    if (done()) throw PgmError(std::string("pgm: unexpected end of data reading ") + what, pos_);
    long v = 0;
    const auto [end, ec] = std::from_chars(s_.data() + pos_, s_.data() + s_.size(), v);
    if (ec != std::errc() || v < 0) throw PgmError(std::string("pgm: expected an unsigned integer for ") + what, pos_);
    const std::size_t next = static_cast<std::size_t>(end - s_.data());
    if (next < s_.size() && !std::isspace(static_cast<unsigned char>(s_[next])) && s_[next] != '#')
      throw PgmError(std::string("pgm: malformed ") + what, next);
    pos_ = next;
    return v;
  }

  std::string_view rest() const { return s_.substr(pos_); }
  void advance(std::size_t n) { pos_ += n; }
  char peek() const { return s_[pos_]; }

 private:
  std::string_view s_;
  std::size_t pos_ = 0;
};

}  // namespace

GrayscaleMask pgm_parse(std::string_view bytes) {
  if (bytes.size() < 2 || bytes[0] != 'P' || (bytes[1] != '2' && bytes[1] != '5'))
    throw PgmError("pgm: missing P2/P5 magic", 0);
  const bool binary = bytes[1] == '5';
  Cursor cur(bytes);
  cur.advance(2);
  if (cur.done() || !std::isspace(static_cast<unsigned char>(cur.peek())))
    throw PgmError("pgm: malformed magic", cur.pos());

  GrayscaleMask m;
  const long w = cur.read_uint("width");
  const long h = cur.read_uint("height");
  if (w < 1 || h < 1 || w > 65535 || h > 65535) throw PgmError("pgm: invalid image size", cur.pos());
  const std::size_t maxval_at = cur.pos();
  const long maxval = cur.read_uint("maxval");
  if (maxval != 255) throw PgmError("pgm: maxval must be 255, got " + std::to_string(maxval), maxval_at);
  m.width = static_cast<int>(w);
  m.height = static_cast<int>(h);
  const std::size_t count = static_cast<std::size_t>(w) * static_cast<std::size_t>(h);
  m.pixels.resize(count);

  if (binary) {
    if (cur.done() || !std::isspace(static_cast<unsigned char>(cur.peek())))
      throw PgmError("pgm: expected a single whitespace byte before raster", cur.pos());
    cur.advance(1);
    const std::string_view raster = cur.rest();
    if (raster.size() < count)
      throw PgmError("pgm: truncated raster, expected " + std::to_string(count) + " bytes",
                     cur.pos() + raster.size());
    for (std::size_t i = 0; i < count; ++i) m.pixels[i] = static_cast<std::uint8_t>(raster[i]);
  } else {
    for (std::size_t i = 0; i < count; ++i) {
      cur.skip_header_space();
      if (cur.done()) throw PgmError("pgm: truncated raster at pixel " + std::to_string(i), cur.pos());
      const std::size_t at = cur.pos();
      const long v = cur.read_uint("pixel");
      if (v > 255) throw PgmError("pgm: pixel value exceeds maxval", at);
      m.pixels[i] = static_cast<std::uint8_t>(v);
    }
  }
  return m;
}

GrayscaleMask pgm_load(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw PgmError("pgm: cannot open " + path.string(), 0);
  const std::string data((std::istreambuf_iterator<char>(in)), std::istreambuf_iterator<char>());
  return pgm_parse(data);
}

std::string pgm_encode(const GrayscaleMask& mask, bool binary) {
  if (mask.pixels.size() != static_cast<std::size_t>(mask.width) * static_cast<std::size_t>(mask.height))
    throw std::invalid_argument("pgm_encode: pixel count does not match size");
  std::string out = binary ? "P5\n" : "P2\n";
  out += std::to_string(mask.width) + " " + std::to_string(mask.height) + "\n255\n";
  if (binary) {
    out.append(reinterpret_cast<const char*>(mask.pixels.data()), mask.pixels.size());
  } else {
    for (int r = 0; r < mask.height; ++r) {
      for (int c = 0; c < mask.width; ++c) {
        if (c) out += ' ';
        out += std::to_string(mask.at(r, c));
      }
      out += '\n';
    }
  }
  return out;
}

void pgm_write(const std::filesystem::path& path, const GrayscaleMask& mask, bool binary) {
  write_file_atomic(path, pgm_encode(mask, binary));
}

}  // namespace kflow
