#pragma once

#include <cstdint>
#include <filesystem>
#include <stdexcept>
#include <string>
#include <string_view>
#include <vector>

namespace kflow {

/// 8-bit grayscale image, row-major with row 0 at the top.
struct GrayscaleMask {
  int width = 0;
  int height = 0;
  std::vector<std::uint8_t> pixels;

  std::uint8_t at(int row, int col) const { return pixels[static_cast<std::size_t>(row) * width + col]; }
};

class PgmError : public std::runtime_error {
 public:
  PgmError(const std::string& what, std::size_t offset)
      : std::runtime_error(what + " (byte offset " + std::to_string(offset) + ")"), offset_(offset) {}
  std::size_t offset() const noexcept { return offset_; }

 private:
  std::size_t offset_;
};

/// Parses P2 (ASCII) or P5 (binary) data with maxval 255.
GrayscaleMask pgm_parse(std::string_view bytes);
GrayscaleMask pgm_load(const std::filesystem::path& path);

std::string pgm_encode(const GrayscaleMask& mask, bool binary = true);
void pgm_write(const std::filesystem::path& path, const GrayscaleMask& mask, bool binary = true);

}  // namespace kflow
