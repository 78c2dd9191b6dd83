#include "kflow/shapes.hpp"

#include <cmath>
#include <numbers>
#include <string>

namespace kflow {

ParticleSet shape_sample(const GrayscaleMask& m, long n, Prng& rng) {
  if (n < 1) throw DimensionError("shape_sample: count must be >= 1");
  std::vector<std::size_t> cells;
  for (std::size_t i = 0; i < m.pixels.size(); ++i)
    if (m.pixels[i] < 128) cells.push_back(i);
  if (cells.empty()) throw DimensionError("shape_sample: mask has no pixel below 128");

  const double s = 2.0 / static_cast<double>(std::max(m.width, m.height));
  const double half_w = 0.5 * m.width;
  const double half_h = 0.5 * m.height;
  ParticleSet out(n, 2);
  for (long i = 0; i < n; ++i) {
    const std::size_t cell = cells[rng.uniform_index(cells.size())];
    const double row = static_cast<double>(cell / static_cast<std::size_t>(m.width));
    const double col = static_cast<double>(cell % static_cast<std::size_t>(m.width));
    const double px = col + rng.uniform();
    const double py = row + rng.uniform();
    out(i, 0) = (px - half_w) * s;
    out(i, 1) = (half_h - py) * s;
  }
  return out;
}

namespace {

bool in_disk(double x, double y) { return x * x + y * y <= 0.75 * 0.75; }

bool in_heart(double x, double y) {
  x /= 0.75;
  y = (y + 0.1) / 0.75;
  const double q = x * x + y * y - 1.0;
  return q * q * q - x * x * y * y * y <= 0.0;
}

bool in_spiral(double x, double y) {
  constexpr double a = 0.85 / (4.0 * std::numbers::pi);
  const double r = std::hypot(x, y);
  if (r <= 0.05 || r >= 0.9) return false;
  double phi = std::atan2(y, x);
  if (phi < 0.0) phi += 2.0 * std::numbers::pi;
  for (int k = -1; k <= 2; ++k) {
    const double arm = a * (phi + 2.0 * std::numbers::pi * k);
    if (arm >= 0.0 && std::abs(r - arm) < 0.05) return true;
  }
  return false;
}

}  // namespace

GrayscaleMask builtin_mask(std::string_view name, int size) {
  if (size < 2) throw DimensionError("builtin_mask: size must be >= 2");
  bool (*inside)(double, double) = nullptr;
  if (name == "disk") inside = in_disk;
  else if (name == "heart") inside = in_heart;
  else if (name == "spiral") inside = in_spiral;
  else throw DimensionError("builtin_mask: unknown shape '" + std::string(name) + "'");

  GrayscaleMask m;
  m.width = size;
  m.height = size;
  m.pixels.assign(static_cast<std::size_t>(size) * size, 255);
  const double s = 2.0 / size;
  for (int r = 0; r < size; ++r)
    for (int c = 0; c < size; ++c) {
      const double x = (c + 0.5) * s - 1.0;
      const double y = 1.0 - (r + 0.5) * s;
      if (inside(x, y)) m.pixels[static_cast<std::size_t>(r) * size + c] = 0;
    }
  return m;
}

}  // namespace kflow
