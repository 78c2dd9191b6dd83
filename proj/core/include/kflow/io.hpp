#pragma once

#include <filesystem>
#include <string>
#include <string_view>
#include <vector>

#include "kflow/flowcore.hpp"

namespace kflow {

/// Writes to a sibling temporary file, then renames it over path. Creates parent
/// directories as needed.
void write_file_atomic(const std::filesystem::path& path, std::string_view content);

/// Shortest round-trip decimal form ("nan", "inf", "-inf" for non-finite values).
std::string format_double(double v);

/// Comma-separated table with a header row and LF line endings.
class CsvTable {
 public:
  explicit CsvTable(std::vector<std::string> header);

  void add_row(const std::vector<double>& values);
  std::size_t rows() const noexcept { return rows_; }
  const std::string& text() const noexcept { return text_; }
  void write(const std::filesystem::path& path) const { write_file_atomic(path, text_); }

 private:
  std::size_t columns_;
  std::size_t rows_ = 0;
  std::string text_;
};

/// One point per row, columns x0..x{n-1}.
void write_particles_csv(const std::filesystem::path& path, const ParticleSet& p);

}  // namespace kflow
