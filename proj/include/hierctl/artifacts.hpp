#pragma once

#include <cstdint>
#include <filesystem>
#include <string>
#include <variant>
#include <vector>

#include "hierctl/grid.hpp"

namespace hierctl {

/// Writes through a temporary file in the same directory and renames it into place.
void write_atomic(const std::filesystem::path& path, const std::string& content);

/// Exact decimal form used in every artifact (17 significant digits).
std::string format_real(double x);

/**
 * One CSV file. The first line is "# config_hash=<hex> seed=<n>", the second the column names.
 * Cells are numbers or plain strings; numbers are printed with format_real.
 */
class CsvTable {
 public:
  using Cell = std::variant<double, std::int64_t, std::string>;

  CsvTable(std::vector<std::string> columns, std::string config_hash, std::uint64_t seed);

  void add_row(std::vector<Cell> row);
  std::size_t rows() const { return rows_.size(); }
  const std::vector<std::string>& columns() const { return columns_; }
  std::string render() const;
  void write(const std::filesystem::path& path) const;

 private:
  std::vector<std::string> columns_;
  std::vector<std::vector<Cell>> rows_;
  std::string hash_;
  std::uint64_t seed_;
};

/// Rows are slots (t_k for state and adjoint layouts), columns are nodes.
CsvTable field_table(const SpaceTimeField& f, const Discretization& disc,
                     const std::vector<double>& times, const std::string& config_hash,
                     std::uint64_t seed);

struct LogLogPlot {
  std::string title;
  std::string x_label;
  std::string y_label;
  std::vector<double> x, y;
  /// Points drawn filled; the others hollow.
  std::vector<bool> highlighted;
  /// Fitted power y = c x^slope drawn over the highlighted points when set.
  double slope = 0.0;
  bool show_fit = false;
  std::string config_hash;
};

/// Self-contained SVG document.
std::string render_svg(const LogLogPlot& plot);

/// Output directory: the explicit value if given, otherwise HIERCTL_OUT_DIR, otherwise `fallback`.
std::filesystem::path resolve_output_dir(const std::string& explicit_dir, const std::string& fallback);

}  // namespace hierctl
