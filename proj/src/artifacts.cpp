#include "hierctl/artifacts.hpp"

#include <fmt/format.h>
#include <unistd.h>

#include <algorithm>
#include <cmath>
#include <cstdlib>
#include <fstream>

#include "hierctl/error.hpp"

namespace hierctl {

namespace fs = std::filesystem;

void write_atomic(const fs::path& path, const std::string& content) {
  std::error_code ec;
  if (path.has_parent_path()) {
    fs::create_directories(path.parent_path(), ec);
    if (ec) throw IoError("cannot create directory '" + path.parent_path().string() + "': " + ec.message());
  }
  fs::path tmp = path;
  tmp += fmt::format(".tmp{}", static_cast<long>(::getpid()));
  {
    std::ofstream out(tmp, std::ios::binary | std::ios::trunc);
    if (!out) throw IoError("cannot open '" + tmp.string() + "' for writing");
    out.write(content.data(), static_cast<std::streamsize>(content.size()));
    out.flush();
    if (!out) throw IoError("write failed for '" + tmp.string() + "'");
  }
  fs::rename(tmp, path, ec);
  if (ec) {
    fs::remove(tmp, ec);
    throw IoError("cannot move artifact into place at '" + path.string() + "'");
  }
}

std::string format_real(double x) {
  if (x == 0.0) return "0";
  return fmt::format("{:.17g}", x);
}

CsvTable::CsvTable(std::vector<std::string> columns, std::string config_hash, std::uint64_t seed)
    : columns_(std::move(columns)), hash_(std::move(config_hash)), seed_(seed) {}

void CsvTable::add_row(std::vector<Cell> row) {
  if (row.size() != columns_.size())
    throw Error(ErrorClass::internal, fmt::format("CsvTable: row has {} cells, expected {}",
                                                  row.size(), columns_.size()));
  rows_.push_back(std::move(row));
}

std::string CsvTable::render() const {
  std::string out = fmt::format("# config_hash={} seed={}\n", hash_, seed_);
  for (std::size_t i = 0; i < columns_.size(); ++i) {
    if (i) out += ',';
    out += columns_[i];
  }
  out += '\n';
  for (const auto& row : rows_) {
    for (std::size_t i = 0; i < row.size(); ++i) {
      if (i) out += ',';
      std::visit(
          [&](const auto& v) {
            using T = std::decay_t<decltype(v)>;
            if constexpr (std::is_same_v<T, double>)
              out += format_real(v);
            else if constexpr (std::is_same_v<T, std::int64_t>)
              out += std::to_string(v);
            else
              out += v;
          },
          row[i]);
    }
    out += '\n';
  }
  return out;
}

void CsvTable::write(const fs::path& path) const { write_atomic(path, render()); }

CsvTable field_table(const SpaceTimeField& f, const Discretization& disc,
                     const std::vector<double>& times, const std::string& config_hash,
                     std::uint64_t seed) {
  std::vector<std::string> cols{"t"};
  for (std::size_t j = 0; j < disc.nodes(); ++j)
    cols.push_back("x=" + format_real(disc.space.node(j)));
  CsvTable table(std::move(cols), config_hash, seed);
  for (std::size_t k = 0; k < f.slots(); ++k) {
    std::vector<CsvTable::Cell> row{times.at(k)};
    for (std::size_t j = 0; j < f.nodes(); ++j) row.emplace_back(f(k, j));
    table.add_row(std::move(row));
  }
  return table;
}

std::string render_svg(const LogLogPlot& p) {
  constexpr double W = 640, H = 440, L = 80, R = 20, T = 40, B = 60;
  std::vector<double> lx, ly;
  for (std::size_t i = 0; i < p.x.size(); ++i) {
    if (p.x[i] > 0.0 && p.y[i] > 0.0) {
      lx.push_back(std::log10(p.x[i]));
      ly.push_back(std::log10(p.y[i]));
    }
  }
  std::string svg = fmt::format(
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"{}\" height=\"{}\" "
      "viewBox=\"0 0 {} {}\">\n<!-- config_hash={} -->\n"
      "<rect width=\"100%\" height=\"100%\" fill=\"white\"/>\n",
      W, H, W, H, p.config_hash);
  svg += fmt::format("<text x=\"{}\" y=\"24\" font-family=\"sans-serif\" font-size=\"15\" "
                     "text-anchor=\"middle\">{}</text>\n",
                     W / 2, p.title);
  if (lx.empty()) return svg + "</svg>\n";
  auto [x0, x1] = std::minmax_element(lx.begin(), lx.end());
  auto [y0, y1] = std::minmax_element(ly.begin(), ly.end());
  const double xlo = std::floor(*x0), xhi = std::max(std::ceil(*x1), xlo + 1);
  const double ylo = std::floor(*y0), yhi = std::max(std::ceil(*y1), ylo + 1);
  auto px = [&](double v) { return L + (v - xlo) / (xhi - xlo) * (W - L - R); };
  auto py = [&](double v) { return H - B - (v - ylo) / (yhi - ylo) * (H - T - B); };

  svg += fmt::format("<rect x=\"{}\" y=\"{}\" width=\"{}\" height=\"{}\" fill=\"none\" "
                     "stroke=\"black\"/>\n",
                     L, T, W - L - R, H - T - B);
  for (double e = xlo; e <= xhi + 1e-9; e += 1.0)
    svg += fmt::format("<text x=\"{:.1f}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"middle\">1e{}</text>\n",
                       px(e), H - B + 16, static_cast<int>(e));
  for (double e = ylo; e <= yhi + 1e-9; e += 1.0)
    svg += fmt::format("<text x=\"{}\" y=\"{:.1f}\" font-family=\"sans-serif\" font-size=\"11\" "
                       "text-anchor=\"end\">1e{}</text>\n",
                       L - 6, py(e) + 4, static_cast<int>(e));
  svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" "
                     "text-anchor=\"middle\">{}</text>\n",
                     L + (W - L - R) / 2, H - 16, p.x_label);
  svg += fmt::format("<text x=\"18\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" "
                     "text-anchor=\"middle\" transform=\"rotate(-90 18 {})\">{}</text>\n",
                     T + (H - T - B) / 2, T + (H - T - B) / 2, p.y_label);

  std::string path;
  for (std::size_t i = 0; i < lx.size(); ++i)
    path += fmt::format("{}{:.2f},{:.2f}", i ? " L" : "M", px(lx[i]), py(ly[i]));
  svg += "<path d=\"" + path + "\" fill=\"none\" stroke=\"#1f77b4\"/>\n";
  for (std::size_t i = 0; i < lx.size(); ++i) {
    const bool filled = i < p.highlighted.size() ? p.highlighted[i] : true;
    svg += fmt::format("<circle cx=\"{:.2f}\" cy=\"{:.2f}\" r=\"4\" fill=\"{}\" stroke=\"#1f77b4\"/>\n",
                       px(lx[i]), py(ly[i]), filled ? "#1f77b4" : "white");
  }

  if (p.show_fit) {
    // Intercept through the centroid of the highlighted points.
    double sx = 0.0, sy = 0.0;
    std::size_t cnt = 0;
    for (std::size_t i = 0; i < lx.size(); ++i) {
      if (i < p.highlighted.size() && !p.highlighted[i]) continue;
      sx += lx[i];
      sy += ly[i];
      ++cnt;
    }
    if (cnt > 0) {
      sx /= static_cast<double>(cnt);
      sy /= static_cast<double>(cnt);
      const double a = xlo, b = xhi;
      svg += fmt::format("<line x1=\"{:.2f}\" y1=\"{:.2f}\" x2=\"{:.2f}\" y2=\"{:.2f}\" "
                         "stroke=\"#d62728\" stroke-dasharray=\"6 4\"/>\n",
                         px(a), py(sy + p.slope * (a - sx)), px(b), py(sy + p.slope * (b - sx)));
      svg += fmt::format("<text x=\"{}\" y=\"{}\" font-family=\"sans-serif\" font-size=\"13\" "
                         "fill=\"#d62728\">slope = {:.4f}</text>\n",
                         L + 12, T + 20, p.slope);
    }
  }
  return svg + "</svg>\n";
}

fs::path resolve_output_dir(const std::string& explicit_dir, const std::string& fallback) {
  if (!explicit_dir.empty()) return explicit_dir;
  if (const char* env = std::getenv("HIERCTL_OUT_DIR"); env && *env) return env;
  return fallback;
}

}  // namespace hierctl
