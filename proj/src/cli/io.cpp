#include "mpcl/cli.hpp"

#include "mpcl/error.hpp"
#include "mpcl/format.hpp"

#include <array>
#include <cerrno>
#include <cstdio>
#include <cstring>
#include <fstream>
#include <sstream>

namespace mpcl::cli {

std::string read_text(const std::filesystem::path& path) {
  std::ifstream in(path, std::ios::binary);
  if (!in) throw ConfigError("cannot read '" + path.string() + "'");
  std::ostringstream ss;
  ss << in.rdbuf();
  return ss.str();
}

void write_text(const std::filesystem::path& path, std::string_view text) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw ConfigError("cannot write '" + path.string() + "'");
  out.write(text.data(), static_cast<std::streamsize>(text.size()));
  if (!out) throw ConfigError("write failed for '" + path.string() + "'");
}

std::string features_csv(const Matrix& f) {
  std::string out = "node";
  for (Index j = 0; j < f.cols(); ++j) out += ",f" + std::to_string(j);
  out += '\n';
  for (Index i = 0; i < f.rows(); ++i) {
    out += std::to_string(i);
    for (Index j = 0; j < f.cols(); ++j) out += ',' + format_double(f(i, j));
    out += '\n';
  }
  return out;
}

namespace {

double cell(const CsvTable& t, std::size_t row, std::size_t col) {
  try {
    return parse_double(t.rows[row][col]);
  } catch (const ParseError& e) {
    throw ParseError(e.what(), row + 2);
  }
}

// Node ids must be 0..n-1 in order.
void check_node_column(const CsvTable& t) {
  const std::size_t col = csv_column(t, "node");
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    if (t.rows[r][col] != std::to_string(r))
      throw ParseError("expected node id " + std::to_string(r) + ", got '" + t.rows[r][col] + "'", r + 2);
}

}  // namespace

Matrix parse_features_csv(std::string_view text) {
  const CsvTable t = parse_csv(text);
  check_node_column(t);
  std::vector<std::size_t> cols;
  for (std::size_t j = 0;; ++j) {
    const std::string name = "f" + std::to_string(j);
    std::size_t found = t.header.size();
    for (std::size_t k = 0; k < t.header.size(); ++k)
      if (t.header[k] == name) found = k;
    if (found == t.header.size()) break;
    cols.push_back(found);
  }
  if (cols.empty()) throw ParseError("features CSV has no f0 column", 1);
  if (t.rows.empty()) throw ParseError("features CSV has no rows", 2);
  Matrix f(static_cast<Index>(t.rows.size()), static_cast<Index>(cols.size()));
  for (std::size_t r = 0; r < t.rows.size(); ++r)
    for (std::size_t j = 0; j < cols.size(); ++j)
      f(static_cast<Index>(r), static_cast<Index>(j)) = cell(t, r, cols[j]);
  return f;
}

std::string ids_csv(const std::vector<int>& ids, std::string_view column) {
  std::string out = "node," + std::string(column) + "\n";
  for (std::size_t i = 0; i < ids.size(); ++i) out += std::to_string(i) + ',' + std::to_string(ids[i]) + '\n';
  return out;
}

std::vector<int> parse_ids_csv(std::string_view text, std::string_view column) {
  const CsvTable t = parse_csv(text);
  check_node_column(t);
  const std::size_t col = csv_column(t, column);
  std::vector<int> ids;
  for (std::size_t r = 0; r < t.rows.size(); ++r) {
    const double v = cell(t, r, col);
    if (v < 0 || v != static_cast<int>(v))
      throw ParseError(std::string(column) + " must be a nonnegative integer", r + 2);
    ids.push_back(static_cast<int>(v));
  }
  return ids;
}

std::string points_csv(const PointCloud& cloud) {
  std::string out;
  for (Index j = 0; j < cloud.points.cols(); ++j) out += "x" + std::to_string(j) + ",";
  out += "label\n";
  for (Index i = 0; i < cloud.points.rows(); ++i) {
    for (Index j = 0; j < cloud.points.cols(); ++j) out += format_double(cloud.points(i, j)) + ',';
    out += std::to_string(cloud.labels[static_cast<std::size_t>(i)]) + '\n';
  }
  return out;
}

std::string trajectory_csv(const TrajectoryRecord& rec, const std::string* error) {
  std::string out = "step,L_align,L_unif,L_total";
  for (int k : rec.classes) out += ",dM_class_" + std::to_string(k);
  out += ",residual\n";
  for (const auto& row : rec.rows) {
    out += std::to_string(row.step) + ',' + format_double(row.l_align) + ',' + format_double(row.l_unif) +
           ',' + format_double(row.l_total);
    for (double d : row.d_m) out += ',' + format_double(d);
    out += ',' + format_double(row.residual) + '\n';
  }
  if (error) {
    out += "error," + *error;
    for (std::size_t i = 0; i < rec.classes.size() + 3; ++i) out += ',';
    out += '\n';
  }
  return out;
}

std::string scatter_svg(const Matrix& f, const std::vector<int>* labels) {
  static constexpr std::array<const char*, 10> kPalette{"#1f77b4", "#ff7f0e", "#2ca02c", "#d62728",
                                                        "#9467bd", "#8c564b", "#e377c2", "#7f7f7f",
                                                        "#bcbd22", "#17becf"};
  constexpr double kSize = 600.0;
  constexpr double kMargin = 20.0;
  double lo_x = f.col(0).minCoeff(), hi_x = f.col(0).maxCoeff();
  double lo_y = f.col(1).minCoeff(), hi_y = f.col(1).maxCoeff();
  const double span = std::max({hi_x - lo_x, hi_y - lo_y, 1e-12});
  const double cx = 0.5 * (lo_x + hi_x), cy = 0.5 * (lo_y + hi_y);
  const double scale = (kSize - 2.0 * kMargin) / span;

  std::string out =
      "<svg xmlns=\"http://www.w3.org/2000/svg\" width=\"600\" height=\"600\" viewBox=\"0 0 600 600\">\n"
      "<rect width=\"600\" height=\"600\" fill=\"white\"/>\n";
  char buf[160];
  for (Index i = 0; i < f.rows(); ++i) {
    const int label = labels ? (*labels)[static_cast<std::size_t>(i)] : 0;
    const double px = kSize / 2.0 + (f(i, 0) - cx) * scale;
    const double py = kSize / 2.0 - (f(i, 1) - cy) * scale;
    std::snprintf(buf, sizeof buf, "<circle cx=\"%.3f\" cy=\"%.3f\" r=\"3\" fill=\"%s\"/>\n", px, py,
                  kPalette[static_cast<std::size_t>(label) % kPalette.size()]);
    out += buf;
  }
  out += "</svg>\n";
  return out;
}

DirectoryLock::DirectoryLock(const std::filesystem::path& dir) : path_(dir / ".lock") {
  std::FILE* fp = std::fopen(path_.string().c_str(), "wx");
  if (!fp) {
    const bool held = errno == EEXIST;
    throw ConfigError(held ? "output directory '" + dir.string() + "' is locked by another run (" +
                                 path_.string() + ")"
                           : "cannot create lock file '" + path_.string() + "': " + std::strerror(errno));
  }
  std::fclose(fp);
}

DirectoryLock::~DirectoryLock() {
  std::error_code ec;
  std::filesystem::remove(path_, ec);
}

}  // namespace mpcl::cli
