#pragma once

#include "mpcl/dynamics.hpp"
#include "mpcl/oracle.hpp"

#include <filesystem>
#include <iosfwd>
#include <map>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpcl::cli {

enum ExitCode : int { kOk = 0, kCheckFailed = 1, kConfigError = 2, kDiverged = 3 };

// Flat `section.key = value` settings. '#' starts a comment line.
class Config {
 public:
  static Config parse(std::string_view text);
  static Config load(const std::filesystem::path& path);

  // Applies "key=value"; later assignments win.
  void set(std::string_view assignment);
  void set(const std::string& key, const std::string& value);

  bool has(const std::string& key) const { return values_.count(key) != 0; }
  std::string get(const std::string& key, const std::string& fallback) const;
  double get_double(const std::string& key, double fallback) const;
  long get_int(const std::string& key, long fallback) const;
  bool get_bool(const std::string& key, bool fallback) const;

  const std::map<std::string, std::string>& values() const { return values_; }
  std::string render() const;

 private:
  std::map<std::string, std::string> values_;
};

GaussianMixtureConfig synth_config(const Config& c);
DynamicsConfig dynamics_config(const Config& c);

struct LoadedGraph {
  AugmentationGraph graph;
  std::optional<Matrix> points;
};

// graph.source = synthetic builds the threshold graph over a fresh mixture;
// graph.source = files reads graph.edges plus optional graph.labels/groups.
LoadedGraph load_graph(const Config& c);

// CSV and edge-list persistence.
std::string read_text(const std::filesystem::path& path);
void write_text(const std::filesystem::path& path, std::string_view text);
std::string features_csv(const Matrix& f);
Matrix parse_features_csv(std::string_view text);
std::string ids_csv(const std::vector<int>& ids, std::string_view column);
std::vector<int> parse_ids_csv(std::string_view text, std::string_view column);
std::string points_csv(const PointCloud& cloud);
std::string trajectory_csv(const TrajectoryRecord& rec, const std::string* error = nullptr);
std::string scatter_svg(const Matrix& f, const std::vector<int>* labels);

// Exclusive marker file inside an output directory.
class DirectoryLock {
 public:
  explicit DirectoryLock(const std::filesystem::path& dir);
  ~DirectoryLock();
  DirectoryLock(const DirectoryLock&) = delete;
  DirectoryLock& operator=(const DirectoryLock&) = delete;

 private:
  std::filesystem::path path_;
};

int cmd_synth(const Config& c, std::ostream& out, std::ostream& err);
int cmd_run(const Config& c, std::ostream& out, std::ostream& err);
int cmd_analyze(const Config& c, std::ostream& out, std::ostream& err);
int cmd_check(const Config& c, std::ostream& out, std::ostream& err, const SuiteHooks& hooks = {});

// Parses argv (subcommand, --config, repeated --set) and dispatches.
int main(int argc, char** argv, std::ostream& out, std::ostream& err);

}  // namespace mpcl::cli
