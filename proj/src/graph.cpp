#include "mpcl/graph.hpp"

#include "mpcl/error.hpp"
#include "mpcl/format.hpp"

#include <algorithm>
#include <charconv>
#include <cmath>
#include <map>
#include <numeric>
#include <random>
#include <set>
#include <sstream>

namespace mpcl {

std::string_view to_string(WeightMode mode) {
  return mode == WeightMode::degree ? "degree" : "uniform";
}

WeightMode parse_weight_mode(std::string_view text) {
  if (text == "degree") return WeightMode::degree;
  if (text == "uniform") return WeightMode::uniform;
  throw ConfigError("unknown weight mode '" + std::string(text) + "' (expected degree|uniform)");
}

namespace {

void check_ids(const std::optional<std::vector<int>>& ids, Index n, const char* what) {
  if (!ids) return;
  if (static_cast<Index>(ids->size()) != n) {
    throw ConfigError(std::string("AugmentationGraph: ") + what + " has " +
                      std::to_string(ids->size()) + " entries for " + std::to_string(n) + " nodes");
  }
  for (int id : *ids)
    if (id < 0) throw ConfigError(std::string("AugmentationGraph: negative ") + what + " id");
}

}  // namespace

AugmentationGraph::AugmentationGraph(SymmetricMatrix adjacency, WeightMode mode,
                                     std::optional<std::vector<int>> labels,
                                     std::optional<std::vector<int>> groups)
    : adjacency_(std::move(adjacency)),
      mode_(mode),
      labels_(std::move(labels)),
      groups_(std::move(groups)),
      abar_(Matrix::Identity(1, 1)) {
  const Index n = adjacency_.size();
  const Matrix& a = adjacency_.matrix();
  require_finite(a, "adjacency");
  if (a.minCoeff() < 0.0) throw ConfigError("AugmentationGraph: adjacency has a negative entry");
  check_ids(labels_, n, "labels");
  check_ids(groups_, n, "groups");

  Vector deg = a.rowwise().sum();
  double min_positive = 0.0;
  for (Index i = 0; i < n; ++i)
    if (deg(i) > 0.0 && (min_positive == 0.0 || deg(i) < min_positive)) min_positive = deg(i);
  if (min_positive == 0.0) min_positive = 1.0;

  isolated_.assign(static_cast<std::size_t>(n), false);
  for (Index i = 0; i < n; ++i) {
    if (deg(i) == 0.0) {
      isolated_[static_cast<std::size_t>(i)] = true;
      deg(i) = min_positive;
      warnings_.push_back("node " + std::to_string(i) + " is isolated (zero degree)");
    }
  }
  degrees_ = deg;

  if (mode_ == WeightMode::uniform) {
    weights_ = Vector::Constant(n, 1.0 / static_cast<double>(n));
  } else {
    weights_ = degrees_ / degrees_.sum();
  }

  Vector inv_sqrt = degrees_.array().rsqrt();
  Matrix abar(n, n);
  for (Index j = 0; j < n; ++j) {
    for (Index i = 0; i <= j; ++i) {
      double value;
      if (i == j && isolated_[static_cast<std::size_t>(i)]) {
        value = 1.0;
      } else {
        value = a(i, j) * (inv_sqrt(i) * inv_sqrt(j));
      }
      abar(i, j) = value;
      abar(j, i) = value;
    }
  }
  abar_ = SymmetricMatrix(std::move(abar));
}

SymmetricMatrix AugmentationGraph::laplacian() const {
  const Index n = size();
  Matrix l = -abar_.matrix();
  l.diagonal().array() += 1.0;
  for (Index i = 0; i < n; ++i)
    if (isolated_[static_cast<std::size_t>(i)]) l(i, i) = 0.0;
  return SymmetricMatrix(std::move(l));
}

Matrix AugmentationGraph::joint() const {
  Matrix p = adjacency_.matrix();
  for (Index i = 0; i < size(); ++i)
    if (isolated_[static_cast<std::size_t>(i)]) p(i, i) = degrees_(i);
  return p / degrees_.sum();
}

const std::vector<int>& AugmentationGraph::labels() const {
  if (!labels_) throw ConfigError("graph has no labels");
  return *labels_;
}

const std::vector<int>& AugmentationGraph::groups() const {
  if (!groups_) throw ConfigError("graph has no groups");
  return *groups_;
}

Index AugmentationGraph::isolated_count() const {
  return static_cast<Index>(std::count(isolated_.begin(), isolated_.end(), true));
}

AugmentationGraph AugmentationGraph::with_weight_mode(WeightMode mode) const {
  return AugmentationGraph(adjacency_, mode, labels_, groups_);
}

AugmentationGraph AugmentationGraph::with_labels(std::vector<int> labels) const {
  return AugmentationGraph(adjacency_, mode_, std::move(labels), groups_);
}

AugmentationGraph AugmentationGraph::with_groups(std::vector<int> groups) const {
  return AugmentationGraph(adjacency_, mode_, labels_, std::move(groups));
}

void GaussianMixtureConfig::validate() const {
  if (means.empty()) throw ConfigError("gaussian mixture: at least one mean required");
  if (!(variance > 0.0) || !std::isfinite(variance))
    throw ConfigError("gaussian mixture: variance must be positive");
  if (points_per_class < 1) throw ConfigError("gaussian mixture: points_per_class must be >= 1");
  for (const auto& m : means)
    if (!std::isfinite(m[0]) || !std::isfinite(m[1]))
      throw ConfigError("gaussian mixture: non-finite mean");
}

PointCloud build_synthetic_gaussians(const GaussianMixtureConfig& cfg) {
  cfg.validate();
  const auto classes = static_cast<Index>(cfg.means.size());
  const Index n = classes * cfg.points_per_class;
  std::mt19937_64 rng(cfg.seed);
  std::normal_distribution<double> noise(0.0, std::sqrt(cfg.variance));

  PointCloud cloud{Matrix(n, 2), std::vector<int>(static_cast<std::size_t>(n))};
  Index row = 0;
  for (Index k = 0; k < classes; ++k) {
    const auto& mean = cfg.means[static_cast<std::size_t>(k)];
    for (int i = 0; i < cfg.points_per_class; ++i, ++row) {
      const double dx = noise(rng);
      const double dy = noise(rng);
      cloud.points(row, 0) = mean[0] + dx;
      cloud.points(row, 1) = mean[1] + dy;
      cloud.labels[static_cast<std::size_t>(row)] = static_cast<int>(k);
    }
  }
  return cloud;
}

AugmentationGraph build_threshold_graph(const Matrix& points, double epsilon, bool self_loops,
                                        WeightMode mode) {
  if (points.rows() < 2) throw ConfigError("build_threshold_graph: need at least two points");
  if (!(epsilon > 0.0)) throw ConfigError("build_threshold_graph: epsilon must be positive");
  require_finite(points, "points");
  const Index n = points.rows();
  Matrix a = Matrix::Zero(n, n);
  for (Index i = 0; i < n; ++i) {
    if (self_loops) a(i, i) = 1.0;
    for (Index j = i + 1; j < n; ++j) {
      if ((points.row(i) - points.row(j)).norm() <= epsilon) {
        a(i, j) = 1.0;
        a(j, i) = 1.0;
      }
    }
  }
  return AugmentationGraph(SymmetricMatrix(std::move(a)), mode);
}

std::vector<int> nodes_of_class(const AugmentationGraph& g, int k) {
  std::vector<int> nodes;
  const auto& labels = g.labels();
  for (std::size_t i = 0; i < labels.size(); ++i)
    if (labels[i] == k) nodes.push_back(static_cast<int>(i));
  return nodes;
}

AugmentationGraph induced_subgraph(const AugmentationGraph& g, const std::vector<int>& nodes) {
  if (nodes.empty()) throw ConfigError("induced_subgraph: empty node set");
  const auto m = static_cast<Index>(nodes.size());
  Matrix a(m, m);
  for (Index i = 0; i < m; ++i)
    for (Index j = 0; j < m; ++j)
      a(i, j) = g.adjacency()(nodes[static_cast<std::size_t>(i)], nodes[static_cast<std::size_t>(j)]);

  auto pick = [&](const std::vector<int>& ids) {
    std::vector<int> out;
    out.reserve(nodes.size());
    for (int v : nodes) out.push_back(ids[static_cast<std::size_t>(v)]);
    return out;
  };
  std::optional<std::vector<int>> labels;
  std::optional<std::vector<int>> groups;
  if (g.has_labels()) labels = pick(g.labels());
  if (g.has_groups()) groups = pick(g.groups());
  return AugmentationGraph(SymmetricMatrix(std::move(a)), g.weight_mode(), std::move(labels),
                           std::move(groups));
}

AugmentationGraph class_subgraph(const AugmentationGraph& g, int k) {
  const auto nodes = nodes_of_class(g, k);
  if (nodes.empty()) throw ConfigError("class_subgraph: class " + std::to_string(k) + " is empty");
  return induced_subgraph(g, nodes);
}

std::vector<int> class_ids(const AugmentationGraph& g) {
  std::set<int> ids(g.labels().begin(), g.labels().end());
  return {ids.begin(), ids.end()};
}

double algebraic_connectivity(const AugmentationGraph& g) {
  if (g.size() < 2) throw ConfigError("algebraic_connectivity: need at least two nodes");
  const auto eig = sym_eigendecompose(g.laplacian(), {}, "laplacian");
  // Descending order: the second smallest sits at n-2.
  const double lambda = eig.eigenvalues(g.size() - 2);
  return std::clamp(lambda, 0.0, 2.0);
}

std::vector<std::vector<int>> connected_components(const AugmentationGraph& g) {
  const Index n = g.size();
  std::vector<int> parent(static_cast<std::size_t>(n));
  std::iota(parent.begin(), parent.end(), 0);
  auto find = [&](int x) {
    while (parent[static_cast<std::size_t>(x)] != x) {
      parent[static_cast<std::size_t>(x)] =
          parent[static_cast<std::size_t>(parent[static_cast<std::size_t>(x)])];
      x = parent[static_cast<std::size_t>(x)];
    }
    return x;
  };
  for (Index i = 0; i < n; ++i) {
    for (Index j = i + 1; j < n; ++j) {
      if (g.adjacency()(i, j) > 0.0) {
        const int ri = find(static_cast<int>(i));
        const int rj = find(static_cast<int>(j));
        if (ri != rj) parent[static_cast<std::size_t>(std::max(ri, rj))] = std::min(ri, rj);
      }
    }
  }
  std::map<int, std::vector<int>> by_root;
  for (Index i = 0; i < n; ++i) by_root[find(static_cast<int>(i))].push_back(static_cast<int>(i));
  std::vector<std::vector<int>> out;
  for (auto& [root, members] : by_root) out.push_back(std::move(members));
  std::sort(out.begin(), out.end(), [](const auto& a, const auto& b) { return a.front() < b.front(); });
  return out;
}

std::string save_edge_list(const AugmentationGraph& g) {
  std::string out = "# nodes=" + std::to_string(g.size()) + "\n";
  const Matrix& a = g.adjacency().matrix();
  for (Index i = 0; i < g.size(); ++i) {
    for (Index j = i; j < g.size(); ++j) {
      if (a(i, j) == 0.0) continue;
      out += std::to_string(i);
      out += ' ';
      out += std::to_string(j);
      out += ' ';
      out += format_double(a(i, j));
      out += '\n';
    }
  }
  return out;
}

namespace {

std::vector<std::string_view> split_ws(std::string_view line) {
  std::vector<std::string_view> tokens;
  std::size_t i = 0;
  while (i < line.size()) {
    while (i < line.size() && (line[i] == ' ' || line[i] == '\t' || line[i] == '\r')) ++i;
    std::size_t j = i;
    while (j < line.size() && line[j] != ' ' && line[j] != '\t' && line[j] != '\r') ++j;
    if (j > i) tokens.push_back(line.substr(i, j - i));
    i = j;
  }
  return tokens;
}

long parse_index(std::string_view tok, std::size_t line_no) {
  long value = 0;
  auto [ptr, ec] = std::from_chars(tok.data(), tok.data() + tok.size(), value);
  if (ec != std::errc() || ptr != tok.data() + tok.size())
    throw ParseError("invalid node index '" + std::string(tok) + "'", line_no);
  return value;
}

}  // namespace

AugmentationGraph load_edge_list(std::string_view text, WeightMode mode) {
  std::size_t line_no = 0;
  std::size_t pos = 0;
  std::optional<long> nodes;
  std::map<std::pair<long, long>, double> edges;

  while (pos <= text.size()) {
    const std::size_t end = std::min(text.find('\n', pos), text.size());
    std::string_view line = text.substr(pos, end - pos);
    pos = end + 1;
    ++line_no;
    const auto tokens = split_ws(line);
    if (tokens.empty()) {
      if (end == text.size()) break;
      continue;
    }
    if (!nodes) {
      const std::string_view prefix = "# nodes=";
      std::string_view trimmed = line;
      while (!trimmed.empty() && (trimmed.back() == '\r' || trimmed.back() == ' '))
        trimmed.remove_suffix(1);
      if (trimmed.substr(0, prefix.size()) != prefix)
        throw ParseError("expected header '# nodes=N'", line_no);
      nodes = parse_index(trimmed.substr(prefix.size()), line_no);
      if (*nodes < 1) throw ParseError("node count must be positive", line_no);
      continue;
    }
    if (tokens.front().front() == '#') continue;
    if (tokens.size() != 3)
      throw ParseError("expected 'i j w', got " + std::to_string(tokens.size()) + " fields", line_no);
    long i = parse_index(tokens[0], line_no);
    long j = parse_index(tokens[1], line_no);
    double w = 0.0;
    try {
      w = parse_double(tokens[2]);
    } catch (const ParseError& e) {
      throw ParseError(e.what(), line_no);
    }
    if (i < 0 || j < 0 || i >= *nodes || j >= *nodes)
      throw ParseError("node index out of range [0, " + std::to_string(*nodes) + ")", line_no);
    if (!(w > 0.0) || !std::isfinite(w))
      throw ParseError("edge weight must be positive and finite", line_no);
    if (j < i) std::swap(i, j);
    auto [it, inserted] = edges.emplace(std::make_pair(i, j), w);
    if (!inserted && it->second != w) {
      throw ParseError("edge (" + std::to_string(i) + "," + std::to_string(j) +
                           ") repeated with conflicting weight",
                       line_no);
    }
    if (end == text.size()) break;
  }
  if (!nodes) throw ParseError("missing header '# nodes=N'", 1);

  Matrix a = Matrix::Zero(*nodes, *nodes);
  for (const auto& [ij, w] : edges) {
    a(ij.first, ij.second) = w;
    a(ij.second, ij.first) = w;
  }
  return AugmentationGraph(SymmetricMatrix(std::move(a)), mode);
}

}  // namespace mpcl
