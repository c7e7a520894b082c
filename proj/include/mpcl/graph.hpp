#pragma once

#include "mpcl/numerics.hpp"

#include <array>
#include <cstdint>
#include <optional>
#include <string>
#include <string_view>
#include <vector>

namespace mpcl {

// How node weights w (the marginal over views) are derived from A.
enum class WeightMode {
  degree,   // w_x ∝ Σ_x' A_xx'
  uniform,  // w_x = 1/n
};

std::string_view to_string(WeightMode mode);
WeightMode parse_weight_mode(std::string_view text);

// The augmentation graph: a symmetric nonnegative adjacency over n views plus
// the derived degree, weight, normalized adjacency and Laplacian.
//
// A node without any edge is kept and flagged as isolated. It is treated as
// its own positive pair: a virtual self-loop with the minimum positive degree
// enters the effective degrees, so D^{-1/2} is finite, Ā_xx = 1 and the
// Laplacian row is zero. The stored adjacency is never modified.
class AugmentationGraph {
 public:
  explicit AugmentationGraph(SymmetricMatrix adjacency, WeightMode mode = WeightMode::degree,
                             std::optional<std::vector<int>> labels = std::nullopt,
                             std::optional<std::vector<int>> groups = std::nullopt);

  Index size() const { return adjacency_.size(); }
  const SymmetricMatrix& adjacency() const { return adjacency_; }
  WeightMode weight_mode() const { return mode_; }

  // Degrees including the virtual self-loop of isolated nodes.
  const Vector& degrees() const { return degrees_; }
  // Positive, sums to 1.
  const Vector& node_weights() const { return weights_; }
  // Ā = D^{-1/2} A D^{-1/2} on effective degrees.
  const SymmetricMatrix& normalized_adjacency() const { return abar_; }
  // L = I − Ā.
  SymmetricMatrix laplacian() const;
  // P_d(x, x') = A_xx' / Σ A on the effective adjacency.
  Matrix joint() const;

  bool has_labels() const { return labels_.has_value(); }
  const std::vector<int>& labels() const;
  bool has_groups() const { return groups_.has_value(); }
  const std::vector<int>& groups() const;

  const std::vector<bool>& isolated() const { return isolated_; }
  Index isolated_count() const;
  const std::vector<std::string>& warnings() const { return warnings_; }

  AugmentationGraph with_weight_mode(WeightMode mode) const;
  AugmentationGraph with_labels(std::vector<int> labels) const;
  AugmentationGraph with_groups(std::vector<int> groups) const;

 private:
  SymmetricMatrix adjacency_;
  WeightMode mode_;
  std::optional<std::vector<int>> labels_;
  std::optional<std::vector<int>> groups_;
  std::vector<bool> isolated_;
  std::vector<std::string> warnings_;
  Vector degrees_;
  Vector weights_;
  SymmetricMatrix abar_;
};

// Two-dimensional isotropic Gaussian mixture. `variance` is per coordinate.
struct GaussianMixtureConfig {
  std::vector<std::array<double, 2>> means{{-1.0, 0.0}, {1.0, 0.0}};
  double variance = 0.7;
  int points_per_class = 100;
  std::uint64_t seed = 0;

  void validate() const;
};

struct PointCloud {
  Matrix points;            // n x 2
  std::vector<int> labels;  // class i for samples drawn around means[i]
};

// Class-major order: the first points_per_class rows belong to class 0.
PointCloud build_synthetic_gaussians(const GaussianMixtureConfig& cfg);

// A_ij = 1 iff i != j and ‖x_i − x_j‖ ≤ epsilon; A_ii = 1 when self_loops.
AugmentationGraph build_threshold_graph(const Matrix& points, double epsilon, bool self_loops,
                                        WeightMode mode = WeightMode::degree);

std::vector<int> nodes_of_class(const AugmentationGraph& g, int k);

// Induced subgraph on `nodes`, weights recomputed under the same mode.
// Labels and groups are carried over when present.
AugmentationGraph induced_subgraph(const AugmentationGraph& g, const std::vector<int>& nodes);

// Induced subgraph on the nodes labelled k. Throws ConfigError without labels
// or when class k is empty.
AugmentationGraph class_subgraph(const AugmentationGraph& g, int k);

// Distinct label values in ascending order.
std::vector<int> class_ids(const AugmentationGraph& g);

// Second smallest eigenvalue of L, clamped to [0, 2].
double algebraic_connectivity(const AugmentationGraph& g);

// Components of the edge set (union-find), each sorted, ordered by smallest node.
std::vector<std::vector<int>> connected_components(const AugmentationGraph& g);

// Text edge list: "# nodes=N" then one "i j w" line per undirected edge
// (i < j, w > 0). Self-loops are written as "i i w".
std::string save_edge_list(const AugmentationGraph& g);
AugmentationGraph load_edge_list(std::string_view text, WeightMode mode = WeightMode::degree);

}  // namespace mpcl
