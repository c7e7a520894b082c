#pragma once

#include "mpcl/error.hpp"
#include "mpcl/losses.hpp"

#include <cstdint>
#include <string>
#include <string_view>
#include <utility>
#include <vector>

namespace mpcl {

enum class Rule {
  alignment,
  uniformity,
  uniformity_sg,
  contrastive,
  attention_alignment,
  multi_stage,
  self_attention,
  dgc,
};

enum class Preprocess { none, center, l2_normalize, center_then_normalize };

// Feature-side softmax weighting. follow_graph resolves to node_weighted on
// degree-mode graphs and to unweighted on uniform-mode graphs.
enum class AffinityWeighting { follow_graph, unweighted, node_weighted };

std::string_view to_string(Rule r);
std::string_view to_string(Preprocess p);
std::string_view to_string(AffinityWeighting a);
Rule parse_rule(std::string_view text);
Preprocess parse_preprocess(std::string_view text);
AffinityWeighting parse_affinity_weighting(std::string_view text);

bool resolve_node_weighted(AffinityWeighting a, const AugmentationGraph& g);

// Feature-side graph built from the raw Gram matrix G = f fᵀ / τ.
struct AffinityGraph {
  SymmetricMatrix a_exp;  // exp(G − log_shift), entries in (0, 1]
  double log_shift;       // max entry of G
  Vector d_exp;           // row sums of a_exp
  Matrix conditional;     // row softmax of G, columns weighted by w when `weighted`
  Matrix a_bar;           // conditional, or W^{1/2} conditional W^{-1/2} when `weighted`
  Matrix a_bar_sym;       // a_bar + a_barᵀ
  bool weighted;
};

AffinityGraph affinity_graph(const FeatureMatrix& f, double temperature, bool node_weighted = false);

// Every step below acts on the weighted rows F and returns features bound to
// the same weights. Graph-based steps use g's node weights.

// F' = [(1−2α)I + 2αĀ]F.
FeatureMatrix alignment_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha);

// Full: F' = [(1+2α)I − αĀ'_sym]F. Stop-gradient: F' = [(1+α)I − αĀ']F.
FeatureMatrix uniformity_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha,
                              double temperature, bool stop_gradient,
                              AffinityWeighting weighting = AffinityWeighting::follow_graph);

// F' = F + α(Ā − Ā')F.
FeatureMatrix contrastive_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha,
                               double temperature,
                               AffinityWeighting weighting = AffinityWeighting::follow_graph);

// F' = Ā'F with the unweighted softmax at τ = 1.
FeatureMatrix self_attention_step(const FeatureMatrix& f);

// F' = [(1−Δt)I + ΔtĀ]F.
FeatureMatrix dgc_step(const FeatureMatrix& f, const AugmentationGraph& g, double delta_t);

// F' = (1−2α)F + 2α(Ā ∘ att)F, att frozen from the incoming features.
FeatureMatrix attention_alignment_step(const FeatureMatrix& f, const AugmentationGraph& g,
                                       double alpha, double beta, NormalizationSet set);

// Pushes the current group means into `bank` under `step`, then moves every
// raw row toward its group target: f'(x) = f(x) + α z_{group(x)}.
FeatureMatrix multi_stage_step(const FeatureMatrix& f, const AugmentationGraph& g, MemoryBank& bank,
                               double alpha, long step);

// Centering subtracts the w-weighted mean raw row; normalization scales each
// raw row to unit norm and throws ConfigError on a zero row.
FeatureMatrix preprocess(const FeatureMatrix& f, Preprocess mode);

struct DynamicsConfig {
  Rule rule = Rule::contrastive;
  double alpha = 0.1;
  int steps = 1000;
  double temperature = 1.0;
  double beta = 1.0;
  int stages = 1;
  double delta_t = 1.0;
  Preprocess preprocess = Preprocess::none;
  AffinityWeighting weighting = AffinityWeighting::follow_graph;
  NormalizationSet normalization = NormalizationSet::all;
  double init_lo = -1.0;
  double init_hi = 1.0;
  int dim = 2;
  std::uint64_t seed = 0;
  int snapshot_every = 10;
  bool keep_snapshots = true;

  void validate() const;
};

// n x dim matrix, entries uniform in [init_lo, init_hi), filled row by row.
Matrix initial_features(Index n, const DynamicsConfig& cfg);

struct TrajectoryRow {
  long step;
  double l_align;
  double l_unif;
  double l_total;              // L_align/τ + L_unif
  std::vector<double> d_m;     // per class, on the weighted rows
  double residual;
};

struct TrajectoryRecord {
  std::vector<int> classes;
  std::vector<TrajectoryRow> rows;
  std::vector<std::pair<long, Matrix>> snapshots;  // raw features
  Matrix final_features;
  std::vector<std::string> warnings;
};

// Raised when an entry leaves the finite range or exceeds 1e12 in magnitude.
class DivergenceError : public Error {
 public:
  DivergenceError(long step, long node, TrajectoryRecord partial);
  long step() const { return step_; }
  long node() const { return node_; }
  const TrajectoryRecord& partial() const { return partial_; }

 private:
  long step_;
  long node_;
  TrajectoryRecord partial_;
};

// Rows are recorded at step 0, every snapshot_every steps, and at the last step.
TrajectoryRecord run(const AugmentationGraph& g, const Matrix& f0, const DynamicsConfig& cfg);

}  // namespace mpcl
