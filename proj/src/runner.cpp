#include "mpcl/analysis.hpp"
#include "mpcl/dynamics.hpp"

#include <cmath>
#include <optional>
#include <random>
#include <sstream>

namespace mpcl {

DivergenceError::DivergenceError(long step, long node, TrajectoryRecord partial)
    : Error("divergence at step " + std::to_string(step) + ", node " + std::to_string(node)),
      step_(step),
      node_(node),
      partial_(std::move(partial)) {}

Matrix initial_features(Index n, const DynamicsConfig& cfg) {
  cfg.validate();
  std::mt19937_64 rng(cfg.seed);
  std::uniform_real_distribution<double> box(cfg.init_lo, cfg.init_hi);
  Matrix f(n, cfg.dim);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < cfg.dim; ++j) f(i, j) = box(rng);
  return f;
}

namespace {

struct ClassView {
  int id;
  std::vector<int> nodes;
  SubspaceProjection projection;
};

bool alignment_family(const DynamicsConfig& cfg) {
  switch (cfg.rule) {
    case Rule::alignment:
    case Rule::attention_alignment:
      return cfg.alpha >= 0.5;
    case Rule::dgc:
      return cfg.delta_t > 1.0;
    default:
      return false;
  }
}

// First node whose row holds a non-finite entry or one above 1e12 in
// magnitude, or -1.
long offending_node(const Matrix& raw) {
  for (Index i = 0; i < raw.rows(); ++i)
    for (Index j = 0; j < raw.cols(); ++j)
      if (!std::isfinite(raw(i, j)) || std::abs(raw(i, j)) > 1e12) return static_cast<long>(i);
  return -1;
}

class Runner {
 public:
  Runner(const AugmentationGraph& g, const DynamicsConfig& cfg) : g_(g), cfg_(cfg) {
    node_weighted_ = resolve_node_weighted(cfg.weighting, g);
    if (g.has_labels()) {
      for (int k : class_ids(g)) {
        ClassView view{k, nodes_of_class(g, k), {}};
        view.projection = top_eigenvector_projection(induced_subgraph(g, view.nodes), k);
        classes_.push_back(std::move(view));
        record_.classes.push_back(k);
      }
    }
    record_.warnings = g.warnings();
    if (alignment_family(cfg)) {
      std::ostringstream os;
      os << "step size " << (cfg.rule == Rule::dgc ? cfg.delta_t : cfg.alpha)
         << " exceeds the contraction range; features may oscillate";
      record_.warnings.push_back(os.str());
    }
    if (cfg.rule == Rule::multi_stage) {
      if (!g.has_groups()) throw ConfigError("rule multi_stage needs group ids on the graph");
      bank_.emplace(cfg.stages, group_count(g));
    }
  }

  TrajectoryRecord execute(const Matrix& f0) {
    std::optional<FeatureMatrix> f;
    f.emplace(FeatureMatrix::bound(f0, g_));
    if (cfg_.preprocess != Preprocess::none) *f = preprocess(*f, cfg_.preprocess);
    record(*f, 0);
    for (long t = 1; t <= cfg_.steps; ++t) {
      try {
        FeatureMatrix next = step(*f, t - 1);
        if (cfg_.preprocess != Preprocess::none) next = preprocess(next, cfg_.preprocess);
        const long bad = offending_node(next.raw());
        if (bad >= 0) fail(t, bad, next.raw());
        f.emplace(std::move(next));
      } catch (const NonFiniteError& e) {
        fail(t, e.row(), f->raw());
      }
      if (t % cfg_.snapshot_every == 0 || t == cfg_.steps) record(*f, t);
    }
    record_.final_features = f->raw();
    return std::move(record_);
  }

 private:
  FeatureMatrix step(const FeatureMatrix& f, long t) {
    switch (cfg_.rule) {
      case Rule::alignment:
        return alignment_step(f, g_, cfg_.alpha);
      case Rule::uniformity:
        return uniformity_step(f, g_, cfg_.alpha, cfg_.temperature, false, cfg_.weighting);
      case Rule::uniformity_sg:
        return uniformity_step(f, g_, cfg_.alpha, cfg_.temperature, true, cfg_.weighting);
      case Rule::contrastive:
        return contrastive_step(f, g_, cfg_.alpha, cfg_.temperature, cfg_.weighting);
      case Rule::attention_alignment:
        return attention_alignment_step(f, g_, cfg_.alpha, cfg_.beta, cfg_.normalization);
      case Rule::multi_stage:
        return multi_stage_step(f, g_, *bank_, cfg_.alpha, t);
      case Rule::self_attention:
        return self_attention_step(f);
      case Rule::dgc:
        return dgc_step(f, g_, cfg_.delta_t);
    }
    throw ConfigError("unhandled rule");
  }

  [[noreturn]] void fail(long t, long node, const Matrix& last) {
    record_.final_features = last;
    record_.warnings.push_back("aborted at step " + std::to_string(t) + ": node " +
                               std::to_string(node) + " diverged");
    throw DivergenceError(t, node, std::move(record_));
  }

  void record(const FeatureMatrix& f, long t) {
    TrajectoryRow row;
    row.step = t;
    row.l_align = alignment_loss(f, g_);
    row.l_unif = uniformity_loss(f, g_, cfg_.temperature);
    row.l_total = row.l_align / cfg_.temperature + row.l_unif;
    const Matrix weighted = f.weighted();
    for (const auto& c : classes_) {
      Matrix rows(static_cast<Index>(c.nodes.size()), weighted.cols());
      for (std::size_t i = 0; i < c.nodes.size(); ++i)
        rows.row(static_cast<Index>(i)) = weighted.row(c.nodes[i]);
      row.d_m.push_back(subspace_distance(rows, c.projection));
    }
    row.residual = equilibrium_residual(f, g_, cfg_.temperature, node_weighted_);
    record_.rows.push_back(std::move(row));
    if (cfg_.keep_snapshots) record_.snapshots.emplace_back(t, f.raw());
  }

  const AugmentationGraph& g_;
  const DynamicsConfig& cfg_;
  bool node_weighted_ = false;
  std::vector<ClassView> classes_;
  std::optional<MemoryBank> bank_;
  TrajectoryRecord record_;
};

}  // namespace

TrajectoryRecord run(const AugmentationGraph& g, const Matrix& f0, const DynamicsConfig& cfg) {
  cfg.validate();
  return Runner(g, cfg).execute(f0);
}

}  // namespace mpcl
