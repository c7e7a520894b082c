#include "mpcl/dynamics.hpp"

#include "mpcl/error.hpp"

#include <array>
#include <cmath>

namespace mpcl {

namespace {

template <typename E, std::size_t N>
std::string_view name_of(E value, const std::array<std::pair<E, std::string_view>, N>& table) {
  for (const auto& [v, name] : table)
    if (v == value) return name;
  return "?";
}

template <typename E, std::size_t N>
E parse_named(std::string_view text, const std::array<std::pair<E, std::string_view>, N>& table,
              const char* what) {
  std::string choices;
  for (const auto& [v, name] : table) {
    if (name == text) return v;
    if (!choices.empty()) choices += '|';
    choices += name;
  }
  throw ConfigError("unknown " + std::string(what) + " '" + std::string(text) + "' (expected " +
                    choices + ")");
}

constexpr std::array<std::pair<Rule, std::string_view>, 8> kRules{{
    {Rule::alignment, "alignment"},
    {Rule::uniformity, "uniformity"},
    {Rule::uniformity_sg, "uniformity_sg"},
    {Rule::contrastive, "contrastive"},
    {Rule::attention_alignment, "attention_alignment"},
    {Rule::multi_stage, "multi_stage"},
    {Rule::self_attention, "self_attention"},
    {Rule::dgc, "dgc"},
}};

constexpr std::array<std::pair<Preprocess, std::string_view>, 4> kPreprocess{{
    {Preprocess::none, "none"},
    {Preprocess::center, "center"},
    {Preprocess::l2_normalize, "l2_normalize"},
    {Preprocess::center_then_normalize, "center_then_normalize"},
}};

constexpr std::array<std::pair<AffinityWeighting, std::string_view>, 3> kWeighting{{
    {AffinityWeighting::follow_graph, "follow_graph"},
    {AffinityWeighting::unweighted, "unweighted"},
    {AffinityWeighting::node_weighted, "node_weighted"},
}};

void require_bound(const FeatureMatrix& f, const AugmentationGraph& g) {
  if (f.rows() != g.size()) {
    throw ConfigError("features have " + std::to_string(f.rows()) + " rows, graph has " +
                      std::to_string(g.size()) + " nodes");
  }
}

// raw'_x = self·raw_x + mix·(M F)_x / √w_x, with F_x = √w_x raw_x.
FeatureMatrix propagate(const Matrix& raw, const Vector& w, double self_coeff, double mix_coeff,
                        const Matrix& m) {
  const Vector sw = w.array().sqrt();
  const Matrix big_f = sw.asDiagonal() * raw;
  const Matrix mixed = m * big_f;
  Matrix out = self_coeff * raw;
  out.noalias() += mix_coeff * (sw.array().inverse().matrix().asDiagonal() * mixed);
  return FeatureMatrix(std::move(out), w);
}

}  // namespace

std::string_view to_string(Rule r) { return name_of(r, kRules); }
std::string_view to_string(Preprocess p) { return name_of(p, kPreprocess); }
std::string_view to_string(AffinityWeighting a) { return name_of(a, kWeighting); }
Rule parse_rule(std::string_view text) { return parse_named(text, kRules, "rule"); }
Preprocess parse_preprocess(std::string_view text) {
  return parse_named(text, kPreprocess, "preprocess mode");
}
AffinityWeighting parse_affinity_weighting(std::string_view text) {
  return parse_named(text, kWeighting, "affinity weighting");
}

bool resolve_node_weighted(AffinityWeighting a, const AugmentationGraph& g) {
  switch (a) {
    case AffinityWeighting::unweighted:
      return false;
    case AffinityWeighting::node_weighted:
      return true;
    case AffinityWeighting::follow_graph:
      break;
  }
  return g.weight_mode() == WeightMode::degree;
}

AffinityGraph affinity_graph(const FeatureMatrix& f, double temperature, bool node_weighted) {
  if (!(temperature > 0.0) || !std::isfinite(temperature))
    throw ConfigError("affinity_graph: temperature must be positive");
  const Matrix product = f.raw() * f.raw().transpose();
  const SymmetricMatrix gram = SymmetricMatrix::from_upper(product);
  const Matrix scaled = gram.matrix() / temperature;
  const double shift = scaled.maxCoeff();
  Matrix a_exp = (scaled.array() - shift).exp().matrix();

  Matrix conditional = node_weighted
                           ? stable_row_softmax(gram.matrix(), temperature, f.weights())
                           : stable_row_softmax(gram.matrix(), temperature);
  Matrix a_bar = conditional;
  if (node_weighted) {
    const Vector sw = f.weights().array().sqrt();
    a_bar = sw.asDiagonal() * conditional * sw.array().inverse().matrix().asDiagonal();
  }
  Matrix a_bar_sym = a_bar + a_bar.transpose();
  Vector d_exp = a_exp.rowwise().sum();
  return AffinityGraph{SymmetricMatrix(std::move(a_exp)), shift, std::move(d_exp),
                       std::move(conditional), std::move(a_bar), std::move(a_bar_sym), node_weighted};
}

FeatureMatrix alignment_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha) {
  require_bound(f, g);
  return propagate(f.raw(), g.node_weights(), 1.0 - 2.0 * alpha, 2.0 * alpha,
                   g.normalized_adjacency().matrix());
}

FeatureMatrix uniformity_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha,
                              double temperature, bool stop_gradient, AffinityWeighting weighting) {
  require_bound(f, g);
  const FeatureMatrix bound(f.raw(), g.node_weights());
  const AffinityGraph aff = affinity_graph(bound, temperature, resolve_node_weighted(weighting, g));
  if (stop_gradient) return propagate(f.raw(), g.node_weights(), 1.0 + alpha, -alpha, aff.a_bar);
  return propagate(f.raw(), g.node_weights(), 1.0 + 2.0 * alpha, -alpha, aff.a_bar_sym);
}

FeatureMatrix contrastive_step(const FeatureMatrix& f, const AugmentationGraph& g, double alpha,
                               double temperature, AffinityWeighting weighting) {
  require_bound(f, g);
  const FeatureMatrix bound(f.raw(), g.node_weights());
  const AffinityGraph aff = affinity_graph(bound, temperature, resolve_node_weighted(weighting, g));
  const Matrix diff = g.normalized_adjacency().matrix() - aff.a_bar;
  return propagate(f.raw(), g.node_weights(), 1.0, alpha, diff);
}

FeatureMatrix self_attention_step(const FeatureMatrix& f) {
  const AffinityGraph aff = affinity_graph(f, 1.0, false);
  return propagate(f.raw(), f.weights(), 0.0, 1.0, aff.a_bar);
}

FeatureMatrix dgc_step(const FeatureMatrix& f, const AugmentationGraph& g, double delta_t) {
  require_bound(f, g);
  return propagate(f.raw(), g.node_weights(), 1.0 - delta_t, delta_t,
                   g.normalized_adjacency().matrix());
}

FeatureMatrix attention_alignment_step(const FeatureMatrix& f, const AugmentationGraph& g,
                                       double alpha, double beta, NormalizationSet set) {
  require_bound(f, g);
  const Matrix att = attention_coefficients(f, g, beta, set);
  const Matrix m = g.normalized_adjacency().matrix().cwiseProduct(att);
  return propagate(f.raw(), g.node_weights(), 1.0 - 2.0 * alpha, 2.0 * alpha, m);
}

FeatureMatrix multi_stage_step(const FeatureMatrix& f, const AugmentationGraph& g, MemoryBank& bank,
                               double alpha, long step) {
  require_bound(f, g);
  if (!g.has_groups()) throw ConfigError("multi_stage_step: graph has no group ids");
  if (group_count(g) != bank.num_groups()) {
    throw ConfigError("multi_stage_step: bank has " + std::to_string(bank.num_groups()) +
                      " groups, graph has " + std::to_string(group_count(g)));
  }
  bank.push(group_means(f, g), step);
  const Matrix targets = bank.aggregate_all();
  const auto& groups = g.groups();
  Matrix out = f.raw();
  for (Index x = 0; x < out.rows(); ++x)
    out.row(x) += alpha * targets.row(groups[static_cast<std::size_t>(x)]);
  return FeatureMatrix(std::move(out), g.node_weights());
}

FeatureMatrix preprocess(const FeatureMatrix& f, Preprocess mode) {
  Matrix raw = f.raw();
  if (mode == Preprocess::center || mode == Preprocess::center_then_normalize) {
    const Eigen::RowVectorXd mu = f.weights().transpose() * raw / f.weights().sum();
    raw.rowwise() -= mu;
  }
  if (mode == Preprocess::l2_normalize || mode == Preprocess::center_then_normalize) {
    for (Index x = 0; x < raw.rows(); ++x) {
      const double norm = raw.row(x).norm();
      if (norm == 0.0)
        throw ConfigError("preprocess: row " + std::to_string(x) + " has zero norm, cannot normalize");
      raw.row(x) /= norm;
    }
  }
  return FeatureMatrix(std::move(raw), f.weights());
}

void DynamicsConfig::validate() const {
  auto positive = [](double v) { return v > 0.0 && std::isfinite(v); };
  if (!positive(alpha)) throw ConfigError("dynamics.alpha must be positive");
  if (steps < 0) throw ConfigError("dynamics.steps must be >= 0");
  if (!positive(temperature)) throw ConfigError("dynamics.temperature must be positive");
  if (!std::isfinite(beta)) throw ConfigError("dynamics.beta must be finite");
  if (stages < 1) throw ConfigError("dynamics.stages must be >= 1");
  if (!std::isfinite(delta_t)) throw ConfigError("dynamics.delta_t must be finite");
  if (!(init_lo < init_hi) || !std::isfinite(init_lo) || !std::isfinite(init_hi))
    throw ConfigError("dynamics.init_lo must be below dynamics.init_hi");
  if (dim < 1) throw ConfigError("dynamics.dim must be >= 1");
  if (snapshot_every < 1) throw ConfigError("outputs.snapshot_every must be >= 1");
}

}  // namespace mpcl
