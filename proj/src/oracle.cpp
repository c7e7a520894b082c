#include "mpcl/oracle.hpp"

#include "mpcl/analysis.hpp"
#include "mpcl/error.hpp"
#include "mpcl/format.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>

namespace mpcl {

std::string CheckReport::line() const {
  std::string out = "CHECK name=" + name + " pass=" + (pass ? "true" : "false") +
                    " disc=" + format_double(discrepancy) + " tol=" + format_double(tolerance);
  if (cosine) out += " cosine=" + format_double(*cosine);
  if (scale_ratio) out += " scale=" + format_double(*scale_ratio);
  if (!context.empty()) out += " context=" + context;
  return out;
}

CheckReport make_report(std::string name, double discrepancy, double tolerance, std::string context) {
  CheckReport r;
  r.name = std::move(name);
  r.discrepancy = discrepancy;
  r.tolerance = tolerance;
  r.pass = discrepancy <= tolerance;
  r.context = std::move(context);
  return r;
}

Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& loss, const Matrix& x,
                            double h) {
  if (!(h > 0.0)) throw ConfigError("finite_diff_gradient: h must be positive");
  Matrix grad(x.rows(), x.cols());
  Matrix probe = x;
  for (Index i = 0; i < x.rows(); ++i) {
    for (Index j = 0; j < x.cols(); ++j) {
      probe(i, j) = x(i, j) + h;
      const double up = loss(probe);
      probe(i, j) = x(i, j) - h;
      const double down = loss(probe);
      probe(i, j) = x(i, j);
      if (!std::isfinite(up) || !std::isfinite(down)) throw NonFiniteError("loss probe", i, j);
      grad(i, j) = (up - down) / (2.0 * h);
    }
  }
  return grad;
}

namespace {

double dot_rows(const Matrix& f, Index x, Index y) {
  double s = 0.0;
  for (Index k = 0; k < f.cols(); ++k) s += f(x, k) * f(y, k);
  return s;
}

// Joint P_d rebuilt entry by entry from the adjacency.
Matrix joint_by_loop(const AugmentationGraph& g) {
  const Index n = g.size();
  const Matrix& a = g.adjacency().matrix();
  Matrix p(n, n);
  double total = 0.0;
  for (Index x = 0; x < n; ++x) {
    double deg = 0.0;
    for (Index y = 0; y < n; ++y) {
      p(x, y) = a(x, y);
      deg += a(x, y);
    }
    if (deg == 0.0) p(x, x) = g.degrees()(x);
    for (Index y = 0; y < n; ++y) total += p(x, y);
  }
  return p / total;
}

}  // namespace

double infonce_sample_space(const FeatureMatrix& f, const AugmentationGraph& g, double temperature) {
  const Matrix p = joint_by_loop(g);
  const Index n = g.size();
  const Matrix& raw = f.raw();
  std::vector<double> marginal(static_cast<std::size_t>(n), 0.0);
  for (Index x = 0; x < n; ++x)
    for (Index y = 0; y < n; ++y) marginal[static_cast<std::size_t>(x)] += p(x, y);

  double total = 0.0;
  for (Index x = 0; x < n; ++x) {
    double partition = 0.0;
    for (Index z = 0; z < n; ++z)
      partition += marginal[static_cast<std::size_t>(z)] * std::exp(dot_rows(raw, x, z) / temperature);
    const double log_partition = std::log(partition);
    for (Index y = 0; y < n; ++y) {
      if (p(x, y) == 0.0) continue;
      total += p(x, y) * (-dot_rows(raw, x, y) / temperature + log_partition);
    }
  }
  return total;
}

double alignment_loss_pairwise(const FeatureMatrix& f, const AugmentationGraph& g) {
  const Matrix p = joint_by_loop(g);
  const Matrix& raw = f.raw();
  double total = 0.0;
  for (Index x = 0; x < raw.rows(); ++x) {
    for (Index y = 0; y < raw.rows(); ++y) {
      double d2 = 0.0;
      for (Index k = 0; k < raw.cols(); ++k) d2 += (raw(x, k) - raw(y, k)) * (raw(x, k) - raw(y, k));
      total += p(x, y) * d2;
    }
  }
  return 0.5 * total;
}

double uniformity_loss_expectation(const FeatureMatrix& f, const AugmentationGraph& g,
                                   double temperature) {
  const Vector& w = g.node_weights();
  const Matrix& raw = f.raw();
  double total = 0.0;
  for (Index x = 0; x < raw.rows(); ++x) {
    double inner = 0.0;
    for (Index y = 0; y < raw.rows(); ++y) inner += w(y) * std::exp(dot_rows(raw, x, y) / temperature);
    total += w(x) * (std::log(inner) - dot_rows(raw, x, x) / temperature);
  }
  return total;
}

Matrix alignment_step_local(const FeatureMatrix& f, const AugmentationGraph& g, double alpha) {
  const Index n = g.size();
  const Matrix big_f = FeatureMatrix(f.raw(), g.node_weights()).weighted();
  const Matrix& abar = g.normalized_adjacency().matrix();
  Matrix out(n, big_f.cols());
  for (Index x = 0; x < n; ++x) {
    for (Index k = 0; k < big_f.cols(); ++k) {
      double neighbor = 0.0;
      for (Index y = 0; y < n; ++y) neighbor += abar(x, y) * big_f(y, k);
      out(x, k) = (1.0 - 2.0 * alpha) * big_f(x, k) + 2.0 * alpha * neighbor;
    }
  }
  return out;
}

namespace {

double attention_weight(const Matrix& raw, const Matrix& abar, Index x, Index y, double beta,
                        NormalizationSet set) {
  if (set == NormalizationSet::neighborhood && !(abar(x, y) > 0.0)) return 0.0;
  double denom = 0.0;
  for (Index z = 0; z < raw.rows(); ++z) {
    if (set == NormalizationSet::neighborhood && !(abar(x, z) > 0.0)) continue;
    denom += std::exp(beta * dot_rows(raw, x, z));
  }
  return std::exp(beta * dot_rows(raw, x, y)) / denom;
}

}  // namespace

Matrix attention_alignment_step_reference(const FeatureMatrix& f, const AugmentationGraph& g,
                                          double alpha, double beta, NormalizationSet set) {
  const Index n = g.size();
  const Matrix big_f = FeatureMatrix(f.raw(), g.node_weights()).weighted();
  const Matrix& abar = g.normalized_adjacency().matrix();
  Matrix out(n, big_f.cols());
  for (Index x = 0; x < n; ++x) {
    std::vector<double> coeff(static_cast<std::size_t>(n));
    for (Index y = 0; y < n; ++y)
      coeff[static_cast<std::size_t>(y)] =
          abar(x, y) == 0.0 ? 0.0 : abar(x, y) * attention_weight(f.raw(), abar, x, y, beta, set);
    for (Index k = 0; k < big_f.cols(); ++k) {
      double neighbor = 0.0;
      for (Index y = 0; y < n; ++y) neighbor += coeff[static_cast<std::size_t>(y)] * big_f(y, k);
      out(x, k) = (1.0 - 2.0 * alpha) * big_f(x, k) + 2.0 * alpha * neighbor;
    }
  }
  return out;
}

double attention_alignment_loss_reference(const FeatureMatrix& f, const AugmentationGraph& g,
                                          double beta, NormalizationSet set) {
  const Matrix p = joint_by_loop(g);
  const Matrix& abar = g.normalized_adjacency().matrix();
  const Matrix& raw = f.raw();
  double total = 0.0;
  for (Index x = 0; x < raw.rows(); ++x) {
    for (Index y = 0; y < raw.rows(); ++y) {
      if (p(x, y) == 0.0) continue;
      double d2 = 0.0;
      for (Index k = 0; k < raw.cols(); ++k) d2 += (raw(x, k) - raw(y, k)) * (raw(x, k) - raw(y, k));
      total += p(x, y) * attention_weight(raw, abar, x, y, beta, set) * d2;
    }
  }
  return 0.5 * total;
}

AugmentationGraph random_graph(int n, double density, std::mt19937_64& rng, WeightMode mode) {
  if (n < 1) throw ConfigError("random_graph: n must be positive");
  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  Matrix a = Matrix::Zero(n, n);
  for (int i = 0; i < n; ++i) {
    for (int j = i + 1; j < n; ++j) {
      if (coin(rng) < density) {
        const double w = weight(rng);
        a(i, j) = w;
        a(j, i) = w;
      }
    }
  }
  return AugmentationGraph(SymmetricMatrix(std::move(a)), mode);
}

AugmentationGraph random_label_preserving_graph(int n, int classes, double density,
                                                std::mt19937_64& rng) {
  if (classes < 1 || n < classes) throw ConfigError("random_label_preserving_graph: bad sizes");
  std::vector<int> labels(static_cast<std::size_t>(n));
  for (int i = 0; i < n; ++i) labels[static_cast<std::size_t>(i)] = i % classes;
  std::shuffle(labels.begin(), labels.end(), rng);

  std::uniform_real_distribution<double> coin(0.0, 1.0);
  std::uniform_real_distribution<double> weight(0.5, 1.5);
  Matrix a = Matrix::Zero(n, n);
  for (int k = 0; k < classes; ++k) {
    std::vector<int> members;
    for (int i = 0; i < n; ++i)
      if (labels[static_cast<std::size_t>(i)] == k) members.push_back(i);
    std::shuffle(members.begin(), members.end(), rng);
    for (std::size_t i = 1; i < members.size(); ++i) {
      const double w = weight(rng);
      a(members[i - 1], members[i]) = w;
      a(members[i], members[i - 1]) = w;
    }
    for (std::size_t i = 0; i < members.size(); ++i) {
      for (std::size_t j = i + 1; j < members.size(); ++j) {
        if (a(members[i], members[j]) == 0.0 && coin(rng) < density) {
          const double w = weight(rng);
          a(members[i], members[j]) = w;
          a(members[j], members[i]) = w;
        }
      }
    }
  }
  return AugmentationGraph(SymmetricMatrix(std::move(a)), WeightMode::degree, std::move(labels));
}

Matrix random_features(Index n, Index m, std::mt19937_64& rng, double scale) {
  std::normal_distribution<double> normal(0.0, scale);
  Matrix f(n, m);
  for (Index i = 0; i < n; ++i)
    for (Index j = 0; j < m; ++j) f(i, j) = normal(rng);
  return f;
}

std::string_view to_string(GradientRule r) {
  switch (r) {
    case GradientRule::alignment:
      return "alignment";
    case GradientRule::uniformity:
      return "uniformity";
    case GradientRule::contrastive:
      return "contrastive";
  }
  return "?";
}

CheckReport verify_update_gradient(GradientRule rule, const AugmentationGraph& g,
                                   const FeatureMatrix& f, double tol, double h, double temperature,
                                   const AlignmentStepFn& step) {
  const Vector& w = g.node_weights();
  const FeatureMatrix start(f.raw(), w);
  const Matrix big_f = start.weighted();
  constexpr double alpha = 0.1;

  // For contrastive the gradient is assembled from its two parts so that a
  // fixed point can be judged against the size of what cancels.
  std::function<double(const Matrix&)> loss;
  std::function<double(const Matrix&)> part;
  FeatureMatrix moved = start;
  switch (rule) {
    case GradientRule::alignment:
      loss = [&](const Matrix& x) { return alignment_loss(FeatureMatrix::from_weighted(x, w), g); };
      moved = step ? step(start, g, alpha) : alignment_step(start, g, alpha);
      break;
    case GradientRule::uniformity:
      loss = [&](const Matrix& x) {
        return uniformity_loss(FeatureMatrix::from_weighted(x, w), g, temperature);
      };
      moved = uniformity_step(start, g, alpha, temperature, false);
      break;
    case GradientRule::contrastive:
      loss = [&](const Matrix& x) {
        return alignment_loss(FeatureMatrix::from_weighted(x, w), g) / temperature;
      };
      part = [&](const Matrix& x) {
        return uniformity_loss(FeatureMatrix::from_weighted(x, w), g, temperature);
      };
      moved = contrastive_step(start, g, alpha, temperature);
      break;
  }
  Matrix grad = finite_diff_gradient(loss, big_f, h);
  double reference = std::max(1.0, big_f.norm());
  if (part) {
    const Matrix other = finite_diff_gradient(part, big_f, h);
    reference = grad.norm() + other.norm();
    grad += other;
  }
  const Matrix disp = (moved.weighted() - big_f) / alpha;

  const std::string context = "n=" + std::to_string(g.size()) + " m=" + std::to_string(f.dim()) +
                              " h=" + format_double(h) + " tau=" + format_double(temperature);
  const double gn = grad.norm();
  const double dn = disp.norm();
  CheckReport r;
  if (dn < 1e-9 && gn <= 1e-4 * reference) {
    r = make_report("gradient_" + std::string(to_string(rule)), 0.0, tol, context);
    r.scale_ratio = 0.0;
    return r;
  }
  const double cosine = (gn > 0.0 && dn > 0.0) ? (disp.array() * grad.array()).sum() / (gn * dn) : 0.0;
  r = make_report("gradient_" + std::string(to_string(rule)), 1.0 + cosine, tol, context);
  r.cosine = cosine;
  r.scale_ratio = gn > 0.0 ? dn / gn : std::numeric_limits<double>::infinity();
  return r;
}

CheckReport verify_contraction(const AugmentationGraph& g, double alpha, int steps,
                               std::uint64_t seed, const AlignmentStepFn& step) {
  if (!g.has_labels()) throw ConfigError("verify_contraction: graph has no labels");
  const auto& labels = g.labels();
  for (Index i = 0; i < g.size(); ++i) {
    for (Index j = i + 1; j < g.size(); ++j) {
      if (g.adjacency()(i, j) > 0.0 &&
          labels[static_cast<std::size_t>(i)] != labels[static_cast<std::size_t>(j)]) {
        throw ConfigError("verify_contraction: edge (" + std::to_string(i) + "," + std::to_string(j) +
                          ") crosses classes; augmentations must be label-preserving");
      }
    }
  }

  struct ClassState {
    std::vector<int> nodes;
    SubspaceProjection projection;
    double factor;
  };
  std::vector<ClassState> classes;
  for (int k : class_ids(g)) {
    ClassState c{nodes_of_class(g, k), {}, 1.0};
    const AugmentationGraph sub = induced_subgraph(g, c.nodes);
    c.projection = top_eigenvector_projection(sub, k);
    c.factor = c.nodes.size() >= 2 ? std::abs(1.0 - 2.0 * alpha * algebraic_connectivity(sub)) : 1.0;
    classes.push_back(std::move(c));
  }

  std::mt19937_64 rng(seed);
  FeatureMatrix f = FeatureMatrix::bound(random_features(g.size(), 3, rng), g);
  auto distances = [&](const FeatureMatrix& cur) {
    const Matrix big_f = cur.weighted();
    std::vector<double> out;
    for (const auto& c : classes) {
      Matrix rows(static_cast<Index>(c.nodes.size()), big_f.cols());
      for (std::size_t i = 0; i < c.nodes.size(); ++i) rows.row(static_cast<Index>(i)) = big_f.row(c.nodes[i]);
      out.push_back(subspace_distance(rows, c.projection));
    }
    return out;
  };

  double worst = 0.0;
  std::vector<double> prev = distances(f);
  for (int t = 0; t < steps; ++t) {
    f = step ? step(f, g, alpha) : alignment_step(f, g, alpha);
    const std::vector<double> cur = distances(f);
    for (std::size_t k = 0; k < classes.size(); ++k)
      worst = std::max(worst, cur[k] - classes[k].factor * prev[k]);
    prev = cur;
  }
  return make_report("contraction", worst, 1e-9,
                     "n=" + std::to_string(g.size()) + " alpha=" + format_double(alpha) +
                         " steps=" + std::to_string(steps) + " seed=" + std::to_string(seed));
}

CheckReport verify_prop1(const AugmentationGraph& g, const FeatureMatrix& f, double temperature) {
  const double sample = infonce_sample_space(f, g, temperature);
  const double feature = infonce_feature_space(f, g, temperature);
  return make_report("prop1", std::abs(sample - feature), 1e-9,
                     "n=" + std::to_string(g.size()) + " m=" + std::to_string(f.dim()) +
                         " tau=" + format_double(temperature));
}

EquilibriumInstance two_node_equilibrium() {
  Matrix a(2, 2);
  a << 2.0, 1.0, 1.0, 2.0;
  const double v = std::sqrt(std::log(2.0) / 2.0);
  Matrix f(2, 2);
  f << 0.5, v, 0.5, -v;
  return {AugmentationGraph(SymmetricMatrix(std::move(a)), WeightMode::degree), std::move(f), 1.0};
}

EquilibriumInstance fitted_equilibrium(int n, std::uint64_t seed) {
  if (n < 2) throw ConfigError("fitted_equilibrium: n must be >= 2");
  std::mt19937_64 rng(seed);
  // Redraw until the base Gram is well conditioned; near-singular draws give
  // huge features after the shift below.
  Matrix g0;
  for (int attempt = 0;; ++attempt) {
    const Matrix f0 = random_features(n, n, rng, 0.3) + Matrix::Identity(n, n);
    g0 = SymmetricMatrix::from_upper(f0 * f0.transpose()).matrix();
    const Vector ev = sym_eigendecompose(SymmetricMatrix(g0), {}, "base gram").eigenvalues;
    if (ev(n - 1) >= 0.05 * ev(0)) break;
    if (attempt == 1000) throw ConvergenceError("fitted_equilibrium: no well-conditioned draw");
  }
  const Matrix kernel = g0.array().exp().matrix();
  const AugmentationGraph graph(SymmetricMatrix(kernel), WeightMode::degree);

  // exp(G) ∝ K / (d dᵀ) with a = −log d up to a constant. Centering a keeps
  // G small; c > aᵀG0⁻¹a makes G0 − aaᵀ/c, and hence G, positive definite.
  Vector a = -graph.degrees().array().log().matrix();
  a.array() -= a.mean();
  const Vector ones = Vector::Ones(n);
  const double c = a.dot(g0.ldlt().solve(a)) + 1.0;
  const Matrix gram = g0 + a * ones.transpose() + ones * a.transpose() + c * ones * ones.transpose();
  const auto eig = sym_eigendecompose(SymmetricMatrix::from_upper(gram), {}, "fitted gram");
  if (eig.eigenvalues.minCoeff() < -1e-9)
    throw ConvergenceError("fitted_equilibrium: shifted Gram is not positive semidefinite");
  const Vector root = eig.eigenvalues.cwiseMax(0.0).cwiseSqrt();
  Matrix features = eig.eigenvectors * root.asDiagonal();
  return {graph, std::move(features), 1.0};
}

std::uint64_t check_stream_seed(std::uint64_t seed, std::string_view name) {
  std::uint64_t hash = 1469598103934665603ULL;
  for (unsigned char ch : name) {
    hash ^= ch;
    hash *= 1099511628211ULL;
  }
  return seed ^ hash;
}

namespace {

double max_abs_diff(const Matrix& a, const Matrix& b) { return (a - b).cwiseAbs().maxCoeff(); }

}  // namespace

std::vector<CheckReport> run_default_suite(std::uint64_t seed, SuiteSizes sizes, const SuiteHooks& hooks) {
  if (sizes.nodes < 4 || sizes.dim < 1) throw ConfigError("check suite: need nodes >= 4 and dim >= 1");
  const AlignmentStepFn align = hooks.alignment
                                    ? hooks.alignment
                                    : AlignmentStepFn([](const FeatureMatrix& f, const AugmentationGraph& g,
                                                         double a) { return alignment_step(f, g, a); });
  const SelfAttentionStepFn attend = hooks.self_attention ? hooks.self_attention
                                                          : SelfAttentionStepFn(self_attention_step);
  const std::string sizes_ctx = "seed=" + std::to_string(seed) + " n=" + std::to_string(sizes.nodes) +
                                " m=" + std::to_string(sizes.dim);
  std::vector<CheckReport> out;

  auto instance = [&](std::string_view name) {
    std::mt19937_64 rng(check_stream_seed(seed, name));
    AugmentationGraph g = random_graph(sizes.nodes, 0.4, rng);
    Matrix f = random_features(sizes.nodes, sizes.dim, rng, 0.7);
    return std::make_pair(std::move(g), std::move(f));
  };

  for (double tau : {1.0, 0.5}) {
    const std::string name = tau == 1.0 ? "prop1" : "prop1_tau";
    auto [g, f] = instance(name);
    CheckReport r = verify_prop1(g, FeatureMatrix::bound(f, g), tau);
    r.name = name;
    r.context = sizes_ctx + " tau=" + format_double(tau);
    out.push_back(r);
  }
  {
    auto [g, f] = instance("alignment_local");
    const FeatureMatrix fm = FeatureMatrix::bound(f, g);
    const double disc = max_abs_diff(align(fm, g, 0.1).weighted(), alignment_step_local(fm, g, 0.1));
    out.push_back(make_report("alignment_local", disc, 1e-12, sizes_ctx));
  }
  {
    auto [g, f] = instance("gradient_alignment");
    CheckReport r = verify_update_gradient(GradientRule::alignment, g, FeatureMatrix::bound(f, g),
                                           1e-6, 1e-5, 1.0, align);
    r.context = sizes_ctx;
    out.push_back(r);
  }
  {
    auto [g, f] = instance("gradient_uniformity");
    CheckReport r = verify_update_gradient(GradientRule::uniformity, g, FeatureMatrix::bound(f, g));
    r.context = sizes_ctx;
    out.push_back(r);
  }
  {
    const EquilibriumInstance eq = fitted_equilibrium(8, check_stream_seed(seed, "gradient_contrastive"));
    CheckReport r = verify_update_gradient(GradientRule::contrastive, eq.graph,
                                           FeatureMatrix::bound(eq.features, eq.graph));
    r.context = "seed=" + std::to_string(seed) + " n=8 fitted equilibrium";
    out.push_back(r);
  }
  {
    std::mt19937_64 rng(check_stream_seed(seed, "contraction"));
    const AugmentationGraph g = random_label_preserving_graph(sizes.nodes, 3, 0.3, rng);
    out.push_back(verify_contraction(g, 0.1, 50, check_stream_seed(seed, "contraction_init"), align));
  }
  {
    auto [g, f] = instance("self_attention_equivalence");
    const FeatureMatrix fm = FeatureMatrix::bound(f, g);
    const Matrix lhs = attend(fm).raw();
    const Matrix rhs = uniformity_step(fm, g, -1.0, 1.0, true, AffinityWeighting::unweighted).raw();
    out.push_back(make_report("self_attention_equivalence", max_abs_diff(lhs, rhs), 0.0, sizes_ctx));
  }
  {
    auto [g, f] = instance("dgc_equivalence");
    const FeatureMatrix fm = FeatureMatrix::bound(f, g);
    const double alpha = 0.1;
    const double disc = max_abs_diff(align(fm, g, alpha).raw(), dgc_step(fm, g, 2.0 * alpha).raw());
    out.push_back(make_report("dgc_equivalence", disc, 0.0, sizes_ctx));
  }
  {
    const EquilibriumInstance two = two_node_equilibrium();
    const EquilibriumInstance fit = fitted_equilibrium(8, check_stream_seed(seed, "equilibrium"));
    for (const auto* eq : {&two, &fit}) {
      const std::string tag = eq == &two ? "two_node" : "fitted_n8";
      const FeatureMatrix fm = FeatureMatrix::bound(eq->features, eq->graph);
      out.push_back(make_report("equilibrium_residual_" + tag,
                                equilibrium_residual(fm, eq->graph, eq->temperature), 1e-8,
                                "seed=" + std::to_string(seed)));
      const double disp =
          (contrastive_step(fm, eq->graph, 0.1, eq->temperature).weighted() - fm.weighted()).norm();
      out.push_back(make_report("equilibrium_stationary_" + tag, disp, 1e-10,
                                "seed=" + std::to_string(seed) + " alpha=0.1"));
    }
  }
  return out;
}

}  // namespace mpcl
