#include "mpcl/analysis.hpp"

#include "mpcl/error.hpp"

#include <Eigen/SVD>

#include <algorithm>
#include <cmath>
#include <limits>
#include <map>

namespace mpcl {

SubspaceProjection top_eigenvector_projection(const AugmentationGraph& g_k, int class_id) {
  const auto eig = sym_eigendecompose(g_k.normalized_adjacency(), {}, "class normalized adjacency");
  SubspaceProjection p;
  p.class_id = class_id;
  p.e1 = eig.eigenvectors.col(0).normalized();
  p.lambda1 = eig.eigenvalues(0);
  if (g_k.size() >= 2) p.algebraic_connectivity = std::clamp(1.0 - eig.eigenvalues(1), 0.0, 2.0);
  return p;
}

double subspace_distance(const Matrix& f_k, const SubspaceProjection& p) {
  if (f_k.rows() != p.e1.size()) {
    throw ConfigError("subspace_distance: " + std::to_string(f_k.rows()) + " rows for a class of " +
                      std::to_string(p.e1.size()));
  }
  const Eigen::RowVectorXd coeff = p.e1.transpose() * f_k;
  return (f_k - p.e1 * coeff).norm();
}

double subspace_distance(const Matrix& f_k, const AugmentationGraph& g_k) {
  return subspace_distance(f_k, top_eigenvector_projection(g_k));
}

double contraction_factor(const AugmentationGraph& g_k, double alpha) {
  return std::abs(1.0 - 2.0 * alpha * algebraic_connectivity(g_k));
}

Matrix model_conditional(const FeatureMatrix& f, const AugmentationGraph& g, double temperature,
                         bool node_weighted) {
  if (f.rows() != g.size()) throw ConfigError("model_conditional: features do not match graph");
  const Matrix gram = f.raw() * f.raw().transpose();
  if (node_weighted) return stable_row_softmax(gram, temperature, g.node_weights());
  return stable_row_softmax(gram, temperature);
}

Matrix model_conditional(const FeatureMatrix& f, const AugmentationGraph& g, double temperature) {
  return model_conditional(f, g, temperature, g.weight_mode() == WeightMode::degree);
}

DataConditional data_conditional(const AugmentationGraph& g) {
  const Index n = g.size();
  DataConditional out{Matrix::Zero(n, n), g.isolated()};
  const Matrix& a = g.adjacency().matrix();
  for (Index x = 0; x < n; ++x) {
    if (out.flagged[static_cast<std::size_t>(x)]) {
      out.p(x, x) = 1.0;
      continue;
    }
    out.p.row(x) = a.row(x) / a.row(x).sum();
  }
  return out;
}

double equilibrium_residual(const FeatureMatrix& f, const AugmentationGraph& g, double temperature,
                            bool node_weighted) {
  const DataConditional pd = data_conditional(g);
  const Matrix pm = model_conditional(f, g, temperature, node_weighted);
  double sum = 0.0;
  for (Index x = 0; x < g.size(); ++x)
    if (!pd.flagged[static_cast<std::size_t>(x)]) sum += (pd.p.row(x) - pm.row(x)).squaredNorm();
  return std::sqrt(sum);
}

double equilibrium_residual(const FeatureMatrix& f, const AugmentationGraph& g, double temperature) {
  return equilibrium_residual(f, g, temperature, g.weight_mode() == WeightMode::degree);
}

double effective_rank(const Matrix& f) {
  if (f.size() == 0) return 0.0;
  const Vector s = Eigen::JacobiSVD<Matrix>(f).singularValues();
  const double total = s.sum();
  if (!(total > 0.0)) return 0.0;
  double entropy = 0.0;
  for (Index i = 0; i < s.size(); ++i) {
    const double p = s(i) / total;
    if (p > 0.0) entropy -= p * std::log(p);
  }
  return std::exp(entropy);
}

namespace {

void require_labels(const Matrix& f, const std::vector<int>& labels) {
  if (static_cast<Index>(labels.size()) != f.rows()) {
    throw ConfigError("labels: " + std::to_string(labels.size()) + " entries for " +
                      std::to_string(f.rows()) + " rows");
  }
}

}  // namespace

double between_within_ratio(const Matrix& f, const std::vector<int>& labels) {
  require_labels(f, labels);
  const Eigen::RowVectorXd mu = f.colwise().mean();
  std::map<int, std::pair<Eigen::RowVectorXd, int>> classes;
  for (Index x = 0; x < f.rows(); ++x) {
    auto [it, fresh] = classes.try_emplace(labels[static_cast<std::size_t>(x)],
                                           Eigen::RowVectorXd::Zero(f.cols()), 0);
    it->second.first += f.row(x);
    ++it->second.second;
  }
  double between = 0.0;
  for (auto& [id, acc] : classes) {
    acc.first /= acc.second;
    between += acc.second * (acc.first - mu).squaredNorm();
  }
  double within = 0.0;
  for (Index x = 0; x < f.rows(); ++x)
    within += (f.row(x) - classes[labels[static_cast<std::size_t>(x)]].first).squaredNorm();
  if (within == 0.0) return between == 0.0 ? 0.0 : std::numeric_limits<double>::infinity();
  return between / within;
}

double max_pairwise_distance(const Matrix& f) {
  double best = 0.0;
  for (Index i = 0; i < f.rows(); ++i)
    for (Index j = i + 1; j < f.rows(); ++j) best = std::max(best, (f.row(i) - f.row(j)).norm());
  return best;
}

double total_pairwise_distance(const Matrix& f) {
  double total = 0.0;
  for (Index i = 0; i < f.rows(); ++i)
    for (Index j = i + 1; j < f.rows(); ++j) total += (f.row(i) - f.row(j)).norm();
  return total;
}

ClusteringReport clustering_report(const Matrix& f, const std::vector<int>& labels,
                                   const Matrix* reference) {
  require_labels(f, labels);
  const Index n = f.rows();
  std::map<int, int> counts;
  for (int l : labels) ++counts[l];

  ClusteringReport r;
  for (const auto& [id, c] : counts)
    if (c < 2) r.flagged_classes.push_back(id);

  double intra = 0.0, inter = 0.0;
  long intra_n = 0, inter_n = 0;
  Matrix dist(n, n);
  for (Index i = 0; i < n; ++i) {
    dist(i, i) = 0.0;
    for (Index j = i + 1; j < n; ++j) {
      const double d = (f.row(i) - f.row(j)).norm();
      dist(i, j) = d;
      dist(j, i) = d;
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += d;
        ++intra_n;
      } else {
        inter += d;
        ++inter_n;
      }
    }
  }
  r.intra_mean = intra_n ? intra / static_cast<double>(intra_n) : 0.0;
  r.inter_mean = inter_n ? inter / static_cast<double>(inter_n) : 0.0;

  long hits = 0, evaluated = 0;
  for (Index i = 0; i < n; ++i) {
    const int li = labels[static_cast<std::size_t>(i)];
    if (counts[li] < 2) continue;
    Index best = -1;
    for (Index j = 0; j < n; ++j)
      if (j != i && (best < 0 || dist(i, j) < dist(i, best))) best = j;
    ++evaluated;
    if (best >= 0 && labels[static_cast<std::size_t>(best)] == li) ++hits;
  }
  r.nn_accuracy = evaluated ? static_cast<double>(hits) / static_cast<double>(evaluated)
                            : std::numeric_limits<double>::quiet_NaN();

  const Matrix centered = f.rowwise() - f.colwise().mean();
  r.effective_rank = effective_rank(centered);
  r.between_within = between_within_ratio(f, labels);
  if (reference) {
    if (reference->rows() != n) throw ConfigError("clustering_report: reference row count differs");
    const double before = total_pairwise_distance(*reference);
    r.distance_ratio = before > 0.0 ? total_pairwise_distance(f) / before
                                    : std::numeric_limits<double>::quiet_NaN();
  }
  return r;
}

}  // namespace mpcl
