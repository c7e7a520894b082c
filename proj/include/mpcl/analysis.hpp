#pragma once

#include "mpcl/losses.hpp"

#include <optional>
#include <vector>

namespace mpcl {

// Top eigenpair of a class subgraph's Ā_k. For a disconnected subgraph the
// top eigenvector is not unique; e1 is whatever the eigensolver returns.
struct SubspaceProjection {
  int class_id = -1;
  Vector e1;
  double lambda1 = 0.0;
  double algebraic_connectivity = 0.0;
};

SubspaceProjection top_eigenvector_projection(const AugmentationGraph& g_k, int class_id = -1);

// ‖F_k − e1 e1ᵀ F_k‖_F.
double subspace_distance(const Matrix& f_k, const SubspaceProjection& p);
double subspace_distance(const Matrix& f_k, const AugmentationGraph& g_k);

// |1 − 2α λ| with λ the algebraic connectivity of g_k.
double contraction_factor(const AugmentationGraph& g_k, double alpha);

// P_θ(x'|x) ∝ exp(f(x)·f(x')/τ), times w_x' when node_weighted.
Matrix model_conditional(const FeatureMatrix& f, const AugmentationGraph& g, double temperature,
                         bool node_weighted);
// Weighted exactly when g is in degree mode.
Matrix model_conditional(const FeatureMatrix& f, const AugmentationGraph& g, double temperature);

struct DataConditional {
  Matrix p;                   // rows of isolated nodes hold the self pair
  std::vector<bool> flagged;  // isolated rows, excluded from residuals
};

// P_d(x'|x) = A_xx' / Σ_y A_xy.
DataConditional data_conditional(const AugmentationGraph& g);

double equilibrium_residual(const FeatureMatrix& f, const AugmentationGraph& g, double temperature,
                            bool node_weighted);
double equilibrium_residual(const FeatureMatrix& f, const AugmentationGraph& g, double temperature);

// exp(entropy of σ/Σσ) over the singular values of f; 0 for a zero matrix.
double effective_rank(const Matrix& f);

// tr(S_B) / tr(S_W) with per-sample (unweighted) class scatter. +inf when
// every class is a single point.
double between_within_ratio(const Matrix& f, const std::vector<int>& labels);

double max_pairwise_distance(const Matrix& f);
double total_pairwise_distance(const Matrix& f);

struct ClusteringReport {
  double nn_accuracy = 0.0;       // NaN when no class has two members
  double intra_mean = 0.0;
  double inter_mean = 0.0;
  double effective_rank = 0.0;    // of the centered features
  double between_within = 0.0;
  std::vector<int> flagged_classes;        // singleton classes, left out of nn_accuracy
  std::optional<double> distance_ratio;    // total pairwise distance / reference's
};

// Leave-one-out 1-NN in Euclidean distance; ties go to the lowest index.
ClusteringReport clustering_report(const Matrix& f, const std::vector<int>& labels,
                                   const Matrix* reference = nullptr);

}  // namespace mpcl
