#pragma once

#include "mpcl/dynamics.hpp"

#include <cstdint>
#include <functional>
#include <optional>
#include <random>
#include <string>
#include <string_view>
#include <vector>

namespace mpcl {

struct CheckReport {
  std::string name;
  bool pass = false;
  double discrepancy = 0.0;
  double tolerance = 0.0;
  std::string context;
  std::optional<double> cosine;
  std::optional<double> scale_ratio;

  // CHECK name=<..> pass=<..> disc=<..> tol=<..> [cosine=<..>] [scale=<..>] context=<..>
  std::string line() const;
};

CheckReport make_report(std::string name, double discrepancy, double tolerance, std::string context);

// Central differences, one entry at a time. Throws NonFiniteError naming the
// entry when a probe is not finite.
Matrix finite_diff_gradient(const std::function<double(const Matrix&)>& loss, const Matrix& x,
                            double h = 1e-5);

// Brute-force references. Each loops over nodes directly and shares no code
// with the matrix forms.

// E_{(x,x⁺)~P_d}[−f·f⁺/τ + log E_{x'~P_d} exp(f·f'/τ)] with the marginal taken
// from the joint.
double infonce_sample_space(const FeatureMatrix& f, const AugmentationGraph& g, double temperature);
// ½ Σ P_d(x,x⁺) ‖f(x) − f(x⁺)‖².
double alignment_loss_pairwise(const FeatureMatrix& f, const AugmentationGraph& g);
double uniformity_loss_expectation(const FeatureMatrix& f, const AugmentationGraph& g,
                                   double temperature);
// Weighted rows after one local alignment update per node.
Matrix alignment_step_local(const FeatureMatrix& f, const AugmentationGraph& g, double alpha);
Matrix attention_alignment_step_reference(const FeatureMatrix& f, const AugmentationGraph& g,
                                          double alpha, double beta, NormalizationSet set);
double attention_alignment_loss_reference(const FeatureMatrix& f, const AugmentationGraph& g,
                                          double beta, NormalizationSet set);

// Random test instances.
AugmentationGraph random_graph(int n, double density, std::mt19937_64& rng,
                               WeightMode mode = WeightMode::degree);
// Edges only inside classes; each class carries a random spanning path, so
// every class subgraph is connected.
AugmentationGraph random_label_preserving_graph(int n, int classes, double density,
                                                std::mt19937_64& rng);
Matrix random_features(Index n, Index m, std::mt19937_64& rng, double scale = 1.0);

enum class GradientRule { alignment, uniformity, contrastive };

std::string_view to_string(GradientRule r);

using AlignmentStepFn = std::function<FeatureMatrix(const FeatureMatrix&, const AugmentationGraph&, double)>;
using SelfAttentionStepFn = std::function<FeatureMatrix(const FeatureMatrix&)>;

// Displacement (F'−F)/α of one step against the FD gradient of the matching
// loss, both in the weighted frame. discrepancy = 1 + cosine, so the check
// passes when the displacement is anti-parallel within `tol`. A displacement
// below 1e-9 whose FD gradient is below 1e-4 relative (to max(1, ‖F‖), or for
// contrastive to the summed norms of the alignment and uniformity parts)
// counts as a fixed point and passes with zero discrepancy.
CheckReport verify_update_gradient(GradientRule rule, const AugmentationGraph& g,
                                   const FeatureMatrix& f, double tol = 1e-3, double h = 1e-5,
                                   double temperature = 1.0, const AlignmentStepFn& step = {});

// Runs `steps` alignment updates from random features and checks
// d_M(t+1) ≤ |1−2αλ_k| d_M(t) + 1e-9 for every class. Throws ConfigError when
// the graph is unlabelled or has a cross-class edge.
CheckReport verify_contraction(const AugmentationGraph& g, double alpha, int steps,
                               std::uint64_t seed, const AlignmentStepFn& step = {});

CheckReport verify_prop1(const AugmentationGraph& g, const FeatureMatrix& f, double temperature = 1.0);

struct EquilibriumInstance {
  AugmentationGraph graph;
  Matrix features;
  double temperature;
};

// A = [[2,1],[1,2]]; f = (½, ±v) with 2v² = log 2, so the softmax rows are
// (2/3, 1/3) like the data conditional.
EquilibriumInstance two_node_equilibrium();

// Features whose Gram G satisfies exp(G) ∝ D⁻¹AD⁻¹ for A = exp(f0 f0ᵀ),
// obtained by shifting log-kernel rows and columns and factoring G.
EquilibriumInstance fitted_equilibrium(int n = 8, std::uint64_t seed = 0);

struct SuiteSizes {
  int nodes = 16;
  int dim = 4;
};

// Injection points for the negative control; empty means the library step.
struct SuiteHooks {
  AlignmentStepFn alignment;
  SelfAttentionStepFn self_attention;
};

// Each check seeds its own stream from seed ^ FNV-1a(name).
std::vector<CheckReport> run_default_suite(std::uint64_t seed = 0, SuiteSizes sizes = {},
                                           const SuiteHooks& hooks = {});

std::uint64_t check_stream_seed(std::uint64_t seed, std::string_view name);

}  // namespace mpcl
