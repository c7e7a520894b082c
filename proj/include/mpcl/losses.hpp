#pragma once

#include "mpcl/graph.hpp"

#include <deque>
#include <string_view>
#include <vector>

namespace mpcl {

// Feature table: raw rows f(x) plus the node weights used for the weighted
// view F_x = √w_x f(x). The weighted view is recomputed on every call.
class FeatureMatrix {
 public:
  // Throws NonFiniteError on a non-finite entry, ConfigError when the weight
  // count does not match or a weight is not positive.
  FeatureMatrix(Matrix raw, Vector weights);

  static FeatureMatrix bound(Matrix raw, const AugmentationGraph& g);
  static FeatureMatrix from_weighted(const Matrix& weighted, const Vector& weights);

  Index rows() const { return raw_.rows(); }
  Index dim() const { return raw_.cols(); }
  const Matrix& raw() const { return raw_; }
  const Vector& weights() const { return weights_; }
  Matrix weighted() const;

  FeatureMatrix with_raw(Matrix raw) const { return FeatureMatrix(std::move(raw), weights_); }

 private:
  Matrix raw_;
  Vector weights_;
};

enum class NormalizationSet { all, neighborhood };

std::string_view to_string(NormalizationSet s);
NormalizationSet parse_normalization_set(std::string_view text);

// Tr(FᵀLF).
double alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g);

// Σ_x w_x log Σ_x' w_x' exp(f(x)·f(x')/τ) − Σ_x w_x ‖f(x)‖²/τ, evaluated
// with a per-row log-sum-exp.
double uniformity_loss(const FeatureMatrix& f, const AugmentationGraph& g, double temperature);

// L_align/τ + L_unif(τ). At τ = 1 this is the plain sum.
double infonce_feature_space(const FeatureMatrix& f, const AugmentationGraph& g,
                             double temperature);

// att(x, x') = exp(β f(x)·f(x')) / Σ_{y∈S_x} exp(β f(x)·f(y)), zero outside S_x.
// S_x is every node, or {y : Ā_xy > 0} for the neighborhood set.
Matrix attention_coefficients(const FeatureMatrix& f, const AugmentationGraph& g, double beta,
                              NormalizationSet set);

// ½ Σ P_d(x,x⁺) att(x,x⁺) ‖f(x) − f(x⁺)‖² with att held constant.
double attention_alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g, double beta,
                                NormalizationSet set);

// Ring buffer of the last `capacity` per-group target rows.
class MemoryBank {
 public:
  MemoryBank(int capacity, int num_groups);

  int capacity() const { return capacity_; }
  int num_groups() const { return static_cast<int>(slots_.size()); }

  // One row per group (group_rows.rows() == num_groups); drops the oldest
  // entry of a group beyond capacity.
  void push(const Matrix& group_rows, long step);

  // Mean of the stored rows of `group`; throws ConfigError if none.
  Vector aggregate(int group) const;
  Matrix aggregate_all() const;

  int depth(int group) const;
  long oldest_step(int group) const;
  bool empty() const;

 private:
  struct Entry {
    long step;
    Vector row;
  };
  int capacity_;
  std::vector<std::deque<Entry>> slots_;
};

// Number of groups = max group id + 1.
int group_count(const AugmentationGraph& g);

// w-weighted mean raw row of every group, one row per group id. Groups
// without members get a zero row.
Matrix group_means(const FeatureMatrix& f, const AugmentationGraph& g);

// −Σ_x w_x f(x)·z_{group(x)} with z the bank aggregate.
double multi_stage_alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g,
                                  const MemoryBank& bank);

}  // namespace mpcl
