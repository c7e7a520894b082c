#include "mpcl/losses.hpp"

#include "mpcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <limits>

namespace mpcl {

FeatureMatrix::FeatureMatrix(Matrix raw, Vector weights)
    : raw_(std::move(raw)), weights_(std::move(weights)) {
  if (raw_.rows() == 0 || raw_.cols() == 0) throw ConfigError("FeatureMatrix: empty feature table");
  if (weights_.size() != raw_.rows()) {
    throw ConfigError("FeatureMatrix: " + std::to_string(raw_.rows()) + " rows but " +
                      std::to_string(weights_.size()) + " weights");
  }
  for (Index i = 0; i < weights_.size(); ++i)
    if (!(weights_(i) > 0.0) || !std::isfinite(weights_(i)))
      throw ConfigError("FeatureMatrix: weight " + std::to_string(i) + " is not positive");
  require_finite(raw_, "features");
}

FeatureMatrix FeatureMatrix::bound(Matrix raw, const AugmentationGraph& g) {
  if (raw.rows() != g.size()) {
    throw ConfigError("features have " + std::to_string(raw.rows()) + " rows, graph has " +
                      std::to_string(g.size()) + " nodes");
  }
  return FeatureMatrix(std::move(raw), g.node_weights());
}

FeatureMatrix FeatureMatrix::from_weighted(const Matrix& weighted, const Vector& weights) {
  Matrix raw = weights.array().rsqrt().matrix().asDiagonal() * weighted;
  return FeatureMatrix(std::move(raw), weights);
}

Matrix FeatureMatrix::weighted() const { return weights_.array().sqrt().matrix().asDiagonal() * raw_; }

std::string_view to_string(NormalizationSet s) { return s == NormalizationSet::all ? "all" : "neighborhood"; }

NormalizationSet parse_normalization_set(std::string_view text) {
  if (text == "all") return NormalizationSet::all;
  if (text == "neighborhood") return NormalizationSet::neighborhood;
  throw ConfigError("unknown normalization set '" + std::string(text) + "' (expected all|neighborhood)");
}

namespace {

void require_bound(const FeatureMatrix& f, const AugmentationGraph& g) {
  if (f.rows() != g.size()) {
    throw ConfigError("features have " + std::to_string(f.rows()) + " rows, graph has " +
                      std::to_string(g.size()) + " nodes");
  }
}

void require_temperature(double t) {
  if (!(t > 0.0) || !std::isfinite(t)) throw ConfigError("temperature must be positive");
}

}  // namespace

double alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g) {
  require_bound(f, g);
  const Matrix big_f = FeatureMatrix(f.raw(), g.node_weights()).weighted();
  return (big_f.transpose() * g.laplacian().matrix() * big_f).trace();
}

double uniformity_loss(const FeatureMatrix& f, const AugmentationGraph& g, double temperature) {
  require_bound(f, g);
  require_temperature(temperature);
  const Vector& w = g.node_weights();
  const Matrix gram = f.raw() * f.raw().transpose() / temperature;
  const Vector log_w = w.array().log();
  double total = 0.0;
  for (Index x = 0; x < gram.rows(); ++x) {
    const Eigen::RowVectorXd s = gram.row(x) + log_w.transpose();
    const double peak = s.maxCoeff();
    const double lse = peak + std::log((s.array() - peak).exp().sum());
    total += w(x) * (lse - gram(x, x));
  }
  return total;
}

double infonce_feature_space(const FeatureMatrix& f, const AugmentationGraph& g,
                             double temperature) {
  require_temperature(temperature);
  return alignment_loss(f, g) / temperature + uniformity_loss(f, g, temperature);
}

Matrix attention_coefficients(const FeatureMatrix& f, const AugmentationGraph& g, double beta,
                              NormalizationSet set) {
  require_bound(f, g);
  if (!std::isfinite(beta)) throw ConfigError("beta must be finite");
  const Index n = f.rows();
  const Matrix score = beta * (f.raw() * f.raw().transpose());
  const Matrix& abar = g.normalized_adjacency().matrix();
  Matrix att = Matrix::Zero(n, n);
  for (Index x = 0; x < n; ++x) {
    auto in_set = [&](Index y) { return set == NormalizationSet::all || abar(x, y) > 0.0; };
    double peak = -std::numeric_limits<double>::infinity();
    for (Index y = 0; y < n; ++y)
      if (in_set(y)) peak = std::max(peak, score(x, y));
    if (!std::isfinite(peak)) continue;
    double total = 0.0;
    for (Index y = 0; y < n; ++y) {
      if (!in_set(y)) continue;
      att(x, y) = std::exp(score(x, y) - peak);
      total += att(x, y);
    }
    att.row(x) /= total;
  }
  return att;
}

double attention_alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g, double beta,
                                NormalizationSet set) {
  const Matrix att = attention_coefficients(f, g, beta, set);
  const Matrix joint = g.joint();
  const Matrix& raw = f.raw();
  double total = 0.0;
  for (Index x = 0; x < raw.rows(); ++x)
    for (Index y = 0; y < raw.rows(); ++y)
      if (joint(x, y) != 0.0) total += joint(x, y) * att(x, y) * (raw.row(x) - raw.row(y)).squaredNorm();
  return 0.5 * total;
}

MemoryBank::MemoryBank(int capacity, int num_groups) : capacity_(capacity) {
  if (capacity < 1) throw ConfigError("memory bank capacity must be >= 1");
  if (num_groups < 1) throw ConfigError("memory bank needs at least one group");
  slots_.resize(static_cast<std::size_t>(num_groups));
}

void MemoryBank::push(const Matrix& group_rows, long step) {
  if (group_rows.rows() != num_groups()) {
    throw ConfigError("memory bank push: " + std::to_string(group_rows.rows()) + " rows for " +
                      std::to_string(num_groups()) + " groups");
  }
  for (std::size_t k = 0; k < slots_.size(); ++k) {
    auto& slot = slots_[k];
    if (!slot.empty() && slot.back().step >= step)
      throw ConfigError("memory bank push: step indices must increase");
    slot.push_back({step, group_rows.row(static_cast<Index>(k)).transpose()});
    while (static_cast<int>(slot.size()) > capacity_) slot.pop_front();
  }
}

Vector MemoryBank::aggregate(int group) const {
  if (group < 0 || group >= num_groups())
    throw ConfigError("memory bank: unknown group " + std::to_string(group));
  const auto& slot = slots_[static_cast<std::size_t>(group)];
  if (slot.empty()) throw ConfigError("memory bank: group " + std::to_string(group) + " is empty");
  Vector sum = Vector::Zero(slot.front().row.size());
  for (const auto& e : slot) sum += e.row;
  return sum / static_cast<double>(slot.size());
}

Matrix MemoryBank::aggregate_all() const {
  Matrix out;
  for (int k = 0; k < num_groups(); ++k) {
    const Vector z = aggregate(k);
    if (k == 0) out.resize(num_groups(), z.size());
    out.row(k) = z.transpose();
  }
  return out;
}

int MemoryBank::depth(int group) const {
  if (group < 0 || group >= num_groups())
    throw ConfigError("memory bank: unknown group " + std::to_string(group));
  return static_cast<int>(slots_[static_cast<std::size_t>(group)].size());
}

long MemoryBank::oldest_step(int group) const {
  if (depth(group) == 0) throw ConfigError("memory bank: group " + std::to_string(group) + " is empty");
  return slots_[static_cast<std::size_t>(group)].front().step;
}

bool MemoryBank::empty() const {
  return std::all_of(slots_.begin(), slots_.end(), [](const auto& s) { return s.empty(); });
}

int group_count(const AugmentationGraph& g) {
  const auto& groups = g.groups();
  return *std::max_element(groups.begin(), groups.end()) + 1;
}

Matrix group_means(const FeatureMatrix& f, const AugmentationGraph& g) {
  require_bound(f, g);
  const auto& groups = g.groups();
  const Vector& w = g.node_weights();
  const int k = group_count(g);
  Matrix sums = Matrix::Zero(k, f.dim());
  Vector mass = Vector::Zero(k);
  for (Index x = 0; x < f.rows(); ++x) {
    const int id = groups[static_cast<std::size_t>(x)];
    sums.row(id) += w(x) * f.raw().row(x);
    mass(id) += w(x);
  }
  for (int id = 0; id < k; ++id)
    if (mass(id) > 0.0) sums.row(id) /= mass(id);
  return sums;
}

double multi_stage_alignment_loss(const FeatureMatrix& f, const AugmentationGraph& g,
                                  const MemoryBank& bank) {
  require_bound(f, g);
  const auto& groups = g.groups();
  const Vector& w = g.node_weights();
  double total = 0.0;
  for (Index x = 0; x < f.rows(); ++x) {
    const Vector z = bank.aggregate(groups[static_cast<std::size_t>(x)]);
    if (z.size() != f.dim()) throw ConfigError("memory bank rows do not match feature dimension");
    total -= w(x) * f.raw().row(x).dot(z);
  }
  return total;
}

}  // namespace mpcl
