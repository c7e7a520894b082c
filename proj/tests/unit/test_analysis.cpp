#include "mpcl/analysis.hpp"
#include "mpcl/oracle.hpp"

#include <doctest.h>

#include <cmath>
#include <limits>
#include <numeric>
#include <random>

using namespace mpcl;

namespace {

AugmentationGraph swap_graph() {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  return AugmentationGraph(SymmetricMatrix(a));
}

}  // namespace

TEST_CASE("subspace distance") {
  std::mt19937_64 rng(1);
  const AugmentationGraph g = random_label_preserving_graph(9, 1, 0.4, rng);
  const SubspaceProjection p = top_eigenvector_projection(g, 0);
  CHECK(p.lambda1 == doctest::Approx(1.0).epsilon(1e-10));
  CHECK(std::abs(p.e1.norm() - 1.0) < 1e-12);
  // e1 ∝ √d for a connected graph.
  const Vector sqrt_d = g.degrees().cwiseSqrt().normalized();
  CHECK((p.e1 - sqrt_d).cwiseAbs().maxCoeff() < 1e-10);

  Eigen::RowVectorXd y(3);
  y << 1.5, -2.0, 0.3;
  CHECK(subspace_distance(p.e1 * y, p) < 1e-12);

  Matrix orth = random_features(9, 3, rng);
  orth -= p.e1 * (p.e1.transpose() * orth);
  CHECK(std::abs(subspace_distance(orth, g) - orth.norm()) < 1e-12);

  for (int trial = 0; trial < 5; ++trial) {
    const Matrix f = random_features(9, 3, rng);
    const Matrix coef = p.e1.colPivHouseholderQr().solve(f);
    CHECK(std::abs(subspace_distance(f, p) - (f - p.e1 * coef).norm()) < 1e-10);
  }
}

TEST_CASE("contraction factor") {
  Matrix a(2, 2);
  a << 0, 1, 1, 0;
  const AugmentationGraph k2{SymmetricMatrix(a)};
  CHECK(std::abs(contraction_factor(k2, 0.25)) < 1e-12);
  CHECK(contraction_factor(k2, 0.0) == 1.0);
  const AugmentationGraph apart{SymmetricMatrix(Matrix::Zero(3, 3))};
  CHECK(contraction_factor(apart, 0.1) == doctest::Approx(1.0));
}

TEST_CASE("model conditional") {
  std::mt19937_64 rng(2);
  const AugmentationGraph g = random_graph(8, 0.5, rng, WeightMode::uniform);
  const Matrix zero = model_conditional(FeatureMatrix::bound(Matrix::Zero(8, 2), g), g, 1.0);
  CHECK((zero.array() - 1.0 / 8).abs().maxCoeff() < 1e-15);

  const FeatureMatrix f = FeatureMatrix::bound(random_features(8, 2, rng), g);
  const Matrix p = model_conditional(f, g, 1.0);
  const Matrix sharp = model_conditional(f, g, 0.5);
  for (Index i = 0; i < 8; ++i) {
    CHECK(std::abs(p.row(i).sum() - 1.0) < 1e-12);
    Index a1 = 0, a2 = 0;
    p.row(i).maxCoeff(&a1);
    sharp.row(i).maxCoeff(&a2);
    CHECK(a1 == a2);
  }
  const AugmentationGraph d = random_graph(8, 0.5, rng);
  const FeatureMatrix fd = FeatureMatrix::bound(f.raw(), d);
  const Matrix weighted = model_conditional(fd, d, 1.0);
  CHECK((weighted - model_conditional(fd, d, 1.0, true)).cwiseAbs().maxCoeff() == 0.0);
  for (Index i = 0; i < 8; ++i) {
    double z = 0;
    for (Index j = 0; j < 8; ++j) z += d.node_weights()(j) * std::exp(f.raw().row(i).dot(f.raw().row(j)));
    for (Index j = 0; j < 8; ++j)
      CHECK(std::abs(weighted(i, j) - d.node_weights()(j) * std::exp(f.raw().row(i).dot(f.raw().row(j))) / z) <
            1e-14);
  }
}

TEST_CASE("data conditional") {
  Matrix swap(2, 2);
  swap << 0, 1, 1, 0;
  CHECK(data_conditional(swap_graph()).p == swap);

  const Matrix complete = Matrix::Ones(5, 5) - Matrix::Identity(5, 5);
  const Matrix pc = data_conditional(AugmentationGraph(SymmetricMatrix(complete))).p;
  for (Index i = 0; i < 5; ++i)
    for (Index j = 0; j < 5; ++j) CHECK(pc(i, j) == doctest::Approx(i == j ? 0.0 : 0.25));

  std::mt19937_64 rng(3);
  const AugmentationGraph g = random_graph(12, 0.15, rng);
  const DataConditional dc = data_conditional(g);
  for (Index i = 0; i < 12; ++i) {
    CHECK(std::abs(dc.p.row(i).sum() - 1.0) < 1e-12);
    CHECK(dc.flagged[static_cast<std::size_t>(i)] == g.isolated()[static_cast<std::size_t>(i)]);
  }
}

TEST_CASE("equilibrium residual") {
  const EquilibriumInstance two = two_node_equilibrium();
  CHECK(equilibrium_residual(FeatureMatrix::bound(two.features, two.graph), two.graph, 1.0) < 1e-8);
  const EquilibriumInstance fit = fitted_equilibrium(8, 1);
  CHECK(equilibrium_residual(FeatureMatrix::bound(fit.features, fit.graph), fit.graph, 1.0) < 1e-8);

  Matrix star = Matrix::Zero(4, 4);
  for (int i = 1; i < 4; ++i) star(0, i) = star(i, 0) = 1.0;
  const AugmentationGraph sg{SymmetricMatrix(star)};
  CHECK(equilibrium_residual(FeatureMatrix::bound(Matrix::Zero(4, 2), sg), sg, 1.0) > 0.1);

  std::mt19937_64 rng(4);
  const AugmentationGraph g = random_graph(9, 0.4, rng);
  const Matrix f = random_features(9, 3, rng);
  std::vector<int> perm(9);
  std::iota(perm.begin(), perm.end(), 0);
  std::shuffle(perm.begin(), perm.end(), rng);
  Matrix pa(9, 9), pf(9, 3);
  for (Index i = 0; i < 9; ++i) {
    pf.row(i) = f.row(perm[static_cast<std::size_t>(i)]);
    for (Index j = 0; j < 9; ++j) pa(i, j) = g.adjacency()(perm[static_cast<std::size_t>(i)], perm[static_cast<std::size_t>(j)]);
  }
  const AugmentationGraph pg{SymmetricMatrix(pa)};
  CHECK(std::abs(equilibrium_residual(FeatureMatrix::bound(f, g), g, 1.0) -
                 equilibrium_residual(FeatureMatrix::bound(pf, pg), pg, 1.0)) < 1e-12);
}

TEST_CASE("effective rank") {
  CHECK(effective_rank(Matrix::Zero(4, 3)) == 0.0);
  Matrix same(6, 3);
  same.rowwise() = Eigen::RowVector3d(1, 2, 3);
  CHECK(effective_rank(same) <= 1.0 + 1e-6);
  CHECK(std::abs(effective_rank(Matrix::Identity(3, 5)) - 3.0) < 1e-6);
  std::mt19937_64 rng(5);
  const Matrix q = random_features(6, 6, rng).householderQr().householderQ();
  CHECK(std::abs(effective_rank(q.topRows(4)) - 4.0) < 1e-6);
}

TEST_CASE("clustering report") {
  Matrix f(6, 2);
  f << 0, 0, 0.1, 0, 0, 0.1, 10, 10, 10.1, 10, 10, 10.1;
  const std::vector<int> labels{0, 0, 0, 1, 1, 1};
  const ClusteringReport r = clustering_report(f, labels);
  CHECK(r.nn_accuracy == 1.0);
  CHECK(r.intra_mean < r.inter_mean);
  CHECK(r.between_within > 100.0);
  CHECK(r.flagged_classes.empty());
  CHECK(!r.distance_ratio);

  const ClusteringReport scaled = clustering_report(2.0 * f, labels, &f);
  REQUIRE(scaled.distance_ratio);
  CHECK(*scaled.distance_ratio == doctest::Approx(2.0));

  // Brute-force intra/inter means.
  double intra = 0, inter = 0;
  int ni = 0, ne = 0;
  for (Index i = 0; i < 6; ++i)
    for (Index j = i + 1; j < 6; ++j) {
      const double d = (f.row(i) - f.row(j)).norm();
      if (labels[static_cast<std::size_t>(i)] == labels[static_cast<std::size_t>(j)]) {
        intra += d;
        ++ni;
      } else {
        inter += d;
        ++ne;
      }
    }
  CHECK(r.intra_mean == doctest::Approx(intra / ni));
  CHECK(r.inter_mean == doctest::Approx(inter / ne));

  Matrix collapsed(5, 3);
  collapsed.rowwise() = Eigen::RowVector3d(0.5, 0.5, 0.5);
  CHECK(clustering_report(collapsed, {0, 0, 1, 1, 1}).effective_rank <= 1.0 + 1e-6);

  const ClusteringReport single = clustering_report(f.topRows(4), {0, 0, 0, 1});
  CHECK(single.flagged_classes == std::vector<int>{1});
  CHECK(single.nn_accuracy == 1.0);
  CHECK(std::isnan(clustering_report(f.topRows(2), {0, 1}).nn_accuracy));
}

TEST_CASE("nearest-neighbour ties go to the lowest index") {
  Matrix f(4, 1);
  f << 0, -1, 1, -2;
  // Nodes 0 and 1 each sit between a same-label and an other-label neighbour
  // at equal distance; the lower index is the wrong label both times.
  CHECK(clustering_report(f, {0, 1, 0, 1}).nn_accuracy == doctest::Approx(0.5));
}

TEST_CASE("between-within ratio and pairwise distances") {
  Matrix f(4, 1);
  f << 0, 2, 10, 12;
  // Class means 1 and 11, grand mean 6: S_B = 4·25 = 100, S_W = 4·1 = 4.
  CHECK(between_within_ratio(f, {0, 0, 1, 1}) == doctest::Approx(25.0));
  CHECK(std::isinf(between_within_ratio(f, {0, 1, 2, 3})));
  CHECK(max_pairwise_distance(f) == doctest::Approx(12.0));
  CHECK(total_pairwise_distance(f) == doctest::Approx(2 + 10 + 12 + 8 + 10 + 2));
}
