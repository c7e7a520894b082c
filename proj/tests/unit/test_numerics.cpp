#include "mpcl/error.hpp"
#include "mpcl/format.hpp"
#include "mpcl/numerics.hpp"

#include <doctest.h>

#include <Eigen/Eigenvalues>

#include <cmath>
#include <limits>
#include <random>

using namespace mpcl;

namespace {

Matrix random_symmetric(Index n, std::mt19937_64& rng) {
  std::normal_distribution<double> normal;
  Matrix m(n, n);
  for (Index i = 0; i < n; ++i)
    for (Index j = i; j < n; ++j) m(i, j) = m(j, i) = normal(rng);
  return m;
}

void require_eigen_invariants(const Matrix& m, const EigenDecomposition& e) {
  const Index n = m.rows();
  for (Index i = 0; i < n; ++i) {
    const Vector v = e.eigenvectors.col(i);
    const double lambda = e.eigenvalues(i);
    CHECK((m * v - lambda * v).norm() <= 1e-8 * (1.0 + std::abs(lambda)) * v.norm());
    if (i > 0) CHECK(e.eigenvalues(i - 1) >= e.eigenvalues(i));
  }
  CHECK((e.eigenvectors.transpose() * e.eigenvectors - Matrix::Identity(n, n)).cwiseAbs().maxCoeff() <= 1e-8);
}

}  // namespace

TEST_CASE("symmetric matrix rejects asymmetry and empty input") {
  Matrix m(2, 2);
  m << 1, 2, 2.0000001, 1;
  CHECK_THROWS_AS(SymmetricMatrix{m}, ConfigError);
  CHECK_THROWS_AS(SymmetricMatrix{Matrix(0, 0)}, ConfigError);
  CHECK_THROWS_AS(SymmetricMatrix{Matrix::Zero(2, 3)}, ConfigError);
  const SymmetricMatrix s = SymmetricMatrix::from_upper(m);
  CHECK(s(1, 0) == 2.0);
}

TEST_CASE("eigendecomposition of the identity") {
  const auto e = sym_eigendecompose(SymmetricMatrix(Matrix::Identity(3, 3)));
  for (Index i = 0; i < 3; ++i) CHECK(e.eigenvalues(i) == doctest::Approx(1.0));
  require_eigen_invariants(Matrix::Identity(3, 3), e);
}

TEST_CASE("eigendecomposition of the swap matrix") {
  Matrix m(2, 2);
  m << 0, 1, 1, 0;
  const auto e = sym_eigendecompose(SymmetricMatrix(m));
  CHECK(e.eigenvalues(0) == doctest::Approx(1.0).epsilon(1e-12));
  CHECK(e.eigenvalues(1) == doctest::Approx(-1.0).epsilon(1e-12));
  const double r = 1.0 / std::sqrt(2.0);
  // Sign rule: first significant component positive.
  CHECK(std::abs(e.eigenvectors(0, 0) - r) < 1e-12);
  CHECK(std::abs(e.eigenvectors(1, 0) - r) < 1e-12);
  CHECK(std::abs(e.eigenvectors(0, 1) - r) < 1e-12);
  CHECK(std::abs(e.eigenvectors(1, 1) + r) < 1e-12);
}

TEST_CASE("random symmetric matrices reconstruct and agree with Eigen") {
  std::mt19937_64 rng(11);
  for (Index n : {1, 2, 5, 8, 17, 64}) {
    const Matrix m = random_symmetric(n, rng);
    const auto e = sym_eigendecompose(SymmetricMatrix(m));
    const Matrix back = e.eigenvectors * e.eigenvalues.asDiagonal() * e.eigenvectors.transpose();
    CHECK(frobenius_distance(back, m) <= 1e-8);
    require_eigen_invariants(m, e);

    Eigen::SelfAdjointEigenSolver<Matrix> ref(m);
    const Vector ascending = ref.eigenvalues();
    for (Index i = 0; i < n; ++i) CHECK(std::abs(e.eigenvalues(i) - ascending(n - 1 - i)) <= 1e-9);
  }
}

TEST_CASE("eigensolver reports non-convergence with the matrix name") {
  std::mt19937_64 rng(5);
  const Matrix m = random_symmetric(12, rng);
  JacobiOptions opts;
  opts.max_sweeps = 1;
  try {
    sym_eigendecompose(SymmetricMatrix(m), opts, "probe");
    FAIL("expected ConvergenceError");
  } catch (const ConvergenceError& e) {
    CHECK(std::string(e.what()).find("probe") != std::string::npos);
  }
}

TEST_CASE("softmax of zero scores is uniform") {
  const Matrix p = stable_row_softmax(Matrix::Zero(4, 4), 1.0);
  CHECK((p.array() - 0.25).abs().maxCoeff() < 1e-15);
}

TEST_CASE("softmax of a two-entry row") {
  Matrix s(1, 2);
  s << 1, 0;
  const Matrix p = stable_row_softmax(s, 1.0);
  const double e = std::exp(1.0);
  CHECK(p(0, 0) == doctest::Approx(e / (e + 1)).epsilon(1e-14));
  CHECK(p(0, 1) == doctest::Approx(1 / (e + 1)).epsilon(1e-14));
}

TEST_CASE("softmax absorbs a common scale of scores and temperature") {
  std::mt19937_64 rng(3);
  const Matrix s = random_symmetric(6, rng);
  const Matrix a = stable_row_softmax(s, 0.7);
  const Matrix b = stable_row_softmax(3.0 * s, 2.1);
  CHECK((a - b).cwiseAbs().maxCoeff() < 1e-14);
  for (Index i = 0; i < a.rows(); ++i) CHECK(std::abs(a.row(i).sum() - 1.0) <= 1e-12);
}

TEST_CASE("softmax survives large scores") {
  Matrix s(2, 3);
  s << 700, 699, -700, -700, -699, 700;
  const Matrix p = stable_row_softmax(s, 1.0);
  CHECK(p.allFinite());
  CHECK(std::abs(p.row(0).sum() - 1.0) <= 1e-12);
  CHECK(p(0, 0) == doctest::Approx(1.0 / (1.0 + std::exp(-1.0))));
}

TEST_CASE("column-weighted softmax matches the direct formula") {
  std::mt19937_64 rng(8);
  const Matrix s = random_symmetric(5, rng);
  Vector w(5);
  w << 0.1, 0.3, 0.2, 0.25, 0.15;
  const Matrix p = stable_row_softmax(s, 1.5, w);
  for (Index i = 0; i < 5; ++i) {
    double z = 0;
    for (Index j = 0; j < 5; ++j) z += w(j) * std::exp(s(i, j) / 1.5);
    for (Index j = 0; j < 5; ++j) CHECK(std::abs(p(i, j) - w(j) * std::exp(s(i, j) / 1.5) / z) < 1e-14);
  }
}

TEST_CASE("softmax names the non-finite entry") {
  Matrix s = Matrix::Zero(3, 3);
  s(1, 2) = std::numeric_limits<double>::quiet_NaN();
  try {
    stable_row_softmax(s, 1.0);
    FAIL("expected NonFiniteError");
  } catch (const NonFiniteError& e) {
    CHECK(e.row() == 1);
    CHECK(e.col() == 2);
  }
}

TEST_CASE("frobenius distance") {
  CHECK(frobenius_distance(Matrix::Identity(2, 2), Matrix::Zero(2, 2)) == doctest::Approx(std::sqrt(2.0)));
  std::mt19937_64 rng(1);
  const Matrix a = random_symmetric(7, rng), b = random_symmetric(7, rng);
  CHECK(frobenius_distance(a, a) == 0.0);
  double sum = 0;
  for (Index i = 0; i < 7; ++i)
    for (Index j = 0; j < 7; ++j) sum += (a(i, j) - b(i, j)) * (a(i, j) - b(i, j));
  CHECK(std::abs(frobenius_distance(a, b) - std::sqrt(sum)) < 1e-12);
  CHECK_THROWS_AS(frobenius_distance(Matrix::Zero(2, 2), Matrix::Zero(2, 3)), ConfigError);
}

TEST_CASE("double formatting round-trips") {
  std::mt19937_64 rng(2);
  std::uniform_real_distribution<double> u(-1e6, 1e6);
  for (int i = 0; i < 1000; ++i) {
    const double v = u(rng) * std::pow(10.0, i % 40 - 20);
    CHECK(parse_double(format_double(v)) == v);
  }
  CHECK(format_double(0.1) == "0.1");
  CHECK_THROWS_AS(parse_double("1.5x"), ParseError);
  CHECK_THROWS_AS(parse_double(""), ParseError);
}

TEST_CASE("csv parsing checks field counts with line numbers") {
  const CsvTable t = parse_csv("a,b\n1,2\n3,4\n");
  CHECK(t.rows.size() == 2);
  CHECK(csv_column(t, "b") == 1);
  CHECK_THROWS_AS(csv_column(t, "c"), ParseError);
  try {
    parse_csv("a,b\n1,2\n3\n");
    FAIL("expected ParseError");
  } catch (const ParseError& e) {
    CHECK(e.line() == 3);
  }
  CHECK_THROWS_AS(parse_csv(""), ParseError);
}
