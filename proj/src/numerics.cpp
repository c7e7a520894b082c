#include "mpcl/numerics.hpp"

#include "mpcl/error.hpp"

#include <algorithm>
#include <cmath>
#include <numeric>
#include <sstream>
#include <vector>

namespace mpcl {

SymmetricMatrix::SymmetricMatrix(Matrix m) : m_(std::move(m)) {
  if (m_.rows() == 0 || m_.rows() != m_.cols()) {
    throw ConfigError("SymmetricMatrix: expected a non-empty square matrix, got " +
                      std::to_string(m_.rows()) + "x" + std::to_string(m_.cols()));
  }
  for (Index i = 0; i < m_.rows(); ++i) {
    for (Index j = i + 1; j < m_.cols(); ++j) {
      if (m_(i, j) != m_(j, i)) {
        std::ostringstream os;
        os << "SymmetricMatrix: entries (" << i << "," << j << ") and (" << j << "," << i
           << ") differ: " << m_(i, j) << " vs " << m_(j, i);
        throw ConfigError(os.str());
      }
    }
  }
}

SymmetricMatrix SymmetricMatrix::from_upper(const Matrix& m) {
  Matrix s = m;
  for (Index i = 0; i < s.rows(); ++i)
    for (Index j = 0; j < i && j < s.cols(); ++j) s(i, j) = s(j, i);
  return SymmetricMatrix(std::move(s));
}

namespace {

double off_diagonal_mass(const Matrix& a) {
  double sum = 0.0;
  for (Index j = 0; j < a.cols(); ++j)
    for (Index i = 0; i < a.rows(); ++i)
      if (i != j) sum += a(i, j) * a(i, j);
  return std::sqrt(sum);
}

// One Jacobi rotation annihilating a(p,q), p < q. Column-major storage, so
// column updates are contiguous; row updates mirror them.
void rotate(Matrix& a, Matrix& v, Index p, Index q) {
  const double apq = a(p, q);
  const double theta = (a(q, q) - a(p, p)) / (2.0 * apq);
  const double t = (theta >= 0.0 ? 1.0 : -1.0) / (std::abs(theta) + std::sqrt(1.0 + theta * theta));
  const double c = 1.0 / std::sqrt(1.0 + t * t);
  const double s = t * c;
  const Index n = a.rows();

  for (Index k = 0; k < n; ++k) {
    if (k == p || k == q) continue;
    const double akp = a(k, p);
    const double akq = a(k, q);
    const double np = c * akp - s * akq;
    const double nq = s * akp + c * akq;
    a(k, p) = np;
    a(p, k) = np;
    a(k, q) = nq;
    a(q, k) = nq;
  }
  a(p, p) -= t * apq;
  a(q, q) += t * apq;
  a(p, q) = 0.0;
  a(q, p) = 0.0;

  for (Index k = 0; k < n; ++k) {
    const double vkp = v(k, p);
    const double vkq = v(k, q);
    v(k, p) = c * vkp - s * vkq;
    v(k, q) = s * vkp + c * vkq;
  }
}

}  // namespace

EigenDecomposition sym_eigendecompose(const SymmetricMatrix& m, const JacobiOptions& opts,
                                      std::string_view name) {
  if (!(opts.tol > 0.0)) throw ConfigError("sym_eigendecompose: tol must be positive");
  require_finite(m.matrix(), name);

  const Index n = m.size();
  Matrix a = m.matrix();
  Matrix v = Matrix::Identity(n, n);
  const double threshold = opts.tol * std::max(1.0, a.norm());

  double off = off_diagonal_mass(a);
  int sweep = 0;
  while (off >= threshold) {
    if (sweep == opts.max_sweeps) {
      std::ostringstream os;
      os << "sym_eigendecompose(" << name << "): no convergence after " << sweep
         << " sweeps, off-diagonal residual " << off << " (threshold " << threshold << ")";
      throw ConvergenceError(os.str());
    }
    for (Index p = 0; p < n - 1; ++p) {
      for (Index q = p + 1; q < n; ++q) {
        const double apq = a(p, q);
        if (apq == 0.0) continue;
        // Past the first sweeps, an entry negligible next to both diagonals
        // is dropped instead of rotated.
        const double g = 100.0 * std::abs(apq);
        if (sweep > 3 && std::abs(a(p, p)) + g == std::abs(a(p, p)) &&
            std::abs(a(q, q)) + g == std::abs(a(q, q))) {
          a(p, q) = 0.0;
          a(q, p) = 0.0;
          continue;
        }
        rotate(a, v, p, q);
      }
    }
    ++sweep;
    off = off_diagonal_mass(a);
  }

  std::vector<Index> order(static_cast<std::size_t>(n));
  std::iota(order.begin(), order.end(), Index{0});
  std::stable_sort(order.begin(), order.end(),
                   [&](Index i, Index j) { return a(i, i) > a(j, j); });

  EigenDecomposition out{Vector(n), Matrix(n, n)};
  for (Index k = 0; k < n; ++k) {
    const Index src = order[static_cast<std::size_t>(k)];
    out.eigenvalues(k) = a(src, src);
    Vector col = v.col(src);
    for (Index i = 0; i < n; ++i) {
      if (std::abs(col(i)) > 1e-12) {
        if (col(i) < 0.0) col = -col;
        break;
      }
    }
    out.eigenvectors.col(k) = col;
  }
  return out;
}

Matrix stable_row_softmax(const Matrix& scores, double temperature) {
  return stable_row_softmax(scores, temperature, Vector::Ones(scores.cols()));
}

Matrix stable_row_softmax(const Matrix& scores, double temperature, const Vector& column_weights) {
  if (!(temperature > 0.0)) throw ConfigError("stable_row_softmax: temperature must be positive");
  if (column_weights.size() != scores.cols())
    throw ConfigError("stable_row_softmax: column weight count does not match score columns");
  require_finite(scores, "stable_row_softmax");

  Matrix out(scores.rows(), scores.cols());
  for (Index x = 0; x < scores.rows(); ++x) {
    const double shift = scores.row(x).maxCoeff() / temperature;
    double total = 0.0;
    for (Index y = 0; y < scores.cols(); ++y) {
      const double e = column_weights(y) * std::exp(scores(x, y) / temperature - shift);
      out(x, y) = e;
      total += e;
    }
    out.row(x) /= total;
  }
  return out;
}

double frobenius_distance(const Matrix& a, const Matrix& b) {
  if (a.rows() != b.rows() || a.cols() != b.cols()) {
    throw ConfigError("frobenius_distance: shape mismatch " + std::to_string(a.rows()) + "x" +
                      std::to_string(a.cols()) + " vs " + std::to_string(b.rows()) + "x" +
                      std::to_string(b.cols()));
  }
  return (a - b).norm();
}

void require_finite(const Matrix& m, std::string_view where) {
  for (Index i = 0; i < m.rows(); ++i)
    for (Index j = 0; j < m.cols(); ++j)
      if (!std::isfinite(m(i, j))) throw NonFiniteError(std::string(where), i, j);
}

}  // namespace mpcl
