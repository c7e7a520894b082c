#pragma once

#include <Eigen/Dense>

#include <string>
#include <string_view>

namespace mpcl {

using Matrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;
using Index = Eigen::Index;

// Square matrix whose entries satisfy m(i,j) == m(j,i) bit for bit.
class SymmetricMatrix {
 public:
  // Throws ConfigError if `m` is empty, non-square, or not exactly symmetric.
  explicit SymmetricMatrix(Matrix m);

  // Copies the upper triangle onto the lower one. Used for matrices that are
  // symmetric in exact arithmetic but were assembled entry by entry.
  static SymmetricMatrix from_upper(const Matrix& m);

  Index size() const { return m_.rows(); }
  const Matrix& matrix() const { return m_; }
  double operator()(Index i, Index j) const { return m_(i, j); }

 private:
  Matrix m_;
};

struct EigenDecomposition {
  Vector eigenvalues;   // descending
  Matrix eigenvectors;  // column i pairs with eigenvalues(i)
};

struct JacobiOptions {
  double tol = 1e-12;  // off-diagonal Frobenius mass, relative to max(1, ‖M‖_F)
  int max_sweeps = 100;
};

// Full spectrum by cyclic Jacobi rotations. Equal eigenvalues keep the order
// of their diagonal positions; each eigenvector is signed so that its first
// component with magnitude above 1e-12 is positive.
EigenDecomposition sym_eigendecompose(const SymmetricMatrix& m, const JacobiOptions& opts = {},
                                      std::string_view name = "matrix");

// Row-wise softmax of scores/temperature with per-row max subtraction.
Matrix stable_row_softmax(const Matrix& scores, double temperature);

// Same, with every column y additionally weighted by column_weights(y) > 0:
// P(x,y) = w_y exp(s_xy/τ) / Σ_z w_z exp(s_xz/τ).
Matrix stable_row_softmax(const Matrix& scores, double temperature, const Vector& column_weights);

double frobenius_distance(const Matrix& a, const Matrix& b);

// Throws NonFiniteError naming `where` at the first non-finite entry.
void require_finite(const Matrix& m, std::string_view where);

}  // namespace mpcl
