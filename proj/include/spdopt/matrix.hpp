#pragma once

#include <Eigen/Dense>

#include <stdexcept>

#include "spdopt/audit.hpp"

// Dense kernels for small (k <= 64) matrix geometry: the matrix exponential
// with selectable truncation, symmetric square root and logarithm, Cholesky,
// and Kronecker-structured products. Everything is double precision and
// backed by Eigen. Structural properties are preserved bitwise where the
// algebra allows it: products and triangular solves of lower-triangular
// matrices never touch the zero half, and symmetrization uses (M + M^T)/2 so
// mirrored entries compare equal exactly.

namespace spdopt {

using DenseMatrix = Eigen::MatrixXd;
using Vector = Eigen::VectorXd;

/// How mat_exp evaluates the exponential series.
enum class TruncationMode { exact, linear, quadratic };

/// Relative floor for accepting a matrix as SPD:
/// min_eig(S) > kSpdRelTol * ||S||_F. Guards against iterative drift without
/// rejecting merely ill-conditioned inputs.
inline constexpr double kSpdRelTol = 1e-12;

/// Symmetric k x k matrix. Construction symmetrizes via (M + M^T)/2, after
/// which entries(i,j) == entries(j,i) holds bitwise.
class SymmetricMatrix {
 public:
  /// Symmetrizes m. Throws std::invalid_argument if m is not square or has
  /// non-finite entries.
  explicit SymmetricMatrix(const DenseMatrix& m);

  static SymmetricMatrix Zero(Eigen::Index k);
  static SymmetricMatrix Identity(Eigen::Index k);

  Eigen::Index dim() const { return m_.rows(); }
  const DenseMatrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double norm() const { return m_.norm(); }

 private:
  struct AlreadySymmetric {};
  SymmetricMatrix(DenseMatrix m, AlreadySymmetric) : m_(std::move(m)) {}
  DenseMatrix m_;
};

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b);
SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b);
SymmetricMatrix operator*(double s, const SymmetricMatrix& a);

/// Lower-triangular k x k matrix; entries strictly above the diagonal are
/// zero, enforced by projection on construction.
class LowerTriangular {
 public:
  explicit LowerTriangular(const DenseMatrix& m);

  static LowerTriangular Zero(Eigen::Index k);
  static LowerTriangular Identity(Eigen::Index k);

  Eigen::Index dim() const { return m_.rows(); }
  const DenseMatrix& mat() const { return m_; }
  double operator()(Eigen::Index i, Eigen::Index j) const { return m_(i, j); }
  double norm() const { return m_.norm(); }

 private:
  DenseMatrix m_;
};

/// Matrix exponential of a square matrix.
///   exact:     eigendecomposition when N is symmetric (bitwise test),
///              scaling-and-squaring with a degree-6 Pade approximant
///              otherwise; a lower-triangular N stays lower-triangular.
///   linear:    I + N.
///   quadratic: I + N + N^2/2 (SPD-factor-preserving for symmetric or
///              triangular N).
DenseMatrix mat_exp(const DenseMatrix& n, TruncationMode mode);

/// Symmetric P with P*P = S, for SPD S. Throws std::domain_error (message
/// carries the offending eigenvalue) if S fails the SPD tolerance.
SymmetricMatrix sym_sqrt(const SymmetricMatrix& s);

/// Symmetric L with mat_exp(L, exact) = S, for SPD S.
SymmetricMatrix mat_log_spd(const SymmetricMatrix& s);

/// Cholesky factor: lower-triangular L with positive diagonal and L*L^T = S.
/// A non-positive pivot (non-SPD input) throws std::domain_error.
LowerTriangular cholesky(const SymmetricMatrix& s);

/// Applies the Kronecker product K (x) C to vec(X) without materializing it:
/// returns C * X * K^T, with K p x p, C d x d, X d x p.
DenseMatrix kron_apply(const DenseMatrix& k, const DenseMatrix& c,
                       const DenseMatrix& x);

/// Smallest eigenvalue of a symmetric matrix.
double min_eig(const SymmetricMatrix& s);

/// SPD acceptance test at the library-wide tolerance.
bool is_spd(const SymmetricMatrix& s);

// --- audited solver helpers ---------------------------------------------
// Every inverse/solve/factorization in the library funnels through the
// routines below (plus cholesky/sym_sqrt/mat_log_spd/min_eig above), each of
// which records itself with audit::record_solver_call().

struct SymEig {
  Vector values;        // ascending
  DenseMatrix vectors;  // columns are eigenvectors
};

/// Full symmetric eigendecomposition.
SymEig eig_sym(const SymmetricMatrix& s);

/// Forward substitution: X with L X = B. Keeps exact zeros of a
/// lower-triangular B above the diagonal.
DenseMatrix solve_lower(const LowerTriangular& l, const DenseMatrix& b);

/// Back substitution against the transpose: X with L^T X = B.
DenseMatrix solve_lower_transposed(const LowerTriangular& l,
                                   const DenseMatrix& b);

/// General solve A X = B via partially pivoted LU.
DenseMatrix solve_lu(const DenseMatrix& a, const DenseMatrix& b);

/// Dense inverse via LU. Verification-grade; production updates avoid it.
DenseMatrix inverse_of(const DenseMatrix& a);

/// SPD inverse via Cholesky solves.
SymmetricMatrix inverse_spd(const SymmetricMatrix& s);

/// Singular values of a general matrix, descending.
Vector singular_values(const DenseMatrix& a);

}  // namespace spdopt
