#include "spdopt/matrix.hpp"

#include <array>
#include <cmath>
#include <sstream>

namespace spdopt {

namespace audit {

namespace {
thread_local std::uint64_t g_solver_calls = 0;
}

std::uint64_t solver_calls() noexcept { return g_solver_calls; }
void record_solver_call() noexcept { ++g_solver_calls; }

}  // namespace audit

namespace {

void require_square_finite(const DenseMatrix& m, const char* who) {
  if (m.rows() != m.cols()) {
    std::ostringstream msg;
    msg << who << ": expected a square matrix, got " << m.rows() << "x"
        << m.cols();
    throw std::invalid_argument(msg.str());
  }
  if (!m.allFinite()) {
    throw std::invalid_argument(std::string(who) +
                                ": input has non-finite entries");
  }
}

bool bitwise_symmetric(const DenseMatrix& m) {
  for (Eigen::Index j = 0; j < m.cols(); ++j)
    for (Eigen::Index i = j + 1; i < m.rows(); ++i)
      if (m(i, j) != m(j, i)) return false;
  return true;
}

bool bitwise_lower_triangular(const DenseMatrix& m) {
  for (Eigen::Index j = 1; j < m.cols(); ++j)
    for (Eigen::Index i = 0; i < j; ++i)
      if (m(i, j) != 0.0) return false;
  return true;
}

double one_norm(const DenseMatrix& m) {
  return m.cwiseAbs().colwise().sum().maxCoeff();
}

// Degree-6 diagonal Pade approximant, valid for ||a||_1 <= 0.25 (the
// scaling step below guarantees that). When the argument is lower
// triangular the solve is a forward substitution, which never writes the
// zero half, so triangularity survives bitwise.
DenseMatrix pade6(const DenseMatrix& a, bool lower_tri) {
  const Eigen::Index k = a.rows();
  std::array<double, 7> b{};
  b[0] = 1.0;
  for (int j = 0; j < 6; ++j)
    b[j + 1] = b[j] * (6.0 - j) / ((12.0 - j) * (j + 1));

  const DenseMatrix id = DenseMatrix::Identity(k, k);
  const DenseMatrix a2 = a * a;
  const DenseMatrix a4 = a2 * a2;
  const DenseMatrix a6 = a2 * a4;
  const DenseMatrix u = a * (b[1] * id + b[3] * a2 + b[5] * a4);
  const DenseMatrix v = b[0] * id + b[2] * a2 + b[4] * a4 + b[6] * a6;

  audit::record_solver_call();
  const DenseMatrix q = v - u;
  const DenseMatrix p = v + u;
  if (lower_tri) return q.triangularView<Eigen::Lower>().solve(p);
  return q.partialPivLu().solve(p);
}

std::string eigenvalue_message(const char* who, double lambda_min) {
  std::ostringstream msg;
  msg << who << ": input is not positive definite (smallest eigenvalue "
      << lambda_min << ")";
  return msg.str();
}

}  // namespace

SymmetricMatrix::SymmetricMatrix(const DenseMatrix& m) {
  require_square_finite(m, "SymmetricMatrix");
  m_ = 0.5 * (m + m.transpose());
}

SymmetricMatrix SymmetricMatrix::Zero(Eigen::Index k) {
  return SymmetricMatrix(DenseMatrix::Zero(k, k), AlreadySymmetric{});
}

SymmetricMatrix SymmetricMatrix::Identity(Eigen::Index k) {
  return SymmetricMatrix(DenseMatrix::Identity(k, k), AlreadySymmetric{});
}

SymmetricMatrix operator+(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return SymmetricMatrix(a.mat() + b.mat());
}

SymmetricMatrix operator-(const SymmetricMatrix& a, const SymmetricMatrix& b) {
  return SymmetricMatrix(a.mat() - b.mat());
}

SymmetricMatrix operator*(double s, const SymmetricMatrix& a) {
  return SymmetricMatrix(s * a.mat());
}

LowerTriangular::LowerTriangular(const DenseMatrix& m) {
  require_square_finite(m, "LowerTriangular");
  m_ = m.triangularView<Eigen::Lower>();
}

LowerTriangular LowerTriangular::Zero(Eigen::Index k) {
  return LowerTriangular(DenseMatrix::Zero(k, k));
}

LowerTriangular LowerTriangular::Identity(Eigen::Index k) {
  return LowerTriangular(DenseMatrix::Identity(k, k));
}

DenseMatrix mat_exp(const DenseMatrix& n, TruncationMode mode) {
  require_square_finite(n, "mat_exp");
  const Eigen::Index k = n.rows();
  const DenseMatrix id = DenseMatrix::Identity(k, k);
  if (n.isZero(0.0)) return id;  // exp(0) = I in every mode

  switch (mode) {
    case TruncationMode::linear:
      return id + n;
    case TruncationMode::quadratic:
      return id + n + 0.5 * (n * n);
    case TruncationMode::exact:
      break;
  }

  if (bitwise_symmetric(n)) {
    const SymEig eig = eig_sym(SymmetricMatrix(n));
    const DenseMatrix r = eig.vectors *
                          eig.values.array().exp().matrix().asDiagonal() *
                          eig.vectors.transpose();
    return 0.5 * (r + r.transpose());
  }

  const bool lower = bitwise_lower_triangular(n);
  const double nrm = one_norm(n);
  int s = 0;
  if (nrm > 0.25) s = static_cast<int>(std::ceil(std::log2(nrm / 0.25)));
  DenseMatrix x = pade6(n / std::ldexp(1.0, s), lower);
  for (int i = 0; i < s; ++i) x = DenseMatrix(x * x);
  return x;
}

SymmetricMatrix sym_sqrt(const SymmetricMatrix& s) {
  const SymEig eig = eig_sym(s);
  const double lambda_min = eig.values(0);
  if (!(lambda_min > kSpdRelTol * s.norm()))
    throw std::domain_error(eigenvalue_message("sym_sqrt", lambda_min));
  return SymmetricMatrix(eig.vectors *
                         eig.values.array().sqrt().matrix().asDiagonal() *
                         eig.vectors.transpose());
}

SymmetricMatrix mat_log_spd(const SymmetricMatrix& s) {
  const SymEig eig = eig_sym(s);
  const double lambda_min = eig.values(0);
  if (!(lambda_min > kSpdRelTol * s.norm()))
    throw std::domain_error(eigenvalue_message("mat_log_spd", lambda_min));
  return SymmetricMatrix(eig.vectors *
                         eig.values.array().log().matrix().asDiagonal() *
                         eig.vectors.transpose());
}

LowerTriangular cholesky(const SymmetricMatrix& s) {
  audit::record_solver_call();
  Eigen::LLT<DenseMatrix> llt(s.mat());
  if (llt.info() != Eigen::Success)
    throw std::domain_error(
        "cholesky: factorization broke down (non-positive pivot); "
        "input is not positive definite");
  return LowerTriangular(llt.matrixL());
}

DenseMatrix kron_apply(const DenseMatrix& k, const DenseMatrix& c,
                       const DenseMatrix& x) {
  if (k.rows() != k.cols() || c.rows() != c.cols() || x.rows() != c.rows() ||
      x.cols() != k.rows()) {
    std::ostringstream msg;
    msg << "kron_apply: shape mismatch, K " << k.rows() << "x" << k.cols()
        << ", C " << c.rows() << "x" << c.cols() << ", X " << x.rows() << "x"
        << x.cols();
    throw std::invalid_argument(msg.str());
  }
  return c * x * k.transpose();
}

double min_eig(const SymmetricMatrix& s) {
  audit::record_solver_call();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(s.mat(),
                                                    Eigen::EigenvaluesOnly);
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("min_eig: eigenvalue iteration failed");
  return solver.eigenvalues()(0);
}

bool is_spd(const SymmetricMatrix& s) {
  return min_eig(s) > kSpdRelTol * s.norm();
}

SymEig eig_sym(const SymmetricMatrix& s) {
  audit::record_solver_call();
  Eigen::SelfAdjointEigenSolver<DenseMatrix> solver(s.mat());
  if (solver.info() != Eigen::Success)
    throw std::runtime_error("eig_sym: eigenvalue iteration failed");
  return SymEig{solver.eigenvalues(), solver.eigenvectors()};
}

DenseMatrix solve_lower(const LowerTriangular& l, const DenseMatrix& b) {
  if (l.dim() != b.rows())
    throw std::invalid_argument("solve_lower: dimension mismatch");
  audit::record_solver_call();
  return l.mat().triangularView<Eigen::Lower>().solve(b);
}

DenseMatrix solve_lower_transposed(const LowerTriangular& l,
                                   const DenseMatrix& b) {
  if (l.dim() != b.rows())
    throw std::invalid_argument("solve_lower_transposed: dimension mismatch");
  audit::record_solver_call();
  return l.mat().transpose().triangularView<Eigen::Upper>().solve(b);
}

DenseMatrix solve_lu(const DenseMatrix& a, const DenseMatrix& b) {
  require_square_finite(a, "solve_lu");
  if (a.rows() != b.rows())
    throw std::invalid_argument("solve_lu: dimension mismatch");
  audit::record_solver_call();
  Eigen::FullPivLU<DenseMatrix> lu(a);
  if (!lu.isInvertible())
    throw std::domain_error("solve_lu: matrix is singular to working precision");
  return lu.solve(b);
}

DenseMatrix inverse_of(const DenseMatrix& a) {
  require_square_finite(a, "inverse_of");
  audit::record_solver_call();
  Eigen::FullPivLU<DenseMatrix> lu(a);
  if (!lu.isInvertible())
    throw std::domain_error(
        "inverse_of: matrix is singular to working precision");
  return lu.inverse();
}

SymmetricMatrix inverse_spd(const SymmetricMatrix& s) {
  const LowerTriangular l = cholesky(s);
  const DenseMatrix y =
      solve_lower(l, DenseMatrix::Identity(s.dim(), s.dim()));
  return SymmetricMatrix(y.transpose() * y);
}

Vector singular_values(const DenseMatrix& a) {
  audit::record_solver_call();
  Eigen::JacobiSVD<DenseMatrix> svd(a);
  return svd.singularValues();
}

}  // namespace spdopt
