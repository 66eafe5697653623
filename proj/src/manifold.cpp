#include "spdopt/manifold.hpp"

#include <sstream>

namespace spdopt {

namespace {

struct SqrtPair {
  DenseMatrix half;      // tau^{1/2}
  DenseMatrix inv_half;  // tau^{-1/2}
};

// Both square roots from one eigendecomposition; throws on non-SPD input.
SqrtPair sqrt_pair(const SpdPoint& tau) {
  const SymEig eig = eig_sym(tau.sym());
  const Vector sqrt_vals = eig.values.array().sqrt();
  SqrtPair out;
  out.half = eig.vectors * sqrt_vals.asDiagonal() * eig.vectors.transpose();
  out.inv_half = eig.vectors * sqrt_vals.cwiseInverse().asDiagonal() *
                 eig.vectors.transpose();
  return out;
}

void require_same_dim(Eigen::Index a, Eigen::Index b, const char* who) {
  if (a != b) {
    std::ostringstream msg;
    msg << who << ": dimension mismatch (" << a << " vs " << b << ")";
    throw std::invalid_argument(msg.str());
  }
}

}  // namespace

SpdPoint::SpdPoint(SymmetricMatrix value) : value_(std::move(value)) {
  const double lambda_min = min_eig(value_);
  if (!(lambda_min > kSpdRelTol * value_.norm())) {
    std::ostringstream msg;
    msg << "SpdPoint: matrix is not positive definite at tolerance "
        << kSpdRelTol << " (smallest eigenvalue " << lambda_min << ")";
    throw std::domain_error(msg.str());
  }
}

RiemTangent riem_grad(const SpdPoint& tau0, const EuclTangent& g) {
  require_same_dim(tau0.dim(), g.dim(), "riem_grad");
  return RiemTangent(
      SymmetricMatrix(tau0.mat() * g.mat() * tau0.mat()));
}

SpdPoint rexp(const SpdPoint& tau0, const RiemTangent& v) {
  require_same_dim(tau0.dim(), v.dim(), "rexp");
  const SqrtPair r = sqrt_pair(tau0);
  const SymmetricMatrix inner(r.inv_half * v.mat() * r.inv_half);
  const DenseMatrix e = mat_exp(inner.mat(), TruncationMode::exact);
  return SpdPoint(SymmetricMatrix(r.half * e * r.half));
}

RiemTangent rexp_inv(const SpdPoint& tau0, const SpdPoint& tau1) {
  require_same_dim(tau0.dim(), tau1.dim(), "rexp_inv");
  const SqrtPair r = sqrt_pair(tau0);
  const SymmetricMatrix inner(r.inv_half * tau1.mat() * r.inv_half);
  const SymmetricMatrix lg = mat_log_spd(inner);
  return RiemTangent(SymmetricMatrix(r.half * lg.mat() * r.half));
}

RiemTangent riem_transport(const SpdPoint& tau0, const SpdPoint& tau1,
                           const RiemTangent& v) {
  require_same_dim(tau0.dim(), tau1.dim(), "riem_transport");
  require_same_dim(tau0.dim(), v.dim(), "riem_transport");
  const SqrtPair r = sqrt_pair(tau0);
  const SymmetricMatrix inner(r.inv_half * tau1.mat() * r.inv_half);
  const DenseMatrix e = r.half * sym_sqrt(inner).mat() * r.inv_half;
  return RiemTangent(SymmetricMatrix(e * v.mat() * e.transpose()));
}

EuclTangent eucl_transport(const SpdPoint& tau0, const SpdPoint& tau1,
                           const EuclTangent& g) {
  require_same_dim(tau0.dim(), tau1.dim(), "eucl_transport");
  require_same_dim(tau0.dim(), g.dim(), "eucl_transport");
  const SqrtPair r = sqrt_pair(tau0);
  const SymmetricMatrix inner(r.inv_half * tau1.mat() * r.inv_half);
  const DenseMatrix e = r.half * sym_sqrt(inner).mat() * r.inv_half;
  const DenseMatrix h = solve_lu(tau1.mat(), e * tau0.mat());
  return EuclTangent(SymmetricMatrix(h * g.mat() * h.transpose()));
}

SpdPoint snc_map(const SpdPoint& tau0, const SymmetricMatrix& eta) {
  require_same_dim(tau0.dim(), eta.dim(), "snc_map");
  const SqrtPair r = sqrt_pair(tau0);
  const DenseMatrix e = mat_exp(eta.mat(), TruncationMode::exact);
  return SpdPoint(SymmetricMatrix(r.half * e * r.half));
}

double affine_distance(const SpdPoint& x, const SpdPoint& y) {
  require_same_dim(x.dim(), y.dim(), "affine_distance");
  const SqrtPair r = sqrt_pair(x);
  const SymmetricMatrix inner(r.inv_half * y.mat() * r.inv_half);
  return mat_log_spd(inner).norm();
}

}  // namespace spdopt
