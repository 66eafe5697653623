#pragma once

#include "spdopt/matrix.hpp"

// Closed-form geometry of the SPD manifold under the affine-invariant
// metric <U,V>_tau = Tr(tau^{-1} U tau^{-1} V): gradients, the exponential
// map and its inverse, both parallel transports, and the normal coordinate
// around a point.
//
// Tangent objects carry their variance at the type level. A Riemannian
// gradient (metric-inverse times Euclidean gradient) transforms as a
// (1,0)-tensor and transports with E v E^T; a Euclidean gradient is a
// (0,1)-tensor and transports with H g H^T. Mixing the two is the classic
// way to lose the equivalence between the momentum updates, so the compiler
// refuses it.

namespace spdopt {

enum class TangentRole { riemannian, euclidean };

template <TangentRole Role>
class Tangent {
 public:
  explicit Tangent(SymmetricMatrix v) : value_(std::move(v)) {}
  static Tangent Zero(Eigen::Index k) {
    return Tangent(SymmetricMatrix::Zero(k));
  }
  const SymmetricMatrix& sym() const { return value_; }
  const DenseMatrix& mat() const { return value_.mat(); }
  Eigen::Index dim() const { return value_.dim(); }
  double norm() const { return value_.norm(); }

 private:
  SymmetricMatrix value_;
};

using RiemTangent = Tangent<TangentRole::riemannian>;
using EuclTangent = Tangent<TangentRole::euclidean>;

/// A point on the SPD manifold. Construction enforces the library-wide SPD
/// tolerance and throws std::domain_error otherwise.
class SpdPoint {
 public:
  explicit SpdPoint(SymmetricMatrix value);
  static SpdPoint Identity(Eigen::Index k) {
    return SpdPoint(SymmetricMatrix::Identity(k));
  }
  const SymmetricMatrix& sym() const { return value_; }
  const DenseMatrix& mat() const { return value_.mat(); }
  Eigen::Index dim() const { return value_.dim(); }

 private:
  SymmetricMatrix value_;
};

/// Riemannian gradient at tau0: metric inverse applied to a Euclidean
/// gradient, tau0 * g * tau0.
RiemTangent riem_grad(const SpdPoint& tau0, const EuclTangent& g);

/// Exponential map: tau0^{1/2} Expm(tau0^{-1/2} v tau0^{-1/2}) tau0^{1/2}.
SpdPoint rexp(const SpdPoint& tau0, const RiemTangent& v);

/// Inverse exponential map: the v with rexp(tau0, v) = tau1, computed as
/// tau0^{1/2} Logm(tau0^{-1/2} tau1 tau0^{-1/2}) tau0^{1/2}.
RiemTangent rexp_inv(const SpdPoint& tau0, const SpdPoint& tau1);

/// Parallel transport of a (1,0)-tensor along the geodesic from tau0 to
/// tau1: E v E^T with E = (tau1 tau0^{-1})^{1/2}, evaluated through the
/// symmetric similarity form tau0^{1/2} (tau0^{-1/2} tau1 tau0^{-1/2})^{1/2}
/// tau0^{-1/2} so only SPD square roots are ever taken.
RiemTangent riem_transport(const SpdPoint& tau0, const SpdPoint& tau1,
                           const RiemTangent& v);

/// Parallel transport of a (0,1)-tensor: H g H^T with H = tau1^{-1} E tau0.
EuclTangent eucl_transport(const SpdPoint& tau0, const SpdPoint& tau1,
                           const EuclTangent& g);

/// Normal coordinate around tau0: eta -> tau0^{1/2} Expm(eta) tau0^{1/2}.
SpdPoint snc_map(const SpdPoint& tau0, const SymmetricMatrix& eta);

/// Geodesic distance ||Logm(X^{-1/2} Y X^{-1/2})||_F.
double affine_distance(const SpdPoint& x, const SpdPoint& y);

}  // namespace spdopt
