#pragma once

// Local coordinate charts on factored SPD families.
//
// Each chart fixes a reference factorization of an SPD matrix (dense square
// root, triangular square root, mean-augmented Gaussian block, rank-one
// "arrow" pattern, or a Kronecker pair) and exposes a vector-space coordinate
// around it. Moving in coordinates multiplies the reference factor by a
// (possibly truncated) matrix exponential, so the represented matrix stays
// inside the family by construction. The per-kind scaling masks below are
// chosen so that the pulled-back metric is the identity at the origin, which
// is what lets plain momentum run in these coordinates unpreconditioned.

#include <string_view>
#include <variant>
#include <vector>

#include <Eigen/Core>

#include "spdopt/manifold.hpp"
#include "spdopt/matrix.hpp"

namespace spdopt {

enum class ChartKind {
  dense_sym_A,         // tau = A Aᵀ, A dense,  A = A0·Expm(D∘eta)
  dense_sym_B,         // tau = B⁻ᵀB⁻¹, B dense, B = B0·Expm(−D∘eta)
  dense_sym_C,         // tau = CᵀC, C dense,    C = Expm(D∘eta)·C0
  triangular_A,        // tau = A Aᵀ, A lower-triangular
  gaussian_augmented,  // tau = [[Sigma+mu muᵀ, mu],[muᵀ, 1]] via (L, mu)
  rank_one_arrow,      // tau = [[a², a bᵀ],[a b, b bᵀ + diag(c²)]]
  kronecker_block_K,   // tau = (K Kᵀ)⊗(C Cᵀ), coordinates move K only
  kronecker_block_C,   // tau = (K Kᵀ)⊗(C Cᵀ), coordinates move C only
};

// Canonical spelling used by the CLI and config files, e.g. "dense-sym-A".
std::string_view chart_kind_name(ChartKind kind);
ChartKind parse_chart_kind(std::string_view name);

// ---------------------------------------------------------------------------
// Factor states: the concrete parameterization a chart is anchored at.

struct DenseFactorA {
  DenseMatrix A;
};
struct DenseFactorB {
  DenseMatrix B;
};
struct DenseFactorC {
  DenseMatrix C;
};
struct TriangularFactor {
  LowerTriangular A;
};
struct GaussianFactor {
  DenseMatrix L;  // invertible d×d covariance factor, Sigma = L Lᵀ
  Vector mu;      // mean, folded into the (d+1)-dim augmented matrix
};
struct ArrowFactor {
  double a;  // > 0
  Vector b;
  Vector c;  // elementwise > 0
};
struct KronFactor {
  DenseMatrix K;  // p×p
  DenseMatrix C;  // d×d
};

using FactorState = std::variant<DenseFactorA, DenseFactorB, DenseFactorC,
                                 TriangularFactor, GaussianFactor, ArrowFactor,
                                 KronFactor>;

// Dimension of the SPD matrix the factor represents (d+1 for the augmented
// kinds, p·d for the Kronecker pair).
Eigen::Index tau_dim(const FactorState& factor);

// Materialize the represented SPD matrix. Verification-time only: the
// Kronecker product is dense, so keep dimensions small.
SpdPoint represent_tau(const FactorState& factor);

// ---------------------------------------------------------------------------
// Coordinates: elements of the chart's vector space (also used for momenta
// and scaling masks, which share the same shape).

struct GaussianCoord {
  SymmetricMatrix eta_L;
  Vector eta_mu;
};
struct ArrowCoord {
  double eta_a;
  Vector eta_b;
  Vector eta_c;
};

using CoordElement =
    std::variant<SymmetricMatrix, LowerTriangular, GaussianCoord, ArrowCoord>;

struct Chart;

// Vector-space plumbing. The inner product is Frobenius on matrix parts and
// the dot product on vector parts, with no half-vectorization weights.
CoordElement coord_zero(const Chart& chart);
CoordElement coord_scale(double a, const CoordElement& x);
CoordElement coord_add(double a, const CoordElement& x, double b,
                       const CoordElement& y);  // a·x + b·y
double coord_dot(const CoordElement& x, const CoordElement& y);
double coord_norm(const CoordElement& x);

// Orthonormal basis of the chart's coordinate space under coord_dot.
std::vector<CoordElement> subspace_basis(const Chart& chart);

// ---------------------------------------------------------------------------
// Charts.

struct Chart {
  ChartKind kind;
  FactorState reference;
  CoordElement scaling;  // elementwise mask D applied as D∘eta inside Expm
};

// Builds the chart anchored at `reference` with the canonical scaling mask:
//   dense kinds          D = ½ everywhere
//   triangular           D = ½ on the diagonal, 1/√2 strictly below
//   gaussian-augmented   D = ½ on eta_L, 1/√2 on eta_mu
//   rank-one-arrow       D = (½, 1/√2·1, ½·1)
//   kronecker            D = 1/(2√d) moving K, 1/(2√p) moving C
// Throws std::invalid_argument if the factor variant does not match the kind
// or fails its structural invariants (invertibility, positive a/c/diagonal).
Chart make_chart(ChartKind kind, FactorState reference);

// Moves the reference factor by coordinate eta. `mode` selects how the matrix
// exponential is evaluated; quadratic truncation keeps symmetric and
// triangular factors invertible for any eta. Throws std::invalid_argument if
// eta is not an element of the chart's coordinate space.
FactorState chart_map(const Chart& chart, const CoordElement& eta,
                      TruncationMode mode);

// ---------------------------------------------------------------------------
// Gradient data accepted by pullback_grad. Dense charts take the full
// symmetric gradient in tau. The augmented kinds either take their structured
// pieces directly (cheap path: no dense (d+1)² gradient needed) or slice them
// out of a full gradient. Kronecker charts take the curvature factors of the
// implicit objective ½(Tr((mu_AA⊗mu_GG + λI)·tau) − log det tau).

struct FullGrad {
  SymmetricMatrix g;
};
struct GaussianGrad {
  SymmetricMatrix g1;  // top-left block of the augmented gradient
  Vector g2;           // top-right column (mean coupling)
};
struct ArrowGrad {
  double g1;      // (0,0) entry
  Vector g2;      // first column below the corner
  Vector f;       // trailing-block times b, i.e. G3·b
  Vector g3_diag;  // diagonal of the trailing block
};
struct KronGrad {
  SymmetricMatrix mu_AA;
  SymmetricMatrix mu_GG;
  double lambda;
};

using GradData = std::variant<FullGrad, GaussianGrad, ArrowGrad, KronGrad>;

// Chain rule from the tau-gradient into chart coordinates at the origin.
// Satisfies ⟨pullback_grad, V⟩ = d/dt ℓ(chart_map(chart, tV))|₀ for every
// coordinate direction V. Throws std::invalid_argument when the gradient
// data does not fit the chart.
CoordElement pullback_grad(const Chart& chart, const GradData& g_tau);

enum class TransformExactness { first_order, corrected };

// Carries a momentum coordinate from the chart at the previous iterate to the
// chart at the new one (the new chart is expected to sit at the point reached
// by stepping with −m). For charts with a symmetric coordinate space the
// exact transform is the identity; triangular charts pick up a quadratic
// commutator term in the corrected mode.
CoordElement momentum_transform(const Chart& chart_old, const Chart& chart_new,
                                const CoordElement& m,
                                TransformExactness exactness);

// Closed-form inverse of chart_map, dense symmetric A-kind only:
// eta = Logm(A0⁻¹ · tau · A0⁻ᵀ).
CoordElement chart_inverse(const Chart& chart, const SpdPoint& tau);

}  // namespace spdopt
