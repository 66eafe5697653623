#pragma once

#include <functional>
#include <vector>

#include "spdopt/charts.hpp"
#include "spdopt/manifold.hpp"

// Iterative update rules on SPD iterates. Two families live here:
//
//  * exact-map baselines that walk the manifold with the closed-form
//    exponential and transports (gradient descent, both momentum variants,
//    and the two Nesterov-style recursions), and
//  * factored updates that never leave a chart: momentum in a generalized
//    normal coordinate, structured NGD on a Gaussian, the Newton-like
//    preconditioner pair, and the Kronecker-factored pair for layer weights.
//
// The factored updates are where the inverse-free claims are made: the
// chart-based steps touch no solve or factorization, which the call-audit
// hooks in tests assert directly.

namespace spdopt {

/// Shared knobs for the single-matrix updates.
struct StepConfig {
  double beta;                                          // stepsize, > 0
  double alpha = 0.0;                                   // momentum in [0,1)
  TruncationMode truncation = TruncationMode::exact;    // retraction flavor
};

/// One stage of the preconditioner stepsize warm-up: use `beta1` while the
/// iteration counter is below `until_iteration`.
struct WarmupStage {
  long until_iteration;
  double beta1;
};

/// Knobs for the layer-wise preconditioned updates (both the inverse-free
/// variant and the inverse-based baseline share one config).
struct PrecondConfig {
  double beta1 = 0.01;   // preconditioner stepsize (after warm-up)
  double alpha1 = 0.5;   // preconditioner momentum
  double beta2 = 0.01;   // parameter stepsize
  double alpha2 = 0.9;   // parameter momentum
  double gamma = 0.0;    // weight decay
  double lambda = 0.005; // curvature damping
  long period_T = 10;    // factor update interval
  double theta = 0.95;   // moving-average weight (baseline only)
  std::vector<WarmupStage> warmup;  // ascending thresholds; may be empty
  TruncationMode truncation = TruncationMode::quadratic;
};

/// Effective preconditioner stepsize at `iteration` under cfg.warmup.
double warmup_beta1(const PrecondConfig& cfg, long iteration);

// --- exact-map updates ----------------------------------------------------

/// tau <- RExp(tau, -beta * tau g tau).
SpdPoint step_rgd(const SpdPoint& tau, const EuclTangent& g,
                  const StepConfig& cfg);

/// Momentum carried as a Riemannian vector and parallel-transported.
struct RiemMomentumState {
  RiemTangent z;
};
RiemMomentumState riem_momentum_init(Eigen::Index k);

SpdPoint step_riem_momentum(RiemMomentumState& state, const SpdPoint& tau,
                            const EuclTangent& g, const StepConfig& cfg);

/// Momentum carried as a Euclidean gradient and transported with the dual
/// map; produces the same iterates as the Riemannian variant.
struct EuclMomentumState {
  EuclTangent w;
};
EuclMomentumState eucl_momentum_init(Eigen::Index k);

SpdPoint step_eucl_momentum(EuclMomentumState& state, const SpdPoint& tau,
                            const EuclTangent& g, const StepConfig& cfg);

/// Nesterov-style recursion with an auxiliary point z (initialized to the
/// starting iterate) pulled back through the inverse exponential.
struct AhnState {
  SpdPoint z;
};

SpdPoint step_ahn(AhnState& state, const SpdPoint& tau, const EuclTangent& g,
                  const StepConfig& cfg);

/// Sibling recursion that keeps the auxiliary point y (initialized to the
/// starting iterate) and transports the gradient to it.
struct AlimisisState {
  SpdPoint y;
};

SpdPoint step_alimisis21(AlimisisState& state, const SpdPoint& tau,
                         const EuclTangent& g, const StepConfig& cfg);

// --- chart-based updates --------------------------------------------------

/// Structured NGD on a Gaussian: mu <- mu - gamma Sigma g_mu and
/// L <- L Expm(-gamma L^T g_Sigma L), Sigma = L L^T.
struct GaussianParams {
  Vector mu;
  DenseMatrix L;
};

GaussianParams step_sngd_gaussian(const GaussianParams& p, const Vector& g_mu,
                                  const SymmetricMatrix& g_sigma, double gamma,
                                  TruncationMode mode = TruncationMode::exact);

/// Supplies the loss gradient for a chart-based step. Receives the current
/// factor so structured problems can exploit it; returns whichever GradData
/// variant pullback_grad accepts for the chart.
using TauGradFn = std::function<GradData(const FactorState&)>;

/// Momentum buffer in chart coordinates, carried across chart rebuilds.
struct GncState {
  CoordElement w;
};
GncState gnc_init(const Chart& chart);

/// One full iteration in a normal coordinate: pull the gradient back,
/// accumulate momentum, retract the factor with cfg.truncation, and move the
/// buffer to the new chart (identity transform; see momentum_transform).
Chart step_gnc_momentum(GncState& state, Chart chart, const TauGradFn& grad_fn,
                        const StepConfig& cfg);

// --- Newton-like preconditioned pair ---------------------------------------

/// Callbacks the preconditioned updates need from a twice-differentiable
/// loss. `hess` returns the dense Hessian (reference route, small dims);
/// `hess_vec`/`hess_diag` expose Hessian products and its diagonal for the
/// routes that never form it. Any callback a given step does not use may be
/// left empty.
struct CurvatureProblem {
  std::function<Vector(const Vector&)> grad;
  std::function<SymmetricMatrix(const Vector&)> hess;
  std::function<Vector(const Vector&, const Vector&)> hess_vec;
  std::function<Vector(const Vector&)> hess_diag;
};

/// Inverse-based reference update on S = B B^T (the preconditioner itself):
/// mu <- mu - beta S^{-1} grad, B <- B Expm(beta B^{-1} g B^{-T}) with
/// g = (hess - S)/2, so dS/dbeta = hess - S at beta -> 0.
struct NewtonIterate {
  Vector mu;
  DenseMatrix B;
};

NewtonIterate step_precond_newton(const NewtonIterate& it,
                                  const CurvatureProblem& prob,
                                  const StepConfig& cfg);

/// Inverse-free twin on tau = A A^T = S^{-1}: mu <- mu - beta A A^T grad,
/// A <- A mat_exp(-beta g, cfg.truncation) with g = (A^T hess A - I)/2.
/// No solve, inverse, or factorization anywhere in the step.
struct InverseFreeIterate {
  Vector mu;
  DenseMatrix A;
};

InverseFreeIterate step_precond_inverse_free(const InverseFreeIterate& it,
                                             const CurvatureProblem& prob,
                                             const StepConfig& cfg);

/// Arrow-structured variant of the inverse-free update: the preconditioner
/// factor keeps the arrow sparsity, and curvature enters only through
/// hess_vec (twice) and hess_diag, so the cost per step is O(dim) beyond the
/// callbacks.
struct ArrowIterate {
  Vector mu;
  ArrowFactor A;
};

ArrowIterate step_precond_inverse_free(const ArrowIterate& it,
                                       const CurvatureProblem& prob,
                                       const StepConfig& cfg);

// --- Kronecker-factored layer updates --------------------------------------

/// Per-layer state of the inverse-free Kronecker-factored update. W is the
/// d_out x d_in weight matrix; K (d_in side) and C (d_out side) factor the
/// preconditioner tau = (K K^T) (x) (C C^T); m_K/m_C are factor momenta and
/// M_mu the weight momentum.
struct IfkfacLayerState {
  DenseMatrix W;
  DenseMatrix K;
  DenseMatrix C;
  DenseMatrix m_K;
  DenseMatrix m_C;
  DenseMatrix M_mu;
  long iteration = 0;
};

IfkfacLayerState ifkfac_init(DenseMatrix w0);

/// One iteration: every cfg.period_T iterations the factors take a momentum
/// step driven by the damped curvature statistics (no inverse anywhere);
/// the weight momentum and weight update run every iteration.
void step_ifkfac(IfkfacLayerState& state, const SymmetricMatrix& mu_aa,
                 const SymmetricMatrix& mu_gg, const DenseMatrix& grad_matrix,
                 const PrecondConfig& cfg);

/// Per-layer state of the inverse-based baseline: exponential moving
/// averages P of the curvature factors and their damped inverses G.
struct KfacLayerState {
  DenseMatrix W;
  SymmetricMatrix P_K;
  SymmetricMatrix P_C;
  SymmetricMatrix G_K;
  SymmetricMatrix G_C;
  DenseMatrix M_mu;
  long iteration = 0;
};

KfacLayerState kfac_init(DenseMatrix w0);

/// One baseline iteration: every cfg.period_T iterations refresh the moving
/// averages and recompute damped inverses (a failed factorization signals
/// cfg.lambda is too small); weight update every iteration.
void step_kfac_baseline(KfacLayerState& state, const SymmetricMatrix& mu_aa,
                        const SymmetricMatrix& mu_gg,
                        const DenseMatrix& grad_matrix,
                        const PrecondConfig& cfg);

// --- elementwise adaptive baseline ------------------------------------------

/// Adam buffers; hyperparameters are the usual fixed (0.9, 0.999, 1e-8).
struct AdamState {
  Vector m;
  Vector v;
  long t = 0;
};
AdamState adam_init(Eigen::Index n);

void step_adam(AdamState& state, Vector& params, const Vector& grad,
               double stepsize);

}  // namespace spdopt
