#pragma once

#include <cstdint>
#include <functional>
#include <string>
#include <vector>

#include "spdopt/charts.hpp"
#include "spdopt/manifold.hpp"
#include "spdopt/matrix.hpp"
#include "spdopt/optimizers.hpp"

// Benchmark objectives. Two families:
//
//  - SPD-valued problems expose a loss over τ and its symmetric Euclidean
//    gradient; chart pullbacks consume that gradient directly.
//  - Euclidean problems expose loss/grad plus Hessian oracles (vector
//    product, diagonal, tall-matrix product) so preconditioned steps never
//    have to materialize a dense Hessian.
//
// The module also hosts the tanh MLP testbed with per-layer Kronecker factor
// statistics, the Gaussian-mixture objective over augmented covariances, and
// the seeded synthetic-data generators.

namespace spdopt {

/// Loss over SPD matrices with an analytic Euclidean gradient in τ.
struct SpdProblem {
  Eigen::Index dim = 0;
  std::function<double(const SpdPoint&)> loss;
  std::function<SymmetricMatrix(const SpdPoint&)> grad_tau;
};

/// Adapter feeding a chart-based optimizer: evaluates grad_tau at the τ the
/// factor represents and wraps it as a full symmetric gradient.
TauGradFn full_grad_fn(const SpdProblem& problem);

/// Loss over ℝⁿ with banded/matrix-free Hessian access.
struct EuclideanProblem {
  Eigen::Index dim = 0;
  std::function<double(const Vector&)> loss;
  std::function<Vector(const Vector&)> grad;
  std::function<Vector(const Vector&, const Vector&)> hess_vec;
  std::function<Vector(const Vector&)> hess_diag;
  /// Hessian times a tall matrix, column by column through hess_vec.
  std::function<DenseMatrix(const Vector&, const DenseMatrix&)> hess_mat;
};

/// View of a Euclidean problem through the callback bundle the
/// preconditioned steps consume. The dense-Hessian callback is populated
/// only for small problems (dim ≤ 64); larger ones stay matrix-free.
CurvatureProblem as_curvature(const EuclideanProblem& problem);

/// ℓ(τ) = Tr(τ·A) − log det τ with ∇ℓ = A − τ⁻¹ and minimizer τ* = A⁻¹.
SpdProblem logdet_problem(const SpdPoint& a_target);

/// ℓ(τ) = ½‖τ − M‖²_F with ∇ℓ = τ − M. The target only needs to be
/// symmetric; when it is positive definite the minimizer is τ* = M itself.
SpdProblem metric_nearness_problem(const SymmetricMatrix& m_target);

/// Mixture of zero-mean Gaussians over augmented vectors x̃ = [x; 1], one
/// (d+1)×(d+1) covariance per component represented by its factor. Mixture
/// weights are softmax of free logits.
struct GmmSpec {
  Vector logits;
  std::vector<GaussianFactor> components;
  DenseMatrix data;  // one sample per row, d columns
};

/// Everything one optimization step needs from a mixture evaluation.
struct GmmEval {
  double nll = 0.0;              // negative mean log-likelihood
  DenseMatrix responsibilities;  // N×K, rows sum to 1
  Vector logit_grad;             // ∂nll/∂logits
  /// Per-component gradient pieces in the form the gaussian chart pullback
  /// consumes; assembled from factor solves, never from an explicit τ⁻¹.
  std::vector<GaussianGrad> component_grads;
};

GmmEval gmm_problem(const GmmSpec& spec);

/// Chained Rosenbrock Σᵢ [100(x_{i+1} − xᵢ²)² + (1 − xᵢ)²]. The Hessian is
/// tridiagonal; hess_vec and hess_diag work off the band directly.
EuclideanProblem rosenbrock_problem(Eigen::Index n);

/// Fully-connected tanh network without biases; the final layer is linear
/// and feeds a softmax cross-entropy loss.
struct MlpModel {
  std::vector<Eigen::Index> layer_dims;  // e.g. {10, 32, 32, 2}
  std::vector<DenseMatrix> weights;      // weights[l] maps dims[l] -> dims[l+1]
};

/// Fresh per-batch Kronecker factor statistics for one layer: the mean
/// outer product of layer inputs (p×p) and of pre-activation gradients
/// (d×d). Any temporal averaging is the optimizer's business.
struct LayerStats {
  SymmetricMatrix mu_aa = SymmetricMatrix::Zero(1);
  SymmetricMatrix mu_gg = SymmetricMatrix::Zero(1);
};

struct MlpEval {
  double loss = 0.0;
  std::vector<DenseMatrix> grads;  // same shapes as model.weights
  std::vector<LayerStats> stats;
};

/// Seeded random initialization, scaled by 1/√fan_in per layer.
MlpModel make_mlp(const std::vector<Eigen::Index>& layer_dims,
                  std::uint64_t seed, double scale = 1.0);

/// One forward/backward pass over the batch: mean cross-entropy, exact
/// weight gradients, and this batch's factor statistics.
MlpEval mlp_forward_backward(const MlpModel& model, const DenseMatrix& inputs,
                             const std::vector<int>& labels);

/// Synthetic dataset request. `kind` is "gmm-samples" (unlabeled mixture
/// draws, unit covariance per component) or "two-class-blobs" (balanced
/// labels 0/1 around centers ±(separation/(2√d))·𝟙).
struct SynthSpec {
  std::string kind;
  std::uint64_t seed = 0;
  Eigen::Index count = 0;
  Eigen::Index dim = 0;
  int components = 1;        // gmm-samples only
  double separation = 4.0;   // two-class-blobs only
};

struct Dataset {
  DenseMatrix features;     // count × dim
  std::vector<int> labels;  // empty for unlabeled kinds
};

Dataset synth_data(const SynthSpec& spec);

/// Reads a whitespace-separated numeric text file, one sample per row.
/// Rows must all have the same width.
DenseMatrix load_samples(const std::string& path);

}  // namespace spdopt
