#include "spdopt/optimizers.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace spdopt {
namespace {

void check_step(const StepConfig& cfg) {
  if (!(cfg.beta > 0.0)) {
    throw std::invalid_argument("stepsize beta must be positive");
  }
  if (!(cfg.alpha >= 0.0 && cfg.alpha < 1.0)) {
    throw std::invalid_argument("momentum weight alpha must lie in [0,1)");
  }
}

void check_precond(const PrecondConfig& cfg) {
  if (!(cfg.beta1 >= 0.0 && cfg.beta2 >= 0.0 && cfg.gamma >= 0.0 &&
        cfg.lambda >= 0.0)) {
    throw std::invalid_argument("preconditioner stepsizes must be nonnegative");
  }
  if (!(cfg.alpha1 >= 0.0 && cfg.alpha1 < 1.0 && cfg.alpha2 >= 0.0 &&
        cfg.alpha2 < 1.0)) {
    throw std::invalid_argument("momentum weights must lie in [0,1)");
  }
  if (cfg.period_T < 1) {
    throw std::invalid_argument("factor update period must be at least 1");
  }
  if (!(cfg.theta > 0.0 && cfg.theta < 1.0)) {
    throw std::invalid_argument("moving-average weight theta must lie in (0,1)");
  }
}

SymmetricMatrix sym(const DenseMatrix& m) { return SymmetricMatrix(m); }

}  // namespace

double warmup_beta1(const PrecondConfig& cfg, long iteration) {
  for (const WarmupStage& stage : cfg.warmup) {
    if (iteration < stage.until_iteration) return stage.beta1;
  }
  return cfg.beta1;
}

// --- exact-map updates ------------------------------------------------------

SpdPoint step_rgd(const SpdPoint& tau, const EuclTangent& g,
                  const StepConfig& cfg) {
  check_step(cfg);
  const RiemTangent ghat = riem_grad(tau, g);
  return rexp(tau, RiemTangent(-cfg.beta * ghat.sym()));
}

RiemMomentumState riem_momentum_init(Eigen::Index k) {
  return RiemMomentumState{RiemTangent::Zero(k)};
}

SpdPoint step_riem_momentum(RiemMomentumState& state, const SpdPoint& tau,
                            const EuclTangent& g, const StepConfig& cfg) {
  check_step(cfg);
  const RiemTangent ghat = riem_grad(tau, g);
  const RiemTangent nu(cfg.alpha * state.z.sym() + cfg.beta * ghat.sym());
  SpdPoint next = rexp(tau, RiemTangent(-1.0 * nu.sym()));
  state.z = riem_transport(tau, next, nu);
  return next;
}

EuclMomentumState eucl_momentum_init(Eigen::Index k) {
  return EuclMomentumState{EuclTangent::Zero(k)};
}

SpdPoint step_eucl_momentum(EuclMomentumState& state, const SpdPoint& tau,
                            const EuclTangent& g, const StepConfig& cfg) {
  check_step(cfg);
  const EuclTangent m(cfg.alpha * state.w.sym() + cfg.beta * g.sym());
  const RiemTangent mhat = riem_grad(tau, m);
  SpdPoint next = rexp(tau, RiemTangent(-1.0 * mhat.sym()));
  state.w = eucl_transport(tau, next, m);
  return next;
}

SpdPoint step_ahn(AhnState& state, const SpdPoint& tau, const EuclTangent& g,
                  const StepConfig& cfg) {
  check_step(cfg);
  const RiemTangent ghat = riem_grad(tau, g);
  const SpdPoint y = rexp(tau, RiemTangent(-cfg.beta * ghat.sym()));
  const double pull = cfg.alpha / (1.0 - cfg.alpha);
  const RiemTangent to_z = rexp_inv(tau, state.z);
  const SpdPoint z =
      rexp(tau, RiemTangent(pull * to_z.sym() - 2.0 * cfg.beta * ghat.sym()));
  const RiemTangent back = rexp_inv(y, z);
  SpdPoint next = rexp(y, RiemTangent(cfg.alpha * back.sym()));
  state.z = z;
  return next;
}

SpdPoint step_alimisis21(AlimisisState& state, const SpdPoint& tau,
                         const EuclTangent& g, const StepConfig& cfg) {
  check_step(cfg);
  const RiemTangent ghat = riem_grad(tau, g);
  const SpdPoint z = rexp(tau, RiemTangent(-cfg.beta * ghat.sym()));
  const RiemTangent moved = riem_transport(tau, state.y, ghat);
  const SpdPoint y = rexp(
      state.y, RiemTangent(-(cfg.beta / (1.0 - cfg.alpha)) * moved.sym()));
  const RiemTangent back = rexp_inv(y, z);
  SpdPoint next = rexp(y, RiemTangent(cfg.alpha * back.sym()));
  state.y = y;
  return next;
}

// --- chart-based updates ------------------------------------------------------

GaussianParams step_sngd_gaussian(const GaussianParams& p, const Vector& g_mu,
                                  const SymmetricMatrix& g_sigma, double gamma,
                                  TruncationMode mode) {
  if (p.L.rows() != p.L.cols() || p.L.rows() != p.mu.size()) {
    throw std::invalid_argument("Gaussian parameter shapes disagree");
  }
  const Vector sv = singular_values(p.L);
  if (!(sv(sv.size() - 1) > 1e-12 * sv(0))) {
    throw std::invalid_argument("Gaussian covariance factor is singular");
  }
  GaussianParams out{p.mu - gamma * (p.L * (p.L.transpose() * g_mu)),
                     p.L * mat_exp(-gamma * (p.L.transpose() *
                                             g_sigma.mat() * p.L),
                                   mode)};
  return out;
}

GncState gnc_init(const Chart& chart) { return GncState{coord_zero(chart)}; }

Chart step_gnc_momentum(GncState& state, Chart chart, const TauGradFn& grad_fn,
                        const StepConfig& cfg) {
  check_step(cfg);
  if (!grad_fn) throw std::invalid_argument("gradient callback is empty");
  const CoordElement g_eta = pullback_grad(chart, grad_fn(chart.reference));
  const CoordElement m = coord_add(cfg.alpha, state.w, cfg.beta, g_eta);
  const CoordElement eta1 = coord_scale(-1.0, m);
  Chart next = make_chart(chart.kind, chart_map(chart, eta1, cfg.truncation));
  state.w =
      momentum_transform(chart, next, m, TransformExactness::first_order);
  return next;
}

// --- Newton-like preconditioned pair -----------------------------------------

NewtonIterate step_precond_newton(const NewtonIterate& it,
                                  const CurvatureProblem& prob,
                                  const StepConfig& cfg) {
  check_step(cfg);
  if (!prob.grad || !prob.hess) {
    throw std::invalid_argument(
        "the inverse-based update needs grad and hess callbacks");
  }
  const Eigen::Index n = it.mu.size();
  if (it.B.rows() != n || it.B.cols() != n) {
    throw std::invalid_argument("preconditioner factor shape disagrees");
  }
  const SymmetricMatrix s = sym(it.B * it.B.transpose());
  const Vector g_mu = prob.grad(it.mu);
  const SymmetricMatrix h = prob.hess(it.mu);

  // S^{-1} g through the factor.
  const Vector step_dir = solve_lu(
      it.B.transpose(), solve_lu(it.B, g_mu));

  const DenseMatrix x = 0.5 * (h.mat() - s.mat());
  const DenseMatrix half = solve_lu(it.B, x);
  const SymmetricMatrix pulled =
      sym(solve_lu(it.B, half.transpose()).transpose());

  NewtonIterate out{it.mu - cfg.beta * step_dir,
                    it.B * mat_exp(cfg.beta * pulled.mat(), cfg.truncation)};
  return out;
}

InverseFreeIterate step_precond_inverse_free(const InverseFreeIterate& it,
                                             const CurvatureProblem& prob,
                                             const StepConfig& cfg) {
  check_step(cfg);
  if (!prob.grad || (!prob.hess && !prob.hess_vec)) {
    throw std::invalid_argument(
        "the inverse-free update needs grad plus hess or hess_vec");
  }
  const Eigen::Index n = it.mu.size();
  if (it.A.rows() != n || it.A.cols() != n) {
    throw std::invalid_argument("preconditioner factor shape disagrees");
  }
  const Vector g_mu = prob.grad(it.mu);

  DenseMatrix ha(n, n);
  if (prob.hess) {
    ha = prob.hess(it.mu).mat() * it.A;
  } else {
    for (Eigen::Index j = 0; j < n; ++j) {
      ha.col(j) = prob.hess_vec(it.mu, it.A.col(j));
    }
  }
  const SymmetricMatrix g_eta =
      sym(0.5 * (it.A.transpose() * ha - DenseMatrix::Identity(n, n)));

  InverseFreeIterate out{
      it.mu - cfg.beta * (it.A * (it.A.transpose() * g_mu)),
      it.A * mat_exp(-cfg.beta * g_eta.mat(), cfg.truncation)};
  return out;
}

ArrowIterate step_precond_inverse_free(const ArrowIterate& it,
                                       const CurvatureProblem& prob,
                                       const StepConfig& cfg) {
  check_step(cfg);
  if (!prob.grad || !prob.hess_vec || !prob.hess_diag) {
    throw std::invalid_argument(
        "the arrow update needs grad, hess_vec and hess_diag");
  }
  const Eigen::Index d = it.A.b.size();
  const Eigen::Index n = d + 1;
  if (it.mu.size() != n) {
    throw std::invalid_argument("arrow factor dimension disagrees with mu");
  }
  const double a = it.A.a;
  const Vector& b = it.A.b;
  const Vector& c = it.A.c;

  // mu <- mu - beta tau g with tau g = A (A^T g), all O(d).
  const Vector g_mu = prob.grad(it.mu);
  const double top = a * g_mu(0) + b.dot(g_mu.tail(d));
  Vector dir(n);
  dir(0) = a * top;
  dir.tail(d) =
      b * top + (c.array() * (c.array() * g_mu.tail(d).array())).matrix();

  // Closed-form pieces of (hess - tau^{-1})/2 in the arrow pattern; the
  // inverse entries come from the O(d) factor inverse, never a solve.
  Vector e1 = Vector::Zero(n);
  e1(0) = 1.0;
  const Vector h_col0 = prob.hess_vec(it.mu, e1);
  Vector bpad = Vector::Zero(n);
  bpad.tail(d) = b;
  const Vector h_b = prob.hess_vec(it.mu, bpad);
  const Vector h_diag = prob.hess_diag(it.mu);

  const double s = 1.0 / a;
  const Eigen::ArrayXd w = b.array() / c.array();
  const double g1 = 0.5 * (h_col0(0) - s * s * (1.0 + w.matrix().squaredNorm()));
  const Vector g2 =
      0.5 * (h_col0.tail(d).array() + s * (w / c.array())).matrix();
  const Vector f =
      0.5 * (h_b.tail(d).array() - b.array() / c.array().square()).matrix();
  const Vector g3_diag =
      0.5 * (h_diag.tail(d).array() - c.array().square().inverse()).matrix();

  Chart chart = make_chart(ChartKind::rank_one_arrow, it.A);
  const CoordElement eta = coord_scale(
      -2.0 * cfg.beta, pullback_grad(chart, ArrowGrad{g1, g2, f, g3_diag}));
  ArrowIterate out{it.mu - cfg.beta * dir,
                   std::get<ArrowFactor>(chart_map(chart, eta, cfg.truncation))};
  return out;
}

// --- Kronecker-factored layer updates ----------------------------------------

IfkfacLayerState ifkfac_init(DenseMatrix w0) {
  const Eigen::Index d = w0.rows(), p = w0.cols();
  return IfkfacLayerState{std::move(w0),
                          DenseMatrix::Identity(p, p),
                          DenseMatrix::Identity(d, d),
                          DenseMatrix::Zero(p, p),
                          DenseMatrix::Zero(d, d),
                          DenseMatrix::Zero(d, p),
                          0};
}

void step_ifkfac(IfkfacLayerState& state, const SymmetricMatrix& mu_aa,
                 const SymmetricMatrix& mu_gg, const DenseMatrix& grad_matrix,
                 const PrecondConfig& cfg) {
  check_precond(cfg);
  const Eigen::Index d = state.W.rows(), p = state.W.cols();
  if (mu_aa.dim() != p || mu_gg.dim() != d || grad_matrix.rows() != d ||
      grad_matrix.cols() != p) {
    throw std::invalid_argument("curvature statistic shapes disagree");
  }
  if (!state.K.allFinite() || !state.C.allFinite()) {
    throw std::invalid_argument("preconditioner factors are non-finite");
  }

  if (state.iteration % cfg.period_T == 0) {
    const double b1 = warmup_beta1(cfg, state.iteration);
    // Both factor momenta read the same curvature snapshot before either
    // factor moves.
    const DenseMatrix h_k = state.K.transpose() * mu_aa.mat() * state.K;
    const DenseMatrix h_c = state.C.transpose() * mu_gg.mat() * state.C;
    const double c2 = cfg.lambda * state.C.squaredNorm();
    const double kap2 = cfg.lambda * state.K.squaredNorm();
    const double dd = static_cast<double>(d), pp = static_cast<double>(p);

    state.m_K = cfg.alpha1 * state.m_K +
                (b1 / (2.0 * dd)) *
                    (h_c.trace() * h_k +
                     c2 * state.K.transpose() * state.K -
                     dd * DenseMatrix::Identity(p, p));
    state.m_C = cfg.alpha1 * state.m_C +
                (b1 / (2.0 * pp)) *
                    (h_k.trace() * h_c +
                     kap2 * state.C.transpose() * state.C -
                     pp * DenseMatrix::Identity(d, d));
    state.K = state.K * mat_exp(-state.m_K, cfg.truncation);
    state.C = state.C * mat_exp(-state.m_C, cfg.truncation);
  }

  state.M_mu = cfg.alpha2 * state.M_mu +
               (state.C * state.C.transpose()) * grad_matrix *
                   (state.K * state.K.transpose()) +
               cfg.gamma * state.W;
  state.W -= cfg.beta2 * state.M_mu;
  state.iteration += 1;
}

KfacLayerState kfac_init(DenseMatrix w0) {
  const Eigen::Index d = w0.rows(), p = w0.cols();
  return KfacLayerState{std::move(w0),
                        SymmetricMatrix::Identity(p),
                        SymmetricMatrix::Identity(d),
                        SymmetricMatrix::Identity(p),
                        SymmetricMatrix::Identity(d),
                        DenseMatrix::Zero(d, p),
                        0};
}

void step_kfac_baseline(KfacLayerState& state, const SymmetricMatrix& mu_aa,
                        const SymmetricMatrix& mu_gg,
                        const DenseMatrix& grad_matrix,
                        const PrecondConfig& cfg) {
  check_precond(cfg);
  const Eigen::Index d = state.W.rows(), p = state.W.cols();
  if (mu_aa.dim() != p || mu_gg.dim() != d || grad_matrix.rows() != d ||
      grad_matrix.cols() != p) {
    throw std::invalid_argument("curvature statistic shapes disagree");
  }

  if (state.iteration % cfg.period_T == 0) {
    state.P_K = cfg.theta * state.P_K + (1.0 - cfg.theta) * mu_aa;
    state.P_C = cfg.theta * state.P_C + (1.0 - cfg.theta) * mu_gg;
    try {
      state.G_K = inverse_spd(
          state.P_K + cfg.lambda * SymmetricMatrix::Identity(p));
      state.G_C = inverse_spd(
          state.P_C + cfg.lambda * SymmetricMatrix::Identity(d));
    } catch (const std::domain_error&) {
      throw std::domain_error(
          "damped curvature factor is not positive definite; increase the "
          "damping weight");
    }
  }

  state.M_mu = cfg.alpha2 * state.M_mu +
               state.G_C.mat() * grad_matrix * state.G_K.mat() +
               cfg.gamma * state.W;
  state.W -= cfg.beta2 * state.M_mu;
  state.iteration += 1;
}

// --- elementwise adaptive baseline --------------------------------------------

AdamState adam_init(Eigen::Index n) {
  return AdamState{Vector::Zero(n), Vector::Zero(n), 0};
}

void step_adam(AdamState& state, Vector& params, const Vector& grad,
               double stepsize) {
  if (!grad.allFinite()) {
    throw std::invalid_argument("gradient contains non-finite values");
  }
  if (grad.size() != params.size() || state.m.size() != params.size()) {
    throw std::invalid_argument("parameter and gradient sizes disagree");
  }
  constexpr double b1 = 0.9, b2 = 0.999, eps = 1e-8;
  state.t += 1;
  state.m = b1 * state.m + (1.0 - b1) * grad;
  state.v = b2 * state.v + (1.0 - b2) * grad.cwiseProduct(grad);
  const double corr1 = 1.0 - std::pow(b1, static_cast<double>(state.t));
  const double corr2 = 1.0 - std::pow(b2, static_cast<double>(state.t));
  const Vector mhat = state.m / corr1;
  const Vector vhat = state.v / corr2;
  params -= stepsize *
            (mhat.array() / (vhat.array().sqrt() + eps)).matrix();
}

}  // namespace spdopt
