#define DOCTEST_CONFIG_IMPLEMENT_WITH_MAIN
#include "doctest.h"

#include <cmath>
#include <vector>

#include "spdopt/audit.hpp"
#include "spdopt/optimizers.hpp"
#include "test_util.hpp"

using namespace spdopt;

namespace {

// Log-det model problem: loss Tr(tau a0) - logdet tau, gradient a0 - tau^{-1},
// minimized at tau = a0^{-1}.
EuclTangent logdet_grad(const SymmetricMatrix& a0, const SpdPoint& tau) {
  return EuclTangent(a0 - inverse_spd(tau.sym()));
}

SpdPoint scalar_point(double x) {
  return SpdPoint(SymmetricMatrix(DenseMatrix::Constant(1, 1, x)));
}

EuclTangent scalar_grad(double x) {
  return EuclTangent(SymmetricMatrix(DenseMatrix::Constant(1, 1, x)));
}

double lsq_slope(const std::vector<double>& xs, const std::vector<double>& ys) {
  double sx = 0, sy = 0, sxx = 0, sxy = 0;
  for (std::size_t i = 0; i < xs.size(); ++i) {
    const double x = std::log(xs[i]), y = std::log(ys[i]);
    sx += x;
    sy += y;
    sxx += x * x;
    sxy += x * y;
  }
  const double n = static_cast<double>(xs.size());
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

}  // namespace

TEST_CASE("warm-up schedule picks the stage below the threshold") {
  PrecondConfig cfg;
  cfg.beta1 = 0.01;
  cfg.warmup = {{100, 0.0002}, {500, 0.002}};
  CHECK(warmup_beta1(cfg, 0) == 0.0002);
  CHECK(warmup_beta1(cfg, 99) == 0.0002);
  CHECK(warmup_beta1(cfg, 100) == 0.002);
  CHECK(warmup_beta1(cfg, 499) == 0.002);
  CHECK(warmup_beta1(cfg, 500) == 0.01);
  cfg.warmup.clear();
  CHECK(warmup_beta1(cfg, 0) == 0.01);
}

TEST_CASE("gradient descent: frozen scalar and fixed point") {
  const SpdPoint tau = scalar_point(1.0);
  const SpdPoint next =
      step_rgd(tau, scalar_grad(1.0), {std::log(2.0), 0.0});
  CHECK(next.mat()(0, 0) == doctest::Approx(0.5).epsilon(1e-12));

  std::mt19937_64 rng(201);
  const SpdPoint p(testutil::rand_spd(rng, 3, 8.0));
  const SpdPoint same = step_rgd(p, EuclTangent::Zero(3), {0.3, 0.0});
  CHECK((same.mat() - p.mat()).norm() < 1e-12);
}

TEST_CASE("momentum variants reduce to gradient descent") {
  std::mt19937_64 rng(202);
  const SpdPoint tau(testutil::rand_spd(rng, 3, 5.0));
  const EuclTangent g(testutil::rand_sym(rng, 3, 0.5));
  const StepConfig plain{0.1, 0.0};
  const SpdPoint want = step_rgd(tau, g, plain);

  auto rs = riem_momentum_init(3);
  CHECK((step_riem_momentum(rs, tau, g, plain).mat() - want.mat()).norm() <
        1e-13);
  auto es = eucl_momentum_init(3);
  CHECK((step_eucl_momentum(es, tau, g, plain).mat() - want.mat()).norm() <
        1e-13);

  // First step with a zero buffer matches gradient descent even with
  // momentum switched on.
  auto rs2 = riem_momentum_init(3);
  const StepConfig heavy{0.1, 0.9};
  CHECK((step_riem_momentum(rs2, tau, g, heavy).mat() - want.mat()).norm() <
        1e-13);
}

TEST_CASE("Riemannian and Euclidean momentum walk the same trajectory") {
  std::mt19937_64 rng(203);
  const Eigen::Index k = 5;
  const SymmetricMatrix a0 = testutil::rand_spd(rng, k, 6.0);
  SpdPoint tr(testutil::rand_spd(rng, k, 4.0));
  SpdPoint te = tr;
  auto rs = riem_momentum_init(k);
  auto es = eucl_momentum_init(k);
  const StepConfig cfg{0.05, 0.9};

  double worst = 0.0;
  for (int step = 0; step < 20; ++step) {
    tr = step_riem_momentum(rs, tr, logdet_grad(a0, tr), cfg);
    te = step_eucl_momentum(es, te, logdet_grad(a0, te), cfg);
    worst = std::max(worst, (tr.mat() - te.mat()).cwiseAbs().maxCoeff());
    CHECK(min_eig(tr.sym()) > 0.0);
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("Nesterov recursion: zero-momentum collapse and fixed point") {
  std::mt19937_64 rng(204);
  const SpdPoint tau(testutil::rand_spd(rng, 3, 5.0));
  const EuclTangent g(testutil::rand_sym(rng, 3, 0.5));
  const StepConfig cfg{0.1, 0.0};

  AhnState st{tau};
  const SpdPoint got = step_ahn(st, tau, g, cfg);
  const SpdPoint want = step_rgd(tau, g, cfg);
  CHECK((got.mat() - want.mat()).norm() < 1e-12);
  const RiemTangent ghat = riem_grad(tau, g);
  const SpdPoint zwant = rexp(tau, RiemTangent(-0.2 * ghat.sym()));
  CHECK((st.z.mat() - zwant.mat()).norm() < 1e-12);

  AhnState fixed{tau};
  const SpdPoint still = step_ahn(fixed, tau, EuclTangent::Zero(3), {0.1, 0.3});
  CHECK((still.mat() - tau.mat()).norm() < 1e-11);
}

TEST_CASE("Nesterov recursion matches a scalar oracle") {
  const double a0 = 2.0;
  const StepConfig cfg{0.08, 0.6};
  SpdPoint tau = scalar_point(3.0);
  AhnState st{tau};
  double t = 3.0, z = 3.0;
  for (int step = 0; step < 10; ++step) {
    tau = step_ahn(st, tau, scalar_grad(a0 - 1.0 / t), cfg);
    const double gh = t * t * (a0 - 1.0 / t);
    const double y = t * std::exp(-cfg.beta * gh / t);
    const double z1 =
        t * std::exp((cfg.alpha / (1.0 - cfg.alpha)) * std::log(z / t) -
                     2.0 * cfg.beta * gh / t);
    t = y * std::pow(z1 / y, cfg.alpha);
    z = z1;
    CHECK(tau.mat()(0, 0) == doctest::Approx(t).epsilon(1e-12));
  }
}

TEST_CASE("transported-gradient recursion matches a scalar oracle") {
  const double a0 = 2.0;
  const StepConfig cfg{0.08, 0.6};
  SpdPoint tau = scalar_point(3.0);
  AlimisisState st{tau};
  double t = 3.0, y = 3.0;
  for (int step = 0; step < 10; ++step) {
    tau = step_alimisis21(st, tau, scalar_grad(a0 - 1.0 / t), cfg);
    const double gh = t * t * (a0 - 1.0 / t);
    const double z1 = t * std::exp(-cfg.beta * gh / t);
    const double y1 = y * std::exp(-(cfg.beta / (1.0 - cfg.alpha)) * gh / t);
    t = y1 * std::pow(z1 / y1, cfg.alpha);
    y = y1;
    CHECK(tau.mat()(0, 0) == doctest::Approx(t).epsilon(1e-12));
  }

  // First step with alpha=0 is plain gradient descent.
  SpdPoint p = scalar_point(3.0);
  AlimisisState fresh{p};
  const StepConfig plain{0.08, 0.0};
  const SpdPoint got = step_alimisis21(fresh, p, scalar_grad(a0 - 1.0 / 3.0), plain);
  const SpdPoint want = step_rgd(p, scalar_grad(a0 - 1.0 / 3.0), plain);
  CHECK((got.mat() - want.mat()).norm() < 1e-13);
}

TEST_CASE("structured NGD: frozen scalar and fixed point") {
  const GaussianParams p{Vector::Zero(1), DenseMatrix::Identity(1, 1)};
  const auto out = step_sngd_gaussian(p, Vector::Constant(1, 2.0),
                                      SymmetricMatrix::Zero(1), 0.1);
  CHECK(out.mu(0) == doctest::Approx(-0.2));
  CHECK(out.L(0, 0) == doctest::Approx(1.0));

  const auto still = step_sngd_gaussian(p, Vector::Zero(1),
                                        SymmetricMatrix::Zero(1), 0.1);
  CHECK(still.mu(0) == 0.0);
  CHECK(still.L(0, 0) == 1.0);

  CHECK_THROWS_AS(step_sngd_gaussian({Vector::Zero(1), DenseMatrix::Zero(1, 1)},
                                     Vector::Zero(1), SymmetricMatrix::Zero(1),
                                     0.1),
                  std::invalid_argument);
}

TEST_CASE("chart momentum: frozen scalar step") {
  auto chart = make_chart(ChartKind::dense_sym_A,
                          DenseFactorA{DenseMatrix::Identity(1, 1)});
  GncState st = gnc_init(chart);
  const TauGradFn unit = [](const FactorState&) -> GradData {
    return FullGrad{SymmetricMatrix::Identity(1)};
  };
  chart = step_gnc_momentum(st, std::move(chart), unit, {0.5, 0.0});
  const auto& a = std::get<DenseFactorA>(chart.reference).A;
  CHECK(a(0, 0) == doctest::Approx(std::exp(-0.25)).epsilon(1e-12));
  CHECK(represent_tau(chart.reference).mat()(0, 0) ==
        doctest::Approx(std::exp(-0.5)).epsilon(1e-12));

  // A zero gradient with an empty buffer leaves the reference untouched.
  GncState zs = gnc_init(chart);
  const TauGradFn zero = [](const FactorState& f) -> GradData {
    return FullGrad{SymmetricMatrix::Zero(tau_dim(f))};
  };
  auto same = step_gnc_momentum(zs, chart, zero, {0.5, 0.9});
  CHECK((std::get<DenseFactorA>(same.reference).A - a).norm() == 0.0);
}

TEST_CASE("chart momentum matches the factored-descent recursion") {
  std::mt19937_64 rng(205);
  const Eigen::Index k = 3;
  const SymmetricMatrix a0 = testutil::rand_spd(rng, k, 5.0);
  DenseMatrix c = testutil::rand_invertible(rng, k);

  auto chart = make_chart(ChartKind::dense_sym_C, DenseFactorC{c});
  GncState st = gnc_init(chart);
  const TauGradFn grad_fn = [&](const FactorState& f) -> GradData {
    return FullGrad{SymmetricMatrix(a0.mat() -
                                    inverse_spd(represent_tau(f).sym()).mat())};
  };
  const StepConfig cfg{0.05, 0.9, TruncationMode::exact};

  DenseMatrix m = DenseMatrix::Zero(k, k);
  for (int step = 0; step < 15; ++step) {
    chart = step_gnc_momentum(st, std::move(chart), grad_fn, cfg);

    const DenseMatrix tau = c.transpose() * c;
    const DenseMatrix g = a0.mat() - inverse_spd(SymmetricMatrix(tau)).mat();
    m = cfg.alpha * m + cfg.beta * (c * g * c.transpose());
    c = mat_exp(-0.5 * m, TruncationMode::exact) * c;

    const DenseMatrix want = c.transpose() * c;
    CHECK((represent_tau(chart.reference).mat() - want).norm() <
          1e-12 * want.norm());
  }
}

TEST_CASE("chart momentum recovers structured NGD on a Gaussian") {
  std::mt19937_64 rng(206);
  const Eigen::Index d = 3;
  const SymmetricMatrix prec = testutil::rand_spd(rng, d, 4.0);
  const Vector target = testutil::rand_dense(rng, d, 1);

  // Quadratic model: g_mu = P(mu - m0), g_Sigma = (P - Sigma^{-1})/2.
  const auto gmu = [&](const Vector& mu) -> Vector {
    return prec.mat() * (mu - target);
  };
  const auto gsigma = [&](const DenseMatrix& sigma) -> SymmetricMatrix {
    return SymmetricMatrix(
        0.5 * (prec.mat() - inverse_spd(SymmetricMatrix(sigma)).mat()));
  };

  const double gamma = 0.04;
  GaussianParams sngd{testutil::rand_dense(rng, d, 1),
                      testutil::rand_invertible(rng, d, 0.2)};
  auto chart = make_chart(ChartKind::gaussian_augmented,
                          GaussianFactor{sngd.L, sngd.mu});
  GncState st = gnc_init(chart);
  const StepConfig cfg{2.0 * gamma, 0.0, TruncationMode::exact};

  double worst = 0.0;
  for (int step = 0; step < 20; ++step) {
    const DenseMatrix sigma = sngd.L * sngd.L.transpose();
    sngd = step_sngd_gaussian(sngd, gmu(sngd.mu), gsigma(sigma), gamma);

    const TauGradFn grad_fn = [&](const FactorState& f) -> GradData {
      const auto& gf = std::get<GaussianFactor>(f);
      const SymmetricMatrix g1 = gsigma(gf.L * gf.L.transpose());
      const Vector g2 = 0.5 * (gmu(gf.mu) - 2.0 * (g1.mat() * gf.mu));
      return GaussianGrad{g1, g2};
    };
    chart = step_gnc_momentum(st, std::move(chart), grad_fn, cfg);

    const auto& gf = std::get<GaussianFactor>(chart.reference);
    worst = std::max(worst, (gf.mu - sngd.mu).cwiseAbs().maxCoeff());
    const DenseMatrix ds = gf.L * gf.L.transpose() -
                           sngd.L * sngd.L.transpose();
    worst = std::max(worst, ds.cwiseAbs().maxCoeff());
  }
  CHECK(worst < 1e-9);
}

TEST_CASE("inverse-based preconditioner: fixed point and scalar rate") {
  std::mt19937_64 rng(207);
  const Eigen::Index k = 3;
  const DenseMatrix b0 = testutil::rand_invertible(rng, k);
  const SymmetricMatrix s0 = SymmetricMatrix(b0 * b0.transpose());

  CurvatureProblem matched;
  matched.grad = [](const Vector& mu) { return Vector::Zero(mu.size()).eval(); };
  matched.hess = [&](const Vector&) { return s0; };
  const NewtonIterate out =
      step_precond_newton({Vector::Zero(k), b0}, matched, {0.1, 0.0});
  CHECK((out.B - b0).norm() < 1e-14);
  CHECK((out.mu).norm() == 0.0);

  // Scalar: S+ = s exp(beta (h - s)/s).
  const double s = 2.0, h = 5.0, beta = 0.1;
  CurvatureProblem scalar;
  scalar.grad = [](const Vector&) { return Vector::Zero(1).eval(); };
  scalar.hess = [&](const Vector&) {
    return SymmetricMatrix(DenseMatrix::Constant(1, 1, h));
  };
  const NewtonIterate so = step_precond_newton(
      {Vector::Zero(1), DenseMatrix::Constant(1, 1, std::sqrt(s))}, scalar,
      {beta, 0.0});
  CHECK(so.B(0, 0) * so.B(0, 0) ==
        doctest::Approx(s * std::exp(beta * (h - s) / s)).epsilon(1e-12));
}

TEST_CASE("inverse-based preconditioner tracks (1-beta)S + beta H") {
  std::mt19937_64 rng(208);
  const Eigen::Index k = 3;
  const SymmetricMatrix h = testutil::rand_spd(rng, k, 6.0);
  const DenseMatrix b0 = testutil::rand_invertible(rng, k);
  const DenseMatrix s0 = b0 * b0.transpose();

  CurvatureProblem prob;
  prob.grad = [](const Vector& mu) { return Vector::Zero(mu.size()).eval(); };
  prob.hess = [&](const Vector&) { return h; };

  std::vector<double> betas{1e-1, 3e-2, 1e-2, 3e-3, 1e-3};
  std::vector<double> residuals;
  for (double beta : betas) {
    const NewtonIterate out =
        step_precond_newton({Vector::Zero(k), b0}, prob, {beta, 0.0});
    const DenseMatrix splus = out.B * out.B.transpose();
    const DenseMatrix blend = (1.0 - beta) * s0 + beta * h.mat();
    residuals.push_back((splus - blend).norm() / s0.norm());
  }
  CHECK(lsq_slope(betas, residuals) >= 1.9);
}

TEST_CASE("inverse-free preconditioner: frozen scalar and fixed point") {
  CurvatureProblem scalar;
  scalar.grad = [](const Vector& mu) { return (3.0 * mu).eval(); };
  scalar.hess = [](const Vector&) {
    return SymmetricMatrix(DenseMatrix::Constant(1, 1, 3.0));
  };
  const InverseFreeIterate out = step_precond_inverse_free(
      {Vector::Ones(1), DenseMatrix::Identity(1, 1)}, scalar, {0.05, 0.0});
  CHECK(out.A(0, 0) == doctest::Approx(std::exp(-0.05)).epsilon(1e-12));
  CHECK(out.A(0, 0) == doctest::Approx(0.951229424500714).epsilon(1e-12));
  CHECK(out.mu(0) == doctest::Approx(1.0 - 0.05 * 3.0).epsilon(1e-14));

  std::mt19937_64 rng(209);
  const DenseMatrix a0 = testutil::rand_invertible(rng, 3);
  const SymmetricMatrix hmatch = SymmetricMatrix(
      inverse_of(a0.transpose()) * inverse_of(a0));
  CurvatureProblem matched;
  matched.grad = [](const Vector& mu) { return Vector::Zero(mu.size()).eval(); };
  matched.hess = [&](const Vector&) { return hmatch; };
  const InverseFreeIterate still = step_precond_inverse_free(
      {Vector::Zero(3), a0}, matched, {0.1, 0.0, TruncationMode::quadratic});
  CHECK((still.A - a0).norm() < 1e-13);
}

TEST_CASE("inverse-free step makes no solver calls") {
  std::mt19937_64 rng(210);
  const Eigen::Index k = 4;
  const SymmetricMatrix h = testutil::rand_spd(rng, k, 5.0);
  CurvatureProblem prob;
  prob.grad = [&](const Vector& mu) { return (h.mat() * mu).eval(); };
  prob.hess_vec = [&](const Vector&, const Vector& x) {
    return (h.mat() * x).eval();
  };
  prob.hess_diag = [&](const Vector&) { return h.mat().diagonal().eval(); };

  InverseFreeIterate it{testutil::rand_dense(rng, k, 1),
                        testutil::rand_invertible(rng, k)};
  audit::Probe dense_probe;
  it = step_precond_inverse_free(it, prob,
                                 {0.05, 0.0, TruncationMode::quadratic});
  CHECK(dense_probe.delta() == 0);

  ArrowIterate ai{testutil::rand_dense(rng, k, 1),
                  ArrowFactor{1.2, testutil::rand_dense(rng, k - 1, 1, 0.3),
                              Vector::Ones(k - 1)}};
  audit::Probe arrow_probe;
  ai = step_precond_inverse_free(ai, prob,
                                 {0.05, 0.0, TruncationMode::quadratic});
  CHECK(arrow_probe.delta() == 0);
  CHECK(ai.A.a > 0.0);
  CHECK(ai.A.c.minCoeff() > 0.0);
}

TEST_CASE("inverse-free and inverse-based steps agree to first order") {
  std::mt19937_64 rng(211);
  const Eigen::Index k = 3;
  const SymmetricMatrix h = testutil::rand_spd(rng, k, 6.0);
  const SymmetricMatrix tau0 = testutil::rand_spd(rng, k, 4.0);
  const DenseMatrix a0 = cholesky(tau0).mat();
  const DenseMatrix b0 = cholesky(inverse_spd(tau0)).mat();

  CurvatureProblem prob;
  prob.grad = [&](const Vector& mu) { return (h.mat() * mu).eval(); };
  prob.hess = [&](const Vector&) { return h; };

  const Vector mu0 = testutil::rand_dense(rng, k, 1);
  std::vector<double> betas{1e-1, 3e-2, 1e-2, 3e-3};
  std::vector<double> diffs;
  for (double beta : betas) {
    const InverseFreeIterate af = step_precond_inverse_free(
        {mu0, a0}, prob, {beta, 0.0, TruncationMode::quadratic});
    const NewtonIterate nf =
        step_precond_newton({mu0, b0}, prob, {beta, 0.0});
    const DenseMatrix tau_free = af.A * af.A.transpose();
    const DenseMatrix tau_newton =
        inverse_spd(SymmetricMatrix(nf.B * nf.B.transpose())).mat();
    diffs.push_back((tau_free - tau_newton).norm());
    CHECK((af.mu - nf.mu).cwiseAbs().maxCoeff() < 1e-16 * betas.size() +
                                                      1e-12);
  }
  CHECK(lsq_slope(betas, diffs) >= 1.9);
}

TEST_CASE("arrow preconditioner agrees with its dense embedding") {
  std::mt19937_64 rng(212);
  const Eigen::Index d = 3, n = d + 1;
  const SymmetricMatrix h = testutil::rand_spd(rng, n, 5.0);
  CurvatureProblem prob;
  prob.grad = [&](const Vector& mu) { return (h.mat() * mu).eval(); };
  prob.hess_vec = [&](const Vector&, const Vector& x) {
    return (h.mat() * x).eval();
  };
  prob.hess_diag = [&](const Vector&) { return h.mat().diagonal().eval(); };

  const ArrowFactor a{1.3, testutil::rand_dense(rng, d, 1, 0.4),
                      (testutil::rand_dense(rng, d, 1, 0.3).array().exp())
                          .matrix()};
  const Vector mu0 = testutil::rand_dense(rng, n, 1);
  const StepConfig cfg{0.03, 0.0, TruncationMode::exact};
  const ArrowIterate out = step_precond_inverse_free({mu0, a}, prob, cfg);

  // Oracle: the same coordinate step evaluated through the chart machinery
  // on the full gradient (hess - tau^{-1})/2.
  Chart chart = make_chart(ChartKind::rank_one_arrow, a);
  const SpdPoint tau = represent_tau(a);
  const SymmetricMatrix full = SymmetricMatrix(
      0.5 * (h.mat() - inverse_spd(tau.sym()).mat()));
  const CoordElement eta = coord_scale(
      -2.0 * cfg.beta, pullback_grad(chart, FullGrad{full}));
  const auto want =
      std::get<ArrowFactor>(chart_map(chart, eta, cfg.truncation));
  CHECK(std::abs(out.A.a - want.a) < 1e-12);
  CHECK((out.A.b - want.b).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((out.A.c - want.c).cwiseAbs().maxCoeff() < 1e-12);
  CHECK((out.mu - (mu0 - cfg.beta * tau.mat() * h.mat() * mu0))
            .cwiseAbs()
            .maxCoeff() < 1e-12);
}

TEST_CASE("Kronecker-factored update: frozen scalar cases") {
  PrecondConfig cfg;
  cfg.alpha1 = 0.0;
  cfg.lambda = 0.0;
  cfg.beta1 = 0.01;
  cfg.period_T = 1;
  cfg.truncation = TruncationMode::linear;
  cfg.alpha2 = 0.0;
  cfg.beta2 = 0.1;
  cfg.gamma = 0.0;

  // Perfectly preconditioned scalar: the factor momentum vanishes.
  auto st = ifkfac_init(DenseMatrix::Identity(1, 1));
  step_ifkfac(st, SymmetricMatrix::Identity(1), SymmetricMatrix::Identity(1),
              DenseMatrix::Zero(1, 1), cfg);
  CHECK(st.m_K(0, 0) == 0.0);
  CHECK(st.K(0, 0) == 1.0);

  // Mismatched curvature: m_K = 1.5 beta1 and the linear retraction.
  auto st2 = ifkfac_init(DenseMatrix::Identity(1, 1));
  step_ifkfac(st2, SymmetricMatrix(DenseMatrix::Constant(1, 1, 4.0)),
              SymmetricMatrix::Identity(1), DenseMatrix::Zero(1, 1), cfg);
  CHECK(st2.m_K(0, 0) == doctest::Approx(1.5 * cfg.beta1).epsilon(1e-14));
  CHECK(st2.K(0, 0) == doctest::Approx(1.0 - 1.5 * cfg.beta1).epsilon(1e-14));
  CHECK(st2.m_C(0, 0) == doctest::Approx(1.5 * cfg.beta1).epsilon(1e-14));

  // The weight row sees the gradient through both factors.
  auto st3 = ifkfac_init(DenseMatrix::Zero(1, 1));
  step_ifkfac(st3, SymmetricMatrix::Identity(1), SymmetricMatrix::Identity(1),
              DenseMatrix::Constant(1, 1, 2.0), cfg);
  CHECK(st3.W(0, 0) == doctest::Approx(-0.2).epsilon(1e-14));
}

TEST_CASE("Kronecker-factored update reaches the damped fixed point") {
  std::mt19937_64 rng(213);
  const Eigen::Index p = 2, d = 3;
  const SymmetricMatrix mu_aa = testutil::rand_spd(rng, p, 3.0);
  const SymmetricMatrix mu_gg = testutil::rand_spd(rng, d, 3.0);

  PrecondConfig cfg;
  cfg.alpha1 = 0.0;
  cfg.beta1 = 0.2;
  cfg.lambda = 0.01;
  cfg.period_T = 1;
  cfg.truncation = TruncationMode::exact;
  cfg.beta2 = 0.0;
  cfg.alpha2 = 0.0;

  auto st = ifkfac_init(DenseMatrix::Zero(d, p));
  for (int i = 0; i < 4000; ++i) {
    step_ifkfac(st, mu_aa, mu_gg, DenseMatrix::Zero(d, p), cfg);
  }
  CHECK(st.m_K.norm() < 1e-10);
  CHECK(st.m_C.norm() < 1e-10);

  const DenseMatrix h_c = st.C.transpose() * mu_gg.mat() * st.C;
  const SymmetricMatrix target = SymmetricMatrix(
      h_c.trace() * mu_aa.mat() +
      cfg.lambda * st.C.squaredNorm() * DenseMatrix::Identity(p, p));
  const DenseMatrix want =
      static_cast<double>(d) * inverse_spd(target).mat();
  CHECK((st.K * st.K.transpose() - want).norm() < 1e-6 * want.norm());
}

TEST_CASE("Kronecker-factored audit: factor steps make no solver calls") {
  std::mt19937_64 rng(214);
  const Eigen::Index p = 3, d = 2;
  const SymmetricMatrix mu_aa = testutil::rand_spd(rng, p, 3.0);
  const SymmetricMatrix mu_gg = testutil::rand_spd(rng, d, 3.0);
  auto st = ifkfac_init(testutil::rand_dense(rng, d, p));

  PrecondConfig cfg;
  cfg.period_T = 2;
  audit::Probe probe;
  for (int i = 0; i < 6; ++i) {
    step_ifkfac(st, mu_aa, mu_gg, testutil::rand_dense(rng, d, p), cfg);
  }
  CHECK(probe.delta() == 0);
}

TEST_CASE("baseline preconditioner: identity case and damped direction") {
  PrecondConfig cfg;
  cfg.lambda = 0.0;
  cfg.period_T = 1;
  cfg.alpha2 = 0.8;
  cfg.beta2 = 0.05;
  cfg.gamma = 0.0;
  cfg.theta = 0.5;

  // Identity statistics: the update degenerates to momentum SGD.
  std::mt19937_64 rng(215);
  auto st = kfac_init(DenseMatrix::Zero(2, 2));
  DenseMatrix m = DenseMatrix::Zero(2, 2), w = DenseMatrix::Zero(2, 2);
  for (int i = 0; i < 8; ++i) {
    const DenseMatrix g = testutil::rand_dense(rng, 2, 2);
    step_kfac_baseline(st, SymmetricMatrix::Identity(2),
                       SymmetricMatrix::Identity(2), g, cfg);
    m = cfg.alpha2 * m + g;
    w -= cfg.beta2 * m;
    CHECK((st.W - w).norm() < 1e-14);
  }

  // Scalar curvature 4 after the moving average settles: inverse is 1/4.
  auto st2 = kfac_init(DenseMatrix::Zero(1, 1));
  const SymmetricMatrix four(DenseMatrix::Constant(1, 1, 4.0));
  for (int i = 0; i < 200; ++i) {
    step_kfac_baseline(st2, four, SymmetricMatrix::Identity(1),
                       DenseMatrix::Zero(1, 1), cfg);
  }
  CHECK(st2.G_K(0, 0) == doctest::Approx(0.25).epsilon(1e-12));

  // Damped direction against a dense oracle.
  const Eigen::Index p = 3, d = 2;
  const SymmetricMatrix mu_aa = testutil::rand_spd(rng, p, 4.0);
  const SymmetricMatrix mu_gg = testutil::rand_spd(rng, d, 4.0);
  PrecondConfig damped = cfg;
  damped.lambda = 0.3;
  damped.alpha2 = 0.0;
  auto st3 = kfac_init(DenseMatrix::Zero(d, p));
  for (int i = 0; i < 200; ++i) {
    step_kfac_baseline(st3, mu_aa, mu_gg, DenseMatrix::Zero(d, p), damped);
  }
  const DenseMatrix g = testutil::rand_dense(rng, d, p);
  const DenseMatrix w_before = st3.W;
  step_kfac_baseline(st3, mu_aa, mu_gg, g, damped);
  const DenseMatrix got = (w_before - st3.W) / damped.beta2;
  const DenseMatrix want =
      inverse_spd(mu_gg + damped.lambda * SymmetricMatrix::Identity(d)).mat() *
      g *
      inverse_spd(mu_aa + damped.lambda * SymmetricMatrix::Identity(p)).mat();
  CHECK((got - want).norm() < 1e-12 * want.norm());
}

TEST_CASE("adaptive baseline: frozen behavior and scalar oracle") {
  AdamState st = adam_init(2);
  Vector params = Vector::Ones(2);
  step_adam(st, params, Vector::Zero(2), 0.1);
  CHECK((params - Vector::Ones(2)).norm() == 0.0);

  AdamState st2 = adam_init(2);
  Vector p2 = Vector::Zero(2);
  Vector g2(2);
  g2 << 3.0, -0.5;
  step_adam(st2, p2, g2, 0.1);
  CHECK(p2(0) == doctest::Approx(-0.1).epsilon(1e-6));
  CHECK(p2(1) == doctest::Approx(0.1).epsilon(1e-6));

  AdamState st3 = adam_init(1);
  Vector p3 = Vector::Constant(1, 2.0);
  double m = 0, v = 0, x = 2.0;
  for (int t = 1; t <= 10; ++t) {
    const double g = 2.0 * x;
    step_adam(st3, p3, Vector::Constant(1, 2.0 * p3(0)), 0.05);
    m = 0.9 * m + 0.1 * g;
    v = 0.999 * v + 0.001 * g * g;
    const double mh = m / (1.0 - std::pow(0.9, t));
    const double vh = v / (1.0 - std::pow(0.999, t));
    x -= 0.05 * mh / (std::sqrt(vh) + 1e-8);
    CHECK(p3(0) == doctest::Approx(x).epsilon(1e-12));
  }
}

TEST_CASE("configuration and shape errors") {
  std::mt19937_64 rng(216);
  const SpdPoint tau(testutil::rand_spd(rng, 2, 3.0));
  CHECK_THROWS_AS(step_rgd(tau, EuclTangent::Zero(2), {0.0, 0.0}),
                  std::invalid_argument);
  CHECK_THROWS_AS(step_rgd(tau, EuclTangent::Zero(2), {0.1, 1.0}),
                  std::invalid_argument);

  auto chart = make_chart(ChartKind::dense_sym_A,
                          DenseFactorA{DenseMatrix::Identity(2, 2)});
  GncState st = gnc_init(chart);
  CHECK_THROWS_AS(step_gnc_momentum(st, chart, TauGradFn{}, {0.1, 0.0}),
                  std::invalid_argument);

  CurvatureProblem no_hess;
  no_hess.grad = [](const Vector& mu) { return mu; };
  CHECK_THROWS_AS(step_precond_newton(
                      {Vector::Zero(2), DenseMatrix::Identity(2, 2)}, no_hess,
                      {0.1, 0.0}),
                  std::invalid_argument);

  PrecondConfig bad;
  bad.theta = 0.0;
  auto ls = ifkfac_init(DenseMatrix::Zero(2, 2));
  CHECK_THROWS_AS(step_ifkfac(ls, SymmetricMatrix::Identity(2),
                              SymmetricMatrix::Identity(2),
                              DenseMatrix::Zero(2, 2), bad),
                  std::invalid_argument);

  PrecondConfig ok;
  CHECK_THROWS_AS(step_ifkfac(ls, SymmetricMatrix::Identity(3),
                              SymmetricMatrix::Identity(2),
                              DenseMatrix::Zero(2, 2), ok),
                  std::invalid_argument);

  AdamState as = adam_init(2);
  Vector params = Vector::Zero(2);
  Vector nang(2);
  nang << 1.0, std::nan("");
  CHECK_THROWS_AS(step_adam(as, params, nang, 0.1), std::invalid_argument);
}
