#include "spdopt/verify.hpp"

#include <cmath>
#include <cstdio>
#include <stdexcept>

#include "spdopt/optimizers.hpp"
#include "spdopt/problems.hpp"

namespace spdopt {

namespace {

using LongDenseMatrix =
    Eigen::Matrix<long double, Eigen::Dynamic, Eigen::Dynamic>;

/// φ(τ) = Tr(τ₀ τ⁻¹) + log det τ in extended precision. The mixed second
/// difference divides by 4h² ≈ 4e-8, so plain-double noise in φ (around
/// 1e-13 at ill-conditioned Kronecker points) would swamp the 1e-6
/// orthonormality tolerance; 80-bit arithmetic buys the missing digits.
long double phi_extended(const DenseMatrix& tau0, const DenseMatrix& tau) {
  const LongDenseMatrix t = tau.cast<long double>();
  const Eigen::LLT<LongDenseMatrix> llt(t);
  if (llt.info() != Eigen::Success) {
    throw std::domain_error(
        "perturbed chart point left the positive-definite cone");
  }
  long double logdet = 0.0L;
  const LongDenseMatrix l = llt.matrixL();
  for (Eigen::Index i = 0; i < l.rows(); ++i) logdet += std::log(l(i, i));
  return llt.solve(tau0.cast<long double>()).trace() + 2.0L * logdet;
}

DenseMatrix noise(SplitMix64& rng, Eigen::Index r, Eigen::Index c,
                  double scale) {
  DenseMatrix m(r, c);
  for (Eigen::Index i = 0; i < r; ++i) {
    for (Eigen::Index j = 0; j < c; ++j) m(i, j) = scale * rng.normal();
  }
  return m;
}

SymmetricMatrix random_spd(SplitMix64& rng, Eigen::Index k) {
  const DenseMatrix g = noise(rng, k, k, 0.4);
  return SymmetricMatrix(DenseMatrix::Identity(k, k) + g * g.transpose());
}

/// Least-squares slope of log(y) against log(x).
double loglog_slope(const std::vector<double>& x,
                    const std::vector<double>& y) {
  const double n = static_cast<double>(x.size());
  double sx = 0.0, sy = 0.0, sxx = 0.0, sxy = 0.0;
  for (std::size_t i = 0; i < x.size(); ++i) {
    const double lx = std::log(x[i]);
    const double ly = std::log(y[i]);
    sx += lx;
    sy += ly;
    sxx += lx * lx;
    sxy += lx * ly;
  }
  return (n * sxy - sx * sy) / (n * sxx - sx * sx);
}

std::string format_detail(const char* fmt, double a, double b) {
  char buf[160];
  std::snprintf(buf, sizeof(buf), fmt, a, b);
  return std::string(buf);
}

void check_ode_inputs(Eigen::Index k, const OdeConfig& cfg) {
  if (cfg.steps < 16) {
    throw std::invalid_argument("the rk4 oracles need at least 16 steps");
  }
  if (k > 4) {
    throw std::invalid_argument(
        "the ode oracles are restricted to dimension 4 and below");
  }
}

}  // namespace

double metric_bilinear(const Chart& chart, const CoordElement& u,
                       const CoordElement& v, double h) {
  if (!(h > 0.0)) {
    throw std::invalid_argument("finite-difference step must be positive");
  }
  const DenseMatrix tau0 = represent_tau(chart.reference).mat();
  const auto phi = [&chart, &tau0](const CoordElement& eta) {
    return phi_extended(
        tau0, represent_tau(chart_map(chart, eta, TruncationMode::exact)).mat());
  };
  const long double pp = phi(coord_add(h, u, h, v));
  const long double pm = phi(coord_add(h, u, -h, v));
  const long double mp = phi(coord_add(-h, u, h, v));
  const long double mm = phi(coord_add(-h, u, -h, v));
  const long double hl = static_cast<long double>(h);
  return static_cast<double>((pp - pm - mp + mm) / (4.0L * hl * hl));
}

FactorState random_factor(ChartKind kind, Eigen::Index k, SplitMix64& rng) {
  if (k < 1) throw std::invalid_argument("factor dimension must be positive");
  const auto invertible = [&rng](Eigen::Index n) {
    return (DenseMatrix::Identity(n, n) + noise(rng, n, n, 0.3)).eval();
  };
  switch (kind) {
    case ChartKind::dense_sym_A:
      return DenseFactorA{invertible(k)};
    case ChartKind::dense_sym_B:
      return DenseFactorB{invertible(k)};
    case ChartKind::dense_sym_C:
      return DenseFactorC{invertible(k)};
    case ChartKind::triangular_A: {
      DenseMatrix a = noise(rng, k, k, 0.3);
      a.triangularView<Eigen::StrictlyUpper>().setZero();
      for (Eigen::Index i = 0; i < k; ++i) a(i, i) = std::exp(0.3 * rng.normal());
      return TriangularFactor{LowerTriangular(a)};
    }
    case ChartKind::gaussian_augmented:
      return GaussianFactor{invertible(k), noise(rng, k, 1, 0.5)};
    case ChartKind::rank_one_arrow: {
      if (k < 2) {
        throw std::invalid_argument("arrow factors need dimension at least 2");
      }
      const double a = std::exp(0.3 * rng.normal());
      const Vector b = noise(rng, k - 1, 1, 0.5);
      Vector c(k - 1);
      for (Eigen::Index i = 0; i < k - 1; ++i) {
        c(i) = std::exp(0.3 * rng.normal());
      }
      return ArrowFactor{a, b, c};
    }
    case ChartKind::kronecker_block_K:
      return KronFactor{invertible(k), invertible(3)};
    case ChartKind::kronecker_block_C:
      return KronFactor{invertible(3), invertible(k)};
  }
  throw std::invalid_argument("unknown chart kind");
}

std::vector<BilinearReport> orthonormality_suite(
    ChartKind kind, const std::vector<Eigen::Index>& dims, int trials,
    double tol, std::uint64_t seed) {
  if (!(tol > 0.0)) throw std::invalid_argument("tolerance must be positive");
  if (trials < 1) throw std::invalid_argument("need at least one trial");

  std::vector<BilinearReport> reports;
  SplitMix64 rng(seed);
  for (const Eigen::Index dim : dims) {
    BilinearReport rep;
    rep.kind = kind;
    rep.dim = dim;
    rep.tol = tol;
    for (int t = 0; t < trials; ++t) {
      const Chart chart = make_chart(kind, random_factor(kind, dim, rng));
      const std::vector<CoordElement> basis = subspace_basis(chart);
      rep.basis_size = static_cast<Eigen::Index>(basis.size());
      for (std::size_t i = 0; i < basis.size(); ++i) {
        for (std::size_t j = i; j < basis.size(); ++j) {
          const double b = metric_bilinear(chart, basis[i], basis[j]);
          const double want = (i == j) ? 1.0 : 0.0;
          rep.max_deviation = std::max(rep.max_deviation, std::abs(b - want));
        }
      }
    }
    rep.passed = rep.max_deviation < tol;
    reports.push_back(rep);
  }
  return reports;
}

SpdPoint geodesic_ode_oracle(const SpdPoint& tau0, const RiemTangent& v,
                             const OdeConfig& cfg) {
  check_ode_inputs(tau0.dim(), cfg);
  const auto accel = [](const DenseMatrix& r, const DenseMatrix& s) {
    const DenseMatrix rinv = inverse_spd(SymmetricMatrix(r)).mat();
    return (s * rinv * s).eval();
  };
  DenseMatrix r = tau0.mat();
  DenseMatrix s = v.mat();
  const double dt = 1.0 / cfg.steps;
  try {
    for (int step = 0; step < cfg.steps; ++step) {
      const DenseMatrix k1r = s, k1s = accel(r, s);
      const DenseMatrix k2r = s + 0.5 * dt * k1s,
                        k2s = accel(r + 0.5 * dt * k1r, s + 0.5 * dt * k1s);
      const DenseMatrix k3r = s + 0.5 * dt * k2s,
                        k3s = accel(r + 0.5 * dt * k2r, s + 0.5 * dt * k2s);
      const DenseMatrix k4r = s + dt * k3s,
                        k4s = accel(r + dt * k3r, s + dt * k3s);
      r += dt / 6.0 * (k1r + 2.0 * k2r + 2.0 * k3r + k4r);
      s += dt / 6.0 * (k1s + 2.0 * k2s + 2.0 * k3s + k4s);
    }
  } catch (const std::domain_error&) {
    throw std::domain_error(
        "geodesic integration left the positive-definite cone; "
        "increase the step count");
  }
  return SpdPoint(SymmetricMatrix(r));
}

SymmetricMatrix transport_ode_oracle(const SpdPoint& tau0,
                                     const RiemTangent& v_geo,
                                     const SymmetricMatrix& w0,
                                     TangentRole which, const OdeConfig& cfg) {
  check_ode_inputs(tau0.dim(), cfg);
  if (w0.dim() != tau0.dim()) {
    throw std::invalid_argument("transported tangent has the wrong dimension");
  }

  struct State {
    DenseMatrix r, s, w;
  };
  const auto deriv = [which](const State& x) {
    const DenseMatrix rinv = inverse_spd(SymmetricMatrix(x.r)).mat();
    State d;
    d.r = x.s;
    d.s = x.s * rinv * x.s;
    if (which == TangentRole::riemannian) {
      d.w = 0.5 * (x.w * rinv * x.s + x.s * rinv * x.w);
    } else {
      d.w = -0.5 * (rinv * x.s * x.w + x.w * x.s * rinv);
    }
    return d;
  };
  const auto blend = [](const State& x, double c, const State& d) {
    return State{x.r + c * d.r, x.s + c * d.s, x.w + c * d.w};
  };

  State x{tau0.mat(), v_geo.mat(), w0.mat()};
  const double dt = 1.0 / cfg.steps;
  try {
    for (int step = 0; step < cfg.steps; ++step) {
      const State k1 = deriv(x);
      const State k2 = deriv(blend(x, 0.5 * dt, k1));
      const State k3 = deriv(blend(x, 0.5 * dt, k2));
      const State k4 = deriv(blend(x, dt, k3));
      x.r += dt / 6.0 * (k1.r + 2.0 * k2.r + 2.0 * k3.r + k4.r);
      x.s += dt / 6.0 * (k1.s + 2.0 * k2.s + 2.0 * k3.s + k4.s);
      x.w += dt / 6.0 * (k1.w + 2.0 * k2.w + 2.0 * k3.w + k4.w);
    }
  } catch (const std::domain_error&) {
    throw std::domain_error(
        "transport integration left the positive-definite cone; "
        "increase the step count");
  }
  return SymmetricMatrix(x.w);
}

CoordElement transport_correction_term(const Chart& chart,
                                       const CoordElement& m) {
  // Shape check via the coordinate algebra; the zero add is a no-op.
  const CoordElement checked = coord_add(1.0, m, 1.0, coord_zero(chart));

  switch (chart.kind) {
    case ChartKind::dense_sym_A:
    case ChartKind::dense_sym_B:
    case ChartKind::dense_sym_C:
    case ChartKind::kronecker_block_K:
    case ChartKind::kronecker_block_C:
      // D∘m is symmetric, so the commutator with its transpose vanishes.
      return coord_zero(chart);
    case ChartKind::gaussian_augmented:
      // Only the symmetric covariance block passes through an exponential;
      // the mean coordinate enters the factor exactly. No correction.
      return coord_zero(chart);
    case ChartKind::triangular_A: {
      const DenseMatrix d = std::get<LowerTriangular>(chart.scaling).mat();
      const DenseMatrix x =
          d.cwiseProduct(std::get<LowerTriangular>(checked).mat());
      const DenseMatrix bracket =
          x * x.transpose() - x.transpose() * x;
      return LowerTriangular(d.cwiseProduct(bracket));
    }
    case ChartKind::rank_one_arrow: {
      const auto& mask = std::get<ArrowCoord>(chart.scaling);
      const auto& mm = std::get<ArrowCoord>(checked);
      const Eigen::Index k = mm.eta_b.size() + 1;
      DenseMatrix x = DenseMatrix::Zero(k, k);
      x(0, 0) = mask.eta_a * mm.eta_a;
      x.col(0).tail(k - 1) = mask.eta_b.cwiseProduct(mm.eta_b);
      x.diagonal().tail(k - 1) = mask.eta_c.cwiseProduct(mm.eta_c);
      const DenseMatrix bracket = x * x.transpose() - x.transpose() * x;
      return ArrowCoord{mask.eta_a * bracket(0, 0),
                        mask.eta_b.cwiseProduct(bracket.col(0).tail(k - 1)),
                        mask.eta_c.cwiseProduct(bracket.diagonal().tail(k - 1))};
    }
  }
  throw std::invalid_argument("unknown chart kind");
}

namespace {

EquivalenceReport check_eq2_eq3() {
  const Eigen::Index k = 5;
  SplitMix64 rng(2024);
  const SpdProblem problem = logdet_problem(SpdPoint(random_spd(rng, k)));
  const SpdPoint start(random_spd(rng, k));

  StepConfig cfg{0.05};
  cfg.alpha = 0.9;
  RiemMomentumState riem = riem_momentum_init(k);
  EuclMomentumState eucl = eucl_momentum_init(k);
  SpdPoint tau_r = start, tau_e = start;
  double worst = 0.0;
  for (int step = 0; step < 20; ++step) {
    tau_r = step_riem_momentum(riem, tau_r,
                               EuclTangent(problem.grad_tau(tau_r)), cfg);
    tau_e = step_eucl_momentum(eucl, tau_e,
                               EuclTangent(problem.grad_tau(tau_e)), cfg);
    worst = std::max(worst, (tau_r.mat() - tau_e.mat()).norm());
  }

  EquivalenceReport rep{"eq2-eq3", worst, 1e-9, worst < 1e-9, ""};
  rep.detail = format_detail(
      "max gap %.3e between the momentum recursions over 20 steps "
      "(bound %.0e)",
      worst, rep.threshold);
  return rep;
}

EquivalenceReport check_gnc_sngd() {
  const Eigen::Index d = 3;
  SplitMix64 rng(77);
  const SymmetricMatrix p = random_spd(rng, d);
  const Vector target = noise(rng, d, 1, 1.0);
  const DenseMatrix l0 = DenseMatrix::Identity(d, d) + noise(rng, d, d, 0.2);
  const Vector mu0 = noise(rng, d, 1, 0.8);

  // Quadratic model: g_mu = P(mu - target), g_Sigma = (P - Sigma^{-1})/2.
  const auto grads = [&p, &target](const Vector& mu, const DenseMatrix& l) {
    const SymmetricMatrix sigma(l * l.transpose());
    const Vector g_mu = p.mat() * (mu - target);
    const SymmetricMatrix g_sigma =
        SymmetricMatrix(0.5 * (p.mat() - inverse_spd(sigma).mat()));
    return std::make_pair(g_mu, g_sigma);
  };

  const double gamma = 0.05;
  GaussianParams sngd{mu0, l0};

  Chart chart = make_chart(ChartKind::gaussian_augmented,
                           GaussianFactor{l0, mu0});
  GncState gnc = gnc_init(chart);
  StepConfig cfg{2.0 * gamma};

  double worst = 0.0;
  for (int step = 0; step < 20; ++step) {
    const auto [g_mu_s, g_sigma_s] = grads(sngd.mu, sngd.L);
    sngd = step_sngd_gaussian(sngd, g_mu_s, g_sigma_s, gamma);

    const auto grad_fn = [&grads](const FactorState& f) -> GradData {
      const auto& gf = std::get<GaussianFactor>(f);
      const auto [g_mu, g_sigma] = grads(gf.mu, gf.L);
      const Vector g2 = 0.5 * (g_mu - 2.0 * g_sigma.mat() * gf.mu);
      return GaussianGrad{g_sigma, g2};
    };
    chart = step_gnc_momentum(gnc, chart, grad_fn, cfg);

    const auto& gf = std::get<GaussianFactor>(chart.reference);
    const double gap_mu = (gf.mu - sngd.mu).norm();
    const double gap_sigma = (gf.L * gf.L.transpose() -
                              sngd.L * sngd.L.transpose())
                                 .norm();
    worst = std::max(worst, std::max(gap_mu, gap_sigma));
  }

  EquivalenceReport rep{"gnc-sngd", worst, 1e-9, worst < 1e-9, ""};
  rep.detail = format_detail(
      "max (mu, Sigma) gap %.3e between the chart step and structured NGD "
      "over 20 steps (bound %.0e)",
      worst, rep.threshold);
  return rep;
}

EquivalenceReport check_s_update_order() {
  const Eigen::Index k = 3;
  SplitMix64 rng(55);
  const DenseMatrix b0 = DenseMatrix::Identity(k, k) + noise(rng, k, k, 0.3);
  const SymmetricMatrix h = random_spd(rng, k);
  const SymmetricMatrix s0(b0 * b0.transpose());

  CurvatureProblem prob;
  prob.grad = [k](const Vector&) { return Vector::Zero(k).eval(); };
  prob.hess = [h](const Vector&) { return h; };

  const std::vector<double> betas{1e-1, 3.16e-2, 1e-2, 3.16e-3, 1e-3};
  std::vector<double> gaps;
  for (const double beta : betas) {
    StepConfig cfg{beta};
    const NewtonIterate out =
        step_precond_newton(NewtonIterate{Vector::Zero(k), b0}, prob, cfg);
    const DenseMatrix s_plus = out.B * out.B.transpose();
    const DenseMatrix blended =
        s0.mat() + beta * (h.mat() - s0.mat());
    gaps.push_back((s_plus - blended).norm());
  }
  const double slope = loglog_slope(betas, gaps);

  EquivalenceReport rep{"s-update-order", slope, 1.9, slope >= 1.9, ""};
  rep.detail = format_detail(
      "factored S-update deviates from the first-order blend with slope "
      "%.3f (needs >= %.1f)",
      slope, rep.threshold);
  return rep;
}

EquivalenceReport check_ab_first_order() {
  const Eigen::Index k = 4;
  SplitMix64 rng(99);
  const SymmetricMatrix tau0 = random_spd(rng, k);
  const LowerTriangular l = cholesky(tau0);
  const DenseMatrix a0 = l.mat();
  const DenseMatrix b0 =
      solve_lower_transposed(l, DenseMatrix::Identity(k, k));
  const SymmetricMatrix g = SymmetricMatrix(noise(rng, k, k, 0.7));

  const Chart chart_a = make_chart(ChartKind::dense_sym_A, DenseFactorA{a0});
  const Chart chart_b = make_chart(ChartKind::dense_sym_B, DenseFactorB{b0});

  // With exact exponentials the two routes coincide identically (the
  // factors differ by a right orthogonal rotation that cancels), so the
  // O(beta^2) gap is measured on the linearly truncated retraction, where
  // it is genuine.
  const std::vector<double> betas{1e-1, 3.16e-2, 1e-2, 3.16e-3, 1e-3};
  std::vector<double> gaps;
  for (const double beta : betas) {
    const CoordElement eta_a =
        coord_scale(-beta, pullback_grad(chart_a, FullGrad{g}));
    const CoordElement eta_b =
        coord_scale(-beta, pullback_grad(chart_b, FullGrad{g}));
    const SymmetricMatrix tau_a =
        represent_tau(chart_map(chart_a, eta_a, TruncationMode::linear)).sym();
    const SymmetricMatrix tau_b =
        represent_tau(chart_map(chart_b, eta_b, TruncationMode::linear)).sym();
    gaps.push_back((tau_a.mat() - tau_b.mat()).norm());
  }
  const double slope = loglog_slope(betas, gaps);

  EquivalenceReport rep{"ab-first-order", slope, 1.9, slope >= 1.9, ""};
  rep.detail = format_detail(
      "A-chart and B-chart steps differ with slope %.3f in the stepsize "
      "(needs >= %.1f)",
      slope, rep.threshold);
  return rep;
}

}  // namespace

EquivalenceReport equivalence_harness(const std::string& name) {
  if (name == "eq2-eq3") return check_eq2_eq3();
  if (name == "gnc-sngd") return check_gnc_sngd();
  if (name == "s-update-order") return check_s_update_order();
  if (name == "ab-first-order") return check_ab_first_order();
  throw std::invalid_argument("unknown equivalence check: " + name);
}

const std::vector<std::string>& equivalence_check_names() {
  static const std::vector<std::string> names{
      "eq2-eq3", "gnc-sngd", "s-update-order", "ab-first-order"};
  return names;
}

}  // namespace spdopt
