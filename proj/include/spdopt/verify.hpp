#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdopt/charts.hpp"
#include "spdopt/manifold.hpp"
#include "spdopt/matrix.hpp"
#include "spdopt/rng.hpp"

// Independent numerical cross-checks for the geometry. Everything in here
// exists to catch bugs in the closed-form code paths, so nothing is shared
// with them: the metric is probed by finite differences of an analytic
// expected log-likelihood, and the exponential/transport maps are
// re-derived by integrating their defining ODEs with RK4.

namespace spdopt {

/// Outcome of probing one chart kind at one dimension: the largest
/// deviation of the coordinate Gram matrix from the identity.
struct BilinearReport {
  ChartKind kind;
  Eigen::Index dim = 0;
  Eigen::Index basis_size = 0;
  double max_deviation = 0.0;
  double tol = 0.0;
  bool passed = false;
};

/// Fixed-step RK4 settings for the ODE oracles.
struct OdeConfig {
  int steps = 256;  // at least 16
};

/// Metric value B(U, V) at the chart origin, measured as the mixed second
/// central difference (step h) of
///   φ(η) = Tr(τ₀ · τ(η)⁻¹) + log det τ(η),
/// which is twice the expected negative log-likelihood of N(0, τ(η)) under
/// N(0, τ₀), up to an additive constant. No sampling is involved. For a
/// correctly scaled chart the basis directions come out orthonormal.
double metric_bilinear(const Chart& chart, const CoordElement& u,
                       const CoordElement& v, double h = 1e-4);

/// Random well-conditioned reference factor of the given kind. The moving
/// block has size k; Kronecker kinds freeze the companion block at size 3.
FactorState random_factor(ChartKind kind, Eigen::Index k, SplitMix64& rng);

/// Gram matrix of metric_bilinear over the chart's coordinate basis at
/// `trials` random reference points per dimension; one report per entry of
/// `dims`. A report passes when the worst |B(Uᵢ,Uⱼ) − δᵢⱼ| stays below tol.
std::vector<BilinearReport> orthonormality_suite(
    ChartKind kind, const std::vector<Eigen::Index>& dims, int trials,
    double tol, std::uint64_t seed);

/// Endpoint at t = 1 of the geodesic ODE r̈ = ṙ r⁻¹ ṙ from r(0) = τ₀,
/// ṙ(0) = v, integrated with cfg.steps RK4 steps. Restricted to dim ≤ 4;
/// throws std::domain_error if the integration leaves the cone.
SpdPoint geodesic_ode_oracle(const SpdPoint& tau0, const RiemTangent& v,
                             const OdeConfig& cfg);

/// Transport of w0 along that geodesic, integrated jointly with it:
/// ẇ = ½(w r⁻¹ ṙ + ṙ r⁻¹ w) for the riemannian flavor and
/// ẇ = −½(r⁻¹ ṙ w + w ṙ r⁻¹) for the euclidean one.
SymmetricMatrix transport_ode_oracle(const SpdPoint& tau0,
                                     const RiemTangent& v_geo,
                                     const SymmetricMatrix& w0,
                                     TangentRole which, const OdeConfig& cfg);

/// Leading correction of the in-chart momentum transport,
/// D∘[D∘m, (D∘m)ᵀ] restricted to the coordinate support. Identically zero
/// for charts whose exponent matrix is symmetric; quadratic in m otherwise.
CoordElement transport_correction_term(const Chart& chart,
                                       const CoordElement& m);

/// Result of one named pairing check, with the measured margin.
struct EquivalenceReport {
  std::string name;
  double measured = 0.0;   // max trajectory gap, or fitted slope
  double threshold = 0.0;  // bound the check is held to
  bool passed = false;
  std::string detail;
};

/// Runs one of the named update-equivalence checks:
///   "eq2-eq3"         both momentum recursions, max gap < 1e-9
///   "gnc-sngd"        chart step vs structured NGD, max gap < 1e-9
///   "s-update-order"  factored vs blended S update, slope ≥ 1.9
///   "ab-first-order"  A-chart vs B-chart single step, slope ≥ 1.9
/// Throws std::invalid_argument for unknown names.
EquivalenceReport equivalence_harness(const std::string& name);

/// Names accepted by equivalence_harness, in a stable order.
const std::vector<std::string>& equivalence_check_names();

}  // namespace spdopt
