#include "spdopt/charts.hpp"

#include <cmath>
#include <stdexcept>
#include <string>
#include <utility>

namespace spdopt {

namespace {

constexpr double kInvSqrt2 = 0.70710678118654752440;

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

void require_finite(const DenseMatrix& m, const char* label) {
  if (!m.allFinite()) fail(std::string(label) + " contains non-finite values");
}

void require_invertible(const DenseMatrix& m, const char* label) {
  require_finite(m, label);
  if (m.rows() != m.cols()) fail(std::string(label) + " must be square");
  const Vector sv = singular_values(m);
  if (sv.size() == 0 || !(sv(sv.size() - 1) > 1e-12 * sv(0))) {
    fail(std::string(label) + " is singular to working precision");
  }
}

// Dense Kronecker product; verification-scale dims only.
DenseMatrix kron_dense(const DenseMatrix& x, const DenseMatrix& y) {
  DenseMatrix out(x.rows() * y.rows(), x.cols() * y.cols());
  for (Eigen::Index i = 0; i < x.rows(); ++i) {
    for (Eigen::Index j = 0; j < x.cols(); ++j) {
      out.block(i * y.rows(), j * y.cols(), y.rows(), y.cols()) = x(i, j) * y;
    }
  }
  return out;
}

// Shape of the coordinate space attached to a factor, used both to validate
// incoming coordinates and to build masks/zeros of the right size.
struct CoordShape {
  enum class Tag { symmetric, triangular, gaussian, arrow } tag;
  Eigen::Index dim;  // matrix side length, or d for the gaussian/arrow pairs
};

CoordShape coord_shape(ChartKind kind, const FactorState& factor) {
  switch (kind) {
    case ChartKind::dense_sym_A:
      return {CoordShape::Tag::symmetric, std::get<DenseFactorA>(factor).A.rows()};
    case ChartKind::dense_sym_B:
      return {CoordShape::Tag::symmetric, std::get<DenseFactorB>(factor).B.rows()};
    case ChartKind::dense_sym_C:
      return {CoordShape::Tag::symmetric, std::get<DenseFactorC>(factor).C.rows()};
    case ChartKind::triangular_A:
      return {CoordShape::Tag::triangular,
              std::get<TriangularFactor>(factor).A.dim()};
    case ChartKind::gaussian_augmented:
      return {CoordShape::Tag::gaussian,
              std::get<GaussianFactor>(factor).mu.size()};
    case ChartKind::rank_one_arrow:
      return {CoordShape::Tag::arrow, std::get<ArrowFactor>(factor).b.size()};
    case ChartKind::kronecker_block_K:
      return {CoordShape::Tag::symmetric, std::get<KronFactor>(factor).K.rows()};
    case ChartKind::kronecker_block_C:
      return {CoordShape::Tag::symmetric, std::get<KronFactor>(factor).C.rows()};
  }
  fail("unknown chart kind");
}

void check_coord(const CoordShape& shape, const CoordElement& eta,
                 const char* label) {
  const bool ok = std::visit(
      [&](const auto& e) -> bool {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SymmetricMatrix>) {
          return shape.tag == CoordShape::Tag::symmetric && e.dim() == shape.dim;
        } else if constexpr (std::is_same_v<T, LowerTriangular>) {
          return shape.tag == CoordShape::Tag::triangular &&
                 e.dim() == shape.dim;
        } else if constexpr (std::is_same_v<T, GaussianCoord>) {
          return shape.tag == CoordShape::Tag::gaussian &&
                 e.eta_L.dim() == shape.dim && e.eta_mu.size() == shape.dim;
        } else {
          return shape.tag == CoordShape::Tag::arrow &&
                 e.eta_b.size() == shape.dim && e.eta_c.size() == shape.dim;
        }
      },
      eta);
  if (!ok) fail(std::string(label) + " does not lie in the chart's coordinate space");
}

// The closed-form exponential of an arrow-patterned matrix
// [[x, 0],[v, diag(w)]]: the corner and diagonal exponentiate on their own
// and the column picks up the divided difference (e^x − e^{w_i})/(x − w_i).
struct ArrowTriple {
  double x;
  Vector v;
  Vector w;
};

double expm1_over(double t) {
  // (e^t − 1)/t, stable through t = 0.
  if (std::abs(t) < 1e-12) return 1.0 + 0.5 * t + t * t / 6.0;
  return std::expm1(t) / t;
}

ArrowTriple arrow_exp(const ArrowTriple& n, TruncationMode mode) {
  const Eigen::Index d = n.v.size();
  ArrowTriple out{0.0, Vector(d), Vector(d)};
  switch (mode) {
    case TruncationMode::linear:
      out.x = 1.0 + n.x;
      out.v = n.v;
      out.w = (1.0 + n.w.array()).matrix();
      return out;
    case TruncationMode::quadratic:
      out.x = 1.0 + n.x + 0.5 * n.x * n.x;
      out.v = (n.v.array() * (1.0 + 0.5 * (n.x + n.w.array()))).matrix();
      out.w = (1.0 + n.w.array() + 0.5 * n.w.array().square()).matrix();
      return out;
    case TruncationMode::exact:
      out.x = std::exp(n.x);
      out.w = n.w.array().exp().matrix();
      for (Eigen::Index i = 0; i < d; ++i) {
        out.v(i) = n.v(i) * out.w(i) * expm1_over(n.x - n.w(i));
      }
      return out;
  }
  fail("unknown truncation mode");
}

SymmetricMatrix half_ones(Eigen::Index k, double value) {
  return SymmetricMatrix(DenseMatrix::Constant(k, k, value));
}

// Rebuilds a lower-triangular matrix with the standard chart weights:
// `diag_w` on the diagonal and `below_w` strictly below.
LowerTriangular weighted_tril(Eigen::Index k, double diag_w, double below_w) {
  DenseMatrix d = DenseMatrix::Zero(k, k);
  for (Eigen::Index i = 0; i < k; ++i) {
    d(i, i) = diag_w;
    for (Eigen::Index j = 0; j < i; ++j) d(i, j) = below_w;
  }
  return LowerTriangular(d);
}

}  // namespace

std::string_view chart_kind_name(ChartKind kind) {
  switch (kind) {
    case ChartKind::dense_sym_A: return "dense-sym-A";
    case ChartKind::dense_sym_B: return "dense-sym-B";
    case ChartKind::dense_sym_C: return "dense-sym-C";
    case ChartKind::triangular_A: return "triangular-A";
    case ChartKind::gaussian_augmented: return "gaussian-augmented";
    case ChartKind::rank_one_arrow: return "rank-one-arrow";
    case ChartKind::kronecker_block_K: return "kronecker-block-K";
    case ChartKind::kronecker_block_C: return "kronecker-block-C";
  }
  fail("unknown chart kind");
}

ChartKind parse_chart_kind(std::string_view name) {
  for (ChartKind k :
       {ChartKind::dense_sym_A, ChartKind::dense_sym_B, ChartKind::dense_sym_C,
        ChartKind::triangular_A, ChartKind::gaussian_augmented,
        ChartKind::rank_one_arrow, ChartKind::kronecker_block_K,
        ChartKind::kronecker_block_C}) {
    if (chart_kind_name(k) == name) return k;
  }
  fail("unknown chart kind '" + std::string(name) + "'");
}

Eigen::Index tau_dim(const FactorState& factor) {
  return std::visit(
      [](const auto& f) -> Eigen::Index {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DenseFactorA>) return f.A.rows();
        else if constexpr (std::is_same_v<T, DenseFactorB>) return f.B.rows();
        else if constexpr (std::is_same_v<T, DenseFactorC>) return f.C.rows();
        else if constexpr (std::is_same_v<T, TriangularFactor>) return f.A.dim();
        else if constexpr (std::is_same_v<T, GaussianFactor>) return f.mu.size() + 1;
        else if constexpr (std::is_same_v<T, ArrowFactor>) return f.b.size() + 1;
        else return f.K.rows() * f.C.rows();
      },
      factor);
}

SpdPoint represent_tau(const FactorState& factor) {
  return std::visit(
      [](const auto& f) -> SpdPoint {
        using T = std::decay_t<decltype(f)>;
        if constexpr (std::is_same_v<T, DenseFactorA>) {
          return SpdPoint(SymmetricMatrix(f.A * f.A.transpose()));
        } else if constexpr (std::is_same_v<T, DenseFactorB>) {
          // tau = B⁻ᵀB⁻¹ = (B Bᵀ)⁻¹
          return SpdPoint(inverse_spd(SymmetricMatrix(f.B * f.B.transpose())));
        } else if constexpr (std::is_same_v<T, DenseFactorC>) {
          return SpdPoint(SymmetricMatrix(f.C.transpose() * f.C));
        } else if constexpr (std::is_same_v<T, TriangularFactor>) {
          return SpdPoint(SymmetricMatrix(f.A.mat() * f.A.mat().transpose()));
        } else if constexpr (std::is_same_v<T, GaussianFactor>) {
          const Eigen::Index d = f.mu.size();
          DenseMatrix t(d + 1, d + 1);
          t.topLeftCorner(d, d) =
              f.L * f.L.transpose() + f.mu * f.mu.transpose();
          t.col(d).head(d) = f.mu;
          t.row(d).head(d) = f.mu.transpose();
          t(d, d) = 1.0;
          return SpdPoint(SymmetricMatrix(t));
        } else if constexpr (std::is_same_v<T, ArrowFactor>) {
          const Eigen::Index d = f.b.size();
          DenseMatrix t(d + 1, d + 1);
          t(0, 0) = f.a * f.a;
          t.col(0).tail(d) = f.a * f.b;
          t.row(0).tail(d) = (f.a * f.b).transpose();
          t.bottomRightCorner(d, d) = f.b * f.b.transpose();
          t.bottomRightCorner(d, d).diagonal() += f.c.cwiseProduct(f.c);
          return SpdPoint(SymmetricMatrix(t));
        } else {
          return SpdPoint(SymmetricMatrix(
              kron_dense(f.K * f.K.transpose(), f.C * f.C.transpose())));
        }
      },
      factor);
}

Chart make_chart(ChartKind kind, FactorState reference) {
  // Variant/kind agreement first: coord_shape throws bad_variant_access
  // otherwise, which we convert into a usable message.
  const bool matches = std::visit(
      [&](const auto& f) -> bool {
        using T = std::decay_t<decltype(f)>;
        switch (kind) {
          case ChartKind::dense_sym_A: return std::is_same_v<T, DenseFactorA>;
          case ChartKind::dense_sym_B: return std::is_same_v<T, DenseFactorB>;
          case ChartKind::dense_sym_C: return std::is_same_v<T, DenseFactorC>;
          case ChartKind::triangular_A:
            return std::is_same_v<T, TriangularFactor>;
          case ChartKind::gaussian_augmented:
            return std::is_same_v<T, GaussianFactor>;
          case ChartKind::rank_one_arrow: return std::is_same_v<T, ArrowFactor>;
          case ChartKind::kronecker_block_K:
          case ChartKind::kronecker_block_C:
            return std::is_same_v<T, KronFactor>;
        }
        return false;
      },
      reference);
  if (!matches) {
    fail(std::string("factor variant does not match chart kind ") +
         std::string(chart_kind_name(kind)));
  }

  CoordElement mask = SymmetricMatrix::Zero(1);
  switch (kind) {
    case ChartKind::dense_sym_A: {
      const auto& f = std::get<DenseFactorA>(reference);
      require_invertible(f.A, "dense factor A");
      mask = half_ones(f.A.rows(), 0.5);
      break;
    }
    case ChartKind::dense_sym_B: {
      const auto& f = std::get<DenseFactorB>(reference);
      require_invertible(f.B, "dense factor B");
      mask = half_ones(f.B.rows(), 0.5);
      break;
    }
    case ChartKind::dense_sym_C: {
      const auto& f = std::get<DenseFactorC>(reference);
      require_invertible(f.C, "dense factor C");
      mask = half_ones(f.C.rows(), 0.5);
      break;
    }
    case ChartKind::triangular_A: {
      const auto& f = std::get<TriangularFactor>(reference);
      require_finite(f.A.mat(), "triangular factor");
      for (Eigen::Index i = 0; i < f.A.dim(); ++i) {
        if (!(f.A(i, i) > 0.0)) fail("triangular factor needs a positive diagonal");
      }
      mask = weighted_tril(f.A.dim(), 0.5, kInvSqrt2);
      break;
    }
    case ChartKind::gaussian_augmented: {
      const auto& f = std::get<GaussianFactor>(reference);
      if (f.L.rows() != f.mu.size()) fail("gaussian factor L/mu size mismatch");
      require_invertible(f.L, "gaussian covariance factor");
      if (!f.mu.allFinite()) fail("gaussian mean contains non-finite values");
      const Eigen::Index d = f.mu.size();
      mask = GaussianCoord{half_ones(d, 0.5), Vector::Constant(d, kInvSqrt2)};
      break;
    }
    case ChartKind::rank_one_arrow: {
      const auto& f = std::get<ArrowFactor>(reference);
      if (f.b.size() != f.c.size()) fail("arrow factor b/c size mismatch");
      if (!std::isfinite(f.a) || !f.b.allFinite() || !f.c.allFinite()) {
        fail("arrow factor contains non-finite values");
      }
      if (!(f.a > 0.0) || !(f.c.minCoeff() > 0.0)) {
        fail("arrow factor needs a > 0 and c > 0");
      }
      const Eigen::Index d = f.b.size();
      mask = ArrowCoord{0.5, Vector::Constant(d, kInvSqrt2),
                        Vector::Constant(d, 0.5)};
      break;
    }
    case ChartKind::kronecker_block_K: {
      const auto& f = std::get<KronFactor>(reference);
      require_invertible(f.K, "Kronecker factor K");
      require_invertible(f.C, "Kronecker factor C");
      const double s = 0.5 / std::sqrt(static_cast<double>(f.C.rows()));
      mask = half_ones(f.K.rows(), s);
      break;
    }
    case ChartKind::kronecker_block_C: {
      const auto& f = std::get<KronFactor>(reference);
      require_invertible(f.K, "Kronecker factor K");
      require_invertible(f.C, "Kronecker factor C");
      const double s = 0.5 / std::sqrt(static_cast<double>(f.K.rows()));
      mask = half_ones(f.C.rows(), s);
      break;
    }
  }
  return Chart{kind, std::move(reference), std::move(mask)};
}

FactorState chart_map(const Chart& chart, const CoordElement& eta,
                      TruncationMode mode) {
  check_coord(coord_shape(chart.kind, chart.reference), eta, "eta");

  switch (chart.kind) {
    case ChartKind::dense_sym_A: {
      const auto& f = std::get<DenseFactorA>(chart.reference);
      const DenseMatrix n = std::get<SymmetricMatrix>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<SymmetricMatrix>(eta).mat());
      return DenseFactorA{f.A * mat_exp(n, mode)};
    }
    case ChartKind::dense_sym_B: {
      const auto& f = std::get<DenseFactorB>(chart.reference);
      const DenseMatrix n = std::get<SymmetricMatrix>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<SymmetricMatrix>(eta).mat());
      return DenseFactorB{f.B * mat_exp(-n, mode)};
    }
    case ChartKind::dense_sym_C: {
      const auto& f = std::get<DenseFactorC>(chart.reference);
      const DenseMatrix n = std::get<SymmetricMatrix>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<SymmetricMatrix>(eta).mat());
      return DenseFactorC{mat_exp(n, mode) * f.C};
    }
    case ChartKind::triangular_A: {
      const auto& f = std::get<TriangularFactor>(chart.reference);
      const DenseMatrix n = std::get<LowerTriangular>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<LowerTriangular>(eta).mat());
      return TriangularFactor{LowerTriangular(f.A.mat() * mat_exp(n, mode))};
    }
    case ChartKind::gaussian_augmented: {
      const auto& f = std::get<GaussianFactor>(chart.reference);
      const auto& d = std::get<GaussianCoord>(chart.scaling);
      const auto& e = std::get<GaussianCoord>(eta);
      const DenseMatrix n = d.eta_L.mat().cwiseProduct(e.eta_L.mat());
      // The mean block is exact for every truncation mode: the augmented
      // exponential is affine in eta_mu.
      return GaussianFactor{f.L * mat_exp(n, mode),
                            f.mu + f.L * d.eta_mu.cwiseProduct(e.eta_mu)};
    }
    case ChartKind::rank_one_arrow: {
      const auto& f = std::get<ArrowFactor>(chart.reference);
      const auto& d = std::get<ArrowCoord>(chart.scaling);
      const auto& e = std::get<ArrowCoord>(eta);
      const ArrowTriple n{d.eta_a * e.eta_a, d.eta_b.cwiseProduct(e.eta_b),
                          d.eta_c.cwiseProduct(e.eta_c)};
      const ArrowTriple ex = arrow_exp(n, mode);
      // Arrow-times-arrow product, staying in the pattern.
      return ArrowFactor{f.a * ex.x, ex.x * f.b + f.c.cwiseProduct(ex.v),
                         f.c.cwiseProduct(ex.w)};
    }
    case ChartKind::kronecker_block_K: {
      const auto& f = std::get<KronFactor>(chart.reference);
      const DenseMatrix n = std::get<SymmetricMatrix>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<SymmetricMatrix>(eta).mat());
      return KronFactor{f.K * mat_exp(n, mode), f.C};
    }
    case ChartKind::kronecker_block_C: {
      const auto& f = std::get<KronFactor>(chart.reference);
      const DenseMatrix n = std::get<SymmetricMatrix>(chart.scaling)
                                .mat()
                                .cwiseProduct(std::get<SymmetricMatrix>(eta).mat());
      return KronFactor{f.K, f.C * mat_exp(n, mode)};
    }
  }
  fail("unknown chart kind");
}

namespace {

// Shared tail of the gaussian pullback once the block pieces are in hand.
CoordElement pull_gaussian(const GaussianFactor& f, const SymmetricMatrix& g1,
                           const Vector& g2) {
  if (g1.dim() != f.mu.size() || g2.size() != f.mu.size()) {
    fail("gaussian gradient pieces have the wrong dimension");
  }
  const DenseMatrix lt = f.L.transpose();
  return GaussianCoord{
      SymmetricMatrix(lt * g1.mat() * f.L),
      std::sqrt(2.0) * (lt * (g1.mat() * f.mu + g2))};
}

// Arrow pullback from the four gradient pieces; the weights are the chart
// mask folded into the chain rule (grad_eta = 2·D∘(A0ᵀ g A0) on the pattern).
CoordElement pull_arrow(const ArrowFactor& f, double g1, const Vector& g2,
                        const Vector& fv, const Vector& g3_diag) {
  const Eigen::Index d = f.b.size();
  if (g2.size() != d || fv.size() != d || g3_diag.size() != d) {
    fail("arrow gradient pieces have the wrong dimension");
  }
  ArrowCoord out{0.0, Vector(d), Vector(d)};
  out.eta_a = f.a * (f.a * g1 + 2.0 * g2.dot(f.b)) + f.b.dot(fv);
  out.eta_b = std::sqrt(2.0) * f.c.cwiseProduct(f.a * g2 + fv);
  out.eta_c = f.c.cwiseProduct(f.c).cwiseProduct(g3_diag);
  return out;
}

}  // namespace

CoordElement pullback_grad(const Chart& chart, const GradData& g_tau) {
  switch (chart.kind) {
    case ChartKind::dense_sym_A: {
      const auto* g = std::get_if<FullGrad>(&g_tau);
      if (!g) fail("dense-sym-A expects a full symmetric gradient");
      const auto& a = std::get<DenseFactorA>(chart.reference).A;
      if (g->g.dim() != a.rows()) fail("gradient dimension mismatch");
      return SymmetricMatrix(a.transpose() * g->g.mat() * a);
    }
    case ChartKind::dense_sym_B: {
      const auto* g = std::get_if<FullGrad>(&g_tau);
      if (!g) fail("dense-sym-B expects a full symmetric gradient");
      const auto& b = std::get<DenseFactorB>(chart.reference).B;
      if (g->g.dim() != b.rows()) fail("gradient dimension mismatch");
      const DenseMatrix y = solve_lu(b, g->g.mat());       // B⁻¹ g
      const DenseMatrix z = solve_lu(b, y.transpose());    // B⁻¹ g B⁻ᵀ
      return SymmetricMatrix(z);
    }
    case ChartKind::dense_sym_C: {
      const auto* g = std::get_if<FullGrad>(&g_tau);
      if (!g) fail("dense-sym-C expects a full symmetric gradient");
      const auto& c = std::get<DenseFactorC>(chart.reference).C;
      if (g->g.dim() != c.rows()) fail("gradient dimension mismatch");
      return SymmetricMatrix(c * g->g.mat() * c.transpose());
    }
    case ChartKind::triangular_A: {
      const auto* g = std::get_if<FullGrad>(&g_tau);
      if (!g) fail("triangular-A expects a full symmetric gradient");
      const auto& a = std::get<TriangularFactor>(chart.reference).A;
      if (g->g.dim() != a.dim()) fail("gradient dimension mismatch");
      const DenseMatrix m = a.mat().transpose() * g->g.mat() * a.mat();
      const DenseMatrix two_d =
          2.0 * std::get<LowerTriangular>(chart.scaling).mat();
      return LowerTriangular(two_d.cwiseProduct(m));
    }
    case ChartKind::gaussian_augmented: {
      const auto& f = std::get<GaussianFactor>(chart.reference);
      if (const auto* g = std::get_if<GaussianGrad>(&g_tau)) {
        return pull_gaussian(f, g->g1, g->g2);
      }
      if (const auto* g = std::get_if<FullGrad>(&g_tau)) {
        const Eigen::Index d = f.mu.size();
        if (g->g.dim() != d + 1) fail("gradient dimension mismatch");
        return pull_gaussian(f, SymmetricMatrix(g->g.mat().topLeftCorner(d, d)),
                             g->g.mat().col(d).head(d));
      }
      fail("gaussian-augmented expects block pieces or a full gradient");
    }
    case ChartKind::rank_one_arrow: {
      const auto& f = std::get<ArrowFactor>(chart.reference);
      if (const auto* g = std::get_if<ArrowGrad>(&g_tau)) {
        return pull_arrow(f, g->g1, g->g2, g->f, g->g3_diag);
      }
      if (const auto* g = std::get_if<FullGrad>(&g_tau)) {
        const Eigen::Index d = f.b.size();
        if (g->g.dim() != d + 1) fail("gradient dimension mismatch");
        const auto g3 = g->g.mat().bottomRightCorner(d, d);
        return pull_arrow(f, g->g.mat()(0, 0), g->g.mat().col(0).tail(d),
                          g3 * f.b, g3.diagonal());
      }
      fail("rank-one-arrow expects arrow pieces or a full gradient");
    }
    case ChartKind::kronecker_block_K: {
      const auto* g = std::get_if<KronGrad>(&g_tau);
      if (!g) fail("kronecker charts expect curvature-factor gradient data");
      const auto& f = std::get<KronFactor>(chart.reference);
      if (g->mu_AA.dim() != f.K.rows() || g->mu_GG.dim() != f.C.rows()) {
        fail("curvature factor dimension mismatch");
      }
      const double s = std::get<SymmetricMatrix>(chart.scaling)(0, 0);
      const Eigen::Index p = f.K.rows();
      const double d = static_cast<double>(f.C.rows());
      const DenseMatrix hk = f.K.transpose() * g->mu_AA.mat() * f.K;
      const DenseMatrix hc = f.C.transpose() * g->mu_GG.mat() * f.C;
      const double c2 = g->lambda * f.C.squaredNorm();
      return SymmetricMatrix(
          s * (hc.trace() * hk + c2 * (f.K.transpose() * f.K) -
               d * DenseMatrix::Identity(p, p)));
    }
    case ChartKind::kronecker_block_C: {
      const auto* g = std::get_if<KronGrad>(&g_tau);
      if (!g) fail("kronecker charts expect curvature-factor gradient data");
      const auto& f = std::get<KronFactor>(chart.reference);
      if (g->mu_AA.dim() != f.K.rows() || g->mu_GG.dim() != f.C.rows()) {
        fail("curvature factor dimension mismatch");
      }
      const double s = std::get<SymmetricMatrix>(chart.scaling)(0, 0);
      const Eigen::Index dd = f.C.rows();
      const double p = static_cast<double>(f.K.rows());
      const DenseMatrix hk = f.K.transpose() * g->mu_AA.mat() * f.K;
      const DenseMatrix hc = f.C.transpose() * g->mu_GG.mat() * f.C;
      const double k2 = g->lambda * f.K.squaredNorm();
      return SymmetricMatrix(
          s * (hk.trace() * hc + k2 * (f.C.transpose() * f.C) -
               p * DenseMatrix::Identity(dd, dd)));
    }
  }
  fail("unknown chart kind");
}

CoordElement momentum_transform(const Chart& chart_old, const Chart& chart_new,
                                const CoordElement& m,
                                TransformExactness exactness) {
  if (chart_old.kind != chart_new.kind) {
    fail("momentum transform needs charts of the same kind");
  }
  check_coord(coord_shape(chart_old.kind, chart_old.reference), m, "momentum");

  switch (chart_old.kind) {
    case ChartKind::dense_sym_A:
    case ChartKind::dense_sym_B:
    case ChartKind::dense_sym_C:
    case ChartKind::kronecker_block_K:
    case ChartKind::kronecker_block_C:
      // Symmetric coordinate space: the transform's Jacobian is the identity
      // and the commutator correction vanishes identically.
      return m;
    case ChartKind::triangular_A: {
      if (exactness == TransformExactness::first_order) return m;
      const auto& mm = std::get<LowerTriangular>(m);
      const DenseMatrix d = std::get<LowerTriangular>(chart_old.scaling).mat();
      const Eigen::Index k = mm.dim();
      const DenseMatrix x = d.cwiseProduct(mm.mat());  // D∘m
      DenseMatrix q = DenseMatrix::Zero(k, k);         // m⊘D on the support
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) q(i, j) = mm(i, j) / d(i, j);
      }
      const DenseMatrix p = (-x).transpose();
      const DenseMatrix bracket = p * q - q * p;
      return LowerTriangular(mm.mat() + 0.5 * d.cwiseProduct(bracket));
    }
    case ChartKind::gaussian_augmented:
    case ChartKind::rank_one_arrow:
      if (exactness == TransformExactness::first_order) return m;
      fail("corrected momentum transform is provided for matrix-coordinate "
           "charts only");
  }
  fail("unknown chart kind");
}

CoordElement chart_inverse(const Chart& chart, const SpdPoint& tau) {
  if (chart.kind != ChartKind::dense_sym_A) {
    fail("chart_inverse is available for the dense-sym-A chart only");
  }
  const auto& a = std::get<DenseFactorA>(chart.reference).A;
  if (tau.dim() != a.rows()) fail("tau dimension mismatch");
  const DenseMatrix w = solve_lu(a, tau.mat());           // A0⁻¹ tau
  const DenseMatrix x = solve_lu(a, w.transpose());       // A0⁻¹ tau A0⁻ᵀ
  const SymmetricMatrix lg = mat_log_spd(SymmetricMatrix(x));
  // Logm recovers 2·D∘eta; divide the mask back out.
  const DenseMatrix two_d =
      2.0 * std::get<SymmetricMatrix>(chart.scaling).mat();
  return SymmetricMatrix(lg.mat().cwiseQuotient(two_d));
}

// ---------------------------------------------------------------------------
// Coordinate vector-space helpers.

CoordElement coord_zero(const Chart& chart) {
  const CoordShape shape = coord_shape(chart.kind, chart.reference);
  switch (shape.tag) {
    case CoordShape::Tag::symmetric: return SymmetricMatrix::Zero(shape.dim);
    case CoordShape::Tag::triangular: return LowerTriangular::Zero(shape.dim);
    case CoordShape::Tag::gaussian:
      return GaussianCoord{SymmetricMatrix::Zero(shape.dim),
                           Vector::Zero(shape.dim)};
    case CoordShape::Tag::arrow:
      return ArrowCoord{0.0, Vector::Zero(shape.dim), Vector::Zero(shape.dim)};
  }
  fail("unknown coordinate shape");
}

CoordElement coord_scale(double a, const CoordElement& x) {
  return std::visit(
      [a](const auto& e) -> CoordElement {
        using T = std::decay_t<decltype(e)>;
        if constexpr (std::is_same_v<T, SymmetricMatrix>) {
          return SymmetricMatrix(a * e.mat());
        } else if constexpr (std::is_same_v<T, LowerTriangular>) {
          return LowerTriangular(a * e.mat());
        } else if constexpr (std::is_same_v<T, GaussianCoord>) {
          return GaussianCoord{SymmetricMatrix(a * e.eta_L.mat()), a * e.eta_mu};
        } else {
          return ArrowCoord{a * e.eta_a, a * e.eta_b, a * e.eta_c};
        }
      },
      x);
}

CoordElement coord_add(double a, const CoordElement& x, double b,
                       const CoordElement& y) {
  if (x.index() != y.index()) fail("coordinate variants do not match");
  return std::visit(
      [&](const auto& ex) -> CoordElement {
        using T = std::decay_t<decltype(ex)>;
        const auto& ey = std::get<T>(y);
        if constexpr (std::is_same_v<T, SymmetricMatrix>) {
          return SymmetricMatrix(a * ex.mat() + b * ey.mat());
        } else if constexpr (std::is_same_v<T, LowerTriangular>) {
          return LowerTriangular(a * ex.mat() + b * ey.mat());
        } else if constexpr (std::is_same_v<T, GaussianCoord>) {
          return GaussianCoord{
              SymmetricMatrix(a * ex.eta_L.mat() + b * ey.eta_L.mat()),
              a * ex.eta_mu + b * ey.eta_mu};
        } else {
          return ArrowCoord{a * ex.eta_a + b * ey.eta_a,
                            a * ex.eta_b + b * ey.eta_b,
                            a * ex.eta_c + b * ey.eta_c};
        }
      },
      x);
}

double coord_dot(const CoordElement& x, const CoordElement& y) {
  if (x.index() != y.index()) fail("coordinate variants do not match");
  return std::visit(
      [&](const auto& ex) -> double {
        using T = std::decay_t<decltype(ex)>;
        const auto& ey = std::get<T>(y);
        if constexpr (std::is_same_v<T, SymmetricMatrix> ||
                      std::is_same_v<T, LowerTriangular>) {
          return ex.mat().cwiseProduct(ey.mat()).sum();
        } else if constexpr (std::is_same_v<T, GaussianCoord>) {
          return ex.eta_L.mat().cwiseProduct(ey.eta_L.mat()).sum() +
                 ex.eta_mu.dot(ey.eta_mu);
        } else {
          return ex.eta_a * ey.eta_a + ex.eta_b.dot(ey.eta_b) +
                 ex.eta_c.dot(ey.eta_c);
        }
      },
      x);
}

double coord_norm(const CoordElement& x) { return std::sqrt(coord_dot(x, x)); }

std::vector<CoordElement> subspace_basis(const Chart& chart) {
  const CoordShape shape = coord_shape(chart.kind, chart.reference);
  const Eigen::Index k = shape.dim;
  std::vector<CoordElement> basis;

  auto symmetric_basis = [&](auto&& push) {
    for (Eigen::Index i = 0; i < k; ++i) {
      for (Eigen::Index j = i; j < k; ++j) {
        DenseMatrix e = DenseMatrix::Zero(k, k);
        if (i == j) {
          e(i, i) = 1.0;
        } else {
          e(i, j) = kInvSqrt2;
          e(j, i) = kInvSqrt2;
        }
        push(SymmetricMatrix(e));
      }
    }
  };

  switch (shape.tag) {
    case CoordShape::Tag::symmetric:
      symmetric_basis([&](SymmetricMatrix e) { basis.push_back(std::move(e)); });
      break;
    case CoordShape::Tag::triangular:
      for (Eigen::Index i = 0; i < k; ++i) {
        for (Eigen::Index j = 0; j <= i; ++j) {
          DenseMatrix e = DenseMatrix::Zero(k, k);
          e(i, j) = 1.0;
          basis.emplace_back(LowerTriangular(e));
        }
      }
      break;
    case CoordShape::Tag::gaussian: {
      symmetric_basis([&](SymmetricMatrix e) {
        basis.emplace_back(GaussianCoord{std::move(e), Vector::Zero(k)});
      });
      for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = Vector::Zero(k);
        v(i) = 1.0;
        basis.emplace_back(GaussianCoord{SymmetricMatrix::Zero(k), std::move(v)});
      }
      break;
    }
    case CoordShape::Tag::arrow: {
      basis.emplace_back(ArrowCoord{1.0, Vector::Zero(k), Vector::Zero(k)});
      for (Eigen::Index i = 0; i < k; ++i) {
        Vector v = Vector::Zero(k);
        v(i) = 1.0;
        basis.emplace_back(ArrowCoord{0.0, v, Vector::Zero(k)});
        basis.emplace_back(ArrowCoord{0.0, Vector::Zero(k), std::move(v)});
      }
      break;
    }
  }
  return basis;
}

}  // namespace spdopt
