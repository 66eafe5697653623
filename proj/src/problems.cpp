#include "spdopt/problems.hpp"

#include <cmath>
#include <fstream>
#include <sstream>
#include <stdexcept>

#include "spdopt/rng.hpp"

namespace spdopt {

namespace {

constexpr double kLog2Pi = 1.8378770664093454835606594728112;

double log_det_spd(const SymmetricMatrix& s) {
  const LowerTriangular l = cholesky(s);
  double acc = 0.0;
  for (Eigen::Index i = 0; i < l.dim(); ++i) acc += std::log(l(i, i));
  return 2.0 * acc;
}

/// log|det A| for a general square factor, via its singular values. Throws
/// if the factor is numerically singular, since every downstream quantity
/// would be garbage.
double log_abs_det(const DenseMatrix& a, const char* what) {
  const Vector sv = singular_values(a);
  if (sv(sv.size() - 1) <= kSpdRelTol * sv(0)) {
    throw std::domain_error(std::string(what) +
                            " factor is numerically singular");
  }
  return sv.array().log().sum();
}

}  // namespace

TauGradFn full_grad_fn(const SpdProblem& problem) {
  return [problem](const FactorState& factor) -> GradData {
    return FullGrad{problem.grad_tau(represent_tau(factor))};
  };
}

CurvatureProblem as_curvature(const EuclideanProblem& problem) {
  CurvatureProblem view;
  view.grad = problem.grad;
  view.hess_vec = problem.hess_vec;
  view.hess_diag = problem.hess_diag;
  if (problem.dim <= 64 && problem.hess_mat) {
    auto hess_mat = problem.hess_mat;
    const Eigen::Index n = problem.dim;
    view.hess = [hess_mat, n](const Vector& mu) {
      return SymmetricMatrix(hess_mat(mu, DenseMatrix::Identity(n, n)));
    };
  }
  return view;
}

SpdProblem logdet_problem(const SpdPoint& a_target) {
  SpdProblem problem;
  problem.dim = a_target.dim();
  const SymmetricMatrix a = a_target.sym();
  problem.loss = [a](const SpdPoint& tau) {
    return (a.mat().cwiseProduct(tau.mat())).sum() - log_det_spd(tau.sym());
  };
  problem.grad_tau = [a](const SpdPoint& tau) {
    return a - inverse_spd(tau.sym());
  };
  return problem;
}

SpdProblem metric_nearness_problem(const SymmetricMatrix& m_target) {
  SpdProblem problem;
  problem.dim = m_target.dim();
  problem.loss = [m_target](const SpdPoint& tau) {
    return 0.5 * (tau.mat() - m_target.mat()).squaredNorm();
  };
  problem.grad_tau = [m_target](const SpdPoint& tau) {
    return tau.sym() - m_target;
  };
  return problem;
}

GmmEval gmm_problem(const GmmSpec& spec) {
  const Eigen::Index n = spec.data.rows();
  const Eigen::Index d = spec.data.cols();
  const Eigen::Index k = static_cast<Eigen::Index>(spec.components.size());
  if (n == 0) {
    throw std::invalid_argument("mixture evaluation needs at least one sample");
  }
  if (k == 0) {
    throw std::invalid_argument("mixture needs at least one component");
  }
  if (spec.logits.size() != k) {
    throw std::invalid_argument(
        "mixture logit count does not match the component count");
  }
  for (const GaussianFactor& c : spec.components) {
    if (c.L.rows() != d || c.L.cols() != d || c.mu.size() != d) {
      throw std::invalid_argument(
          "component factor dimensions do not match the data width");
    }
  }

  // Mixture weights from the logits.
  Vector log_pi = (spec.logits.array() - spec.logits.maxCoeff()).matrix();
  log_pi.array() -= std::log(log_pi.array().exp().sum());
  const Vector pi = log_pi.array().exp().matrix();

  // Per-component whitened residuals y_i = L^{-1}(x_i - mu) and log
  // densities of the augmented Gaussian: the factored identities
  // x~^T tau^{-1} x~ = |y|^2 + 1 and det tau = (det L)^2 keep everything in
  // solves against L.
  std::vector<DenseMatrix> whitened(spec.components.size());
  DenseMatrix log_joint(n, k);  // log pi_c + log N(x~_i | 0, tau_c)
  for (Eigen::Index c = 0; c < k; ++c) {
    const GaussianFactor& comp = spec.components[c];
    const double half_log_det = log_abs_det(comp.L, "mixture component");
    DenseMatrix centered = spec.data.transpose();
    centered.colwise() -= comp.mu;
    whitened[c] = solve_lu(comp.L, centered);
    const Vector sq = whitened[c].colwise().squaredNorm().transpose();
    log_joint.col(c) =
        (-0.5 * (sq.array() + 1.0) - half_log_det -
         0.5 * static_cast<double>(d + 1) * kLog2Pi + log_pi(c))
            .matrix();
  }

  GmmEval eval;
  eval.responsibilities.resize(n, k);
  double total = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const double m = log_joint.row(i).maxCoeff();
    const double lse =
        m + std::log((log_joint.row(i).array() - m).exp().sum());
    total += lse;
    eval.responsibilities.row(i) =
        (log_joint.row(i).array() - lse).exp().matrix();
  }
  eval.nll = -total / static_cast<double>(n);

  eval.logit_grad =
      pi - eval.responsibilities.colwise().mean().transpose().matrix();

  // Gradient of the loss with respect to each tau_c, assembled in whitened
  // coordinates first: C = -(1/2N) sum_i r_ic (y_i y_i^T - I). The two
  // blocks the gaussian chart consumes are then G1 = L^{-T} C L^{-1} and
  // g2 = L^{-T} v - G1 mu with v = -(1/2N) sum_i r_ic y_i.
  eval.component_grads.reserve(spec.components.size());
  for (Eigen::Index c = 0; c < k; ++c) {
    const GaussianFactor& comp = spec.components[c];
    const Vector r = eval.responsibilities.col(c);
    const double scale = -0.5 / static_cast<double>(n);
    const DenseMatrix& y = whitened[c];
    DenseMatrix cmat = y * r.asDiagonal() * y.transpose();
    cmat -= r.sum() * DenseMatrix::Identity(d, d);
    cmat *= scale;
    const DenseMatrix lt = comp.L.transpose();
    const SymmetricMatrix g1(solve_lu(lt, solve_lu(lt, cmat).transpose()));
    const Vector v = scale * (y * r);
    const Vector g2 = solve_lu(lt, v) - g1.mat() * comp.mu;
    eval.component_grads.push_back(GaussianGrad{g1, g2});
  }
  return eval;
}

EuclideanProblem rosenbrock_problem(Eigen::Index n) {
  if (n < 2) {
    throw std::invalid_argument(
        "chained rosenbrock needs at least two coordinates");
  }
  EuclideanProblem problem;
  problem.dim = n;
  problem.loss = [n](const Vector& x) {
    double acc = 0.0;
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double gap = x(i + 1) - x(i) * x(i);
      const double off = 1.0 - x(i);
      acc += 100.0 * gap * gap + off * off;
    }
    return acc;
  };
  problem.grad = [n](const Vector& x) {
    Vector g = Vector::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double gap = x(i + 1) - x(i) * x(i);
      g(i) += -400.0 * x(i) * gap - 2.0 * (1.0 - x(i));
      g(i + 1) += 200.0 * gap;
    }
    return g;
  };
  // The Hessian is tridiagonal: both oracles walk the band and never touch
  // an n x n matrix.
  problem.hess_vec = [n](const Vector& x, const Vector& v) {
    Vector out = Vector::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      const double dii = 1200.0 * x(i) * x(i) - 400.0 * x(i + 1) + 2.0;
      const double off = -400.0 * x(i);
      out(i) += dii * v(i) + off * v(i + 1);
      out(i + 1) += off * v(i) + 200.0 * v(i + 1);
    }
    return out;
  };
  problem.hess_diag = [n](const Vector& x) {
    Vector diag = Vector::Zero(n);
    for (Eigen::Index i = 0; i + 1 < n; ++i) {
      diag(i) += 1200.0 * x(i) * x(i) - 400.0 * x(i + 1) + 2.0;
      diag(i + 1) += 200.0;
    }
    return diag;
  };
  problem.hess_mat = [problem](const Vector& x, const DenseMatrix& m) {
    DenseMatrix out(m.rows(), m.cols());
    for (Eigen::Index j = 0; j < m.cols(); ++j) {
      out.col(j) = problem.hess_vec(x, m.col(j));
    }
    return out;
  };
  return problem;
}

MlpModel make_mlp(const std::vector<Eigen::Index>& layer_dims,
                  std::uint64_t seed, double scale) {
  if (layer_dims.size() < 2) {
    throw std::invalid_argument("an mlp needs at least input and output dims");
  }
  for (Eigen::Index dim : layer_dims) {
    if (dim < 1) throw std::invalid_argument("mlp layer dims must be positive");
  }
  MlpModel model;
  model.layer_dims = layer_dims;
  SplitMix64 root(seed);
  for (std::size_t l = 0; l + 1 < layer_dims.size(); ++l) {
    SplitMix64 rng = root.split(static_cast<std::uint64_t>(l));
    const Eigen::Index rows = layer_dims[l + 1];
    const Eigen::Index cols = layer_dims[l];
    DenseMatrix w(rows, cols);
    const double s = scale / std::sqrt(static_cast<double>(cols));
    for (Eigen::Index i = 0; i < rows; ++i) {
      for (Eigen::Index j = 0; j < cols; ++j) w(i, j) = s * rng.normal();
    }
    model.weights.push_back(std::move(w));
  }
  return model;
}

MlpEval mlp_forward_backward(const MlpModel& model, const DenseMatrix& inputs,
                             const std::vector<int>& labels) {
  const std::size_t depth = model.weights.size();
  if (depth == 0 || model.layer_dims.size() != depth + 1) {
    throw std::invalid_argument("mlp model has no layers");
  }
  const Eigen::Index n = inputs.rows();
  if (n == 0) throw std::invalid_argument("mlp batch is empty");
  if (inputs.cols() != model.layer_dims.front()) {
    throw std::invalid_argument("mlp batch width does not match the input dim");
  }
  if (static_cast<Eigen::Index>(labels.size()) != n) {
    throw std::invalid_argument("mlp label count does not match the batch");
  }
  const Eigen::Index classes = model.layer_dims.back();
  for (std::size_t l = 0; l < depth; ++l) {
    if (model.weights[l].rows() != model.layer_dims[l + 1] ||
        model.weights[l].cols() != model.layer_dims[l]) {
      throw std::invalid_argument("mlp weight shape does not match layer dims");
    }
    if (!model.weights[l].allFinite()) {
      throw std::invalid_argument("mlp weights contain non-finite entries");
    }
  }
  for (int label : labels) {
    if (label < 0 || label >= classes) {
      throw std::invalid_argument("mlp label out of range");
    }
  }

  // Forward pass, samples as columns. Hidden layers are tanh; the last
  // layer stays linear and feeds the softmax cross-entropy.
  std::vector<DenseMatrix> acts(depth + 1);
  acts[0] = inputs.transpose();
  for (std::size_t l = 0; l < depth; ++l) {
    DenseMatrix z = model.weights[l] * acts[l];
    if (l + 1 < depth) {
      acts[l + 1] = z.array().tanh().matrix();
    } else {
      acts[l + 1] = std::move(z);
    }
  }

  MlpEval eval;
  const double inv_n = 1.0 / static_cast<double>(n);

  // Per-sample pre-activation gradients of the cross-entropy at the output:
  // softmax minus one-hot. The 1/N of the batch mean is applied to the
  // weight gradients, not here, so the factor statistics below are means of
  // per-sample outer products.
  DenseMatrix delta(classes, n);
  double loss = 0.0;
  for (Eigen::Index i = 0; i < n; ++i) {
    const Vector z = acts[depth].col(i);
    const double m = z.maxCoeff();
    const double lse = m + std::log((z.array() - m).exp().sum());
    loss += lse - z(labels[static_cast<std::size_t>(i)]);
    delta.col(i) = (z.array() - lse).exp().matrix();
    delta(labels[static_cast<std::size_t>(i)], i) -= 1.0;
  }
  eval.loss = loss * inv_n;

  eval.grads.resize(depth);
  eval.stats.resize(depth);
  for (std::size_t l = depth; l-- > 0;) {
    eval.grads[l] = inv_n * (delta * acts[l].transpose());
    eval.stats[l].mu_aa = SymmetricMatrix(inv_n * (acts[l] * acts[l].transpose()));
    eval.stats[l].mu_gg = SymmetricMatrix(inv_n * (delta * delta.transpose()));
    if (l > 0) {
      const DenseMatrix back = model.weights[l].transpose() * delta;
      delta = (back.array() * (1.0 - acts[l].array().square())).matrix();
    }
  }
  return eval;
}

Dataset synth_data(const SynthSpec& spec) {
  if (spec.count < 1 || spec.dim < 1) {
    throw std::invalid_argument("dataset sizes must be positive");
  }
  Dataset out;
  out.features.resize(spec.count, spec.dim);
  SplitMix64 rng(spec.seed);
  const double inv_sqrt_d = 1.0 / std::sqrt(static_cast<double>(spec.dim));

  if (spec.kind == "gmm-samples") {
    if (spec.components < 1) {
      throw std::invalid_argument("gmm-samples needs at least one component");
    }
    // Component means sit on the diagonal direction, spread symmetrically
    // around the origin; a single component sits exactly at zero.
    std::vector<double> offsets(static_cast<std::size_t>(spec.components));
    for (int c = 0; c < spec.components; ++c) {
      offsets[static_cast<std::size_t>(c)] =
          spec.components == 1
              ? 0.0
              : 3.0 * (2.0 * c - (spec.components - 1)) /
                    static_cast<double>(spec.components - 1);
    }
    for (Eigen::Index i = 0; i < spec.count; ++i) {
      const std::size_t c = static_cast<std::size_t>(
          rng.next_u64() % static_cast<std::uint64_t>(spec.components));
      const double center = offsets[c] * inv_sqrt_d;
      for (Eigen::Index j = 0; j < spec.dim; ++j) {
        out.features(i, j) = center + rng.normal();
      }
    }
    return out;
  }

  if (spec.kind == "two-class-blobs") {
    const double offset = 0.5 * spec.separation * inv_sqrt_d;
    out.labels.resize(static_cast<std::size_t>(spec.count));
    for (Eigen::Index i = 0; i < spec.count; ++i) {
      const int label = static_cast<int>(i % 2);  // balanced by construction
      out.labels[static_cast<std::size_t>(i)] = label;
      const double center = label == 0 ? offset : -offset;
      for (Eigen::Index j = 0; j < spec.dim; ++j) {
        out.features(i, j) = center + rng.normal();
      }
    }
    return out;
  }

  throw std::invalid_argument("unknown dataset kind: " + spec.kind);
}

DenseMatrix load_samples(const std::string& path) {
  std::ifstream in(path);
  if (!in) throw std::runtime_error("cannot open dataset file: " + path);
  std::vector<std::vector<double>> rows;
  std::string line;
  while (std::getline(in, line)) {
    std::istringstream fields(line);
    std::vector<double> row;
    std::string token;
    while (fields >> token) {
      std::size_t used = 0;
      double value = 0.0;
      try {
        value = std::stod(token, &used);
      } catch (const std::exception&) {
        used = 0;
      }
      if (used != token.size()) {
        throw std::runtime_error("non-numeric token in dataset file: " + token);
      }
      row.push_back(value);
    }
    if (row.empty()) continue;  // blank line
    if (!rows.empty() && row.size() != rows.front().size()) {
      throw std::runtime_error("ragged row in dataset file: " + path);
    }
    rows.push_back(std::move(row));
  }
  if (rows.empty()) throw std::runtime_error("empty dataset file: " + path);
  DenseMatrix out(static_cast<Eigen::Index>(rows.size()),
                  static_cast<Eigen::Index>(rows.front().size()));
  for (Eigen::Index i = 0; i < out.rows(); ++i) {
    for (Eigen::Index j = 0; j < out.cols(); ++j) {
      out(i, j) = rows[static_cast<std::size_t>(i)][static_cast<std::size_t>(j)];
    }
  }
  return out;
}

}  // namespace spdopt
