#include "spdopt/run.hpp"

#include <algorithm>
#include <chrono>
#include <cmath>
#include <cstdio>
#include <fstream>
#include <functional>
#include <limits>
#include <memory>
#include <stdexcept>
#include <utility>
#include <variant>

#include <Eigen/QR>

#include "json.hpp"

#include "spdopt/audit.hpp"
#include "spdopt/rng.hpp"

namespace spdopt {

namespace {

[[noreturn]] void fail(const std::string& what) {
  throw std::invalid_argument(what);
}

TruncationMode parse_truncation(const std::string& name) {
  if (name == "exact") return TruncationMode::exact;
  if (name == "linear") return TruncationMode::linear;
  if (name == "quadratic") return TruncationMode::quadratic;
  fail("unknown truncation mode '" + name + "'");
}

std::string fmt(double v) {
  char buf[64];
  std::snprintf(buf, sizeof buf, "%.17g", v);
  return buf;
}

constexpr const char* kCsvHeader = "iter,loss,grad_norm,min_eig,elapsed_ms\n";

void append_row(std::string& csv, const RunRow& r) {
  csv += std::to_string(r.iter);
  csv += ',';
  csv += fmt(r.loss);
  csv += ',';
  csv += fmt(r.grad_norm);
  csv += ',';
  if (r.has_min_eig) csv += fmt(r.min_eig);
  csv += ',';
  if (r.has_elapsed) csv += fmt(r.elapsed_ms);
  csv += '\n';
}

void write_file(const std::string& path, const std::string& bytes) {
  std::ofstream out(path, std::ios::binary | std::ios::trunc);
  if (!out) throw std::runtime_error("cannot open '" + path + "' for writing");
  out.write(bytes.data(), static_cast<std::streamsize>(bytes.size()));
  if (!out) throw std::runtime_error("short write to '" + path + "'");
}

void check_finite(double loss, int iter) {
  if (!std::isfinite(loss)) {
    throw std::runtime_error("loss became non-finite at iteration " +
                             std::to_string(iter));
  }
}

/// Wall-clock in milliseconds since construction; only read when timing is on.
class Stopwatch {
 public:
  double ms() const {
    return std::chrono::duration<double, std::milli>(
               std::chrono::steady_clock::now() - start_)
        .count();
  }

 private:
  std::chrono::steady_clock::time_point start_ =
      std::chrono::steady_clock::now();
};

// --- single-matrix problems -------------------------------------------------

/// Builds a per-step closure so the logging loop below is shared by every
/// exact-map optimizer. Momentum state lives inside the closure.
std::function<SpdPoint(const SpdPoint&, const SymmetricMatrix&)>
make_manifold_stepper(const std::string& name, Eigen::Index k,
                      const SpdPoint& tau0, const StepConfig& step) {
  if (name == "rgd") {
    return [step](const SpdPoint& tau, const SymmetricMatrix& g) {
      return step_rgd(tau, EuclTangent(g), step);
    };
  }
  if (name == "riem-momentum") {
    auto st = std::make_shared<RiemMomentumState>(riem_momentum_init(k));
    return [st, step](const SpdPoint& tau, const SymmetricMatrix& g) {
      return step_riem_momentum(*st, tau, EuclTangent(g), step);
    };
  }
  if (name == "eucl-momentum") {
    auto st = std::make_shared<EuclMomentumState>(eucl_momentum_init(k));
    return [st, step](const SpdPoint& tau, const SymmetricMatrix& g) {
      return step_eucl_momentum(*st, tau, EuclTangent(g), step);
    };
  }
  if (name == "ahn") {
    auto st = std::make_shared<AhnState>(AhnState{tau0});
    return [st, step](const SpdPoint& tau, const SymmetricMatrix& g) {
      return step_ahn(*st, tau, EuclTangent(g), step);
    };
  }
  if (name == "alimisis21") {
    auto st = std::make_shared<AlimisisState>(AlimisisState{tau0});
    return [st, step](const SpdPoint& tau, const SymmetricMatrix& g) {
      return step_alimisis21(*st, tau, EuclTangent(g), step);
    };
  }
  return {};
}

FactorState identity_factor(ChartKind kind, Eigen::Index k) {
  switch (kind) {
    case ChartKind::dense_sym_A:
      return DenseFactorA{DenseMatrix::Identity(k, k)};
    case ChartKind::dense_sym_B:
      return DenseFactorB{DenseMatrix::Identity(k, k)};
    case ChartKind::dense_sym_C:
      return DenseFactorC{DenseMatrix::Identity(k, k)};
    case ChartKind::triangular_A:
      return TriangularFactor{LowerTriangular::Identity(k)};
    default:
      fail("chart '" + std::string(chart_kind_name(kind)) +
           "' does not parameterize an unconstrained SPD iterate");
  }
}

RunRecord run_spd(const RunConfig& cfg) {
  if (cfg.dim < 1) fail("matrix dimension must be positive");
  const SymmetricMatrix target =
      spd_target_matrix(cfg.dim, cfg.cond, cfg.seed);
  const SpdProblem problem = cfg.problem == "logdet"
                                 ? logdet_problem(SpdPoint(target))
                                 : metric_nearness_problem(target);
  const StepConfig step{cfg.beta, cfg.alpha, parse_truncation(cfg.truncation)};

  RunRecord rec;
  rec.csv = kCsvHeader;
  Stopwatch clock;

  auto log_row = [&](int it, const SpdPoint& tau) {
    const double loss = problem.loss(tau);
    check_finite(loss, it);
    const double me = min_eig(tau.sym());
    if (me <= 0.0) rec.invariants_ok = false;
    RunRow row;
    row.iter = it;
    row.loss = loss;
    row.grad_norm = problem.grad_tau(tau).norm();
    row.min_eig = me;
    row.has_min_eig = true;
    row.has_elapsed = cfg.timing;
    if (cfg.timing) row.elapsed_ms = clock.ms();
    rec.rows.push_back(row);
    append_row(rec.csv, row);
  };

  if (cfg.optimizer == "gnc-momentum") {
    const ChartKind kind = parse_chart_kind(cfg.chart);
    Chart chart = make_chart(kind, identity_factor(kind, cfg.dim));
    GncState state = gnc_init(chart);
    const TauGradFn grad_fn = full_grad_fn(problem);
    for (int it = 0; it <= cfg.iterations; ++it) {
      const SpdPoint tau = represent_tau(chart.reference);
      log_row(it, tau);
      if (it == cfg.iterations) break;
      chart = step_gnc_momentum(state, std::move(chart), grad_fn, step);
    }
    rec.final_tau = represent_tau(chart.reference).sym();
  } else {
    auto stepper = make_manifold_stepper(cfg.optimizer, cfg.dim,
                                         SpdPoint::Identity(cfg.dim), step);
    if (!stepper) {
      fail("optimizer '" + cfg.optimizer +
           "' does not apply to single-matrix problems");
    }
    SpdPoint tau = SpdPoint::Identity(cfg.dim);
    for (int it = 0; it <= cfg.iterations; ++it) {
      log_row(it, tau);
      if (it == cfg.iterations) break;
      tau = stepper(tau, problem.grad_tau(tau));
    }
    rec.final_tau = tau.sym();
  }
  rec.has_final_tau = true;
  rec.final_loss = rec.rows.back().loss;
  return rec;
}

// --- mixture fitting ---------------------------------------------------------

RunRecord run_gmm(const RunConfig& cfg) {
  if (cfg.optimizer != "gnc-momentum") {
    fail("the mixture problem is driven by gnc-momentum; got optimizer '" +
         cfg.optimizer + "'");
  }
  if (parse_chart_kind(cfg.chart) != ChartKind::gaussian_augmented) {
    fail("the mixture problem requires the gaussian-augmented chart; got '" +
         cfg.chart + "'");
  }
  if (cfg.components < 1) fail("mixture size must be positive");

  GmmSpec spec;
  if (!cfg.data_file.empty()) {
    spec.data = load_samples(cfg.data_file);
  } else {
    spec.data = synth_data({.kind = "gmm-samples",
                            .seed = cfg.seed,
                            .count = cfg.samples,
                            .dim = cfg.dim,
                            .components = cfg.components,
                            .separation = cfg.separation})
                    .features;
  }
  const Eigen::Index d = spec.data.cols();
  const int K = cfg.components;
  spec.logits = Vector::Zero(K);
  spec.components.resize(K);

  // All mixture components start at the unit Gaussian, so the means get a
  // small seeded offset each; otherwise every component would receive the
  // identical gradient forever.
  SplitMix64 root(cfg.seed);
  std::vector<Chart> charts;
  std::vector<GncState> states;
  charts.reserve(K);
  for (int c = 0; c < K; ++c) {
    SplitMix64 stream = root.split(1000 + static_cast<std::uint64_t>(c));
    Vector mu(d);
    for (Eigen::Index i = 0; i < d; ++i) mu(i) = 0.3 * stream.normal();
    charts.push_back(make_chart(
        ChartKind::gaussian_augmented,
        GaussianFactor{DenseMatrix::Identity(d, d), std::move(mu)}));
    states.push_back(gnc_init(charts.back()));
  }

  const StepConfig step{cfg.beta, cfg.alpha, parse_truncation(cfg.truncation)};
  RunRecord rec;
  rec.csv = kCsvHeader;
  Stopwatch clock;

  for (int it = 0; it <= cfg.iterations; ++it) {
    for (int c = 0; c < K; ++c) {
      spec.components[static_cast<std::size_t>(c)] =
          std::get<GaussianFactor>(charts[static_cast<std::size_t>(c)].reference);
    }
    const GmmEval eval = gmm_problem(spec);
    check_finite(eval.nll, it);

    double grad_sq = eval.logit_grad.squaredNorm();
    double me = std::numeric_limits<double>::infinity();
    for (int c = 0; c < K; ++c) {
      const auto& chart = charts[static_cast<std::size_t>(c)];
      const CoordElement g = pullback_grad(
          chart, eval.component_grads[static_cast<std::size_t>(c)]);
      const double gn = coord_norm(g);
      grad_sq += gn * gn;
      const SymmetricMatrix tau = represent_tau(chart.reference).sym();
      me = std::min(me, min_eig(tau));
      // The augmented corner is pinned by construction; a drifting corner
      // means the chart update broke the embedding.
      if (tau.mat()(d, d) != 1.0) rec.invariants_ok = false;
    }
    if (me <= 0.0) rec.invariants_ok = false;

    RunRow row;
    row.iter = it;
    row.loss = eval.nll;
    row.grad_norm = std::sqrt(grad_sq);
    row.min_eig = me;
    row.has_min_eig = true;
    row.has_elapsed = cfg.timing;
    if (cfg.timing) row.elapsed_ms = clock.ms();
    rec.rows.push_back(row);
    append_row(rec.csv, row);
    if (it == cfg.iterations) break;

    // Simultaneous update: every component steps against the same
    // responsibilities, then the logits take a plain gradient step.
    for (int c = 0; c < K; ++c) {
      const GaussianGrad gc = eval.component_grads[static_cast<std::size_t>(c)];
      const TauGradFn grad_fn = [gc](const FactorState&) -> GradData {
        return gc;
      };
      auto& chart = charts[static_cast<std::size_t>(c)];
      chart = step_gnc_momentum(states[static_cast<std::size_t>(c)],
                                std::move(chart), grad_fn, step);
    }
    spec.logits -= cfg.beta * eval.logit_grad;
  }

  rec.final_components.reserve(K);
  for (int c = 0; c < K; ++c) {
    rec.final_components.push_back(
        represent_tau(charts[static_cast<std::size_t>(c)].reference).sym());
  }
  rec.final_loss = rec.rows.back().loss;
  return rec;
}

// --- Euclidean benchmark -----------------------------------------------------

RunRecord run_euclidean(const RunConfig& cfg) {
  const EuclideanProblem problem = rosenbrock_problem(cfg.dim);
  const CurvatureProblem curvature = as_curvature(problem);
  const StepConfig step{cfg.beta, cfg.alpha, parse_truncation(cfg.truncation)};

  // Classic start (-1.2, 1, -1.2, 1, ...), the usual hard corner of the
  // banana valley.
  Vector x(cfg.dim);
  for (Eigen::Index i = 0; i < cfg.dim; ++i) x(i) = (i % 2 == 0) ? -1.2 : 1.0;

  std::function<void(Vector&, const Vector&)> stepper;
  if (cfg.optimizer == "adam") {
    auto st = std::make_shared<AdamState>(adam_init(cfg.dim));
    const double lr = cfg.beta;
    stepper = [st, lr](Vector& p, const Vector& g) {
      step_adam(*st, p, g, lr);
    };
  } else if (cfg.optimizer == "gd") {
    const double lr = cfg.beta;
    stepper = [lr](Vector& p, const Vector& g) { p -= lr * g; };
  } else if (cfg.optimizer == "newton") {
    auto st = std::make_shared<NewtonIterate>(
        NewtonIterate{x, DenseMatrix::Identity(cfg.dim, cfg.dim)});
    stepper = [st, curvature, step](Vector& p, const Vector&) {
      st->mu = p;
      *st = step_precond_newton(*st, curvature, step);
      p = st->mu;
    };
  } else if (cfg.optimizer == "inverse-free") {
    auto st = std::make_shared<InverseFreeIterate>(
        InverseFreeIterate{x, DenseMatrix::Identity(cfg.dim, cfg.dim)});
    stepper = [st, curvature, step](Vector& p, const Vector&) {
      st->mu = p;
      *st = step_precond_inverse_free(*st, curvature, step);
      p = st->mu;
    };
  } else if (cfg.optimizer == "inverse-free-arrow") {
    auto st = std::make_shared<ArrowIterate>(ArrowIterate{
        x, ArrowFactor{1.0, Vector::Zero(cfg.dim - 1), Vector::Ones(cfg.dim - 1)}});
    stepper = [st, curvature, step](Vector& p, const Vector&) {
      st->mu = p;
      *st = step_precond_inverse_free(*st, curvature, step);
      p = st->mu;
    };
  } else {
    fail("optimizer '" + cfg.optimizer +
         "' does not apply to Euclidean problems");
  }

  RunRecord rec;
  rec.csv = kCsvHeader;
  Stopwatch clock;
  for (int it = 0; it <= cfg.iterations; ++it) {
    const double loss = problem.loss(x);
    check_finite(loss, it);
    const Vector g = problem.grad(x);
    RunRow row;
    row.iter = it;
    row.loss = loss;
    row.grad_norm = g.norm();
    row.has_elapsed = cfg.timing;
    if (cfg.timing) row.elapsed_ms = clock.ms();
    rec.rows.push_back(row);
    append_row(rec.csv, row);
    if (it == cfg.iterations) break;
    stepper(x, g);
  }
  rec.final_x = x;
  rec.final_loss = rec.rows.back().loss;
  return rec;
}

}  // namespace

SymmetricMatrix spd_target_matrix(Eigen::Index dim, double cond,
                                  std::uint64_t seed) {
  if (dim < 1) fail("target dimension must be positive");
  if (cond < 1.0) fail("condition number must be at least 1");
  SplitMix64 rng(seed);
  DenseMatrix noise(dim, dim);
  for (Eigen::Index r = 0; r < dim; ++r) {
    for (Eigen::Index c = 0; c < dim; ++c) noise(r, c) = rng.normal();
  }
  const DenseMatrix q =
      Eigen::HouseholderQR<DenseMatrix>(noise).householderQ();
  Vector evals(dim);
  for (Eigen::Index i = 0; i < dim; ++i) {
    const double t =
        dim == 1 ? 0.0
                 : static_cast<double>(i) / static_cast<double>(dim - 1);
    evals(i) = std::exp(t * std::log(cond));
  }
  return SymmetricMatrix(q * evals.asDiagonal() * q.transpose());
}

RunRecord run(const RunConfig& cfg) {
  if (cfg.iterations < 1) fail("iteration count must be positive");
  if (!(cfg.beta > 0.0)) fail("stepsize must be positive");
  if (cfg.alpha < 0.0 || cfg.alpha >= 1.0) {
    fail("momentum weight must lie in [0, 1)");
  }

  RunRecord rec;
  if (cfg.problem == "logdet" || cfg.problem == "metric-nearness") {
    rec = run_spd(cfg);
  } else if (cfg.problem == "gmm") {
    rec = run_gmm(cfg);
  } else if (cfg.problem == "rosenbrock") {
    rec = run_euclidean(cfg);
  } else {
    fail("unknown problem '" + cfg.problem + "'");
  }

  if (!cfg.out.empty()) {
    write_file(cfg.out, rec.csv);
    write_file(cfg.out + ".json", run_summary_json(cfg, rec));
  }
  return rec;
}

PrecondConfig default_mlp_precond() {
  PrecondConfig cfg;
  cfg.warmup = {{100, 2e-4}, {500, 2e-3}};
  return cfg;
}

TrainRecord train_mlp(const TrainMlpConfig& cfg) {
  if (cfg.layers.size() < 2) fail("a network needs at least two layer sizes");
  if (cfg.iterations < 1) fail("iteration count must be positive");
  if (cfg.batch < 1) fail("batch size must be positive");
  if (cfg.dataset < cfg.batch) fail("dataset smaller than one batch");
  if (cfg.layers.back() < 2) fail("the output layer needs at least 2 classes");

  enum class Method { ifkfac, kfac, sgd };
  Method method;
  if (cfg.method == "ifkfac") {
    method = Method::ifkfac;
  } else if (cfg.method == "kfac-baseline") {
    method = Method::kfac;
  } else if (cfg.method == "sgd") {
    method = Method::sgd;
  } else {
    fail("unknown training method '" + cfg.method + "'");
  }

  const Dataset data = synth_data({.kind = "two-class-blobs",
                                   .seed = cfg.seed,
                                   .count = cfg.dataset,
                                   .dim = cfg.layers.front(),
                                   .components = 2,
                                   .separation = cfg.separation});
  // Distinct stream from the data so shrinking the dataset cannot silently
  // reshuffle the initial weights.
  MlpModel model = make_mlp(cfg.layers, cfg.seed + 1);
  const std::size_t layers = model.weights.size();

  std::vector<IfkfacLayerState> if_states;
  std::vector<KfacLayerState> kfac_states;
  if (method == Method::ifkfac) {
    for (const auto& w : model.weights) if_states.push_back(ifkfac_init(w));
  } else if (method == Method::kfac) {
    for (const auto& w : model.weights) kfac_states.push_back(kfac_init(w));
  }

  TrainRecord rec;
  rec.csv = kCsvHeader;
  rec.factors_csv = "iter,layer,factor,min_sv,max_sv\n";
  Stopwatch clock;

  auto log_factor = [&](int it, int layer, const char* name,
                        const DenseMatrix& f) {
    const Vector sv = singular_values(f);
    FactorRow row{it, layer, name, sv.minCoeff(), sv.maxCoeff()};
    rec.factor_rows.push_back(row);
    rec.factors_csv += std::to_string(it);
    rec.factors_csv += ',';
    rec.factors_csv += std::to_string(layer);
    rec.factors_csv += ',';
    rec.factors_csv += name;
    rec.factors_csv += ',';
    rec.factors_csv += fmt(row.min_sv);
    rec.factors_csv += ',';
    rec.factors_csv += fmt(row.max_sv);
    rec.factors_csv += '\n';
  };

  for (int it = 0; it <= cfg.iterations; ++it) {
    // Deterministic wrap-around batches: iteration i sees rows
    // [i*batch, i*batch + batch) modulo the dataset.
    const Eigen::Index start =
        static_cast<Eigen::Index>((static_cast<long long>(it) * cfg.batch) %
                                  cfg.dataset);
    DenseMatrix bx(cfg.batch, cfg.layers.front());
    std::vector<int> by(static_cast<std::size_t>(cfg.batch));
    for (Eigen::Index j = 0; j < cfg.batch; ++j) {
      const Eigen::Index src = (start + j) % cfg.dataset;
      bx.row(j) = data.features.row(src);
      by[static_cast<std::size_t>(j)] =
          data.labels[static_cast<std::size_t>(src)];
    }

    const MlpEval eval = mlp_forward_backward(model, bx, by);
    check_finite(eval.loss, it);

    double grad_sq = 0.0;
    for (const auto& g : eval.grads) grad_sq += g.squaredNorm();
    RunRow row;
    row.iter = it;
    row.loss = eval.loss;
    row.grad_norm = std::sqrt(grad_sq);
    row.has_elapsed = cfg.timing;
    if (cfg.timing) row.elapsed_ms = clock.ms();
    rec.rows.push_back(row);
    append_row(rec.csv, row);

    for (std::size_t l = 0; l < layers; ++l) {
      const int li = static_cast<int>(l);
      if (method == Method::ifkfac) {
        log_factor(it, li, "K", if_states[l].K);
        log_factor(it, li, "C", if_states[l].C);
      } else if (method == Method::kfac) {
        log_factor(it, li, "G_K", kfac_states[l].G_K.mat());
        log_factor(it, li, "G_C", kfac_states[l].G_C.mat());
      }
    }
    if (it == cfg.iterations) break;

    if (method == Method::ifkfac) {
      // Conditioning snapshots above run singular-value decompositions, so
      // the audit window covers exactly the optimizer steps.
      audit::Probe probe;
      for (std::size_t l = 0; l < layers; ++l) {
        step_ifkfac(if_states[l], eval.stats[l].mu_aa, eval.stats[l].mu_gg,
                    eval.grads[l], cfg.precond);
      }
      rec.step_solver_calls += static_cast<long long>(probe.delta());
      for (std::size_t l = 0; l < layers; ++l) {
        model.weights[l] = if_states[l].W;
      }
    } else if (method == Method::kfac) {
      audit::Probe probe;
      for (std::size_t l = 0; l < layers; ++l) {
        step_kfac_baseline(kfac_states[l], eval.stats[l].mu_aa,
                           eval.stats[l].mu_gg, eval.grads[l], cfg.precond);
      }
      rec.step_solver_calls += static_cast<long long>(probe.delta());
      for (std::size_t l = 0; l < layers; ++l) {
        model.weights[l] = kfac_states[l].W;
      }
    } else {
      for (std::size_t l = 0; l < layers; ++l) {
        model.weights[l] -= cfg.lr * eval.grads[l];
      }
    }
  }

  rec.final_loss = rec.rows.back().loss;
  for (const auto& row : rec.factor_rows) {
    if (!(row.min_sv > 0.0)) rec.invariants_ok = false;
  }

  if (!cfg.out.empty()) {
    write_file(cfg.out, rec.csv);
    write_file(cfg.out + ".json", train_summary_json(cfg, rec));
    if (method != Method::sgd) {
      write_file(cfg.out + ".factors.csv", rec.factors_csv);
    }
  }
  return rec;
}

std::string run_summary_json(const RunConfig& cfg, const RunRecord& rec) {
  nlohmann::json j;
  j["config"] = {{"problem", cfg.problem},
                 {"optimizer", cfg.optimizer},
                 {"chart", cfg.chart},
                 {"dim", cfg.dim},
                 {"iterations", cfg.iterations},
                 {"seed", cfg.seed},
                 {"beta", cfg.beta},
                 {"alpha", cfg.alpha},
                 {"truncation", cfg.truncation},
                 {"cond", cfg.cond},
                 {"components", cfg.components},
                 {"samples", cfg.samples},
                 {"separation", cfg.separation},
                 {"data_file", cfg.data_file},
                 {"timing", cfg.timing},
                 {"out", cfg.out}};
  j["summary"] = {{"rows", rec.rows.size()},
                  {"final_loss", rec.final_loss},
                  {"invariants_ok", rec.invariants_ok}};
  return j.dump(2) + "\n";
}

std::string train_summary_json(const TrainMlpConfig& cfg,
                               const TrainRecord& rec) {
  nlohmann::json j;
  j["config"] = {{"layers", cfg.layers},
                 {"method", cfg.method},
                 {"iterations", cfg.iterations},
                 {"batch", cfg.batch},
                 {"dataset", cfg.dataset},
                 {"separation", cfg.separation},
                 {"seed", cfg.seed},
                 {"lr", cfg.lr},
                 {"timing", cfg.timing},
                 {"out", cfg.out}};
  j["config"]["precond"] = {{"beta1", cfg.precond.beta1},
                            {"alpha1", cfg.precond.alpha1},
                            {"beta2", cfg.precond.beta2},
                            {"alpha2", cfg.precond.alpha2},
                            {"gamma", cfg.precond.gamma},
                            {"lambda", cfg.precond.lambda},
                            {"period_T", cfg.precond.period_T},
                            {"theta", cfg.precond.theta}};
  nlohmann::json warmup = nlohmann::json::array();
  for (const auto& stage : cfg.precond.warmup) {
    warmup.push_back({{"until_iteration", stage.until_iteration},
                      {"beta1", stage.beta1}});
  }
  j["config"]["precond"]["warmup"] = warmup;
  j["summary"] = {{"rows", rec.rows.size()},
                  {"final_loss", rec.final_loss},
                  {"invariants_ok", rec.invariants_ok},
                  {"step_solver_calls", rec.step_solver_calls}};
  return j.dump(2) + "\n";
}

}  // namespace spdopt
