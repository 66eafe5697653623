// Command-line front end: `run` executes one experiment, `train-mlp` drives
// the layer-wise preconditioners, `verify` runs the numerical oracle suites,
// and `sweep` fans a list of run configs across worker threads.
//
// Exit codes: 0 success, 1 failed invariant/check or numerical blow-up,
// 2 usage error (unknown names, bad flags, malformed configs).

#include <algorithm>
#include <atomic>
#include <cmath>
#include <cstdint>
#include <exception>
#include <fstream>
#include <functional>
#include <iostream>
#include <mutex>
#include <stdexcept>
#include <string>
#include <thread>
#include <vector>

#include "CLI11.hpp"
#include "json.hpp"

#include "spdopt/rng.hpp"
#include "spdopt/run.hpp"
#include "spdopt/verify.hpp"

namespace {

using nlohmann::json;
using namespace spdopt;

const std::vector<ChartKind> kAllChartKinds = {
    ChartKind::dense_sym_A,       ChartKind::dense_sym_B,
    ChartKind::dense_sym_C,       ChartKind::triangular_A,
    ChartKind::gaussian_augmented, ChartKind::rank_one_arrow,
    ChartKind::kronecker_block_K, ChartKind::kronecker_block_C};

std::vector<ChartKind> parse_chart_list(const std::string& spec) {
  if (spec == "none") {
    throw std::invalid_argument(
        "--charts none selects nothing; pass 'all' or a comma-separated list");
  }
  if (spec == "all") return kAllChartKinds;
  std::vector<ChartKind> kinds;
  std::size_t pos = 0;
  while (pos <= spec.size()) {
    const std::size_t comma = spec.find(',', pos);
    const std::string token =
        spec.substr(pos, comma == std::string::npos ? comma : comma - pos);
    if (token.empty()) throw std::invalid_argument("empty chart name in list");
    kinds.push_back(parse_chart_kind(token));
    if (comma == std::string::npos) break;
    pos = comma + 1;
  }
  return kinds;
}

/// Shared between `run` and `sweep` so config files and flags stay in sync.
void add_run_options(CLI::App& app, RunConfig& cfg) {
  app.add_option("--problem", cfg.problem,
                 "logdet | metric-nearness | gmm | rosenbrock")
      ->capture_default_str();
  app.add_option("--optimizer", cfg.optimizer,
                 "rgd | riem-momentum | eucl-momentum | ahn | alimisis21 | "
                 "gnc-momentum | adam | gd | newton | inverse-free | "
                 "inverse-free-arrow")
      ->capture_default_str();
  app.add_option("--chart", cfg.chart, "chart kind for gnc-momentum")
      ->capture_default_str();
  app.add_option("--dim", cfg.dim, "matrix / vector dimension")
      ->capture_default_str();
  app.add_option("--iterations", cfg.iterations, "optimizer steps")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "64-bit run seed")->capture_default_str();
  app.add_option("--beta", cfg.beta, "stepsize")->capture_default_str();
  app.add_option("--alpha", cfg.alpha, "momentum weight in [0,1)")
      ->capture_default_str();
  app.add_option("--truncation", cfg.truncation,
                 "exact | linear | quadratic retraction")
      ->capture_default_str();
  app.add_option("--cond", cfg.cond, "target condition number")
      ->capture_default_str();
  app.add_option("--components", cfg.components, "mixture size")
      ->capture_default_str();
  app.add_option("--samples", cfg.samples, "synthetic sample count")
      ->capture_default_str();
  app.add_option("--separation", cfg.separation, "synthetic class separation")
      ->capture_default_str();
  app.add_option("--data-file", cfg.data_file,
                 "whitespace-separated sample table (overrides synthesis)");
  app.add_flag("--timing", cfg.timing, "fill the elapsed_ms column");
  app.add_option("--out", cfg.out, "trajectory CSV path (also writes .json)");
}

void add_train_options(CLI::App& app, TrainMlpConfig& cfg) {
  app.add_option("--layers", cfg.layers, "layer sizes")
      ->delimiter(',')
      ->capture_default_str();
  app.add_option("--method", cfg.method, "ifkfac | kfac-baseline | sgd")
      ->capture_default_str();
  app.add_option("--iterations", cfg.iterations, "steps")
      ->capture_default_str();
  app.add_option("--batch", cfg.batch, "batch size")->capture_default_str();
  app.add_option("--dataset", cfg.dataset, "dataset size")
      ->capture_default_str();
  app.add_option("--separation", cfg.separation, "class separation")
      ->capture_default_str();
  app.add_option("--seed", cfg.seed, "64-bit run seed")->capture_default_str();
  app.add_option("--lr", cfg.lr, "sgd stepsize")->capture_default_str();
  app.add_option("--beta1", cfg.precond.beta1,
                 "preconditioner stepsize (post warm-up)")
      ->capture_default_str();
  app.add_option("--alpha1", cfg.precond.alpha1, "preconditioner momentum")
      ->capture_default_str();
  app.add_option("--beta2", cfg.precond.beta2, "parameter stepsize")
      ->capture_default_str();
  app.add_option("--alpha2", cfg.precond.alpha2, "parameter momentum")
      ->capture_default_str();
  app.add_option("--gamma", cfg.precond.gamma, "weight decay")
      ->capture_default_str();
  app.add_option("--lambda", cfg.precond.lambda, "curvature damping")
      ->capture_default_str();
  app.add_option("--period", cfg.precond.period_T, "factor update interval")
      ->capture_default_str();
  app.add_option("--theta", cfg.precond.theta,
                 "moving-average weight (baseline)")
      ->capture_default_str();
  app.add_flag("--timing", cfg.timing, "fill the elapsed_ms column");
  app.add_option("--out", cfg.out,
                 "trajectory CSV path (adds .json and .factors.csv)");
}

/// Applies a key=value file to options already bound on `bind`. The caller
/// re-parses argv afterwards, which is what makes flags beat file values.
void load_config_file(const std::string& path,
                      const std::function<void(CLI::App&)>& bind) {
  CLI::App loader{"config loader"};
  bind(loader);
  loader.set_config("--config", path)->required();
  loader.parse(std::vector<std::string>{});
}

int report_run(const RunRecord& rec) {
  std::cout << "rows=" << rec.rows.size() << " final_loss=" << rec.final_loss
            << (rec.invariants_ok ? "" : " INVARIANT-VIOLATION") << '\n';
  if (!rec.invariants_ok) {
    std::cerr << "error: a structural invariant failed during the run\n";
    return 1;
  }
  return 0;
}

// --- verify ------------------------------------------------------------------

SymmetricMatrix random_symmetric(Eigen::Index k, SplitMix64& rng) {
  DenseMatrix n(k, k);
  for (Eigen::Index r = 0; r < k; ++r) {
    for (Eigen::Index c = 0; c < k; ++c) n(r, c) = rng.normal();
  }
  return SymmetricMatrix(0.5 * (n + n.transpose()));
}

CoordElement random_coord(const Chart& chart, SplitMix64& rng) {
  CoordElement m = coord_zero(chart);
  for (const CoordElement& b : subspace_basis(chart)) {
    m = coord_add(1.0, m, rng.normal(), b);
  }
  return m;
}

struct VerifyParams {
  std::string suite = "all";
  std::string charts = "all";
  std::vector<Eigen::Index> dims{2, 3, 5};
  int trials = 20;
  double tol = 1e-6;
  std::uint64_t seed = 0;
  std::string out;
};

int do_verify(const VerifyParams& p) {
  json checks = json::array();
  bool all_ok = true;
  bool matched = false;
  auto push = [&](const std::string& suite, const std::string& name,
                  double measured, double threshold, bool passed,
                  const std::string& detail = "") {
    all_ok = all_ok && passed;
    checks.push_back({{"suite", suite},
                      {"name", name},
                      {"measured", measured},
                      {"threshold", threshold},
                      {"passed", passed},
                      {"detail", detail}});
  };

  if (p.suite == "orthonormality" || p.suite == "all") {
    matched = true;
    for (ChartKind kind : parse_chart_list(p.charts)) {
      for (const BilinearReport& r :
           orthonormality_suite(kind, p.dims, p.trials, p.tol, p.seed)) {
        push("orthonormality",
             std::string(chart_kind_name(r.kind)) + " dim " +
                 std::to_string(r.dim),
             r.max_deviation, r.tol, r.passed,
             "basis size " + std::to_string(r.basis_size));
      }
    }
  }

  const auto& eq_names = equivalence_check_names();
  const bool single_eq =
      std::find(eq_names.begin(), eq_names.end(), p.suite) != eq_names.end();
  if (p.suite == "equivalence" || p.suite == "all" || single_eq) {
    matched = true;
    for (const std::string& name : eq_names) {
      if (single_eq && name != p.suite) continue;
      const EquivalenceReport r = equivalence_harness(name);
      push("equivalence", r.name, r.measured, r.threshold, r.passed, r.detail);
    }
  }

  if (p.suite == "odes" || p.suite == "all") {
    matched = true;
    SplitMix64 rng(p.seed);
    const SpdPoint tau0(spd_target_matrix(3, 10.0, p.seed));
    const RiemTangent v(random_symmetric(3, rng));
    const SymmetricMatrix w0 = random_symmetric(3, rng);
    const SpdPoint tau1 = rexp(tau0, v);
    const OdeConfig ode{256};
    const double ge =
        (geodesic_ode_oracle(tau0, v, ode).mat() - tau1.mat()).norm();
    push("odes", "geodesic vs closed form (k=3)", ge, 1e-6, ge < 1e-6);
    const double re =
        (transport_ode_oracle(tau0, v, w0, TangentRole::riemannian, ode).mat() -
         riem_transport(tau0, tau1, RiemTangent(w0)).mat())
            .norm();
    push("odes", "riemannian transport vs closed form (k=3)", re, 1e-6,
         re < 1e-6);
    const double ee =
        (transport_ode_oracle(tau0, v, w0, TangentRole::euclidean, ode).mat() -
         eucl_transport(tau0, tau1, EuclTangent(w0)).mat())
            .norm();
    push("odes", "euclidean transport vs closed form (k=3)", ee, 1e-6,
         ee < 1e-6);

    // Fixed-step RK4 is fourth order: doubling the step count should shrink
    // the error by about 16x.
    SplitMix64 rng2(p.seed + 1);
    const SpdPoint s0(spd_target_matrix(2, 4.0, p.seed + 1));
    const RiemTangent sv(random_symmetric(2, rng2));
    const SpdPoint closed = rexp(s0, sv);
    const double coarse =
        (geodesic_ode_oracle(s0, sv, OdeConfig{16}).mat() - closed.mat())
            .norm();
    const double fine =
        (geodesic_ode_oracle(s0, sv, OdeConfig{32}).mat() - closed.mat())
            .norm();
    const double ratio = coarse / fine;
    push("odes", "rk4 order ratio (16 vs 32 steps)", ratio, 12.0,
         ratio >= 12.0 && ratio <= 20.0, "expected within [12, 20]");
  }

  if (p.suite == "correction" || p.suite == "all") {
    matched = true;
    SplitMix64 rng(p.seed);
    for (ChartKind kind :
         {ChartKind::dense_sym_A, ChartKind::dense_sym_B,
          ChartKind::dense_sym_C, ChartKind::gaussian_augmented,
          ChartKind::kronecker_block_K, ChartKind::kronecker_block_C}) {
      const Chart chart = make_chart(kind, random_factor(kind, 3, rng));
      const CoordElement m = random_coord(chart, rng);
      const double norm = coord_norm(transport_correction_term(chart, m));
      push("correction",
           "vanishes on " + std::string(chart_kind_name(kind)), norm, 1e-14,
           norm < 1e-14);
    }
    for (ChartKind kind : {ChartKind::triangular_A, ChartKind::rank_one_arrow}) {
      const Chart chart = make_chart(kind, random_factor(kind, 3, rng));
      const CoordElement m = random_coord(chart, rng);
      const double full = coord_norm(transport_correction_term(chart, m));
      const CoordElement half_m =
          coord_add(0.5, m, 0.0, coord_zero(chart));
      const double half = coord_norm(transport_correction_term(chart, half_m));
      const double dev = std::abs(half / full - 0.25);
      push("correction",
           "quadratic homogeneity on " + std::string(chart_kind_name(kind)),
           dev, 1e-10, dev < 1e-10, "| |term(m/2)|/|term(m)| - 1/4 |");
    }
  }

  if (!matched) {
    throw std::invalid_argument("unknown verification suite '" + p.suite +
                                "'");
  }

  json report;
  report["passed"] = all_ok;
  report["checks"] = checks;
  const std::string text = report.dump(2) + "\n";
  if (p.out.empty()) {
    std::cout << text;
  } else {
    std::ofstream f(p.out, std::ios::binary | std::ios::trunc);
    if (!f) throw std::runtime_error("cannot open '" + p.out + "' for writing");
    f << text;
    std::cout << "wrote " << p.out << " ("
              << (all_ok ? "all checks passed" : "FAILURES") << ")\n";
  }
  return all_ok ? 0 : 1;
}

// --- sweep -------------------------------------------------------------------

int do_sweep(const std::vector<std::string>& files, int jobs) {
  std::vector<RunConfig> cfgs;
  cfgs.reserve(files.size());
  for (const std::string& file : files) {
    RunConfig cfg;
    CLI::App loader{"config loader"};
    add_run_options(loader, cfg);
    loader.set_config("--config", file)->required();
    loader.parse(std::vector<std::string>{});
    if (cfg.out.empty()) {
      throw std::invalid_argument("sweep config '" + file +
                                  "' must set out=<path>");
    }
    cfgs.push_back(std::move(cfg));
  }

  std::atomic<std::size_t> next{0};
  std::mutex io;
  bool any_failed = false;
  auto worker = [&]() {
    for (std::size_t i = next.fetch_add(1); i < cfgs.size();
         i = next.fetch_add(1)) {
      try {
        const RunRecord rec = run(cfgs[i]);
        std::lock_guard<std::mutex> lock(io);
        std::cout << files[i] << ": rows=" << rec.rows.size()
                  << " final_loss=" << rec.final_loss
                  << (rec.invariants_ok ? "" : " INVARIANT-VIOLATION") << '\n';
        if (!rec.invariants_ok) any_failed = true;
      } catch (const std::exception& e) {
        std::lock_guard<std::mutex> lock(io);
        std::cerr << files[i] << ": error: " << e.what() << '\n';
        any_failed = true;
      }
    }
  };

  const int n = static_cast<int>(cfgs.size());
  std::vector<std::thread> pool;
  for (int t = 0; t < std::max(1, std::min(jobs, n)) - 1; ++t) {
    pool.emplace_back(worker);
  }
  worker();
  for (auto& t : pool) t.join();
  return any_failed ? 1 : 0;
}

}  // namespace

int main(int argc, char** argv) {
  CLI::App app{"SPD optimization experiments and numerical verification"};
  app.require_subcommand(1);

  RunConfig run_cfg;
  std::string run_config_file;
  CLI::App* run_cmd = app.add_subcommand("run", "execute one experiment");
  add_run_options(*run_cmd, run_cfg);
  run_cmd->add_option("--config", run_config_file,
                      "key=value config file (flags override)")
      ->check(CLI::ExistingFile);

  TrainMlpConfig train_cfg;
  std::string train_config_file;
  CLI::App* train_cmd =
      app.add_subcommand("train-mlp", "train a small classifier on blobs");
  add_train_options(*train_cmd, train_cfg);
  train_cmd->add_option("--config", train_config_file,
                        "key=value config file (flags override)")
      ->check(CLI::ExistingFile);

  VerifyParams verify_params;
  CLI::App* verify_cmd =
      app.add_subcommand("verify", "run the numerical oracle suites");
  verify_cmd
      ->add_option("suite", verify_params.suite,
                   "orthonormality | equivalence | odes | correction | all | "
                   "a single equivalence check name")
      ->capture_default_str();
  verify_cmd->add_option("--charts", verify_params.charts,
                         "'all' or comma-separated chart kinds")
      ->capture_default_str();
  verify_cmd->add_option("--dims", verify_params.dims, "metric Gram dims")
      ->delimiter(',')
      ->capture_default_str();
  verify_cmd->add_option("--trials", verify_params.trials,
                         "reference points per dim")
      ->capture_default_str();
  verify_cmd->add_option("--tol", verify_params.tol, "orthonormality bound")
      ->capture_default_str();
  verify_cmd->add_option("--seed", verify_params.seed, "suite seed")
      ->capture_default_str();
  verify_cmd->add_option("--out", verify_params.out,
                         "JSON report path (default: stdout)");

  std::vector<std::string> sweep_files;
  int sweep_jobs = 1;
  CLI::App* sweep_cmd =
      app.add_subcommand("sweep", "run many configs concurrently");
  sweep_cmd->add_option("configs", sweep_files, "run config files")
      ->required()
      ->check(CLI::ExistingFile);
  sweep_cmd->add_option("--jobs", sweep_jobs, "worker threads")
      ->check(CLI::PositiveNumber)
      ->capture_default_str();

  try {
    app.parse(argc, argv);
    // A config file supplies values under the flags: load it into the same
    // bound fields, then re-parse argv so explicit flags win.
    if (run_cmd->parsed() && !run_config_file.empty()) {
      load_config_file(run_config_file,
                       [&](CLI::App& a) { add_run_options(a, run_cfg); });
      app.clear();
      app.parse(argc, argv);
    } else if (train_cmd->parsed() && !train_config_file.empty()) {
      load_config_file(train_config_file,
                       [&](CLI::App& a) { add_train_options(a, train_cfg); });
      app.clear();
      app.parse(argc, argv);
    }
    if (run_cmd->parsed()) return report_run(run(run_cfg));
    if (train_cmd->parsed()) {
      const TrainRecord rec = train_mlp(train_cfg);
      std::cout << "rows=" << rec.rows.size()
                << " final_loss=" << rec.final_loss
                << " step_solver_calls=" << rec.step_solver_calls
                << (rec.invariants_ok ? "" : " INVARIANT-VIOLATION") << '\n';
      return rec.invariants_ok ? 0 : 1;
    }
    if (verify_cmd->parsed()) return do_verify(verify_params);
    if (sweep_cmd->parsed()) return do_sweep(sweep_files, sweep_jobs);
  } catch (const CLI::ParseError& e) {
    const int code = app.exit(e);
    return code == 0 ? 0 : 2;
  } catch (const std::invalid_argument& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 2;
  } catch (const std::exception& e) {
    std::cerr << "error: " << e.what() << '\n';
    return 1;
  }
  return 2;
}
