#pragma once

#include <cstdint>
#include <string>
#include <vector>

#include "spdopt/optimizers.hpp"
#include "spdopt/problems.hpp"

// Experiment driver: wires a named problem to a named optimizer, logs one
// trajectory row per iteration, and serializes the result as CSV plus a JSON
// summary. Everything is seeded and sequential, so a (config, seed) pair
// pins the output bytes.

namespace spdopt {

/// Everything a single run needs. Unused fields are ignored by problems
/// that do not read them (e.g. `components` outside the mixture problem).
struct RunConfig {
  std::string problem = "logdet";  // logdet | metric-nearness | gmm | rosenbrock
  std::string optimizer = "gnc-momentum";
  std::string chart = "dense-sym-A";  // chart-based optimizers only
  Eigen::Index dim = 10;
  int iterations = 1000;
  std::uint64_t seed = 0;
  double beta = 0.05;   // stepsize
  double alpha = 0.0;   // momentum weight
  std::string truncation = "exact";  // exact | linear | quadratic
  double cond = 10.0;          // target conditioning for the matrix problems
  int components = 3;          // mixture size
  Eigen::Index samples = 2000; // synthetic sample count for the mixture
  double separation = 4.0;     // class separation for synthetic data
  std::string data_file;       // optional whitespace table instead of synthesis
  bool timing = false;         // fill elapsed_ms (off by default: bytes stay
                               // machine-independent)
  std::string out;             // CSV path; empty keeps the run in memory
};

/// One trajectory row. min_eig is only meaningful on SPD iterates and
/// elapsed_ms only when timing was requested; the flags say which.
struct RunRow {
  int iter = 0;
  double loss = 0.0;
  double grad_norm = 0.0;
  double min_eig = 0.0;
  double elapsed_ms = 0.0;
  bool has_min_eig = false;
  bool has_elapsed = false;
};

/// Full result of a run: the logged rows, the exact CSV bytes, and enough
/// final state for callers to check analytic targets without re-running.
struct RunRecord {
  std::vector<RunRow> rows;
  double final_loss = 0.0;
  bool invariants_ok = true;  // SPD iterates stayed positive definite /
                              // structural entries stayed pinned
  std::string csv;            // bytes written to `out` (also kept here)

  SymmetricMatrix final_tau{SymmetricMatrix::Zero(1)};  // single-matrix runs
  bool has_final_tau = false;
  std::vector<SymmetricMatrix> final_components;  // mixture runs
  Vector final_x;                                 // Euclidean runs

  long long step_solver_calls = 0;  // factorizations observed inside optimizer
                                    // steps (training runs only)
};

/// Deterministic SPD matrix with condition number `cond`: log-spaced
/// spectrum in [1, cond] under a seeded random rotation. This is the target
/// the matrix problems are built from, exposed so tests can recompute the
/// analytic minimizer.
SymmetricMatrix spd_target_matrix(Eigen::Index dim, double cond,
                                  std::uint64_t seed);

/// Executes one experiment. Throws std::invalid_argument for unknown
/// problem/optimizer/chart names or inconsistent parameters, and
/// std::runtime_error (naming the iteration) if the loss leaves the floats.
RunRecord run(const RunConfig& cfg);

/// Preconditioner defaults for the training driver: the documented warm-up
/// (2e-4 below iteration 100, 2e-3 below 500) on top of the stock config.
PrecondConfig default_mlp_precond();

/// Training-run configuration. The dataset is synthesized two-class blobs
/// with dimension layers.front(); batches are cut deterministically from it
/// in wrap-around order.
struct TrainMlpConfig {
  std::vector<Eigen::Index> layers{10, 32, 32, 2};
  std::string method = "ifkfac";  // ifkfac | kfac-baseline | sgd
  int iterations = 500;
  Eigen::Index batch = 64;
  Eigen::Index dataset = 512;
  double separation = 4.0;
  std::uint64_t seed = 0;
  double lr = 0.05;  // plain-sgd stepsize
  PrecondConfig precond = default_mlp_precond();
  bool timing = false;
  std::string out;  // CSV path; preconditioned methods add <out>.factors.csv
};

/// Per-layer conditioning snapshot of a preconditioner factor.
struct FactorRow {
  int iter = 0;
  int layer = 0;
  std::string factor;  // "K" / "C" (inverse-free) or "G_K" / "G_C" (baseline)
  double min_sv = 0.0;
  double max_sv = 0.0;
};

/// Result of a training run: trajectory rows as in run(), plus the factor
/// conditioning log for the preconditioned methods.
struct TrainRecord {
  std::vector<RunRow> rows;
  double final_loss = 0.0;
  bool invariants_ok = true;
  std::string csv;
  std::vector<FactorRow> factor_rows;
  std::string factors_csv;          // bytes of <out>.factors.csv
  long long step_solver_calls = 0;  // factorizations inside optimizer steps
};

/// Trains a small classifier on synthetic blobs with the chosen method.
TrainRecord train_mlp(const TrainMlpConfig& cfg);

/// JSON summary written next to the CSV (config echo + final numbers).
std::string run_summary_json(const RunConfig& cfg, const RunRecord& rec);
std::string train_summary_json(const TrainMlpConfig& cfg,
                               const TrainRecord& rec);

}  // namespace spdopt
