#pragma once

#include <cstdint>

// Thread-local tally of every inverse, linear solve, and factorization made
// through the matrix kernels. The Kronecker-factored optimizer advertises an
// inverse-free step; tests wrap that step in a Probe and assert a zero delta.
// The tally is only meaningful if all solver-like work goes through
// matrix.hpp, which is the convention everywhere in this library.

namespace spdopt::audit {

/// Number of solver-like calls made by the current thread so far.
std::uint64_t solver_calls() noexcept;

/// Called by matrix-core whenever an inverse/solve/factorization runs.
void record_solver_call() noexcept;

/// Snapshot helper: construct before the code under audit, then read delta().
class Probe {
 public:
  Probe() noexcept : start_(solver_calls()) {}
  std::uint64_t delta() const noexcept { return solver_calls() - start_; }

 private:
  std::uint64_t start_;
};

}  // namespace spdopt::audit
