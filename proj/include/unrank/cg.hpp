#pragma once

#include <cstdint>
#include <functional>
#include <ostream>
#include <span>
#include <vector>

namespace unrank {

// Matrix-free symmetric positive definite operator v -> Av.
struct LinearOperator {
  std::int64_t dim = 0;
  std::function<void(std::span<const double> in, std::span<double> out)> apply;
};

struct CgConfig {
  double rel_tol = 1e-6;
  int max_iters = -1;       // -1: min(dim, 1000)
  int restart_period = -1;  // -1: dim (effectively off for small systems)
};

struct CgReport {
  int iterations = 0;
  std::vector<double> residual_norms;  // length iterations + 1
  bool converged = false;
  double final_rel_residual = 0.0;
};

// Called after every iteration with the current iterate; used by diagnostics
// and the error-norm tests.
using CgObserver = std::function<void(int iteration, std::span<const double> x)>;

// Solves Ax = b from x0 = 0, stopping when ||r_k|| / ||r_0|| < rel_tol or at
// the iteration cap. The search direction is re-seeded from the explicitly
// recomputed residual every restart_period iterations. Throws on numerical
// indefiniteness (p'Ap <= 1e-12 ||p||^2) or non-finite values.
std::pair<std::vector<double>, CgReport> cg_solve(const LinearOperator& op, std::span<const double> b,
                                                  const CgConfig& config = {}, const CgObserver& observer = {});

// Residual history as CSV: "iteration,residual_norm,relative_residual".
void dump_cg_csv(const CgReport& report, std::ostream& out);

}  // namespace unrank
