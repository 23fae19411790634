#include "unrank/cg.hpp"

#include <algorithm>
#include <cmath>
#include <stdexcept>

namespace unrank {

namespace {

double dot(std::span<const double> a, std::span<const double> b) {
  double s = 0.0;
  for (std::size_t k = 0; k < a.size(); ++k) s += a[k] * b[k];
  return s;
}

double norm(std::span<const double> a) { return std::sqrt(dot(a, a)); }

}  // namespace

std::pair<std::vector<double>, CgReport> cg_solve(const LinearOperator& op, std::span<const double> b,
                                                  const CgConfig& config, const CgObserver& observer) {
  const std::int64_t n = op.dim;
  if (static_cast<std::int64_t>(b.size()) != n) throw std::invalid_argument("cg_solve: rhs size mismatch");
  if (config.rel_tol <= 0.0) throw std::invalid_argument("cg_solve: rel_tol must be positive");
  const int max_iters = config.max_iters > 0 ? config.max_iters : static_cast<int>(std::min<std::int64_t>(n, 1000));
  const int restart = config.restart_period > 0 ? config.restart_period : static_cast<int>(n);

  std::vector<double> x(n, 0.0);
  std::vector<double> r(b.begin(), b.end());  // r0 = b - A*0
  std::vector<double> p = r;
  std::vector<double> ap(n, 0.0);

  CgReport report;
  const double b_norm = norm(b);
  report.residual_norms.push_back(b_norm);
  if (b_norm == 0.0 || !(b_norm > 0.0)) {
    if (!std::isfinite(b_norm)) throw std::runtime_error("cg_solve: non-finite right-hand side");
    report.converged = true;
    report.final_rel_residual = 0.0;
    return {std::move(x), std::move(report)};
  }

  double rr = dot(r, r);
  for (int k = 0; k < max_iters; ++k) {
    op.apply(p, ap);
    const double pap = dot(p, ap);
    if (!std::isfinite(pap)) throw std::runtime_error("cg_solve: non-finite operator output");
    if (pap <= 1e-12 * dot(p, p)) {
      throw std::runtime_error(
          "cg_solve: operator is numerically indefinite (p'Ap <= 0); increase the damping term");
    }
    const double alpha = rr / pap;
    for (std::int64_t idx = 0; idx < n; ++idx) {
      x[idx] += alpha * p[idx];
      r[idx] -= alpha * ap[idx];
    }
    report.iterations = k + 1;

    if ((k + 1) % restart == 0 && k + 1 < max_iters) {
      // explicit residual refresh; the next direction restarts from it
      op.apply(x, ap);
      for (std::int64_t idx = 0; idx < n; ++idx) r[idx] = b[idx] - ap[idx];
      p.assign(r.begin(), r.end());
      rr = dot(r, r);
      report.residual_norms.push_back(std::sqrt(rr));
    } else {
      const double rr_next = dot(r, r);
      const double beta = rr_next / rr;
      rr = rr_next;
      for (std::int64_t idx = 0; idx < n; ++idx) p[idx] = r[idx] + beta * p[idx];
      report.residual_norms.push_back(std::sqrt(rr));
    }
    if (!std::isfinite(rr)) throw std::runtime_error("cg_solve: non-finite residual");
    if (observer) observer(k + 1, x);

    if (report.residual_norms.back() / b_norm < config.rel_tol) break;
  }

  report.final_rel_residual = report.residual_norms.back() / b_norm;
  report.converged = report.final_rel_residual < config.rel_tol;
  return {std::move(x), std::move(report)};
}

void dump_cg_csv(const CgReport& report, std::ostream& out) {
  out << "iteration,residual_norm,relative_residual\n";
  const double r0 = report.residual_norms.empty() ? 0.0 : report.residual_norms.front();
  for (std::size_t k = 0; k < report.residual_norms.size(); ++k) {
    out << k << ',' << report.residual_norms[k] << ',' << (r0 > 0.0 ? report.residual_norms[k] / r0 : 0.0) << '\n';
  }
}

}  // namespace unrank
