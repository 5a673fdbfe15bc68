#pragma once

#include <vector>

#include "stm/types.hpp"

namespace stm {

/// Euclidean projection onto the unit simplex {b >= 0, sum b = 1}, via the
/// exact sort-based method, O(K log K).
Vector project_simplex(const Vector& v);

/// One per-row program: minimize b^T (M + lambda I) b - 2 b^T h over the
/// unit simplex.
struct QpProblem {
  Matrix m;            // K x K, symmetric within 1e-10
  Vector h;            // K
  double lambda = 0.0; // ridge, >= 0

  void validate() const;
};

struct QpSolution {
  Vector beta;
  double objective = 0.0;
  int iterations = 0;
  bool converged = false;
  /// Per-iteration objectives; filled only when QpOptions::trace_objective.
  std::vector<double> objective_trace;
};

struct QpOptions {
  double tol = 1e-10;    // stop when ||b_{t+1} - b_t||_inf <= tol
  int max_iter = 10000;
  bool trace_objective = false;
};

/// Accelerated projected gradient with function-value restart; the restart
/// keeps the objective non-increasing. Step size 1/lambda_max(M + lambda I)
/// with lambda_max from power iteration (100 steps, tol 1e-12). Throws
/// NumericError when lambda_min(M + lambda I) < -1e-8; non-convergence
/// within max_iter returns converged = false rather than throwing.
QpSolution solve_simplex_qp(const QpProblem& prob, const QpOptions& opts = {});

/// Testing oracle: enumerates the simplex lattice at resolution grid_step and
/// returns the lattice minimizer. Requires K <= 4.
QpSolution brute_force_simplex_qp(const QpProblem& prob, double grid_step);

}  // namespace stm
