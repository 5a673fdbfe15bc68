#include "stm/simplex_qp.hpp"

#include <algorithm>
#include <cmath>
#include <functional>
#include <limits>
#include <string>
#include <utility>

namespace stm {

namespace {

constexpr double kSymTol = 1e-10;
constexpr double kNegativeCurvatureTol = -1e-8;

// Largest-magnitude eigenvalue of a symmetric matrix by power iteration with
// a deterministic start vector. 100 steps, relative tolerance 1e-12.
double power_lambda_abs(const Matrix& q) {
  const Index k = q.rows();
  Vector v = Vector::Ones(k) / std::sqrt(static_cast<double>(k));
  // Make the start vector non-orthogonal to more eigenvectors than the
  // all-ones direction alone would be.
  for (Index i = 0; i < k; ++i) v(i) += 1e-3 * static_cast<double>(i + 1);
  v /= v.norm();
  double lambda = 0.0;
  for (int step = 0; step < 100; ++step) {
    Vector qv = q * v;
    const double norm = qv.norm();
    if (norm == 0.0) return 0.0;
    const double next = v.dot(qv);
    v = qv / norm;
    if (step > 0 && std::abs(next - lambda) <= 1e-12 * std::max(1.0, std::abs(next)))
      return next;
    lambda = next;
  }
  return lambda;
}

// lambda_max and a lower bound on lambda_min of a symmetric matrix, both via
// power iteration: the extreme of Q gives the dominant magnitude, a shifted
// pass recovers the other end of the spectrum.
std::pair<double, double> spectrum_bounds(const Matrix& q) {
  const double dominant = power_lambda_abs(q);
  const double bound = std::abs(dominant);
  // Eigenvalues of (Q - bound I) lie in [lambda_min - bound, 0]; the dominant
  // magnitude of the shifted matrix is bound - lambda_min.
  const Matrix shifted = q - bound * Matrix::Identity(q.rows(), q.cols());
  const double shifted_dominant = power_lambda_abs(shifted);
  const double lambda_min = bound + shifted_dominant;  // shifted_dominant <= 0
  const double lambda_max = bound;
  return {lambda_max, lambda_min};
}

}  // namespace

Vector project_simplex(const Vector& v) {
  const Index k = v.size();
  std::vector<double> u(v.data(), v.data() + k);
  std::sort(u.begin(), u.end(), std::greater<double>());
  double cumsum = 0.0;
  double tau = 0.0;
  for (Index i = 0; i < k; ++i) {
    cumsum += u[static_cast<std::size_t>(i)];
    const double t = (cumsum - 1.0) / static_cast<double>(i + 1);
    if (u[static_cast<std::size_t>(i)] > t) tau = t;
  }
  Vector out(k);
  for (Index i = 0; i < k; ++i) out(i) = std::max(v(i) - tau, 0.0);
  return out;
}

namespace {

// Equality-constrained solve on the support the iteration settled on. Once
// the support is identified, the bordered KKT system pins the minimizer to
// linear-solve precision, which no first-order stopping rule reaches. The
// candidate is accepted only with a full KKT certificate: primal feasible,
// dual feasible off the support, and no objective increase.
bool polish_on_support(const Matrix& q, const Vector& h, Vector& beta,
                       double& f_beta) {
  const Index k = beta.size();
  std::vector<Index> support;
  for (Index i = 0; i < k; ++i)
    if (beta(i) > 0.0) support.push_back(i);
  const Index s = static_cast<Index>(support.size());
  if (s == 0) return false;

  Matrix kkt = Matrix::Zero(s + 1, s + 1);
  Vector rhs(s + 1);
  for (Index a = 0; a < s; ++a) {
    const Index ia = support[static_cast<std::size_t>(a)];
    for (Index b = 0; b < s; ++b)
      kkt(a, b) = 2.0 * q(ia, support[static_cast<std::size_t>(b)]);
    kkt(a, s) = -1.0;
    kkt(s, a) = 1.0;
    rhs(a) = 2.0 * h(ia);
  }
  rhs(s) = 1.0;

  Eigen::FullPivLU<Matrix> lu(kkt);
  if (!lu.isInvertible()) return false;
  const Vector z = lu.solve(rhs);

  Vector candidate = Vector::Zero(k);
  double sum = 0.0;
  for (Index a = 0; a < s; ++a) {
    if (z(a) < 0.0) return false;
    candidate(support[static_cast<std::size_t>(a)]) = z(a);
    sum += z(a);
  }
  if (!(sum > 0.0)) return false;
  candidate /= sum;

  const double nu = z(s);
  const Vector grad = 2.0 * (q * candidate - h);
  const double dual_tol =
      1e-9 * std::max({1.0, std::abs(nu), grad.cwiseAbs().maxCoeff()});
  for (Index i = 0; i < k; ++i) {
    if (candidate(i) > 0.0) continue;
    if (grad(i) - nu < -dual_tol) return false;
  }

  // Rounding in two direct objective evaluations swamps the true decrease
  // this close to the optimum; the difference form resolves its sign.
  const Vector d = candidate - beta;
  const double delta = d.dot(q * (candidate + beta)) - 2.0 * d.dot(h);
  if (delta > 0.0) return false;
  beta = candidate;
  f_beta += delta;
  return true;
}

}  // namespace

void QpProblem::validate() const {
  if (m.rows() != m.cols()) throw ValidationError("QpProblem: M is not square");
  if (h.size() != m.rows())
    throw ValidationError("QpProblem: h length does not match M");
  if (lambda < 0.0) throw ValidationError("QpProblem: negative ridge");
  const double asym = (m - m.transpose()).cwiseAbs().maxCoeff();
  if (asym > kSymTol)
    throw ValidationError("QpProblem: M asymmetric by " + std::to_string(asym));
}

QpSolution solve_simplex_qp(const QpProblem& prob, const QpOptions& opts) {
  prob.validate();
  const Index k = prob.m.rows();
  const Matrix q = prob.m + prob.lambda * Matrix::Identity(k, k);
  auto [lambda_max, lambda_min] = spectrum_bounds(q);
  if (lambda_min < kNegativeCurvatureTol)
    throw NumericError("solve_simplex_qp: M + lambda I has eigenvalue " +
                       std::to_string(lambda_min) + "; program is not convex");

  auto objective = [&](const Vector& b) {
    return b.dot(q * b) - 2.0 * b.dot(prob.h);
  };

  QpSolution sol;
  if (lambda_max <= 0.0) {
    // Q vanishes (up to the curvature tolerance): the program is linear,
    // minimized at the vertex with the largest h coordinate.
    Index best = 0;
    prob.h.maxCoeff(&best);
    sol.beta = Vector::Zero(k);
    sol.beta(best) = 1.0;
    sol.objective = objective(sol.beta);
    sol.converged = true;
    if (opts.trace_objective) sol.objective_trace.push_back(sol.objective);
    return sol;
  }

  double step = 1.0 / lambda_max;
  Vector beta = Vector::Constant(k, 1.0 / static_cast<double>(k));
  Vector y = beta;
  double t_momentum = 1.0;
  double f_best = objective(beta);
  if (opts.trace_objective) sol.objective_trace.push_back(f_best);

  for (int iter = 1; iter <= opts.max_iter; ++iter) {
    // Half the objective gradient; paired with step 1/lambda_max it is the
    // same update as the full gradient with step 1/(2 lambda_max).
    Vector next = project_simplex(y - step * (q * y - prob.h));
    double f_next = objective(next);

    if (f_next > f_best) {
      // Function-value restart: drop the momentum and retake the step from
      // the best iterate, which keeps the trace non-increasing. A plain
      // step can still ascend when the power-iteration bound came out a
      // little small; halving the step until it descends restores the
      // guarantee.
      t_momentum = 1.0;
      y = beta;
      bool descended = false;
      for (int halvings = 0; halvings < 64; ++halvings) {
        next = project_simplex(y - step * (q * y - prob.h));
        f_next = objective(next);
        if (f_next <= f_best) {
          descended = true;
          break;
        }
        step *= 0.5;
      }
      if (!descended) {
        // Even vanishing steps ascend: the objective is flat at the floor
        // of double precision around beta.
        sol.iterations = iter;
        sol.converged = true;
        break;
      }
    }
    f_best = f_next;

    const double move = (next - beta).cwiseAbs().maxCoeff();
    const double t_next =
        0.5 * (1.0 + std::sqrt(1.0 + 4.0 * t_momentum * t_momentum));
    y = next + ((t_momentum - 1.0) / t_next) * (next - beta);
    t_momentum = t_next;
    beta = next;
    sol.iterations = iter;
    if (opts.trace_objective) sol.objective_trace.push_back(f_best);

    if (move <= opts.tol) {
      // Momentum extrapolation can park two successive iterates on the same
      // face of the simplex without beta being optimal; only a plain step
      // that stays put certifies the stop.
      const Vector certified =
          project_simplex(beta - step * (q * beta - prob.h));
      if ((certified - beta).cwiseAbs().maxCoeff() <= opts.tol) {
        sol.converged = true;
        break;
      }
      t_momentum = 1.0;
      y = beta;
    }
  }

  double f_final = objective(beta);
  if (polish_on_support(q, prob.h, beta, f_final)) {
    sol.converged = true;
    if (opts.trace_objective) sol.objective_trace.push_back(f_final);
  }
  sol.beta = beta;
  sol.objective = f_final;
  return sol;
}

QpSolution brute_force_simplex_qp(const QpProblem& prob, double grid_step) {
  prob.validate();
  const Index k = prob.m.rows();
  if (k > 4)
    throw ValidationError("brute_force_simplex_qp: K = " + std::to_string(k) +
                          " exceeds the K <= 4 enumeration limit");
  if (grid_step <= 0.0 || grid_step > 1.0)
    throw ValidationError("brute_force_simplex_qp: bad grid step");

  const Matrix q = prob.m + prob.lambda * Matrix::Identity(k, k);
  const long steps = std::lround(1.0 / grid_step);
  auto objective = [&](const Vector& b) {
    return b.dot(q * b) - 2.0 * b.dot(prob.h);
  };

  Vector best;
  double best_obj = std::numeric_limits<double>::infinity();
  Vector b(k);

  // Enumerates compositions of `steps` into k parts.
  std::vector<long> part(static_cast<std::size_t>(k), 0);
  std::function<void(Index, long)> recurse = [&](Index pos, long remaining) {
    if (pos == k - 1) {
      part[static_cast<std::size_t>(pos)] = remaining;
      for (Index i = 0; i < k; ++i)
        b(i) = static_cast<double>(part[static_cast<std::size_t>(i)]) /
               static_cast<double>(steps);
      const double obj = objective(b);
      if (obj < best_obj) {
        best_obj = obj;
        best = b;
      }
      return;
    }
    for (long c = 0; c <= remaining; ++c) {
      part[static_cast<std::size_t>(pos)] = c;
      recurse(pos + 1, remaining - c);
    }
  };
  recurse(0, steps);

  QpSolution sol;
  sol.beta = best;
  sol.objective = best_obj;
  sol.converged = true;
  return sol;
}

}  // namespace stm
