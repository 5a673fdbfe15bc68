#include <doctest.h>

#include <cmath>
#include <random>

#include "stm/simplex_qp.hpp"

using namespace stm;

namespace {

Vector make_vec(std::initializer_list<double> vals) {
  Vector v(static_cast<Index>(vals.size()));
  Index i = 0;
  for (double x : vals) v(i++) = x;
  return v;
}

QpProblem random_psd_problem(Index k, double lambda, std::mt19937_64& rng) {
  std::normal_distribution<double> normal(0.0, 1.0);
  Matrix g(k, k);
  for (Index i = 0; i < k; ++i)
    for (Index j = 0; j < k; ++j) g(i, j) = normal(rng);
  QpProblem prob;
  prob.m = (g.transpose() * g) / static_cast<double>(k);
  prob.m = ((prob.m + prob.m.transpose()) / 2.0).eval();
  prob.h = Vector(k);
  for (Index i = 0; i < k; ++i) prob.h(i) = normal(rng);
  prob.lambda = lambda;
  return prob;
}

}  // namespace

TEST_CASE("simplex projection matches hand values") {
  CHECK(project_simplex(make_vec({0.2, 0.5})).isApprox(make_vec({0.35, 0.65})));
  CHECK(project_simplex(make_vec({2.0, -1.0})) == make_vec({1.0, 0.0}));

  const Vector on_simplex = make_vec({0.3, 0.2, 0.5});
  CHECK(project_simplex(on_simplex).isApprox(on_simplex, 1e-15));
}

TEST_CASE("simplex projection satisfies the variational inequality") {
  // z on the simplex, p the projection of v: (v - p)^T (z - p) <= 0 for all
  // feasible z certifies optimality of p.
  std::mt19937_64 rng(17);
  std::normal_distribution<double> normal(0.0, 2.0);
  std::uniform_real_distribution<double> unif(0.0, 1.0);
  for (int trial = 0; trial < 50; ++trial) {
    const Index k = 2 + static_cast<Index>(trial % 5);
    Vector v(k);
    for (Index i = 0; i < k; ++i) v(i) = normal(rng);
    const Vector p = project_simplex(v);

    CHECK(p.minCoeff() >= 0.0);
    CHECK(p.sum() == doctest::Approx(1.0).epsilon(1e-12));

    for (int zi = 0; zi < 10; ++zi) {
      Vector z(k);
      double sum = 0.0;
      for (Index i = 0; i < k; ++i) {
        z(i) = unif(rng);
        sum += z(i);
      }
      z /= sum;
      CHECK((v - p).dot(z - p) <= 1e-12);
    }
  }
}

TEST_CASE("solver matches hand-solved programs") {
  QpProblem prob;
  prob.m = Matrix::Identity(2, 2);
  prob.h = make_vec({1.0, 0.0});
  const QpSolution vertex = solve_simplex_qp(prob);
  CHECK(vertex.converged);
  CHECK(vertex.beta.isApprox(make_vec({1.0, 0.0}), 1e-9));
  CHECK(vertex.objective == doctest::Approx(-1.0).epsilon(1e-10));

  prob.h = make_vec({0.5, 0.5});
  const QpSolution symmetric = solve_simplex_qp(prob);
  CHECK(symmetric.beta.isApprox(make_vec({0.5, 0.5}), 1e-9));

  prob.m = make_vec({1.0, 2.0}).asDiagonal();
  prob.h = make_vec({1.0, 1.0});
  const QpSolution interior = solve_simplex_qp(prob);
  CHECK(interior.beta.isApprox(make_vec({2.0 / 3.0, 1.0 / 3.0}), 1e-8));
  CHECK(interior.objective == doctest::Approx(-4.0 / 3.0).epsilon(1e-12));
}

TEST_CASE("solver agrees with the lattice oracle") {
  std::mt19937_64 rng(23);
  int trial = 0;
  for (double lambda : {0.0, 1e-3}) {
    for (int rep = 0; rep < 50; ++rep) {
      const Index k = 2 + (trial++ % 2);
      const QpProblem prob = random_psd_problem(k, lambda, rng);
      const QpSolution fast = solve_simplex_qp(prob);
      const QpSolution oracle = brute_force_simplex_qp(prob, 1e-3);
      REQUIRE(fast.converged);
      CHECK(std::abs(fast.objective - oracle.objective) <= 1e-4);
      // The solver cannot do worse than a lattice point up to tolerance.
      CHECK(fast.objective <= oracle.objective + 1e-10);
    }
  }
}

TEST_CASE("objective trace is non-increasing") {
  std::mt19937_64 rng(31);
  for (int rep = 0; rep < 20; ++rep) {
    const QpProblem prob = random_psd_problem(4, 0.0, rng);
    QpOptions opts;
    opts.trace_objective = true;
    const QpSolution sol = solve_simplex_qp(prob, opts);
    for (std::size_t i = 1; i < sol.objective_trace.size(); ++i)
      CHECK(sol.objective_trace[i] <= sol.objective_trace[i - 1]);
  }
}

TEST_CASE("solution stays feasible") {
  std::mt19937_64 rng(37);
  for (int rep = 0; rep < 30; ++rep) {
    const QpProblem prob = random_psd_problem(5, 1e-4, rng);
    const QpSolution sol = solve_simplex_qp(prob);
    CHECK(sol.beta.minCoeff() >= -1e-12);
    CHECK(std::abs(sol.beta.sum() - 1.0) <= 1e-10);
  }
}

TEST_CASE("ridge path converges to the unridged solution") {
  // h in the column space of a full-rank M: the lambda = 0 program has a
  // unique solution and the ridge solutions walk toward it.
  QpProblem base;
  base.m.resize(3, 3);
  base.m << 2.0, 0.5, 0.3,
            0.5, 1.5, 0.2,
            0.3, 0.2, 1.0;
  base.h = base.m * make_vec({0.2, 0.3, 0.5});
  const QpSolution exact = solve_simplex_qp(base);

  double prev_gap = 1e9;
  for (double lambda : {1e-2, 1e-4, 1e-6}) {
    QpProblem ridged = base;
    ridged.lambda = lambda;
    const QpSolution sol = solve_simplex_qp(ridged);
    const double gap = (sol.beta - exact.beta).cwiseAbs().maxCoeff();
    CHECK(gap < prev_gap + 1e-12);
    prev_gap = gap;
  }
  CHECK(prev_gap <= 1e-6);
}

TEST_CASE("degenerate quadratic falls back to the best vertex") {
  QpProblem prob;
  prob.m = Matrix::Zero(3, 3);
  prob.h = make_vec({0.1, 0.7, 0.2});
  const QpSolution sol = solve_simplex_qp(prob);
  CHECK(sol.converged);
  CHECK(sol.beta == make_vec({0.0, 1.0, 0.0}));
  CHECK(sol.objective == doctest::Approx(-1.4).epsilon(1e-12));
}

TEST_CASE("solver rejects bad inputs") {
  QpProblem indefinite;
  indefinite.m = Matrix::Identity(2, 2);
  indefinite.m(0, 0) = -1.0;
  indefinite.h = make_vec({0.0, 0.0});
  CHECK_THROWS_AS(solve_simplex_qp(indefinite), NumericError);

  QpProblem asymmetric;
  asymmetric.m.resize(2, 2);
  asymmetric.m << 1.0, 0.5,
                  0.2, 1.0;
  asymmetric.h = make_vec({0.0, 0.0});
  CHECK_THROWS_AS(solve_simplex_qp(asymmetric), ValidationError);

  QpProblem negative_ridge;
  negative_ridge.m = Matrix::Identity(2, 2);
  negative_ridge.h = make_vec({0.0, 0.0});
  negative_ridge.lambda = -0.1;
  CHECK_THROWS_AS(solve_simplex_qp(negative_ridge), ValidationError);

  QpProblem too_big;
  too_big.m = Matrix::Identity(5, 5);
  too_big.h = Vector::Zero(5);
  CHECK_THROWS_AS(brute_force_simplex_qp(too_big, 0.01), ValidationError);
}

TEST_CASE("lattice oracle finds the vertex") {
  QpProblem prob;
  prob.m = Matrix::Identity(2, 2);
  prob.h = make_vec({1.0, 0.0});
  const QpSolution sol = brute_force_simplex_qp(prob, 1e-3);
  CHECK(sol.beta == make_vec({1.0, 0.0}));
}
