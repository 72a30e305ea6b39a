from fractions import Fraction
from math import sqrt

import numpy as np
import pytest

from app.core.config import settings
from app.hybrid.errors import DimensionError, InfeasibleError, InputError, ThetaConvergenceError, UnboundedError
from app.hybrid.graph import generate
from app.hybrid.solvers import LPProblem, exact_maximize, jacobi_eigen, lovasz_theta, simplex_max, solve_linear_system

F = Fraction


def test_simplex_small_lp():
    # max x + y  s.t.  x + 2y <= 4,  3x + y <= 6
    problem = LPProblem([1, 1], a_ub=[[1, 2], [3, 1]], b_ub=[4, 6])
    solution = simplex_max(problem)
    assert solution.value == F(14, 5)
    assert solution.x == (F(8, 5), F(6, 5))
    # Strong duality with the reported row multipliers.
    assert sum(y * b for y, b in zip(solution.duals, [4, 6])) == solution.value


def test_simplex_equality_rows():
    problem = LPProblem([1, 0], a_eq=[[1, 1]], b_eq=[1])
    assert simplex_max(problem).value == 1


def test_simplex_infeasible_certificate():
    # x1 + x2 >= 3 written as -x1 - x2 <= -3, with x1 <= 1 and x2 <= 1.
    a_ub = [[-1, -1], [1, 0], [0, 1]]
    b_ub = [-3, 1, 1]
    with pytest.raises(InfeasibleError) as info:
        simplex_max(LPProblem([0, 0], a_ub=a_ub, b_ub=b_ub))
    y = info.value.certificate
    assert all(v >= 0 for v in y)
    # Farkas: yA >= 0 and yb < 0.
    for j in range(2):
        assert sum(y[i] * a_ub[i][j] for i in range(3)) >= 0
    assert sum(y[i] * b_ub[i] for i in range(3)) < 0


def test_simplex_unbounded():
    with pytest.raises(UnboundedError):
        simplex_max(LPProblem([1, 0], a_ub=[[0, 1]], b_ub=[1]))


def test_exact_maximize_agrees_with_simplex():
    rng = np.random.default_rng(5)
    for _ in range(5):
        a = [[int(v) for v in row] for row in rng.integers(0, 4, size=(30, 20))]
        b = [int(v) for v in rng.integers(1, 10, size=30)]
        c = [int(v) for v in rng.integers(1, 5, size=20)]
        for row in a:
            if not any(row):
                row[0] = 1
        for j in range(20):
            if not any(row[j] for row in a):
                a[0][j] = 1
        problem = LPProblem(c, a_ub=a, b_ub=b)
        assert exact_maximize(problem, float_threshold=0).value == simplex_max(problem).value


def test_solve_linear_system():
    assert solve_linear_system([[F(2), F(1)], [F(1), F(3)]], [F(3), F(5)]) == (F(4, 5), F(7, 5))


def test_jacobi_eigen_checks_input():
    values, vectors = jacobi_eigen([[2.0, 1.0], [1.0, 2.0]])
    assert np.allclose(values, [1.0, 3.0])
    assert np.allclose(vectors.T @ vectors, np.eye(2))
    with pytest.raises(InputError):
        jacobi_eigen([[0.0, 1.0], [0.0, 0.0]])
    with pytest.raises(DimensionError):
        jacobi_eigen([[1.0, 2.0, 3.0]])


def test_theta_of_c5():
    result = lovasz_theta(generate("cycle", n=5))
    assert result.converged
    assert result.primal_value <= sqrt(5) + 1e-9 <= result.dual_value + 2e-9
    assert result.dual_value == pytest.approx(sqrt(5), abs=1e-5)


def test_theta_trivial_graphs():
    assert lovasz_theta(generate("edgeless", n=4), [1, 2, 3, 4]).dual_value == 10
    assert lovasz_theta(generate("complete", n=4), [1, 2, 3, 4]).dual_value == pytest.approx(4, abs=1e-5)


def test_theta_ignores_zero_weights():
    result = lovasz_theta(generate("cycle", n=5), [1, 1, 1, 1, 0])
    # Dropping one vertex of C5 leaves a path on four vertices.
    assert result.dual_value == pytest.approx(2, abs=1e-5)


def test_theta_of_seven_antihole(h1):
    ineq, _ = h1
    assert lovasz_theta(ineq.graph).dual_value == pytest.approx(1 + 1 / np.cos(np.pi / 7), abs=1e-4)


def test_theta_meets_tolerance_on_weighted_candidates(tagged_graphs):
    rng = np.random.default_rng(4)
    for G in tagged_graphs(8, 12, seed=19, density=0.5):
        weights = [int(w) for w in rng.integers(1, 3, size=G.n)]
        result = lovasz_theta(G, weights)
        assert result.converged
        assert result.gap <= settings.THETA_TOLERANCE


def test_theta_reports_non_convergence():
    G = generate("cycle", n=7)
    result = lovasz_theta(G, max_iterations=25, tol=1e-14)
    assert not result.converged
    assert result.primal_value <= result.dual_value
    with pytest.raises(ThetaConvergenceError):
        lovasz_theta(G, max_iterations=25, tol=1e-14, raise_on_failure=True)
