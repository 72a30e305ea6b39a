"""Solver kernels: exact rational LP, symmetric eigendecomposition and the Lovász theta SDP."""

from fractions import Fraction
from typing import NamedTuple, Sequence

import numpy as np
from celery.utils.log import get_task_logger
from pydantic import BaseModel
from scipy.optimize import linprog

from app.core.config import settings
from app.hybrid.errors import (
    CapExceededError,
    DimensionError,
    InfeasibleError,
    InputError,
    SolverError,
    ThetaConvergenceError,
    UnboundedError,
)
from app.hybrid.types import ONE, ZERO, to_fraction

logger = get_task_logger(__name__)

Vector = tuple[Fraction, ...]


# --- LP data ---


class LPProblem:
    """maximize c·x  s.t.  A_ub x ≤ b_ub,  A_eq x = b_eq,  x ≥ 0  (all exact rationals)."""

    __slots__ = ("objective", "a_ub", "b_ub", "a_eq", "b_eq")

    def __init__(self, objective, a_ub=(), b_ub=(), a_eq=(), b_eq=()):
        self.objective: Vector = tuple(to_fraction(c) for c in objective)
        self.a_ub = tuple(tuple(to_fraction(a) for a in row) for row in a_ub)
        self.b_ub: Vector = tuple(to_fraction(b) for b in b_ub)
        self.a_eq = tuple(tuple(to_fraction(a) for a in row) for row in a_eq)
        self.b_eq: Vector = tuple(to_fraction(b) for b in b_eq)
        n = len(self.objective)
        if len(self.a_ub) != len(self.b_ub) or len(self.a_eq) != len(self.b_eq):
            raise DimensionError("constraint rows and right-hand sides differ in count")
        if any(len(row) != n for row in (*self.a_ub, *self.a_eq)):
            raise DimensionError(f"every constraint row must have {n} coefficients")

    @classmethod
    def over(cls, objective, polytope) -> "LPProblem":
        """Maximize over an HPolytope (rows coeff·x ≤ bound, x ≥ 0)."""
        if len(objective) != polytope.dim:
            raise DimensionError(f"objective has {len(objective)} entries, polytope dimension is {polytope.dim}")
        return cls(objective, [r for r, _ in polytope.rows], [b for _, b in polytope.rows])

    @property
    def n(self) -> int:
        return len(self.objective)


class LPSolution(NamedTuple):
    value: Fraction
    x: Vector
    duals: Vector  # one multiplier per row: inequalities first, then equalities
    iterations: int


# --- Exact linear algebra ---


class _Echelon:
    """Incremental row-echelon basis used to pick linearly independent constraints."""

    def __init__(self):
        self.rows: list[tuple[int, list[Fraction]]] = []

    def add(self, vector: Sequence[Fraction]) -> bool:
        v = list(vector)
        for pivot, row in self.rows:
            f = v[pivot]
            if f:
                v = [a - f * b for a, b in zip(v, row)]
        for j, a in enumerate(v):
            if a:
                self.rows.append((j, [x / a for x in v]))
                return True
        return False


def solve_linear_system(matrix: Sequence[Sequence[Fraction]], rhs: Sequence[Fraction]) -> Vector:
    """Exact Gauss-Jordan solve of a square nonsingular system."""
    n = len(matrix)
    aug = [list(row) + [b] for row, b in zip(matrix, rhs)]
    for col in range(n):
        pivot = next((r for r in range(col, n) if aug[r][col]), None)
        if pivot is None:
            raise SolverError("singular linear system")
        aug[col], aug[pivot] = aug[pivot], aug[col]
        p = aug[col][col]
        aug[col] = [a / p for a in aug[col]]
        for r in range(n):
            f = aug[r][col]
            if r != col and f:
                aug[r] = [a - f * b for a, b in zip(aug[r], aug[col])]
    return tuple(row[n] for row in aug)


def _dot(a: Sequence[Fraction], b: Sequence[Fraction]) -> Fraction:
    return sum((x * y for x, y in zip(a, b) if x and y), ZERO)


# --- Exact simplex (two phases, Bland's rule) ---


def _pivot(tableau: list[list[Fraction]], objective: list[Fraction], r: int, c: int) -> None:
    p = tableau[r][c]
    row = [v / p for v in tableau[r]]
    tableau[r] = row
    support = [j for j, v in enumerate(row) if v]
    for i, other in enumerate(tableau):
        f = other[c]
        if i != r and f:
            for j in support:
                other[j] -= f * row[j]
    f = objective[c]
    if f:
        for j in support:
            objective[j] -= f * row[j]


def _run_simplex(tableau, objective, basis, allowed, max_iterations, counter) -> bool:
    """Maximize; objective holds reduced costs with the value in the last slot. False if unbounded."""
    while True:
        entering = next((j for j in allowed if objective[j] > 0), None)
        if entering is None:
            return True
        leaving, best = None, None
        for i, row in enumerate(tableau):
            a = row[entering]
            if a > 0:
                ratio = row[-1] / a
                if best is None or ratio < best or (ratio == best and basis[i] < basis[leaving]):
                    leaving, best = i, ratio
        if leaving is None:
            return False
        _pivot(tableau, objective, leaving, entering)
        basis[leaving] = entering
        counter[0] += 1
        if counter[0] > max_iterations:
            raise SolverError(f"simplex exceeded {max_iterations} pivots")


def simplex_max(problem: LPProblem, max_iterations: int = 100_000) -> LPSolution:
    """Exact optimum of an LPProblem; raises InfeasibleError (with Farkas multipliers) or UnboundedError."""
    n, m_ub, m_eq = problem.n, len(problem.a_ub), len(problem.b_eq)
    m = m_ub + m_eq
    rows = list(problem.a_ub) + list(problem.a_eq)
    rhs = list(problem.b_ub) + list(problem.b_eq)
    sign = [ONE if b >= 0 else -ONE for b in rhs]

    needs_artificial = [i >= m_ub or sign[i] < 0 for i in range(m)]
    artificials = [i for i in range(m) if needs_artificial[i]]
    n_cols = n + m_ub + len(artificials)
    art_col = {i: n + m_ub + k for k, i in enumerate(artificials)}

    tableau: list[list[Fraction]] = []
    basis: list[int] = []
    initial_col: list[int] = []
    for i in range(m):
        row = [sign[i] * a for a in rows[i]] + [ZERO] * (n_cols - n) + [sign[i] * rhs[i]]
        if i < m_ub:
            row[n + i] = sign[i]
        if needs_artificial[i]:
            row[art_col[i]] = ONE
            basis.append(art_col[i])
            initial_col.append(art_col[i])
        else:
            basis.append(n + i)
            initial_col.append(n + i)
        tableau.append(row)

    counter = [0]
    first_art = n + m_ub
    if artificials:
        # Phase I: maximize -sum(artificials).
        cost = [ZERO] * first_art + [-ONE] * len(artificials)
        objective = _reduced_costs(tableau, basis, cost)
        _run_simplex(tableau, objective, basis, range(n_cols), max_iterations, counter)
        phase_one = sum((cost[b] * row[-1] for b, row in zip(basis, tableau)), ZERO)
        if phase_one < 0:
            y = _row_duals(tableau, basis, cost, initial_col)
            certificate = tuple(s * v for s, v in zip(sign, y))
            raise InfeasibleError(certificate=certificate)
        _drive_out_artificials(tableau, basis, initial_col, sign, first_art)

    cost = list(problem.objective) + [ZERO] * (n_cols - n)
    objective = _reduced_costs(tableau, basis, cost)
    if not _run_simplex(tableau, objective, basis, range(first_art), max_iterations, counter):
        raise UnboundedError("LP objective is unbounded")

    x = [ZERO] * n
    for b, row in zip(basis, tableau):
        if b < n:
            x[b] = row[-1]
    value = _dot(problem.objective, x)
    duals = tuple(s * v for s, v in zip(sign, _row_duals(tableau, basis, cost, initial_col)))
    return LPSolution(value, tuple(x), duals, counter[0])


def _reduced_costs(tableau, basis, cost) -> list[Fraction]:
    objective = list(cost) + [ZERO]
    for b, row in zip(basis, tableau):
        cb = cost[b]
        if cb:
            for j, v in enumerate(row):
                if v:
                    objective[j] -= cb * v
    return objective


def _row_duals(tableau, basis, cost, initial_col) -> list[Fraction]:
    # Columns that started as the identity now hold B^-1.
    return [sum((cost[b] * row[col] for b, row in zip(basis, tableau) if cost[b]), ZERO) for col in initial_col]


def _drive_out_artificials(tableau, basis, initial_col, sign, first_art) -> None:
    i = 0
    while i < len(tableau):
        if basis[i] >= first_art:
            j = next((j for j in range(first_art) if tableau[i][j]), None)
            if j is None:
                # Redundant equality: drop the row.
                del tableau[i], basis[i]
                continue
            _pivot(tableau, [ZERO] * len(tableau[i]), i, j)
            basis[i] = j
        i += 1


# --- Certified fast path ---


def exact_maximize(problem: LPProblem, float_threshold: int = 400) -> LPSolution:
    """Exact optimum, using a HiGHS solve as a proposal that is then certified in rationals.

    Small problems and problems with equalities go straight to simplex_max; so does
    any proposal whose exact primal or dual check fails.
    """
    if problem.a_eq or len(problem.a_ub) * problem.n <= float_threshold:
        return simplex_max(problem)
    try:
        certified = _certify_highs(problem)
    except (SolverError, ValueError, np.linalg.LinAlgError) as e:
        logger.warning(f"⚠️ HiGHS proposal could not be certified ({e!r}); using exact simplex")
        certified = None
    if certified is not None:
        return certified
    logger.info("   -> HiGHS vertex not certifiable, falling back to exact simplex")
    return simplex_max(problem)


def _certify_highs(problem: LPProblem) -> LPSolution | None:
    n, m = problem.n, len(problem.a_ub)
    a = np.array([[float(v) for v in row] for row in problem.a_ub])
    b = np.array([float(v) for v in problem.b_ub])
    c = np.array([float(v) for v in problem.objective])
    res = linprog(-c, A_ub=a, b_ub=b, bounds=[(0, None)] * n, method="highs")
    if res.status != 0:
        return None
    x_float = res.x
    y_float = -np.asarray(res.ineqlin.marginals)
    slack = b - a @ x_float

    # Candidate tight constraints: rows (index i) and bounds x_j ≥ 0 (index m + j).
    tight_rows = [i for i in range(m) if abs(slack[i]) <= 1e-7]
    tight_rows.sort(key=lambda i: -y_float[i])
    tight_bounds = [m + j for j in range(n) if x_float[j] <= 1e-7]
    active = [i for i in tight_rows if y_float[i] > 1e-9]
    ordered = active + tight_bounds + [i for i in tight_rows if i not in active]

    def constraint(k: int) -> Vector:
        if k < m:
            return problem.a_ub[k]
        return tuple(ONE if j == k - m else ZERO for j in range(n))

    echelon, chosen = _Echelon(), []
    for k in ordered:
        if echelon.add(constraint(k)):
            chosen.append(k)
            if len(chosen) == n:
                break
    if len(chosen) < n:
        return None

    x = solve_linear_system(
        [constraint(k) for k in chosen], [problem.b_ub[k] if k < m else ZERO for k in chosen]
    )
    if any(v < 0 for v in x) or any(_dot(row, x) > bnd for row, bnd in zip(problem.a_ub, problem.b_ub)):
        return None
    value = _dot(problem.objective, x)

    # Dual certificate 1: rounded HiGHS multipliers.
    y = tuple(Fraction(float(v)).limit_denominator(10**6) if v > 1e-9 else ZERO for v in y_float)
    if _dual_feasible(problem, y) and _dot(problem.b_ub, y) == value:
        return LPSolution(value, x, y, 0)

    # Dual certificate 2: multipliers of the chosen basis.
    columns = [constraint(k) if k < m else tuple(-v for v in constraint(k)) for k in chosen]
    transpose = [tuple(col[j] for col in columns) for j in range(n)]
    try:
        u = solve_linear_system(transpose, problem.objective)
    except SolverError:
        return None
    if any(v < 0 for v in u):
        return None
    y_full = [ZERO] * m
    for k, v in zip(chosen, u):
        if k < m:
            y_full[k] = v
    y = tuple(y_full)
    if not _dual_feasible(problem, y) or _dot(problem.b_ub, y) != value:
        return None
    return LPSolution(value, x, y, 0)


def _dual_feasible(problem: LPProblem, y: Vector) -> bool:
    if any(v < 0 for v in y):
        return False
    support = [(i, v) for i, v in enumerate(y) if v]
    for j, cj in enumerate(problem.objective):
        if sum((v * problem.a_ub[i][j] for i, v in support), ZERO) < cj:
            return False
    return True


# --- Eigendecomposition ---


def jacobi_eigen(matrix) -> tuple[np.ndarray, np.ndarray]:
    """Eigenvalues (ascending) and orthonormal eigenvectors of a real symmetric matrix.

    Delegates to LAPACK's symmetric driver through numpy.linalg.eigh after checking symmetry.
    """
    s = np.asarray(matrix, dtype=float)
    if s.ndim != 2 or s.shape[0] != s.shape[1]:
        raise DimensionError(f"expected a square matrix, got shape {s.shape}")
    if s.size and np.max(np.abs(s - s.T)) > 1e-12 * max(1.0, float(np.max(np.abs(s)))):
        raise InputError("matrix is not symmetric")
    values, vectors = np.linalg.eigh(s)
    return values, vectors


# --- Lovász theta ---


class SDPTheta:
    """maximize ⟨W, X⟩  s.t.  tr X = 1,  X_uv = 0 on edges,  X ⪰ 0, with W = √w √wᵀ."""

    __slots__ = ("n", "edge_mask", "weight_matrix")

    def __init__(self, n: int, edges: Sequence[tuple[int, int]], weights: Sequence[float]):
        w = np.asarray(weights, dtype=float)
        if w.shape != (n,):
            raise DimensionError(f"expected {n} weights, got {w.shape}")
        if np.any(w < 0):
            raise InputError("theta weights must be nonnegative")
        self.n = n
        self.edge_mask = tuple(sorted((min(u, v), max(u, v)) for u, v in edges if u != v))
        root = np.sqrt(w)
        self.weight_matrix = np.outer(root, root)

    @classmethod
    def from_graph(cls, G, weights) -> "SDPTheta":
        return cls(G.n, G.edges, [float(w) for w in weights])


class ThetaResult(BaseModel):
    primal_value: float
    dual_value: float
    gap: float
    iterations: int = 0
    converged: bool = True

    def summary(self, digits: int | None = None) -> dict:
        digits = settings.REPORT_DIGITS if digits is None else digits
        return {
            "primal": round(self.primal_value, digits),
            "dual": round(self.dual_value, digits),
            "gap": float(f"{self.gap:.3e}"),
            "converged": self.converged,
        }


def _psd_split(v: np.ndarray) -> tuple[np.ndarray, np.ndarray]:
    values, vectors = jacobi_eigen((v + v.T) / 2)
    pos = np.clip(values, 0.0, None)
    neg = values - pos
    return (vectors * pos) @ vectors.T, (vectors * neg) @ vectors.T


def _certified_bounds(w_mat: np.ndarray, x: np.ndarray, y_edges: np.ndarray, iu, ju) -> tuple[float, float]:
    n = w_mat.shape[0]
    # Upper bound: any edge-supported Y gives θ ≤ λmax(W + Y).
    dual = float(jacobi_eigen(w_mat + y_edges)[0][-1])
    # Lower bound: repair X into a feasible point.
    xr = (x + x.T) / 2
    xr[iu, ju] = 0.0
    xr[ju, iu] = 0.0
    lam_min = float(jacobi_eigen(xr)[0][0])
    if lam_min < 0:
        xr = xr - lam_min * np.eye(n)
    trace = float(np.trace(xr))
    primal = float(np.sum(w_mat * xr)) / trace if trace > 0 else 0.0
    return primal, dual


def lovasz_theta(
    G,
    weights=None,
    tol: float | None = None,
    max_iterations: int | None = None,
    raise_on_failure: bool = False,
) -> ThetaResult:
    """Weighted Lovász theta by ADMM on the dual (PSD projection against the affine constraints).

    Both reported values are valid bounds at every iterate: the dual is λmax(W + Y) for the
    current edge multipliers, the primal a repaired feasible matrix.
    """
    tol = settings.THETA_TOLERANCE if tol is None else tol
    max_iterations = settings.THETA_MAX_ITERATIONS if max_iterations is None else max_iterations
    w = np.ones(G.n) if weights is None else np.asarray([float(v) for v in weights])
    if w.shape != (G.n,):
        raise DimensionError(f"expected {G.n} weights, got {len(w)}")
    if np.any(w < 0):
        raise InputError("theta weights must be nonnegative")

    keep = [v for v in range(G.n) if w[v] > 0]
    if not keep:
        return ThetaResult(primal_value=0.0, dual_value=0.0, gap=0.0)
    if len(keep) < G.n:
        G = G.induced(keep)
        w = w[keep]
    if G.n > settings.THETA_MAX_VERTICES:
        raise CapExceededError("theta SDP", G.n, settings.THETA_MAX_VERTICES)

    n = G.n
    if G.num_edges == 0:
        total = float(np.sum(w))
        return ThetaResult(primal_value=total, dual_value=total, gap=0.0)

    scale = float(np.max(w))
    problem = SDPTheta.from_graph(G, w / scale)
    w_mat = problem.weight_matrix
    c = -w_mat
    iu = np.array([u for u, _ in problem.edge_mask])
    ju = np.array([v for _, v in problem.edge_mask])
    c_norm = 1.0 + np.linalg.norm(c)

    x = np.eye(n) / n
    s = np.zeros((n, n))
    y_edges = np.zeros((n, n))
    mu = 1.0
    best_primal, best_dual = -np.inf, np.inf
    iterations = 0

    for iterations in range(1, max_iterations + 1):
        r = s - c
        y0 = -(mu * (np.trace(x) - 1.0) + np.trace(r)) / n
        ye = -(mu * x[iu, ju] + r[iu, ju])
        y_edges = np.zeros((n, n))
        y_edges[iu, ju] = ye
        y_edges[ju, iu] = ye

        v = c - y0 * np.eye(n) - y_edges - mu * x
        s, neg = _psd_split(v)
        x_new = -neg / mu

        dinf = mu * np.linalg.norm(x_new - x) / c_norm
        x = x_new
        pinf = np.sqrt((np.trace(x) - 1.0) ** 2 + 4.0 * np.sum(x[iu, ju] ** 2)) / 2.0

        if iterations % 10 == 0:
            if dinf > 10 * pinf:
                mu = max(mu / 2, 1e-4)
            elif pinf > 10 * dinf:
                mu = min(mu * 2, 1e4)

        if iterations % 25 == 0 or iterations == max_iterations:
            primal, dual = _certified_bounds(w_mat, x, y_edges, iu, ju)
            best_primal, best_dual = max(best_primal, primal), min(best_dual, dual)
            if (best_dual - best_primal) * scale <= tol:
                break

    gap = (best_dual - best_primal) * scale
    result = ThetaResult(
        primal_value=best_primal * scale,
        dual_value=best_dual * scale,
        gap=gap,
        iterations=iterations,
        converged=gap <= tol,
    )
    if not result.converged:
        logger.warning(f"⚠️ theta SDP stopped at gap {gap:.3e} after {iterations} iterations")
        if raise_on_failure:
            raise ThetaConvergenceError(result)
    return result
