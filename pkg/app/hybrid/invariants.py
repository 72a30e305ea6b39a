import time
from contextlib import contextmanager
from enum import Enum
from fractions import Fraction
from math import lcm
from typing import NamedTuple, Sequence

from celery.utils.log import get_task_logger
from pydantic import BaseModel, ConfigDict, Field, field_serializer, model_validator

from app.core.config import settings
from app.hybrid.errors import CapExceededError, DimensionError, InputError, InvariantViolation
from app.hybrid.graph import ExclusivityGraph
from app.hybrid.polytope import (
    enumerate_stable_sets,
    extend_to_maximal_stable,
    hstab_vertices,
    maximal_stable_sets,
    qstab_h,
)
from app.hybrid.solvers import LPProblem, ThetaResult, exact_maximize, lovasz_theta
from app.hybrid.types import ONE, ZERO, Labeling, Rational, to_fraction

logger = get_task_logger(__name__)

GENUINE_NOTE = (
    "GENUINE certifies the graph-level gap alpha < alpha_hat < theta; theta over-approximates "
    "the quantum set, so a quantum violation is not certified."
)


# --- Pydantic Models ---


class WeightedInequality(BaseModel):
    """I(G, w) = Σ_v w_v p(v) ≤ bound, on an exclusivity graph with edge tags."""

    model_config = ConfigDict(arbitrary_types_allowed=True, frozen=True)

    graph: ExclusivityGraph
    weights: tuple[Rational, ...]
    name: str = ""

    @model_validator(mode="after")
    def _check(self):
        if len(self.weights) != self.graph.n:
            raise ValueError(f"expected {self.graph.n} weights, got {len(self.weights)}")
        if any(w <= 0 for w in self.weights):
            raise ValueError("inequality weights must be positive")
        return self

    @classmethod
    def unit(cls, graph: ExclusivityGraph, name: str = "") -> "WeightedInequality":
        return cls(graph=graph, weights=(ONE,) * graph.n, name=name)

    @property
    def is_unit(self) -> bool:
        return all(w == 1 for w in self.weights)


class Classification(str, Enum):
    GENUINE = "GENUINE"
    NON_GENUINE = "NON_GENUINE"
    NO_QUANTUM_GAP = "NO_QUANTUM_GAP"
    EP_TRIVIAL = "EP_TRIVIAL"


class AlphaHatWitness(BaseModel):
    stable_set: tuple[int, ...]
    omega: tuple[Rational, ...]


class BoundReport(BaseModel):
    alpha: Rational
    alpha_hat: Rational
    alpha_star: Rational
    theta: ThetaResult
    classification: Classification
    alpha_a: Rational = Field(description="alpha of the A-side graph; an upper bound on alpha_hat")
    candidate: bool = False
    gpt_witness: bool = False
    promising: bool = False
    alpha_witness: tuple[int, ...] = ()
    alpha_hat_witness: AlphaHatWitness | None = None
    note: str = ""

    @field_serializer("theta")
    def _theta_summary(self, theta: ThetaResult) -> dict:
        return theta.summary()


# --- Solutions ---


class StableSetSolution(NamedTuple):
    value: Fraction
    witness: tuple[int, ...]


class RelaxationSolution(NamedTuple):
    value: Fraction
    point: Labeling


class AlphaHatSolution(NamedTuple):
    value: Fraction
    stable_set: tuple[int, ...]
    omega: Labeling


def _weights(G: ExclusivityGraph, weights) -> tuple[Fraction, ...]:
    if weights is None:
        return (ONE,) * G.n
    w = tuple(to_fraction(x) for x in weights)
    if len(w) != G.n:
        raise DimensionError(f"expected {G.n} weights, got {len(w)}")
    if any(x < 0 for x in w):
        raise InputError("weights must be nonnegative")
    return w


# --- alpha: branch and bound ---


def alpha(G: ExclusivityGraph, weights: Sequence | None = None) -> StableSetSolution:
    """Maximum-weight stable set by branch and bound with greedy clique-cover bounds."""
    w = _weights(G, weights)
    scale = lcm(*(x.denominator for x in w))
    iw = [int(x * scale) for x in w]

    order = sorted(range(G.n), key=lambda v: (-(w[v] / (G.degree(v) + 1)), v))
    position = {v: i for i, v in enumerate(order)}
    nbr = [0] * G.n
    for i, v in enumerate(order):
        for u in G.neighbors(v):
            nbr[i] |= 1 << position[u]
    weight = [iw[v] for v in order]

    best = [0, 0]  # value, chosen mask (positions)

    def clique_cover_bound(cand: int) -> int:
        classes: list[list[int]] = []  # [members mask, max weight]
        bits = cand
        while bits:
            low = bits & -bits
            i = low.bit_length() - 1
            bits ^= low
            for cls in classes:
                if nbr[i] & cls[0] == cls[0]:
                    cls[0] |= low
                    cls[1] = max(cls[1], weight[i])
                    break
            else:
                classes.append([low, weight[i]])
        return sum(c[1] for c in classes)

    def search(cand: int, value: int, chosen: int) -> None:
        if value > best[0]:
            best[0], best[1] = value, chosen
        if not cand or value + clique_cover_bound(cand) <= best[0]:
            return
        low = cand & -cand
        i = low.bit_length() - 1
        search(cand & ~nbr[i] & ~low, value + weight[i], chosen | low)
        search(cand & ~low, value, chosen)

    search((1 << G.n) - 1, 0, 0)
    witness = tuple(sorted(order[i] for i in range(G.n) if (best[1] >> i) & 1))
    return StableSetSolution(Fraction(best[0], scale), witness)


# --- alpha*: LP over QSTAB ---


def alpha_star(G: ExclusivityGraph, weights: Sequence | None = None) -> RelaxationSolution:
    w = _weights(G, weights)
    solution = exact_maximize(LPProblem.over(w, qstab_h(G)))
    return RelaxationSolution(solution.value, solution.x)


# --- alpha_hat: broadcast-local bound ---


def _best_over_stable_sets(G: ExclusivityGraph, w, stable_sets) -> AlphaHatSolution:
    g_b = G.side_graph("B")
    best = AlphaHatSolution(ZERO, (), (ZERO,) * G.n)
    for S in stable_sets:
        S = tuple(S)
        if not S:
            continue
        local = g_b.induced(S)
        solution = exact_maximize(LPProblem.over([w[v] for v in S], qstab_h(local)))
        if solution.value > best.value:
            omega = [ZERO] * G.n
            for i, v in enumerate(S):
                omega[v] = solution.x[i]
            best = AlphaHatSolution(solution.value, S, tuple(omega))
    return best


def alpha_hat(
    G: ExclusivityGraph,
    weights: Sequence | None = None,
    method: str = "maximal",
    cap: int | None = None,
) -> AlphaHatSolution:
    """max over stable sets S of G_A of max{w_S · x : x ∈ QSTAB(G_B[S])}.

    method: "maximal" (maximal stable sets of G_A), "all" (every stable set of G_A) or
    "vertices" (max of w·v over the HSTAB vertex set).
    """
    w = _weights(G, weights)
    g_a = G.side_graph("A")

    if method == "maximal":
        return _best_over_stable_sets(G, w, maximal_stable_sets(g_a))
    if method == "all":
        cap = settings.STABLE_SET_CAP if cap is None else cap
        if G.n > cap:
            raise CapExceededError("alpha_hat stable-set enumeration", G.n, cap)
        masks = enumerate_stable_sets(g_a, cap)
        return _best_over_stable_sets(G, w, [[v for v in range(G.n) if m[v]] for m in masks])
    if method == "vertices":
        polytope = hstab_vertices(G)
        value, vertex = polytope.max_linear(w)
        support = [v for v in range(G.n) if vertex[v]]
        return AlphaHatSolution(value, extend_to_maximal_stable(g_a, support), vertex)
    raise InputError(f"unknown alpha_hat method {method!r}")


# --- Classification ---


def classify(report: BoundReport, G: ExclusivityGraph) -> Classification:
    if not G.has_a_edges:
        return Classification.EP_TRIVIAL
    if report.theta.dual_value <= float(report.alpha_hat) + settings.CHAIN_TOLERANCE:
        return Classification.NO_QUANTUM_GAP
    if report.alpha < report.alpha_hat:
        return Classification.GENUINE
    return Classification.NON_GENUINE


def unit_weight_bound_check(G: ExclusivityGraph) -> bool:
    """alpha_hat(G) ≤ alpha(G_A) for unit weights; raises InvariantViolation otherwise."""
    hat = alpha_hat(G).value
    a_side = alpha(G.side_graph("A")).value
    logger.info(f"   -> unit-weight check: alpha_hat={hat} alpha(G_A)={a_side}")
    if hat > a_side:
        raise InvariantViolation(f"alpha_hat {hat} exceeds alpha(G_A) {a_side}")
    return hat <= a_side


@contextmanager
def _stage(timings: dict | None, name: str):
    start = time.perf_counter()
    yield
    if timings is not None:
        timings[name] = round(time.perf_counter() - start, 6)


def check_chain(report: BoundReport) -> None:
    tol = settings.CHAIN_TOLERANCE
    if not report.alpha <= report.alpha_hat <= report.alpha_star:
        raise InvariantViolation(
            f"exact chain broken: alpha={report.alpha} alpha_hat={report.alpha_hat} alpha_star={report.alpha_star}"
        )
    if float(report.alpha) > report.theta.dual_value + tol:
        raise InvariantViolation(f"alpha={report.alpha} exceeds theta upper bound {report.theta.dual_value}")
    if report.theta.primal_value > float(report.alpha_star) + tol:
        raise InvariantViolation(f"theta lower bound {report.theta.primal_value} exceeds alpha_star={report.alpha_star}")


def compute_bounds(ineq: WeightedInequality, timings: dict | None = None) -> BoundReport:
    G, w = ineq.graph, ineq.weights
    label = ineq.name or f"graph on {G.n} vertices"
    logger.info(f"📐 Computing bound chain for {label}")

    logger.info("--- STEP 1: alpha (branch and bound) ---")
    with _stage(timings, "alpha"):
        a = alpha(G, w)
    logger.info("--- STEP 2: alpha_hat (A-side stable sets x QSTAB(G_B)) ---")
    with _stage(timings, "alpha_hat"):
        hat = alpha_hat(G, w)
    logger.info("--- STEP 3: alpha_star (LP over QSTAB) ---")
    with _stage(timings, "alpha_star"):
        star = alpha_star(G, w)
    logger.info("--- STEP 4: theta (SDP) ---")
    with _stage(timings, "theta"):
        theta = lovasz_theta(G, [float(x) for x in w])
    with _stage(timings, "alpha_a"):
        a_side = alpha(G.side_graph("A"), w).value

    report = BoundReport(
        alpha=a.value,
        alpha_hat=hat.value,
        alpha_star=star.value,
        theta=theta,
        classification=Classification.NON_GENUINE,
        alpha_a=a_side,
        alpha_witness=a.witness,
        alpha_hat_witness=AlphaHatWitness(stable_set=hat.stable_set, omega=hat.omega),
    )
    check_chain(report)
    verdict = classify(report, G)
    candidate = verdict == Classification.GENUINE and theta.dual_value - float(hat.value) <= settings.GENUINE_MARGIN
    report = report.model_copy(
        update={
            "classification": verdict,
            "candidate": candidate,
            "gpt_witness": hat.value < star.value,
            "promising": hat.value <= a_side and float(a_side) <= theta.dual_value + settings.CHAIN_TOLERANCE,
            "note": GENUINE_NOTE if verdict == Classification.GENUINE else "",
        }
    )
    logger.info(
        f"✅ alpha={report.alpha} alpha_hat={report.alpha_hat} theta={theta.dual_value:.5f} "
        f"alpha_star={report.alpha_star} -> {verdict.value}"
    )
    return report
