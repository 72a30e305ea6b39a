"""Built-in reference inequalities, strategies and the fixture table checked by `verify-paper`."""

from functools import lru_cache
from math import cos, pi, sqrt
from typing import Callable, NamedTuple, Sequence

from celery.utils.log import get_task_logger
from pydantic import BaseModel

from app.hybrid.errors import HybridGraphError, InputError
from app.hybrid.graph import build_graph, generate
from app.hybrid.invariants import WeightedInequality, alpha, alpha_hat, alpha_star
from app.hybrid.polytope import qstab_h, vertex_enumeration
from app.hybrid.quantum import PureState, QubitMeasurement, evaluate_inequality, optimize_violation, strategy_to_behavior
from app.hybrid.scenario import HybridScenario
from app.hybrid.search import construct_double_bell_circulant, construct_mobius, default_mobius_scenario
from app.hybrid.solvers import lovasz_theta
from app.hybrid.types import to_fraction

logger = get_task_logger(__name__)

# "abc|xyz" for A, B1, B2 in the 3-2-2 broadcasting scenario.
H1_EVENTS = ("100|000", "101|000", "010|001", "110|010", "001|111", "111|210", "010|201")

BOWLES_EVENTS = (
    "000|000", "011|000", "101|000", "110|000", "000|011", "011|011", "101|011", "110|011",
    "000|111", "011|111", "101|111", "110|111", "000|001", "011|001", "101|001", "110|001",
    "000|010", "011|010", "101|010", "110|010", "000|101", "011|101", "101|101", "110|101",
    "001|100", "010|100", "100|100", "111|100", "001|110", "010|110", "100|110", "111|110",
    "000|210", "001|210", "110|210", "111|210", "000|211", "001|211", "110|211", "111|211",
    "010|200", "011|200", "100|200", "101|200", "010|201", "011|201", "100|201", "101|201",
)


def _inequality(events: Sequence[str], scenario: HybridScenario, name: str, weights=None) -> WeightedInequality:
    G = build_graph(scenario, [scenario.parse_event(text) for text in events])
    if weights is None:
        return WeightedInequality.unit(G, name=name)
    ws = [to_fraction(w) for w in weights]
    if len(ws) == 1:
        ws = ws * G.n
    return WeightedInequality(graph=G, weights=tuple(ws), name=name)


def h1_inequality(weights=None) -> tuple[WeightedInequality, HybridScenario]:
    """The 7-event antihole inequality; local and broadcast-local bound 2."""
    scenario = HybridScenario.broadcasting(3, 2, 2)
    return _inequality(H1_EVENTS, scenario, "h1", weights), scenario


def bowles_inequality() -> tuple[WeightedInequality, HybridScenario]:
    scenario = HybridScenario.broadcasting(3, 2, 2)
    return _inequality(BOWLES_EVENTS, scenario, "bowles"), scenario


# --- Strategies ---


def ghz_strategy() -> tuple[PureState, tuple[QubitMeasurement, ...]]:
    measurements = (
        QubitMeasurement([(4 * pi / 9, 0.0), (0.0, 0.0), (4 * pi / 7, pi / 9)]),
        QubitMeasurement([(0.0, 0.0), (2 * pi / 9, -5 * pi / 8)]),
        QubitMeasurement([(2 * pi / 9, 5 * pi / 9), (pi / 2, 0.0)]),
    )
    return PureState.ghz(3), measurements


@lru_cache(maxsize=1)
def general_strategy() -> tuple[PureState, tuple[QubitMeasurement, ...]]:
    """Best non-GHZ strategy for H1: three-qubit state and angles found by the seeded optimizer.

    Seeded and single-process, so repeated calls give the same strategy (value about 2.0698).
    """
    ineq, scenario = h1_inequality()
    result = optimize_violation(ineq, scenario, seed=0, restarts=4, workers=1)
    return result.state, result.measurements


BUILTIN_STRATEGIES: dict[str, Callable] = {"ghz": ghz_strategy, "general": general_strategy}


def named_inequality(text: str, scenario: HybridScenario | None = None) -> tuple[WeightedInequality, HybridScenario | None]:
    """Resolve h1, bowles, mobius:Q, double_bell:Q or an abstract KIND:N[:o1,o2] graph.

    Abstract graphs carry no scenario and come back with None in its place.
    """
    kind, *params = text.split(":")
    if kind == "h1":
        return h1_inequality()
    if kind == "bowles":
        return bowles_inequality()
    try:
        size = int(params[0])
        offsets = tuple(int(o) for o in params[1].split(",")) if len(params) > 1 else ()
    except (IndexError, ValueError) as e:
        raise InputError(f"cannot read {text!r}: expected KIND:N[:o1,o2]") from e
    if kind == "mobius":
        scenario = scenario or default_mobius_scenario(size)
        return construct_mobius(size, scenario), scenario
    if kind == "double_bell":
        scenario = scenario or HybridScenario.double_bell()
        return construct_double_bell_circulant(size, scenario), scenario
    return WeightedInequality.unit(generate(kind, n=size, offsets=offsets), name=text), None


# --- Fixtures ---


class Fixture(NamedTuple):
    id: str
    group: str
    expected: float
    tolerance: float
    compute: Callable[[], float]
    relation: str = "=="  # "==" within tolerance, ">" strictly above expected + tolerance


class FixtureOutcome(BaseModel):
    id: str
    group: str
    expected: float
    computed: float | None = None
    tolerance: float
    passed: bool
    error: str = ""


def reference_fixtures(h1_weights=None) -> list[Fixture]:
    def h1():
        return h1_inequality(h1_weights)[0]

    def quantum(builder):
        ineq, _ = h1_inequality(h1_weights)
        return evaluate_inequality(strategy_to_behavior(*builder()), ineq)

    def unit_bounds(builder, q):
        return lambda: builder(q).graph

    mobius8 = unit_bounds(construct_mobius, 4)
    mobius12 = unit_bounds(construct_mobius, 6)
    db7 = unit_bounds(construct_double_bell_circulant, 7)
    db8 = unit_bounds(construct_double_bell_circulant, 8)

    def bowles():
        return bowles_inequality()[0]

    def gpt_gap(graph):
        G = graph()
        return float(alpha_star(G).value - alpha_hat(G).value)

    return [
        Fixture("h1.alpha", "alpha", 2, 0, lambda: float(alpha(h1().graph, h1().weights).value)),
        Fixture("h1.alpha_hat", "alpha_hat", 2, 0, lambda: float(alpha_hat(h1().graph, h1().weights).value)),
        Fixture("h1.theta", "theta", 1 + 1 / cos(pi / 7), 1e-4,
                lambda: lovasz_theta(h1().graph, [float(w) for w in h1().weights]).dual_value),
        Fixture("h1.ghz_strategy", "quantum", 2.042, 5e-3, lambda: quantum(ghz_strategy)),
        Fixture("h1.general_strategy", "quantum", 2.069, 5e-3, lambda: quantum(general_strategy)),
        Fixture("bowles.alpha", "alpha", 8, 0, lambda: float(alpha(bowles().graph).value)),
        Fixture("bowles.alpha_hat", "alpha_hat", 8, 0, lambda: float(alpha_hat(bowles().graph).value)),
        Fixture("bowles.theta", "theta", 6 + 2 * sqrt(3), 1e-3, lambda: lovasz_theta(bowles().graph).dual_value),
        Fixture("mobius8.alpha", "alpha", 3, 0, lambda: float(alpha(mobius8()).value)),
        Fixture("mobius8.alpha_hat", "alpha_hat", 3, 0, lambda: float(alpha_hat(mobius8()).value)),
        Fixture("mobius8.theta", "theta", 3.4142, 1e-3, lambda: lovasz_theta(mobius8()).dual_value),
        Fixture("mobius12.theta_gap", "theta", 3 * cos(pi / 6) - 2, 1e-3,
                lambda: lovasz_theta(mobius12()).dual_value - float(alpha(mobius12()).value)),
        Fixture("double_bell7.alpha", "alpha", 2, 0, lambda: float(alpha(db7()).value)),
        Fixture("double_bell7.alpha_hat", "alpha_hat", 2, 0, lambda: float(alpha_hat(db7()).value)),
        Fixture("double_bell7.alpha_star_gap", "alpha_star", 0, 0, lambda: gpt_gap(db7), ">"),
        Fixture("double_bell8.alpha", "alpha", 2, 0, lambda: float(alpha(db8()).value)),
        Fixture("double_bell8.alpha_hat", "alpha_hat", 2, 0, lambda: float(alpha_hat(db8()).value)),
        Fixture("double_bell8.alpha_star_gap", "alpha_star", 0, 0, lambda: gpt_gap(db8), ">"),
        Fixture("c5.qstab_vertices", "polytope", 12, 0,
                lambda: float(len(vertex_enumeration(qstab_h(generate("cycle", n=5)))))),
    ]


def run_fixtures(only: str | None = None, h1_weights=None) -> list[FixtureOutcome]:
    """Run every fixture (or one group / one id) and compare against its expected value."""
    fixtures = reference_fixtures(h1_weights)
    if only:
        fixtures = [f for f in fixtures if only in (f.group, f.id)]
    outcomes = []
    for f in fixtures:
        try:
            computed = f.compute()
        except HybridGraphError as e:
            logger.error(f"❌ {f.id}: {e}")
            outcomes.append(FixtureOutcome(id=f.id, group=f.group, expected=f.expected,
                                           tolerance=f.tolerance, passed=False, error=str(e)))
            continue
        if f.relation == ">":
            passed = computed > f.expected + f.tolerance
        else:
            passed = abs(computed - f.expected) <= f.tolerance
        logger.info(f"{'✅' if passed else '❌'} {f.id}: expected {f.expected:.6g}, got {computed:.6g}")
        outcomes.append(FixtureOutcome(id=f.id, group=f.group, expected=f.expected, computed=computed,
                                       tolerance=f.tolerance, passed=passed))
    return outcomes


def format_fixture_table(outcomes: list[FixtureOutcome]) -> str:
    rows = [f"{'fixture':<30} {'expected':>12} {'computed':>12} {'tol':>8}  result"]
    for o in outcomes:
        computed = f"{o.computed:12.6f}" if o.computed is not None else f"{'error':>12}"
        rows.append(f"{o.id:<30} {o.expected:12.6f} {computed} {o.tolerance:8.1e}  {'PASS' if o.passed else 'FAIL'}")
        if o.error:
            rows.append(f"    {o.error}")
    passed = sum(o.passed for o in outcomes)
    rows.append(f"{passed}/{len(outcomes)} fixtures passed")
    return "\n".join(rows) + "\n"
