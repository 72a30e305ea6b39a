"""Inequality constructions (Möbius ladders, double-Bell circulants) and the randomized scan for genuine inequalities."""

import hashlib
import json
import time
from collections import deque
from concurrent.futures import ProcessPoolExecutor
from concurrent.futures import TimeoutError as FutureTimeoutError
from itertools import islice
from math import ceil

import networkx as nx
import numpy as np
from celery.utils.log import get_task_logger
from pydantic import BaseModel, ConfigDict, Field, field_validator

from app.core.config import settings
from app.hybrid.errors import CapExceededError, GraphError, HybridGraphError, ScenarioError
from app.hybrid.graph import ExclusivityGraph, build_graph, find_induced_embedding, generate, is_perfect
from app.hybrid.invariants import BoundReport, WeightedInequality, compute_bounds
from app.hybrid.scenario import Event, HybridScenario, side_events
from app.hybrid.types import Rational

logger = get_task_logger(__name__)

# Printed event lists, "b1b2|y1y2" around the B-cycle of M_8 and "a|x" per vertex.
MOBIUS_8_B_CYCLE = ("01|00", "11|02", "10|22", "01|22", "11|21", "10|11", "01|11", "10|10")
MOBIUS_8_A_LABELS = ("0|0", "0|1", "0|2", "0|3", "1|0", "1|1", "1|2", "1|3")

# "a1a2b1b2|x1x2y1y2" around C_7(1,2): consecutive events clash on A, events two apart on B.
DOUBLE_BELL_7 = ("0000|0022", "1110|0101", "1011|1122", "1101|2111", "0100|2220", "1011|2212", "1101|0200")


# --- Side Bell graphs ---


def side_bell_graph(scenario: HybridScenario, side: str) -> tuple[ExclusivityGraph, list]:
    """Exclusivity graph on one side's local events (outcomes, settings), exclusive on that side."""
    local = side_events(scenario, side)
    edges = []
    for i, (oi, si) in enumerate(local):
        for j in range(i + 1, len(local)):
            oj, sj = local[j]
            if any(si[p] == sj[p] and oi[p] != oj[p] for p in range(len(si))):
                edges.append((i, j))
    return ExclusivityGraph.abstract(len(local), edges, side), local


def _compose(scenario: HybridScenario, a_local, b_local) -> Event:
    outcomes = [0] * scenario.num_parties
    settings_ = [0] * scenario.num_parties
    for pos, p in enumerate(scenario.a_side):
        outcomes[p], settings_[p] = a_local[0][pos], a_local[1][pos]
    for pos, p in enumerate(scenario.b_side):
        outcomes[p], settings_[p] = b_local[0][pos], b_local[1][pos]
    return scenario.event(outcomes, settings_)


def _embed(pattern: ExclusivityGraph, scenario: HybridScenario, side: str, what: str) -> list:
    host, local = side_bell_graph(scenario, side)
    embedding = find_induced_embedding(pattern, host)
    if embedding is None:
        raise ScenarioError(f"no induced {what} among the {side}-side events of this scenario")
    return [local[h] for h in embedding]


def _check_tags(G: ExclusivityGraph, a_edges: set, b_edges: set, what: str) -> None:
    if set(G.side_edges("A")) != a_edges or set(G.side_edges("B")) != b_edges:
        raise GraphError(f"{what}: event embedding produced unexpected exclusivities")


# --- Constructions ---


def default_mobius_scenario(q: int) -> HybridScenario:
    """Smallest broadcasting scenario that fits M_2q: q settings for A, ceil(2q/3) for each B party."""
    side = max(2, ceil(2 * q / 3))
    return HybridScenario.broadcasting(q, side, side)


def construct_mobius(q: int, scenario: HybridScenario | None = None) -> WeightedInequality:
    """Unit-weight M_2q: B-tagged 2q-cycle, A-tagged diameters i ~ i+q."""
    if q < 2:
        raise ScenarioError("Möbius construction needs q >= 2")
    scenario = scenario or default_mobius_scenario(q)

    first_a = scenario.parties[scenario.a_side[0]]
    if first_a.num_settings < q or first_a.num_outcomes < 2:
        raise ScenarioError(f"A-side needs at least {q} settings, got {first_a.num_settings}")
    b_settings = min(scenario.parties[p].num_settings for p in scenario.b_side)
    if 3 * b_settings < 2 * q:
        raise ScenarioError(f"B-side needs 3*min(settings) >= {2 * q}, got {3 * b_settings}")

    n_a = len(scenario.a_side)
    a_labels = [((i // q,) + (0,) * (n_a - 1), (i % q,) + (0,) * (n_a - 1)) for i in range(2 * q)]
    printed = q == 4 and scenario == HybridScenario.broadcasting(4, 3, 3)
    if printed:
        b_labels = [_split_label(text) for text in MOBIUS_8_B_CYCLE]
    else:
        b_labels = _embed(generate("cycle", n=2 * q), scenario, "B", f"{2 * q}-cycle")

    events = [_compose(scenario, a, b) for a, b in zip(a_labels, b_labels)]
    G = build_graph(scenario, events)
    cycle = {(min(i, (i + 1) % (2 * q)), max(i, (i + 1) % (2 * q))) for i in range(2 * q)}
    _check_tags(G, {(i, i + q) for i in range(q)}, cycle, "Möbius construction")
    logger.info(f"✅ Built M_{2 * q} with {G.num_edges} edges{' from the printed event list' if printed else ''}")
    return WeightedInequality.unit(G, name=f"mobius_{2 * q}")


def construct_double_bell_circulant(q: int, scenario: HybridScenario | None = None) -> WeightedInequality:
    """Unit-weight C_q(1,2): A-tagged outer cycle i ~ i+1, B-tagged inner edges i ~ i+2."""
    if q < 7:
        raise ScenarioError("double-Bell circulant needs q >= 7")
    scenario = scenario or HybridScenario.double_bell()

    if q == 7 and scenario == HybridScenario.double_bell():
        events = [scenario.parse_event(text) for text in DOUBLE_BELL_7]
    else:
        outer = _embed(generate("cycle", n=q), scenario, "A", f"{q}-cycle")
        inner = _embed(generate("circulant", n=q, offsets=(2,)), scenario, "B", f"C_{q}(2)")
        events = [_compose(scenario, a, b) for a, b in zip(outer, inner)]

    G = build_graph(scenario, events)
    outer_edges = {(min(i, (i + 1) % q), max(i, (i + 1) % q)) for i in range(q)}
    inner_edges = {(min(i, (i + 2) % q), max(i, (i + 2) % q)) for i in range(q)}
    _check_tags(G, outer_edges, inner_edges, "double-Bell construction")
    logger.info(f"✅ Built C_{q}(1,2) on {G.n} double-Bell events")
    return WeightedInequality.unit(G, name=f"double_bell_{q}")


def _split_label(text: str) -> tuple[tuple[int, ...], tuple[int, ...]]:
    left, right = text.split("|")
    return tuple(map(int, left)), tuple(map(int, right))


# --- Pydantic Models ---


class SearchConfig(BaseModel):
    model_config = ConfigDict(frozen=True)

    scenario: HybridScenario
    max_subgraph_size: int = Field(12, ge=5, example=12)
    weight_palette: tuple[Rational, ...] = Field(default=(1,), example=["1", "2"])
    seed: int = Field(0, example=1)
    time_budget: float | None = Field(None, gt=0, description="seconds; defaults to SEARCH_BUDGET_SECS")
    max_candidates: int | None = Field(None, ge=1, description="unset: run until the budget ends")
    workers: int | None = Field(None, ge=1)

    @field_validator("weight_palette")
    @classmethod
    def _positive_palette(cls, palette):
        if not palette:
            raise ValueError("weight palette must be nonempty")
        if any(w <= 0 for w in palette):
            raise ValueError("weight palette entries must be positive")
        return tuple(sorted(set(palette)))


class SearchRecord(BaseModel):
    hash: str
    events: list[str]
    tags: list[tuple[int, int, str]]
    weights: list[Rational]
    report: BoundReport

    @property
    def alpha_gap(self):
        return self.report.alpha_hat - self.report.alpha

    @property
    def theta_gap(self) -> float:
        return self.report.theta.dual_value - float(self.report.alpha_hat)


class SearchOutcome(BaseModel):
    results: list[SearchRecord] = []
    exhausted: bool = False
    examined: int = 0
    prefiltered: int = 0
    genuine_count: int = 0


def canonical_hash(events: list[str], weights) -> str:
    payload = json.dumps({"events": events, "weights": [str(w) for w in weights]}, sort_keys=True)
    return hashlib.sha256(payload.encode()).hexdigest()[:16]


# --- Scan ---


def _b_side_holes(scenario: HybridScenario, max_length: int, limit: int = 500) -> list[list]:
    host, local = side_bell_graph(scenario, "B")
    g = host.to_networkx()
    cycles = (c for c in nx.chordless_cycles(g, length_bound=max_length) if len(c) >= 5 and len(c) % 2 == 1)
    return [[local[v] for v in c] for c in islice(cycles, limit)]


def _sample_candidate(scenario: HybridScenario, holes: list, all_events: list[Event], config: SearchConfig, rng):
    hole = holes[rng.integers(len(holes))]
    a_parties = [scenario.parties[p] for p in scenario.a_side]
    chosen: dict[int, Event] = {}
    for b_local in hole:
        a_local = (
            tuple(int(rng.integers(p.num_outcomes)) for p in a_parties),
            tuple(int(rng.integers(p.num_settings)) for p in a_parties),
        )
        e = _compose(scenario, a_local, b_local)
        chosen[e.canonical_index] = e
    target = int(rng.integers(len(chosen), config.max_subgraph_size + 1))
    remaining = [e for e in all_events if e.canonical_index not in chosen]
    extra = min(target, len(chosen) + len(remaining)) - len(chosen)
    if extra > 0:
        for i in rng.choice(len(remaining), size=extra, replace=False):
            e = remaining[int(i)]
            chosen[e.canonical_index] = e
    events = [chosen[i] for i in sorted(chosen)]
    palette = config.weight_palette
    weights = tuple(palette[rng.integers(len(palette))] for _ in events)
    return events, weights


def _passes_prefilter(G: ExclusivityGraph) -> bool:
    # Cheap structural tests before any bound is computed. Raises UndecidedError past PERFECTNESS_CAP.
    if not G.has_a_edges:
        return False
    return not is_perfect(G) and not is_perfect(G.side_graph("B"))


def _evaluate(ineq: WeightedInequality) -> BoundReport | None:
    try:
        return compute_bounds(ineq)
    except HybridGraphError as e:
        logger.warning(f"⚠️ Skipping {ineq.name}: {e}")
        return None


def scan_for_genuine(config: SearchConfig) -> SearchOutcome:
    """Grow candidates around B-side odd holes, pre-filter them and rank the survivors' bound chains."""
    scenario = config.scenario
    budget = settings.SEARCH_BUDGET_SECS if config.time_budget is None else config.time_budget
    workers = settings.WORKERS if config.workers is None else config.workers
    deadline = time.monotonic() + budget
    rng = np.random.default_rng(config.seed)

    logger.info(f"🔍 Scanning for genuine inequalities (seed {config.seed}, sizes <= {config.max_subgraph_size})")
    logger.info("--- STEP 1: Collecting B-side odd holes ---")
    holes = [h for h in _b_side_holes(scenario, config.max_subgraph_size) if len(h) <= config.max_subgraph_size]
    outcome = SearchOutcome()
    if not holes:
        logger.info("✅ B-side graph has no odd holes; no candidate can be genuine")
        return outcome

    logger.info("--- STEP 2: Sampling, pre-filtering and bounding candidates ---")
    all_events = [scenario.event_at(i) for i in range(scenario.num_events)]
    seen: set[str] = set()
    bounded: list[tuple[str, WeightedInequality, BoundReport | None]] = []
    pending: deque = deque()
    pool = ProcessPoolExecutor(max_workers=workers) if workers > 1 else None

    def collect(key, ineq, future) -> bool:
        remaining = deadline - time.monotonic()
        if remaining <= 0:
            return False
        try:
            bounded.append((key, ineq, future.result(timeout=remaining)))
        except FutureTimeoutError:
            return False
        return True

    try:
        while config.max_candidates is None or outcome.examined < config.max_candidates:
            if time.monotonic() > deadline:
                outcome.exhausted = True
                break
            events, weights = _sample_candidate(scenario, holes, all_events, config, rng)
            key = canonical_hash([e.label for e in events], weights)
            outcome.examined += 1
            if key in seen:
                continue
            seen.add(key)
            G = build_graph(scenario, events)
            try:
                if not _passes_prefilter(G):
                    continue
            except CapExceededError:
                continue
            outcome.prefiltered += 1
            ineq = WeightedInequality(graph=G, weights=weights, name=f"candidate_{key}")
            if pool is None:
                bounded.append((key, ineq, _evaluate(ineq)))
                continue
            pending.append((key, ineq, pool.submit(_evaluate, ineq)))
            # Keep at most two jobs per worker in flight.
            if len(pending) >= 2 * workers and not collect(*pending.popleft()):
                outcome.exhausted = True
                break

        logger.info(f"--- STEP 3: Collecting {len(pending)} outstanding bounds ---")
        while pending:
            if not collect(*pending.popleft()):
                outcome.exhausted = True
                break
    finally:
        if pool is not None:
            for _, _, future in pending:
                future.cancel()
            pool.shutdown(wait=False, cancel_futures=True)

    records = []
    for key, ineq, report in bounded:
        if report is None:
            continue
        G = ineq.graph
        records.append(
            SearchRecord(
                hash=key,
                events=[G.label(v) for v in range(G.n)],
                tags=[(u, v, t.value) for (u, v), t in sorted(G.tags.items())],
                weights=list(ineq.weights),
                report=report,
            )
        )
    records.sort(key=lambda r: r.hash)
    records.sort(key=lambda r: (r.alpha_gap, r.theta_gap), reverse=True)
    outcome.results = records
    outcome.genuine_count = sum(1 for r in records if r.report.alpha < r.report.alpha_hat)
    if outcome.exhausted:
        logger.warning(f"⚠️ Search budget of {budget}s exhausted; results are partial")
    logger.info(f"✅ {outcome.genuine_count} candidates with alpha < alpha_hat out of {len(records)} bounded")
    return outcome
