"""Multi-qubit pure-state strategies with rank-1 projective measurements."""

from concurrent.futures import ProcessPoolExecutor
from itertools import product
from typing import NamedTuple, Sequence

import numpy as np
from celery.utils.log import get_task_logger
from scipy.optimize import minimize

from app.core.config import settings
from app.hybrid.errors import MissingEventError, ScenarioError, StrategyError
from app.hybrid.invariants import WeightedInequality
from app.hybrid.scenario import HybridScenario

logger = get_task_logger(__name__)


class PureState:
    """Amplitudes over |i_1 … i_k⟩ with party 1 as the most significant qubit."""

    __slots__ = ("amplitudes", "num_qubits")

    def __init__(self, amplitudes, normalize: bool = False, atol: float = 1e-10):
        a = np.asarray(amplitudes, dtype=complex).ravel()
        k = int(round(np.log2(len(a)))) if len(a) else -1
        if k < 1 or 2**k != len(a):
            raise StrategyError(f"state length {len(a)} is not a power of two")
        norm = float(np.vdot(a, a).real)
        if normalize:
            if norm == 0:
                raise StrategyError("cannot normalize the zero vector")
            a = a / np.sqrt(norm)
        elif abs(norm - 1.0) > atol:
            raise StrategyError(f"state is not normalized: squared norm {norm:.12f}")
        a.setflags(write=False)
        self.amplitudes = a
        self.num_qubits = k

    @classmethod
    def ghz(cls, k: int) -> "PureState":
        a = np.zeros(2**k, dtype=complex)
        a[0] = a[-1] = 1 / np.sqrt(2)
        return cls(a)

    @classmethod
    def basis(cls, bits: Sequence[int]) -> "PureState":
        a = np.zeros(2 ** len(bits), dtype=complex)
        a[int("".join(map(str, bits)), 2)] = 1
        return cls(a)

    @property
    def norm_residual(self) -> float:
        return abs(float(np.vdot(self.amplitudes, self.amplitudes).real) - 1.0)


class QubitMeasurement:
    """Per setting an angle pair (a, φ): outcome 0 projects on cos a|0⟩ + e^{iφ} sin a|1⟩, outcome 1 on its complement."""

    __slots__ = ("angles",)

    def __init__(self, angles: Sequence[tuple[float, float]]):
        if not angles:
            raise StrategyError("a measurement needs at least one setting")
        self.angles = tuple((float(a), float(phi)) for a, phi in angles)

    @property
    def num_settings(self) -> int:
        return len(self.angles)

    def bras(self, setting: int) -> np.ndarray:
        """Rows ⟨v_0| and ⟨v_1| for one setting."""
        a, phi = self.angles[setting]
        v0 = np.array([np.cos(a), np.exp(1j * phi) * np.sin(a)])
        v1 = np.array([np.sin(a), -np.exp(1j * phi) * np.cos(a)])
        return np.conj(np.vstack([v0, v1]))

    def projector(self, setting: int, outcome: int) -> np.ndarray:
        bra = self.bras(setting)[outcome]
        return np.outer(np.conj(bra), bra)


class Behavior:
    """p(outcomes | settings) as an array indexed [settings..., outcomes...]."""

    __slots__ = ("settings_shape", "outcomes_shape", "table")

    def __init__(self, table, settings_shape: Sequence[int], outcomes_shape: Sequence[int]):
        t = np.asarray(table, dtype=float)
        self.settings_shape = tuple(settings_shape)
        self.outcomes_shape = tuple(outcomes_shape)
        if t.shape != self.settings_shape + self.outcomes_shape:
            raise StrategyError(f"table shape {t.shape} does not match {self.settings_shape} x {self.outcomes_shape}")
        self.table = t

    @property
    def num_parties(self) -> int:
        return len(self.settings_shape)

    def probability(self, outcomes: Sequence[int], settings_: Sequence[int]) -> float:
        if len(outcomes) != self.num_parties or len(settings_) != self.num_parties:
            raise MissingEventError(f"event has {len(outcomes)} parties, behavior has {self.num_parties}")
        for o, s, no, ns in zip(outcomes, settings_, self.outcomes_shape, self.settings_shape):
            if not (0 <= o < no and 0 <= s < ns):
                raise MissingEventError(f"event {tuple(outcomes)}|{tuple(settings_)} is outside the behavior")
        return float(self.table[tuple(settings_) + tuple(outcomes)])

    def normalization_residual(self) -> float:
        k = self.num_parties
        sums = self.table.sum(axis=tuple(range(k, 2 * k)))
        return float(np.max(np.abs(sums - 1.0)))

    def is_nonnegative(self, atol: float = 1e-12) -> bool:
        return bool(np.all(self.table >= -atol))


# --- Behaviors ---


def strategy_to_behavior(state: PureState, measurements: Sequence[QubitMeasurement]) -> Behavior:
    k = state.num_qubits
    if len(measurements) != k:
        raise StrategyError(f"state has {k} qubits but {len(measurements)} parties measure it")
    if state.norm_residual > 1e-10:
        raise StrategyError("state is not normalized")
    psi = state.amplitudes.reshape((2,) * k)
    settings_shape = tuple(m.num_settings for m in measurements)
    table = np.zeros(settings_shape + (2,) * k)
    for setting in product(*(range(s) for s in settings_shape)):
        amp = psi
        for p, s in enumerate(setting):
            amp = np.moveaxis(np.tensordot(measurements[p].bras(s), amp, axes=([1], [p])), 0, p)
        table[setting] = np.abs(amp) ** 2
    return Behavior(table, settings_shape, (2,) * k)


def deterministic_behavior(outputs: Sequence[Sequence[int]], outcomes_shape: Sequence[int] | None = None) -> Behavior:
    """Local deterministic point: party p answers outputs[p][setting]."""
    settings_shape = tuple(len(o) for o in outputs)
    outcomes_shape = tuple(outcomes_shape) if outcomes_shape else (2,) * len(outputs)
    table = np.zeros(settings_shape + outcomes_shape)
    for setting in product(*(range(s) for s in settings_shape)):
        answer = tuple(outputs[p][s] for p, s in enumerate(setting))
        table[setting + answer] = 1.0
    return Behavior(table, settings_shape, outcomes_shape)


def pr_box_behavior() -> Behavior:
    table = np.zeros((2, 2, 2, 2))
    for x, y, a, b in product(range(2), repeat=4):
        table[x, y, a, b] = 0.5 if (a ^ b) == (x & y) else 0.0
    return Behavior(table, (2, 2), (2, 2))


def evaluate_inequality(b: Behavior, ineq: WeightedInequality) -> float:
    if ineq.graph.labels is None:
        raise MissingEventError("inequality graph carries no events to evaluate")
    return float(
        sum(float(w) * b.probability(e.outcomes, e.settings) for w, e in zip(ineq.weights, ineq.graph.labels))
    )


def check_no_signaling(b: Behavior, partition: Sequence[Sequence[int]] | None = None, atol: float = 1e-9) -> bool:
    """Each block's marginal is independent of the settings outside the block (and the table is normalized)."""
    k = b.num_parties
    blocks = [list(block) for block in partition] if partition is not None else [[p] for p in range(k)]
    if sorted(p for block in blocks for p in block) != list(range(k)):
        raise ScenarioError("partition must cover every party exactly once")
    if b.normalization_residual() > atol or not b.is_nonnegative(atol):
        return False
    for block in blocks:
        outside = [p for p in range(k) if p not in block]
        if not outside:
            continue
        marginal = b.table.sum(axis=tuple(k + p for p in outside))
        for p in outside:
            reference = np.take(marginal, [0], axis=p)
            if not np.allclose(marginal, reference, atol=atol, rtol=0):
                return False
    return True


# --- Optimizer ---


class OptimizationResult(NamedTuple):
    value: float
    state: PureState
    measurements: tuple[QubitMeasurement, ...]
    seed: int


def _measurement_vectors(angles: np.ndarray, offsets: list[int], terms_settings, terms_outcomes) -> np.ndarray:
    """Row v of the result is ⊗_p |v_{o_p | s_p}⟩ for term v."""
    rows = None
    for p in range(terms_settings.shape[1]):
        idx = offsets[p] + terms_settings[:, p]
        a, phi = angles[2 * idx], angles[2 * idx + 1]
        zero = np.stack([np.cos(a), np.exp(1j * phi) * np.sin(a)], axis=1)
        one = np.stack([np.sin(a), -np.exp(1j * phi) * np.cos(a)], axis=1)
        vec = np.where(terms_outcomes[:, p, None] == 0, zero, one)
        rows = vec if rows is None else (rows[:, :, None] * vec[:, None, :]).reshape(len(vec), -1)
    return rows


def _bell_operator(angles, offsets, weights, terms_settings, terms_outcomes) -> np.ndarray:
    f = _measurement_vectors(angles, offsets, terms_settings, terms_outcomes)
    return (f.T * weights) @ np.conj(f)


def _run_restart(job) -> tuple[float, np.ndarray]:
    seed_seq, offsets, weights, terms_settings, terms_outcomes, size = job
    rng = np.random.default_rng(seed_seq)

    def objective(x):
        return -np.linalg.eigvalsh(_bell_operator(x, offsets, weights, terms_settings, terms_outcomes))[-1]

    x0 = rng.uniform(0.0, 2 * np.pi, size=size)
    res = minimize(objective, x0, method="Nelder-Mead", options={"maxfev": 40_000, "xatol": 1e-10, "fatol": 1e-13, "adaptive": True})
    polish = minimize(objective, res.x, method="BFGS", options={"gtol": 1e-10})
    best = polish if polish.fun < res.fun else res
    return -float(best.fun), np.asarray(best.x)


def optimize_violation(
    ineq: WeightedInequality,
    scenario: HybridScenario,
    seed: int = 0,
    restarts: int | None = None,
    workers: int | None = None,
) -> OptimizationResult:
    """Restarted local ascent over measurement angles; for fixed measurements the best state
    is the top eigenvector of the Bell operator Σ_v w_v ⊗_p Π_p, so it is solved exactly.
    """
    restarts = settings.OPTIMIZER_RESTARTS if restarts is None else restarts
    workers = settings.WORKERS if workers is None else workers
    if any(p.num_outcomes != 2 for p in scenario.parties):
        raise ScenarioError("optimize_violation needs dichotomic (qubit) parties")
    if ineq.graph.labels is None:
        raise MissingEventError("inequality graph carries no events to optimize")

    offsets, total = [], 0
    for p in scenario.parties:
        offsets.append(total)
        total += p.num_settings
    terms_settings = np.array([e.settings for e in ineq.graph.labels])
    terms_outcomes = np.array([e.outcomes for e in ineq.graph.labels])
    weights = np.array([float(w) for w in ineq.weights])

    seeds = np.random.SeedSequence(seed).spawn(restarts)
    jobs = [(s, offsets, weights, terms_settings, terms_outcomes, 2 * total) for s in seeds]
    logger.info(f"⚙️ Optimizing {ineq.name or 'inequality'} over {restarts} restarts (seed {seed})")
    if workers > 1:
        with ProcessPoolExecutor(max_workers=workers) as pool:
            outcomes = list(pool.map(_run_restart, jobs))
    else:
        outcomes = [_run_restart(job) for job in jobs]

    # Highest value wins; earlier restart wins ties.
    index = max(range(len(outcomes)), key=lambda i: (outcomes[i][0], -i))
    value, angles = outcomes[index]
    _, vectors = np.linalg.eigh(_bell_operator(angles, offsets, weights, terms_settings, terms_outcomes))
    state = PureState(vectors[:, -1], normalize=True)
    measurements = tuple(
        QubitMeasurement([(angles[2 * (offsets[p] + s)], angles[2 * (offsets[p] + s) + 1]) for s in range(party.num_settings)])
        for p, party in enumerate(scenario.parties)
    )
    value = evaluate_inequality(strategy_to_behavior(state, measurements), ineq)
    logger.info(f"✅ Best value {value:.6f} from restart {index}")
    return OptimizationResult(value, state, measurements, index)
