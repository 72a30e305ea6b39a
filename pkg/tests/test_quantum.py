from itertools import product

import numpy as np
import pytest

from app.hybrid.errors import MissingEventError, ScenarioError, StrategyError
from app.hybrid.fixtures import general_strategy, ghz_strategy, named_inequality
from app.hybrid.io import dump_strategy, load_strategy
from app.hybrid.quantum import (
    Behavior,
    PureState,
    QubitMeasurement,
    check_no_signaling,
    deterministic_behavior,
    evaluate_inequality,
    optimize_violation,
    pr_box_behavior,
    strategy_to_behavior,
)
from app.hybrid.scenario import HybridScenario

Z_BASIS = [(0.0, 0.0)]


def test_ghz_in_computational_basis():
    b = strategy_to_behavior(PureState.ghz(3), [QubitMeasurement(Z_BASIS)] * 3)
    assert b.probability((0, 0, 0), (0, 0, 0)) == pytest.approx(0.5)
    assert b.probability((1, 1, 1), (0, 0, 0)) == pytest.approx(0.5)
    assert b.probability((0, 1, 0), (0, 0, 0)) == pytest.approx(0.0)


def test_party_one_is_most_significant():
    b = strategy_to_behavior(PureState.basis([1, 0]), [QubitMeasurement(Z_BASIS)] * 2)
    assert b.probability((1, 0), (0, 0)) == pytest.approx(1.0)


def test_projectors_are_complete():
    m = QubitMeasurement([(0.3, 1.1)])
    total = m.projector(0, 0) + m.projector(0, 1)
    assert np.allclose(total, np.eye(2))
    assert np.allclose(m.projector(0, 0) @ m.projector(0, 1), 0)


def test_ghz_strategy_value(h1):
    ineq, _ = h1
    state, measurements = ghz_strategy()
    assert evaluate_inequality(strategy_to_behavior(state, measurements), ineq) == pytest.approx(2.042, abs=5e-3)


def test_general_strategy_value(h1):
    ineq, _ = h1
    state, measurements = general_strategy()
    assert evaluate_inequality(strategy_to_behavior(state, measurements), ineq) == pytest.approx(2.069, abs=5e-3)


def test_strategy_file_matches_ghz_builtin(data_dir):
    state, measurements = load_strategy(data_dir / "strategies" / "ghz.json")
    ref_state, ref_measurements = ghz_strategy()
    assert np.allclose(state.amplitudes, ref_state.amplitudes, atol=1e-9)
    for m, ref in zip(measurements, ref_measurements):
        assert np.allclose(m.angles, ref.angles, atol=1e-9)


def test_general_strategy_is_stable_and_saves(h1, tmp_path):
    ineq, _ = h1
    assert general_strategy() is general_strategy()
    path = tmp_path / "general.json"
    path.write_text(dump_strategy(*general_strategy(), name="general"))
    state, measurements = load_strategy(path)
    assert evaluate_inequality(strategy_to_behavior(state, measurements), ineq) > 2.06


def test_global_phase_does_not_change_behavior():
    state, measurements = general_strategy()
    rotated = PureState(state.amplitudes * np.exp(0.7j))
    a = strategy_to_behavior(state, measurements).table
    b = strategy_to_behavior(rotated, measurements).table
    assert np.allclose(a, b)


def test_deterministic_strategies_respect_local_bound(h1):
    ineq, _ = h1
    values = []
    for a, b1, b2 in product(product(range(2), repeat=3), product(range(2), repeat=2), product(range(2), repeat=2)):
        values.append(evaluate_inequality(deterministic_behavior([a, b1, b2]), ineq))
    assert len(values) == 128
    assert max(values) == pytest.approx(2.0)


def test_no_signaling_checks():
    state, measurements = ghz_strategy()
    quantum = strategy_to_behavior(state, measurements)
    assert check_no_signaling(quantum)
    assert check_no_signaling(quantum, partition=[[0], [1, 2]])
    assert check_no_signaling(pr_box_behavior())
    # B copies A's setting: signaling.
    table = np.zeros((2, 2, 2, 2))
    for x, y in product(range(2), repeat=2):
        table[x, y, 0, x] = 1.0
    assert not check_no_signaling(Behavior(table, (2, 2), (2, 2)))
    with pytest.raises(ScenarioError):
        check_no_signaling(pr_box_behavior(), partition=[[0]])


def test_strategy_errors():
    with pytest.raises(StrategyError):
        PureState([1.0, 0.0, 0.0])
    with pytest.raises(StrategyError):
        PureState([1.0, 1.0])
    with pytest.raises(StrategyError):
        PureState([0.0, 0.0], normalize=True)
    with pytest.raises(StrategyError):
        QubitMeasurement([])
    with pytest.raises(StrategyError):
        strategy_to_behavior(PureState.ghz(3), [QubitMeasurement(Z_BASIS)] * 2)
    with pytest.raises(MissingEventError):
        pr_box_behavior().probability((0, 0), (2, 0))


def test_optimizer_rejects_abstract_or_non_qubit_inputs(h1):
    ineq, _ = h1
    with pytest.raises(ScenarioError):
        optimize_violation(ineq, HybridScenario.broadcasting(3, 2, 2, outcomes=3), restarts=1)
    abstract, _ = named_inequality("cycle:5")
    with pytest.raises(MissingEventError):
        optimize_violation(abstract, HybridScenario.broadcasting(3, 2, 2), restarts=1)


def test_optimizer_is_deterministic_for_a_seed(h1):
    ineq, scenario = h1
    first = optimize_violation(ineq, scenario, seed=3, restarts=2, workers=1)
    second = optimize_violation(ineq, scenario, seed=3, restarts=2, workers=1)
    assert first.value == second.value
    assert first.seed == second.seed
    assert first.value >= 2.0 - 1e-9
    assert first.state.norm_residual < 1e-9


@pytest.mark.slow
def test_optimizer_reaches_best_known_h1_value(h1):
    ineq, scenario = h1
    result = optimize_violation(ineq, scenario, seed=0, restarts=20, workers=1)
    assert result.value >= 2.0687


@pytest.mark.slow
def test_mobius8_quantum_value_stays_below_alpha_hat():
    ineq, scenario = named_inequality("mobius:4")
    result = optimize_violation(ineq, scenario, seed=0, restarts=8, workers=1)
    assert result.value <= 3 + 1e-6
