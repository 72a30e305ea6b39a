from fractions import Fraction

import networkx as nx
import pytest
from pydantic import ValidationError

from app.hybrid.errors import ScenarioError
from app.hybrid.invariants import alpha, alpha_hat, alpha_star
from app.hybrid.scenario import HybridScenario
from app.hybrid.search import (
    SearchConfig,
    canonical_hash,
    construct_double_bell_circulant,
    construct_mobius,
    default_mobius_scenario,
    scan_for_genuine,
    side_bell_graph,
)
from app.hybrid.solvers import lovasz_theta


def test_side_bell_graph_of_a_single_party():
    G, local = side_bell_graph(HybridScenario.bell(), "A")
    assert len(local) == 4
    # Two settings, each a clique of two outcomes.
    assert G.num_edges == 2


def test_mobius8_structure():
    ineq = construct_mobius(4)
    G = ineq.graph
    assert ineq.name == "mobius_8"
    assert G.n == 8
    assert G.num_edges == 12
    assert sorted(G.side_edges("A")) == [(0, 4), (1, 5), (2, 6), (3, 7)]
    assert nx.is_bipartite(G.side_graph("B").to_networkx())
    assert nx.is_isomorphic(G.to_networkx(), nx.circulant_graph(8, [1, 4]))


def test_mobius_needs_enough_settings():
    with pytest.raises(ScenarioError):
        construct_mobius(4, HybridScenario.broadcasting(4, 2, 2))
    with pytest.raises(ScenarioError):
        construct_mobius(4, HybridScenario.broadcasting(3, 3, 3))
    with pytest.raises(ScenarioError):
        construct_mobius(1)


def test_default_mobius_scenario():
    assert default_mobius_scenario(4) == HybridScenario.broadcasting(4, 3, 3)
    assert default_mobius_scenario(6).settings_shape == (6, 4, 4)


def test_mobius8_bounds():
    G = construct_mobius(4).graph
    assert alpha(G).value == 3
    assert alpha_hat(G).value == 3
    assert lovasz_theta(G).dual_value == pytest.approx(2 + 2**0.5, abs=1e-3)


def test_double_bell7_structure():
    G = construct_double_bell_circulant(7).graph
    assert nx.is_isomorphic(G.side_graph("A").to_networkx(), nx.cycle_graph(7))
    assert nx.is_isomorphic(G.side_graph("B").to_networkx(), nx.cycle_graph(7))
    assert alpha(G).value == alpha_hat(G).value == 2
    assert alpha_star(G).value > 2


def test_double_bell8_inner_edges_split():
    G = construct_double_bell_circulant(8).graph
    inner = G.side_graph("B").to_networkx()
    assert sorted(len(c) for c in nx.connected_components(inner)) == [4, 4]
    assert alpha(G).value == 2


def test_double_bell_minimum_size():
    with pytest.raises(ScenarioError):
        construct_double_bell_circulant(6)


def test_search_config_validation():
    scenario = HybridScenario.broadcasting(3, 3, 3)
    config = SearchConfig(scenario=scenario, weight_palette=("2", "1", "2"))
    assert config.weight_palette == (Fraction(1), Fraction(2))
    with pytest.raises(ValidationError):
        SearchConfig(scenario=scenario, max_subgraph_size=4)
    with pytest.raises(ValidationError):
        SearchConfig(scenario=scenario, weight_palette=())
    with pytest.raises(ValidationError):
        SearchConfig(scenario=scenario, weight_palette=("0",))


def test_canonical_hash_depends_on_weights():
    events = ["100|000", "101|000"]
    assert canonical_hash(events, [1, 1]) == canonical_hash(events, [Fraction(1), Fraction(1)])
    assert canonical_hash(events, [1, 1]) != canonical_hash(events, [1, 2])
    assert len(canonical_hash(events, [1, 1])) == 16


def test_scan_without_b_side_holes_is_empty():
    config = SearchConfig(scenario=HybridScenario.broadcasting(2, 1, 1), seed=1, time_budget=30, workers=1)
    outcome = scan_for_genuine(config)
    assert outcome.results == []
    assert outcome.examined == 0
    assert not outcome.exhausted


def test_scan_is_deterministic_and_ranked():
    config = SearchConfig(
        scenario=HybridScenario.broadcasting(3, 3, 3), max_subgraph_size=7, seed=5,
        max_candidates=15, time_budget=600, workers=1,
    )
    first = scan_for_genuine(config)
    second = scan_for_genuine(config)
    assert [r.hash for r in first.results] == [r.hash for r in second.results]
    assert first.examined == 15
    assert len(first.results) <= first.prefiltered <= first.examined
    keys = [(r.alpha_gap, r.theta_gap) for r in first.results]
    assert keys == sorted(keys, reverse=True)
    for r in first.results:
        assert r.report.alpha <= r.report.alpha_hat
        assert len(r.events) == len(r.weights) <= 7
    assert first.genuine_count == sum(r.alpha_gap > 0 for r in first.results)


def test_scan_with_size_above_event_count_terminates():
    scenario = HybridScenario.broadcasting(1, 3, 3)
    config = SearchConfig(scenario=scenario, max_subgraph_size=500, seed=2, max_candidates=6, time_budget=300, workers=1)
    outcome = scan_for_genuine(config)
    assert outcome.examined == 6
    assert not outcome.exhausted
    for r in outcome.results:
        assert len(set(r.events)) == len(r.events) <= scenario.num_events


def test_default_scan_runs_until_the_budget():
    config = SearchConfig(scenario=HybridScenario.broadcasting(3, 3, 3), max_subgraph_size=7, seed=5, time_budget=3, workers=1)
    assert config.max_candidates is None
    outcome = scan_for_genuine(config)
    assert outcome.exhausted
    assert outcome.examined > 0


def test_parallel_scan_matches_serial():
    base = dict(scenario=HybridScenario.broadcasting(3, 3, 3), max_subgraph_size=7, seed=5, max_candidates=15, time_budget=600)
    serial = scan_for_genuine(SearchConfig(**base, workers=1))
    parallel = scan_for_genuine(SearchConfig(**base, workers=2))
    assert [r.hash for r in parallel.results] == [r.hash for r in serial.results]
    assert not parallel.exhausted


def test_parallel_scan_stops_at_the_budget():
    config = SearchConfig(scenario=HybridScenario.broadcasting(3, 3, 3), seed=1, time_budget=2, workers=2)
    outcome = scan_for_genuine(config)
    assert outcome.exhausted
    assert len(outcome.results) <= outcome.prefiltered


@pytest.mark.slow
def test_default_scan_finds_a_genuine_candidate():
    config = SearchConfig(
        scenario=HybridScenario.broadcasting(3, 3, 3), weight_palette=("1", "2"), seed=0,
        max_candidates=3000, time_budget=1800, workers=1,
    )
    outcome = scan_for_genuine(config)
    assert outcome.genuine_count >= 1
    best = outcome.results[0]
    assert best.report.alpha < best.report.alpha_hat


@pytest.mark.slow
def test_mobius12_theta_gap():
    G = construct_mobius(6).graph
    gap = lovasz_theta(G).dual_value - float(alpha(G).value)
    assert gap == pytest.approx(3 * (3**0.5 / 2) - 2, abs=1e-3)
