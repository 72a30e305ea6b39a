import networkx as nx
import pytest

from app.hybrid.errors import CapExceededError, GraphError, UndecidedError
from app.hybrid.graph import (
    EdgeTag,
    ExclusivityGraph,
    build_graph,
    find_induced_embedding,
    find_odd_holes_and_antiholes,
    generate,
    induced_subgraph,
    is_perfect,
    match_circulant,
)
from app.hybrid.scenario import HybridScenario


def test_h1_graph_is_the_seven_antihole(h1):
    ineq, _ = h1
    G = ineq.graph
    assert G.n == 7
    assert G.num_edges == 14
    assert all(G.degree(v) == 4 for v in range(G.n))
    assert nx.is_isomorphic(G.to_networkx(), nx.complement(nx.cycle_graph(7)))
    assert G.has_a_edges
    assert G.side_edges("B")


def test_build_graph_tags_follow_sides():
    scenario = HybridScenario.broadcasting(3, 2, 2)
    events = [scenario.parse_event(t) for t in ("100|000", "101|000", "010|001", "000|100")]
    G = build_graph(scenario, events)
    assert G.tag(0, 1) == EdgeTag.B_ONLY
    assert G.tag(0, 2) == EdgeTag.BOTH
    assert G.tag(0, 3) is None


def test_build_graph_rejects_duplicates():
    scenario = HybridScenario.bell()
    e = scenario.event((0, 1), (1, 0))
    with pytest.raises(GraphError):
        build_graph(scenario, [e, e])


def test_full_bell_graph_size():
    G = build_graph(HybridScenario.bell())
    assert G.n == 16


def test_side_graphs_split_edges():
    G = ExclusivityGraph(4, {(0, 1): EdgeTag.A_ONLY, (1, 2): EdgeTag.B_ONLY, (2, 3): EdgeTag.BOTH})
    assert G.side_graph("A").edges == [(0, 1), (2, 3)]
    assert G.side_graph("B").edges == [(1, 2), (2, 3)]


def test_induced_subgraph_relabels_in_order():
    G = generate("cycle", n=6)
    H = induced_subgraph(G, [4, 0, 5])
    assert H.n == 3
    assert H.edges == [(0, 2), (1, 2)]
    with pytest.raises(GraphError):
        induced_subgraph(G, [])


def test_self_loops_rejected():
    with pytest.raises(GraphError):
        ExclusivityGraph(3, {(1, 1): EdgeTag.A_ONLY})


def test_generate_kinds():
    assert generate("mobius_ladder", q=4).num_edges == 12
    assert generate("complete", n=5).num_edges == 10
    assert generate("edgeless", n=5).num_edges == 0
    assert generate("circulant", n=7, offsets=(1, 2)).num_edges == 14
    with pytest.raises(GraphError):
        generate("circulant", n=7, offsets=(4,))
    with pytest.raises(GraphError):
        generate("petersen", n=10)


def test_odd_holes_of_c5():
    found = find_odd_holes_and_antiholes(generate("cycle", n=5), 5)
    assert [c.kind for c in found] == ["hole", "antihole"]
    assert found[0].vertices == (0, 1, 2, 3, 4)


def test_bipartite_graph_has_no_odd_holes():
    assert find_odd_holes_and_antiholes(generate("cycle", n=8), 8) == []


def test_perfectness():
    assert is_perfect(generate("cycle", n=8))
    assert not is_perfect(generate("cycle", n=7))
    assert not is_perfect(generate("cycle", n=7).complement())
    assert is_perfect(generate("complete", n=6))
    with pytest.raises(UndecidedError):
        is_perfect(generate("cycle", n=9), cap=8)


def test_induced_embedding():
    c5 = generate("cycle", n=5)
    # C5 is self-complementary.
    assert find_induced_embedding(c5, c5.complement()) is not None
    assert find_induced_embedding(generate("cycle", n=4), c5) is None
    emb = find_induced_embedding(generate("cycle", n=6), generate("cycle", n=6).complement().complement())
    assert sorted(emb) == list(range(6))


def test_induced_embedding_budget():
    with pytest.raises(CapExceededError):
        find_induced_embedding(generate("complete", n=5), generate("cycle", n=12), budget=3)


def test_match_circulant():
    G = generate("circulant", n=7, offsets=(1, 2))
    order = match_circulant(G, (1, 2))
    assert order is not None
    for i in range(7):
        assert G.has_edge(order[i], order[(i + 1) % 7])
        assert G.has_edge(order[i], order[(i + 2) % 7])
    assert match_circulant(generate("cycle", n=7), (1, 2)) is None


def test_dot_colors_by_tag():
    G = ExclusivityGraph(3, {(0, 1): EdgeTag.A_ONLY, (1, 2): EdgeTag.B_ONLY, (0, 2): EdgeTag.BOTH})
    dot = G.to_dot()
    assert "0 -- 1 [color=red]" in dot
    assert "1 -- 2 [color=blue]" in dot
    assert "0 -- 2 [color=green]" in dot
